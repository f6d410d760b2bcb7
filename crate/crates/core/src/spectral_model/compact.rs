use nalgebra::DMatrix;

use super::vector::FiniteVector;
use crate::error::{ConleyError, Result};
use crate::linalg;
use crate::scalar::Real;

/// One rule for a diagonal sequence `κ_i → 0` (0-based `i`).
#[derive(Clone, Debug, PartialEq)]
pub enum DiagonalTerm<T: Real> {
    /// `κ_i = first · ratio^i`, `|ratio| < 1`.
    Geometric { first: T, ratio: T },
    /// `κ_i = scale / (i + 1)^exponent`, `exponent > 0`.
    Power { scale: T, exponent: T },
    /// Listed values, zero afterwards.
    Explicit(Vec<T>),
}

impl<T: Real> DiagonalTerm<T> {
    pub fn value(&self, i: usize) -> T {
        match self {
            Self::Geometric { first, ratio } => *first * ratio.powi(i as i32),
            Self::Power { scale, exponent } => *scale / (T::of_usize(i) + T::one()).powf(*exponent),
            Self::Explicit(v) => v.get(i).copied().unwrap_or_else(T::zero),
        }
    }

    /// `sup_{i ≥ from} |κ_i|`.
    pub fn sup_from(&self, from: usize) -> T {
        match self {
            Self::Geometric { first, ratio } => first.abs() * ratio.abs().powi(from as i32),
            Self::Power { scale, exponent } => scale.abs() / (T::of_usize(from) + T::one()).powf(*exponent),
            Self::Explicit(v) => v.iter().skip(from).fold(T::zero(), |m, x| m.max(x.abs())),
        }
    }

    /// Upper bound on `(Σ_{i ≥ from} κ_i²)^{1/2}`; infinite when the sequence
    /// is not square summable.
    pub fn l2_from(&self, from: usize) -> T {
        match self {
            Self::Geometric { first, ratio } => {
                first.abs() * ratio.abs().powi(from as i32) / (T::one() - *ratio * *ratio).sqrt()
            }
            Self::Power { scale, exponent } => {
                let two_p = T::of(2.0) * *exponent;
                if two_p <= T::one() {
                    return T::infinity();
                }
                let base = T::of_usize(from) + T::one();
                let sum = base.powf(-two_p) + base.powf(T::one() - two_p) / (two_p - T::one());
                scale.abs() * sum.sqrt()
            }
            Self::Explicit(v) => v.iter().skip(from).map(|&x| x * x).sum::<T>().sqrt(),
        }
    }

    fn negated(&self) -> Self {
        match self {
            Self::Geometric { first, ratio } => Self::Geometric { first: -*first, ratio: *ratio },
            Self::Power { scale, exponent } => Self::Power { scale: -*scale, exponent: *exponent },
            Self::Explicit(v) => Self::Explicit(v.iter().map(|&x| -x).collect()),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Self::Geometric { first, ratio } => first.is_finite() && ratio.abs() < T::one(),
            Self::Power { scale, exponent } => scale.is_finite() && *exponent > T::zero(),
            Self::Explicit(v) => v.iter().all(|x| x.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(ConleyError::Structural(format!("diagonal rule {self:?} does not decay to zero")))
        }
    }

    /// Length of the explicitly listed prefix (0 for closed-form rules).
    fn explicit_len(&self) -> usize {
        match self {
            Self::Explicit(v) => v.len(),
            _ => 0,
        }
    }
}

/// Diagonal compact operator `diag(κ_0, κ_1, …)` given as a sum of rules.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiagonalCompact<T: Real> {
    pub terms: Vec<DiagonalTerm<T>>,
}

impl<T: Real> DiagonalCompact<T> {
    pub fn none() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn new(terms: Vec<DiagonalTerm<T>>) -> Result<Self> {
        for t in &terms {
            t.validate()?;
        }
        Ok(Self { terms })
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn value(&self, i: usize) -> T {
        self.terms.iter().map(|t| t.value(i)).sum()
    }

    /// Upper bound on `sup_{i ≥ from} |κ_i|`.
    pub fn sup_from(&self, from: usize) -> T {
        self.terms.iter().map(|t| t.sup_from(from)).sum()
    }

    pub fn l2_from(&self, from: usize) -> T {
        self.terms.iter().map(|t| t.l2_from(from)).sum()
    }

    /// Index after which every term is in closed form and non-increasing.
    pub fn explicit_len(&self) -> usize {
        self.terms.iter().map(|t| t.explicit_len()).max().unwrap_or(0)
    }

    /// Upper bound on `sup_{i ∉ excluded, i ≥ from} |κ_i|`.
    pub fn sup_outside(&self, excluded: &[usize], from: usize) -> T {
        if self.is_empty() {
            return T::zero();
        }
        let horizon = excluded.iter().copied().max().map_or(0, |m| m + 1).max(self.explicit_len()).max(from);
        let mut best = self.sup_from(horizon);
        for i in from..horizon {
            if !excluded.contains(&i) {
                best = best.max(self.value(i).abs());
            }
        }
        best
    }

    /// Upper bound on `(Σ_{i ∉ excluded} κ_i²)^{1/2}`.
    pub fn l2_outside(&self, excluded: &[usize]) -> T {
        if self.is_empty() {
            return T::zero();
        }
        let horizon = excluded.iter().copied().max().map_or(0, |m| m + 1).max(self.explicit_len());
        let head: T = (0..horizon)
            .filter(|i| !excluded.contains(i))
            .map(|i| {
                let v = self.value(i);
                v * v
            })
            .sum();
        head.sqrt() + self.l2_from(horizon)
    }

    pub fn negated(&self) -> Self {
        Self { terms: self.terms.iter().map(DiagonalTerm::negated).collect() }
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { terms }
    }
}

/// Symmetric compact linear operator: a finite symmetric block acting on
/// coordinates `0..k` plus a decaying diagonal on all coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct CompactLinear<T: Real> {
    core: DMatrix<T>,
    diagonal: DiagonalCompact<T>,
}

impl<T: Real> Default for CompactLinear<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Real> CompactLinear<T> {
    pub fn zero() -> Self {
        Self { core: DMatrix::zeros(0, 0), diagonal: DiagonalCompact::none() }
    }

    pub fn new(core: DMatrix<T>, diagonal: DiagonalCompact<T>, tolerance: T) -> Result<Self> {
        if core.nrows() != core.ncols() {
            return Err(ConleyError::Structural(format!(
                "compact core block must be square, got {}x{}",
                core.nrows(),
                core.ncols()
            )));
        }
        let defect = linalg::symmetry_defect(&core);
        if defect > tolerance {
            return Err(ConleyError::Structural(format!("compact operator is not symmetric (defect {defect})")));
        }
        if core.iter().any(|x| !x.is_finite()) {
            return Err(ConleyError::Structural("compact core block has non-finite entries".into()));
        }
        for t in &diagonal.terms {
            t.validate()?;
        }
        Ok(Self { core, diagonal })
    }

    pub fn from_core(core: DMatrix<T>, tolerance: T) -> Result<Self> {
        Self::new(core, DiagonalCompact::none(), tolerance)
    }

    pub fn from_diagonal(diagonal: DiagonalCompact<T>) -> Self {
        Self { core: DMatrix::zeros(0, 0), diagonal }
    }

    pub fn core(&self) -> &DMatrix<T> {
        &self.core
    }

    pub fn diagonal(&self) -> &DiagonalCompact<T> {
        &self.diagonal
    }

    pub fn core_dim(&self) -> usize {
        self.core.nrows()
    }

    pub fn is_zero(&self) -> bool {
        self.diagonal.is_empty() && self.core.iter().all(|x| *x == T::zero())
    }

    pub fn entry(&self, i: usize, j: usize) -> T {
        let k = self.core_dim();
        let mut v = if i < k && j < k { self.core[(i, j)] } else { T::zero() };
        if i == j {
            v += self.diagonal.value(i);
        }
        v
    }

    pub fn apply(&self, x: &FiniteVector<T>) -> FiniteVector<T> {
        let k = self.core_dim();
        let mut y = FiniteVector::zero();
        for (j, xj) in x.iter() {
            if j < k {
                for i in 0..k {
                    let a = self.core[(i, j)];
                    if a != T::zero() {
                        y.add_at(i, a * xj);
                    }
                }
            }
            if !self.diagonal.is_empty() {
                y.add_at(j, self.diagonal.value(j) * xj);
            }
        }
        y
    }

    /// Principal submatrix on `coords`.
    pub fn block(&self, coords: &[usize]) -> DMatrix<T> {
        DMatrix::from_fn(coords.len(), coords.len(), |r, c| self.entry(coords[r], coords[c]))
    }

    /// `‖K‖`: the core block (with its diagonal) and the diagonal tail are
    /// orthogonal summands.
    pub fn norm(&self) -> T {
        let k = self.core_dim();
        let coords: Vec<usize> = (0..k).collect();
        let head = linalg::operator_norm(&self.block(&coords));
        head.max(self.diagonal.sup_from(k))
    }

    pub fn negated(&self) -> Self {
        Self { core: -self.core.clone(), diagonal: self.diagonal.negated() }
    }

    pub fn plus(&self, other: &Self) -> Self {
        let k = self.core_dim().max(other.core_dim());
        let mut core = DMatrix::zeros(k, k);
        for i in 0..self.core_dim() {
            for j in 0..self.core_dim() {
                core[(i, j)] += self.core[(i, j)];
            }
        }
        for i in 0..other.core_dim() {
            for j in 0..other.core_dim() {
                core[(i, j)] += other.core[(i, j)];
            }
        }
        Self { core, diagonal: self.diagonal.plus(&other.diagonal) }
    }
}
