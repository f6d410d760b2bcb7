use nalgebra::DMatrix;

use super::compact::{CompactLinear, DiagonalCompact};
use super::frame::Frame;
use super::vector::FiniteVector;
use crate::error::{ConleyError, Result};
use crate::linalg;
use crate::scalar::Real;

/// Eigenvalues assigned to the coordinates past the core block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tail<T: Real> {
    /// 0-based index `i ≥ core_dim`: even `i` gets `positive`, odd `i` gets
    /// `negative`.
    Alternating { positive: T, negative: T },
    /// Single-signed tail.
    Constant(T),
}

impl<T: Real> Tail<T> {
    pub fn value(&self, i: usize) -> T {
        match *self {
            Self::Alternating { positive, negative } => {
                if i.is_multiple_of(2) {
                    positive
                } else {
                    negative
                }
            }
            Self::Constant(v) => v,
        }
    }

    fn magnitudes(&self) -> (T, T) {
        match *self {
            Self::Alternating { positive, negative } => {
                (positive.abs().min(negative.abs()), positive.abs().max(negative.abs()))
            }
            Self::Constant(v) => (v.abs(), v.abs()),
        }
    }
}

/// Bounded self-adjoint Fredholm operator on ℓ²: a symmetric core block on
/// coordinates `0..m`, a two-valued diagonal tail, and an optional decaying
/// diagonal correction on every coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralOperator<T: Real> {
    core_diagonal: Vec<T>,
    core_perturbation: DMatrix<T>,
    tail: Tail<T>,
    correction: DiagonalCompact<T>,
    spectral_gap: T,
    tolerance: T,
}

impl<T: Real> SpectralOperator<T> {
    pub fn new(
        core_diagonal: Vec<T>,
        core_perturbation: Option<DMatrix<T>>,
        tail: Tail<T>,
        spectral_gap: T,
        tolerance: T,
    ) -> Result<Self> {
        let m = core_diagonal.len();
        let core_perturbation = core_perturbation.unwrap_or_else(|| DMatrix::zeros(m, m));
        let op = Self {
            core_diagonal,
            core_perturbation,
            tail,
            correction: DiagonalCompact::none(),
            spectral_gap,
            tolerance,
        };
        let problems = op.violations();
        if problems.is_empty() {
            Ok(op)
        } else {
            Err(ConleyError::Structural(problems.join("; ")))
        }
    }

    /// Diagonal operator with the given core eigenvalues.
    pub fn diagonal(core: &[T], tail: Tail<T>, spectral_gap: T) -> Result<Self> {
        Self::new(core.to_vec(), None, tail, spectral_gap, T::structural_tolerance())
    }

    /// Every violated invariant, as human-readable messages.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let m = self.core_diagonal.len();
        if m == 0 {
            out.push("core_dim must be positive".to_string());
        }
        if self.core_perturbation.nrows() != m || self.core_perturbation.ncols() != m {
            out.push(format!(
                "core_perturbation must be {m}x{m}, got {}x{}",
                self.core_perturbation.nrows(),
                self.core_perturbation.ncols()
            ));
            return out;
        }
        if self.core_diagonal.iter().chain(self.core_perturbation.iter()).any(|x| !x.is_finite()) {
            out.push("operator entries must be finite (boundedness)".to_string());
        }
        let defect = linalg::symmetry_defect(&self.core_perturbation);
        if defect > self.tolerance {
            out.push(format!(
                "core_perturbation not symmetric: defect {defect} exceeds {} (self-adjointness)",
                self.tolerance
            ));
        }
        if !(self.spectral_gap > T::zero()) {
            out.push(format!("spectral_gap must be positive, got {}", self.spectral_gap));
        }
        match self.tail {
            Tail::Alternating { positive, negative } => {
                if !(positive > T::zero()) {
                    out.push(format!("tail positive value must be > 0, got {positive}"));
                }
                if !(negative < T::zero()) {
                    out.push(format!("tail negative value must be < 0, got {negative}"));
                }
            }
            Tail::Constant(v) => {
                if v == T::zero() || !v.is_finite() {
                    out.push(format!("constant tail must be finite and nonzero, got {v}"));
                }
            }
        }
        if !out.is_empty() {
            return out;
        }
        let kernel_cut = self.kernel_threshold();
        for &lambda in &self.core_eigenvalues() {
            let a = lambda.abs();
            if a > kernel_cut && a < self.spectral_gap * (T::one() - T::of(1e-9)) {
                out.push(format!(
                    "core eigenvalue {lambda} lies inside the spectral gap (-{g}, {g}) (Fredholm gap)",
                    g = self.spectral_gap
                ));
            }
        }
        if self.tail_infimum() < self.spectral_gap * (T::one() - T::of(1e-9)) {
            out.push(format!(
                "tail eigenvalues come closer than spectral_gap {} to zero (Fredholm gap)",
                self.spectral_gap
            ));
        }
        out
    }

    fn kernel_threshold(&self) -> T {
        self.tolerance.sqrt().min(self.spectral_gap * T::of(0.5))
    }

    /// `inf_{i ≥ m} |λ_i|` (lower bound when a correction is present).
    fn tail_infimum(&self) -> T {
        let m = self.core_dim();
        let (lo, _) = self.tail.magnitudes();
        if self.correction.is_empty() {
            return lo;
        }
        let horizon = m + 64 + self.correction.explicit_len();
        let mut best = lo - self.correction.sup_from(horizon);
        for i in m..horizon {
            best = best.min(self.diagonal_entry(i).abs());
        }
        best
    }

    pub fn core_dim(&self) -> usize {
        self.core_diagonal.len()
    }

    pub fn core_diagonal(&self) -> &[T] {
        &self.core_diagonal
    }

    pub fn core_perturbation(&self) -> &DMatrix<T> {
        &self.core_perturbation
    }

    pub fn tail(&self) -> Tail<T> {
        self.tail
    }

    pub fn correction(&self) -> &DiagonalCompact<T> {
        &self.correction
    }

    pub fn spectral_gap(&self) -> T {
        self.spectral_gap
    }

    pub fn tolerance(&self) -> T {
        self.tolerance
    }

    /// Diagonal entry `L_ii`.
    pub fn diagonal_entry(&self, i: usize) -> T {
        let m = self.core_dim();
        let base = if i < m { self.core_diagonal[i] + self.core_perturbation[(i, i)] } else { self.tail.value(i) };
        base + self.correction.value(i)
    }

    pub fn entry(&self, i: usize, j: usize) -> T {
        if i == j {
            return self.diagonal_entry(i);
        }
        let m = self.core_dim();
        if i < m && j < m {
            self.core_perturbation[(i, j)]
        } else {
            T::zero()
        }
    }

    /// `Lx`; the result is supported on `support(x)`, plus the core block
    /// when `x` touches it.
    pub fn apply(&self, x: &FiniteVector<T>) -> FiniteVector<T> {
        let m = self.core_dim();
        let mut y = FiniteVector::zero();
        for (j, xj) in x.iter() {
            y.add_at(j, self.diagonal_entry(j) * xj);
            if j < m {
                for i in 0..m {
                    if i != j {
                        let a = self.core_perturbation[(i, j)];
                        if a != T::zero() {
                            y.add_at(i, a * xj);
                        }
                    }
                }
            }
        }
        y
    }

    /// Principal submatrix on `coords`.
    pub fn block(&self, coords: &[usize]) -> DMatrix<T> {
        DMatrix::from_fn(coords.len(), coords.len(), |r, c| self.entry(coords[r], coords[c]))
    }

    /// Smallest sorted coordinate set containing `coords` that `L` maps into
    /// itself.
    pub fn invariant_closure(&self, coords: &[usize]) -> Vec<usize> {
        let m = self.core_dim();
        let mut out: Vec<usize> = coords.to_vec();
        if coords.iter().any(|&i| i < m) && self.core_perturbation.iter().any(|x| *x != T::zero()) {
            out.extend(0..m);
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Matrix of the full core block (diagonal, perturbation, correction).
    pub fn core_matrix(&self) -> DMatrix<T> {
        let coords: Vec<usize> = (0..self.core_dim()).collect();
        self.block(&coords)
    }

    pub fn core_eigenvalues(&self) -> Vec<T> {
        linalg::sym_eigen(&self.core_matrix()).values
    }

    /// `‖L‖ = sup |spectrum|`.
    pub fn norm(&self) -> T {
        let core = self.core_eigenvalues().into_iter().fold(T::zero(), |m, x| m.max(x.abs()));
        let (_, hi) = self.tail.magnitudes();
        core.max(hi + self.correction.sup_from(self.core_dim()))
    }

    /// Orthonormal basis of `ker L`; may be empty.
    pub fn kernel_frame(&self) -> Frame<T> {
        let eig = linalg::sym_eigen(&self.core_matrix());
        let cut = self.kernel_threshold();
        let cols: Vec<usize> = (0..eig.values.len()).filter(|&k| eig.values[k].abs() <= cut).collect();
        if cols.is_empty() {
            return Frame::empty();
        }
        let m = self.core_dim();
        let columns = DMatrix::from_fn(m, cols.len(), |r, c| eig.vectors[(r, cols[c])]);
        Frame::new((0..m).collect(), columns, self.tolerance.max(T::structural_tolerance()))
            .expect("eigenvectors of a symmetric matrix are orthonormal")
    }

    /// `L + K` as a spectral operator, growing the core block if `K` acts on
    /// coordinates beyond it.
    pub fn plus_compact(&self, k: &CompactLinear<T>) -> Result<Self> {
        let m_old = self.core_dim();
        let m = m_old.max(k.core_dim());
        let mut core_diagonal = Vec::with_capacity(m);
        for i in 0..m {
            if i < m_old {
                core_diagonal.push(self.core_diagonal[i]);
            } else {
                core_diagonal.push(self.tail.value(i));
            }
        }
        let mut pert = DMatrix::zeros(m, m);
        for i in 0..m_old {
            for j in 0..m_old {
                pert[(i, j)] = self.core_perturbation[(i, j)];
            }
        }
        for i in 0..k.core_dim() {
            for j in 0..k.core_dim() {
                pert[(i, j)] += k.core()[(i, j)];
            }
        }
        // Move any old correction into the new core block explicitly so the
        // remaining correction only needs to live in one place.
        let op = Self {
            core_diagonal,
            core_perturbation: pert,
            tail: self.tail,
            correction: self.correction.plus(k.diagonal()),
            spectral_gap: self.spectral_gap,
            tolerance: self.tolerance,
        };
        let problems = op.violations();
        if problems.is_empty() {
            Ok(op)
        } else {
            Err(ConleyError::Structural(format!("L + K is not an admissible linear part: {}", problems.join("; "))))
        }
    }

    /// Rank-one `K = −2λ vvᵀ` that flips the sign of the `k`-th core
    /// eigenvalue (ascending order).
    pub fn eigenvalue_flip(&self, k: usize) -> Result<CompactLinear<T>> {
        let eig = linalg::sym_eigen(&self.core_matrix());
        if k >= eig.values.len() {
            return Err(ConleyError::Argument(format!("core has no eigenvalue #{k}")));
        }
        let v = eig.vectors.column(k).into_owned();
        let core = &v * v.transpose() * (-T::of(2.0) * eig.values[k]);
        let sym = (&core + core.transpose()) * T::of(0.5);
        CompactLinear::from_core(sym, self.tolerance)
    }

    /// `‖L₁ − L₂‖`, exact on the explicit blocks and bounded on the tail.
    pub fn distance(&self, other: &Self) -> T {
        let m = self.core_dim().max(other.core_dim());
        let horizon = m + 64 + self.correction.explicit_len().max(other.correction.explicit_len());
        let coords: Vec<usize> = (0..horizon).collect();
        let diff = self.block(&coords) - other.block(&coords);
        let head = linalg::operator_norm(&diff);
        let tail_gap = match (self.tail, other.tail) {
            (Tail::Alternating { positive: p1, negative: n1 }, Tail::Alternating { positive: p2, negative: n2 }) => {
                (p1 - p2).abs().max((n1 - n2).abs())
            }
            (a, b) => {
                let (e, o) = (horizon + (horizon % 2), horizon + 1 - (horizon % 2));
                (a.value(e) - b.value(e)).abs().max((a.value(o) - b.value(o)).abs())
            }
        };
        let rest = tail_gap + self.correction.sup_from(horizon) + other.correction.sup_from(horizon);
        head.max(rest)
    }
}
