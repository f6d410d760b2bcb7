use nalgebra::{DMatrix, DVector};

use super::vector::FiniteVector;
use crate::error::{ConleyError, Result};
use crate::linalg;
use crate::scalar::Real;

/// Finite-dimensional subspace `V ⊂ ℓ²` given by orthonormal columns over a
/// finite set of ambient coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame<T: Real> {
    support: Vec<usize>,
    columns: DMatrix<T>,
    tolerance: T,
}

impl<T: Real> Frame<T> {
    /// Checks distinct support, matching row count and orthonormality.
    /// Support is sorted; rows are permuted with it.
    pub fn new(support: Vec<usize>, columns: DMatrix<T>, tolerance: T) -> Result<Self> {
        if columns.nrows() != support.len() {
            return Err(ConleyError::Structural(format!(
                "frame has {} support indices but {} rows",
                support.len(),
                columns.nrows()
            )));
        }
        let mut order: Vec<usize> = (0..support.len()).collect();
        order.sort_by_key(|&r| support[r]);
        let sorted: Vec<usize> = order.iter().map(|&r| support[r]).collect();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(ConleyError::Structural("frame support indices must be distinct".into()));
        }
        let columns = DMatrix::from_fn(columns.nrows(), columns.ncols(), |r, c| columns[(order[r], c)]);
        let defect = linalg::orthonormality_defect(&columns);
        if defect > tolerance {
            return Err(ConleyError::Structural(format!(
                "frame columns not orthonormal: defect {defect} exceeds {tolerance}"
            )));
        }
        Ok(Self { support: sorted, columns, tolerance })
    }

    pub fn empty() -> Self {
        Self { support: Vec::new(), columns: DMatrix::zeros(0, 0), tolerance: T::structural_tolerance() }
    }

    /// `span{e_i : i ∈ coords}` with columns in the given order.
    pub fn coordinate(coords: &[usize]) -> Result<Self> {
        let n = coords.len();
        Self::new(coords.to_vec(), DMatrix::identity(n, n), T::structural_tolerance())
    }

    /// `span{e_0, …, e_{k-1}}`.
    pub fn leading(k: usize) -> Self {
        Self::coordinate(&(0..k).collect::<Vec<_>>()).expect("distinct coordinates")
    }

    /// Orthonormalizes `vectors` (Gram-Schmidt, dropping dependent ones).
    pub fn span_of(vectors: &[FiniteVector<T>], rank_tol: T) -> Self {
        let mut support: Vec<usize> = vectors.iter().flat_map(|v| v.support()).collect();
        support.sort_unstable();
        support.dedup();
        let raw = DMatrix::from_fn(support.len(), vectors.len(), |r, c| vectors[c].get(support[r]));
        let q = linalg::orthonormal_basis(&raw, rank_tol);
        Self { support, columns: q, tolerance: T::structural_tolerance() }.trimmed()
    }

    /// Drops support coordinates on which every column vanishes.
    fn trimmed(self) -> Self {
        let keep: Vec<usize> =
            (0..self.support.len()).filter(|&r| self.columns.row(r).iter().any(|x| *x != T::zero())).collect();
        if keep.len() == self.support.len() {
            return self;
        }
        let support = keep.iter().map(|&r| self.support[r]).collect();
        let columns = DMatrix::from_fn(keep.len(), self.columns.ncols(), |r, c| self.columns[(keep[r], c)]);
        Self { support, columns, tolerance: self.tolerance }
    }

    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn columns(&self) -> &DMatrix<T> {
        &self.columns
    }

    pub fn tolerance(&self) -> T {
        self.tolerance
    }

    pub fn column_vector(&self, k: usize) -> FiniteVector<T> {
        FiniteVector::from_pairs(
            self.support
                .iter()
                .enumerate()
                .filter(|(r, _)| self.columns[(*r, k)] != T::zero())
                .map(|(r, &i)| (i, self.columns[(r, k)])),
        )
    }

    /// Frame coordinates `Φᵀx`.
    pub fn coords_of(&self, x: &FiniteVector<T>) -> DVector<T> {
        let xs = DVector::from_vec(x.gather(&self.support));
        self.columns.transpose() * xs
    }

    /// `Φc` as an ambient vector.
    pub fn embed(&self, c: &DVector<T>) -> FiniteVector<T> {
        let y = &self.columns * c;
        FiniteVector::from_pairs(self.support.iter().copied().zip(y.iter().copied()))
    }

    /// `π_V x`.
    pub fn project(&self, x: &FiniteVector<T>) -> FiniteVector<T> {
        self.embed(&self.coords_of(x))
    }

    /// `‖(1 − π_V)x‖`.
    pub fn residual_norm(&self, x: &FiniteVector<T>) -> T {
        x.sub(&self.project(x)).norm()
    }

    /// Columns re-expressed on the coordinate list `coords ⊇ support`.
    pub fn lifted(&self, coords: &[usize]) -> Result<DMatrix<T>> {
        let mut out = DMatrix::zeros(coords.len(), self.dim());
        for (r, &i) in self.support.iter().enumerate() {
            let Some(pos) = coords.iter().position(|&j| j == i) else {
                return Err(ConleyError::Argument(format!("coordinate {i} missing from lift target")));
            };
            for c in 0..self.dim() {
                out[(pos, c)] = self.columns[(r, c)];
            }
        }
        Ok(out)
    }

    /// Every column is `±e_i`.
    pub fn is_coordinate_aligned(&self) -> bool {
        (0..self.dim()).all(|c| {
            let nz: Vec<T> = self.columns.column(c).iter().copied().filter(|x| *x != T::zero()).collect();
            nz.len() == 1 && (nz[0].abs() - T::one()).abs() <= self.tolerance
        })
    }

    /// For a coordinate-aligned frame: `(ambient coordinate, sign)` per column.
    pub fn axis_map(&self) -> Option<Vec<(usize, T)>> {
        if !self.is_coordinate_aligned() {
            return None;
        }
        Some(
            (0..self.dim())
                .map(|c| {
                    let r = (0..self.support.len()).find(|&r| self.columns[(r, c)] != T::zero()).unwrap();
                    (self.support[r], self.columns[(r, c)].signum())
                })
                .collect(),
        )
    }

    /// Frame with columns `ΦR` for an orthogonal `d×d` matrix `R`.
    pub fn rotated(&self, r: &DMatrix<T>) -> Result<Self> {
        if r.nrows() != self.dim() || r.ncols() != self.dim() {
            return Err(ConleyError::Argument("rotation must be d×d".into()));
        }
        Self::new(self.support.clone(), &self.columns * r, self.tolerance.max(T::structural_tolerance()))
    }

    pub fn select_columns(&self, idx: &[usize]) -> Self {
        let columns = DMatrix::from_fn(self.support.len(), idx.len(), |r, c| self.columns[(r, idx[c])]);
        Self { support: self.support.clone(), columns, tolerance: self.tolerance }.trimmed()
    }

    /// `max_k ‖(1 − π_self) w_k‖` over the columns of `other`.
    pub fn containment_defect(&self, other: &Self) -> T {
        (0..other.dim()).map(|k| self.residual_norm(&other.column_vector(k))).fold(T::zero(), |m, x| m.max(x))
    }

    /// `self ⊖ sub`: orthonormal basis of the orthogonal complement of `sub`
    /// inside `self`.
    pub fn complement_of(&self, sub: &Self, tol: T) -> Result<Self> {
        let defect = self.containment_defect(sub);
        if defect > tol {
            return Err(ConleyError::Argument(format!("subframe not contained in frame (defect {defect})")));
        }
        let d = self.dim();
        let s = sub
            .lifted(&self.support)
            .map_err(|_| ConleyError::Argument("subframe support not contained in frame support".into()))?;
        let inner = self.columns.transpose() * s;
        // Complement of span(inner) in R^d, then map back through Φ.
        let mut stacked = DMatrix::zeros(d, inner.ncols() + d);
        for c in 0..inner.ncols() {
            stacked.set_column(c, &inner.column(c));
        }
        for c in 0..d {
            stacked[(c, inner.ncols() + c)] = T::one();
        }
        let q = linalg::orthonormal_basis(&stacked, T::of(1e-8));
        let k = inner.ncols();
        let comp = q.columns(k.min(q.ncols()), q.ncols() - k.min(q.ncols())).into_owned();
        Ok(Self { support: self.support.clone(), columns: &self.columns * comp, tolerance: self.tolerance }.trimmed())
    }

    /// `V₁ ⊕ V₂` for frames with disjoint supports; columns of `self` first.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.support.iter().any(|i| other.support.contains(i)) {
            return Err(ConleyError::Argument("direct sum needs disjoint frame supports".into()));
        }
        let mut support = self.support.clone();
        support.extend_from_slice(&other.support);
        let (r1, d1) = (self.support.len(), self.dim());
        let cols = DMatrix::from_fn(support.len(), d1 + other.dim(), |r, c| match (r < r1, c < d1) {
            (true, true) => self.columns[(r, c)],
            (false, false) => other.columns[(r - r1, c - d1)],
            _ => T::zero(),
        });
        Self::new(support, cols, self.tolerance.max(other.tolerance))
    }

    /// Union of two frames' spans (orthonormalized).
    pub fn span_union(&self, other: &Self, rank_tol: T) -> Self {
        let vecs: Vec<FiniteVector<T>> = (0..self.dim())
            .map(|k| self.column_vector(k))
            .chain((0..other.dim()).map(|k| other.column_vector(k)))
            .collect();
        Self::span_of(&vecs, rank_tol)
    }

    /// Stable 64-bit FNV-1a fingerprint of support and column bits.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for b in bytes {
                h ^= u64::from(*b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        eat(&(self.support.len() as u64).to_le_bytes());
        for &i in &self.support {
            eat(&(i as u64).to_le_bytes());
        }
        eat(&(self.dim() as u64).to_le_bytes());
        for x in self.columns.iter() {
            eat(&x.to_f64_lossy().to_bits().to_le_bytes());
        }
        h
    }
}
