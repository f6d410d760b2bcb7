//! Small dense linear algebra over [`Real`] scalars.
//!
//! Matrices are `nalgebra::DMatrix`; the decompositions here are written
//! against the generic scalar so that the whole pipeline runs in `f32` or
//! `f64`. Tests check them against nalgebra's own `f64` routines.

use nalgebra::{DMatrix, DVector};

use crate::scalar::Real;

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct SymEigen<T: Real> {
    pub values: Vec<T>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: DMatrix<T>,
}

fn off_diagonal_norm<T: Real>(a: &DMatrix<T>) -> T {
    let n = a.nrows();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

fn frobenius<T: Real>(a: &DMatrix<T>) -> T {
    a.iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// Cyclic Jacobi eigenvalue iteration for a symmetric matrix.
///
/// Only the upper triangle is trusted; the input is symmetrized first. An
/// exactly diagonal input performs no rotations, so its eigenvectors are
/// exact coordinate vectors (after sorting).
pub fn sym_eigen<T: Real>(a: &DMatrix<T>) -> SymEigen<T> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "sym_eigen needs a square matrix");
    let half = T::of(0.5);
    let mut m = DMatrix::from_fn(n, n, |i, j| half * (a[(i, j)] + a[(j, i)]));
    let mut v = DMatrix::<T>::identity(n, n);
    let scale = frobenius(&m);
    let eps = T::epsilon();

    for _sweep in 0..100 {
        let off = off_diagonal_norm(&m);
        if off <= eps * scale || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (T::of(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = T::zero();
                m[(q, p)] = T::zero();
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    SymEigen { values, vectors }
}

/// Spectral norm `‖A‖₂`, computed from the largest eigenvalue of the
/// smaller Gram matrix.
pub fn operator_norm<T: Real>(a: &DMatrix<T>) -> T {
    if a.nrows() == 0 || a.ncols() == 0 {
        return T::zero();
    }
    let gram = if a.nrows() <= a.ncols() { a * a.transpose() } else { a.transpose() * a };
    let eig = sym_eigen(&gram);
    let top = eig.values.last().copied().unwrap_or_else(T::zero);
    top.max(T::zero()).sqrt()
}

/// Largest absolute entry.
pub fn max_abs<T: Real>(a: &DMatrix<T>) -> T {
    a.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
}

/// `max |A - Aᵀ|`.
pub fn symmetry_defect<T: Real>(a: &DMatrix<T>) -> T {
    let n = a.nrows();
    let mut d = T::zero();
    for i in 0..n {
        for j in 0..n {
            d = d.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    d
}

/// `max |QᵀQ - I|` for a column set.
pub fn orthonormality_defect<T: Real>(q: &DMatrix<T>) -> T {
    let g = q.transpose() * q;
    let n = g.nrows();
    let mut d = T::zero();
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { T::one() } else { T::zero() };
            d = d.max((g[(i, j)] - target).abs());
        }
    }
    d
}

/// Orthonormal basis of the column span, via modified Gram-Schmidt with one
/// re-orthogonalization pass. Columns whose residual norm falls below
/// `rank_tol` are dropped.
pub fn orthonormal_basis<T: Real>(cols: &DMatrix<T>, rank_tol: T) -> DMatrix<T> {
    let n = cols.nrows();
    let mut basis: Vec<DVector<T>> = Vec::new();
    for c in 0..cols.ncols() {
        let mut v: DVector<T> = cols.column(c).into_owned();
        let original = v.iter().map(|&x| x * x).sum::<T>().sqrt();
        for _pass in 0..2 {
            for b in &basis {
                let proj = b.dot(&v);
                v.axpy(-proj, b, T::one());
            }
        }
        let norm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
        if norm > rank_tol * original.max(T::one()) {
            basis.push(v / norm);
        }
    }
    let mut out = DMatrix::zeros(n, basis.len());
    for (k, b) in basis.iter().enumerate() {
        out.set_column(k, b);
    }
    out
}

fn one_norm<T: Real>(a: &DMatrix<T>) -> T {
    (0..a.ncols()).map(|j| a.column(j).iter().fold(T::zero(), |s, &x| s + x.abs())).fold(T::zero(), |m, x| m.max(x))
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
pub fn expm<T: Real>(a: &DMatrix<T>) -> DMatrix<T> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let norm = one_norm(a);
    let mut squarings = 0u32;
    let mut scale = T::one();
    let half = T::of(0.5);
    while norm * scale > half {
        scale *= half;
        squarings += 1;
    }
    let b = a * scale;
    let mut result = DMatrix::<T>::identity(n, n);
    let mut term = DMatrix::<T>::identity(n, n);
    for k in 1..=30 {
        term = &term * &b * (T::one() / T::of_usize(k));
        let size = max_abs(&term);
        result += &term;
        if size <= T::epsilon() * T::of(1e-2) {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Entrywise absolute value.
pub fn abs_matrix<T: Real>(a: &DMatrix<T>) -> DMatrix<T> {
    a.map(|x| x.abs())
}
