use nalgebra::DMatrix;

use crate::error::{ConleyError, Result};
use crate::linalg;
use crate::scalar::Real;
use crate::spectral_model::{Frame, SpectralOperator};

/// Sign split of the compressed form `π_V L|_V`.
#[derive(Clone, Debug, PartialEq)]
pub struct SignatureDecomposition<T: Real> {
    pub frame: Frame<T>,
    pub positive: Frame<T>,
    pub negative: Frame<T>,
    pub neutral: Frame<T>,
    pub positive_values: Vec<T>,
    pub negative_values: Vec<T>,
    pub neutral_values: Vec<T>,
    /// `min |λ|` outside `V⁰`; infinite when every eigenvalue is neutral.
    pub margin: T,
    pub tolerance: T,
    /// Eigenvalues ascending and the matching eigenvectors in frame
    /// coordinates.
    pub values: Vec<T>,
    pub vectors: DMatrix<T>,
}

impl<T: Real> SignatureDecomposition<T> {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.positive.dim(), self.negative.dim(), self.neutral.dim())
    }

    pub fn negative_dim(&self) -> usize {
        self.negative.dim()
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.neutral.dim() == 0
    }

    pub fn require_nondegenerate(&self) -> Result<()> {
        match self.neutral_values.iter().copied().min_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap()) {
            None => Ok(()),
            Some(e) => Err(ConleyError::Nondegeneracy {
                eigenvalue: e.to_f64_lossy(),
                tolerance: self.tolerance.to_f64_lossy(),
            }),
        }
    }

    /// Frame `V` rotated onto the eigenbasis of `π_V L|_V`, ascending.
    pub fn eigenframe(&self) -> Frame<T> {
        self.frame.rotated(&self.vectors).expect("orthogonal eigenvectors")
    }
}

/// Matrix of `π_V L|_V` in the frame basis.
pub fn compressed_form<T: Real>(l: &SpectralOperator<T>, v: &Frame<T>) -> DMatrix<T> {
    let a = l.block(v.support());
    let phi = v.columns();
    let m = phi.transpose() * a * phi;
    (&m + m.transpose()) * T::of(0.5)
}

/// Signature of `π_V L|_V`; `tolerance` defaults to `δ₀/2`.
pub fn signature<T: Real>(l: &SpectralOperator<T>, v: &Frame<T>, tolerance: Option<T>) -> SignatureDecomposition<T> {
    let tol = tolerance.unwrap_or(l.spectral_gap() * T::of(0.5));
    let eig = linalg::sym_eigen(&compressed_form(l, v));
    let pick = |pred: &dyn Fn(T) -> bool| -> (Vec<usize>, Vec<T>) {
        let idx: Vec<usize> = (0..eig.values.len()).filter(|&k| pred(eig.values[k])).collect();
        let vals = idx.iter().map(|&k| eig.values[k]).collect();
        (idx, vals)
    };
    let (pi, pv) = pick(&|x| x > tol);
    let (ni, nv) = pick(&|x| x < -tol);
    let (zi, zv) = pick(&|x| x.abs() <= tol);
    let sub = |idx: &[usize]| -> Frame<T> {
        if idx.is_empty() {
            return Frame::empty();
        }
        let r = DMatrix::from_fn(v.dim(), idx.len(), |r, c| eig.vectors[(r, idx[c])]);
        let cols = v.columns() * r;
        Frame::new(v.support().to_vec(), cols, v.tolerance().max(T::structural_tolerance()))
            .expect("eigenvectors of a symmetric matrix are orthonormal")
    };
    let margin = pv.iter().chain(&nv).fold(T::infinity(), |m, x| m.min(x.abs()));
    SignatureDecomposition {
        frame: v.clone(),
        positive: sub(&pi),
        negative: sub(&ni),
        neutral: sub(&zi),
        positive_values: pv,
        negative_values: nv,
        neutral_values: zv,
        margin,
        tolerance: tol,
        values: eig.values,
        vectors: eig.vectors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_model::{FiniteVector, Tail};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn alt() -> Tail<f64> {
        Tail::Alternating { positive: 1.0, negative: -1.0 }
    }

    #[test]
    fn diagonal_restriction() {
        let l = SpectralOperator::diagonal(&[2.0, -1.0, 3.0], alt(), 1.0).unwrap();
        let s = signature(&l, &Frame::leading(3), None);
        assert_eq!(s.dims(), (2, 1, 0));
        assert_eq!(s.negative.column_vector(0), FiniteVector::basis(1));
        assert!(s.require_nondegenerate().is_ok());
        assert_eq!(s.margin, 1.0);
    }

    #[test]
    fn symmetric_cancellation_is_neutral() {
        let l = SpectralOperator::diagonal(&[1.0, -1.0], alt(), 1.0).unwrap();
        let v = Frame::span_of(&[FiniteVector::from_dense(&[1.0, 1.0])], 1e-12);
        let s = signature(&l, &v, None);
        assert_eq!(s.dims(), (0, 0, 1));
        assert!(matches!(s.require_nondegenerate(), Err(ConleyError::Nondegeneracy { .. })));
    }

    #[test]
    fn random_core_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..20 {
            let b = DMatrix::<f64>::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
            let sym = (&b + b.transpose()) * 0.5;
            let d: Vec<f64> = vec![3.0, -3.0, 4.0, -4.0];
            let Ok(l) = SpectralOperator::new(d, Some(sym), alt(), 0.5, 1e-12) else { continue };
            let raw = DMatrix::<f64>::from_fn(4, 2, |_, _| rng.random_range(-1.0..1.0));
            let q = raw.qr().q();
            let v = Frame::new((0..4).collect(), q.clone(), 1e-12).unwrap();
            let s = signature(&l, &v, Some(1e-9));
            let m = q.transpose() * l.core_matrix() * &q;
            let oracle = m.symmetric_eigen().eigenvalues;
            let neg = oracle.iter().filter(|&&x| x < -1e-9).count();
            let pos = oracle.iter().filter(|&&x| x > 1e-9).count();
            assert_eq!(s.dims(), (pos, neg, 2 - pos - neg));
        }
    }
}
