use super::commutator_norm;
use crate::error::{ConleyError, Result};
use crate::linalg;
use crate::scalar::Real;
use crate::spectral_model::{FiniteVector, Frame, PermissibleField, SpectralOperator};

/// Coordinate ladder `V_k = span{e_0, …, e_{k-1}}` with the measurements
/// used to check that it exhausts `ℓ²` asymptotically invariantly.
#[derive(Clone, Debug)]
pub struct Ladder<T: Real> {
    pub frames: Vec<Frame<T>>,
    pub commutators: Vec<T>,
    pub test_vectors: Vec<FiniteVector<T>>,
    /// `test_defects[k][j] = ‖(1 − π_{V_k}) t_j‖`.
    pub test_defects: Vec<Vec<T>>,
    pub kernel_defects: Vec<T>,
    core_dim: usize,
}

impl<T: Real> Ladder<T> {
    /// Commutators are non-increasing from `core_dim` on and end at zero.
    pub fn commutators_settle(&self) -> bool {
        let tail: Vec<T> = self.commutators.iter().skip(self.core_dim.saturating_sub(1)).copied().collect();
        let monotone = tail.windows(2).all(|w| w[1] <= w[0] + T::zero_threshold());
        monotone && tail.last().is_none_or(|&c| c <= T::zero_threshold())
    }

    /// Each test vector's distance to `V_k` is non-increasing in `k`.
    pub fn test_defects_decrease(&self) -> bool {
        let n = self.test_vectors.len();
        (0..n).all(|j| {
            self.test_defects.windows(2).all(|w| w[1][j] <= w[0][j] + T::zero_threshold())
                && self.test_defects.last().is_none_or(|d| d[j] < self.test_defects[0][j] || d[j] == T::zero())
        })
    }

    pub fn is_exhausting(&self) -> bool {
        self.commutators_settle() && self.test_defects_decrease()
    }

    /// First frame containing `ker L` within tolerance.
    pub fn first_with_kernel(&self) -> Option<usize> {
        self.kernel_defects.iter().position(|&d| d <= T::of(super::KERNEL_CONTAINMENT_TOL))
    }
}

fn test_vectors<T: Real>(n: usize) -> Vec<FiniteVector<T>> {
    let len = n + 8;
    let geometric = FiniteVector::from_pairs((0..len).map(|i| (i, T::of(0.5f64.powf(i as f64 / 2.0)))));
    let harmonic =
        FiniteVector::from_pairs((0..len).map(|i| (i, T::of(if i % 2 == 0 { 1.0 } else { -1.0 } / (i as f64 + 1.0)))));
    let last = FiniteVector::basis(n.saturating_sub(1));
    vec![geometric, harmonic, last]
}

/// Nested coordinate frames `V_1 ⊂ … ⊂ V_{n_max}` with their commutators and
/// test-vector defects.
pub fn build_coordinate_ladder<T: Real>(f: &PermissibleField<T>, n_max: usize) -> Result<Ladder<T>> {
    let l = f.operator();
    let kernel = l.kernel_frame();
    if n_max < kernel.dim().max(1) {
        return Err(ConleyError::Argument(format!(
            "ladder length {n_max} is shorter than dim ker L = {}",
            kernel.dim()
        )));
    }
    let tests = test_vectors(n_max);
    let mut ladder = Ladder {
        frames: Vec::with_capacity(n_max),
        commutators: Vec::with_capacity(n_max),
        test_vectors: tests.clone(),
        test_defects: Vec::with_capacity(n_max),
        kernel_defects: Vec::with_capacity(n_max),
        core_dim: l.core_dim(),
    };
    for k in 1..=n_max {
        let v = Frame::leading(k);
        ladder.commutators.push(commutator_norm(l, &v));
        ladder.test_defects.push(tests.iter().map(|t| v.residual_norm(t)).collect());
        ladder.kernel_defects.push(
            (0..kernel.dim()).map(|j| v.residual_norm(&kernel.column_vector(j))).fold(T::zero(), |m, d| m.max(d)),
        );
        ladder.frames.push(v);
    }
    Ok(ladder)
}

/// `‖(1 − π_E)|_W‖`.
fn restricted_defect<T: Real>(e: &Frame<T>, w: &Frame<T>) -> T {
    let mut coords: Vec<usize> = e.support().to_vec();
    coords.extend_from_slice(w.support());
    coords.sort_unstable();
    coords.dedup();
    let pe = e.lifted(&coords).expect("superset");
    let pw = w.lifted(&coords).expect("superset");
    let r = &pw - &pe * (pe.transpose() * &pw);
    linalg::operator_norm(&r)
}

/// Finite-dimensional `E ⊇ W` with `‖[L, π_E]‖ < ε`, built from the first
/// suitable ladder element `E_n = π_{E_n}(W) ⊕ U` as `E = span(W ∪ U)`.
pub fn extend_subspace<T: Real>(l: &SpectralOperator<T>, w: &Frame<T>, eps: T, ladder: &Ladder<T>) -> Result<Frame<T>> {
    if !(eps > T::zero()) {
        return Err(ConleyError::Argument(format!("epsilon must be positive, got {eps}")));
    }
    if commutator_norm(l, w) < eps {
        return Ok(w.clone());
    }
    let rank_tol = T::of(1e-10);
    let mut best: Option<(T, usize)> = None;
    for (n, en) in ladder.frames.iter().enumerate() {
        if ladder.commutators[n] >= eps {
            continue;
        }
        let projected: Vec<FiniteVector<T>> = (0..w.dim()).map(|k| en.project(&w.column_vector(k))).collect();
        let pw = Frame::span_of(&projected, rank_tol);
        let u = en.complement_of(&pw, T::of(1e-9))?;
        let e = w.span_union(&u, rank_tol);
        let c = commutator_norm(l, &e);
        if c < eps {
            return Ok(e);
        }
        let d = restricted_defect(en, w);
        if best.is_none_or(|(b, _)| d < b) {
            best = Some((d, n));
        }
    }
    Err(ConleyError::Argument(format!(
        "no ladder element yields commutator below {eps}; closest W-defect {:?}",
        best.map(|(d, n)| (n + 1, d.to_f64_lossy()))
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_model::Tail;
    use nalgebra::DMatrix;

    fn alt() -> Tail<f64> {
        Tail::Alternating { positive: 1.0, negative: -1.0 }
    }

    #[test]
    fn diagonal_ladder() {
        let f = PermissibleField::linear(SpectralOperator::diagonal(&[1.0, -1.0, 2.0], alt(), 1.0).unwrap());
        let lad = build_coordinate_ladder(&f, 5).unwrap();
        assert_eq!(lad.frames.len(), 5);
        assert!(lad.commutators.iter().all(|&c| c == 0.0));
        assert!(lad.is_exhausting());
        for w in lad.frames.windows(2) {
            assert_eq!(w[1].containment_defect(&w[0]), 0.0);
        }
    }

    #[test]
    fn perturbation_interior_to_ladder() {
        let p = DMatrix::from_row_slice(2, 2, &[0.0, 0.3, 0.3, 0.0]);
        let l = SpectralOperator::new(vec![2.0, -2.0], Some(p), alt(), 1.0, 1e-12).unwrap();
        let lad = build_coordinate_ladder(&PermissibleField::linear(l), 6).unwrap();
        assert!(lad.commutators[0] > 0.0);
        assert!(lad.commutators[1..].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn coupling_across_ladder_step_matches_svd() {
        let mut p = DMatrix::zeros(4, 4);
        p[(1, 2)] = 0.4;
        p[(2, 1)] = 0.4;
        let l = SpectralOperator::new(vec![2.0, -2.0, 3.0, -3.0], Some(p), alt(), 1.0, 1e-12).unwrap();
        let lad = build_coordinate_ladder(&PermissibleField::linear(l.clone()), 4).unwrap();
        let c: Vec<usize> = (0..4).collect();
        let a = l.block(&c);
        let mut pr = DMatrix::zeros(4, 4);
        pr[(0, 0)] = 1.0;
        pr[(1, 1)] = 1.0;
        let oracle = (&a * &pr - &pr * &a).svd(false, false).singular_values.max();
        assert!((lad.commutators[1] - oracle).abs() < 1e-12);
        assert!((oracle - 0.4).abs() < 1e-12);
    }

    #[test]
    fn short_ladder_rejected() {
        let l = SpectralOperator::diagonal(&[0.0, 0.0, 1.0], alt(), 1.0).unwrap();
        assert!(build_coordinate_ladder(&PermissibleField::linear(l), 1).is_err());
    }

    #[test]
    fn extension_of_coordinate_span_is_itself() {
        let l = SpectralOperator::diagonal(&[1.0, -1.0, 2.0], alt(), 1.0).unwrap();
        let lad = build_coordinate_ladder(&PermissibleField::linear(l.clone()), 4).unwrap();
        let w = Frame::coordinate(&[0, 2]).unwrap();
        assert_eq!(extend_subspace(&l, &w, 0.05, &lad).unwrap(), w);
    }

    #[test]
    fn extension_of_rotated_line() {
        let l = SpectralOperator::diagonal(&[1.0, -1.0, 2.0], alt(), 1.0).unwrap();
        let lad = build_coordinate_ladder(&PermissibleField::linear(l.clone()), 4).unwrap();
        let w = Frame::span_of(&[FiniteVector::from_dense(&[0.6, 0.8])], 1e-12);
        assert!(commutator_norm(&l, &w) > 0.05);
        let e = extend_subspace(&l, &w, 0.05, &lad).unwrap();
        assert!(commutator_norm(&l, &e) < 0.05);
        assert!(e.containment_defect(&w) < 1e-12);
        let big = extend_subspace(&l, &w, 10.0, &lad).unwrap();
        assert_eq!(big, w);
        assert!(extend_subspace(&l, &w, 0.0, &lad).is_err());
    }
}
