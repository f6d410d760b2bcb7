//! Projections onto frames: commutator norms, residual bounds for `Q`,
//! signatures, admissibility, ladders and the subspace extension step.

mod admissibility;
mod ladder;
mod signature;

pub use admissibility::{
    admissible, AdmissibilityBudget, AdmissibilityReason, AdmissibilityRecord, KERNEL_CONTAINMENT_TOL,
};
pub use ladder::{build_coordinate_ladder, extend_subspace, Ladder};
pub use signature::{signature, SignatureDecomposition};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg;
use crate::scalar::Real;
use crate::spectral_model::{FiniteVector, Frame, Neighborhood, SpectralOperator, StructuredCompactMap};

/// Coordinates on which `L`, `π_V` and `[L, π_V]` all live.
fn working_coords<T: Real>(l: &SpectralOperator<T>, v: &Frame<T>) -> Vec<usize> {
    l.invariant_closure(v.support())
}

fn projector_on<T: Real>(v: &Frame<T>, coords: &[usize]) -> DMatrix<T> {
    let phi = v.lifted(coords).expect("working coordinates contain the frame support");
    &phi * phi.transpose()
}

/// `‖Lπ_V − π_V L‖`.
///
/// `[L, π_V]` vanishes off the smallest `L`-invariant coordinate block that
/// contains `support(V)`, so the norm is that of a small dense matrix.
pub fn commutator_norm<T: Real>(l: &SpectralOperator<T>, v: &Frame<T>) -> T {
    if v.dim() == 0 {
        return T::zero();
    }
    let c = working_coords(l, v);
    let a = l.block(&c);
    let p = projector_on(v, &c);
    linalg::operator_norm(&(&a * &p - &p * &a))
}

/// `‖(1 − π_V) L π_V‖`.
pub fn off_diagonal_norm<T: Real>(l: &SpectralOperator<T>, v: &Frame<T>) -> T {
    if v.dim() == 0 {
        return T::zero();
    }
    let c = working_coords(l, v);
    let a = l.block(&c);
    let p = projector_on(v, &c);
    let q = DMatrix::identity(c.len(), c.len()) - &p;
    linalg::operator_norm(&(q * a * p))
}

/// `max(‖π² − π‖, ‖π − πᵀ‖)` for the frame's projector.
pub fn projector_law_defect<T: Real>(v: &Frame<T>) -> T {
    let p = projector_on(v, v.support());
    linalg::max_abs(&(&p * &p - &p)).max(linalg::symmetry_defect(&p))
}

/// Certified upper bound and sampled lower bound of
/// `sup_{x ∈ X} ‖(1 − π_V) Q(x)‖`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualBound<T: Real> {
    pub upper: T,
    pub lower: T,
}

const RESIDUAL_SAMPLES: usize = 2000;

/// Structural bound for the residual of `Q` outside `V` on `X`.
///
/// Nonlinear part: `‖(1−π_V)|_{range}‖ · sup_X ‖χP‖`. Linear part: exact on
/// the block spanned by `support(V)` and `K`'s core, diagonal outside it.
pub fn residual_compact_norm<T: Real>(
    q: &StructuredCompactMap<T>,
    v: &Frame<T>,
    x: &Neighborhood<T>,
) -> ResidualBound<T> {
    let upper = residual_upper(q, v, x);
    let lower = residual_lower(q, v, x).min(upper);
    ResidualBound { upper, lower }
}

fn residual_upper<T: Real>(q: &StructuredCompactMap<T>, v: &Frame<T>, x: &Neighborhood<T>) -> T {
    let mut total = T::zero();
    let outputs = q.output_indices();
    if q.has_nonlinear_part() && !outputs.is_empty() {
        let mut c: Vec<usize> = v.support().to_vec();
        c.extend_from_slice(&outputs);
        c.sort_unstable();
        c.dedup();
        let p = projector_on(v, &c);
        let cols: Vec<usize> = outputs.iter().map(|o| c.iter().position(|i| i == o).unwrap()).collect();
        let restricted = DMatrix::from_fn(c.len(), cols.len(), |r, k| {
            let id = if r == cols[k] { T::one() } else { T::zero() };
            id - p[(r, cols[k])]
        });
        let rho = x.norm_bound(q.input_support().len());
        total += linalg::operator_norm(&restricted) * q.nonlinear_sup(rho);
    }
    let k = q.linear();
    if !k.is_zero() {
        let mut c: Vec<usize> = v.support().to_vec();
        c.extend(0..k.core_dim());
        c.sort_unstable();
        c.dedup();
        let p = projector_on(v, &c);
        let block = (DMatrix::identity(c.len(), c.len()) - p) * k.block(&c);
        let head = linalg::operator_norm(&block);
        total += match *x {
            Neighborhood::Ball { radius } => head.max(k.diagonal().sup_outside(&c, 0)) * radius,
            Neighborhood::Box { half_width } => {
                let h = head * half_width * T::of_usize(c.len()).sqrt();
                let t = half_width * k.diagonal().l2_outside(&c);
                (h * h + t * t).sqrt()
            }
        };
    }
    total
}

fn residual_lower<T: Real>(q: &StructuredCompactMap<T>, v: &Frame<T>, x: &Neighborhood<T>) -> T {
    if q.is_zero() {
        return T::zero();
    }
    let mut coords: Vec<usize> = q.input_support().to_vec();
    coords.extend_from_slice(v.support());
    coords.extend(0..q.linear().core_dim());
    coords.sort_unstable();
    coords.dedup();
    let scale = x.scale();
    let eval = |p: &FiniteVector<T>| v.residual_norm(&q.apply(p));
    let mut best = T::zero();
    for &i in &coords {
        for s in [scale, -scale] {
            best = best.max(eval(&FiniteVector::from_pairs([(i, s)])));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..RESIDUAL_SAMPLES {
        let raw: Vec<f64> = coords.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
        let pt: Vec<T> = match *x {
            Neighborhood::Ball { radius } => {
                let n = raw.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-300);
                let r: f64 = rng.random_range(0.0..1.0);
                raw.iter().map(|a| radius * T::of(a / n * r.sqrt())).collect()
            }
            Neighborhood::Box { half_width } => raw.iter().map(|&a| half_width * T::of(a)).collect(),
        };
        best = best.max(eval(&FiniteVector::from_pairs(coords.iter().copied().zip(pt))));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_model::{CompactLinear, Monomial, Polynomial, PolynomialComponent, Tail};

    fn alt() -> Tail<f64> {
        Tail::Alternating { positive: 1.0, negative: -1.0 }
    }

    /// Dense oracle on the first `n` coordinates.
    fn dense_commutator(l: &SpectralOperator<f64>, v: &Frame<f64>, n: usize) -> f64 {
        let c: Vec<usize> = (0..n).collect();
        let a = l.block(&c);
        let phi = v.lifted(&c).unwrap();
        let p = &phi * phi.transpose();
        let comm = &a * &p - &p * &a;
        comm.svd(false, false).singular_values.max()
    }

    #[test]
    fn eigenspace_span_commutes() {
        let l = SpectralOperator::diagonal(&[1.0, -2.0, 3.0, 4.0], alt(), 1.0).unwrap();
        let v = Frame::coordinate(&[0, 2]).unwrap();
        assert_eq!(commutator_norm(&l, &v), 0.0);
    }

    #[test]
    fn diagonal_rotation_commutator() {
        let l = SpectralOperator::diagonal(&[1.0, -1.0], alt(), 1.0).unwrap();
        let v = Frame::span_of(&[FiniteVector::from_dense(&[1.0, 1.0])], 1e-12);
        let s = 0.5f64.sqrt();
        let oracle = DMatrix::from_row_slice(2, 2, &[0.0, 2.0 * s * s, -2.0 * s * s, 0.0])
            .svd(false, false)
            .singular_values
            .max();
        let c = commutator_norm(&l, &v);
        assert!((c - 1.0).abs() < 1e-12 && (c - oracle).abs() < 1e-12);
        // [L, π] = (1−π)Lπ − πL(1−π): adjoint blocks with orthogonal domains
        // and codomains, so the norms coincide without a √2 factor.
        assert!((c - off_diagonal_norm(&l, &v)).abs() < 1e-12);
        assert!((c - dense_commutator(&l, &v, 4)).abs() < 1e-12);
    }

    #[test]
    fn zero_q_residual() {
        let v = Frame::<f64>::leading(2);
        let r = residual_compact_norm(&StructuredCompactMap::zero(), &v, &Neighborhood::ball(1.0).unwrap());
        assert_eq!((r.upper, r.lower), (0.0, 0.0));
    }

    fn square_into(out: usize) -> StructuredCompactMap<f64> {
        StructuredCompactMap::new(
            vec![0],
            vec![PolynomialComponent {
                output: out,
                polynomial: Polynomial::new(vec![Monomial { coefficient: 1.0, exponents: vec![2] }]),
            }],
            3.0,
            CompactLinear::zero(),
        )
        .unwrap()
    }

    #[test]
    fn range_inside_frame_has_no_residual() {
        let v = Frame::<f64>::leading(2);
        let r = residual_compact_norm(&square_into(1), &v, &Neighborhood::ball(1.0).unwrap());
        assert_eq!((r.upper, r.lower), (0.0, 0.0));
    }

    #[test]
    fn residual_of_square_outside_frame() {
        let v = Frame::<f64>::leading(2);
        let r = residual_compact_norm(&square_into(2), &v, &Neighborhood::ball(1.0).unwrap());
        // 1-D maximization: sup_{|x| ≤ 1} x² = 1 at x = ±1.
        let oracle = (0..=2000).map(|k| (-1.0 + k as f64 / 1000.0).powi(2)).fold(0.0, f64::max);
        assert!(r.upper >= 1.0);
        assert!((r.lower - oracle).abs() < 1e-12);
        assert!(r.lower <= r.upper);
    }

    #[test]
    fn linear_part_residual_bounds() {
        use crate::spectral_model::{DiagonalCompact, DiagonalTerm};
        let k = CompactLinear::new(
            DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]),
            DiagonalCompact::new(vec![DiagonalTerm::Geometric { first: 0.25, ratio: 0.5 }]).unwrap(),
            1e-12,
        )
        .unwrap();
        let q = StructuredCompactMap::new(vec![], vec![], 1.0, k).unwrap();
        let v = Frame::<f64>::leading(1);
        let r = residual_compact_norm(&q, &v, &Neighborhood::ball(1.0).unwrap());
        assert!(r.lower <= r.upper + 1e-15);
        assert!(r.lower >= 0.5);
        assert!(r.upper <= 0.5 + 0.125 + 1e-12);
    }
}
