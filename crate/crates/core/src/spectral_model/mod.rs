//! Ambient model: ℓ² with a distinguished coordinate basis, the operator
//! `L`, the compact map `Q`, frames and neighborhoods.

pub mod compact;
pub mod field;
pub mod frame;
pub mod map;
pub mod neighborhood;
pub mod operator;
pub mod vector;

pub use compact::{CompactLinear, DiagonalCompact, DiagonalTerm};
pub use field::{GrowthReport, GrowthWitness, PermissibleField};
pub use frame::Frame;
pub use map::{Monomial, Polynomial, PolynomialComponent, StructuredCompactMap};
pub use neighborhood::Neighborhood;
pub use operator::{SpectralOperator, Tail};
pub use vector::FiniteVector;

#[cfg(test)]
mod properties {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn operator(seed: [f64; 6]) -> SpectralOperator<f64> {
        let p =
            DMatrix::from_row_slice(3, 3, &[0.0, seed[0], seed[1], seed[0], 0.0, seed[2], seed[1], seed[2], 0.0]) * 0.1;
        SpectralOperator::new(
            vec![2.0 + seed[3].abs(), -2.0 - seed[4].abs(), 3.0 + seed[5].abs()],
            Some(p),
            Tail::Alternating { positive: 1.5, negative: -1.5 },
            1.0,
            1e-12,
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn self_adjoint(seed in prop::array::uniform6(-1.0f64..1.0),
                        x in prop::collection::vec(-1.0f64..1.0, 6),
                        y in prop::collection::vec(-1.0f64..1.0, 6)) {
            let l = operator(seed);
            let x = FiniteVector::from_dense(&x);
            let y = FiniteVector::from_dense(&y);
            prop_assert!((l.apply(&x).dot(&y) - x.dot(&l.apply(&y))).abs() < 1e-12);
        }

        #[test]
        fn decomposition_independent(seed in prop::array::uniform6(-1.0f64..1.0),
                                     kv in prop::collection::vec(-0.2f64..0.2, 3),
                                     x in prop::collection::vec(-2.0f64..2.0, 6)) {
            let l = operator(seed);
            let q = StructuredCompactMap::new(
                vec![0, 1],
                vec![PolynomialComponent {
                    output: 4,
                    polynomial: Polynomial::new(vec![Monomial { coefficient: 0.5, exponents: vec![1, 2] }]),
                }],
                1.0,
                CompactLinear::zero(),
            ).unwrap();
            let f = PermissibleField::new(l, q);
            let v = nalgebra::DVector::from_vec(kv);
            let k = CompactLinear::from_core(&v * v.transpose(), 1e-12).unwrap();
            let g = f.alternative_decomposition(&k).unwrap();
            let x = FiniteVector::from_dense(&x);
            prop_assert!(f.apply(&x).sub(&g.apply(&x)).max_abs() < 1e-12);
        }
    }

    #[test]
    fn compactness_surrogate_on_ladder() {
        use rand::{Rng, SeedableRng};
        let q = StructuredCompactMap::new(
            vec![0, 1],
            vec![
                PolynomialComponent {
                    output: 2,
                    polynomial: Polynomial::new(vec![Monomial { coefficient: 1.0, exponents: vec![2, 0] }]),
                },
                PolynomialComponent {
                    output: 5,
                    polynomial: Polynomial::new(vec![Monomial { coefficient: 0.5, exponents: vec![1, 1] }]),
                },
            ],
            2.0,
            CompactLinear::from_diagonal(
                DiagonalCompact::new(vec![DiagonalTerm::Geometric { first: 0.3, ratio: 0.5 }]).unwrap(),
            ),
        )
        .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let pts: Vec<FiniteVector<f64>> = (0..200)
            .map(|_| {
                let v: Vec<f64> = (0..10).map(|_| rng.random_range(-0.3..0.3)).collect();
                FiniteVector::from_dense(&v)
            })
            .collect();
        let mut prev = f64::INFINITY;
        for n in 1..=12 {
            let v = Frame::<f64>::leading(n);
            let s = pts.iter().map(|x| v.residual_norm(&q.apply(x))).fold(0.0, f64::max);
            assert!(s <= prev + 1e-15);
            prev = s;
        }
        assert!(prev < 1e-15);
    }
}
