#![allow(dead_code)]

use stable_conley::spectral_model::{
    CompactLinear, Monomial, Neighborhood, PermissibleField, Polynomial, PolynomialComponent, SpectralOperator,
    StructuredCompactMap, Tail,
};
use stable_conley::subspace_lab::AdmissibilityBudget;

pub fn alt() -> Tail<f64> {
    Tail::Alternating { positive: 1.0, negative: -1.0 }
}

/// Diagonal operator whose gap is the smallest nonzero core magnitude (at most 1).
pub fn operator(core: &[f64]) -> SpectralOperator<f64> {
    let gap = core.iter().map(|x| x.abs()).filter(|&x| x > 0.0).fold(1.0, f64::min);
    SpectralOperator::diagonal(core, alt(), gap).unwrap()
}

/// `Σ coefficient · x_input^power` into `output`, cut off at `radius`.
pub fn power_map(terms: &[(usize, usize, u32, f64)], support: Vec<usize>, radius: f64) -> StructuredCompactMap<f64> {
    let comps = terms
        .iter()
        .map(|&(output, input, power, coefficient)| {
            let mut exponents = vec![0; support.len()];
            exponents[support.iter().position(|&s| s == input).unwrap()] = power;
            PolynomialComponent { output, polynomial: Polynomial::new(vec![Monomial { coefficient, exponents }]) }
        })
        .collect();
    StructuredCompactMap::new(support, comps, radius, CompactLinear::zero()).unwrap()
}

/// `f = L + a·x₀³` on `e₀`, i.e. `v̇₀ = −λ₀v₀ − a v₀³`.
pub fn cubic_field(core: &[f64], a: f64) -> PermissibleField<f64> {
    PermissibleField::new(operator(core), power_map(&[(0, 0, 3, a)], vec![0], 4.0))
}

pub fn budget() -> AdmissibilityBudget<f64> {
    AdmissibilityBudget::new(0.1, 0.1, None).unwrap()
}

pub fn ball(r: f64) -> Neighborhood<f64> {
    Neighborhood::ball(r).unwrap()
}
