use std::fmt;

use super::{commutator_norm, residual_compact_norm};
use crate::error::{ConleyError, Result};
use crate::scalar::Real;
use crate::spectral_model::{Frame, Neighborhood, PermissibleField};

/// Every kernel vector `k` must satisfy `‖(1 − π_V)k‖ ≤ 1e-9`.
pub const KERNEL_CONTAINMENT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmissibilityBudget<T: Real> {
    /// Commutator budget.
    pub c1: T,
    /// Residual budget.
    pub c2: T,
    /// Signature tolerance; `None` means `δ₀/2`.
    pub degeneracy: Option<T>,
}

impl<T: Real> AdmissibilityBudget<T> {
    pub fn new(c1: T, c2: T, degeneracy: Option<T>) -> Result<Self> {
        if !(c1 > T::zero() && c2 > T::zero()) {
            return Err(ConleyError::Structural(format!("budgets must be positive, got c1 = {c1}, c2 = {c2}")));
        }
        if let Some(d) = degeneracy {
            if !(d > T::zero()) {
                return Err(ConleyError::Structural(format!("degeneracy tolerance must be positive, got {d}")));
            }
        }
        Ok(Self { c1, c2, degeneracy })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdmissibilityReason {
    KernelNotContained,
    CommutatorOverBudget,
    ResidualOverBudget,
}

impl fmt::Display for AdmissibilityReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::KernelNotContained => "(1) kernel of L not contained in V",
            Self::CommutatorOverBudget => "(2) commutator norm exceeds c1",
            Self::ResidualOverBudget => "(3) residual bound exceeds c2",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibilityRecord<T: Real> {
    pub kernel_defect: T,
    pub commutator: T,
    pub residual_upper: T,
    pub residual_lower: T,
    pub reasons: Vec<AdmissibilityReason>,
}

impl<T: Real> AdmissibilityRecord<T> {
    pub fn admissible(&self) -> bool {
        self.reasons.is_empty()
    }

    pub fn into_result(self) -> Result<Self> {
        if self.admissible() {
            Ok(self)
        } else {
            let why: Vec<String> = self.reasons.iter().map(ToString::to_string).collect();
            Err(ConleyError::Admissibility(format!(
                "{} (kernel defect {}, commutator {}, residual {})",
                why.join(", "),
                self.kernel_defect,
                self.commutator,
                self.residual_upper
            )))
        }
    }
}

/// Decision whether `V` contains `ker L`, has commutator `≤ c₁` and
/// residual bound `≤ c₂` on `X`.
pub fn admissible<T: Real>(
    f: &PermissibleField<T>,
    v: &Frame<T>,
    x: &Neighborhood<T>,
    budget: &AdmissibilityBudget<T>,
) -> AdmissibilityRecord<T> {
    let kernel = f.operator().kernel_frame();
    let kernel_defect =
        (0..kernel.dim()).map(|k| v.residual_norm(&kernel.column_vector(k))).fold(T::zero(), |m, d| m.max(d));
    let commutator = commutator_norm(f.operator(), v);
    let residual = residual_compact_norm(f.map(), v, x);
    let mut reasons = Vec::new();
    if kernel_defect > T::of(KERNEL_CONTAINMENT_TOL) {
        reasons.push(AdmissibilityReason::KernelNotContained);
    }
    if commutator > budget.c1 {
        reasons.push(AdmissibilityReason::CommutatorOverBudget);
    }
    if residual.upper > budget.c2 {
        reasons.push(AdmissibilityReason::ResidualOverBudget);
    }
    AdmissibilityRecord {
        kernel_defect,
        commutator,
        residual_upper: residual.upper,
        residual_lower: residual.lower,
        reasons,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_model::{
        CompactLinear, FiniteVector, Monomial, Polynomial, PolynomialComponent, SpectralOperator, StructuredCompactMap,
        Tail,
    };

    fn alt() -> Tail<f64> {
        Tail::Alternating { positive: 1.0, negative: -1.0 }
    }

    fn field() -> PermissibleField<f64> {
        let l = SpectralOperator::diagonal(&[0.0, 1.0, -1.0], alt(), 1.0).unwrap();
        let q = StructuredCompactMap::new(
            vec![0],
            vec![PolynomialComponent {
                output: 1,
                polynomial: Polynomial::new(vec![Monomial { coefficient: 1.0, exponents: vec![2] }]),
            }],
            2.0,
            CompactLinear::zero(),
        )
        .unwrap();
        PermissibleField::new(l, q)
    }

    #[test]
    fn coordinate_span_with_kernel_is_admissible() {
        let b = AdmissibilityBudget::new(0.1, 0.1, None).unwrap();
        let r = admissible(&field(), &Frame::leading(3), &Neighborhood::ball(1.0).unwrap(), &b);
        assert!(r.admissible());
        assert_eq!((r.kernel_defect, r.commutator, r.residual_upper), (0.0, 0.0, 0.0));
    }

    #[test]
    fn missing_kernel_vector() {
        let b = AdmissibilityBudget::new(0.1, 10.0, None).unwrap();
        let r = admissible(&field(), &Frame::coordinate(&[1, 2]).unwrap(), &Neighborhood::ball(1.0).unwrap(), &b);
        assert_eq!(r.reasons, vec![AdmissibilityReason::KernelNotContained]);
        assert!(r.into_result().is_err());
    }

    #[test]
    fn rotated_frame_over_commutator_budget() {
        let l = SpectralOperator::diagonal(&[1.0, -1.0], alt(), 1.0).unwrap();
        let f = PermissibleField::linear(l);
        let v = Frame::span_of(&[FiniteVector::from_dense(&[1.0, 1.0])], 1e-12);
        let b = AdmissibilityBudget::new(0.1, 0.1, None).unwrap();
        let r = admissible(&f, &v, &Neighborhood::ball(1.0).unwrap(), &b);
        assert!((r.commutator - 1.0).abs() < 1e-12);
        assert_eq!(r.reasons, vec![AdmissibilityReason::CommutatorOverBudget]);
    }

    #[test]
    fn budgets_must_be_positive() {
        assert!(AdmissibilityBudget::new(0.0, 1.0, None).is_err());
        assert!(AdmissibilityBudget::new(1.0, 1.0, Some(-1.0)).is_err());
    }
}
