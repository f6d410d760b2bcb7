use std::collections::BTreeMap;

use super::compact::CompactLinear;
use super::vector::FiniteVector;
use crate::error::{ConleyError, Result};
use crate::scalar::Real;

/// `coefficient · Π x_j^{exponents[j]}` over the input coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial<T: Real> {
    pub coefficient: T,
    pub exponents: Vec<u32>,
}

impl<T: Real> Monomial<T> {
    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    pub fn eval(&self, x: &[T]) -> T {
        self.exponents.iter().zip(x).fold(self.coefficient, |acc, (&a, &xi)| acc * xi.powi(a as i32))
    }

    /// `sup_{‖x‖ ≤ ρ} |x^α| = ρ^k Π (α_j/k)^{α_j/2}` (Lagrange multipliers).
    fn unit_sup(exponents: &[u32], rho: T) -> T {
        let k: u32 = exponents.iter().sum();
        if k == 0 {
            return T::one();
        }
        let kf = T::of(f64::from(k));
        exponents.iter().filter(|&&a| a > 0).fold(rho.powi(k as i32), |acc, &a| {
            let af = T::of(f64::from(a));
            acc * (af / kf).powf(af / T::of(2.0))
        })
    }

    pub fn sup_on_ball(&self, rho: T) -> T {
        self.coefficient.abs() * Self::unit_sup(&self.exponents, rho)
    }

    /// Bound on `sup_{‖x‖ ≤ ρ} ‖∇(x^α)‖`.
    pub fn gradient_sup_on_ball(&self, rho: T) -> T {
        let mut s = T::zero();
        for (j, &a) in self.exponents.iter().enumerate() {
            if a == 0 {
                continue;
            }
            let mut e = self.exponents.clone();
            e[j] -= 1;
            let g = T::of(f64::from(a)) * Self::unit_sup(&e, rho);
            s += g * g;
        }
        self.coefficient.abs() * s.sqrt()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Polynomial<T: Real> {
    pub terms: Vec<Monomial<T>>,
}

impl<T: Real> Polynomial<T> {
    pub fn new(terms: Vec<Monomial<T>>) -> Self {
        Self { terms }
    }

    pub fn eval(&self, x: &[T]) -> T {
        self.terms.iter().map(|m| m.eval(x)).sum()
    }

    pub fn gradient(&self, x: &[T]) -> Vec<T> {
        let mut g = vec![T::zero(); x.len()];
        for m in &self.terms {
            for (j, &a) in m.exponents.iter().enumerate() {
                if a == 0 {
                    continue;
                }
                let mut e = m.exponents.clone();
                e[j] -= 1;
                let d = Monomial { coefficient: m.coefficient * T::of(f64::from(a)), exponents: e };
                g[j] += d.eval(x);
            }
        }
        g
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn sup_on_ball(&self, rho: T) -> T {
        self.terms.iter().map(|m| m.sup_on_ball(rho)).sum()
    }

    pub fn gradient_sup_on_ball(&self, rho: T) -> T {
        self.terms.iter().map(|m| m.gradient_sup_on_ball(rho)).sum()
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|m| Monomial { coefficient: m.coefficient * s, exponents: m.exponents.clone() })
                .collect(),
        }
    }
}

/// One output coordinate of the nonlinear core.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialComponent<T: Real> {
    pub output: usize,
    pub polynomial: Polynomial<T>,
}

/// Cubic smoothstep cutoff: 1 on `[0, R]`, 0 on `[2R, ∞)`.
pub fn cutoff<T: Real>(r: T, radius: T) -> T {
    if r <= radius {
        return T::one();
    }
    if r >= radius * T::of(2.0) {
        return T::zero();
    }
    let s = (r - radius) / radius;
    T::one() - s * s * (T::of(3.0) - T::of(2.0) * s)
}

/// `dχ/dr`.
pub fn cutoff_derivative<T: Real>(r: T, radius: T) -> T {
    if r <= radius || r >= radius * T::of(2.0) {
        return T::zero();
    }
    let s = (r - radius) / radius;
    -T::of(6.0) * s * (T::one() - s) / radius
}

/// `sup |χ'| = 3/(2R)`.
pub fn cutoff_derivative_bound<T: Real>(radius: T) -> T {
    T::of(1.5) / radius
}

/// Compact nonlinearity `Q(x) = χ(‖x_J‖) P(x_J) + K x` where `J` is the input
/// support, `P` a polynomial map into finitely many output coordinates and
/// `K` a compact symmetric linear operator. The cutoff acts on `P` only.
#[derive(Clone, Debug, PartialEq)]
pub struct StructuredCompactMap<T: Real> {
    input_support: Vec<usize>,
    components: Vec<PolynomialComponent<T>>,
    cutoff_radius: T,
    linear: CompactLinear<T>,
}

impl<T: Real> StructuredCompactMap<T> {
    pub fn new(
        input_support: Vec<usize>,
        components: Vec<PolynomialComponent<T>>,
        cutoff_radius: T,
        linear: CompactLinear<T>,
    ) -> Result<Self> {
        let q = Self { input_support, components, cutoff_radius, linear };
        let problems = q.violations();
        if problems.is_empty() {
            Ok(q)
        } else {
            Err(ConleyError::Structural(problems.join("; ")))
        }
    }

    pub fn zero() -> Self {
        Self {
            input_support: Vec::new(),
            components: Vec::new(),
            cutoff_radius: T::one(),
            linear: CompactLinear::zero(),
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = self.input_support.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.input_support.len() {
            out.push("input_support indices must be distinct".to_string());
        }
        if !(self.cutoff_radius > T::zero()) || !self.cutoff_radius.is_finite() {
            out.push(format!(
                "cutoff_radius must be positive and finite, got {} (an uncut polynomial is not bounded)",
                self.cutoff_radius
            ));
        }
        for (n, c) in self.components.iter().enumerate() {
            for m in &c.polynomial.terms {
                if m.exponents.len() != self.input_support.len() {
                    out.push(format!(
                        "component {n}: monomial has {} exponents but input_support has {} entries",
                        m.exponents.len(),
                        self.input_support.len()
                    ));
                }
                if !m.coefficient.is_finite() {
                    out.push(format!("component {n}: non-finite coefficient"));
                }
            }
        }
        out
    }

    pub fn input_support(&self) -> &[usize] {
        &self.input_support
    }

    pub fn components(&self) -> &[PolynomialComponent<T>] {
        &self.components
    }

    pub fn cutoff_radius(&self) -> T {
        self.cutoff_radius
    }

    pub fn linear(&self) -> &CompactLinear<T> {
        &self.linear
    }

    pub fn has_nonlinear_part(&self) -> bool {
        self.components.iter().any(|c| c.polynomial.terms.iter().any(|m| m.coefficient != T::zero()))
    }

    pub fn is_zero(&self) -> bool {
        !self.has_nonlinear_part() && self.linear.is_zero()
    }

    /// Sorted distinct output coordinates of the polynomial part.
    pub fn output_indices(&self) -> Vec<usize> {
        let mut o: Vec<usize> = self.components.iter().map(|c| c.output).collect();
        o.sort_unstable();
        o.dedup();
        o
    }

    /// Polynomial part without the cutoff, as `(output, value)` pairs.
    pub fn polynomial_values(&self, xj: &[T]) -> BTreeMap<usize, T> {
        let mut y = BTreeMap::new();
        for c in &self.components {
            *y.entry(c.output).or_insert_with(T::zero) += c.polynomial.eval(xj);
        }
        y
    }

    /// `χ(‖x_J‖) P(x_J)`.
    pub fn apply_nonlinear(&self, x: &FiniteVector<T>) -> FiniteVector<T> {
        let xj = x.gather(&self.input_support);
        let r = xj.iter().map(|&v| v * v).sum::<T>().sqrt();
        let chi = cutoff(r, self.cutoff_radius);
        let mut y = FiniteVector::zero();
        if chi == T::zero() {
            return y;
        }
        for (o, v) in self.polynomial_values(&xj) {
            y.add_at(o, chi * v);
        }
        y
    }

    pub fn apply(&self, x: &FiniteVector<T>) -> FiniteVector<T> {
        self.apply_nonlinear(x).add(&self.linear.apply(x))
    }

    /// Per-output bounds of `sup_{‖x_J‖ ≤ ρ} |P_o|`.
    fn output_sups(&self, rho: T) -> BTreeMap<usize, T> {
        let mut s = BTreeMap::new();
        for c in &self.components {
            *s.entry(c.output).or_insert_with(T::zero) += c.polynomial.sup_on_ball(rho);
        }
        s
    }

    /// Bound on `sup_{‖x_J‖ ≤ ρ} ‖χP‖`; the cutoff caps `ρ` at `2R`.
    pub fn nonlinear_sup(&self, rho: T) -> T {
        let rho = rho.min(self.cutoff_radius * T::of(2.0));
        self.output_sups(rho).values().map(|&v| v * v).sum::<T>().sqrt()
    }

    /// Global bound `B = sup ‖χP‖`.
    pub fn global_bound(&self) -> T {
        self.nonlinear_sup(self.cutoff_radius * T::of(2.0))
    }

    /// Bound on the Lipschitz constant of `χP` on `‖x_J‖ ≤ ρ`.
    pub fn nonlinear_lipschitz(&self, rho: T) -> T {
        let r = rho.min(self.cutoff_radius * T::of(2.0));
        let mut grads: BTreeMap<usize, T> = BTreeMap::new();
        for c in &self.components {
            *grads.entry(c.output).or_insert_with(T::zero) += c.polynomial.gradient_sup_on_ball(r);
        }
        let dp = grads.values().map(|&v| v * v).sum::<T>().sqrt();
        let chi_term = if rho > self.cutoff_radius {
            self.nonlinear_sup(r) * cutoff_derivative_bound(self.cutoff_radius)
        } else {
            T::zero()
        };
        dp + chi_term
    }

    /// `Q − K` for a compact linear `K`.
    pub fn minus_linear(&self, k: &CompactLinear<T>) -> Self {
        Self { linear: self.linear.plus(&k.negated()), ..self.clone() }
    }

    /// `s·Q`.
    pub fn scaled(&self, s: T) -> Self {
        let components = self
            .components
            .iter()
            .map(|c| PolynomialComponent { output: c.output, polynomial: c.polynomial.scaled(s) })
            .collect();
        let linear = if s == T::zero() {
            CompactLinear::zero()
        } else {
            let diag = super::compact::DiagonalCompact {
                terms: self.linear.diagonal().terms.iter().map(|t| scale_term(t, s)).collect(),
            };
            CompactLinear::new(self.linear.core() * s, diag, T::infinity()).expect("scaled compact operator")
        };
        Self { components, linear, ..self.clone() }
    }
}

fn scale_term<T: Real>(t: &super::compact::DiagonalTerm<T>, s: T) -> super::compact::DiagonalTerm<T> {
    use super::compact::DiagonalTerm as D;
    match t {
        D::Geometric { first, ratio } => D::Geometric { first: *first * s, ratio: *ratio },
        D::Power { scale, exponent } => D::Power { scale: *scale * s, exponent: *exponent },
        D::Explicit(v) => D::Explicit(v.iter().map(|&x| x * s).collect()),
    }
}
