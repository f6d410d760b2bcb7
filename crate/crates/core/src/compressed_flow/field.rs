use nalgebra::DMatrix;

use super::interval::Interval;
use crate::error::{ConleyError, Result};
use crate::linalg;
use crate::scalar::Real;
use crate::spectral_model::map::cutoff;
use crate::spectral_model::{Frame, PermissibleField, Polynomial, PolynomialComponent, StructuredCompactMap};

/// `weight · output · χ(‖input·v‖) P(input·v)` in frame coordinates.
///
/// `map` is expressed in local indices: inputs `0..input.nrows()`, outputs
/// `0..output.ncols()`.
#[derive(Clone, Debug, PartialEq)]
pub struct NonlinearTerm<T: Real> {
    pub weight: T,
    pub map: StructuredCompactMap<T>,
    pub input: DMatrix<T>,
    pub output: DMatrix<T>,
}

impl<T: Real> NonlinearTerm<T> {
    fn add_to(&self, v: &[T], out: &mut [T], xj: &mut Vec<T>) {
        xj.clear();
        for r in 0..self.input.nrows() {
            let mut s = T::zero();
            for (c, &vc) in v.iter().enumerate() {
                s += self.input[(r, c)] * vc;
            }
            xj.push(s);
        }
        let rad = xj.iter().map(|&a| a * a).sum::<T>().sqrt();
        let chi = cutoff(rad, self.map.cutoff_radius());
        if chi == T::zero() {
            return;
        }
        for comp in self.map.components() {
            let p = comp.polynomial.eval(xj) * chi * self.weight;
            if p == T::zero() {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.output[(i, comp.output)] * p;
            }
        }
    }

    /// Bound on `sup ‖term‖` for `‖v‖ ≤ rho`.
    fn sup_on_ball(&self, rho: T) -> T {
        let ni = linalg::operator_norm(&self.input);
        self.weight.abs() * linalg::operator_norm(&self.output) * self.map.nonlinear_sup(ni * rho)
    }

    fn lipschitz_on_ball(&self, rho: T) -> T {
        let ni = linalg::operator_norm(&self.input);
        self.weight.abs() * linalg::operator_norm(&self.output) * ni * self.map.nonlinear_lipschitz(ni * rho)
    }

    /// Midpoint and radius matrices enclosing the Jacobian of the term on
    /// the box `[lo, hi]`, or `None` where the cutoff is not constant.
    fn jacobian_on_box(&self, lo: &[T], hi: &[T]) -> Option<(DMatrix<T>, DMatrix<T>)> {
        let (ni, d) = (self.input.nrows(), self.input.ncols());
        let mut u = Vec::with_capacity(ni);
        let mut reach = T::zero();
        for r in 0..ni {
            let (mut m, mut w) = (T::zero(), T::zero());
            for c in 0..d {
                let a = self.input[(r, c)];
                m += a * (lo[c] + hi[c]) * T::of(0.5);
                w += a.abs() * (hi[c] - lo[c]) * T::of(0.5);
            }
            let w = w + m.abs() * T::epsilon() * T::of(8.0);
            reach += (m.abs() + w).powi(2);
            u.push(Interval::new(m - w, m + w));
        }
        if reach.sqrt() > self.map.cutoff_radius() {
            return None;
        }
        let no = self.output.ncols();
        let mut dp = vec![vec![Interval::point(T::zero()); ni]; no];
        for comp in self.map.components() {
            for mono in &comp.polynomial.terms {
                for (j, &a) in mono.exponents.iter().enumerate() {
                    if a == 0 {
                        continue;
                    }
                    let mut v = Interval::point(mono.coefficient * T::of(f64::from(a)));
                    for (k, &e) in mono.exponents.iter().enumerate() {
                        let e = if k == j { e - 1 } else { e };
                        v = v.mul(u[k].powi(e));
                    }
                    dp[comp.output][j] = dp[comp.output][j].add(v);
                }
            }
        }
        let pm = DMatrix::from_fn(no, ni, |r, c| dp[r][c].mid());
        let pr = DMatrix::from_fn(no, ni, |r, c| dp[r][c].rad());
        let w = self.weight;
        let mid = &self.output * &pm * &self.input * w;
        let rad = linalg::abs_matrix(&self.output) * &pr * linalg::abs_matrix(&self.input) * w.abs();
        Some((mid, rad))
    }

    fn is_trivial(&self) -> bool {
        self.weight == T::zero() || !self.map.has_nonlinear_part()
    }

    fn transformed(&self, r: &DMatrix<T>) -> Self {
        Self {
            weight: self.weight,
            map: self.map.clone(),
            input: &self.input * r,
            output: r.transpose() * &self.output,
        }
    }
}

/// Vector field `v ↦ A v + Σ N_k(v)` on the frame coordinates of `V`, with
/// bounds on a per-axis box `|v_i| ≤ domain[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteField<T: Real> {
    frame: Frame<T>,
    linear: DMatrix<T>,
    terms: Vec<NonlinearTerm<T>>,
    domain: Vec<T>,
    lipschitz: T,
    norm_bound: T,
    linear_norm: T,
}

impl<T: Real> FiniteField<T> {
    pub fn from_parts(frame: Frame<T>, linear: DMatrix<T>, terms: Vec<NonlinearTerm<T>>) -> Result<Self> {
        let d = frame.dim();
        if linear.nrows() != d || linear.ncols() != d {
            return Err(ConleyError::Argument(format!("linear part must be {d}x{d}")));
        }
        for t in &terms {
            if t.input.ncols() != d || t.output.nrows() != d {
                return Err(ConleyError::Argument("nonlinear term does not match the frame dimension".into()));
            }
        }
        let terms = terms.into_iter().filter(|t| !t.is_trivial()).collect();
        let mut f = Self {
            frame,
            linear,
            terms,
            domain: vec![T::one(); d],
            lipschitz: T::zero(),
            norm_bound: T::zero(),
            linear_norm: T::zero(),
        };
        f.refresh_bounds();
        Ok(f)
    }

    fn refresh_bounds(&mut self) {
        let rho = self.domain.iter().map(|&h| h * h).sum::<T>().sqrt();
        let a = linalg::operator_norm(&self.linear);
        self.linear_norm = a;
        self.norm_bound = a * rho + self.terms.iter().map(|t| t.sup_on_ball(rho)).sum::<T>();
        self.lipschitz = a + self.nonlinear_lipschitz_on_ball(rho);
    }

    /// Same field with bounds stated on `|v_i| ≤ half_widths[i]`.
    pub fn with_domain(mut self, half_widths: Vec<T>) -> Result<Self> {
        if half_widths.len() != self.dim() || half_widths.iter().any(|h| !(*h > T::zero())) {
            return Err(ConleyError::Argument("domain needs one positive half-width per axis".into()));
        }
        self.domain = half_widths;
        self.refresh_bounds();
        Ok(self)
    }

    pub fn frame(&self) -> &Frame<T> {
        &self.frame
    }

    pub fn dim(&self) -> usize {
        self.frame.dim()
    }

    pub fn linear(&self) -> &DMatrix<T> {
        &self.linear
    }

    pub fn terms(&self) -> &[NonlinearTerm<T>] {
        &self.terms
    }

    pub fn domain(&self) -> &[T] {
        &self.domain
    }

    pub fn lipschitz(&self) -> T {
        self.lipschitz
    }

    pub fn norm_bound(&self) -> T {
        self.norm_bound
    }

    pub fn linear_norm(&self) -> T {
        self.linear_norm
    }

    pub fn is_linear(&self) -> bool {
        self.terms.is_empty()
    }

    /// Lipschitz bound of the nonlinear part on `‖v‖ ≤ rho`.
    pub fn nonlinear_lipschitz_on_ball(&self, rho: T) -> T {
        self.terms.iter().map(|t| t.lipschitz_on_ball(rho)).sum()
    }

    /// Bound on `sup ‖f‖` for `‖v‖ ≤ rho`.
    pub fn norm_on_ball(&self, rho: T) -> T {
        self.linear_norm() * rho + self.terms.iter().map(|t| t.sup_on_ball(rho)).sum::<T>()
    }

    /// Upper bound on the logarithmic 2-norm `λ_max(sym J)` of the Jacobian
    /// `J` of `v ↦ −f(v)` over the box `[lo, hi]`. Terms whose cutoff varies
    /// on the box contribute their Lipschitz bound.
    pub fn log_norm_on_box(&self, lo: &[T], hi: &[T]) -> T {
        let d = self.dim();
        let mut mid = -self.linear.clone();
        let mut rad = DMatrix::zeros(d, d);
        let mut extra = T::zero();
        let reach = lo.iter().zip(hi).map(|(a, b)| a.abs().max(b.abs()).powi(2)).sum::<T>().sqrt();
        for t in &self.terms {
            match t.jacobian_on_box(lo, hi) {
                Some((m, r)) => {
                    mid -= m;
                    rad += r;
                }
                None => extra += t.lipschitz_on_ball(reach),
            }
        }
        let sym = (&mid + mid.transpose()) * T::of(0.5);
        let top = linalg::sym_eigen(&sym).values.iter().copied().fold(T::neg_infinity(), T::max);
        let spread = ((&rad + rad.transpose()) * T::of(0.5)).iter().map(|&x| x * x).sum::<T>().sqrt();
        let slack = (linalg::max_abs(&sym) + spread) * T::epsilon() * T::of(64.0);
        top + spread + extra + slack
    }

    pub fn in_domain(&self, v: &[T]) -> bool {
        v.iter().zip(&self.domain).all(|(x, h)| x.abs() <= *h)
    }

    pub fn eval_into(&self, v: &[T], out: &mut [T], scratch: &mut Vec<T>) {
        let d = self.dim();
        for i in 0..d {
            let mut s = T::zero();
            for j in 0..d {
                s += self.linear[(i, j)] * v[j];
            }
            out[i] = s;
        }
        for t in &self.terms {
            t.add_to(v, out, scratch);
        }
    }

    pub fn eval(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim()];
        let mut scratch = Vec::new();
        self.eval_into(v, &mut out, &mut scratch);
        out
    }

    /// Field in the rotated coordinates `v = R v'` of the frame `ΦR`.
    pub fn rotated(&self, r: &DMatrix<T>) -> Result<Self> {
        let frame = self.frame.rotated(r)?;
        let linear = r.transpose() * &self.linear * r;
        let terms = self.terms.iter().map(|t| t.transformed(r)).collect();
        let d = self.dim();
        // The old box is contained in the new box of half-width ‖domain‖.
        let rho = self.domain.iter().map(|&h| h * h).sum::<T>().sqrt();
        Self::from_parts(frame, linear, terms)?.with_domain(vec![rho; d])
    }

    /// Partition of the axes into structurally decoupled blocks: axes are
    /// joined by nonzero linear entries and by sharing a nonlinear term.
    pub fn coupling_blocks(&self) -> Vec<Vec<usize>> {
        let d = self.dim();
        let mut parent: Vec<usize> = (0..d).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let join = |p: &mut Vec<usize>, a: usize, b: usize| {
            let (ra, rb) = (find(p, a), find(p, b));
            if ra != rb {
                p[ra.max(rb)] = ra.min(rb);
            }
        };
        for i in 0..d {
            for j in 0..d {
                if i != j && self.linear[(i, j)] != T::zero() {
                    join(&mut parent, i, j);
                }
            }
        }
        for t in &self.terms {
            let axes: Vec<usize> = (0..d)
                .filter(|&a| {
                    t.input.column(a).iter().any(|x| *x != T::zero()) || t.output.row(a).iter().any(|x| *x != T::zero())
                })
                .collect();
            for w in axes.windows(2) {
                join(&mut parent, w[0], w[1]);
            }
        }
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut root_of: Vec<Option<usize>> = vec![None; d];
        for a in 0..d {
            let r = find(&mut parent, a);
            match root_of[r] {
                Some(b) => blocks[b].push(a),
                None => {
                    root_of[r] = Some(blocks.len());
                    blocks.push(vec![a]);
                }
            }
        }
        blocks
    }

    /// Field restricted to a decoupled block of axes.
    pub fn restrict(&self, axes: &[usize]) -> Result<Self> {
        let blocks = self.coupling_blocks();
        let closed = blocks.iter().all(|b| b.iter().all(|a| axes.contains(a)) || b.iter().all(|a| !axes.contains(a)));
        if !closed {
            return Err(ConleyError::Argument("axes do not form a union of decoupled blocks".into()));
        }
        let frame = self.frame.select_columns(axes);
        let linear = DMatrix::from_fn(axes.len(), axes.len(), |r, c| self.linear[(axes[r], axes[c])]);
        let terms = self
            .terms
            .iter()
            .filter(|t| {
                axes.iter().any(|&a| {
                    t.input.column(a).iter().any(|x| *x != T::zero()) || t.output.row(a).iter().any(|x| *x != T::zero())
                })
            })
            .map(|t| NonlinearTerm {
                weight: t.weight,
                map: t.map.clone(),
                input: DMatrix::from_fn(t.input.nrows(), axes.len(), |r, c| t.input[(r, axes[c])]),
                output: DMatrix::from_fn(axes.len(), t.output.ncols(), |r, c| t.output[(axes[r], c)]),
            })
            .collect();
        let domain = axes.iter().map(|&a| self.domain[a]).collect();
        Self::from_parts(frame, linear, terms)?.with_domain(domain)
    }
}

/// Local-index copy of the polynomial part of `Q` and its input/output
/// coordinate lists.
fn localized<T: Real>(q: &StructuredCompactMap<T>) -> (StructuredCompactMap<T>, Vec<usize>, Vec<usize>) {
    let inputs = q.input_support().to_vec();
    let outputs = q.output_indices();
    let comps = q
        .components()
        .iter()
        .map(|c| PolynomialComponent {
            output: outputs.iter().position(|&o| o == c.output).unwrap(),
            polynomial: c.polynomial.clone(),
        })
        .collect();
    let local = StructuredCompactMap::new((0..inputs.len()).collect(), comps, q.cutoff_radius(), Default::default())
        .expect("localized copy of a valid map");
    (local, inputs, outputs)
}

fn rows_of<T: Real>(phi: &Frame<T>, coords: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(coords.len(), phi.dim(), |r, c| {
        phi.support().iter().position(|&i| i == coords[r]).map_or(T::zero(), |k| phi.columns()[(k, c)])
    })
}

fn nonlinear_term<T: Real>(
    q: &StructuredCompactMap<T>,
    frame: &Frame<T>,
    out_proj: Option<&DMatrix<T>>,
) -> Option<NonlinearTerm<T>> {
    if !q.has_nonlinear_part() {
        return None;
    }
    let (map, inputs, outputs) = localized(q);
    let input = rows_of(frame, &inputs);
    let mut output = rows_of(frame, &outputs).transpose();
    if let Some(p) = out_proj {
        output = p * output;
    }
    Some(NonlinearTerm { weight: T::one(), map, input, output })
}

/// Restriction of `F_V` to `V`, i.e. `π_V F` in frame coordinates. The
/// linear part is the compression of the whole linear part of `F`, so the
/// result does not depend on the decomposition.
pub fn compress_field<T: Real>(f: &PermissibleField<T>, v: &Frame<T>) -> FiniteField<T> {
    let s = v.support();
    let phi = v.columns();
    let lin = f.operator().block(s) + f.map().linear().block(s);
    let linear = phi.transpose() * lin * phi;
    let terms = nonlinear_term(f.map(), v, None).into_iter().collect();
    FiniteField::from_parts(v.clone(), linear, terms).expect("dimensions agree by construction")
}

/// `F_{V,W} = π_V Lπ_V + π_U Lπ_U + π_V Q` restricted to `W`, `U = W ⊖ V`.
pub fn intermediate_field<T: Real>(f: &PermissibleField<T>, v: &Frame<T>, w: &Frame<T>) -> Result<FiniteField<T>> {
    let tol = T::of(1e-9);
    let defect = w.containment_defect(v);
    if defect > tol {
        return Err(ConleyError::Argument(format!("V is not contained in W (defect {defect})")));
    }
    let u = w.complement_of(v, tol)?;
    let (pv, pu) = intermediate_projectors(v, &u, w);
    let s = w.support();
    let psi = w.columns();
    let ml = psi.transpose() * f.operator().block(s) * psi;
    let mk = psi.transpose() * f.map().linear().block(s) * psi;
    let linear = &pv * &ml * &pv + &pu * &ml * &pu + &pv * mk;
    let terms = nonlinear_term(f.map(), w, Some(&pv)).into_iter().collect();
    FiniteField::from_parts(w.clone(), linear, terms)
}

/// `π_V`, `π_U` in the coordinates of `W`.
pub fn intermediate_projectors<T: Real>(v: &Frame<T>, u: &Frame<T>, w: &Frame<T>) -> (DMatrix<T>, DMatrix<T>) {
    let bv = rows_of(v, w.support()).transpose() * w.columns();
    let bu = rows_of(u, w.support()).transpose() * w.columns();
    (bv.transpose() * &bv, bu.transpose() * &bu)
}

/// `(1 − s) fA + s fB`.
pub fn homotopy_family<T: Real>(fa: &FiniteField<T>, fb: &FiniteField<T>, s: T) -> Result<FiniteField<T>> {
    if fa.frame != fb.frame {
        return Err(ConleyError::Argument("homotopy needs fields on the same frame".into()));
    }
    if !(s >= T::zero() && s <= T::one()) {
        return Err(ConleyError::Argument(format!("homotopy parameter {s} outside [0, 1]")));
    }
    let linear = &fa.linear * (T::one() - s) + &fb.linear * s;
    let mut terms: Vec<NonlinearTerm<T>> =
        fa.terms.iter().map(|t| NonlinearTerm { weight: t.weight * (T::one() - s), ..t.clone() }).collect();
    terms.extend(fb.terms.iter().map(|t| NonlinearTerm { weight: t.weight * s, ..t.clone() }));
    let domain = fa.domain.iter().zip(&fb.domain).map(|(a, b)| a.max(*b)).collect();
    FiniteField::from_parts(fa.frame.clone(), linear, terms)?.with_domain(domain)
}

/// Product field on `V₁ ⊕ V₂`; supports must be disjoint.
pub fn product_field<T: Real>(f1: &FiniteField<T>, f2: &FiniteField<T>) -> Result<FiniteField<T>> {
    let frame = f1.frame.direct_sum(&f2.frame)?;
    let (d1, d2) = (f1.dim(), f2.dim());
    let d = d1 + d2;
    let linear = DMatrix::from_fn(d, d, |r, c| match (r < d1, c < d1) {
        (true, true) => f1.linear[(r, c)],
        (false, false) => f2.linear[(r - d1, c - d1)],
        _ => T::zero(),
    });
    let mut terms = Vec::new();
    for t in &f1.terms {
        terms.push(NonlinearTerm {
            weight: t.weight,
            map: t.map.clone(),
            input: DMatrix::from_fn(t.input.nrows(), d, |r, c| if c < d1 { t.input[(r, c)] } else { T::zero() }),
            output: DMatrix::from_fn(d, t.output.ncols(), |r, c| if r < d1 { t.output[(r, c)] } else { T::zero() }),
        });
    }
    for t in &f2.terms {
        terms.push(NonlinearTerm {
            weight: t.weight,
            map: t.map.clone(),
            input: DMatrix::from_fn(t.input.nrows(), d, |r, c| if c >= d1 { t.input[(r, c - d1)] } else { T::zero() }),
            output: DMatrix::from_fn(
                d,
                t.output.ncols(),
                |r, c| if r >= d1 { t.output[(r - d1, c)] } else { T::zero() },
            ),
        });
    }
    let mut domain = f1.domain.clone();
    domain.extend_from_slice(&f2.domain);
    FiniteField::from_parts(frame, linear, terms)?.with_domain(domain)
}

/// Merge like monomials of a component list.
fn merged<T: Real>(components: Vec<PolynomialComponent<T>>) -> Vec<PolynomialComponent<T>> {
    use std::collections::BTreeMap;
    let mut acc: BTreeMap<(usize, Vec<u32>), T> = BTreeMap::new();
    for c in components {
        for m in c.polynomial.terms {
            *acc.entry((c.output, m.exponents)).or_insert_with(T::zero) += m.coefficient;
        }
    }
    let mut out: BTreeMap<usize, Vec<crate::spectral_model::Monomial<T>>> = BTreeMap::new();
    for ((o, e), c) in acc {
        if c != T::zero() {
            out.entry(o).or_default().push(crate::spectral_model::Monomial { coefficient: c, exponents: e });
        }
    }
    out.into_iter().map(|(output, terms)| PolynomialComponent { output, polynomial: Polynomial::new(terms) }).collect()
}

/// `Q₁ − Q₂` as a structured map when the polynomial parts share inputs and
/// cutoff; otherwise `None`.
fn map_difference<T: Real>(
    q1: &StructuredCompactMap<T>,
    q2: &StructuredCompactMap<T>,
) -> Option<StructuredCompactMap<T>> {
    if q1.input_support() != q2.input_support() || q1.cutoff_radius() != q2.cutoff_radius() {
        return None;
    }
    let mut comps = q1.components().to_vec();
    comps.extend(
        q2.components()
            .iter()
            .map(|c| PolynomialComponent { output: c.output, polynomial: c.polynomial.scaled(-T::one()) }),
    );
    let linear = q1.linear().plus(&q2.linear().negated());
    StructuredCompactMap::new(q1.input_support().to_vec(), merged(comps), q1.cutoff_radius(), linear).ok()
}

/// `‖L₁ − L₂‖ + sup_{x ∈ X} ‖(Q₁ − Q₂)x‖` with the supremum bounded by the
/// structural residual machinery.
pub fn decomposition_pseudometric<T: Real>(
    a: &PermissibleField<T>,
    b: &PermissibleField<T>,
    x: &crate::spectral_model::Neighborhood<T>,
) -> T {
    use crate::subspace_lab::residual_compact_norm;
    let lin = a.operator().distance(b.operator());
    let empty = Frame::empty();
    let sup = match map_difference(a.map(), b.map()) {
        Some(d) => residual_compact_norm(&d, &empty, x).upper,
        None => residual_compact_norm(a.map(), &empty, x).upper + residual_compact_norm(b.map(), &empty, x).upper,
    };
    lin + sup
}

/// `‖L − π_V Lπ_V − π_U Lπ_U − (1 − π_W)L(1 − π_W)‖` for `V ⊂ W`.
pub fn block_defect_norm<T: Real>(
    l: &crate::spectral_model::SpectralOperator<T>,
    v: &Frame<T>,
    w: &Frame<T>,
) -> Result<T> {
    let u = w.complement_of(v, T::of(1e-9))?;
    let c = l.invariant_closure(w.support());
    let a = l.block(&c);
    let proj = |f: &Frame<T>| -> DMatrix<T> {
        if f.dim() == 0 {
            return DMatrix::zeros(c.len(), c.len());
        }
        let p = rows_of(f, &c);
        &p * p.transpose()
    };
    let (pv, pu, pw) = (proj(v), proj(&u), proj(w));
    let qw = DMatrix::identity(c.len(), c.len()) - &pw;
    let m = &a - &pv * &a * &pv - &pu * &a * &pu - &qw * &a * &qw;
    Ok(linalg::operator_norm(&m))
}
