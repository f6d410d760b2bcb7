use super::field::FiniteField;
use crate::error::{ConleyError, Result};
use crate::scalar::Real;

/// One certified time-`τ` step of `v̇ = −f(v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowStep<T: Real> {
    pub start: Vec<T>,
    pub tau: T,
    pub end: Vec<T>,
    /// `(Σ local error estimates) · e^{Lip·τ}`, `Lip` taken near the trajectory.
    pub r_enc: T,
    /// Axis-aligned hull of the accepted trajectory points.
    pub hull_lo: Vec<T>,
    pub hull_hi: Vec<T>,
    pub steps: usize,
}

struct Workspace<T: Real> {
    k1: Vec<T>,
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    tmp: Vec<T>,
    scratch: Vec<T>,
}

impl<T: Real> Workspace<T> {
    fn new(d: usize) -> Self {
        let z = || vec![T::zero(); d];
        Self { k1: z(), k2: z(), k3: z(), k4: z(), tmp: z(), scratch: Vec::new() }
    }
}

/// Classical RK4 step for `v̇ = −f(v)`.
fn rk4<T: Real>(f: &FiniteField<T>, y: &[T], h: T, out: &mut [T], w: &mut Workspace<T>) {
    let d = y.len();
    let half = T::of(0.5);
    f.eval_into(y, &mut w.k1, &mut w.scratch);
    for i in 0..d {
        w.tmp[i] = y[i] - half * h * w.k1[i];
    }
    f.eval_into(&w.tmp, &mut w.k2, &mut w.scratch);
    for i in 0..d {
        w.tmp[i] = y[i] - half * h * w.k2[i];
    }
    f.eval_into(&w.tmp, &mut w.k3, &mut w.scratch);
    for i in 0..d {
        w.tmp[i] = y[i] - h * w.k3[i];
    }
    f.eval_into(&w.tmp, &mut w.k4, &mut w.scratch);
    let sixth = T::one() / T::of(6.0);
    for i in 0..d {
        out[i] = y[i] - h * sixth * (w.k1[i] + T::of(2.0) * (w.k2[i] + w.k3[i]) + w.k4[i]);
    }
}

fn dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum::<T>().sqrt()
}

/// `err · e^{Lip_loc·τ}` with `Lip_loc` the field's Lipschitz constant on a
/// ball around the trajectory hull wide enough to hold the resulting
/// enclosure; falls back to the global constant.
fn propagated_error<T: Real>(f: &FiniteField<T>, lo: &[T], hi: &[T], err: T, tau: T) -> T {
    let hull = lo.iter().zip(hi).map(|(&a, &b)| a.abs().max(b.abs()).powi(2)).sum::<T>().sqrt();
    let global = err * (f.lipschitz() * tau).exp();
    let mut slack = (T::of(10.0) * err).max(T::of(1e-6) * (T::one() + hull));
    for _ in 0..8 {
        let lip = f.linear_norm() + f.nonlinear_lipschitz_on_ball(hull + slack);
        let r = err * (lip * tau).exp();
        if r <= slack {
            return r.min(global);
        }
        slack = r * T::of(2.0);
    }
    global
}

/// Integrates `v̇ = −f(v)` from `x` for time `τ` with RK4 step doubling
/// (Richardson-extrapolated). Each step's error estimate is held below
/// `tol·h/τ`, so the accumulated estimate is at most `tol`.
pub fn time_tau_map<T: Real>(f: &FiniteField<T>, x: &[T], tau: T, tol: T) -> Result<FlowStep<T>> {
    integrate(f, x, tau, tol, None)
}

/// Accepted points of an integration: `knots[k + 1]` follows `knots[k]`
/// after time `dts[k]`.
#[derive(Clone, Debug, Default)]
pub(crate) struct Path<T: Real> {
    pub knots: Vec<Vec<T>>,
    pub dts: Vec<T>,
}

/// [`time_tau_map`] that also returns the accepted points.
pub(crate) fn time_tau_path<T: Real>(f: &FiniteField<T>, x: &[T], tau: T, tol: T) -> Result<(FlowStep<T>, Path<T>)> {
    let mut path = Path { knots: vec![x.to_vec()], dts: Vec::new() };
    let step = integrate(f, x, tau, tol, Some(&mut path))?;
    Ok((step, path))
}

fn integrate<T: Real>(
    f: &FiniteField<T>,
    x: &[T],
    tau: T,
    tol: T,
    mut path: Option<&mut Path<T>>,
) -> Result<FlowStep<T>> {
    let d = f.dim();
    if x.len() != d {
        return Err(ConleyError::Argument(format!("point has {} coordinates, field has {d}", x.len())));
    }
    if !(tau > T::zero()) || !(tol > T::zero()) {
        return Err(ConleyError::Argument("tau and tol must be positive".into()));
    }
    if !f.in_domain(x) {
        return Err(ConleyError::BoxExit { t_lo: 0.0, t_hi: 0.0 });
    }
    let mut w = Workspace::new(d);
    let mut y = x.to_vec();
    let mut full = vec![T::zero(); d];
    let mut mid = vec![T::zero(); d];
    let mut fine = vec![T::zero(); d];
    let mut hull_lo = y.clone();
    let mut hull_hi = y.clone();
    let mut t = T::zero();
    let scale = f.norm_bound().max(f.lipschitz()).max(T::one());
    let mut h = (tau / T::of(8.0)).min(T::of(0.5) / scale);
    let mut err_sum = T::zero();
    let mut steps = 0usize;
    let fifteen = T::of(15.0);
    let min_h = tau * T::of(1e-12);
    while t < tau {
        if t + h > tau {
            h = tau - t;
        }
        rk4(f, &y, h, &mut full, &mut w);
        let hh = h * T::of(0.5);
        rk4(f, &y, hh, &mut mid, &mut w);
        rk4(f, &mid, hh, &mut fine, &mut w);
        let err = dist(&fine, &full) / fifteen;
        // Error per unit time, so the accumulated estimate stays below `tol`.
        let budget = tol * h / tau;
        if err <= budget || h <= min_h {
            for i in 0..d {
                let c = (fine[i] - full[i]) / fifteen;
                fine[i] += c;
            }
            let t_next = if tau - (t + h) <= min_h { tau } else { t + h };
            if !f.in_domain(&mid) || !f.in_domain(&fine) {
                return Err(ConleyError::BoxExit { t_lo: t.to_f64_lossy(), t_hi: t_next.to_f64_lossy() });
            }
            for i in 0..d {
                for p in [mid[i], fine[i]] {
                    hull_lo[i] = hull_lo[i].min(p);
                    hull_hi[i] = hull_hi[i].max(p);
                }
            }
            y.copy_from_slice(&fine);
            if let Some(p) = path.as_deref_mut() {
                p.knots.push(y.clone());
                p.dts.push(t_next - t);
            }
            t = t_next;
            err_sum += err;
            steps += 1;
        }
        let factor = if err == T::zero() {
            T::of(4.0)
        } else {
            (T::of(0.9) * (budget / err).powf(T::of(0.25))).max(T::of(0.1)).min(T::of(4.0))
        };
        h = (h * factor).max(min_h);
        if !y.iter().all(|v| v.is_finite()) {
            return Err(ConleyError::BoxExit { t_lo: t.to_f64_lossy(), t_hi: tau.to_f64_lossy() });
        }
    }
    let r_enc = propagated_error(f, &hull_lo, &hull_hi, err_sum, tau);
    Ok(FlowStep { start: x.to_vec(), tau, end: y, r_enc, hull_lo, hull_hi, steps })
}
