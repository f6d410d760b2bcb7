use rayon::prelude::*;

use super::grid::CubicalGrid;
use crate::compressed_flow::{time_tau_path, FiniteField};
use crate::error::{ConleyError, Result};
use crate::linalg;
use crate::scalar::Real;

/// Multivalued map on grid cubes in compressed-sparse-row form. Node
/// `len()` is `OUTSIDE`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OuterMap {
    shape: Vec<usize>,
    support: Vec<usize>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl OuterMap {
    /// Map from explicit image lists; `adjacency[c]` may contain
    /// `OUTSIDE = ∏ shape`.
    pub fn from_adjacency(shape: Vec<usize>, support: Vec<usize>, adjacency: Vec<Vec<usize>>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if adjacency.len() != n {
            return Err(ConleyError::Argument(format!("{} image lists for {n} cubes", adjacency.len())));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for (c, mut img) in adjacency.into_iter().enumerate() {
            if img.is_empty() {
                return Err(ConleyError::Argument(format!("cube {c} has an empty image")));
            }
            if img.iter().any(|&t| t > n) {
                return Err(ConleyError::Argument(format!("cube {c} maps past OUTSIDE")));
            }
            img.sort_unstable();
            img.dedup();
            targets.extend(img);
            offsets.push(targets.len());
        }
        Ok(Self { shape, support, offsets, targets })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Ambient coordinates of the frame the grid lives on.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn outside(&self) -> usize {
        self.len()
    }

    /// Image of a cube, ascending; may end with `OUTSIDE`.
    pub fn image(&self, c: usize) -> &[usize] {
        &self.targets[self.offsets[c]..self.offsets[c + 1]]
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }
}

/// Per-cube image box before it is intersected with the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageBox<T: Real> {
    pub lo: Vec<T>,
    pub hi: Vec<T>,
}

/// Bounds shared by every cube of one outer map.
struct Enclosure<T: Real> {
    propagator: nalgebra::DMatrix<T>,
    linear_norm: T,
    lipschitz: T,
}

impl<T: Real> Enclosure<T> {
    fn new(f: &FiniteField<T>, tau: T) -> Self {
        let a = f.linear();
        let propagator = linalg::abs_matrix(&linalg::expm(&(a * (-tau))));
        Self { propagator, linear_norm: f.linear_norm(), lipschitz: f.lipschitz() }
    }
}

/// Image box of the cube with center `c` and half-widths `hw` under the
/// time-`τ` map, or `None` when the center trajectory leaves the field's box.
///
/// The spread `s(t) ≥ ‖φ_t(y) − φ_t(c)‖` over the cube starts at `‖hw‖` and
/// is advanced along the accepted integrator steps by `e^{μ h}`, with `μ` a
/// bound on the logarithmic norm of the Jacobian over a box holding every
/// trajectory during the step. That box is found with the local Lipschitz
/// constant. Independently, `z(τ) = e^{−τA}δ − ∫ e^{−(τ−s)A}(N(φ_s y) −
/// N(φ_s c)) ds` gives `|z_i(τ)| ≤ (|e^{−τA}| hw)_i + τ L_N e^{(‖A‖+L_N)τ}
/// ‖hw‖`. The smaller radius is used per component and the integration error
/// `r_enc` is added. A center trajectory that leaves the field's box maps to
/// `OUTSIDE` only. When only the box-wide constants bound a step and the
/// enclosure would leave the field's box, the image covers the whole box.
fn image_box<T: Real>(
    f: &FiniteField<T>,
    enc: &Enclosure<T>,
    c: &[T],
    hw: &[T],
    tau: T,
    tol: T,
) -> Result<Option<ImageBox<T>>> {
    let (step, path) = match time_tau_path(f, c, tau, tol) {
        Ok(s) => s,
        Err(ConleyError::BoxExit { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let norm = |v: &[T]| v.iter().map(|&a| a * a).sum::<T>().sqrt();
    let hwn = norm(hw);
    let d = c.len();
    let mut s = hwn;
    let mut widest = s;
    let mut reach = T::zero();
    for (k, &h) in path.dts.iter().enumerate() {
        let (a, b) = (&path.knots[k], &path.knots[k + 1]);
        let na = norm(a).max(norm(b));
        // The center moves at most `drift` away from the chord during the step.
        let mut drift = h * f.norm_bound();
        // Ball bounds hold everywhere; the global ones only on the field's box.
        let mut local = false;
        let mut guess = h * (norm(&f.eval(a)) + T::one()) * T::of(2.0);
        for _ in 0..8 {
            let r = h * f.norm_on_ball(na + guess);
            if r <= guess {
                drift = r.min(drift);
                local = true;
                break;
            }
            guess = r * T::of(2.0);
        }
        let base = na + drift + step.r_enc;
        let mut guess = s * T::of(2.0);
        let mut lip = enc.lipschitz;
        let mut contained = false;
        for _ in 0..8 {
            let l = enc.linear_norm + f.nonlinear_lipschitz_on_ball(base + guess);
            if s * (l * h).exp() <= guess {
                lip = l.min(enc.lipschitz);
                contained = true;
                break;
            }
            guess *= T::of(2.0);
        }
        let grown = s * (lip * h).exp();
        let pad = drift + step.r_enc + grown;
        let lo: Vec<T> = (0..d).map(|i| a[i].min(b[i]) - pad).collect();
        let hi: Vec<T> = (0..d).map(|i| a[i].max(b[i]) + pad).collect();
        let inside = lo.iter().zip(&hi).zip(f.domain()).all(|((l, u), w)| l.abs() <= *w && u.abs() <= *w);
        if !(local && contained) && !inside {
            // No bound holds: the image may be anywhere.
            let w = f.domain();
            return Ok(Some(ImageBox { lo: w.iter().map(|&x| -x).collect(), hi: w.to_vec() }));
        }
        let mu = f.log_norm_on_box(&lo, &hi).min(lip);
        s *= (mu * h).exp();
        widest = widest.max(grown);
        reach = reach.max(base + grown);
    }
    let ln = f.nonlinear_lipschitz_on_ball(reach.max(norm(c) + hwn));
    let coupled = tau * ln * ((enc.linear_norm + ln) * tau).exp() * hwn;
    let mut lo = Vec::with_capacity(d);
    let mut hi = Vec::with_capacity(d);
    for i in 0..d {
        let lin: T = (0..d).map(|j| enc.propagator[(i, j)] * hw[j]).sum();
        // Rounding in the box arithmetic itself.
        let ulps = (step.end[i].abs() + hw[i] + widest) * T::epsilon() * T::of(64.0);
        let r = (lin + coupled).min(s) + step.r_enc + ulps;
        lo.push(step.end[i] - r);
        hi.push(step.end[i] + r);
    }
    Ok(Some(ImageBox { lo, hi }))
}

/// Image boxes for every cube of the grid (in cube order). `None` marks a
/// cube whose center trajectory leaves the field's box.
pub fn image_boxes<T: Real>(
    f: &FiniteField<T>,
    grid: &CubicalGrid<T>,
    tau: T,
    tol: T,
) -> Result<Vec<Option<ImageBox<T>>>> {
    check_inputs(f, grid, tau, tol)?;
    let enc = Enclosure::new(f, tau);
    let hw: Vec<T> = (0..grid.dim()).map(|i| grid.cube_size(i) * T::of(0.5)).collect();
    (0..grid.len()).into_par_iter().map(|id| image_box(f, &enc, &grid.center(id), &hw, tau, tol)).collect()
}

fn check_inputs<T: Real>(f: &FiniteField<T>, grid: &CubicalGrid<T>, tau: T, tol: T) -> Result<()> {
    if f.dim() != grid.dim() {
        return Err(ConleyError::Argument(format!("field has dimension {}, grid {}", f.dim(), grid.dim())));
    }
    if grid.half_widths().iter().zip(f.domain()).any(|(w, h)| w > h) {
        return Err(ConleyError::Argument("grid box is not inside the field's box".into()));
    }
    if !(tau > T::zero() && tol > T::zero()) {
        return Err(ConleyError::Argument("tau and tol must be positive".into()));
    }
    Ok(())
}

/// Outer approximation of the time-`τ` map of `v̇ = −f(v)` on `grid`.
///
/// Every cube maps to the cubes meeting its inflated image box, plus
/// `OUTSIDE` when that box leaves the grid or the trajectory leaves the
/// field's box. Images are computed in parallel and merged in cube order.
pub fn build_outer_map<T: Real>(f: &FiniteField<T>, grid: &CubicalGrid<T>, tau: T, tol: T) -> Result<OuterMap> {
    let boxes = image_boxes(f, grid, tau, tol)?;
    let outside = grid.len();
    let adjacency = boxes
        .into_par_iter()
        .map(|b| match b {
            None => vec![outside],
            Some(b) => {
                let (mut cubes, out) = grid.cubes_meeting(&b.lo, &b.hi);
                if out {
                    cubes.push(outside);
                }
                cubes
            }
        })
        .collect();
    OuterMap::from_adjacency(grid.subdivisions().to_vec(), f.frame().support().to_vec(), adjacency)
}
