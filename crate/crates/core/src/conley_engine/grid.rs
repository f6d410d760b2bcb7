use std::collections::BTreeSet;

use crate::error::{ConleyError, Result};
use crate::scalar::Real;
use crate::spectral_model::Neighborhood;

/// Set of cubes by linear index. Ordered so that every traversal is
/// deterministic.
pub type CubeSet = BTreeSet<usize>;

/// Largest number of cubes a grid may hold.
pub const MAX_GRID_CUBES: usize = 1 << 22;

/// Uniform grid on the centered box `∏[−w_i, w_i]` in frame coordinates.
///
/// Cube `k` on axis `i` is `[−w_i + k h_i, −w_i + (k+1) h_i]`,
/// `h_i = 2 w_i / n_i`. Linear index `Σ k_i ∏_{j<i} n_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct CubicalGrid<T: Real> {
    half_widths: Vec<T>,
    subdivisions: Vec<usize>,
    margin: usize,
}

impl<T: Real> CubicalGrid<T> {
    pub fn new(half_widths: Vec<T>, subdivisions: Vec<usize>, margin: usize) -> Result<Self> {
        if half_widths.len() != subdivisions.len() || half_widths.is_empty() {
            return Err(ConleyError::Argument("grid needs one half-width and one subdivision count per axis".into()));
        }
        if half_widths.iter().any(|w| !(*w > T::zero() && w.is_finite())) {
            return Err(ConleyError::Argument("grid half-widths must be positive".into()));
        }
        if subdivisions.iter().any(|&n| n < 8 || !n.is_power_of_two()) {
            return Err(ConleyError::Argument(format!("subdivisions must be powers of two ≥ 8, got {subdivisions:?}")));
        }
        if margin < 2 || subdivisions.iter().any(|&n| 2 * margin >= n) {
            return Err(ConleyError::Argument(format!("margin {margin} must be ≥ 2 and leave interior cubes")));
        }
        let total = subdivisions.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n));
        match total {
            Some(t) if t <= MAX_GRID_CUBES => {}
            _ => return Err(ConleyError::Argument(format!("grid {subdivisions:?} exceeds {MAX_GRID_CUBES} cubes"))),
        }
        Ok(Self { half_widths, subdivisions, margin })
    }

    /// Grid whose box is the enclosing cube of `X ∩ V` widened by `margin`
    /// cubes per side: `w = R n / (n − 2m)`.
    pub fn around(x: &Neighborhood<T>, dim: usize, subdivisions: usize, margin: usize) -> Result<Self> {
        if 2 * margin >= subdivisions {
            return Err(ConleyError::Argument(format!("margin {margin} too large for {subdivisions} subdivisions")));
        }
        let r = x.enclosing_half_width();
        let w = r * T::of_usize(subdivisions) / T::of_usize(subdivisions - 2 * margin);
        Self::new(vec![w; dim], vec![subdivisions; dim], margin)
    }

    /// Same box, every axis subdivided twice as finely.
    pub fn refined(&self) -> Result<Self> {
        Self::new(self.half_widths.clone(), self.subdivisions.iter().map(|n| 2 * n).collect(), 2 * self.margin)
    }

    /// Grid on a subset of the axes.
    pub fn restricted(&self, axes: &[usize]) -> Result<Self> {
        Self::new(
            axes.iter().map(|&a| self.half_widths[a]).collect(),
            axes.iter().map(|&a| self.subdivisions[a]).collect(),
            self.margin,
        )
    }

    pub fn dim(&self) -> usize {
        self.subdivisions.len()
    }

    pub fn half_widths(&self) -> &[T] {
        &self.half_widths
    }

    pub fn subdivisions(&self) -> &[usize] {
        &self.subdivisions
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn len(&self) -> usize {
        self.subdivisions.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cube_size(&self, axis: usize) -> T {
        T::of(2.0) * self.half_widths[axis] / T::of_usize(self.subdivisions[axis])
    }

    pub fn multi_index(&self, mut id: usize) -> Vec<usize> {
        self.subdivisions
            .iter()
            .map(|&n| {
                let k = id % n;
                id /= n;
                k
            })
            .collect()
    }

    pub fn linear_index(&self, k: &[usize]) -> usize {
        linear_index(&self.subdivisions, k)
    }

    pub fn bounds(&self, id: usize) -> (Vec<T>, Vec<T>) {
        let k = self.multi_index(id);
        let lo: Vec<T> =
            (0..self.dim()).map(|i| -self.half_widths[i] + T::of_usize(k[i]) * self.cube_size(i)).collect();
        let hi: Vec<T> = (0..self.dim()).map(|i| lo[i] + self.cube_size(i)).collect();
        (lo, hi)
    }

    pub fn center(&self, id: usize) -> Vec<T> {
        let (lo, hi) = self.bounds(id);
        lo.iter().zip(&hi).map(|(&a, &b)| (a + b) * T::of(0.5)).collect()
    }

    /// Cubes whose interior meets `X ∩ V`. Cubes are shrunk by a few ulps
    /// so that a cube merely touching `∂X` along a grid line is excluded
    /// regardless of rounding.
    pub fn region(&self, x: &Neighborhood<T>) -> CubeSet {
        let slack: Vec<T> = (0..self.dim()).map(|i| self.cube_size(i) * T::epsilon() * T::of(64.0)).collect();
        (0..self.len())
            .filter(|&id| {
                let (mut lo, mut hi) = self.bounds(id);
                for i in 0..self.dim() {
                    lo[i] += slack[i];
                    hi[i] -= slack[i];
                }
                x.meets_open_box(&lo, &hi)
            })
            .collect()
    }

    /// Closed cubes meeting the closed box `[lo, hi]`, and whether the box
    /// leaves the grid.
    pub fn cubes_meeting(&self, lo: &[T], hi: &[T]) -> (Vec<usize>, bool) {
        let d = self.dim();
        let mut outside = false;
        let mut ranges = Vec::with_capacity(d);
        for i in 0..d {
            let w = self.half_widths[i];
            let h = self.cube_size(i);
            let n = self.subdivisions[i] as i64;
            if !(lo[i].is_finite() && hi[i].is_finite()) {
                return (Vec::new(), true);
            }
            if lo[i] < -w || hi[i] > w {
                outside = true;
            }
            let a = ((lo[i] + w) / h).floor().to_i64().unwrap_or(i64::MIN).max(0);
            let b = ((hi[i] + w) / h).floor().to_i64().unwrap_or(i64::MAX).min(n - 1);
            if a > b {
                return (Vec::new(), true);
            }
            ranges.push((a as usize, b as usize));
        }
        let mut out = Vec::new();
        let mut k: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        loop {
            out.push(self.linear_index(&k));
            let mut i = 0;
            loop {
                if i == d {
                    return (out, outside);
                }
                if k[i] < ranges[i].1 {
                    k[i] += 1;
                    break;
                }
                k[i] = ranges[i].0;
                i += 1;
            }
        }
    }
}

pub(crate) fn linear_index(shape: &[usize], k: &[usize]) -> usize {
    let mut id = 0;
    let mut stride = 1;
    for (i, &n) in shape.iter().enumerate() {
        id += k[i] * stride;
        stride *= n;
    }
    id
}

pub(crate) fn multi_index(shape: &[usize], mut id: usize) -> Vec<usize> {
    shape
        .iter()
        .map(|&n| {
            let k = id % n;
            id /= n;
            k
        })
        .collect()
}

/// Face and corner neighbours of a cube; `None` stands for a neighbour
/// position off the grid.
pub(crate) fn neighbors(shape: &[usize], id: usize) -> Vec<Option<usize>> {
    let d = shape.len();
    let k = multi_index(shape, id);
    let mut out = Vec::with_capacity(3usize.pow(d as u32) - 1);
    let mut off = vec![-1i64; d];
    loop {
        if off.iter().any(|&o| o != 0) {
            let mut nb = Vec::with_capacity(d);
            let mut inside = true;
            for i in 0..d {
                let c = k[i] as i64 + off[i];
                if c < 0 || c >= shape[i] as i64 {
                    inside = false;
                    break;
                }
                nb.push(c as usize);
            }
            out.push(if inside { Some(linear_index(shape, &nb)) } else { None });
        }
        let mut i = 0;
        loop {
            if i == d {
                return out;
            }
            if off[i] < 1 {
                off[i] += 1;
                break;
            }
            off[i] = -1;
            i += 1;
        }
    }
}

/// `S` grown by one layer of face and corner neighbours, and whether that
/// layer reaches off the grid.
pub fn one_layer(shape: &[usize], s: &CubeSet) -> (CubeSet, bool) {
    let mut out = s.clone();
    let mut off_grid = false;
    for &c in s {
        for nb in neighbors(shape, c) {
            match nb {
                Some(n) => {
                    out.insert(n);
                }
                None => off_grid = true,
            }
        }
    }
    (out, off_grid)
}

/// Cubes of `region` with a neighbour position outside `region`.
pub fn boundary_layer(shape: &[usize], region: &CubeSet) -> CubeSet {
    region
        .iter()
        .copied()
        .filter(|&c| neighbors(shape, c).into_iter().any(|nb| nb.is_none_or(|n| !region.contains(&n))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn around_keeps_margin() {
        let x = Neighborhood::ball(1.0f64).unwrap();
        let g = CubicalGrid::around(&x, 2, 16, 2).unwrap();
        let h = g.cube_size(0);
        assert!((g.half_widths()[0] - 2.0 * h - 1.0).abs() < 1e-12);
        let r = g.region(&x);
        let b = boundary_layer(g.subdivisions(), &r);
        for k in [0usize, 1, 14, 15] {
            assert!(!r.contains(&g.linear_index(&[k, 8])));
        }
        assert!(r.contains(&g.linear_index(&[2, 8])) && b.contains(&g.linear_index(&[2, 8])));
        assert!(!b.contains(&g.linear_index(&[8, 8])));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(CubicalGrid::new(vec![1.0], vec![6], 2).is_err());
        assert!(CubicalGrid::new(vec![1.0], vec![12], 2).is_err());
        assert!(CubicalGrid::new(vec![1.0], vec![8], 1).is_err());
        assert!(CubicalGrid::new(vec![1.0; 2], vec![8], 2).is_err());
    }

    #[test]
    fn index_round_trip_and_neighbours() {
        let g = CubicalGrid::new(vec![1.0f64; 3], vec![8, 16, 8], 2).unwrap();
        for id in [0, 5, 77, g.len() - 1] {
            assert_eq!(g.linear_index(&g.multi_index(id)), id);
        }
        let interior = g.linear_index(&[3, 3, 3]);
        assert_eq!(neighbors(g.subdivisions(), interior).iter().flatten().count(), 26);
        assert_eq!(neighbors(g.subdivisions(), 0).iter().flatten().count(), 7);
    }

    #[test]
    fn cubes_meeting_closed_box() {
        let g = CubicalGrid::new(vec![1.0f64], vec![8], 2).unwrap();
        // Cube 4 is [0, 0.25]; the point 0.25 also touches cube 5.
        let (c, out) = g.cubes_meeting(&[0.1], &[0.25]);
        assert_eq!((c, out), (vec![4, 5], false));
        let (c, out) = g.cubes_meeting(&[0.9], &[1.3]);
        assert_eq!((c, out), (vec![7], true));
        let (c, out) = g.cubes_meeting(&[1.1], &[1.3]);
        assert!(c.is_empty() && out);
    }

    #[test]
    fn refinement_keeps_box() {
        let g = CubicalGrid::around(&Neighborhood::cube(1.0f64).unwrap(), 1, 16, 2).unwrap();
        let r = g.refined().unwrap();
        assert_eq!(r.half_widths(), g.half_widths());
        assert_eq!((r.subdivisions()[0], r.margin()), (32, 4));
        assert_eq!(
            r.region(&Neighborhood::cube(1.0).unwrap()).len(),
            2 * g.region(&Neighborhood::cube(1.0).unwrap()).len()
        );
    }
}
