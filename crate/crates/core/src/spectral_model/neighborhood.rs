use crate::error::{ConleyError, Result};
use crate::scalar::Real;

/// Candidate isolating neighborhood `X ⊂ ℓ²`, centered at the origin.
///
/// `Box` is `{x : |x_i| ≤ half_width for all i}`; it is only ever
/// intersected with finite-dimensional coordinate-aligned frames.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Neighborhood<T: Real> {
    Ball { radius: T },
    Box { half_width: T },
}

impl<T: Real> Neighborhood<T> {
    pub fn ball(radius: T) -> Result<Self> {
        Self::Ball { radius }.validated()
    }

    pub fn cube(half_width: T) -> Result<Self> {
        Self::Box { half_width }.validated()
    }

    fn validated(self) -> Result<Self> {
        let r = self.scale();
        if r > T::zero() && r.is_finite() {
            Ok(self)
        } else {
            Err(ConleyError::Structural(format!("neighborhood size must be positive and finite, got {r}")))
        }
    }

    pub fn scale(&self) -> T {
        match *self {
            Self::Ball { radius } => radius,
            Self::Box { half_width } => half_width,
        }
    }

    /// `sup ‖x‖` over `X` restricted to `n` coordinates.
    pub fn norm_bound(&self, n: usize) -> T {
        match *self {
            Self::Ball { radius } => radius,
            Self::Box { half_width } => half_width * T::of_usize(n).sqrt(),
        }
    }

    /// Membership of a point given in frame coordinates of a frame that is
    /// coordinate-aligned when `self` is a box.
    pub fn contains(&self, c: &[T]) -> bool {
        match *self {
            Self::Ball { radius } => c.iter().map(|&x| x * x).sum::<T>() <= radius * radius,
            Self::Box { half_width } => c.iter().all(|x| x.abs() <= half_width),
        }
    }

    /// Whether the open box `(lo, hi)` meets `X ∩ V`.
    pub fn meets_open_box(&self, lo: &[T], hi: &[T]) -> bool {
        match *self {
            Self::Ball { radius } => {
                let d2: T = lo
                    .iter()
                    .zip(hi)
                    .map(|(&a, &b)| {
                        let t = if a > T::zero() {
                            a
                        } else if b < T::zero() {
                            b
                        } else {
                            T::zero()
                        };
                        t * t
                    })
                    .sum();
                d2 < radius * radius
            }
            Self::Box { half_width } => lo.iter().zip(hi).all(|(&a, &b)| a < half_width && b > -half_width),
        }
    }

    /// Half-width of the smallest centered cube containing `X ∩ V`.
    pub fn enclosing_half_width(&self) -> T {
        self.scale()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_meets_box() {
        let x = Neighborhood::ball(1.0).unwrap();
        assert!(x.meets_open_box(&[0.5, 0.5], &[0.8, 0.8]));
        assert!(!x.meets_open_box(&[0.8, 0.8], &[1.0, 1.0]));
        assert!(!x.meets_open_box(&[1.0], &[1.5]));
        assert!(x.meets_open_box(&[-0.1], &[0.1]));
    }

    #[test]
    fn box_norm_bound_grows_with_dimension() {
        let x = Neighborhood::cube(1.0).unwrap();
        assert_eq!(x.norm_bound(4), 2.0);
        assert!(!x.meets_open_box(&[1.0, 0.0], &[1.25, 0.25]));
    }

    #[test]
    fn non_positive_size_rejected() {
        assert!(Neighborhood::ball(0.0).is_err());
        assert!(Neighborhood::<f64>::cube(f64::INFINITY).is_err());
    }
}
