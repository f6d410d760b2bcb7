use crate::scalar::Real;

/// Closed interval `[lo, hi]`; operations widen outward by a few ulps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Interval<T: Real> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Interval<T> {
    pub fn new(lo: T, hi: T) -> Self {
        Self { lo, hi }
    }

    pub fn point(x: T) -> Self {
        Self { lo: x, hi: x }
    }

    fn widened(lo: T, hi: T) -> Self {
        let pad = (lo.abs().max(hi.abs())) * T::epsilon() * T::of(4.0);
        Self { lo: lo - pad, hi: hi + pad }
    }

    pub fn add(self, o: Self) -> Self {
        Self::widened(self.lo + o.lo, self.hi + o.hi)
    }

    pub fn mul(self, o: Self) -> Self {
        let p = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        let lo = p.iter().copied().fold(T::infinity(), T::min);
        let hi = p.iter().copied().fold(T::neg_infinity(), T::max);
        Self::widened(lo, hi)
    }

    pub fn powi(self, n: u32) -> Self {
        if n == 0 {
            return Self::point(T::one());
        }
        let (a, b) = (self.lo.powi(n as i32), self.hi.powi(n as i32));
        if n % 2 == 1 {
            Self::widened(a, b)
        } else if self.lo <= T::zero() && self.hi >= T::zero() {
            Self::widened(T::zero(), a.max(b))
        } else {
            Self::widened(a.min(b), a.max(b))
        }
    }

    pub fn mid(self) -> T {
        (self.lo + self.hi) * T::of(0.5)
    }

    pub fn rad(self) -> T {
        (self.hi - self.lo) * T::of(0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enclosures() {
        let x = Interval::new(-1.0f64, 2.0);
        let sq = x.powi(2);
        assert!(sq.lo <= 0.0 && sq.hi >= 4.0 && sq.hi < 4.0 + 1e-12);
        let cube = x.powi(3);
        assert!(cube.lo <= -1.0 && cube.hi >= 8.0);
        let p = x.mul(Interval::new(-3.0, 1.0));
        assert!(p.lo <= -6.0 && p.hi >= 3.0);
    }
}
