use std::collections::BTreeMap;

use crate::scalar::Real;

/// Finitely supported vector of ℓ², indexed by ambient coordinate.
///
/// Entries are kept in coordinate order so sums and norms are evaluated in
/// a fixed order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FiniteVector<T: Real> {
    entries: BTreeMap<usize, T>,
}

impl<T: Real> FiniteVector<T> {
    pub fn zero() -> Self {
        Self { entries: BTreeMap::new() }
    }

    pub fn basis(index: usize) -> Self {
        Self::from_pairs([(index, T::one())])
    }

    pub fn from_pairs<I: IntoIterator<Item = (usize, T)>>(pairs: I) -> Self {
        let mut v = Self::zero();
        for (i, x) in pairs {
            v.add_at(i, x);
        }
        v
    }

    /// Dense prefix `x_0, …, x_{n-1}`.
    pub fn from_dense(values: &[T]) -> Self {
        Self::from_pairs(values.iter().copied().enumerate())
    }

    pub fn get(&self, index: usize) -> T {
        self.entries.get(&index).copied().unwrap_or_else(T::zero)
    }

    pub fn set(&mut self, index: usize, value: T) {
        self.entries.insert(index, value);
    }

    pub fn add_at(&mut self, index: usize, value: T) {
        *self.entries.entry(index).or_insert_with(T::zero) += value;
    }

    /// Coordinates carrying a stored entry (possibly an explicit zero).
    pub fn support(&self) -> Vec<usize> {
        self.entries.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.entries.iter().map(|(&i, &x)| (i, x))
    }

    pub fn norm_squared(&self) -> T {
        self.entries.values().map(|&x| x * x).sum()
    }

    pub fn norm(&self) -> T {
        self.norm_squared().sqrt()
    }

    pub fn dot(&self, other: &Self) -> T {
        self.entries.iter().filter_map(|(i, &x)| other.entries.get(i).map(|&y| x * y)).sum()
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { entries: self.entries.iter().map(|(&i, &x)| (i, x * s)).collect() }
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: T, other: &Self) -> Self {
        let mut out = self.clone();
        for (i, x) in other.iter() {
            out.add_at(i, s * x);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-T::one(), other)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpy(T::one(), other)
    }

    pub fn max_abs(&self) -> T {
        self.entries.values().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    /// Values at `coords`, in order.
    pub fn gather(&self, coords: &[usize]) -> Vec<T> {
        coords.iter().map(|&i| self.get(i)).collect()
    }
}
