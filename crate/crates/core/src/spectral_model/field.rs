use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::compact::CompactLinear;
use super::map::StructuredCompactMap;
use super::operator::SpectralOperator;
use super::vector::FiniteVector;
use crate::error::{ConleyError, Result};
use crate::scalar::Real;

/// Witness `(c₁, c₂)` for `‖Q(x)‖ ≤ c₁‖x‖ + c₂/(1 + ‖x‖)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthWitness<T: Real> {
    pub c1: T,
    pub c2: T,
}

/// Outcome of sampling the growth inequality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthReport<T: Real> {
    pub witness: GrowthWitness<T>,
    /// `max (‖Q(x)‖ − c₁‖x‖ − c₂/(1+‖x‖))` over the sample.
    pub max_violation: T,
    pub samples: usize,
}

pub const GROWTH_SAMPLES: usize = 10_000;

/// Permissible decomposition `F = L + Q`.
#[derive(Clone, Debug, PartialEq)]
pub struct PermissibleField<T: Real> {
    operator: SpectralOperator<T>,
    map: StructuredCompactMap<T>,
    witness: GrowthWitness<T>,
}

impl<T: Real> PermissibleField<T> {
    /// Uses the default witness derived from the global bound.
    pub fn new(operator: SpectralOperator<T>, map: StructuredCompactMap<T>) -> Self {
        let witness = Self::default_witness(&map);
        Self { operator, map, witness }
    }

    pub fn linear(operator: SpectralOperator<T>) -> Self {
        Self::new(operator, StructuredCompactMap::zero())
    }

    /// Stores a caller-supplied witness after checking it by sampling.
    pub fn with_witness(
        operator: SpectralOperator<T>,
        map: StructuredCompactMap<T>,
        witness: GrowthWitness<T>,
    ) -> Result<Self> {
        let f = Self { operator, map, witness };
        f.verify_growth_bound(0)?;
        Ok(f)
    }

    /// `(B + ‖K‖, 2B)`; `(0, 1)` for `Q = 0`.
    fn default_witness(map: &StructuredCompactMap<T>) -> GrowthWitness<T> {
        if map.is_zero() {
            return GrowthWitness { c1: T::zero(), c2: T::one() };
        }
        let b = map.global_bound();
        GrowthWitness { c1: b + map.linear().norm(), c2: T::of(2.0) * b.max(T::min_positive_value()) }
    }

    pub fn operator(&self) -> &SpectralOperator<T> {
        &self.operator
    }

    pub fn map(&self) -> &StructuredCompactMap<T> {
        &self.map
    }

    pub fn growth_witness(&self) -> GrowthWitness<T> {
        self.witness
    }

    /// `F(x) = Lx + Q(x)`.
    pub fn apply(&self, x: &FiniteVector<T>) -> FiniteVector<T> {
        self.operator.apply(x).add(&self.map.apply(x))
    }

    /// Coordinates touched by `L`'s core, `Q`'s input/output and `K`'s core.
    pub fn active_coordinates(&self) -> Vec<usize> {
        let mut c: Vec<usize> = (0..self.operator.core_dim()).collect();
        c.extend_from_slice(self.map.input_support());
        c.extend(self.map.output_indices());
        c.extend(0..self.map.linear().core_dim());
        c.sort_unstable();
        c.dedup();
        c
    }

    /// Samples `GROWTH_SAMPLES` points with radii in `[0, 4R_cut]` on the
    /// active coordinates plus a few tail coordinates.
    pub fn verify_growth_bound(&self, seed: u64) -> Result<GrowthReport<T>> {
        let mut coords = self.active_coordinates();
        let next = coords.last().map_or(0, |m| m + 1);
        coords.extend(next..next + 4);
        let rmax = T::of(4.0) * self.map.cutoff_radius();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let GrowthWitness { c1, c2 } = self.witness;
        let mut worst = T::neg_infinity();
        for _ in 0..GROWTH_SAMPLES {
            let dir: Vec<f64> = coords.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
            let n = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
            let r = rmax * T::of(rng.random_range(0.0..1.0));
            let x = FiniteVector::from_pairs(coords.iter().zip(&dir).map(|(&i, &d)| (i, r * T::of(d / n))));
            let nx = x.norm();
            let v = self.map.apply(&x).norm() - c1 * nx - c2 / (T::one() + nx);
            worst = worst.max(v);
        }
        if worst > T::zero() {
            return Err(ConleyError::InvalidWitness {
                c1: c1.to_f64_lossy(),
                c2: c2.to_f64_lossy(),
                violation: worst.to_f64_lossy(),
            });
        }
        Ok(GrowthReport { witness: self.witness, max_violation: worst, samples: GROWTH_SAMPLES })
    }

    /// The decomposition `(L + K, Q − K)` of the same field.
    pub fn alternative_decomposition(&self, k: &CompactLinear<T>) -> Result<Self> {
        let operator = self.operator.plus_compact(k)?;
        let map = self.map.minus_linear(k);
        Ok(Self::new(operator, map))
    }

    /// `L + sQ`, used for continuation sweeps.
    pub fn with_scaled_map(&self, s: T) -> Self {
        Self::new(self.operator.clone(), self.map.scaled(s))
    }
}
