//! Stable Conley index `E(X, F, L, V)`: the homological index of the
//! compressed flow on `V`, desuspended by `dim V⁻`.

use serde::{Deserialize, Serialize};

use crate::compressed_flow::{compress_field, decomposition_pseudometric, homotopy_family};
use crate::conley_engine::{conley_index, EngineConfig, FieldIndex, HomologicalIndex, HomologyGroup};
use crate::error::{ConleyError, Result};
use crate::scalar::Real;
use crate::spectral_model::{Frame, Neighborhood, PermissibleField};
use crate::subspace_lab::{admissible, signature, AdmissibilityBudget, AdmissibilityRecord};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StableEntry {
    pub virtual_degree: i64,
    pub rank: usize,
    pub torsion: Vec<u64>,
}

/// Where a stable index came from; enough to recompute it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Fingerprint of the frame `V`.
    pub frame: String,
    /// Fingerprint of the decomposition `(L, Q)`.
    pub decomposition: String,
    pub c1: f64,
    pub c2: f64,
    pub degeneracy: Option<f64>,
    /// Final subdivisions of each block grid.
    pub subdivisions: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableIndex {
    /// `dim V⁻`.
    pub shift: usize,
    /// Nonzero groups, ascending in virtual degree.
    pub entries: Vec<StableEntry>,
    pub provenance: Provenance,
}

impl StableIndex {
    /// `H_k` placed at virtual degree `k − shift`.
    pub fn from_homology(h: &HomologicalIndex, shift: usize, provenance: Provenance) -> Self {
        let entries = h
            .groups()
            .iter()
            .enumerate()
            .filter(|(_, g)| !g.is_zero())
            .map(|(k, g)| StableEntry {
                virtual_degree: k as i64 - shift as i64,
                rank: g.rank,
                torsion: g.torsion.clone(),
            })
            .collect();
        Self { shift, entries, provenance }
    }

    pub fn group(&self, virtual_degree: i64) -> HomologyGroup {
        self.entries
            .iter()
            .find(|e| e.virtual_degree == virtual_degree)
            .map(|e| HomologyGroup { rank: e.rank, torsion: e.torsion.clone() })
            .unwrap_or_default()
    }

    pub fn rank(&self, virtual_degree: i64) -> usize {
        self.group(virtual_degree).rank
    }

    /// Only `ℤ` in virtual degree `k`.
    pub fn is_sphere(&self, k: i64) -> bool {
        self.entries == [StableEntry { virtual_degree: k, rank: 1, torsion: Vec::new() }]
    }

    /// `Σⁿ E`: every entry moves up by `n`.
    pub fn suspended(&self, n: i64) -> Self {
        let entries =
            self.entries.iter().map(|e| StableEntry { virtual_degree: e.virtual_degree + n, ..e.clone() }).collect();
        Self { shift: (self.shift as i64 - n).max(0) as usize, entries, provenance: self.provenance.clone() }
    }
}

/// Graded `(rank, torsion)` equality at every virtual degree.
pub fn stable_equal(a: &StableIndex, b: &StableIndex) -> bool {
    a.entries == b.entries
}

fn fnv(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Fingerprint of a decomposition `(L, Q)`.
pub fn decomposition_id<T: Real>(f: &PermissibleField<T>) -> String {
    format!("{:016x}", fnv(format!("{:?}|{:?}", f.operator(), f.map()).as_bytes()))
}

/// Everything computed while assembling one stable index.
#[derive(Clone, Debug)]
pub struct Assembly<T: Real> {
    pub index: StableIndex,
    pub field_index: FieldIndex,
    pub admissibility: AdmissibilityRecord<T>,
    /// `(dim V⁺, dim V⁻, dim V⁰)`.
    pub signature: (usize, usize, usize),
}

impl<T: Real> Assembly<T> {
    pub fn homology(&self) -> &HomologicalIndex {
        &self.field_index.homology
    }
}

/// Compress, index and desuspend: `E(X, F, L, V)`.
pub fn assemble_stable_index<T: Real>(
    f: &PermissibleField<T>,
    x: &Neighborhood<T>,
    v: &Frame<T>,
    budget: &AdmissibilityBudget<T>,
    cfg: &EngineConfig,
) -> Result<Assembly<T>> {
    let admissibility = admissible(f, v, x, budget).into_result()?;
    let sig = signature(f.operator(), v, budget.degeneracy);
    sig.require_nondegenerate()?;
    let field_index = conley_index(&compress_field(f, v), x, cfg)?;
    let provenance = Provenance {
        frame: format!("{:016x}", v.fingerprint()),
        decomposition: decomposition_id(f),
        c1: budget.c1.to_f64_lossy(),
        c2: budget.c2.to_f64_lossy(),
        degeneracy: budget.degeneracy.map(Real::to_f64_lossy),
        subdivisions: field_index.blocks.iter().map(|b| b.subdivisions).collect(),
    };
    let index = StableIndex::from_homology(&field_index.homology, sig.negative_dim(), provenance);
    Ok(Assembly { index, field_index, admissibility, signature: sig.dims() })
}

/// Per-degree comparison of the indices on `W` and on `V ⊂ W`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuspensionReport {
    /// `dim U⁻` for `U = W ⊖ V`.
    pub u_negative: usize,
    /// `(k, H_k on W, H_{k − dim U⁻} on V)`.
    pub degrees: Vec<(usize, HomologyGroup, HomologyGroup)>,
    /// `dim V⁺ + dim U = dim W⁺ + dim U⁻`.
    pub dimension_identity: bool,
    pub stable_equal: bool,
    pub v_index: StableIndex,
    pub w_index: StableIndex,
}

impl SuspensionReport {
    pub fn consistent(&self) -> bool {
        self.dimension_identity && self.stable_equal && self.degrees.iter().all(|(_, a, b)| a == b)
    }
}

/// Checks `H_k(index on W) = H_{k − dim U⁻}(index on V)`.
pub fn suspension_consistency<T: Real>(
    f: &PermissibleField<T>,
    x: &Neighborhood<T>,
    v: &Frame<T>,
    w: &Frame<T>,
    budget_v: &AdmissibilityBudget<T>,
    budget_w: &AdmissibilityBudget<T>,
    cfg: &EngineConfig,
) -> Result<SuspensionReport> {
    let u = w.complement_of(v, T::of(1e-9))?;
    let sig_u = signature(f.operator(), &u, budget_w.degeneracy);
    sig_u.require_nondegenerate()?;
    let a = assemble_stable_index(f, x, v, budget_v, cfg)?;
    let b = assemble_stable_index(f, x, w, budget_w, cfg)?;
    let un = sig_u.negative_dim();
    let top = b.homology().groups().len().max(a.homology().groups().len() + un);
    let degrees = (0..top)
        .map(|k| {
            let lower = if k >= un { a.homology().group(k - un) } else { HomologyGroup::default() };
            (k, b.homology().group(k), lower)
        })
        .collect();
    let dimension_identity = a.signature.0 + u.dim() == b.signature.0 + un;
    Ok(SuspensionReport {
        u_negative: un,
        degrees,
        dimension_identity,
        stable_equal: stable_equal(&a.index, &b.index),
        v_index: a.index,
        w_index: b.index,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftReport {
    /// `dim V⁻(L) − dim V⁻(L′)`: how far `E(L′)` sits above `E(L)`.
    pub shift: i64,
    /// The unshifted homological indices coincide.
    pub homology_identical: bool,
    /// `E(L′) = Σ^{shift} E(L)`.
    pub reconciled: bool,
    pub first: StableIndex,
    pub second: StableIndex,
}

/// Compares `E(X, F, L, V)` and `E(X, F, L′, V)` for two decompositions of
/// the same field.
pub fn decomposition_shift<T: Real>(
    dec: &PermissibleField<T>,
    dec2: &PermissibleField<T>,
    x: &Neighborhood<T>,
    v: &Frame<T>,
    budget: &AdmissibilityBudget<T>,
    cfg: &EngineConfig,
) -> Result<ShiftReport> {
    let a = assemble_stable_index(dec, x, v, budget, cfg)?;
    let b = assemble_stable_index(dec2, x, v, budget, cfg)?;
    let shift = a.index.shift as i64 - b.index.shift as i64;
    Ok(ShiftReport {
        shift,
        homology_identical: a.homology() == b.homology(),
        reconciled: stable_equal(&a.index.suspended(shift), &b.index),
        first: a.index,
        second: b.index,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationStep {
    pub step: usize,
    pub s: f64,
    pub isolated: bool,
    pub homology: Option<HomologicalIndex>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationReport {
    pub pseudometric: f64,
    pub steps: Vec<ContinuationStep>,
    /// First step where isolation was lost or the index changed.
    pub break_at: Option<(usize, f64)>,
    pub start: Option<StableIndex>,
    pub end: Option<StableIndex>,
}

impl ContinuationReport {
    pub fn passed(&self) -> bool {
        self.break_at.is_none()
    }
}

/// Sweeps `(1 − s) F_V + s F′_V` over `steps` equally spaced values of `s`
/// and records isolation and the index at each; does not fail on a break.
#[allow(clippy::too_many_arguments)]
pub fn continuation_sweep<T: Real>(
    f: &PermissibleField<T>,
    f2: &PermissibleField<T>,
    x: &Neighborhood<T>,
    v: &Frame<T>,
    steps: usize,
    budget: &AdmissibilityBudget<T>,
    cfg: &EngineConfig,
    threshold: Option<T>,
) -> Result<ContinuationReport> {
    if steps < 2 {
        return Err(ConleyError::Argument("continuation needs at least two steps".into()));
    }
    let rho = decomposition_pseudometric(f, f2, x);
    if let Some(t) = threshold {
        if rho > t {
            return Err(ConleyError::Argument(format!("decompositions are {rho} apart, above the threshold {t}")));
        }
    }
    admissible(f, v, x, budget).into_result()?;
    admissible(f2, v, x, budget).into_result()?;
    let (fa, fb) = (compress_field(f, v), compress_field(f2, v));
    let mut out = Vec::with_capacity(steps);
    let mut break_at = None;
    let mut first: Option<HomologicalIndex> = None;
    for k in 0..steps {
        let s = k as f64 / (steps - 1) as f64;
        let field = homotopy_family(&fa, &fb, T::of(s))?;
        let rec = match conley_index(&field, x, cfg) {
            Ok(idx) => {
                let h = idx.homology;
                let same = first.as_ref().is_none_or(|h0| *h0 == h);
                if first.is_none() {
                    first = Some(h.clone());
                }
                if !same && break_at.is_none() {
                    break_at = Some((k, s));
                }
                ContinuationStep { step: k, s, isolated: true, homology: Some(h), error: None }
            }
            Err(e @ (ConleyError::Isolation(_) | ConleyError::Refine(_))) => {
                if break_at.is_none() {
                    break_at = Some((k, s));
                }
                ContinuationStep { step: k, s, isolated: false, homology: None, error: Some(e.to_string()) }
            }
            Err(e) => return Err(e),
        };
        out.push(rec);
    }
    let (start, end) = if break_at.is_none() {
        let a = assemble_stable_index(f, x, v, budget, cfg)?.index;
        let b = assemble_stable_index(f2, x, v, budget, cfg)?.index;
        if !stable_equal(&a, &b) {
            break_at = Some((steps - 1, 1.0));
        }
        (Some(a), Some(b))
    } else {
        (None, None)
    };
    Ok(ContinuationReport { pseudometric: rho.to_f64_lossy(), steps: out, break_at, start, end })
}

/// [`continuation_sweep`] that fails with the first offending step.
#[allow(clippy::too_many_arguments)]
pub fn continuation_check<T: Real>(
    f: &PermissibleField<T>,
    f2: &PermissibleField<T>,
    x: &Neighborhood<T>,
    v: &Frame<T>,
    steps: usize,
    budget: &AdmissibilityBudget<T>,
    cfg: &EngineConfig,
    threshold: Option<T>,
) -> Result<ContinuationReport> {
    let report = continuation_sweep(f, f2, x, v, steps, budget, cfg, threshold)?;
    match report.break_at {
        Some((step, s)) => Err(ConleyError::ContinuationBreak { step, s }),
        None => Ok(report),
    }
}
