use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stable_conley::compressed_flow::compress_field;
use stable_conley::conley_engine::{
    aligned_field, product_index_pair, CubicalGrid, HomologicalIndex, PairConstruction,
};
use stable_conley::spectral_model::Frame;
use stable_conley::stable_index::{
    assemble_stable_index, continuation_sweep, stable_equal, Assembly, ContinuationReport, StableIndex,
};
use stable_conley::subspace_lab::{admissible, signature, AdmissibilityRecord};
use stable_conley::ConleyError;

use crate::problem::{BudgetSection, NeighborhoodSection, NonlinearitySection, OperatorSection, Problem, ProblemSpec};
use crate::HarnessError;

/// Version of the report layout; part of every cache key.
pub const REPORT_VERSION: u32 = 1;

/// Environment variable naming the cache directory.
pub const CACHE_ENV: &str = "STABLE_CONLEY_CACHE";

/// Lattice size of the sampled field arrows in 2-D reports.
const ARROWS_PER_AXIS: usize = 13;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Directory of cached per-frame results; `None` disables caching.
    pub cache_dir: Option<PathBuf>,
}

impl RunOptions {
    pub fn from_env() -> Self {
        Self { cache_dir: std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameStatus {
    Ok,
    /// Failed one of the admissibility conditions; no index computed.
    Inadmissible,
    /// Compressed form has an eigenvalue within tolerance of zero.
    Degenerate,
    /// The pipeline raised an error.
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityNumbers {
    pub admissible: bool,
    pub kernel_defect: f64,
    pub commutator: f64,
    pub residual_upper: f64,
    pub residual_lower: f64,
    pub reasons: Vec<String>,
}

impl From<&AdmissibilityRecord<f64>> for AdmissibilityNumbers {
    fn from(r: &AdmissibilityRecord<f64>) -> Self {
        Self {
            admissible: r.admissible(),
            kernel_defect: r.kernel_defect,
            commutator: r.commutator,
            residual_upper: r.residual_upper,
            residual_lower: r.residual_lower,
            reasons: r.reasons.iter().map(ToString::to_string).collect(),
        }
    }
}

/// Cube counts of one block's index pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub axes: Vec<usize>,
    pub subdivisions: usize,
    pub refinements: usize,
    pub construction: PairConstruction,
    pub p1: usize,
    pub p0: usize,
    pub invariant: usize,
    pub edges: usize,
}

/// Index pair and sampled field of a 2-D frame in grid coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub half_widths: [f64; 2],
    pub shape: [usize; 2],
    pub p1: Vec<usize>,
    pub p0: Vec<usize>,
    pub neighborhood: NeighborhoodSection,
    /// `[x, y, dx, dy]`: base point and direction of `−F`, scaled to the
    /// lattice spacing.
    pub arrows: Vec<[f64; 4]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub index: usize,
    pub name: String,
    pub dim: usize,
    pub support: Vec<usize>,
    pub fingerprint: String,
    pub status: FrameStatus,
    pub admissibility: AdmissibilityNumbers,
    /// `(dim V⁺, dim V⁻, dim V⁰)`.
    pub signature: [usize; 3],
    pub aligned: bool,
    pub pairs: Vec<PairSummary>,
    pub homology: Option<HomologicalIndex>,
    pub stable: Option<StableIndex>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plane: Option<Plane>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationSummary {
    pub frame: String,
    pub target: String,
    pub report: ContinuationReport,
}

/// Deterministic result of a run: no timing and no cache statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: u32,
    /// SHA-256 of the canonical serialization of the problem.
    pub problem: String,
    pub frames: Vec<FrameReport>,
    /// `stable_equal` between frames with status `ok`; `null` otherwise.
    pub equal: Vec<Vec<Option<bool>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuation: Option<ContinuationSummary>,
}

impl RunReport {
    pub fn ok_frames(&self) -> impl Iterator<Item = &FrameReport> {
        self.frames.iter().filter(|f| f.status == FrameStatus::Ok)
    }

    /// Every frame with an index agrees with every other.
    pub fn all_equal(&self) -> bool {
        self.equal.iter().flatten().all(|e| e.unwrap_or(true))
    }

    /// At least one index, no pipeline failures, all indices equal and no
    /// continuation break.
    pub fn succeeded(&self) -> bool {
        self.ok_frames().next().is_some()
            && self.frames.iter().all(|f| f.status != FrameStatus::Failed)
            && self.all_equal()
            && self.continuation.as_ref().is_none_or(|c| c.report.passed())
    }
}

/// Timing and cache use, kept out of emitted reports.
#[derive(Clone, Debug, Default)]
pub struct RunStats {
    pub total: Duration,
    /// Per frame: name, wall time, served from the cache.
    pub frames: Vec<(String, Duration, bool)>,
}

impl RunStats {
    pub fn cache_hits(&self) -> usize {
        self.frames.iter().filter(|f| f.2).count()
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn problem_hash(spec: &ProblemSpec) -> String {
    sha256_hex(&serde_json::to_vec(spec).expect("problem specs serialize"))
}

#[derive(Serialize)]
struct CacheKey<'a> {
    version: u32,
    operator: &'a OperatorSection,
    nonlinearity: &'a Option<NonlinearitySection>,
    neighborhood: &'a NeighborhoodSection,
    budgets: &'a BudgetSection,
    grid: &'a stable_conley::conley_engine::GridConfig,
    flow: &'a stable_conley::conley_engine::FlowConfig,
    support: &'a [usize],
    columns: Vec<f64>,
}

fn cache_key(spec: &ProblemSpec, v: &Frame<f64>) -> String {
    let key = CacheKey {
        version: REPORT_VERSION,
        operator: &spec.operator,
        nonlinearity: &spec.nonlinearity,
        neighborhood: &spec.neighborhood,
        budgets: &spec.budgets,
        grid: &spec.grid,
        flow: &spec.flow,
        support: v.support(),
        columns: v.columns().iter().copied().collect(),
    };
    sha256_hex(&serde_json::to_vec(&key).expect("cache keys serialize"))
}

fn cache_load(dir: &Path, key: &str) -> Option<FrameReport> {
    let text = fs::read_to_string(dir.join(format!("{key}.json"))).ok()?;
    serde_json::from_str(&text).ok()
}

fn cache_store(dir: &Path, key: &str, report: &FrameReport) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!("{key}.{}.{}.tmp", std::process::id(), rayon::current_thread_index().unwrap_or(0)));
    fs::write(&tmp, serde_json::to_vec(report).expect("frame reports serialize"))?;
    fs::rename(tmp, dir.join(format!("{key}.json")))
}

fn plane(p: &Problem, v: &Frame<f64>, a: &Assembly<f64>) -> Result<Option<Plane>, ConleyError> {
    if v.dim() != 2 {
        return Ok(None);
    }
    let mut blocks: Vec<_> = a.field_index.blocks.iter().collect();
    blocks.sort_by_key(|b| b.axes[0]);
    let pair = match blocks.as_slice() {
        [b] => b.pair.clone(),
        [b, c] => product_index_pair(&b.pair, &c.pair)?,
        _ => return Ok(None),
    };
    let x = &p.neighborhood;
    let g = CubicalGrid::around(x, 2, p.config.grid.subdivisions, p.config.grid.margin)?;
    let w = [g.half_widths()[0], g.half_widths()[1]];
    let (field, _) = aligned_field(&compress_field(&p.field, v), x)?;
    let n = ARROWS_PER_AXIS;
    let step = [2.0 * w[0] / n as f64, 2.0 * w[1] / n as f64];
    let len = 0.4 * step[0].min(step[1]);
    let mut arrows = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let pt = [-w[0] + (i as f64 + 0.5) * step[0], -w[1] + (j as f64 + 0.5) * step[1]];
            let d = field.eval(&pt);
            let norm = d[0].hypot(d[1]);
            if norm > 1e-12 {
                arrows.push([pt[0], pt[1], -d[0] / norm * len, -d[1] / norm * len]);
            }
        }
    }
    let neighborhood = match *x {
        stable_conley::spectral_model::Neighborhood::Ball { radius } => {
            NeighborhoodSection { ball: Some(radius), cube: None }
        }
        stable_conley::spectral_model::Neighborhood::Box { half_width } => {
            NeighborhoodSection { ball: None, cube: Some(half_width) }
        }
    };
    Ok(Some(Plane {
        half_widths: w,
        shape: [pair.shape[0], pair.shape[1]],
        p1: pair.p1.iter().copied().collect(),
        p0: pair.p0.iter().copied().collect(),
        neighborhood,
        arrows,
    }))
}

/// Admissibility, signature and, when both pass, the stable index of one
/// frame. Pipeline errors are recorded, not returned.
pub fn frame_report(p: &Problem, index: usize, name: &str, v: &Frame<f64>) -> FrameReport {
    let rec = admissible(&p.field, v, &p.neighborhood, &p.budget);
    let sig = signature(p.field.operator(), v, p.budget.degeneracy);
    let (sp, sn, sz) = sig.dims();
    let mut r = FrameReport {
        index,
        name: name.to_string(),
        dim: v.dim(),
        support: v.support().to_vec(),
        fingerprint: format!("{:016x}", v.fingerprint()),
        status: FrameStatus::Ok,
        admissibility: AdmissibilityNumbers::from(&rec),
        signature: [sp, sn, sz],
        aligned: false,
        pairs: Vec::new(),
        homology: None,
        stable: None,
        plane: None,
        error: None,
    };
    if !rec.admissible() {
        r.status = FrameStatus::Inadmissible;
        r.error = Some(r.admissibility.reasons.join("; "));
        return r;
    }
    if let Err(e) = sig.require_nondegenerate() {
        r.status = FrameStatus::Degenerate;
        r.error = Some(e.to_string());
        return r;
    }
    let a = match assemble_stable_index(&p.field, &p.neighborhood, v, &p.budget, &p.config) {
        Ok(a) => a,
        Err(e) => {
            r.status = FrameStatus::Failed;
            r.error = Some(e.to_string());
            return r;
        }
    };
    r.aligned = a.field_index.aligned;
    r.pairs = a
        .field_index
        .blocks
        .iter()
        .map(|b| PairSummary {
            axes: b.axes.clone(),
            subdivisions: b.subdivisions,
            refinements: b.refinements,
            construction: b.pair.construction,
            p1: b.pair.p1.len(),
            p0: b.pair.p0.len(),
            invariant: b.pair.invariant.len(),
            edges: b.edges,
        })
        .collect();
    match plane(p, v, &a) {
        Ok(pl) => r.plane = pl,
        Err(e) => r.error = Some(format!("phase portrait: {e}")),
    }
    r.homology = Some(a.field_index.homology.clone());
    r.stable = Some(a.index);
    r
}

fn equality_matrix(frames: &[FrameReport]) -> Vec<Vec<Option<bool>>> {
    frames
        .iter()
        .map(|a| {
            frames
                .iter()
                .map(|b| match (&a.stable, &b.stable) {
                    (Some(x), Some(y)) => Some(stable_equal(x, y)),
                    _ => None,
                })
                .collect()
        })
        .collect()
}

/// Runs the selected frames concurrently and merges them in frame order.
fn run_selected(
    spec: &ProblemSpec,
    p: &Problem,
    selected: &[usize],
    opts: &RunOptions,
) -> (Vec<FrameReport>, Vec<(String, Duration, bool)>) {
    let results: Vec<(FrameReport, Duration, bool)> = selected
        .par_iter()
        .map(|&i| {
            let start = Instant::now();
            let nf = &p.frames[i];
            let key = opts.cache_dir.as_ref().map(|d| (d, cache_key(spec, &nf.frame)));
            if let Some((dir, k)) = &key {
                if let Some(mut r) = cache_load(dir, k) {
                    r.index = i;
                    r.name = nf.name.clone();
                    return (r, start.elapsed(), true);
                }
            }
            let r = frame_report(p, i, &nf.name, &nf.frame);
            if let Some((dir, k)) = &key {
                if let Err(e) = cache_store(dir, k, &r) {
                    eprintln!("warning: could not write cache entry {k}: {e}");
                }
            }
            (r, start.elapsed(), false)
        })
        .collect();
    let stats = results.iter().map(|(r, t, c)| (r.name.clone(), *t, *c)).collect();
    (results.into_iter().map(|x| x.0).collect(), stats)
}

/// Stable indices of the frames of `spec` (all of them, or the one named
/// `only`) and their pairwise equality.
pub fn run_frames(
    spec: &ProblemSpec,
    only: Option<&str>,
    opts: &RunOptions,
) -> Result<(RunReport, RunStats), HarnessError> {
    let start = Instant::now();
    let p = spec.build()?;
    let selected: Vec<usize> = match only {
        None => (0..p.frames.len()).collect(),
        Some(name) => vec![p.frames.iter().position(|f| f.name == name).ok_or_else(|| {
            HarnessError::Usage(format!("no frame named `{name}`; known: {}", spec.frame_names().join(", ")))
        })?],
    };
    let (frames, times) = run_selected(spec, &p, &selected, opts);
    let report = RunReport {
        version: REPORT_VERSION,
        problem: problem_hash(spec),
        equal: equality_matrix(&frames),
        frames,
        continuation: None,
    };
    Ok((report, RunStats { total: start.elapsed(), frames: times }))
}

/// Every ladder frame and every declared frame.
pub fn run_ladder(spec: &ProblemSpec, opts: &RunOptions) -> Result<(RunReport, RunStats), HarnessError> {
    run_frames(spec, None, opts)
}

/// Admissibility and signature of every frame without computing indices.
pub fn admissibility_table(
    spec: &ProblemSpec,
) -> Result<Vec<(String, AdmissibilityNumbers, [usize; 3])>, HarnessError> {
    let p = spec.build()?;
    Ok(p.frames
        .iter()
        .map(|nf| {
            let rec = admissible(&p.field, &nf.frame, &p.neighborhood, &p.budget);
            let (a, b, c) = signature(p.field.operator(), &nf.frame, p.budget.degeneracy).dims();
            (nf.name.clone(), AdmissibilityNumbers::from(&rec), [a, b, c])
        })
        .collect())
}

/// End point of a continuation sweep.
#[derive(Clone, Debug)]
pub enum SweepTarget {
    Problem(Box<ProblemSpec>),
    /// The start problem with its compact part scaled by this factor.
    Scale(f64),
}

/// Sweeps the compressed fields of `spec` and `target` on the first frame
/// admissible for both and reports isolation and the index at each step.
pub fn continuation(
    spec: &ProblemSpec,
    target: &SweepTarget,
    steps: usize,
    opts: &RunOptions,
) -> Result<(RunReport, RunStats), HarnessError> {
    let start = Instant::now();
    let p = spec.build()?;
    let (field_b, label) = match target {
        SweepTarget::Scale(s) => (p.field.with_scaled_map(*s), format!("scale {s}")),
        SweepTarget::Problem(b) => {
            if b.operator.core.len() != spec.operator.core.len() || b.neighborhood != spec.neighborhood {
                return Err(HarnessError::Usage(
                    "sweep end points need the same core dimension and neighborhood".into(),
                ));
            }
            (b.build()?.field, format!("problem {}", problem_hash(b)))
        }
    };
    let x = &p.neighborhood;
    let shared = p
        .frames
        .iter()
        .position(|nf| {
            admissible(&p.field, &nf.frame, x, &p.budget).admissible()
                && admissible(&field_b, &nf.frame, x, &p.budget).admissible()
        })
        .ok_or_else(|| ConleyError::Admissibility("no frame is admissible for both end points".into()))?;
    let v = &p.frames[shared];
    let report = continuation_sweep(&p.field, &field_b, x, &v.frame, steps, &p.budget, &p.config, None)?;
    let (frames, times) = run_selected(spec, &p, &[shared], opts);
    let out = RunReport {
        version: REPORT_VERSION,
        problem: problem_hash(spec),
        equal: equality_matrix(&frames),
        frames,
        continuation: Some(ContinuationSummary { frame: v.name.clone(), target: label, report }),
    };
    Ok((out, RunStats { total: start.elapsed(), frames: times }))
}
