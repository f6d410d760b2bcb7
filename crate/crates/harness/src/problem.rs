use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use stable_conley::conley_engine::{CubicalGrid, EngineConfig, FlowConfig, GridConfig};
use stable_conley::spectral_model::{
    CompactLinear, DiagonalCompact, DiagonalTerm, Frame, Monomial, Neighborhood, PermissibleField, Polynomial,
    PolynomialComponent, SpectralOperator, StructuredCompactMap, Tail,
};
use stable_conley::subspace_lab::AdmissibilityBudget;
use stable_conley::ConleyError;
use thiserror::Error;

/// Tolerance for symmetry and orthonormality when a file does not set one.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Contents of a problem file. Field order is the canonical section order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub operator: OperatorSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlinearity: Option<NonlinearitySection>,
    pub neighborhood: NeighborhoodSection,
    pub subspaces: SubspacesSection,
    pub budgets: BudgetSection,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub flow: FlowConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSection {
    /// Diagonal of the core block.
    pub core: Vec<f64>,
    /// Symmetric matrix added to the core block, one list per row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Vec<Vec<f64>>>,
    pub tail: TailSection,
    /// Spectral gap `δ₀`.
    pub gap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TailSection {
    Alternating { positive: f64, negative: f64 },
    Constant { constant: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySection {
    /// Input coordinates of the polynomial part.
    pub support: Vec<usize>,
    pub cutoff: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<ComponentSection>,
    /// Compact linear part `K`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<LinearSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSection {
    pub output: usize,
    pub monomials: Vec<MonomialSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialSection {
    pub coefficient: f64,
    /// One exponent per entry of `support`.
    pub exponents: Vec<u32>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSection {
    /// Symmetric block on coordinates `0..n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub core: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagonal: Vec<DiagonalRule>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiagonalRule {
    Geometric { first: f64, ratio: f64 },
    Power { scale: f64, exponent: f64 },
    Explicit { values: Vec<f64> },
}

/// Exactly one of `ball` (radius) or `box` (half width).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeighborhoodSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball: Option<f64>,
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub cube: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubspacesSection {
    /// Dimensions `k` of the coordinate frames `V_k = span{e_0, …, e_{k−1}}`.
    #[serde(default)]
    pub ladder: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub frames: Vec<FrameSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSection {
    pub name: String,
    pub support: Vec<usize>,
    /// Orthonormal columns, each listed over `support`.
    pub columns: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSection {
    pub c1: f64,
    pub c2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degeneracy: Option<f64>,
}

/// One violated invariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub section: String,
    /// 1-based line of the section header, when known.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "[{}] (line {l}): {}", self.section, self.message),
            None => write!(f, "[{}]: {}", self.section, self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("{0}")]
    Parse(String),
    #[error("invalid problem:\n{}", list(.0))]
    Invalid(Vec<Violation>),
}

fn list(v: &[Violation]) -> String {
    v.iter().map(|x| format!("  {x}")).collect::<Vec<_>>().join("\n")
}

/// A frame with the name reports use for it.
#[derive(Clone, Debug)]
pub struct NamedFrame {
    pub name: String,
    pub frame: Frame<f64>,
}

/// Validated problem in library types.
#[derive(Clone, Debug)]
pub struct Problem {
    pub field: PermissibleField<f64>,
    pub neighborhood: Neighborhood<f64>,
    pub frames: Vec<NamedFrame>,
    pub budget: AdmissibilityBudget<f64>,
    pub config: EngineConfig,
}

impl Problem {
    pub fn frame(&self, name: &str) -> Option<&NamedFrame> {
        self.frames.iter().find(|f| f.name == name)
    }
}

/// Parses and validates a problem file.
pub fn parse_problem(text: &str) -> Result<ProblemSpec, ProblemError> {
    let spec: ProblemSpec = toml::from_str(text).map_err(|e| ProblemError::Parse(e.to_string()))?;
    match spec.assemble() {
        Ok(_) => Ok(spec),
        Err(mut v) => {
            for x in &mut v {
                x.line = header_line(text, &x.section);
            }
            Err(ProblemError::Invalid(v))
        }
    }
}

fn header_line(text: &str, section: &str) -> Option<usize> {
    let find = |s: &str| {
        let (a, b) = (format!("[{s}]"), format!("[[{s}]]"));
        text.lines().position(|l| l.trim() == a || l.trim() == b).map(|i| i + 1)
    };
    find(section).or_else(|| find(section.split('.').next()?))
}

fn matrix(rows: &[Vec<f64>], n: usize, what: &str, section: &str, out: &mut Vec<Violation>) -> Option<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        out.push(violation(section, format!("{what} must be a {n}x{n} matrix")));
        return None;
    }
    Some(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn violation(section: &str, message: impl Into<String>) -> Violation {
    Violation { section: section.to_string(), line: None, message: message.into() }
}

/// Splits a structural error into its individual messages.
fn push_error(out: &mut Vec<Violation>, section: &str, e: ConleyError) {
    match e {
        ConleyError::Structural(m) | ConleyError::Argument(m) => {
            out.extend(m.split("; ").map(|s| violation(section, s)));
        }
        other => out.push(violation(section, other.to_string())),
    }
}

impl ProblemSpec {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("problem specs serialize")
    }

    pub fn tolerance(&self) -> f64 {
        self.operator.tolerance.unwrap_or(DEFAULT_TOLERANCE)
    }

    /// Names of the frames in run order: ladder first, then declared frames.
    pub fn frame_names(&self) -> Vec<String> {
        self.subspaces
            .ladder
            .iter()
            .map(|k| format!("V{k}"))
            .chain(self.subspaces.frames.iter().map(|f| f.name.clone()))
            .collect()
    }

    pub fn build(&self) -> Result<Problem, ProblemError> {
        self.assemble().map_err(ProblemError::Invalid)
    }

    /// Builds every section, collecting every violation.
    fn assemble(&self) -> Result<Problem, Vec<Violation>> {
        let mut out = Vec::new();
        let tol = self.tolerance();
        let operator = self.build_operator(tol, &mut out);
        let map = self.build_map(tol, &mut out);
        let neighborhood = self.build_neighborhood(&mut out);
        let frames = self.build_frames(tol, &mut out);
        let budget = AdmissibilityBudget::new(self.budgets.c1, self.budgets.c2, self.budgets.degeneracy)
            .map_err(|e| push_error(&mut out, "budgets", e))
            .ok();
        if let Some(x) = &neighborhood {
            let g = &self.grid;
            if let Err(e) = CubicalGrid::around(x, 1, g.subdivisions, g.margin) {
                push_error(&mut out, "grid", e);
            }
        }
        let flow = &self.flow;
        if !(flow.tau > 0.0 && flow.tau.is_finite()) {
            out.push(violation("flow", format!("tau must be positive and finite, got {}", flow.tau)));
        }
        if !(flow.tol > 0.0 && flow.tol.is_finite()) {
            out.push(violation("flow", format!("tol must be positive and finite, got {}", flow.tol)));
        }
        match (operator, map, neighborhood, frames, budget) {
            (Some(op), Some(q), Some(x), Some(frames), Some(budget)) if out.is_empty() => Ok(Problem {
                field: PermissibleField::new(op, q),
                neighborhood: x,
                frames,
                budget,
                config: EngineConfig { grid: self.grid.clone(), flow: self.flow.clone() },
            }),
            _ => Err(out),
        }
    }

    fn build_operator(&self, tol: f64, out: &mut Vec<Violation>) -> Option<SpectralOperator<f64>> {
        let o = &self.operator;
        let n = o.core.len();
        let pert = match &o.perturbation {
            Some(rows) => Some(matrix(rows, n, "perturbation", "operator", out)?),
            None => None,
        };
        let tail = match o.tail {
            TailSection::Alternating { positive, negative } => Tail::Alternating { positive, negative },
            TailSection::Constant { constant } => Tail::Constant(constant),
        };
        SpectralOperator::new(o.core.clone(), pert, tail, o.gap, tol).map_err(|e| push_error(out, "operator", e)).ok()
    }

    fn build_map(&self, tol: f64, out: &mut Vec<Violation>) -> Option<StructuredCompactMap<f64>> {
        let Some(q) = &self.nonlinearity else {
            return Some(StructuredCompactMap::zero());
        };
        let linear = match &q.linear {
            None => CompactLinear::zero(),
            Some(k) => {
                let core = match &k.core {
                    Some(rows) => matrix(rows, rows.len(), "linear core", "nonlinearity.linear", out)?,
                    None => DMatrix::zeros(0, 0),
                };
                let terms = k
                    .diagonal
                    .iter()
                    .map(|r| match r {
                        DiagonalRule::Geometric { first, ratio } => {
                            DiagonalTerm::Geometric { first: *first, ratio: *ratio }
                        }
                        DiagonalRule::Power { scale, exponent } => {
                            DiagonalTerm::Power { scale: *scale, exponent: *exponent }
                        }
                        DiagonalRule::Explicit { values } => DiagonalTerm::Explicit(values.clone()),
                    })
                    .collect();
                let diagonal =
                    DiagonalCompact::new(terms).map_err(|e| push_error(out, "nonlinearity.linear", e)).ok()?;
                CompactLinear::new(core, diagonal, tol).map_err(|e| push_error(out, "nonlinearity.linear", e)).ok()?
            }
        };
        let components = q
            .components
            .iter()
            .map(|c| PolynomialComponent {
                output: c.output,
                polynomial: Polynomial::new(
                    c.monomials
                        .iter()
                        .map(|m| Monomial { coefficient: m.coefficient, exponents: m.exponents.clone() })
                        .collect(),
                ),
            })
            .collect();
        StructuredCompactMap::new(q.support.clone(), components, q.cutoff, linear)
            .map_err(|e| push_error(out, "nonlinearity", e))
            .ok()
    }

    fn build_neighborhood(&self, out: &mut Vec<Violation>) -> Option<Neighborhood<f64>> {
        let r = match (self.neighborhood.ball, self.neighborhood.cube) {
            (Some(r), None) => Neighborhood::ball(r),
            (None, Some(w)) => Neighborhood::cube(w),
            _ => {
                out.push(violation("neighborhood", "exactly one of `ball` or `box` must be given"));
                return None;
            }
        };
        r.map_err(|e| push_error(out, "neighborhood", e)).ok()
    }

    fn build_frames(&self, tol: f64, out: &mut Vec<Violation>) -> Option<Vec<NamedFrame>> {
        let s = &self.subspaces;
        let before = out.len();
        if s.ladder.is_empty() && s.frames.is_empty() {
            out.push(violation("subspaces", "at least one ladder dimension or frame is required"));
        }
        if s.ladder.contains(&0) || s.ladder.windows(2).any(|w| w[0] >= w[1]) {
            out.push(violation("subspaces", "ladder dimensions must be positive and strictly increasing"));
        }
        let mut names = self.frame_names();
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            out.push(violation("subspaces", "frame names must be distinct from each other and from the ladder names"));
        }
        let mut frames: Vec<NamedFrame> =
            s.ladder.iter().map(|&k| NamedFrame { name: format!("V{k}"), frame: Frame::leading(k) }).collect();
        for fr in &s.frames {
            let section = "subspaces.frames";
            let n = fr.support.len();
            if fr.columns.is_empty() || fr.columns.iter().any(|c| c.len() != n) {
                out.push(violation(section, format!("frame `{}`: every column needs {n} entries", fr.name)));
                continue;
            }
            let cols = DMatrix::from_fn(n, fr.columns.len(), |r, c| fr.columns[c][r]);
            match Frame::new(fr.support.clone(), cols, tol) {
                Ok(frame) => frames.push(NamedFrame { name: fr.name.clone(), frame }),
                Err(e) => {
                    let mut v = Vec::new();
                    push_error(&mut v, section, e);
                    out.extend(v.into_iter().map(|mut x| {
                        x.message = format!("frame `{}`: {}", fr.name, x.message);
                        x
                    }));
                }
            }
        }
        (out.len() == before).then_some(frames)
    }
}
