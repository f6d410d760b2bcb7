//! Problem files, batch runs over frames, per-frame result caching and
//! report emission for `stable-conley`.

pub mod emit;
pub mod problem;
pub mod run;

pub use emit::{emit_report, render_csv, render_json, render_svg, Emitted, Format, CSV_SCHEMA_VERSION};
pub use problem::{parse_problem, NamedFrame, Problem, ProblemError, ProblemSpec, Violation};
pub use run::{
    admissibility_table, continuation, frame_report, problem_hash, run_frames, run_ladder, FrameReport, FrameStatus,
    RunOptions, RunReport, RunStats, SweepTarget, CACHE_ENV, REPORT_VERSION,
};

use stable_conley::ConleyError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Pipeline(#[from] ConleyError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// 2 for problem and usage errors, 3 for pipeline failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Problem(_) | Self::Usage(_) => 2,
            Self::Pipeline(_) => 3,
            Self::Io(_) => 1,
        }
    }
}

/// Reads and parses a problem file.
pub fn load_problem(path: &std::path::Path) -> Result<ProblemSpec, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_problem(&text)?)
}
