use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stable_conley_harness::{
    admissibility_table, continuation, emit_report, load_problem, run_frames, Emitted, Format, HarnessError,
    ProblemSpec, RunOptions, RunReport, RunStats, SweepTarget,
};

#[derive(Parser)]
#[command(name = "stable-conley", version, about = "Stable Conley indices from problem files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a problem file.
    Validate(Common),
    /// Admissibility and signature of every frame.
    Admissible(Common),
    /// Stable index of one frame.
    Index {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        frame: String,
    },
    /// Stable indices of every frame and their pairwise equality.
    Ladder(Common),
    /// Continuation sweep from the problem to another problem or a scaled
    /// compact part.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// End-point problem file.
        #[arg(long, conflicts_with = "scale", required_unless_present = "scale")]
        to: Option<PathBuf>,
        /// Scale the compact part by this factor at the end point.
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long, default_value_t = 11)]
        steps: usize,
    },
    /// Run every frame and write every report format.
    Report(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    problem: PathBuf,
    /// Output directory for reports.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Fmt>,
    /// Override the number of grid refinements.
    #[arg(long)]
    max_refine: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fmt {
    Json,
    Csv,
    Svg,
}

impl From<Fmt> for Format {
    fn from(f: Fmt) -> Self {
        match f {
            Fmt::Json => Format::Json,
            Fmt::Csv => Format::Csv,
            Fmt::Svg => Format::Svg,
        }
    }
}

impl Common {
    fn load(&self) -> Result<ProblemSpec, HarnessError> {
        let mut spec = load_problem(&self.problem)?;
        if let Some(r) = self.max_refine {
            spec.grid.max_refinements = r;
        }
        Ok(spec)
    }

    fn formats(&self, default: &[Format]) -> Vec<Format> {
        self.format.map_or_else(|| default.to_vec(), |f| vec![f.into()])
    }
}

fn write_reports(report: &RunReport, common: &Common, default: &[Format]) -> Result<(), HarnessError> {
    let Some(dir) = &common.out else {
        return Ok(());
    };
    for f in common.formats(default) {
        for e in emit_report(report, f, dir)? {
            match e {
                Emitted::Written(p) => println!("wrote {}", p.display()),
                Emitted::Skipped(why) => eprintln!("skipped: {why}"),
            }
        }
    }
    Ok(())
}

fn print_stats(stats: &RunStats) {
    for (name, t, cached) in &stats.frames {
        eprintln!("  {name}: {:.3} s{}", t.as_secs_f64(), if *cached { " (cached)" } else { "" });
    }
    eprintln!("total {:.3} s, cache hits {}/{}", stats.total.as_secs_f64(), stats.cache_hits(), stats.frames.len());
}

fn print_frames(report: &RunReport) {
    for f in &report.frames {
        let stable = f.stable.as_ref().map_or("-".to_string(), |s| {
            s.entries
                .iter()
                .map(|e| format!("deg {}: rank {}", e.virtual_degree, e.rank))
                .collect::<Vec<_>>()
                .join(", ")
        });
        let ranks = f.homology.as_ref().map_or("-".to_string(), |h| format!("{:?}", h.ranks()));
        println!(
            "{:<10} dim {:>2}  {:<12}  ranks {:<12}  shift {:>2}  stable [{stable}]",
            f.name,
            f.dim,
            format!("{:?}", f.status).to_lowercase(),
            ranks,
            f.signature[1]
        );
        if let Some(e) = &f.error {
            println!("           {e}");
        }
    }
}

fn outcome(report: &RunReport) -> ExitCode {
    if report.succeeded() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    let opts = RunOptions::from_env();
    match cli.command {
        Command::Validate(c) => {
            let spec = c.load()?;
            println!("valid: {} frame(s): {}", spec.frame_names().len(), spec.frame_names().join(", "));
            Ok(ExitCode::SUCCESS)
        }
        Command::Admissible(c) => {
            let spec = c.load()?;
            for (name, a, sig) in admissibility_table(&spec)? {
                println!(
                    "{name:<10} {:<13} kernel {:.3e}  commutator {:.3e}  residual {:.3e}  signature {sig:?}",
                    if a.admissible { "admissible" } else { "inadmissible" },
                    a.kernel_defect,
                    a.commutator,
                    a.residual_upper
                );
                for r in &a.reasons {
                    println!("           {r}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Index { common, frame } => {
            let (report, stats) = run_frames(&common.load()?, Some(&frame), &opts)?;
            print_frames(&report);
            print_stats(&stats);
            write_reports(&report, &common, &[Format::Json])?;
            Ok(outcome(&report))
        }
        Command::Ladder(c) => {
            let (report, stats) = run_frames(&c.load()?, None, &opts)?;
            print_frames(&report);
            println!("all stable indices equal: {}", report.all_equal());
            print_stats(&stats);
            write_reports(&report, &c, &[Format::Json])?;
            Ok(outcome(&report))
        }
        Command::Sweep { common, to, scale, steps } => {
            let spec = common.load()?;
            let target = match (to, scale) {
                (Some(p), _) => SweepTarget::Problem(Box::new(load_problem(&p)?)),
                (None, Some(s)) => SweepTarget::Scale(s),
                (None, None) => return Err(HarnessError::Usage("sweep needs --to or --scale".into())),
            };
            let (report, stats) = continuation(&spec, &target, steps, &opts)?;
            let c = report.continuation.as_ref().expect("sweeps record a continuation");
            println!("frame {} to {}, pseudometric {:.6}", c.frame, c.target, c.report.pseudometric);
            for s in &c.report.steps {
                let h = s.homology.as_ref().map_or("-".to_string(), |h| format!("{:?}", h.ranks()));
                println!("step {:>3}  s = {:.4}  isolated {:<5}  ranks {h}", s.step, s.s, s.isolated);
            }
            match c.report.break_at {
                Some((k, s)) => println!("break at step {k} (s = {s})"),
                None => println!("no break; end-point stable indices equal"),
            }
            print_stats(&stats);
            write_reports(&report, &common, &[Format::Json])?;
            Ok(outcome(&report))
        }
        Command::Report(c) => {
            let (report, stats) = run_frames(&c.load()?, None, &opts)?;
            print_frames(&report);
            print_stats(&stats);
            let c = Common { out: Some(c.out.clone().unwrap_or_else(|| PathBuf::from("report"))), ..c };
            write_reports(&report, &c, &Format::ALL)?;
            Ok(outcome(&report))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
