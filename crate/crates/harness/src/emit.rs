use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::run::{FrameReport, FrameStatus, Plane, RunReport};

/// Version of the CSV column set.
pub const CSV_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Json, Format::Csv, Format::Svg];
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "svg" => Ok(Self::Svg),
            _ => Err(format!("unknown format `{s}` (expected json, csv or svg)")),
        }
    }
}

pub fn render_json(report: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct CsvRow<'a> {
    schema_version: u32,
    index: usize,
    name: &'a str,
    status: &'static str,
    dim: usize,
    support: String,
    admissible: bool,
    kernel_defect: f64,
    commutator: f64,
    residual_upper: f64,
    residual_lower: f64,
    dim_positive: usize,
    dim_negative: usize,
    dim_neutral: usize,
    shift: Option<usize>,
    ranks: String,
    stable: String,
    p1_cubes: usize,
    p0_cubes: usize,
    error: &'a str,
}

fn join<T: ToString>(xs: impl IntoIterator<Item = T>) -> String {
    xs.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn status_name(s: FrameStatus) -> &'static str {
    match s {
        FrameStatus::Ok => "ok",
        FrameStatus::Inadmissible => "inadmissible",
        FrameStatus::Degenerate => "degenerate",
        FrameStatus::Failed => "failed",
    }
}

/// One row per frame: `degree:rank` entries of the stable index, with
/// torsion coefficients after a slash.
pub fn render_csv(report: &RunReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for f in &report.frames {
        let stable = f.stable.as_ref().map_or(String::new(), |s| {
            join(s.entries.iter().map(|e| {
                if e.torsion.is_empty() {
                    format!("{}:{}", e.virtual_degree, e.rank)
                } else {
                    format!(
                        "{}:{}/{}",
                        e.virtual_degree,
                        e.rank,
                        e.torsion.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
                    )
                }
            }))
        });
        w.serialize(CsvRow {
            schema_version: CSV_SCHEMA_VERSION,
            index: f.index,
            name: &f.name,
            status: status_name(f.status),
            dim: f.dim,
            support: join(&f.support),
            admissible: f.admissibility.admissible,
            kernel_defect: f.admissibility.kernel_defect,
            commutator: f.admissibility.commutator,
            residual_upper: f.admissibility.residual_upper,
            residual_lower: f.admissibility.residual_lower,
            dim_positive: f.signature[0],
            dim_negative: f.signature[1],
            dim_neutral: f.signature[2],
            shift: f.stable.as_ref().map(|s| s.shift),
            ranks: f.homology.as_ref().map_or(String::new(), |h| join(h.ranks())),
            stable,
            p1_cubes: f.pairs.iter().map(|p| p.p1).sum(),
            p0_cubes: f.pairs.iter().map(|p| p.p0).sum(),
            error: f.error.as_deref().unwrap_or(""),
        })
        .expect("csv rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

const SIZE: f64 = 480.0;
const PAD: f64 = 20.0;

/// Phase portrait of a 2-D frame: `P₁ ∖ P₀` and `P₀` cubes shaded, the
/// boundary of `X` and the direction of `−F` on a lattice. `None` for
/// frames without a 2-D index pair.
pub fn render_svg(frame: &FrameReport) -> Option<String> {
    let pl: &Plane = frame.plane.as_ref()?;
    let span = SIZE - 2.0 * PAD;
    let [w0, w1] = pl.half_widths;
    let (sx, sy) = (span / (2.0 * w0), span / (2.0 * w1));
    let px = |x: f64| PAD + (x + w0) * sx;
    let py = |y: f64| PAD + (w1 - y) * sy;
    let [n0, n1] = pl.shape;
    let (h0, h1) = (2.0 * w0 / n0 as f64, 2.0 * w1 / n1 as f64);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let homology = frame.homology.as_ref().map_or("none".to_string(), |h| join(h.ranks()));
    let _ = writeln!(s, "<title>{} (ranks {homology})</title>", frame.name);
    let _ = writeln!(
        s,
        r##"<defs><marker id="head" markerWidth="6" markerHeight="6" refX="5" refY="3" orient="auto"><path d="M0,0 L6,3 L0,6 z" fill="#444444"/></marker></defs>"##
    );
    let _ = writeln!(s, r##"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="#ffffff"/>"##);
    let p0: std::collections::BTreeSet<usize> = pl.p0.iter().copied().collect();
    for (class, fill, cubes) in [
        ("p1", "#9ecae1", pl.p1.iter().filter(|c| !p0.contains(c)).copied().collect::<Vec<_>>()),
        ("p0", "#fd8d3c", pl.p0.clone()),
    ] {
        let _ = writeln!(s, r#"<g class="{class}" fill="{fill}" stroke="none">"#);
        for c in cubes {
            let (k0, k1) = (c % n0, c / n0);
            let (x0, y1) = (-w0 + k0 as f64 * h0, -w1 + (k1 + 1) as f64 * h1);
            let _ = writeln!(
                s,
                r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}"/>"#,
                px(x0),
                py(y1),
                h0 * sx,
                h1 * sy
            );
        }
        let _ = writeln!(s, "</g>");
    }
    match (pl.neighborhood.ball, pl.neighborhood.cube) {
        (Some(r), _) => {
            let _ = writeln!(
                s,
                r##"<ellipse class="boundary" cx="{:.3}" cy="{:.3}" rx="{:.3}" ry="{:.3}" fill="none" stroke="#000000"/>"##,
                px(0.0),
                py(0.0),
                r * sx,
                r * sy
            );
        }
        (None, Some(r)) => {
            let _ = writeln!(
                s,
                r##"<rect class="boundary" x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="#000000"/>"##,
                px(-r),
                py(r),
                2.0 * r * sx,
                2.0 * r * sy
            );
        }
        (None, None) => {}
    }
    let _ = writeln!(s, r##"<g class="field" stroke="#444444" stroke-width="1" marker-end="url(#head)">"##);
    for [x, y, dx, dy] in &pl.arrows {
        let _ = writeln!(
            s,
            r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#,
            px(*x),
            py(*y),
            px(x + dx),
            py(y + dy)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, "</svg>");
    Some(s)
}

/// Outcome of writing one format.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Emitted {
    Written(PathBuf),
    Skipped(String),
}

fn safe(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Writes `report.json`, `report.csv` or one `frame-<i>-<name>.svg` per
/// 2-D frame into `dir`.
pub fn emit_report(report: &RunReport, format: Format, dir: &Path) -> std::io::Result<Vec<Emitted>> {
    fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    match format {
        Format::Json => {
            let p = dir.join("report.json");
            fs::write(&p, render_json(report))?;
            out.push(Emitted::Written(p));
        }
        Format::Csv => {
            let p = dir.join("report.csv");
            fs::write(&p, render_csv(report))?;
            out.push(Emitted::Written(p));
        }
        Format::Svg => {
            for f in &report.frames {
                match render_svg(f) {
                    Some(svg) => {
                        let p = dir.join(format!("frame-{}-{}.svg", f.index, safe(&f.name)));
                        fs::write(&p, svg)?;
                        out.push(Emitted::Written(p));
                    }
                    None if f.dim != 2 => out.push(Emitted::Skipped(format!(
                        "frame {}: SVG needs a 2-D frame, this one has dimension {}",
                        f.name, f.dim
                    ))),
                    None => out.push(Emitted::Skipped(format!("frame {}: no index pair to draw", f.name))),
                }
            }
        }
    }
    Ok(out)
}
