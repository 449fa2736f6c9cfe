//! File formats: system and signal documents in, CSV/JSON tables out.
//!
//! Reals are written with 17 significant digits and lines end in LF. JSON
//! tables repeat the CSV digits verbatim so both formats parse to the same
//! values.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::adjoint::AdjointArc;
use crate::error::{Error, Result};
use crate::propagate::{ApproxRow, RobustnessReport, Trajectory};
use crate::signals::{ControlSignal, OrdinarySignal, SignalDocument};
use crate::system::SystemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Deserializes JSON, reporting failures with a JSON pointer to the offending value.
pub(crate) fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        use serde_path_to_error::Segment;
        let pointer: String = e
            .path()
            .iter()
            .filter_map(|seg| match seg {
                Segment::Seq { index } => Some(format!("/{index}")),
                Segment::Map { key } => Some(format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
                Segment::Enum { variant } => Some(format!("/{variant}")),
                Segment::Unknown => None,
            })
            .collect();
        Error::schema(pointer, e.inner().to_string())
    })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn read_system(path: &Path) -> Result<SystemSpec> {
    SystemSpec::load(&read(path)?).map_err(|e| with_file(e, path))
}

fn with_file(e: Error, path: &Path) -> Error {
    match e {
        Error::Schema { path: p, message } => Error::Schema {
            path: format!("{}#{p}", path.display()),
            message,
        },
        Error::Invariant { path: p, message } => Error::Invariant {
            path: format!("{}#{p}", path.display()),
            message,
        },
        other => other,
    }
}

pub fn read_control(path: &Path, spec: &SystemSpec) -> Result<ControlSignal> {
    let doc: SignalDocument = parse_json(&read(path)?).map_err(|e| with_file(e, path))?;
    let sig = ControlSignal::from_document(&doc).map_err(|e| with_file(e, path))?;
    sig.validate_for(spec).map_err(|e| with_file(e, path))?;
    Ok(sig)
}

pub fn read_ordinary(path: &Path, spec: &SystemSpec) -> Result<OrdinarySignal> {
    let doc: SignalDocument = parse_json(&read(path)?).map_err(|e| with_file(e, path))?;
    let sig = OrdinarySignal::from_document(&doc).map_err(|e| with_file(e, path))?;
    sig.validate_for(spec).map_err(|e| with_file(e, path))?;
    Ok(sig)
}

/// Reads and validates a control and an ordinary-control file against `spec`.
pub fn load_signals(spec: &SystemSpec, control: &Path, ordinary: &Path) -> Result<(ControlSignal, OrdinarySignal)> {
    Ok((read_control(control, spec)?, read_ordinary(ordinary, spec)?))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

/// A header plus rows of reals, rendered as CSV or as a JSON array of objects.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn names(prefix: &str, count: usize, suffix: &str) -> Vec<String> {
        (1..=count).map(|i| format!("{prefix}{i}{suffix}")).collect()
    }

    pub fn render(&self, format: Format) -> String {
        let mut out = String::new();
        match format {
            Format::Csv => {
                out.push_str(&self.header.join(","));
                out.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(|v| real(*v)).collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
            }
            Format::Json => {
                out.push('[');
                for (k, row) in self.rows.iter().enumerate() {
                    out.push_str(if k == 0 { "\n  {" } else { ",\n  {" });
                    for (j, (name, v)) in self.header.iter().zip(row).enumerate() {
                        if j > 0 {
                            out.push_str(", ");
                        }
                        if v.is_finite() {
                            let _ = write!(out, "\"{name}\": {}", real(*v));
                        } else {
                            let _ = write!(out, "\"{name}\": null");
                        }
                    }
                    out.push('}');
                }
                out.push_str(if self.rows.is_empty() { "]\n" } else { "\n]\n" });
            }
        }
        out
    }
}

/// Trajectory table: `t, x·_left, x·_right, u·_left, u·_right, xi·, a·`.
/// A jump node gives two rows: the left-limit state, then the right-limit state.
pub fn trajectory_table(traj: &Trajectory) -> Table {
    let Some(first) = traj.nodes().first() else {
        return Table::default();
    };
    let (n, m, l) = (first.x_left.len(), first.u_left.len(), first.a.len());
    let mut header = vec!["t".to_string()];
    header.extend(Table::names("x", n, "_left"));
    header.extend(Table::names("x", n, "_right"));
    header.extend(Table::names("u", m, "_left"));
    header.extend(Table::names("u", m, "_right"));
    header.extend(Table::names("xi", n, ""));
    header.extend(Table::names("a", l, ""));
    let mut rows = Vec::new();
    let cells = traj.cells();
    for (k, nd) in traj.nodes().iter().enumerate() {
        let row = |x: &[f64], u: &[f64], a: &[f64]| {
            let mut r = vec![nd.t];
            r.extend_from_slice(x);
            r.extend_from_slice(x);
            r.extend_from_slice(u);
            r.extend_from_slice(u);
            r.extend_from_slice(&nd.xi);
            r.extend_from_slice(a);
            r
        };
        if nd.is_jump() {
            let a_before = if k > 0 { &cells[k - 1].a } else { &nd.a };
            rows.push(row(&nd.x_left, &nd.u_left, a_before));
            rows.push(row(&nd.x_right, &nd.u_right, &nd.a));
        } else {
            let mut r = vec![nd.t];
            r.extend_from_slice(&nd.x_left);
            r.extend_from_slice(&nd.x_right);
            r.extend_from_slice(&nd.u_left);
            r.extend_from_slice(&nd.u_right);
            r.extend_from_slice(&nd.xi);
            r.extend_from_slice(&nd.a);
            rows.push(r);
        }
    }
    Table { header, rows }
}

/// Adjoint table: `t, pi·, p·_left, p·_right` with the same jump-row rule as trajectories.
pub fn adjoint_table(arc: &AdjointArc, traj: &Trajectory) -> Table {
    let Some(first) = arc.nodes().first() else {
        return Table::default();
    };
    let d = first.pi.len();
    let n = arc.n();
    let mut header = vec!["t".to_string()];
    header.extend(Table::names("pi1_", n, ""));
    header.extend(Table::names("pi2_", d - n, ""));
    header.extend(Table::names("p1_", n, "_left"));
    header.extend(Table::names("p2_", d - n, "_left"));
    header.extend(Table::names("p1_", n, "_right"));
    header.extend(Table::names("p2_", d - n, "_right"));
    let mut rows = Vec::new();
    for (an, nd) in arc.nodes().iter().zip(traj.nodes()) {
        let row = |l: &[f64], r: &[f64]| {
            let mut v = vec![an.t];
            v.extend_from_slice(&an.pi);
            v.extend_from_slice(l);
            v.extend_from_slice(r);
            v
        };
        if nd.is_jump() {
            rows.push(row(&an.p_left, &an.p_left));
            rows.push(row(&an.p_right, &an.p_right));
        } else {
            rows.push(row(&an.p_left, &an.p_right));
        }
    }
    Table { header, rows }
}

pub fn approx_table(rows: &[ApproxRow]) -> Table {
    Table {
        header: ["k", "l1_gap", "ratio", "control_gap"].map(String::from).to_vec(),
        rows: rows
            .iter()
            .map(|r| vec![r.k as f64, r.l1_gap, r.ratio.unwrap_or(f64::NAN), r.control_gap])
            .collect(),
    }
}

pub fn robustness_table(report: &RobustnessReport) -> Table {
    Table {
        header: ["pair", "lhs", "rhs", "ratio", "inconsistent"]
            .map(String::from)
            .to_vec(),
        rows: report
            .rows
            .iter()
            .enumerate()
            .map(|(k, r)| vec![k as f64, r.lhs, r.rhs, r.ratio, if r.inconsistent { 1.0 } else { 0.0 }])
            .collect(),
    }
}
