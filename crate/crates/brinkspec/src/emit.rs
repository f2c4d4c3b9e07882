//! Writes a report to disk as json, csv, or both.
//!
//! The json file is the full report document. The csv files are flat views
//! of the result tables for spreadsheet use:
//!
//! - `lambda_trace.csv` (solve, sweep, classify): header
//!   `lambda,E0,inner_mass,gamma_eff`, one row per probe coupling (a solve
//!   writes exactly one row, at coupling 0).
//! - `eigenvalue_vs_grid.csv` (solve, sweep, classify): `lambda,r_max,E0`,
//!   one row per coupling per box.
//! - `decay_fit.csv` (solve, sweep, classify): `r,psi`, the samples behind
//!   the fitted decay exponent.
//! - `coupling_probes.csv` (coupling): `beta,E0,bound`.
//! - `residuals.csv` (oracle): `h,n,residual`.
//!
//! criterion and gsr-check reports have no tabular payload and produce no
//! csv files. Floats are written with Rust's shortest round-trip formatting,
//! so re-reading a csv recovers the report values exactly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::job::CliError;
use crate::run::{Report, Results};

/// Output selector: the json report, the csv tables, or both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
#[clap(rename_all = "lower")]
pub enum Format {
    Json,
    Csv,
    Both,
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

fn push_trace_csv(files: &mut Vec<(String, String)>, rows: &[(f64, f64, f64, f64)]) {
    let mut s = String::from("lambda,E0,inner_mass,gamma_eff\n");
    for (lambda, e0, mass, gamma) in rows {
        let _ = writeln!(s, "{lambda},{e0},{mass},{gamma}");
    }
    files.push(("lambda_trace.csv".into(), s));
}

fn push_decay_csv(files: &mut Vec<(String, String)>, points: &[(f64, f64)]) {
    let mut s = String::from("r,psi\n");
    for (r, psi) in points {
        let _ = writeln!(s, "{r},{psi}");
    }
    files.push(("decay_fit.csv".into(), s));
}

fn csv_tables(report: &Report) -> Vec<(String, String)> {
    let mut files = Vec::new();
    match &report.results {
        Results::Solve { levels, trace, decay_points, .. } => {
            push_trace_csv(
                &mut files,
                &trace
                    .iter()
                    .map(|p| (p.lambda, p.e0, p.inner_mass, p.gamma_eff))
                    .collect::<Vec<_>>(),
            );
            let mut s = String::from("lambda,r_max,E0\n");
            for l in levels {
                let _ = writeln!(s, "0,{},{}", l.r_max, l.e0);
            }
            files.push(("eigenvalue_vs_grid.csv".into(), s));
            push_decay_csv(&mut files, decay_points);
        }
        Results::Sweep { outcome } | Results::Classify { outcome } => {
            push_trace_csv(
                &mut files,
                &outcome
                    .verdict
                    .lambda_trace
                    .iter()
                    .map(|p| (p.lambda, p.e0, p.inner_mass, p.gamma_eff))
                    .collect::<Vec<_>>(),
            );
            let mut s = String::from("lambda,r_max,E0\n");
            for (row, probe) in outcome.e0_table.iter().zip(&outcome.verdict.lambda_trace) {
                for (e0, r_max) in row.iter().zip(&outcome.grid_r_maxes) {
                    let _ = writeln!(s, "{},{r_max},{e0}", probe.lambda);
                }
            }
            files.push(("eigenvalue_vs_grid.csv".into(), s));
            push_decay_csv(&mut files, &outcome.decay_points);
        }
        Results::Criterion { .. } | Results::GsrCheck { .. } => {}
        Results::Oracle { rows, .. } => {
            let mut s = String::from("h,n,residual\n");
            for row in rows {
                let _ = writeln!(s, "{},{},{}", row.h, row.n, row.residual);
            }
            files.push(("residuals.csv".into(), s));
        }
        Results::Coupling { outcome } => {
            let mut s = String::from("beta,E0,bound\n");
            for p in &outcome.probes {
                let _ = writeln!(s, "{},{},{}", p.beta, p.e0, p.bound);
            }
            files.push(("coupling_probes.csv".into(), s));
        }
    }
    files
}

/// Writes the selected formats into `out_dir` (created if missing) and
/// returns the paths written, json first.
pub fn emit(report: &Report, out_dir: &Path, format: Format) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("creating {}: {e}", out_dir.display())))?;
    let mut written = Vec::new();

    if matches!(format, Format::Json | Format::Both) {
        let text = serde_json::to_string_pretty(report)
            .map_err(|e| CliError::Io(format!("serializing report: {e}")))?;
        let path = out_dir.join("report.json");
        write_file(&path, &(text + "\n"))?;
        written.push(path);
    }
    if matches!(format, Format::Csv | Format::Both) {
        for (name, contents) in csv_tables(report) {
            let path = out_dir.join(name);
            write_file(&path, &contents)?;
            written.push(path);
        }
    }
    Ok(written)
}
