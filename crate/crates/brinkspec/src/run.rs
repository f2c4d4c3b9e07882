//! Executes a resolved job and assembles the report document.

use std::time::Instant;

use brink_core::eigensolve::{bracket_certificate, eigenvector, lowest_eigs};
use brink_core::iterlog::{psi_lower, psi_upper};
use brink_core::potentials::{exact_zero_mode, Potential, ThresholdKind};
use brink_core::radialgrid::{Placement, RadialGrid, ResidualOptions};
use brink_core::threshold::{
    binding_floor, classify_zero_mode, criterion_check, critical_coupling, criticality_sweep,
    eigen_tolerance, fit_decay, CouplingOutcome, CriterionCertificate, GridSchedule, GsrReport,
    LambdaProbe, SweepOutcome,
};
use serde::{Deserialize, Serialize};

use crate::job::{CliError, Command, GridParams, JobSpec};

/// One box/resolution level of a solve, with the certificate data for its
/// reported ground energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridLevel {
    pub r_max: f64,
    pub n: usize,
    pub h: f64,
    pub e0: f64,
    /// Enclosing bisection bracket (lo, hi) with hi − lo ≤ the tolerance.
    pub bracket: (f64, f64),
    /// Whether the eigenvalue-counting certificate re-verifies the bracket.
    pub certified: bool,
    /// ‖(T − e0)·u‖ / ‖u‖ of the computed eigenvector.
    pub residual_norm: f64,
}

/// One row of an oracle convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub h: f64,
    pub n: usize,
    pub residual: f64,
}

/// Command-specific payload of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Results {
    Solve {
        levels: Vec<GridLevel>,
        /// Box-size extrapolation of the per-level energies (the last level
        /// when fewer than three are available).
        e0: f64,
        /// Single trace row (coupling 0) so solve output shares the sweep
        /// trace schema.
        trace: Vec<LambdaProbe>,
        decay_points: Vec<(f64, f64)>,
    },
    Sweep {
        outcome: SweepOutcome,
    },
    Classify {
        outcome: SweepOutcome,
    },
    Criterion {
        certificate: CriterionCertificate,
    },
    Oracle {
        rows: Vec<OracleRow>,
        /// residual[k] / residual[k+1] under spacing halving.
        ratios: Vec<f64>,
        /// log2 of the last ratio: the observed stencil order.
        order_estimate: f64,
    },
    GsrCheck {
        report: GsrReport,
    },
    Coupling {
        outcome: CouplingOutcome,
    },
}

/// Shape of one grid the run actually built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridStamp {
    pub r_min: f64,
    pub r_max: f64,
    pub n: usize,
    pub h: f64,
    pub placement: Placement,
}

impl GridStamp {
    fn of(g: &RadialGrid) -> GridStamp {
        GridStamp { r_min: g.r_min, r_max: g.r_max, n: g.n, h: g.spacing(), placement: g.placement }
    }
}

/// Numerical tolerances the run used; absent entries do not apply to the
/// command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigen_bisection: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling_bisection: Option<f64>,
}

/// How the result was produced: tool version, the grids built, the
/// tolerances in force, and the wall time. Everything except
/// `wall_time_seconds` is deterministic for a given job document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub grids: Vec<GridStamp>,
    pub tolerances: Tolerances,
    pub wall_time_seconds: f64,
}

/// The single json document a job produces: the fully resolved job echo,
/// the results, and the provenance block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub job: JobSpec,
    pub results: Results,
    pub provenance: Provenance,
}

fn schedule_from(grid: &GridParams) -> GridSchedule {
    let k = grid.doublings.unwrap_or(0);
    let r_maxes = (0..=k).map(|i| grid.r_max * f64::from(1u32 << i)).collect();
    GridSchedule { r_maxes, h: grid.spacing(), r_min: (grid.r_min > 0.0).then_some(grid.r_min) }
}

fn build_box_family(grid: &GridParams, d: u32) -> Result<Vec<RadialGrid>, CliError> {
    let k = grid.doublings.unwrap_or(0);
    let h = grid.spacing();
    let mut out = Vec::with_capacity(k as usize + 1);
    for i in 0..=k {
        let r_max = grid.r_max * f64::from(1u32 << i);
        let n = if i == 0 {
            grid.nodes()
        } else if grid.r_min == 0.0 {
            (r_max / h - 0.5).round() as usize
        } else {
            ((r_max - grid.r_min) / h).round() as usize - 1
        };
        out.push(RadialGrid::make_grid(d, grid.r_min, r_max, n, grid.placement)?);
    }
    Ok(out)
}

/// Aitken Δ² over the last three entries, falling back to the last value
/// when the sequence is too short or not geometric.
fn extrapolate(es: &[f64]) -> f64 {
    let n = es.len();
    let last = *es.last().expect("nonempty level list");
    if n < 3 {
        return last;
    }
    let (e1, e2, e3) = (es[n - 3], es[n - 2], es[n - 1]);
    let dd = (e3 - e2) - (e2 - e1);
    if dd.abs() <= 1e-12 * e3.abs().max(e2.abs()).max(1e-300) {
        return last;
    }
    e3 - (e3 - e2) * (e3 - e2) / dd
}

struct Outputs {
    results: Results,
    grids: Vec<GridStamp>,
    tolerances: Tolerances,
}

fn run_solve(job: &JobSpec) -> Result<Outputs, CliError> {
    let p = job.potential.as_ref().expect("resolved");
    let grid = job.grid.as_ref().expect("resolved");
    let opts = job.options.as_ref().expect("resolved");
    let grids = build_box_family(grid, job.dimension)?;
    let finest = grids.last().expect("at least one level");
    let floor = binding_floor(finest, opts.floor_factor);
    let tol = eigen_tolerance(floor);

    let mut levels = Vec::with_capacity(grids.len());
    let mut mode = None;
    for g in &grids {
        let t = g.assemble(p)?;
        let spectrum = lowest_eigs(&t, 1, tol)?;
        let e0 = spectrum.eigenvalues[0];
        let (vector, residual_norm) = eigenvector(&t, e0, tol)?;
        levels.push(GridLevel {
            r_max: g.r_max,
            n: g.n,
            h: g.spacing(),
            e0,
            bracket: spectrum.brackets[0],
            certified: bracket_certificate(&t, 1, e0, tol),
            residual_norm,
        });
        mode = Some(vector);
    }
    let es: Vec<f64> = levels.iter().map(|l| l.e0).collect();
    let e0 = extrapolate(&es);

    let mode = mode.expect("at least one level");
    let inner_radius = job.inner_radius.expect("resolved");
    let inner_mass: f64 = finest
        .nodes()
        .iter()
        .zip(mode.values.iter())
        .take_while(|(r, _)| **r <= inner_radius)
        .map(|(_, u)| u * u)
        .sum();
    let kappa = (-e0).max(0.0).sqrt();
    // the decay fit indexes nodes by uniform spacing; geometric grids get
    // no fitted exponent
    let (gamma_eff, decay_points) = match finest.placement {
        Placement::Uniform => fit_decay(finest, &mode, job.dimension, kappa, opts),
        Placement::Geometric { .. } => (f64::NAN, Vec::new()),
    };
    let trace = vec![LambdaProbe { lambda: 0.0, e0, inner_mass, gamma_eff }];

    Ok(Outputs {
        results: Results::Solve { levels, e0, trace, decay_points },
        grids: grids.iter().map(GridStamp::of).collect(),
        tolerances: Tolerances { eigen_bisection: Some(tol), ..Tolerances::default() },
    })
}

fn run_sweep(job: &JobSpec, refine: bool) -> Result<Outputs, CliError> {
    let p = job.potential.as_ref().expect("resolved");
    let grid = job.grid.as_ref().expect("resolved");
    let opts = job.options.as_ref().expect("resolved");
    let lambdas = job.lambdas.as_ref().expect("resolved");
    let probe = job.probe.as_ref().expect("resolved");
    let schedule = schedule_from(grid);

    let outcome = if refine {
        classify_zero_mode(
            p,
            probe,
            job.dimension,
            lambdas,
            &schedule,
            job.inner_radius.expect("resolved"),
            opts,
        )?
    } else {
        criticality_sweep(p, probe, job.dimension, lambdas, &schedule, opts)?
    };

    let grids = build_box_family(grid, job.dimension)?;
    let finest = grids.last().expect("at least one level");
    let tol = eigen_tolerance(binding_floor(finest, opts.floor_factor));
    let results = if refine { Results::Classify { outcome } } else { Results::Sweep { outcome } };
    Ok(Outputs {
        results,
        grids: grids.iter().map(GridStamp::of).collect(),
        tolerances: Tolerances { eigen_bisection: Some(tol), ..Tolerances::default() },
    })
}

fn run_criterion(job: &JobSpec) -> Result<Outputs, CliError> {
    let p = job.potential.as_ref().expect("resolved");
    let certificate = criterion_check(
        p,
        job.dimension,
        job.m_max.expect("resolved"),
        job.window.expect("resolved"),
        job.samples.expect("resolved"),
    )?;
    Ok(Outputs {
        results: Results::Criterion { certificate },
        grids: Vec::new(),
        tolerances: Tolerances::default(),
    })
}

fn run_oracle(job: &JobSpec) -> Result<Outputs, CliError> {
    let p = job.potential.as_ref().expect("resolved");
    let grid = job.grid.as_ref().expect("resolved");
    let d = job.dimension;

    // the job names the potential; the matching zero-energy profile is
    // implied by the variant
    let profile: Box<dyn Fn(f64) -> brink_core::Result<f64>> =
        match p {
            Potential::AlphaFamily { alpha, dim } => {
                let (a, dd) = (*alpha, *dim);
                Box::new(move |r| Ok(exact_zero_mode(a, dd, r)))
            }
            Potential::ThresholdFamily { order, which, dim } => {
                let (o, dd) = (*order, *dim);
                match which {
                    ThresholdKind::Wm => Box::new(move |r| psi_lower(o, dd, r)),
                    ThresholdKind::Ym => Box::new(move |r| psi_upper(o, dd, r)),
                    ThresholdKind::RhsThreshold => return Err(CliError::Validation(
                        "potential: rhs_threshold is a comparison tail, not a partner potential; \
                         the oracle needs wm or ym"
                            .into(),
                    )),
                }
            }
            _ => {
                return Err(CliError::Validation(
                    "potential: the oracle command needs a potential with a known exact zero mode \
                 (alpha_family or threshold_family)"
                        .into(),
                ))
            }
        };

    let refinements = grid.refinements.unwrap_or(0);
    let h0 = grid.spacing();
    let res_opts = ResidualOptions { window: job.window, ..ResidualOptions::default() };

    let mut rows = Vec::with_capacity(refinements as usize + 1);
    let mut stamps = Vec::with_capacity(refinements as usize + 1);
    for k in 0..=refinements {
        let h = h0 / f64::from(1u32 << k);
        let n = if grid.r_min == 0.0 {
            (grid.r_max / h - 0.5).round() as usize
        } else {
            ((grid.r_max - grid.r_min) / h).round() as usize - 1
        };
        let g = RadialGrid::make_grid(d, grid.r_min, grid.r_max, n, grid.placement)?;
        let t = g.assemble(p)?;
        let residual = t.residual(&profile, res_opts)?;
        rows.push(OracleRow { h: g.spacing(), n, residual });
        stamps.push(GridStamp::of(&g));
    }

    let ratios: Vec<f64> = rows.windows(2).map(|w| w[0].residual / w[1].residual).collect();
    let order_estimate = ratios.last().map(|r| r.log2()).unwrap_or(f64::NAN);

    Ok(Outputs {
        results: Results::Oracle { rows, ratios, order_estimate },
        grids: stamps,
        tolerances: Tolerances::default(),
    })
}

fn run_gsr(job: &JobSpec) -> Result<Outputs, CliError> {
    let tol = job.tolerance.expect("resolved");
    let report = brink_core::threshold::gsr_identity_check(
        job.alpha.expect("resolved"),
        job.dimension,
        job.phi.as_ref().expect("resolved"),
        tol,
    )?;
    Ok(Outputs {
        results: Results::GsrCheck { report },
        grids: Vec::new(),
        tolerances: Tolerances { quadrature: Some(tol), ..Tolerances::default() },
    })
}

fn run_coupling(job: &JobSpec) -> Result<Outputs, CliError> {
    let p = job.potential.as_ref().expect("resolved");
    let grid = job.grid.as_ref().expect("resolved");
    let opts = job.options.as_ref().expect("resolved");
    let tol = job.tolerance.expect("resolved");
    let schedule = schedule_from(grid);
    let outcome = critical_coupling(
        p,
        job.dimension,
        job.beta_range.expect("resolved"),
        &schedule,
        tol,
        opts,
    )?;
    let family = build_box_family(grid, job.dimension)?;
    let eig_tol =
        eigen_tolerance(binding_floor(family.last().expect("nonempty"), opts.floor_factor));
    Ok(Outputs {
        results: Results::Coupling { outcome },
        grids: family.iter().map(GridStamp::of).collect(),
        tolerances: Tolerances {
            eigen_bisection: Some(eig_tol),
            coupling_bisection: Some(tol),
            ..Tolerances::default()
        },
    })
}

/// Runs a resolved job, producing the full report. The job must have come
/// out of [`JobSpec::resolve`]; the echo embedded in the report is exactly
/// the input.
pub fn run(job: &JobSpec) -> Result<Report, CliError> {
    let started = Instant::now();
    let out = match job.command {
        Command::Solve => run_solve(job)?,
        Command::Sweep => run_sweep(job, false)?,
        Command::Classify => run_sweep(job, true)?,
        Command::Criterion => run_criterion(job)?,
        Command::Oracle => run_oracle(job)?,
        Command::GsrCheck => run_gsr(job)?,
        Command::Coupling => run_coupling(job)?,
    };
    Ok(Report {
        schema_version: job.schema_version,
        job: job.clone(),
        results: out.results,
        provenance: Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            grids: out.grids,
            tolerances: out.tolerances,
            wall_time_seconds: started.elapsed().as_secs_f64(),
        },
    })
}

/// One-line human summary of a report, for stdout.
pub fn summary(report: &Report) -> String {
    match &report.results {
        Results::Solve { e0, levels, .. } => {
            format!("solve: e0 = {e0:.6e} over {} grid level(s)", levels.len())
        }
        Results::Sweep { outcome } => {
            format!("sweep: {}", status_name(outcome))
        }
        Results::Classify { outcome } => {
            format!("classify: {}", status_name(outcome))
        }
        Results::Criterion { certificate } => match &certificate.regime {
            brink_core::threshold::Regime::NonExistence { m } => {
                format!("criterion: non-existence at order m = {m}")
            }
            brink_core::threshold::Regime::Existence { m, eps } => {
                format!("criterion: existence at order m = {m}, eps = {eps}")
            }
            brink_core::threshold::Regime::Inconclusive => "criterion: inconclusive".into(),
        },
        Results::Oracle { order_estimate, rows, .. } => {
            format!("oracle: order estimate {order_estimate:.3} over {} levels", rows.len())
        }
        Results::GsrCheck { report } => format!(
            "gsr-check: {} (relative discrepancy {:.3e})",
            if report.holds { "holds" } else { "violated" },
            report.relative_discrepancy
        ),
        Results::Coupling { outcome } => {
            format!("coupling: beta0 = {:.8} after {} probes", outcome.beta0, outcome.probes.len())
        }
    }
}

fn status_name(outcome: &SweepOutcome) -> &'static str {
    use brink_core::threshold::ThresholdStatus::*;
    match outcome.verdict.status {
        Subcritical => "subcritical",
        Critical => "critical",
        CriticalResonance => "critical_resonance",
        CriticalBoundState => "critical_bound_state",
        Inconclusive => "inconclusive",
    }
}
