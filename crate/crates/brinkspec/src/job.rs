//! Job documents: parsing, validation, and resolution of defaults.
//!
//! A job file is one json object. `command` picks the operation, the rest
//! of the fields configure it. [`JobSpec::resolve`] validates every field
//! before any compute starts and fills in the documented defaults, so the
//! job echoed in a report is fully explicit and can be re-run as is.

use brink_core::potentials::Potential;
use brink_core::radialgrid::Placement;
use brink_core::threshold::{PhiProfile, SweepOptions, DEFAULT_LAMBDAS};
use brink_core::{BrinkError, ErrorClass};
use serde::{Deserialize, Serialize};

/// Error type of the CLI layer, carrying the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad job document, bad arguments, or a domain/parameter error from
    /// the library. Exit code 2.
    Validation(String),
    /// A solver exhausted its budget or a bracketing search failed.
    /// Exit code 3.
    Solver(String),
    /// Failed reading or writing a file. Exit code 1.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Solver(m) | CliError::Io(m) => m,
        }
    }
}

impl From<BrinkError> for CliError {
    fn from(e: BrinkError) -> Self {
        match e.class() {
            ErrorClass::Validation => CliError::Validation(e.to_string()),
            ErrorClass::Solver => CliError::Solver(e.to_string()),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.message())
    }
}

impl std::error::Error for CliError {}

/// The seven operations a job can request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Ground state of −Δ + V on one box or a doubling family of boxes.
    Solve,
    /// Criticality sweep: does every probe coupling produce a bound state?
    Sweep,
    /// Sweep plus resonance / bound-state classification of the zero mode.
    Classify,
    /// Pointwise tail certificate for existence / absence of an L² zero mode.
    Criterion,
    /// Residual convergence table for a potential with an exact zero mode.
    Oracle,
    /// Ground-state quadratic-form identity check for the solvable family.
    GsrCheck,
    /// Critical coupling search for β·V.
    Coupling,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Classify => "classify",
            Command::Criterion => "criterion",
            Command::Oracle => "oracle",
            Command::GsrCheck => "gsr-check",
            Command::Coupling => "coupling",
        }
    }
}

/// Discretization block of a job.
///
/// `r_min = 0` selects the origin-regular staggered layout; a positive
/// `r_min` is a hard Dirichlet wall (required for potentials with a domain
/// floor and for geometric node placement). Exactly one of `h` / `n` fixes
/// the resolution. `doublings` grows the box (`r_max`, `2·r_max`, …) for
/// commands that extrapolate over box size; `refinements` halves `h` at
/// fixed box for the oracle's convergence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    #[serde(default)]
    pub r_min: f64,
    pub r_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default = "default_placement")]
    pub placement: Placement,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doublings: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refinements: Option<u32>,
}

fn default_placement() -> Placement {
    Placement::Uniform
}

impl GridParams {
    /// Spacing of the base grid, derived from `n` when `h` is absent.
    pub fn spacing(&self) -> f64 {
        match (self.h, self.n) {
            (Some(h), _) => h,
            (None, Some(n)) => {
                if self.r_min == 0.0 {
                    // staggered layout: nodes at (k − ½)h with n·h ≈ r_max
                    self.r_max / (n as f64 + 0.5)
                } else {
                    (self.r_max - self.r_min) / (n as f64 + 1.0)
                }
            }
            (None, None) => f64::NAN,
        }
    }

    /// Node count of the base grid, derived from `h` when `n` is absent.
    pub fn nodes(&self) -> usize {
        match (self.n, self.h) {
            (Some(n), _) => n,
            (None, Some(h)) => {
                if self.r_min == 0.0 {
                    ((self.r_max / h) - 0.5).round() as usize
                } else {
                    ((self.r_max - self.r_min) / h).round() as usize - 1
                }
            }
            (None, None) => 0,
        }
    }

    fn validate(&self, cmd: Command) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Validation(msg));
        if !(self.r_min.is_finite() && self.r_min >= 0.0) {
            return bad(format!("grid.r_min: must be finite and >= 0, got {}", self.r_min));
        }
        if !(self.r_max.is_finite() && self.r_max > self.r_min) {
            return bad(format!(
                "grid.r_max: must be finite and exceed r_min = {}, got {}",
                self.r_min, self.r_max
            ));
        }
        match (self.h, self.n) {
            (Some(_), Some(_)) => return bad("grid: give exactly one of h and n, not both".into()),
            (None, None) => return bad("grid: give exactly one of h and n".into()),
            (Some(h), None) => {
                if !(h.is_finite() && h > 0.0 && h < self.r_max - self.r_min) {
                    return bad(format!("grid.h: must be in (0, r_max - r_min), got {h}"));
                }
            }
            (None, Some(n)) => {
                if n < 16 {
                    return bad(format!("grid.n: need at least 16 nodes, got {n}"));
                }
            }
        }
        if matches!(self.placement, Placement::Geometric { .. }) {
            if self.r_min <= 0.0 {
                return bad("grid.placement: geometric placement needs r_min > 0".into());
            }
            if self.n.is_none() {
                return bad("grid.placement: geometric placement is sized by n, not h".into());
            }
            if self.doublings.unwrap_or(0) > 0 || self.refinements.unwrap_or(0) > 0 {
                return bad(
                    "grid.placement: geometric placement supports a single grid only".into()
                );
            }
        }
        let doublings = self.doublings.unwrap_or(0);
        if doublings > 6 {
            return bad(format!("grid.doublings: at most 6, got {doublings}"));
        }
        if doublings > 0 && self.h.is_none() {
            return bad(
                "grid.doublings: box-doubling schedules share one spacing; give h, not n".into()
            );
        }
        let refinements = self.refinements.unwrap_or(0);
        if refinements > 6 {
            return bad(format!("grid.refinements: at most 6, got {refinements}"));
        }
        if refinements > 0 && cmd != Command::Oracle {
            return bad("grid.refinements: only the oracle command refines the spacing".into());
        }
        if doublings > 0 && cmd == Command::Oracle {
            return bad(
                "grid.doublings: the oracle command refines h at a fixed box; use grid.refinements"
                    .into(),
            );
        }
        let finest_span = (self.r_max - self.r_min) * f64::from(1u32 << doublings);
        let finest_nodes = finest_span / self.spacing() * f64::from(1u32 << refinements);
        if !(finest_nodes <= 5e7) {
            return bad(format!(
                "grid: finest grid would have {finest_nodes:.2e} nodes; the limit is 5e7"
            ));
        }
        Ok(())
    }
}

fn default_schema_version() -> u32 {
    1
}

/// One job: a command plus everything it needs, in a single document.
///
/// Fields not used by the requested command must be absent; `resolve`
/// rejects stray configuration instead of silently ignoring it. The
/// resolved job echoed in a report has every default made explicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Potential>,
    pub dimension: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridParams>,
    /// Probe couplings for sweep / classify, strictly decreasing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    /// Probe potential W for sweep / classify (compact support, W ≥ 0).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<Potential>,
    /// Inner-mass radius for solve / classify.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_radius: Option<f64>,
    /// Radial window: tail-certificate scan (criterion) or residual
    /// restriction (oracle).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<(f64, f64)>,
    /// Deepest comparison order the criterion scan may use.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_max: Option<u32>,
    /// Sample count for the criterion scan.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Family parameter for gsr-check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Test profile for gsr-check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<PhiProfile>,
    /// Quadrature tolerance (gsr-check) or coupling bisection tolerance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Bracketing interval for the coupling search.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_range: Option<(f64, f64)>,
    /// Sweep machinery knobs (floors, fit window, workers, …).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<SweepOptions>,
}

/// Innermost dimension a potential document carries, if any. Used to keep
/// the job's `dimension` and family potentials congruent.
fn potential_dimension(p: &Potential) -> Option<u32> {
    match p {
        Potential::AlphaFamily { dim, .. } => Some(*dim),
        Potential::ThresholdFamily { dim, .. } => Some(*dim),
        Potential::Affine { terms } => terms.iter().find_map(|t| potential_dimension(&t.potential)),
        _ => None,
    }
}

impl JobSpec {
    /// Parses a job document, reporting the offending field on failure.
    pub fn from_json(text: &str) -> Result<JobSpec, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("job document: {e}")))
    }

    /// Validates every field against the requested command and fills in the
    /// documented defaults, returning the fully explicit job for the echo.
    /// Resolution is idempotent: resolving the echo is the identity.
    pub fn resolve(mut self) -> Result<JobSpec, CliError> {
        let bad = |msg: String| Err(CliError::Validation(msg));
        if self.schema_version != 1 {
            return bad(format!(
                "schema_version: this tool understands version 1, got {}",
                self.schema_version
            ));
        }
        if !(1..=5).contains(&self.dimension) {
            return bad(format!("dimension: must be 1..=5, got {}", self.dimension));
        }
        let cmd = self.command;

        // fields that must be absent, per command
        let forbid: &[(&str, bool)] = &[
            ("potential", cmd == Command::GsrCheck && self.potential.is_some()),
            ("grid", matches!(cmd, Command::Criterion | Command::GsrCheck) && self.grid.is_some()),
            (
                "lambdas",
                !matches!(cmd, Command::Sweep | Command::Classify) && self.lambdas.is_some(),
            ),
            ("probe", !matches!(cmd, Command::Sweep | Command::Classify) && self.probe.is_some()),
            (
                "inner_radius",
                !matches!(cmd, Command::Solve | Command::Classify) && self.inner_radius.is_some(),
            ),
            (
                "window",
                !matches!(cmd, Command::Criterion | Command::Oracle) && self.window.is_some(),
            ),
            ("m_max", cmd != Command::Criterion && self.m_max.is_some()),
            ("samples", cmd != Command::Criterion && self.samples.is_some()),
            ("alpha", cmd != Command::GsrCheck && self.alpha.is_some()),
            ("phi", cmd != Command::GsrCheck && self.phi.is_some()),
            (
                "tolerance",
                !matches!(cmd, Command::GsrCheck | Command::Coupling) && self.tolerance.is_some(),
            ),
            ("beta_range", cmd != Command::Coupling && self.beta_range.is_some()),
            (
                "options",
                matches!(cmd, Command::Criterion | Command::Oracle | Command::GsrCheck)
                    && self.options.is_some(),
            ),
        ];
        for (name, stray) in forbid {
            if *stray {
                return bad(format!("{name}: not used by the {} command", cmd.name()));
            }
        }

        // potential: required by everything except gsr-check
        if cmd != Command::GsrCheck {
            let p = match &self.potential {
                Some(p) => p,
                None => return bad(format!("potential: required by the {} command", cmd.name())),
            };
            p.validate()?;
            if let Some(pd) = potential_dimension(p) {
                if pd != self.dimension {
                    return bad(format!(
                        "dimension: job says {}, but the potential document is a d = {pd} family",
                        self.dimension
                    ));
                }
            }
        }

        // grid: required by the discretizing commands
        match cmd {
            Command::Solve
            | Command::Sweep
            | Command::Classify
            | Command::Oracle
            | Command::Coupling => {
                let grid = match &mut self.grid {
                    Some(g) => g,
                    None => return bad(format!("grid: required by the {} command", cmd.name())),
                };
                // defaults before validation so the echo is what ran
                match cmd {
                    Command::Sweep | Command::Classify => {
                        let d = grid.doublings.get_or_insert(2);
                        if *d < 2 {
                            return bad(format!(
                                "grid.doublings: sweeps extrapolate over at least 3 boxes; need >= 2, got {d}"
                            ));
                        }
                    }
                    Command::Oracle => {
                        grid.refinements.get_or_insert(2);
                    }
                    _ => {
                        grid.doublings.get_or_insert(0);
                    }
                }
                grid.validate(cmd)?;
            }
            Command::Criterion | Command::GsrCheck => {}
        }

        // command-specific defaults and checks
        match cmd {
            Command::Solve => {
                let r = *self.inner_radius.get_or_insert(10.0);
                if !(r.is_finite() && r > 0.0) {
                    return bad(format!("inner_radius: must be finite and > 0, got {r}"));
                }
                self.options.get_or_insert_with(SweepOptions::default);
            }
            Command::Sweep | Command::Classify => {
                let lambdas = self.lambdas.get_or_insert_with(|| DEFAULT_LAMBDAS.to_vec());
                if lambdas.len() < 4 {
                    return bad(format!(
                        "lambdas: need at least 4 probe couplings, got {}",
                        lambdas.len()
                    ));
                }
                self.probe.get_or_insert_with(Potential::default_bump);
                self.probe.as_ref().expect("just filled").validate()?;
                if cmd == Command::Classify {
                    let r = *self.inner_radius.get_or_insert(10.0);
                    if !(r.is_finite() && r > 0.0) {
                        return bad(format!("inner_radius: must be finite and > 0, got {r}"));
                    }
                }
                self.options.get_or_insert_with(SweepOptions::default);
            }
            Command::Criterion => {
                self.m_max.get_or_insert(1);
                let s = *self.samples.get_or_insert(400);
                if !(16..=1_000_000).contains(&s) {
                    return bad(format!("samples: need 16..=1e6 scan points, got {s}"));
                }
                let w = *self.window.get_or_insert((10.0, 1e4));
                if !(w.0.is_finite() && w.1.is_finite() && 0.0 < w.0 && w.0 < w.1) {
                    return bad(format!("window: need finite 0 < lo < hi, got {w:?}"));
                }
            }
            Command::Oracle => {
                if let Some(w) = self.window {
                    if !(w.0.is_finite() && w.1.is_finite() && w.0 < w.1) {
                        return bad(format!("window: need finite lo < hi, got {w:?}"));
                    }
                }
            }
            Command::GsrCheck => {
                let a = match self.alpha {
                    Some(a) => a,
                    None => return bad("alpha: required by the gsr-check command".into()),
                };
                if !a.is_finite() {
                    return bad(format!("alpha: must be finite, got {a}"));
                }
                self.phi.get_or_insert(PhiProfile::Gaussian { width: 1.0 });
                let t = *self.tolerance.get_or_insert(1e-10);
                if !(t.is_finite() && t > 0.0) {
                    return bad(format!("tolerance: must be finite and > 0, got {t}"));
                }
            }
            Command::Coupling => {
                let range = match self.beta_range {
                    Some(r) => r,
                    None => return bad("beta_range: required by the coupling command".into()),
                };
                if !(range.0.is_finite() && range.1.is_finite() && range.0 < range.1) {
                    return bad(format!("beta_range: need finite lo < hi, got {range:?}"));
                }
                let t = *self.tolerance.get_or_insert(1e-5);
                if !(t.is_finite() && t > 0.0) {
                    return bad(format!("tolerance: must be finite and > 0, got {t}"));
                }
                self.options.get_or_insert_with(SweepOptions::default);
            }
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_solve() -> JobSpec {
        JobSpec::from_json(
            r#"{
                "command": "solve",
                "potential": {"kind": "alpha_family", "alpha": 2.0, "dim": 3},
                "dimension": 3,
                "grid": {"r_max": 40.0, "h": 0.01}
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn unknown_fields_are_named_in_the_error() {
        let err = JobSpec::from_json(r#"{"command": "solve", "dimension": 3, "lambdaz": []}"#)
            .unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.message().contains("lambdaz"), "got: {}", err.message());
    }

    #[test]
    fn resolution_is_idempotent_on_the_echo() {
        let resolved = minimal_solve().resolve().unwrap();
        let text = serde_json::to_string(&resolved).unwrap();
        let again = JobSpec::from_json(&text).unwrap().resolve().unwrap();
        assert_eq!(serde_json::to_value(&resolved).unwrap(), serde_json::to_value(&again).unwrap());
    }

    #[test]
    fn stray_fields_for_the_command_are_rejected() {
        let mut job = minimal_solve();
        job.beta_range = Some((0.1, 2.0));
        let err = job.resolve().unwrap_err();
        assert!(err.message().starts_with("beta_range"), "got: {}", err.message());
    }

    #[test]
    fn dimension_mismatch_with_the_family_is_rejected() {
        let mut job = minimal_solve();
        job.dimension = 4;
        let err = job.resolve().unwrap_err();
        assert!(err.message().starts_with("dimension"), "got: {}", err.message());
    }

    #[test]
    fn sweep_defaults_fill_schedule_probe_and_options() {
        let job = JobSpec::from_json(
            r#"{
                "command": "sweep",
                "potential": {"kind": "alpha_family", "alpha": 2.0, "dim": 3},
                "dimension": 3,
                "grid": {"r_max": 60.0, "h": 0.02}
            }"#,
        )
        .unwrap()
        .resolve()
        .unwrap();
        assert_eq!(job.lambdas.as_deref(), Some(&DEFAULT_LAMBDAS[..]));
        assert!(job.probe.is_some());
        assert!(job.options.is_some());
        assert_eq!(job.grid.as_ref().unwrap().doublings, Some(2));
    }

    #[test]
    fn geometric_placement_requires_positive_inner_radius() {
        let job = JobSpec::from_json(
            r#"{
                "command": "solve",
                "potential": {"kind": "alpha_family", "alpha": 2.0, "dim": 3},
                "dimension": 3,
                "grid": {"r_max": 40.0, "n": 4000, "placement": {"rule": "geometric"}}
            }"#,
        )
        .unwrap();
        let err = job.resolve().unwrap_err();
        assert!(err.message().contains("geometric"), "got: {}", err.message());
    }
}
