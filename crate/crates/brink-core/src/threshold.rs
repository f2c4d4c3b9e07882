//! Zero-energy threshold diagnostics: pointwise tail certificates, critical
//! coupling search, criticality sweeps under a compactly supported probe,
//! and resonance vs bound-state classification of the near-threshold mode.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::eigensolve::{eigenvector, lowest_eigs};
use crate::iterlog::{self, ComparisonOrder};
use crate::potentials::{exact_zero_mode, v_alpha_d, Potential};
use crate::quadrature::{self, QuadOptions};
use crate::radialgrid::{GridFunction, Placement, RadialGrid};
use crate::{BrinkError, Result};

/// Outcome of the pointwise tail-certificate scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Regime {
    /// The potential stays below the borderline tail at comparison order m
    /// throughout the window: no square-integrable zero-energy mode.
    NonExistence { m: u32 },
    /// The potential dominates the borderline tail with linear surplus eps
    /// at order m throughout the window: a zero-energy mode of a critical
    /// potential is square-integrable.
    Existence { m: u32, eps: f64 },
    /// Neither one-sided bound holds on the window at any scanned order.
    Inconclusive,
}

/// Certificate produced by `criterion_check`. The margin is the minimum of
/// slack · r² over the sampled window (0 when inconclusive), so it is the
/// coefficient scale by which the winning inequality holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionCertificate {
    pub regime: Regime,
    pub tail_window: (f64, f64),
    pub margin: f64,
}

/// Verdict status of a criticality sweep or classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdStatus {
    Subcritical,
    /// Every probe coupling binds; the mode type has not been examined.
    /// Refined to one of the two variants below by `classify_zero_mode`.
    Critical,
    CriticalResonance,
    CriticalBoundState,
    Inconclusive,
}

/// One row of the λ trace: probe coupling, extrapolated ground energy,
/// fraction of the mode's mass inside the inner radius, and the fitted
/// decay exponent of the mode on the tail window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaProbe {
    pub lambda: f64,
    pub e0: f64,
    pub inner_mass: f64,
    pub gamma_eff: f64,
}

/// Which comparison envelope the computed tail resembles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeSide {
    /// Decays at least as fast as the square-integrable upper envelope.
    BelowUpper,
    /// Sits at the scale of the borderline lower envelope.
    AboveLower,
}

/// Coarse summary of where the computed mode's tail sits relative to the
/// comparison envelopes: order m, an effective log-surplus eps, and the
/// side. The eps is read off the fitted decay exponent, so it is a
/// descriptive number, not a certified bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub m: u32,
    pub eps: f64,
    pub side: EnvelopeSide,
}

/// Verdict of a sweep or classification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdVerdict {
    pub status: ThresholdStatus,
    /// Critical coupling, when this verdict came from a coupling search.
    pub beta0: Option<f64>,
    pub lambda_trace: Vec<LambdaProbe>,
    pub envelope_fit: Option<EnvelopeFit>,
}

/// Full output of a sweep or classification, including the per-grid energy
/// table and the decay-fit samples for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub verdict: ThresholdVerdict,
    /// e0_table[i][j] is the ground energy at lambda i on grid j.
    pub e0_table: Vec<Vec<f64>>,
    pub grid_r_maxes: Vec<f64>,
    /// Binding threshold: energies below −floor count as bound.
    pub floor: f64,
    /// (r, |ψ|) samples used for the decay fit at the smallest λ.
    pub decay_points: Vec<(f64, f64)>,
}

/// Pointwise comparison report for `agmon_check`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// max of v/w over the calibration annulus.
    pub constant_c: f64,
    /// Whether v ≤ C·w holds on the whole tail beyond the annulus start.
    pub holds: bool,
    pub first_violation: Option<f64>,
    pub annulus: (f64, f64),
}

/// One probe of the coupling bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingProbe {
    pub beta: f64,
    pub e0: f64,
    pub bound: bool,
}

/// Result of the critical-coupling search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingOutcome {
    pub beta0: f64,
    pub probes: Vec<CouplingProbe>,
}

/// Test profile for the quadratic-form identity check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum PhiProfile {
    Gaussian { width: f64 },
    Constant,
}

/// Report of the ground-state quadratic-form identity check: the form of
/// φψ (gradient plus potential part) against the weighted Dirichlet
/// integral of φ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GsrReport {
    pub lhs_gradient: f64,
    pub lhs_potential: f64,
    pub rhs: f64,
    pub relative_discrepancy: f64,
    pub holds: bool,
}

/// Uniform grid family sharing one spacing, with the outer radius swept
/// over an increasing schedule (typically doubling) so box effects can be
/// extrapolated away.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSchedule {
    pub r_maxes: Vec<f64>,
    pub h: f64,
    /// Inner radius; defaults to 0, the staggered origin-regular layout.
    #[serde(default)]
    pub r_min: Option<f64>,
}

impl GridSchedule {
    pub fn doubling(r_first: f64, count: usize, h: f64) -> Self {
        let r_maxes = (0..count).map(|k| r_first * (1u64 << k) as f64).collect();
        GridSchedule { r_maxes, h, r_min: None }
    }

    pub fn finest_r_max(&self) -> f64 {
        self.r_maxes.last().copied().unwrap_or(f64::NAN)
    }

    fn build(&self, d: u32, min_grids: usize) -> Result<Vec<RadialGrid>> {
        if self.r_maxes.len() < min_grids {
            return Err(BrinkError::param(
                "grid_schedule",
                format!("need at least {min_grids} outer radii, got {}", self.r_maxes.len()),
            ));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(BrinkError::param("h", "spacing must be finite and > 0"));
        }
        for w in self.r_maxes.windows(2) {
            if !(w[0] < w[1]) {
                return Err(BrinkError::param("r_maxes", "must be strictly increasing"));
            }
        }
        let r_min = self.r_min.unwrap_or(0.0);
        if !(r_min >= 0.0) {
            return Err(BrinkError::param("r_min", "must be >= 0"));
        }
        let mut grids = Vec::with_capacity(self.r_maxes.len());
        for &r_max in &self.r_maxes {
            let n = if r_min == 0.0 {
                // staggered layout: n + 1/2 cells of width h span [0, r_max]
                (r_max / self.h - 0.5).round() as i64
            } else {
                ((r_max - r_min) / self.h).round() as i64 - 1
            };
            if n < 3 {
                return Err(BrinkError::param("grid_schedule", "grid too coarse for r_max"));
            }
            grids.push(RadialGrid::make_grid(d, r_min, r_max, n as usize, Placement::Uniform)?);
        }
        Ok(grids)
    }
}

/// Tuning knobs shared by sweeps and classification. Field semantics are
/// documented where they are used; the defaults are the calibrated values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Binding floor factor: energies above −floor_factor·(π/(r_max−r_min))²
    /// are indistinguishable from box artifacts.
    #[serde(default = "default_floor_factor")]
    pub floor_factor: f64,
    /// Minimum inner-mass fraction a bound-state candidate must keep at
    /// every probe coupling.
    #[serde(default = "default_mass_floor")]
    pub mass_floor: f64,
    /// Required per-halving inner-mass decay factor for the resonance
    /// signature (applied as overall factor ratio^(probes−1)).
    #[serde(default = "default_mass_decay_ratio")]
    pub mass_decay_ratio: f64,
    /// Slack added to d/2 when comparing the fitted decay exponent.
    #[serde(default = "default_gamma_slack")]
    pub gamma_slack: f64,
    /// Decay-fit window as fractions of r_max; the upper end is further
    /// capped at 0.1/κ, ahead of the exponential turnover of a mode at
    /// energy −κ², so the log-log slope reads the power-law prefactor.
    #[serde(default = "default_fit_window")]
    pub fit_window: (f64, f64),
    #[serde(default = "default_fit_samples")]
    pub fit_samples: usize,
    /// Worker threads for independent λ probes. Affects wall time only;
    /// results are merged in λ order, so output is identical at any count.
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_floor_factor() -> f64 {
    3.0
}
fn default_mass_floor() -> f64 {
    0.05
}
fn default_mass_decay_ratio() -> f64 {
    1.5
}
fn default_gamma_slack() -> f64 {
    0.1
}
fn default_fit_window() -> (f64, f64) {
    (0.1, 0.5)
}
fn default_fit_samples() -> usize {
    48
}
fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            floor_factor: default_floor_factor(),
            mass_floor: default_mass_floor(),
            mass_decay_ratio: default_mass_decay_ratio(),
            gamma_slack: default_gamma_slack(),
            fit_window: default_fit_window(),
            fit_samples: default_fit_samples(),
            workers: default_workers(),
        }
    }
}

/// Probe couplings used when the caller does not supply a schedule.
pub const DEFAULT_LAMBDAS: [f64; 5] = [0.4, 0.2, 0.1, 0.05, 0.025];

/// Binding floor of a grid: the energy scale of pure box truncation.
pub fn binding_floor(grid: &RadialGrid, floor_factor: f64) -> f64 {
    let width = grid.r_max - grid.r_min;
    floor_factor * (std::f64::consts::PI / width) * (std::f64::consts::PI / width)
}

/// Absolute eigenvalue-bisection tolerance used by the threshold drivers
/// for a given binding floor: four digits below the floor, capped at 1e−10.
pub fn eigen_tolerance(floor: f64) -> f64 {
    (floor * 1e-4).min(1e-10)
}

fn ground_energy(p: &Potential, grid: &RadialGrid, tol: f64) -> Result<f64> {
    let t = grid.assemble(p)?;
    Ok(lowest_eigs(&t, 1, tol)?.eigenvalues[0])
}

/// Aitken Δ² extrapolation over the last three entries, guarded against
/// non-geometric sequences (falls back to the last value).
fn aitken_extrapolate(es: &[f64]) -> f64 {
    let n = es.len();
    if n < 3 {
        return *es.last().expect("nonempty energy schedule");
    }
    let (e1, e2, e3) = (es[n - 3], es[n - 2], es[n - 1]);
    let d1 = e2 - e1;
    let d2 = e3 - e2;
    let dd = d2 - d1;
    let scale = e3.abs().max(e2.abs()).max(1e-300);
    if dd.abs() <= 1e-12 * scale {
        return e3;
    }
    let x = e3 - d2 * d2 / dd;
    if !x.is_finite() || (x - e3).abs() > 10.0 * d2.abs() {
        return e3;
    }
    x
}

// ---------------------------------------------------------------------------
// pointwise tail certificates
// ---------------------------------------------------------------------------

const DYADIC_EPS_EXPONENTS: std::ops::RangeInclusive<i32> = -10..=4;

/// Scans comparison orders m = 0..=m_max against the potential's tail on a
/// log-spaced sample of the window (R, R_max).
///
/// At each order the one-sided checks are tried in turn: first the
/// non-existence bound V ≤ borderline, then the existence bound
/// V ≥ borderline + eps·P_m/r² for dyadic eps from 2⁴ down to 2⁻¹⁰
/// (largest surviving surplus wins). The first order that certifies a side
/// is returned.
pub fn criterion_check(
    p: &Potential,
    d: u32,
    m_max: u32,
    window: (f64, f64),
    samples: usize,
) -> Result<CriterionCertificate> {
    let (r_lo, r_hi) = window;
    if m_max > iterlog::TOWER_MAX {
        return Err(BrinkError::param(
            "m_max",
            format!("comparison orders beyond {} overflow", iterlog::TOWER_MAX),
        ));
    }
    let deepest_floor = iterlog::tower(m_max)?;
    if !(r_lo > deepest_floor) {
        return Err(BrinkError::param(
            "window",
            format!(
                "window start {r_lo} must exceed the order-{m_max} domain floor {deepest_floor}"
            ),
        ));
    }
    if !(r_lo < r_hi && r_hi.is_finite()) {
        return Err(BrinkError::param("window", "need R < R_max, both finite"));
    }
    if samples < 2 {
        return Err(BrinkError::param("samples", "need at least 2 sample radii"));
    }

    let radii: Vec<f64> = (0..samples)
        .map(|k| r_lo * (r_hi / r_lo).powf(k as f64 / (samples as f64 - 1.0)))
        .collect();
    let values: Vec<f64> = {
        let mut v = Vec::with_capacity(samples);
        for &r in &radii {
            v.push(p.eval(r)?);
        }
        v
    };

    for m in 0..=m_max {
        let order0 = ComparisonOrder::lower(m);
        // non-existence side: V ≤ borderline everywhere on the window
        let mut margin = f64::INFINITY;
        let mut ok = true;
        for (&r, &v) in radii.iter().zip(values.iter()) {
            let slack = (iterlog::rhs_threshold(order0, d, r)? - v) * r * r;
            if slack < 0.0 {
                ok = false;
                break;
            }
            margin = margin.min(slack);
        }
        if ok {
            return Ok(CriterionCertificate {
                regime: Regime::NonExistence { m },
                tail_window: window,
                margin,
            });
        }

        // existence side: largest dyadic surplus that holds everywhere
        for exp in DYADIC_EPS_EXPONENTS.rev() {
            let eps = 2.0_f64.powi(exp);
            let order = ComparisonOrder::new(m, eps)?;
            let mut margin = f64::INFINITY;
            let mut ok = true;
            for (&r, &v) in radii.iter().zip(values.iter()) {
                let slack = (v - iterlog::rhs_threshold(order, d, r)?) * r * r;
                if slack < 0.0 {
                    ok = false;
                    break;
                }
                margin = margin.min(slack);
            }
            if ok {
                return Ok(CriterionCertificate {
                    regime: Regime::Existence { m, eps },
                    tail_window: window,
                    margin,
                });
            }
        }
    }

    Ok(CriterionCertificate { regime: Regime::Inconclusive, tail_window: window, margin: 0.0 })
}

// ---------------------------------------------------------------------------
// coupling search
// ---------------------------------------------------------------------------

/// Bisects the coupling β at which β·V first binds a state below the box
/// floor of the finest grid. The range endpoints must straddle the
/// transition (lo unbound, hi bound), otherwise a bracket error carrying
/// the endpoint probes is returned.
pub fn critical_coupling(
    v: &Potential,
    d: u32,
    beta_range: (f64, f64),
    schedule: &GridSchedule,
    tol: f64,
    opts: &SweepOptions,
) -> Result<CouplingOutcome> {
    let (mut lo, mut hi) = beta_range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(BrinkError::param("beta_range", "need finite lo < hi"));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(BrinkError::param("tol", "must be finite and > 0"));
    }
    let grids = schedule.build(d, 1)?;
    let finest = grids.last().expect("schedule nonempty");
    let floor = binding_floor(finest, opts.floor_factor);
    let eig_tol = eigen_tolerance(floor);

    let mut probes = Vec::new();
    let probe = |beta: f64, probes: &mut Vec<CouplingProbe>| -> Result<bool> {
        let p = Potential::affine(vec![(beta, v.clone())]);
        let e0 = ground_energy(&p, finest, eig_tol)?;
        let bound = e0 < -floor;
        probes.push(CouplingProbe { beta, e0, bound });
        Ok(bound)
    };

    if probe(lo, &mut probes)? {
        return Err(BrinkError::Bracket {
            what: "critical coupling",
            detail: format!(
                "lower endpoint already binds: E0({lo}) = {:.6e} < -{floor:.3e}",
                probes[0].e0
            ),
        });
    }
    if !probe(hi, &mut probes)? {
        return Err(BrinkError::Bracket {
            what: "critical coupling",
            detail: format!(
                "upper endpoint does not bind: E0({hi}) = {:.6e} >= -{floor:.3e}",
                probes[1].e0
            ),
        });
    }

    let mut guard = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if probe(mid, &mut probes)? {
            hi = mid;
        } else {
            lo = mid;
        }
        guard += 1;
        if guard > 200 {
            return Err(BrinkError::Convergence {
                what: "coupling bisection",
                iterations: guard,
                achieved: hi - lo,
                wanted: tol,
            });
        }
    }
    Ok(CouplingOutcome { beta0: 0.5 * (lo + hi), probes })
}

// ---------------------------------------------------------------------------
// sweeps and classification
// ---------------------------------------------------------------------------

struct ProbeData {
    probe: LambdaProbe,
    e0s: Vec<f64>,
    fit_points: Vec<(f64, f64)>,
}

fn validate_probe_inputs(w: &Potential, lambdas: &[f64], first_r_max: f64) -> Result<()> {
    if lambdas.len() < 4 {
        return Err(BrinkError::param("lambdas", "need at least 4 probe couplings"));
    }
    for pair in lambdas.windows(2) {
        if !(pair[0] > pair[1]) {
            return Err(BrinkError::param("lambdas", "must be strictly decreasing"));
        }
    }
    if !(lambdas[lambdas.len() - 1] > 0.0 && lambdas[0].is_finite()) {
        return Err(BrinkError::param("lambdas", "must be positive and finite"));
    }
    let support = w.support_bound().ok_or_else(|| {
        BrinkError::param("w", "probe potential must have certified compact support")
    })?;
    if !w.is_nonnegative() {
        return Err(BrinkError::param("w", "probe potential must be nonnegative"));
    }
    if support >= 0.5 * first_r_max {
        return Err(BrinkError::param(
            "w",
            format!("probe support {support} too large for smallest box {first_r_max}"),
        ));
    }
    Ok(())
}

/// Least-squares slope of −ln|ψ| against ln r on a log-spaced window,
/// with ψ = u / r^{(d−1)/2}. The window's upper end is capped at 0.1/κ:
/// below that point the mode still follows its power-law prefactor, and
/// even a tail that is already fully exponential inflates the slope by
/// at most about 0.07 there, within the classification slack. Returns
/// NaN when no stable window exists. Also returns the (r, |ψ|) samples
/// the fit used.
pub fn fit_decay(
    grid: &RadialGrid,
    u: &GridFunction,
    d: u32,
    kappa: f64,
    opts: &SweepOptions,
) -> (f64, Vec<(f64, f64)>) {
    let r_max = grid.r_max;
    let mut r2 = opts.fit_window.1 * r_max;
    if kappa > 0.0 {
        r2 = r2.min(0.1 / kappa);
    }
    r2 = r2.min(0.95 * r_max);
    let mut r1 = (opts.fit_window.0 * r_max).min(r2 / 4.0).max(6.0);
    if r1 >= r2 {
        r1 = r2 / 4.0;
    }
    let nodes = grid.nodes();
    if r1 <= nodes[0] {
        r1 = nodes[0] * 1.5;
    }
    if !(r1 < r2) {
        return (f64::NAN, Vec::new());
    }

    let power = (d as f64 - 1.0) / 2.0;
    let h = nodes[1] - nodes[0];
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(opts.fit_samples);
    let mut last_idx = usize::MAX;
    for k in 0..opts.fit_samples {
        let t = k as f64 / (opts.fit_samples as f64 - 1.0);
        let target = r1 * (r2 / r1).powf(t);
        let idx = (((target - nodes[0]) / h).round() as i64).clamp(0, grid.n as i64 - 1) as usize;
        if idx == last_idx {
            continue;
        }
        last_idx = idx;
        let r = nodes[idx];
        let psi = u.values[idx].abs() / r.powf(power);
        if psi > 1e-280 {
            pts.push((r, psi));
        }
    }
    if pts.len() < 8 {
        return (f64::NAN, pts);
    }
    let xs: Vec<f64> = pts.iter().map(|(r, _)| r.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, p)| -p.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / xs.len() as f64;
    let ybar = ys.iter().sum::<f64>() / ys.len() as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        sxx += (x - xbar) * (x - xbar);
        sxy += (x - xbar) * (y - ybar);
    }
    if sxx <= 0.0 {
        return (f64::NAN, pts);
    }
    (sxy / sxx, pts)
}

fn probe_lambda(
    v: &Potential,
    w: &Potential,
    d: u32,
    lambda: f64,
    grids: &[RadialGrid],
    inner_radius: f64,
    opts: &SweepOptions,
) -> Result<ProbeData> {
    let p = Potential::affine(vec![(1.0, v.clone()), (-lambda, w.clone())]);
    let finest = grids.last().expect("nonempty grid schedule");
    let floor = binding_floor(finest, opts.floor_factor);
    let eig_tol = eigen_tolerance(floor);

    let mut e0s = Vec::with_capacity(grids.len());
    for g in grids {
        e0s.push(ground_energy(&p, g, eig_tol)?);
    }
    let e_inf = aitken_extrapolate(&e0s);

    let t = finest.assemble(&p)?;
    let (mode, _res) = eigenvector(&t, e0s[e0s.len() - 1], eig_tol)?;
    let inner: f64 = finest
        .nodes()
        .iter()
        .zip(mode.values.iter())
        .take_while(|(r, _)| **r <= inner_radius)
        .map(|(_, u)| u * u)
        .sum();

    let kappa = (-e_inf).max(0.0).sqrt();
    let (gamma_eff, fit_points) = fit_decay(finest, &mode, d, kappa, opts);

    Ok(ProbeData {
        probe: LambdaProbe { lambda, e0: e_inf, inner_mass: inner, gamma_eff },
        e0s,
        fit_points,
    })
}

/// Runs `f` over the items on up to `workers` threads, returning results in
/// item order. Errors are propagated by the earliest failing index.
fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync,
{
    let n = items.len();
    let w = workers.max(1).min(n.max(1));
    if w <= 1 || n <= 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let out: Mutex<Vec<Option<Result<R>>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..w {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let r = f(&items[i]);
                out.lock().expect("result store poisoned")[i] = Some(r);
            });
        }
    });
    out.into_inner()
        .expect("result store poisoned")
        .into_iter()
        .map(|slot| slot.expect("worker filled every slot"))
        .collect()
}

fn run_probes(
    v: &Potential,
    w: &Potential,
    d: u32,
    lambdas: &[f64],
    schedule: &GridSchedule,
    inner_radius: f64,
    opts: &SweepOptions,
) -> Result<(Vec<ProbeData>, f64, Vec<f64>)> {
    let grids = schedule.build(d, 3)?;
    validate_probe_inputs(w, lambdas, grids[0].r_max)?;
    let floor = binding_floor(grids.last().expect("nonempty"), opts.floor_factor);
    let data = parallel_map(lambdas, opts.workers, |&lambda| {
        probe_lambda(v, w, d, lambda, &grids, inner_radius, opts)
    })?;
    let r_maxes = grids.iter().map(|g| g.r_max).collect();
    Ok((data, floor, r_maxes))
}

fn assemble_outcome(
    status: ThresholdStatus,
    envelope_fit: Option<EnvelopeFit>,
    data: Vec<ProbeData>,
    floor: f64,
    grid_r_maxes: Vec<f64>,
) -> SweepOutcome {
    let lambda_trace: Vec<LambdaProbe> = data.iter().map(|p| p.probe).collect();
    let e0_table = data.iter().map(|p| p.e0s.clone()).collect();
    let decay_points = data.last().map(|p| p.fit_points.clone()).unwrap_or_default();
    SweepOutcome {
        verdict: ThresholdVerdict { status, beta0: None, lambda_trace, envelope_fit },
        e0_table,
        grid_r_maxes,
        floor,
        decay_points,
    }
}

fn binding_flags(data: &[ProbeData], floor: f64) -> Vec<bool> {
    data.iter().map(|p| p.probe.e0 < -floor).collect()
}

fn sweep_status(flags: &[bool]) -> ThresholdStatus {
    let monotone = flags.windows(2).all(|w| w[0] || !w[1]);
    if flags.iter().all(|&b| b) {
        ThresholdStatus::Critical
    } else if monotone && !flags[flags.len() - 1] {
        ThresholdStatus::Subcritical
    } else {
        ThresholdStatus::Inconclusive
    }
}

/// Sweeps decreasing probe couplings λ and tests whether V − λW keeps a
/// state bound below the box floor. Binding at every probe is the critical
/// signature (`Critical`, unrefined); a monotone loss of binding that ends
/// unbound is `Subcritical`; anything non-monotone is `Inconclusive`.
/// The resonance/bound-state refinement is `classify_zero_mode`'s job.
pub fn criticality_sweep(
    v: &Potential,
    w: &Potential,
    d: u32,
    lambdas: &[f64],
    schedule: &GridSchedule,
    opts: &SweepOptions,
) -> Result<SweepOutcome> {
    let (data, floor, r_maxes) = run_probes(v, w, d, lambdas, schedule, 10.0, opts)?;
    let flags = binding_flags(&data, floor);
    Ok(assemble_outcome(sweep_status(&flags), None, data, floor, r_maxes))
}

/// Whether a sweep outcome's probes all bound (the critical signature).
pub fn all_bound(outcome: &SweepOutcome) -> bool {
    outcome.lambda_trace_flags().iter().all(|&b| b)
}

impl SweepOutcome {
    /// Binding flags of the trace rows against this outcome's floor.
    pub fn lambda_trace_flags(&self) -> Vec<bool> {
        self.verdict.lambda_trace.iter().map(|p| p.e0 < -self.floor).collect()
    }
}

/// Classifies the near-threshold mode of a critical potential as a
/// resonance or a bound state by driving λ → 0 and watching where the
/// mode's mass and decay exponent go.
///
/// Requires the sweep signature first: if the probes do not all bind, the
/// sweep verdict (subcritical or inconclusive) is returned unchanged.
pub fn classify_zero_mode(
    v: &Potential,
    w: &Potential,
    d: u32,
    lambdas: &[f64],
    schedule: &GridSchedule,
    inner_radius: f64,
    opts: &SweepOptions,
) -> Result<SweepOutcome> {
    if !(inner_radius > 0.0) {
        return Err(BrinkError::param("inner_radius", "must be > 0"));
    }
    let (data, floor, r_maxes) = run_probes(v, w, d, lambdas, schedule, inner_radius, opts)?;
    let flags = binding_flags(&data, floor);
    match sweep_status(&flags) {
        ThresholdStatus::Critical => {} // all bound: classify below
        other => return Ok(assemble_outcome(other, None, data, floor, r_maxes)),
    }

    let masses: Vec<f64> = data.iter().map(|p| p.probe.inner_mass).collect();
    let gammas: Vec<f64> = data.iter().map(|p| p.probe.gamma_eff).collect();
    let gamma_last = *gammas.last().expect("validated nonempty");
    let half_d = d as f64 / 2.0;

    let keeps_mass = masses.iter().all(|&m| m >= opts.mass_floor);
    let is_bound_state = keeps_mass && gamma_last > half_d + opts.gamma_slack;

    let mass_monotone = masses.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    let halvings = masses.len().saturating_sub(1) as i32;
    let mass_collapses = mass_monotone
        && masses[0] >= masses[masses.len() - 1] * opts.mass_decay_ratio.powi(halvings);
    let is_resonance = mass_collapses || gamma_last <= half_d + opts.gamma_slack;

    let status = if is_bound_state {
        ThresholdStatus::CriticalBoundState
    } else if is_resonance {
        ThresholdStatus::CriticalResonance
    } else {
        ThresholdStatus::Inconclusive
    };
    let envelope = data.last().and_then(|p| fit_envelope(&p.fit_points, d));
    Ok(assemble_outcome(status, envelope, data, floor, r_maxes))
}

/// Picks the comparison family that best matches the sampled tail in
/// log-log coordinates: for each usable order m, the tail's offset from
/// the borderline profile is regressed on the m-th iterated log, and the
/// flat (borderline) model competes against the sloped (log-improved)
/// model, the latter winning only when it halves the residual. A positive
/// fitted surplus means the tail sits inside square-integrability.
fn fit_envelope(points: &[(f64, f64)], d: u32) -> Option<EnvelopeFit> {
    const MIN_POINTS: usize = 8;
    if points.len() < MIN_POINTS {
        return None;
    }
    let r_first = points[0].0;
    let mut best: Option<(f64, EnvelopeFit)> = None;
    for m in 0..=iterlog::TOWER_MAX {
        let floor = iterlog::tower(m).ok()?;
        if r_first <= 1.5 * floor + 1.0 {
            break;
        }
        let mut xs = Vec::with_capacity(points.len());
        let mut ys = Vec::with_capacity(points.len());
        for &(r, psi) in points {
            let lower = match iterlog::psi_lower(ComparisonOrder::lower(m), d, r) {
                Ok(v) if v > 0.0 => v,
                _ => continue,
            };
            let lm = match iterlog::iter_log(m, r) {
                Ok(v) if v > 0.0 => v,
                _ => continue,
            };
            if psi <= 0.0 {
                continue;
            }
            xs.push(0.5 * lm.ln());
            ys.push(lower.ln() - psi.ln());
        }
        if xs.len() < MIN_POINTS {
            continue;
        }
        let n = xs.len() as f64;
        let xbar = xs.iter().sum::<f64>() / n;
        let ybar = ys.iter().sum::<f64>() / n;
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        let mut syy = 0.0;
        for (x, y) in xs.iter().zip(ys.iter()) {
            sxx += (x - xbar) * (x - xbar);
            sxy += (x - xbar) * (y - ybar);
            syy += (y - ybar) * (y - ybar);
        }
        let flat_res = syy / n;
        let mut candidates =
            vec![(flat_res, EnvelopeFit { m, eps: 0.0, side: EnvelopeSide::AboveLower })];
        if sxx > 1e-12 {
            let eps = sxy / sxx;
            let sloped_res = (syy - sxy * sxy / sxx).max(0.0) / n;
            let side = if eps > 0.05 { EnvelopeSide::BelowUpper } else { EnvelopeSide::AboveLower };
            candidates.push((2.0 * sloped_res, EnvelopeFit { m, eps, side }));
        }
        for (res, fit) in candidates {
            if best.as_ref().is_none_or(|(b, _)| res < *b) {
                best = Some((res, fit));
            }
        }
    }
    best.map(|(_, fit)| fit)
}

// ---------------------------------------------------------------------------
// pointwise envelope comparison
// ---------------------------------------------------------------------------

/// Calibrates C = max v/w on the annulus [r, r+delta] of grid nodes and
/// then checks v ≤ C·w (up to one part in 10¹²) on every node beyond r.
pub fn agmon_check(
    v: &GridFunction,
    w: &GridFunction,
    grid: &RadialGrid,
    r: f64,
    delta: f64,
) -> Result<ComparisonReport> {
    let n = grid.n;
    if v.values.len() != n {
        return Err(BrinkError::Shape { what: "agmon v", expected: n, actual: v.values.len() });
    }
    if w.values.len() != n {
        return Err(BrinkError::Shape { what: "agmon w", expected: n, actual: w.values.len() });
    }
    if !(delta > 0.0 && r.is_finite() && r >= 0.0) {
        return Err(BrinkError::param("annulus", "need r >= 0 and delta > 0"));
    }
    if !(r + delta < grid.r_max) {
        return Err(BrinkError::param("annulus", "annulus must end inside the grid"));
    }
    let nodes = grid.nodes();
    let mut c = f64::NEG_INFINITY;
    let mut annulus_hits = 0usize;
    for (i, &ri) in nodes.iter().enumerate() {
        if ri < r {
            continue;
        }
        if w.values[i] <= 0.0 {
            return Err(BrinkError::param(
                "w",
                format!(
                    "envelope must be positive beyond the annulus start, got {} at r = {ri}",
                    w.values[i]
                ),
            ));
        }
        if ri <= r + delta {
            annulus_hits += 1;
            c = c.max(v.values[i] / w.values[i]);
        }
    }
    if annulus_hits == 0 {
        return Err(BrinkError::param("annulus", "no grid nodes inside the calibration annulus"));
    }

    let tolerance = 1.0 + 1e-12;
    let mut holds = true;
    let mut first_violation = None;
    for (i, &ri) in nodes.iter().enumerate() {
        if ri < r {
            continue;
        }
        if v.values[i] > c * w.values[i] * tolerance {
            holds = false;
            first_violation = Some(ri);
            break;
        }
    }
    Ok(ComparisonReport { constant_c: c, holds, first_violation, annulus: (r, r + delta) })
}

// ---------------------------------------------------------------------------
// ground-state quadratic-form identity
// ---------------------------------------------------------------------------

fn zero_mode_derivative(alpha: f64, d: u32, r: f64) -> f64 {
    let p = (2.0 - d as f64) / 4.0 - alpha / 2.0;
    2.0 * p * r * (1.0 + r * r).powf(p - 1.0)
}

/// Checks the ground-state quadratic-form identity for the solvable family:
/// the energy form of φ·ψ equals the ψ²-weighted Dirichlet integral of φ.
/// All three integrals are evaluated to `quad_tol`; the report's `holds`
/// flag compares the relative discrepancy against 10·quad_tol.
pub fn gsr_identity_check(
    alpha: f64,
    d: u32,
    phi: &PhiProfile,
    quad_tol: f64,
) -> Result<GsrReport> {
    if d < 1 {
        return Err(BrinkError::param("dim", "dimension must be >= 1"));
    }
    if !(quad_tol.is_finite() && quad_tol > 0.0) {
        return Err(BrinkError::param("quad_tol", "must be finite and > 0"));
    }
    let dm1 = d as f64 - 1.0;
    let psi = move |r: f64| exact_zero_mode(alpha, d, r);
    let dpsi = move |r: f64| zero_mode_derivative(alpha, d, r);

    #[allow(clippy::type_complexity)]
    let (phi_f, dphi_f, cut): (Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>, Option<f64>) =
        match phi {
            PhiProfile::Gaussian { width } => {
                let w = *width;
                if !(w.is_finite() && w > 0.0) {
                    return Err(BrinkError::param("width", "must be finite and > 0"));
                }
                (
                    Box::new(move |r: f64| (-r * r / (2.0 * w * w)).exp()),
                    Box::new(move |r: f64| -(r / (w * w)) * (-r * r / (2.0 * w * w)).exp()),
                    Some(8.0 * w + 4.0),
                )
            }
            PhiProfile::Constant => {
                if alpha <= 0.0 {
                    return Err(BrinkError::param(
                        "alpha",
                        "constant profile needs alpha > 0 for a finite energy form",
                    ));
                }
                (Box::new(|_| 1.0), Box::new(|_| 0.0), None)
            }
        };

    let opts = QuadOptions { abs_tol: quad_tol, rel_tol: quad_tol, max_intervals: 4096 };
    let run = |f: &dyn Fn(f64) -> f64| -> Result<f64> {
        match cut {
            Some(rc) => Ok(quadrature::integrate(|r| Ok(f(r)), 0.0, rc, opts)?.value),
            None => Ok(quadrature::integrate_to_infinity(|r| Ok(f(r)), 0.0, opts)?.value),
        }
    };

    let grad_integrand = |r: f64| {
        let g = dphi_f(r) * psi(r) + phi_f(r) * dpsi(r);
        g * g * r.powf(dm1)
    };
    let pot_integrand = |r: f64| {
        let fp = phi_f(r) * psi(r);
        v_alpha_d(alpha, d, r) * fp * fp * r.powf(dm1)
    };
    let rhs_integrand = |r: f64| {
        let dp = dphi_f(r);
        dp * dp * psi(r) * psi(r) * r.powf(dm1)
    };

    let lhs_gradient = run(&grad_integrand)?;
    let lhs_potential = run(&pot_integrand)?;
    let rhs = run(&rhs_integrand)?;

    let scale = lhs_gradient.abs().max(lhs_potential.abs()).max(rhs.abs()).max(1e-300);
    let relative_discrepancy = (lhs_gradient + lhs_potential - rhs).abs() / scale;
    Ok(GsrReport {
        lhs_gradient,
        lhs_potential,
        rhs,
        relative_discrepancy,
        holds: relative_discrepancy <= 10.0 * quad_tol,
    })
}
