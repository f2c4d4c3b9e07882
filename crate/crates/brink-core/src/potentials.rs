//! Radial potentials: the exactly solvable two-parameter family, wells,
//! bumps, comparison-family tails, sampled data, and affine combinations.
//!
//! The serialization schema here (`kind` tag plus parameter fields) is the
//! one job files use; see the workspace README for examples.

use serde::{Deserialize, Serialize};

use crate::iterlog::{self, ComparisonOrder};
use crate::quadrature::{self, QuadOptions};
use crate::{BrinkError, Result};

/// Which comparison-family potential a `ThresholdFamily` evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    /// Partner potential of the lower comparison function.
    Wm,
    /// Partner potential of the upper comparison function (uses `eps`).
    Ym,
    /// Sharp existence/absence comparison tail (uses `eps`).
    RhsThreshold,
}

/// One term of an affine combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineTerm {
    pub coefficient: f64,
    pub potential: Potential,
}

/// A radial potential. All variants are immutable value types; evaluation is
/// pure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    /// a/(1+r²) + b/(1+r²)² with a = α² − (d−2)²/4, b = 1 − (α+d/2)².
    /// Exactly solvable: `exact_zero_mode` is annihilated by −Δ + V.
    AlphaFamily { alpha: f64, dim: u32 },
    /// −depth on [0, radius), 0 outside.
    SquareWell { depth: f64, radius: f64 },
    /// height·cos²(π(r−center)/(2·radius)) on |r−center| < radius, 0 outside.
    /// Smooth, nonnegative, compactly supported.
    Bump { center: f64, radius: f64, height: f64 },
    /// Comparison-family potential of the given order; defined for r > e_m.
    ThresholdFamily {
        #[serde(flatten)]
        order: ComparisonOrder,
        which: ThresholdKind,
        dim: u32,
    },
    /// coefficient/r² beyond the cutoff, 0 below it.
    HardyTail { coefficient: f64, cutoff: f64 },
    /// Values sampled on strictly increasing radii; monotone cubic
    /// interpolation between nodes, constant extrapolation outside.
    GridSampled { radii: Vec<f64>, values: Vec<f64> },
    /// Signed sum Σ coefficientᵢ · potentialᵢ; an empty term list is the
    /// zero potential.
    Affine { terms: Vec<AffineTerm> },
}

/// Sign of a potential value or limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
    Zero,
}

/// Sign of the r^{−2}-scale tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailSign {
    Positive,
    Negative,
    /// |r²·V(r)| → 0: the tail decays faster than r^{−2}.
    DecayingFaster,
}

/// Tail and sign analysis of an analytic potential family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    /// Coefficient of the r^{−2} tail (limit of r²·V(r), when it exists).
    pub leading_coefficient: f64,
    pub sign_at_zero: Sign,
    pub sign_at_infinity: TailSign,
    /// Radii where the sign class of V changes, in increasing order.
    pub sign_changes: Vec<f64>,
}

/// V_{α,d}(r) = (4α² − (d−2)²)/(4(1+r²)) + (1 − (α+d/2)²)/(1+r²)².
///
/// Bounded on [0, ∞); identically zero exactly at α = (2−d)/2.
pub fn v_alpha_d(alpha: f64, d: u32, r: f64) -> f64 {
    let (a, b) = alpha_coefficients(alpha, d);
    let q = 1.0 + r * r;
    a / q + b / (q * q)
}

/// The pair (a, b) with V_{α,d} = a/(1+r²) + b/(1+r²)².
pub fn alpha_coefficients(alpha: f64, d: u32) -> (f64, f64) {
    let dm2 = d as f64 - 2.0;
    let a = alpha * alpha - dm2 * dm2 / 4.0;
    let s = alpha + d as f64 / 2.0;
    let b = 1.0 - s * s;
    (a, b)
}

/// ψ_{α,d}(r) = (1+r²)^{(2−d)/4 − α/2}, the zero-energy ground state (or
/// resonance profile) of −Δ + V_{α,d}.
pub fn exact_zero_mode(alpha: f64, d: u32, r: f64) -> f64 {
    let p = (2.0 - d as f64) / 4.0 - alpha / 2.0;
    (1.0 + r * r).powf(p)
}

/// Decay exponent of the exact zero mode: ψ_{α,d} ~ r^{−γ} with
/// γ = (d−2)/2 + α.
pub fn zero_mode_decay_exponent(alpha: f64, d: u32) -> f64 {
    (d as f64 - 2.0) / 2.0 + alpha
}

/// Defect of the mirror identity V_{−α,d} = V_{α,d} + 2αd(1+r²)^{−2}.
///
/// Identically zero up to round-off; exposed as a value so tests and reports
/// can assert the scale.
pub fn mirror_relation_check(alpha: f64, d: u32, r: f64) -> f64 {
    let q = 1.0 + r * r;
    v_alpha_d(-alpha, d, r) - v_alpha_d(alpha, d, r) - 2.0 * alpha * d as f64 / (q * q)
}

impl Potential {
    /// Convenience constructors for the common kinds.
    pub fn alpha_family(alpha: f64, dim: u32) -> Self {
        Potential::AlphaFamily { alpha, dim }
    }

    pub fn square_well(depth: f64, radius: f64) -> Self {
        Potential::SquareWell { depth, radius }
    }

    pub fn bump(center: f64, radius: f64, height: f64) -> Self {
        Potential::Bump { center, radius, height }
    }

    /// The default perturbation used by criticality sweeps: a unit-height
    /// smooth bump supported on [0, 1].
    pub fn default_bump() -> Self {
        Potential::bump(0.5, 0.5, 1.0)
    }

    /// The zero potential, as an empty affine combination.
    pub fn zero() -> Self {
        Potential::Affine { terms: Vec::new() }
    }

    /// βV − λW and friends.
    pub fn affine(terms: Vec<(f64, Potential)>) -> Self {
        Potential::Affine {
            terms: terms
                .into_iter()
                .map(|(coefficient, potential)| AffineTerm { coefficient, potential })
                .collect(),
        }
    }

    /// Radius below which evaluation is out of domain: e_m for the
    /// comparison families (their logs need r > e_m), 0 for everything else.
    /// Affine combinations take the maximum over their terms.
    pub fn domain_floor(&self) -> f64 {
        match self {
            Potential::ThresholdFamily { order, .. } => {
                iterlog::tower(order.m).unwrap_or(f64::INFINITY)
            }
            Potential::Affine { terms } => {
                terms.iter().map(|t| t.potential.domain_floor()).fold(0.0, f64::max)
            }
            _ => 0.0,
        }
    }

    /// Pointwise evaluation at radius r ≥ 0 (strictly above `domain_floor`
    /// when that is positive).
    pub fn eval(&self, r: f64) -> Result<f64> {
        Ok(self.eval_flagged(r)?.0)
    }

    /// Evaluation plus a flag set when a sampled potential had to
    /// extrapolate outside its radius range.
    pub fn eval_flagged(&self, r: f64) -> Result<(f64, bool)> {
        if !r.is_finite() || r < 0.0 {
            return Err(BrinkError::Domain { what: "potential eval", floor: 0.0, r });
        }
        match self {
            Potential::AlphaFamily { alpha, dim } => Ok((v_alpha_d(*alpha, *dim, r), false)),
            Potential::SquareWell { depth, radius } => {
                Ok((if r < *radius { -depth } else { 0.0 }, false))
            }
            Potential::Bump { center, radius, height } => {
                let v = if (r - center).abs() < *radius {
                    let c = (std::f64::consts::PI * (r - center) / (2.0 * radius)).cos();
                    height * c * c
                } else {
                    0.0
                };
                Ok((v, false))
            }
            Potential::ThresholdFamily { order, which, dim } => {
                let v = match which {
                    ThresholdKind::Wm => iterlog::w_m_closed(order.m, *dim, r)?,
                    ThresholdKind::Ym => iterlog::y_m_eps(*order, *dim, r)?,
                    ThresholdKind::RhsThreshold => iterlog::rhs_threshold(*order, *dim, r)?,
                };
                Ok((v, false))
            }
            Potential::HardyTail { coefficient, cutoff } => {
                Ok((if r >= *cutoff { coefficient / (r * r) } else { 0.0 }, false))
            }
            Potential::GridSampled { radii, values } => {
                let (v, extrapolated) = pchip_eval(radii, values, r)?;
                Ok((v, extrapolated))
            }
            Potential::Affine { terms } => {
                let mut sum = 0.0;
                let mut flag = false;
                for t in terms {
                    let (v, f) = t.potential.eval_flagged(r)?;
                    sum += t.coefficient * v;
                    flag |= f;
                }
                Ok((sum, flag))
            }
        }
    }

    /// Structural validation: positivity of sizes, monotone sample radii,
    /// representable tower floors. Called by the CLI before any compute.
    pub fn validate(&self) -> Result<()> {
        match self {
            Potential::AlphaFamily { alpha, dim } => {
                require_finite("alpha", *alpha)?;
                require_dim(*dim)
            }
            Potential::SquareWell { depth, radius } => {
                require_positive("depth", *depth)?;
                require_positive("radius", *radius)
            }
            Potential::Bump { center, radius, height } => {
                require_finite("center", *center)?;
                if *center < 0.0 {
                    return Err(BrinkError::param("center", "must be >= 0"));
                }
                require_positive("radius", *radius)?;
                require_positive("height", *height)
            }
            Potential::ThresholdFamily { order, dim, .. } => {
                if order.eps < 0.0 || !order.eps.is_finite() {
                    return Err(BrinkError::param("eps", "must be finite and >= 0"));
                }
                if iterlog::tower(order.m).is_err() {
                    return Err(BrinkError::param(
                        "m",
                        format!("domain floor e_{} is not representable", order.m),
                    ));
                }
                require_dim(*dim)
            }
            Potential::HardyTail { coefficient, cutoff } => {
                require_finite("coefficient", *coefficient)?;
                require_positive("cutoff", *cutoff)
            }
            Potential::GridSampled { radii, values } => {
                if radii.len() != values.len() {
                    return Err(BrinkError::Shape {
                        what: "grid_sampled radii/values",
                        expected: radii.len(),
                        actual: values.len(),
                    });
                }
                if radii.len() < 2 {
                    return Err(BrinkError::param("radii", "need at least 2 sample points"));
                }
                for w in radii.windows(2) {
                    if !(w[0] < w[1]) {
                        return Err(BrinkError::param("radii", "must be strictly increasing"));
                    }
                }
                if radii[0] < 0.0 || radii.iter().chain(values.iter()).any(|x| !x.is_finite()) {
                    return Err(BrinkError::param("radii", "samples must be finite, radii >= 0"));
                }
                Ok(())
            }
            Potential::Affine { terms } => {
                for t in terms {
                    require_finite("coefficient", t.coefficient)?;
                    t.potential.validate()?;
                }
                Ok(())
            }
        }
    }

    /// Smallest radius beyond which the potential vanishes identically, when
    /// one can be certified structurally.
    pub fn support_bound(&self) -> Option<f64> {
        match self {
            Potential::SquareWell { radius, .. } => Some(*radius),
            Potential::Bump { center, radius, .. } => Some(center + radius),
            Potential::Affine { terms } => {
                let mut bound = 0.0_f64;
                for t in terms {
                    bound = bound.max(t.potential.support_bound()?);
                }
                Some(bound)
            }
            _ => None,
        }
    }

    /// Whether the potential is certifiably nonnegative everywhere.
    pub fn is_nonnegative(&self) -> bool {
        match self {
            Potential::Bump { .. } => true,
            Potential::HardyTail { coefficient, .. } => *coefficient >= 0.0,
            Potential::GridSampled { values, .. } => values.iter().all(|v| *v >= 0.0),
            Potential::Affine { terms } => {
                terms.iter().all(|t| t.coefficient >= 0.0 && t.potential.is_nonnegative())
            }
            _ => false,
        }
    }

    /// Flattens nested affine combinations into a single term list
    /// (associativity of the signed sum). Other kinds pass through.
    pub fn flatten(self) -> Self {
        fn push(acc: &mut Vec<AffineTerm>, coeff: f64, p: Potential) {
            match p {
                Potential::Affine { terms } => {
                    for t in terms {
                        push(acc, coeff * t.coefficient, t.potential);
                    }
                }
                other => acc.push(AffineTerm { coefficient: coeff, potential: other }),
            }
        }
        match self {
            Potential::Affine { terms } => {
                let mut acc = Vec::new();
                for t in terms {
                    push(&mut acc, t.coefficient, t.potential);
                }
                Potential::Affine { terms: acc }
            }
            other => other,
        }
    }
}

fn require_positive(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(BrinkError::param(name, format!("must be finite and > 0, got {x}")))
    }
}

fn require_finite(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(BrinkError::param(name, format!("must be finite, got {x}")))
    }
}

fn require_dim(d: u32) -> Result<()> {
    if d >= 1 {
        Ok(())
    } else {
        Err(BrinkError::param("dim", "dimension must be >= 1"))
    }
}

/// Monotone cubic (PCHIP-type) interpolation with constant extrapolation.
/// Returns (value, extrapolated?).
fn pchip_eval(radii: &[f64], values: &[f64], r: f64) -> Result<(f64, bool)> {
    let n = radii.len();
    if n != values.len() || n < 2 {
        return Err(BrinkError::Shape { what: "grid_sampled", expected: n, actual: values.len() });
    }
    if r <= radii[0] {
        return Ok((values[0], r < radii[0]));
    }
    if r >= radii[n - 1] {
        return Ok((values[n - 1], r > radii[n - 1]));
    }
    // segment search
    let seg = match radii.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
        Ok(i) => return Ok((values[i], false)),
        Err(i) => i - 1,
    };

    let h = |i: usize| radii[i + 1] - radii[i];
    let delta = |i: usize| (values[i + 1] - values[i]) / h(i);

    // shape-preserving tangents: weighted harmonic mean inside, clamped
    // three-point formula at the ends
    let tangent = |i: usize| -> f64 {
        if i == 0 || i == n - 1 {
            let (d0, d1, h0, h1) = if i == 0 {
                (delta(0), delta(1.min(n - 2)), h(0), h(1.min(n - 2)))
            } else {
                (
                    delta(n - 2),
                    delta(n.saturating_sub(3).min(n - 2)),
                    h(n - 2),
                    h(n.saturating_sub(3).min(n - 2)),
                )
            };
            if n == 2 {
                return d0;
            }
            let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
            if m * d0 <= 0.0 {
                0.0
            } else if d0 * d1 < 0.0 && m.abs() > 3.0 * d0.abs() {
                3.0 * d0
            } else {
                m
            }
        } else {
            let dm = delta(i - 1);
            let dp = delta(i);
            if dm * dp <= 0.0 {
                0.0
            } else {
                let w1 = 2.0 * h(i) + h(i - 1);
                let w2 = h(i) + 2.0 * h(i - 1);
                (w1 + w2) / (w1 / dm + w2 / dp)
            }
        }
    };

    let (x0, x1) = (radii[seg], radii[seg + 1]);
    let (y0, y1) = (values[seg], values[seg + 1]);
    let (m0, m1) = (tangent(seg), tangent(seg + 1));
    let hs = x1 - x0;
    let t = (r - x0) / hs;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    Ok((h00 * y0 + h10 * hs * m0 + h01 * y1 + h11 * hs * m1, false))
}

fn sign_of(v: f64) -> Sign {
    if v > 0.0 {
        Sign::Positive
    } else if v < 0.0 {
        Sign::Negative
    } else {
        Sign::Zero
    }
}

/// Tail and sign analysis of an analytic potential.
///
/// Sampled potentials are rejected: asymptotics from finite data are an
/// estimation problem, not an algebraic one.
pub fn tail_analysis(p: &Potential) -> Result<TailReport> {
    if matches!(p, Potential::GridSampled { .. }) {
        return Err(BrinkError::Unsupported {
            what: "tail_analysis of grid-sampled potentials".into(),
        });
    }
    if let Potential::Affine { terms } = p {
        if terms
            .iter()
            .any(|t| matches!(t.potential.clone().flatten(), Potential::GridSampled { .. }))
        {
            return Err(BrinkError::Unsupported {
                what: "tail_analysis of grid-sampled potentials".into(),
            });
        }
    }

    let leading = leading_tail_coefficient(p);
    let floor = p.domain_floor();

    // sign at zero: V(0) when defined, the r → floor⁺ limit otherwise
    let sign_at_zero = if floor == 0.0 {
        sign_of(p.eval(0.0)?)
    } else {
        // comparison families blow up to +∞ at their domain floor, except
        // the pure m=0 cases which extend down to powers of 1/r²
        sign_at_floor(p)?
    };

    let sign_at_infinity = if leading > 0.0 {
        TailSign::Positive
    } else if leading < 0.0 {
        TailSign::Negative
    } else {
        // leading r^{-2} coefficient vanishes; decide between genuinely
        // faster decay and slower log-corrected tails by probing r²·V
        let probe = |r: f64| p.eval(r).map(|v| v * r * r);
        let far = probe(1e8_f64.max(floor * 10.0))?;
        if far.abs() < 1e-9 {
            TailSign::DecayingFaster
        } else if far > 0.0 {
            TailSign::Positive
        } else {
            TailSign::Negative
        }
    };

    let sign_changes = locate_sign_changes(p, floor)?;

    Ok(TailReport { leading_coefficient: leading, sign_at_zero, sign_at_infinity, sign_changes })
}

fn leading_tail_coefficient(p: &Potential) -> f64 {
    match p {
        Potential::AlphaFamily { alpha, dim } => alpha_coefficients(*alpha, *dim).0,
        Potential::SquareWell { .. } | Potential::Bump { .. } => 0.0,
        Potential::ThresholdFamily { dim, .. } => {
            let df = *dim as f64;
            df * (4.0 - df) / 4.0
        }
        Potential::HardyTail { coefficient, .. } => *coefficient,
        Potential::GridSampled { .. } => f64::NAN,
        Potential::Affine { terms } => {
            terms.iter().map(|t| t.coefficient * leading_tail_coefficient(&t.potential)).sum()
        }
    }
}

fn sign_at_floor(p: &Potential) -> Result<Sign> {
    let floor = p.domain_floor();
    // approach the floor from above on a shrinking sequence; the comparison
    // families diverge to +∞ there, affine mixtures may do anything
    let r = if floor == 0.0 { 1e-8 } else { floor * (1.0 + 1e-8) };
    Ok(sign_of(p.eval(r)?))
}

fn locate_sign_changes(p: &Potential, floor: f64) -> Result<Vec<f64>> {
    // sample the sign class on a log grid, then bisect each transition
    let lo = if floor == 0.0 { 1e-3 } else { floor * (1.0 + 1e-6) };
    let hi = 1e6_f64.max(lo * 1e3);
    let samples = 600;
    let mut out = Vec::new();
    let mut prev_r = lo;
    let mut prev_s = sign_of(p.eval(lo)?);
    for k in 1..=samples {
        let t = k as f64 / samples as f64;
        let r = lo * (hi / lo).powf(t);
        let s = sign_of(p.eval(r)?);
        if s != prev_s {
            out.push(bisect_sign_change(p, prev_r, r, prev_s)?);
        }
        prev_r = r;
        prev_s = s;
    }
    Ok(out)
}

fn bisect_sign_change(p: &Potential, mut a: f64, mut b: f64, sa: Sign) -> Result<f64> {
    for _ in 0..80 {
        let mid = 0.5 * (a + b);
        if sign_of(p.eval(mid)?) == sa {
            a = mid;
        } else {
            b = mid;
        }
        if (b - a) <= 1e-12 * b.abs().max(1.0) {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

/// Adaptive quadrature of ∫_a^b p(r) dr to absolute tolerance `tol`.
///
/// The integrand is the even extension p(|r|), so symmetric line integrals
/// of the d = 1 family work directly.
pub fn quadrature(p: &Potential, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(BrinkError::param("tol", "must be > 0"));
    }
    let opts = QuadOptions { abs_tol: tol, rel_tol: 0.0, max_intervals: 4096 };
    let f = |x: f64| p.eval(x.abs());
    Ok(quadrature::integrate(f, a, b, opts)?.value)
}
