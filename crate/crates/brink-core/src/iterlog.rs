//! Iterated logarithms and the comparison scales at the edge of square
//! integrability.
//!
//! Everything here is built from `ln_n`, the n-fold logarithm, defined for
//! radii above the exponential tower `e_n` (`e_0 = 0`, `e_{n+1} = e^{e_n}`).
//! On top of it sit three families of radial functions and their associated
//! inverse-square-with-log-corrections potentials:
//!
//! * `psi_gamma(γ, r) = r^{-γ}` with potential `w_gamma`,
//! * `psi_lower(m, d, r) = r^{-d/2} ∏_{j≤m} ln_j^{-1/2}(r)`, which sits just
//!   outside L² near infinity for every m, with potential `w_m_*`,
//! * `psi_upper(m, ε, d, r) = psi_lower · ln_m^{-ε/2}(r)`, which is barely
//!   square integrable for ε > 0, with potential `y_m_eps`.
//!
//! `rhs_threshold` evaluates the sharp comparison tails that decide whether
//! a zero-energy eigenvalue can exist, and `hardy_log_weight` the matching
//! logarithmically corrected Hardy weight.

use serde::{Deserialize, Serialize};

use crate::{BrinkError, Result};

/// Largest n for which the tower value e_n fits in an f64.
///
/// e_4 ≈ 3.814e6 is fine; e_5 = exp(e_4) is far beyond f64 range, so asking
/// for it is an overflow, not a saturation.
pub const TOWER_MAX: u32 = 4;

/// Correction depth m plus tail exponent ε for the upper comparison family.
///
/// `eps = 0` collapses upper-family objects onto the lower family:
/// `psi_upper(m, 0, ·) = psi_lower(m, ·)` and `y_m_eps(m, 0, ·) = w_m(·)`,
/// bitwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonOrder {
    pub m: u32,
    pub eps: f64,
}

impl ComparisonOrder {
    /// Validated constructor; `eps` must be non-negative and finite.
    pub fn new(m: u32, eps: f64) -> Result<Self> {
        if !eps.is_finite() || eps < 0.0 {
            return Err(BrinkError::param("eps", format!("must be finite and >= 0, got {eps}")));
        }
        Ok(ComparisonOrder { m, eps })
    }

    /// Order with no tail exponent (the lower family / absence bounds).
    pub fn lower(m: u32) -> Self {
        ComparisonOrder { m, eps: 0.0 }
    }
}

/// The domain floor for `ln_n`: evaluation requires r > e_n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogDomainBound {
    pub n: u32,
    pub e_n: f64,
}

impl LogDomainBound {
    pub fn for_depth(n: u32) -> Result<Self> {
        Ok(LogDomainBound { n, e_n: tower(n)? })
    }
}

/// Square-integrability of a comparison function near infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailClass {
    SquareIntegrableAtInfinity,
    NotSquareIntegrable,
    /// Exactly on the integrability boundary (the ε = 0 upper family, which
    /// coincides with the lower family).
    EdgeCase,
}

/// Which comparison family a tail query refers to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComparisonFamily {
    PsiGamma(f64),
    PsiLower(u32),
    PsiUpper(u32, f64),
}

/// Tower of exponentials: e_0 = 0, e_{n+1} = exp(e_n).
pub fn tower(n: u32) -> Result<f64> {
    if n > TOWER_MAX {
        return Err(BrinkError::Overflow { what: "tower", n });
    }
    let mut e = 0.0_f64;
    for _ in 0..n {
        e = e.exp();
    }
    Ok(e)
}

/// Domain floor for depth n, as a plain number: e_n, or +inf when e_n
/// overflows (every representable r is then out of domain).
fn domain_floor(n: u32) -> f64 {
    tower(n).unwrap_or(f64::INFINITY)
}

/// n-fold iterated logarithm; `iter_log(0, r) = r` by convention so that
/// empty products and the m = 0 upper family need no special casing.
///
/// The domain guard is a strict `r > e_n` with no tolerance: callers wanting
/// a safety margin must provide it themselves.
pub fn iter_log(n: u32, r: f64) -> Result<f64> {
    let floor = domain_floor(n);
    if !(r > floor) {
        return Err(BrinkError::Domain { what: "iter_log", floor, r });
    }
    let mut v = r;
    for depth in 1..=n {
        v = v.ln();
        // The tower guard above makes v > 0 mathematically; rounding at the
        // very boundary could still produce a non-positive intermediate.
        if !(v > 0.0) && depth < n {
            return Err(BrinkError::Domain { what: "iter_log", floor, r });
        }
    }
    Ok(v)
}

/// Running products P_j = ∏_{k=1}^j ln_k^{-1}(r) for j = 1..=m.
///
/// Returns the vector [P_1, ..., P_m] (empty for m = 0). Shared by every
/// formula below; the closed-form/recursive cross-check exercises how the
/// products are *combined*, not how they are produced.
fn log_products(m: u32, r: f64) -> Result<Vec<f64>> {
    let floor = domain_floor(m);
    if !(r > floor) {
        return Err(BrinkError::Domain { what: "iterated log scale", floor, r });
    }
    let mut out = Vec::with_capacity(m as usize);
    let mut l = r;
    let mut p = 1.0_f64;
    for _ in 0..m {
        l = l.ln();
        p /= l;
        out.push(p);
    }
    Ok(out)
}

/// P_m = ∏_{k=1}^m ln_k^{-1}(r), with the empty product equal to 1.
fn product_m(m: u32, r: f64) -> Result<f64> {
    Ok(log_products(m, r)?.last().copied().unwrap_or(1.0))
}

/// Power-law comparison function r^{-γ}.
///
/// Requires r > 0; γ may be any real (γ = 0 gives the constant 1).
pub fn psi_gamma(gamma: f64, r: f64) -> f64 {
    debug_assert!(r > 0.0, "psi_gamma requires r > 0");
    r.powf(-gamma)
}

/// Lower comparison function r^{-d/2} ∏_{j=1}^m ln_j^{-1/2}(r).
///
/// Just fails to be square integrable near infinity for every m; the `eps`
/// field of `order` is ignored.
pub fn psi_lower(order: ComparisonOrder, d: u32, r: f64) -> Result<f64> {
    let p_m = product_m(order.m, r)?;
    Ok(r.powf(-(d as f64) / 2.0) * p_m.sqrt())
}

/// Upper comparison function ψ_{ℓ,m}(r) · ln_m^{-ε/2}(r).
///
/// For m = 0 the extra factor uses ln_0(r) = r, so
/// `psi_upper({0, ε}, d, r) = r^{-(d+ε)/2}`.
pub fn psi_upper(order: ComparisonOrder, d: u32, r: f64) -> Result<f64> {
    let lower = psi_lower(order, d, r)?;
    let ln_m = iter_log(order.m, r)?;
    Ok(lower * ln_m.powf(-order.eps / 2.0))
}

/// Potential with ψ_γ as zero mode: W_γ(r) = γ(γ+2−d)/r².
pub fn w_gamma(gamma: f64, d: u32, r: f64) -> f64 {
    debug_assert!(r > 0.0, "w_gamma requires r > 0");
    gamma * (gamma + 2.0 - d as f64) / (r * r)
}

/// Potential with ψ_{ℓ,m} as zero mode, via its closed form
///
/// W_m(r) = [ d(4−d)/4 + S_m + S_m²/4 + D_m/2 ] / r²
///
/// with S_m = Σ_{j≤m} P_j and D_m = Σ_{j≤m} Σ_{l≤j} P_l P_j.
pub fn w_m_closed(m: u32, d: u32, r: f64) -> Result<f64> {
    let ps = log_products(m, r)?;
    let c = d as f64 * (4.0 - d as f64) / 4.0;
    let mut s = 0.0;
    let mut dsum = 0.0;
    let mut prefix = 0.0;
    for &p in &ps {
        prefix += p;
        s += p;
        dsum += p * prefix;
    }
    Ok((c + s + s * s / 4.0 + dsum / 2.0) / (r * r))
}

/// Potential with ψ_{ℓ,m} as zero mode, via the update recursion
///
/// W_0 = d(4−d)/(4r²),
/// W_{k+1} = W_k + [ (3/4) P_{k+1}² + P_{k+1} (1 + S_k) ] / r².
///
/// Serves as an independent combination of the same log products, used as an
/// oracle for `w_m_closed`.
pub fn w_m_recursive(m: u32, d: u32, r: f64) -> Result<f64> {
    let ps = log_products(m, r)?;
    let r2 = r * r;
    let mut w = d as f64 * (4.0 - d as f64) / (4.0 * r2);
    let mut s = 0.0;
    for &p in &ps {
        w += (0.75 * p * p + p * (1.0 + s)) / r2;
        s += p;
    }
    Ok(w)
}

/// Potential with ψ_{u,m,ε} as zero mode:
///
/// Y_{m,ε}(r) = W_m(r) + [ (ε²/4) P_m² + ε P_m + ε P_m S_m ] / r².
///
/// ε = 0 collapses to W_m exactly. For m = 0 (P_0 = 1, S_0 = 0) this equals
/// `w_gamma((d+ε)/2, d, r)`.
pub fn y_m_eps(order: ComparisonOrder, d: u32, r: f64) -> Result<f64> {
    let ps = log_products(order.m, r)?;
    let w = w_m_closed(order.m, d, r)?;
    let p_m = ps.last().copied().unwrap_or(1.0);
    let s_m: f64 = ps.iter().sum();
    let eps = order.eps;
    Ok(w + (eps * eps / 4.0 * p_m * p_m + eps * p_m + eps * p_m * s_m) / (r * r))
}

/// Sharp comparison tail deciding zero-energy eigenvalue existence:
///
/// d(4−d)/(4r²) + (1/r²) Σ_{j=1}^m P_j + (ε/r²) P_m.
///
/// With ε = 0 this is the absence bound (a potential lying below it near
/// infinity admits no zero-energy eigenvalue); with ε > 0 it is the
/// existence bound for critical potentials lying above it.
pub fn rhs_threshold(order: ComparisonOrder, d: u32, r: f64) -> Result<f64> {
    let ps = log_products(order.m, r)?;
    let c = d as f64 * (4.0 - d as f64) / 4.0;
    let s: f64 = ps.iter().sum();
    let p_m = ps.last().copied().unwrap_or(1.0);
    Ok((c + s + order.eps * p_m) / (r * r))
}

/// Logarithmically corrected Hardy weight:
///
/// (d−2)²/(4r²) + (1/(4r²)) Σ_{j=1}^m P_j.
pub fn hardy_log_weight(m: u32, d: u32, r: f64) -> Result<f64> {
    let ps = log_products(m, r)?;
    let s: f64 = ps.iter().sum();
    let dm2 = d as f64 - 2.0;
    Ok((dm2 * dm2 + s) / (4.0 * r * r))
}

/// Analytic square-integrability verdict near infinity for a comparison
/// family in dimension d (no quadrature involved):
///
/// * ψ_γ is in L² outside a ball iff γ > d/2;
/// * ψ_{ℓ,m} is never in L² (each log factor only slows the divergence);
/// * ψ_{u,m,ε} is in L² for every ε > 0; ε = 0 sits exactly on the edge.
pub fn tail_l2_class(family: ComparisonFamily, d: u32) -> Result<TailClass> {
    match family {
        ComparisonFamily::PsiGamma(gamma) => {
            if !(gamma > 0.0) {
                return Err(BrinkError::param(
                    "gamma",
                    format!("tail classification needs gamma > 0, got {gamma}"),
                ));
            }
            if gamma > d as f64 / 2.0 {
                Ok(TailClass::SquareIntegrableAtInfinity)
            } else {
                Ok(TailClass::NotSquareIntegrable)
            }
        }
        ComparisonFamily::PsiLower(_) => Ok(TailClass::NotSquareIntegrable),
        ComparisonFamily::PsiUpper(_, eps) => {
            if eps < 0.0 || !eps.is_finite() {
                return Err(BrinkError::param(
                    "eps",
                    format!("must be finite and >= 0, got {eps}"),
                ));
            }
            if eps == 0.0 {
                Ok(TailClass::EdgeCase)
            } else {
                Ok(TailClass::SquareIntegrableAtInfinity)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const E: f64 = std::f64::consts::E;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn tower_matches_frozen_values() {
        assert_eq!(tower(0).unwrap(), 0.0);
        assert_eq!(tower(1).unwrap(), 1.0);
        assert_eq!(tower(2).unwrap(), E);
        // high-precision references: e^e and e^(e^e)
        assert!(close(tower(3).unwrap(), 15.154_262_241_479_264, 1e-15));
        assert!(close(tower(4).unwrap(), 3_814_279.104_760_220_6, 1e-14));
    }

    #[test]
    fn tower_overflows_above_cap() {
        assert!(matches!(tower(5), Err(BrinkError::Overflow { n: 5, .. })));
        assert!(matches!(tower(20), Err(BrinkError::Overflow { .. })));
    }

    #[test]
    fn iter_log_frozen_and_trivial_values() {
        assert_eq!(iter_log(0, 7.25).unwrap(), 7.25);
        assert!(close(iter_log(1, E).unwrap(), 1.0, 1e-15));
        // ln(ln(100)), 25-digit reference 1.527179625807901109220445
        assert!(close(iter_log(2, 100.0).unwrap(), 1.527_179_625_807_901_1, 1e-15));
    }

    #[test]
    fn iter_log_domain_guard_is_strict() {
        assert!(matches!(iter_log(2, E), Err(BrinkError::Domain { .. })));
        assert!(matches!(iter_log(1, 1.0), Err(BrinkError::Domain { .. })));
        assert!(matches!(iter_log(1, 0.2), Err(BrinkError::Domain { .. })));
        assert!(iter_log(2, E * 1.000_001).is_ok());
        // depth 5 has an unrepresentable floor: everything is out of domain
        assert!(matches!(iter_log(5, 1e300), Err(BrinkError::Domain { .. })));
    }

    #[test]
    fn psi_gamma_direct_values() {
        assert_eq!(psi_gamma(0.0, 7.3), 1.0);
        assert_eq!(psi_gamma(2.0, 2.0), 0.25);
        assert_eq!(psi_gamma(1.5, 4.0), 0.125);
    }

    #[test]
    fn psi_lower_values_and_domain() {
        assert_eq!(psi_lower(ComparisonOrder::lower(0), 4, 2.0).unwrap(), 0.25);
        // m=1, d=2, r=e^2: e^{-2} * (ln e^2)^{-1/2} = e^{-2}/sqrt(2)
        let want = (-2.0_f64).exp() / 2.0_f64.sqrt();
        assert!(close(psi_lower(ComparisonOrder::lower(1), 2, E * E).unwrap(), want, 1e-14));
        assert!(matches!(
            psi_lower(ComparisonOrder::lower(2), 3, E),
            Err(BrinkError::Domain { .. })
        ));
    }

    #[test]
    fn psi_upper_collapse_and_m0_convention() {
        let r = 10.0;
        let up = psi_upper(ComparisonOrder::new(1, 0.0).unwrap(), 3, r).unwrap();
        let lo = psi_lower(ComparisonOrder::lower(1), 3, r).unwrap();
        assert_eq!(up.to_bits(), lo.to_bits());

        // m=1, eps=2 at r=e^2 halves the lower function
        let up2 = psi_upper(ComparisonOrder::new(1, 2.0).unwrap(), 3, E * E).unwrap();
        let lo2 = psi_lower(ComparisonOrder::lower(1), 3, E * E).unwrap();
        assert!(close(up2, lo2 / 2.0, 1e-15));

        // m=0 uses ln_0(r) = r: 4^{-2} * 4^{-1/2}
        let up3 = psi_upper(ComparisonOrder::new(0, 1.0).unwrap(), 4, 4.0).unwrap();
        assert!(close(up3, 0.031_25, 1e-15));
    }

    #[test]
    fn w_gamma_special_cases() {
        let r = 3.7;
        for d in 1..=6u32 {
            let df = d as f64;
            assert!(close(w_gamma(df / 2.0, d, r), df * (4.0 - df) / (4.0 * r * r), 1e-15));
            let hardy = w_gamma((df - 2.0) / 2.0, d, r);
            assert!(close(hardy, -(df - 2.0) * (df - 2.0) / (4.0 * r * r), 1e-15));
        }
        assert!(close(w_gamma(1.5, 3, 2.0), 0.1875, 1e-15));
    }

    #[test]
    fn w_m_closed_frozen_value() {
        // m=1, d=4, r=e^2: exactly (11/16) e^{-4}
        let got = w_m_closed(1, 4, E * E).unwrap();
        assert!(close(got, 11.0 / 16.0 * (-4.0_f64).exp(), 1e-14));
        // m=0 reduces to the leading coefficient alone
        for d in 1..=6u32 {
            let df = d as f64;
            assert!(close(w_m_closed(0, d, 5.0).unwrap(), df * (4.0 - df) / 100.0, 1e-15));
        }
        assert!(matches!(w_m_closed(1, 3, 1.0), Err(BrinkError::Domain { .. })));
    }

    #[test]
    fn recursion_agrees_with_closed_form() {
        // log-spaced grids per depth; the m=4 domain starts near 3.8e6 so its
        // grid extends to 100*e_4 instead of the usual 1e6 cap
        for m in 0..=4u32 {
            let floor = tower(m).unwrap();
            let lo = (floor * 1.01).max(1e-3);
            let hi = (1e6_f64).max(floor * 100.0);
            for d in 1..=6u32 {
                for k in 0..200 {
                    let t = k as f64 / 199.0;
                    let r = lo * (hi / lo).powf(t);
                    let a = w_m_closed(m, d, r).unwrap();
                    let b = w_m_recursive(m, d, r).unwrap();
                    assert!(
                        (a - b).abs() <= 1e-11 * a.abs() + 1e-300,
                        "m={m} d={d} r={r}: closed={a:e} recursive={b:e}"
                    );
                }
            }
        }
    }

    #[test]
    fn y_m_eps_collapse_and_m0_shift() {
        let r = 12.0;
        for d in 1..=6u32 {
            let y0 = y_m_eps(ComparisonOrder::new(1, 0.0).unwrap(), d, r).unwrap();
            let w = w_m_closed(1, d, r).unwrap();
            assert_eq!(y0.to_bits(), w.to_bits());

            // m=0, eps=2: leading + 1/r^2 + 2/r^2, which is w_gamma(d/2+1)
            let y = y_m_eps(ComparisonOrder::new(0, 2.0).unwrap(), d, r).unwrap();
            let df = d as f64;
            assert!(close(y, (df * (4.0 - df) / 4.0 + 3.0) / (r * r), 1e-14));
            assert!(close(y, w_gamma(df / 2.0 + 1.0, d, r), 1e-14));
        }
    }

    #[test]
    fn rhs_threshold_values() {
        assert!(close(rhs_threshold(ComparisonOrder::lower(0), 3, 10.0).unwrap(), 0.0075, 1e-15));
        // m=1, d=4, r=e^2: leading term vanishes, leaves P_1/r^2 = 1/(2 e^4)
        let got = rhs_threshold(ComparisonOrder::lower(1), 4, E * E).unwrap();
        assert!(close(got, 0.5 * (-4.0_f64).exp(), 1e-14));
        // empty sum and product for m=0 with eps
        let r = 7.0;
        for d in 1..=5u32 {
            let df = d as f64;
            let got = rhs_threshold(ComparisonOrder::new(0, 0.75).unwrap(), d, r).unwrap();
            assert!(close(got, (df * (4.0 - df) / 4.0 + 0.75) / (r * r), 1e-15));
        }
    }

    #[test]
    fn hardy_log_weight_values() {
        assert!(close(hardy_log_weight(0, 3, 2.0).unwrap(), 1.0 / 16.0, 1e-15));
        assert_eq!(hardy_log_weight(0, 2, 9.0).unwrap(), 0.0);
        let want = 0.25 * (-4.0_f64).exp() + 0.125 * (-4.0_f64).exp();
        assert!(close(hardy_log_weight(1, 3, E * E).unwrap(), want, 1e-14));
    }

    #[test]
    fn tail_classes_match_analytic_verdicts() {
        use ComparisonFamily::*;
        use TailClass::*;
        for d in 1..=6u32 {
            let half = d as f64 / 2.0;
            assert_eq!(tail_l2_class(PsiGamma(half), d).unwrap(), NotSquareIntegrable);
            assert_eq!(tail_l2_class(PsiGamma(half + 0.1), d).unwrap(), SquareIntegrableAtInfinity);
            assert_eq!(tail_l2_class(PsiGamma(half - 0.4), d).unwrap(), NotSquareIntegrable);
        }
        assert_eq!(tail_l2_class(PsiLower(0), 3).unwrap(), NotSquareIntegrable);
        assert_eq!(tail_l2_class(PsiLower(3), 5).unwrap(), NotSquareIntegrable);
        assert_eq!(tail_l2_class(PsiUpper(2, 0.5), 3).unwrap(), SquareIntegrableAtInfinity);
        assert_eq!(tail_l2_class(PsiUpper(1, 0.0), 3).unwrap(), EdgeCase);
        assert!(matches!(tail_l2_class(PsiGamma(0.0), 3), Err(BrinkError::Param { .. })));
        assert!(matches!(tail_l2_class(PsiGamma(-1.0), 3), Err(BrinkError::Param { .. })));
    }

    #[test]
    fn ordering_of_thresholds_holds_on_whole_domain() {
        // rhs(m, eps) > rhs(m, 0) for eps > 0, and W_m >= rhs(m, 0) at every
        // r in the domain: the difference is S^2/4 + D/2 >= 0.
        for m in 0..=3u32 {
            let floor = tower(m).unwrap();
            let lo = (floor + 1e-3).max(1e-3) * 1.001;
            for d in 1..=6u32 {
                for k in 0..60 {
                    let t = k as f64 / 59.0;
                    let r = lo * (1e6 / lo).powf(t);
                    let absent = rhs_threshold(ComparisonOrder::lower(m), d, r).unwrap();
                    let exist = rhs_threshold(ComparisonOrder::new(m, 0.5).unwrap(), d, r).unwrap();
                    let w = w_m_closed(m, d, r).unwrap();
                    assert!(exist > absent, "m={m} d={d} r={r}");
                    assert!(w >= absent - 1e-18, "m={m} d={d} r={r}: w={w:e} absent={absent:e}");
                }
            }
        }
    }
}
