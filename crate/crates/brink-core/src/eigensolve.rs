//! Symmetric tridiagonal eigensolver: Sturm-sequence counting, bisection
//! with certified brackets, and inverse iteration for eigenvectors.
//!
//! Everything here is sequential floating-point arithmetic with no
//! randomness, so repeated runs produce bitwise identical results.

use crate::radialgrid::{GridFunction, TridiagOperator};
use crate::{BrinkError, Result};

/// Eigenvalues (and optionally eigenvectors) at the bottom of the spectrum.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Sorted ascending; λ_1 first.
    pub eigenvalues: Vec<f64>,
    /// Certified enclosing intervals (lo, hi) with hi − lo ≤ tol and Sturm
    /// counts j−1 at lo, j at hi for the j-th eigenvalue.
    pub brackets: Vec<(f64, f64)>,
    /// Unit-norm eigenvectors, first nonzero component positive.
    pub eigenvectors: Option<Vec<GridFunction>>,
    /// ‖T v − λ v‖₂ for each attached eigenvector.
    pub residual_norms: Option<Vec<f64>>,
}

/// Result of a Sturm count, with a flag noting whether an exactly zero
/// off-diagonal entry had to be nudged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SturmCount {
    pub count: usize,
    pub perturbed_zero_offdiag: bool,
}

fn pivmin(t: &TridiagOperator) -> f64 {
    let max_e2 = t.offdiag.iter().map(|e| e * e).fold(1.0_f64, f64::max);
    f64::MIN_POSITIVE * max_e2
}

/// Number of eigenvalues of T strictly below `shift`, by the Sturm/LDLᵀ
/// pivot-sign recurrence with the standard tiny-pivot safeguard.
pub fn count_below(t: &TridiagOperator, shift: f64) -> usize {
    count_below_flagged(t, shift).count
}

/// As `count_below`, also reporting whether a zero off-diagonal entry was
/// replaced by a representable tiny value (the count is still valid; the
/// matrix merely decouples there).
pub fn count_below_flagged(t: &TridiagOperator, shift: f64) -> SturmCount {
    let n = t.n();
    let pm = pivmin(t);
    let mut perturbed = false;
    let mut count = 0usize;
    let mut q = t.diag[0] - shift;
    if q <= pm {
        count += 1;
        q = q.min(-pm);
    }
    for i in 1..n {
        let mut b2 = t.offdiag[i - 1] * t.offdiag[i - 1];
        if b2 == 0.0 {
            b2 = f64::MIN_POSITIVE;
            perturbed = true;
        }
        q = t.diag[i] - shift - b2 / q;
        if q <= pm {
            count += 1;
            q = q.min(-pm);
        }
    }
    SturmCount { count, perturbed_zero_offdiag: perturbed }
}

/// Gershgorin enclosure of the whole spectrum.
pub fn gershgorin(t: &TridiagOperator) -> (f64, f64) {
    let n = t.n();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut radius = 0.0;
        if i > 0 {
            radius += t.offdiag[i - 1].abs();
        }
        if i + 1 < n {
            radius += t.offdiag[i].abs();
        }
        lo = lo.min(t.diag[i] - radius);
        hi = hi.max(t.diag[i] + radius);
    }
    (lo, hi)
}

/// The k lowest eigenvalues by bisection, each enclosed in a bracket of
/// width at most `tol`.
pub fn lowest_eigs(t: &TridiagOperator, k: usize, tol: f64) -> Result<Spectrum> {
    let n = t.n();
    if k == 0 || k > n {
        return Err(BrinkError::param("k", format!("need 1 <= k <= n = {n}, got {k}")));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(BrinkError::param("tol", "must be finite and > 0"));
    }
    let (glo, ghi) = gershgorin(t);
    let pad = 1e-10 * glo.abs().max(ghi.abs()).max(1.0);
    let (glo, ghi) = (glo - pad, ghi + pad);

    let mut eigenvalues = Vec::with_capacity(k);
    let mut brackets = Vec::with_capacity(k);
    let mut left_floor = glo;
    for j in 1..=k {
        // invariant: count(lo) < j <= count(hi)
        let mut lo = left_floor;
        let mut hi = ghi;
        let mut guard = 0;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if count_below(t, mid) >= j {
                hi = mid;
            } else {
                lo = mid;
            }
            guard += 1;
            if guard > 2000 {
                return Err(BrinkError::Convergence {
                    what: "eigenvalue bisection",
                    iterations: guard,
                    achieved: hi - lo,
                    wanted: tol,
                });
            }
        }
        eigenvalues.push(0.5 * (lo + hi));
        brackets.push((lo, hi));
        // the next eigenvalue cannot lie below this one's left edge
        left_floor = lo;
    }
    Ok(Spectrum { eigenvalues, brackets, eigenvectors: None, residual_norms: None })
}

/// Checks the Sturm bracket certificate for a reported eigenvalue: exactly
/// j−1 eigenvalues below λ−tol and at least j below λ+tol.
pub fn bracket_certificate(t: &TridiagOperator, j: usize, lambda: f64, tol: f64) -> bool {
    count_below(t, lambda - tol) == j - 1 && count_below(t, lambda + tol) >= j
}

fn ldlt_solve(t: &TridiagOperator, shift: f64, rhs: &[f64], pert: f64) -> Vec<f64> {
    let n = t.n();
    let mut dpiv = vec![0.0; n];
    let mut l = vec![0.0; n.saturating_sub(1)];
    let guard = |q: f64| -> f64 {
        if q.abs() < pert {
            if q < 0.0 {
                -pert
            } else {
                pert
            }
        } else {
            q
        }
    };
    dpiv[0] = guard(t.diag[0] - shift);
    for i in 1..n {
        l[i - 1] = t.offdiag[i - 1] / dpiv[i - 1];
        dpiv[i] = guard(t.diag[i] - shift - l[i - 1] * t.offdiag[i - 1]);
    }
    let mut x = rhs.to_vec();
    for i in 1..n {
        x[i] -= l[i - 1] * x[i - 1];
    }
    for i in 0..n {
        x[i] /= dpiv[i];
    }
    for i in (0..n - 1).rev() {
        x[i] -= l[i] * x[i + 1];
    }
    x
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 && norm.is_finite() {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    norm
}

fn fix_sign(v: &mut [f64]) {
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return;
    }
    for x in v.iter() {
        if x.abs() > 1e-12 * scale {
            if *x < 0.0 {
                for y in v.iter_mut() {
                    *y = -*y;
                }
            }
            return;
        }
    }
}

/// Deterministic non-constant start vector for the inverse-iteration
/// fallback (a fixed linear congruential sequence, no global state).
fn fallback_start(n: usize) -> Vec<f64> {
    let mut state = 0x9E37_79B9_7F4A_7C15_u64;
    (0..n)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            // map the top bits to (-1, 1)
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
        .collect()
}

/// Unit-norm eigenvector for an eigenvalue estimate λ, by inverse
/// iteration with a perturbed LDLᵀ solve.
///
/// Accepts when ‖T v − λ v‖₂ ≤ 10 · tol · scale(T); the scale is the max
/// absolute row sum. Starts from the constant vector, switches once to a
/// fixed pseudo-random start if stalled, and gives up after 50 iterations.
pub fn eigenvector(t: &TridiagOperator, lambda: f64, tol: f64) -> Result<(GridFunction, f64)> {
    let n = t.n();
    if n == 0 {
        return Err(BrinkError::param("t", "empty operator"));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(BrinkError::param("tol", "must be finite and > 0"));
    }
    let scale = t.norm_scale().max(lambda.abs()).max(f64::MIN_POSITIVE);
    let accept = 10.0 * tol * scale;
    let pert = f64::EPSILON * scale;

    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut best: Option<(Vec<f64>, f64)> = None;
    for iter in 0..50 {
        if iter == 25 {
            // stalled: the constant start may be (numerically) orthogonal
            // to the target; restart from a fixed non-symmetric vector
            v = fallback_start(n);
            normalize(&mut v);
        }
        let mut w = ldlt_solve(t, lambda, &v, pert);
        let growth = normalize(&mut w);
        if growth == 0.0 || !growth.is_finite() {
            v = fallback_start(n);
            normalize(&mut v);
            continue;
        }
        v = w;
        let gv = GridFunction { values: v.clone() };
        let av = t.apply(&gv)?;
        let res = av
            .values
            .iter()
            .zip(v.iter())
            .map(|(a, x)| {
                let d = a - lambda * x;
                d * d
            })
            .sum::<f64>()
            .sqrt();
        if best.as_ref().is_none_or(|(_, b)| res < *b) {
            best = Some((v.clone(), res));
        }
        if res <= accept {
            let (mut bv, bres) = best.unwrap();
            fix_sign(&mut bv);
            return Ok((GridFunction { values: bv }, bres));
        }
    }
    let achieved = best.map_or(f64::INFINITY, |(_, r)| r);
    Err(BrinkError::Convergence {
        what: "inverse iteration",
        iterations: 50,
        achieved,
        wanted: accept,
    })
}

/// Computes and attaches unit eigenvectors (and their residual norms) for
/// every eigenvalue already present in the spectrum.
pub fn attach_eigenvectors(t: &TridiagOperator, spectrum: &mut Spectrum, tol: f64) -> Result<()> {
    let mut vecs = Vec::with_capacity(spectrum.eigenvalues.len());
    let mut res = Vec::with_capacity(spectrum.eigenvalues.len());
    for &lambda in &spectrum.eigenvalues {
        let (v, r) = eigenvector(t, lambda, tol)?;
        vecs.push(v);
        res.push(r);
    }
    spectrum.eigenvectors = Some(vecs);
    spectrum.residual_norms = Some(res);
    Ok(())
}
