//! Radial discretization: reduction of −Δ + V on radial functions in d
//! dimensions to a one-dimensional operator on u(r) = r^{(d−1)/2} ψ(r),
//! grids (uniform and geometric), and symmetric tridiagonal assembly with
//! Dirichlet ends.

use serde::{Deserialize, Serialize};

use crate::potentials::Potential;
use crate::{BrinkError, Result};

/// Node placement rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Placement {
    Uniform,
    /// Radii r_k = r_min · ratio^k. A ratio of exactly 1 is rejected; use
    /// `Uniform`. `None` picks the ratio that lands r_{n+1} on r_max.
    Geometric {
        ratio: Option<f64>,
    },
}

/// A one-dimensional radial grid with Dirichlet endpoints at r_min and
/// r_max. The n interior nodes carry the unknowns.
///
/// A uniform grid with r_min = 0 is staggered: nodes sit at (k − ½)h with
/// h = r_max / (n + ½), so no node touches the origin, integer radii fall
/// on cell boundaries, and the first row of the assembled operator uses
/// the odd-reflection ghost u(−h/2) = −u(h/2). For the radial reduction
/// u(r) = r^{(d−1)/2} ψ(r) the unknown vanishes at the origin like an odd
/// function, so this removes the O(r_min) hard-wall energy bias that an
/// inner Dirichlet wall at small positive radius would introduce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub dim: u32,
    pub r_min: f64,
    pub r_max: f64,
    /// Number of interior nodes.
    pub n: usize,
    pub placement: Placement,
    #[serde(skip)]
    nodes: Vec<f64>,
}

/// Values of a function on the interior nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub values: Vec<f64>,
}

/// Symmetric tridiagonal operator assembled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagOperator {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
    pub grid: RadialGrid,
}

/// Effective centrifugal coefficient: the radial reduction sends −Δ to
/// −d²/dr² + c_d/r² with c_d = (d−1)(d−3)/4.
pub fn reduce_dimension(d: u32) -> Result<f64> {
    if d < 1 {
        return Err(BrinkError::param("dim", "dimension must be >= 1"));
    }
    let df = d as f64;
    Ok((df - 1.0) * (df - 3.0) / 4.0)
}

/// Inner radius used when the caller does not give one: zero, which on a
/// uniform grid selects the staggered origin-regular layout. Callers that
/// need a geometric grid must pick a positive inner radius themselves.
pub fn default_r_min(_d: u32, _r_max: f64, _n: usize) -> f64 {
    0.0
}

impl RadialGrid {
    /// Builds a grid, validating 0 ≤ r_min < r_max (r_min > 0 for geometric
    /// placement), n ≥ 3, and the placement rule.
    pub fn make_grid(
        dim: u32,
        r_min: f64,
        r_max: f64,
        n: usize,
        placement: Placement,
    ) -> Result<Self> {
        if dim < 1 {
            return Err(BrinkError::param("dim", "dimension must be >= 1"));
        }
        if !(r_min.is_finite() && r_max.is_finite() && 0.0 <= r_min && r_min < r_max) {
            return Err(BrinkError::param(
                "r_min/r_max",
                format!("need 0 <= r_min < r_max, got ({r_min}, {r_max})"),
            ));
        }
        if n < 3 {
            return Err(BrinkError::param("n", "need at least 3 interior nodes"));
        }
        let nodes = match placement {
            Placement::Uniform => {
                if r_min == 0.0 {
                    let h = r_max / (n as f64 + 0.5);
                    (1..=n).map(|k| (k as f64 - 0.5) * h).collect::<Vec<_>>()
                } else {
                    let h = (r_max - r_min) / (n as f64 + 1.0);
                    (1..=n).map(|k| r_min + k as f64 * h).collect::<Vec<_>>()
                }
            }
            Placement::Geometric { ratio } => {
                if r_min == 0.0 {
                    return Err(BrinkError::param("r_min", "geometric placement needs r_min > 0"));
                }
                let q = match ratio {
                    Some(q) => {
                        if !(q.is_finite() && q > 1.0) {
                            return Err(BrinkError::param("ratio", "must be finite and > 1"));
                        }
                        // the last interior node must stay inside (r_min, r_max)
                        if r_min * q.powi(n as i32) >= r_max {
                            return Err(BrinkError::param(
                                "ratio",
                                format!(
                                    "r_min * ratio^n = {} overshoots r_max = {r_max}",
                                    r_min * q.powi(n as i32)
                                ),
                            ));
                        }
                        q
                    }
                    None => (r_max / r_min).powf(1.0 / (n as f64 + 1.0)),
                };
                (1..=n).map(|k| r_min * q.powi(k as i32)).collect::<Vec<_>>()
            }
        };
        Ok(RadialGrid { dim, r_min, r_max, n, placement, nodes })
    }

    /// Interior node radii, increasing.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Whether this grid uses the staggered origin-regular layout (uniform
    /// placement starting at r_min = 0).
    pub fn staggered_origin(&self) -> bool {
        matches!(self.placement, Placement::Uniform) && self.r_min == 0.0
    }

    /// Spacing of a uniform grid (the constant h); geometric grids have no
    /// single spacing and return the first node-to-node gap.
    pub fn spacing(&self) -> f64 {
        if self.n >= 2 {
            self.nodes[1] - self.nodes[0]
        } else {
            self.nodes[0] - self.r_min
        }
    }

    /// Spacing of a uniform grid (the constant h); geometric grids have no
    /// single spacing and return the first gap.
    pub fn first_spacing(&self) -> f64 {
        self.nodes[0] - self.r_min
    }

    /// All n+1 gaps between consecutive points of the extended grid
    /// r_min = r_0 < r_1 < … < r_{n+1} = r_max.
    fn gaps(&self) -> Vec<f64> {
        let mut g = Vec::with_capacity(self.n + 1);
        let mut prev = self.r_min;
        for &r in &self.nodes {
            g.push(r - prev);
            prev = r;
        }
        g.push(self.r_max - prev);
        g
    }

    /// Whether a d = 2 run starts with a spacing wider than r_min, in which
    /// case the attractive −1/(4r²) centrifugal term is under-resolved near
    /// the origin.
    pub fn warn_underresolved_origin(&self) -> bool {
        self.dim == 2 && self.first_spacing() > self.r_min
    }

    /// Assembles the Dirichlet finite-difference operator for
    /// −u″ + (p(r) + c_d/r²) u on the interior nodes.
    ///
    /// Uniform grids use the standard second-difference stencil. Geometric
    /// grids use the divided-difference stencil symmetrized by the
    /// half-gap diagonal scaling, which preserves the spectrum and keeps
    /// the matrix symmetric.
    pub fn assemble(&self, p: &Potential) -> Result<TridiagOperator> {
        let floor = p.domain_floor();
        if self.nodes[0] <= floor {
            return Err(BrinkError::Domain {
                what: "grid enters potential domain floor",
                floor,
                r: self.nodes[0],
            });
        }
        let c_d = reduce_dimension(self.dim)?;
        let n = self.n;
        let mut diag = Vec::with_capacity(n);
        let mut offdiag = Vec::with_capacity(n.saturating_sub(1));

        match self.placement {
            Placement::Uniform => {
                let h = self.spacing();
                let h2 = h * h;
                for (i, &r) in self.nodes.iter().enumerate() {
                    // odd-reflection ghost at the staggered origin: the
                    // stencil −u(−h/2) + 2u(h/2) − u(3h/2) with
                    // u(−h/2) = −u(h/2) folds into a 3/h² diagonal
                    let lap = if i == 0 && self.staggered_origin() { 3.0 } else { 2.0 };
                    diag.push(lap / h2 + p.eval(r)? + c_d / (r * r));
                }
                offdiag.resize(n - 1, -1.0 / h2);
            }
            Placement::Geometric { .. } => {
                let g = self.gaps();
                // half-gap weights ĥ_i = (h_{i-1} + h_i)/2 symmetrize the
                // divided-difference operator: D A D⁻¹ with D = diag(√ĥ)
                let half: Vec<f64> = (0..n).map(|i| 0.5 * (g[i] + g[i + 1])).collect();
                for (i, &r) in self.nodes.iter().enumerate() {
                    let b = 2.0 / (g[i] * g[i + 1]);
                    diag.push(b + p.eval(r)? + c_d / (r * r));
                }
                for i in 0..n - 1 {
                    offdiag.push(-1.0 / (g[i + 1] * (half[i] * half[i + 1]).sqrt()));
                }
            }
        }
        Ok(TridiagOperator { diag, offdiag, grid: self.clone() })
    }
}

impl GridFunction {
    /// Samples a closed-form radial function on the interior nodes.
    pub fn sample(grid: &RadialGrid, f: impl Fn(f64) -> f64) -> Self {
        GridFunction { values: grid.nodes().iter().map(|&r| f(r)).collect() }
    }

    /// Samples with fallible evaluation.
    pub fn try_sample(grid: &RadialGrid, f: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.n);
        for &r in grid.nodes() {
            values.push(f(r)?);
        }
        Ok(GridFunction { values })
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            for v in &mut self.values {
                *v /= n;
            }
        }
        self
    }
}

/// How `residual` maps the supplied radial profile onto grid unknowns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileTransform {
    /// The profile already is the one-dimensional unknown u(r).
    None,
    /// The profile is a d-dimensional radial function ψ(r); the residual is
    /// taken against u(r) = r^{(d−1)/2} ψ(r).
    ReducedU,
}

/// Options for residual checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualOptions {
    pub transform: ProfileTransform,
    /// Number of nodes skipped at each end, where the Dirichlet truncation
    /// (not the stencil) dominates the defect.
    pub boundary_skip: usize,
    /// Optional radial window (lo, hi): only nodes with lo ≤ r ≤ hi enter
    /// the max. Convergence studies need a window that is fixed while h
    /// varies, otherwise the comparison point moves with the node count.
    pub window: Option<(f64, f64)>,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        ResidualOptions { transform: ProfileTransform::ReducedU, boundary_skip: 5, window: None }
    }
}

impl TridiagOperator {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// Matrix–vector product.
    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        let n = self.n();
        if f.values.len() != n {
            return Err(BrinkError::Shape { what: "apply", expected: n, actual: f.values.len() });
        }
        let v = &f.values;
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut s = self.diag[i] * v[i];
            if i > 0 {
                s += self.offdiag[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                s += self.offdiag[i] * v[i + 1];
            }
            out[i] = s;
        }
        Ok(GridFunction { values: out })
    }

    /// A scale for the operator: max row sum of absolute values. Used to
    /// make residual thresholds relative.
    pub fn norm_scale(&self) -> f64 {
        let n = self.n();
        let mut best = 0.0_f64;
        for i in 0..n {
            let mut s = self.diag[i].abs();
            if i > 0 {
                s += self.offdiag[i - 1].abs();
            }
            if i + 1 < n {
                s += self.offdiag[i].abs();
            }
            best = best.max(s);
        }
        best
    }

    /// Max-norm of (A u)(r_i) over interior nodes away from the ends, for a
    /// zero-energy profile. With `ReducedU` the supplied ψ is multiplied by
    /// r^{(d−1)/2} first. The profile is not normalized; callers pass
    /// functions with O(1) values on the window of interest.
    pub fn residual(
        &self,
        profile: impl Fn(f64) -> Result<f64>,
        opts: ResidualOptions,
    ) -> Result<f64> {
        let grid = &self.grid;
        let power = match opts.transform {
            ProfileTransform::None => 0.0,
            ProfileTransform::ReducedU => (grid.dim as f64 - 1.0) / 2.0,
        };
        let u = GridFunction::try_sample(grid, |r| Ok(r.powf(power) * profile(r)?))?;
        let au = self.apply(&u)?;
        let n = self.n();
        let skip = opts.boundary_skip;
        if 2 * skip >= n {
            return Err(BrinkError::param("boundary_skip", "skips every node"));
        }
        if let Some((lo, hi)) = opts.window {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(BrinkError::param("window", "need finite lo < hi"));
            }
        }
        let mut worst = 0.0_f64;
        let mut seen = false;
        for i in skip..n - skip {
            if let Some((lo, hi)) = opts.window {
                let r = grid.nodes()[i];
                if r < lo || r > hi {
                    continue;
                }
            }
            seen = true;
            worst = worst.max(au.values[i].abs());
        }
        if !seen {
            return Err(BrinkError::param("window", "no interior nodes inside the window"));
        }
        Ok(worst)
    }
}
