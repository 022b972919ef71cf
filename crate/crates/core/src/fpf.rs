//! Candidate formation potential field (FPF): evaluation, force, parameter
//! validation and the equilibrium-radius solver behind the design maps.
//!
//! The field generated by the virtual agent at distance `d` is
//!
//! ```text
//! U_v(d) = 1 + tanh²(σ1·d) − K_v·tanh²(σ2·d)
//! ```
//!
//! It has its global maximum `1` at the centre, tends to `2 − K_v` far away,
//! and has a ring of minima at the formation radius `R`. Radii handled here
//! are dimensionless: the scaled radius is `σ1·R`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::vec2::Vec2;

/// Step of the outward bracket scan, in scaled-radius units.
pub const SCAN_STEP: f64 = 0.05;
/// Largest scaled radius the bracket scan will look at.
pub const SCAN_HORIZON: f64 = 50.0;
/// Residual bound guaranteed for every returned root.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Shape parameters of the candidate FPF.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FpfParams {
    pub k_v: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

/// A design rule an [`FpfParams`] must satisfy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    /// Far-field value `2 − K_v` must lie below the central maximum `1`.
    KvAboveOne,
    /// Spread ratio `σ2/σ1` above one; no equilibrium radius exists otherwise.
    VarsigmaAboveOne,
    /// Negative curvature at the centre: `σ1/σ2 < √K_v`.
    MaximumCriterion,
    Sigma1Positive,
    Sigma2Positive,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::KvAboveOne => "k_v > 1",
            Rule::VarsigmaAboveOne => "varsigma > 1",
            Rule::MaximumCriterion => "sigma1/sigma2 < sqrt(k_v)",
            Rule::Sigma1Positive => "sigma1 > 0",
            Rule::Sigma2Positive => "sigma2 > 0",
        }
    }

    /// Parameter the rule is reported against.
    pub fn key(self) -> &'static str {
        match self {
            Rule::KvAboveOne => "k_v",
            Rule::VarsigmaAboveOne => "sigma2",
            Rule::MaximumCriterion => "sigma1",
            Rule::Sigma1Positive => "sigma1",
            Rule::Sigma2Positive => "sigma2",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Violation {
    pub rule: Rule,
    /// The offending value (for ratio rules, the ratio itself).
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violates(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "violates `{}` (got {})", v.rule, v.value)?;
        }
        Ok(())
    }
}

impl FpfParams {
    pub const fn new(k_v: f64, sigma1: f64, sigma2: f64) -> Self {
        FpfParams { k_v, sigma1, sigma2 }
    }

    /// Spread ratio `σ2/σ1`.
    #[inline]
    pub fn varsigma(&self) -> f64 {
        self.sigma2 / self.sigma1
    }

    /// Returns `self` if every design rule holds.
    pub fn validated(self) -> Result<Self> {
        let report = validate_params(&self)?;
        if report.is_ok() {
            Ok(self)
        } else {
            Err(Error::InvalidParams(report))
        }
    }

    /// Field value at distance `d ≥ 0` from the centre.
    #[inline]
    pub fn potential_at(&self, d: f64) -> f64 {
        let t1 = (self.sigma1 * d).tanh();
        let t2 = (self.sigma2 * d).tanh();
        1.0 + t1 * t1 - self.k_v * t2 * t2
    }

    /// Radial derivative `dU_v/dd`.
    #[inline]
    pub fn radial_slope(&self, d: f64) -> f64 {
        let a = self.sigma1 * d;
        let b = self.sigma2 * d;
        2.0 * self.sigma1 * a.tanh() * sech2(a) - 2.0 * self.k_v * self.sigma2 * b.tanh() * sech2(b)
    }

    /// Equilibrium scaled radius for these parameters.
    pub fn scaled_radius(&self) -> Result<f64> {
        solve_scaled_radius(self.k_v, self.varsigma())
    }
}

#[inline]
fn sech2(x: f64) -> f64 {
    let c = x.cosh();
    1.0 / (c * c)
}

fn finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::MalformedParameter { name, value })
    }
}

/// Check `p` against every design rule, collecting all violations.
pub fn validate_params(p: &FpfParams) -> Result<ValidationReport> {
    finite("k_v", p.k_v)?;
    finite("sigma1", p.sigma1)?;
    finite("sigma2", p.sigma2)?;

    let mut violations = Vec::new();
    let mut check = |ok: bool, rule: Rule, value: f64| {
        if !ok {
            violations.push(Violation { rule, value });
        }
    };
    check(p.sigma1 > 0.0, Rule::Sigma1Positive, p.sigma1);
    check(p.sigma2 > 0.0, Rule::Sigma2Positive, p.sigma2);
    check(p.k_v > 1.0, Rule::KvAboveOne, p.k_v);
    if p.sigma1 > 0.0 && p.sigma2 > 0.0 {
        let varsigma = p.varsigma();
        check(varsigma > 1.0, Rule::VarsigmaAboveOne, varsigma);
        // Stated as an independent rule even though the two above imply it.
        let ratio = p.sigma1 / p.sigma2;
        check(p.k_v > 0.0 && ratio < p.k_v.sqrt(), Rule::MaximumCriterion, ratio);
    }
    Ok(ValidationReport { violations })
}

/// FPF value at `q` for a virtual agent at `q_v`.
pub fn eval_fpf(p: &FpfParams, q: Vec2, q_v: Vec2) -> f64 {
    p.potential_at((q - q_v).norm())
}

/// Force `−∇U_v` on a robot at `q`. Zero at the centre.
pub fn fpf_force(p: &FpfParams, q: Vec2, q_v: Vec2) -> Vec2 {
    let r = q - q_v;
    let d = r.norm();
    if d == 0.0 {
        return Vec2::ZERO;
    }
    r * (-p.radial_slope(d) / d)
}

/// Equilibrium residual in scaled radius `r`:
/// `tanh(r)/cosh²(r) − K_v·ς·tanh(ςr)/cosh²(ςr)`.
#[inline]
pub fn equilibrium_residual(k_v: f64, varsigma: f64, r: f64) -> f64 {
    r.tanh() * sech2(r) - k_v * varsigma * (varsigma * r).tanh() * sech2(varsigma * r)
}

/// Positive root of [`equilibrium_residual`]: the scaled formation radius.
///
/// The residual is negative just outside the origin whenever `K_v·ς² > 1`.
/// The solver walks outward in steps of [`SCAN_STEP`] until the residual turns
/// positive, then bisects the bracket down to floating-point resolution.
pub fn solve_scaled_radius(k_v: f64, varsigma: f64) -> Result<f64> {
    finite("k_v", k_v)?;
    finite("varsigma", varsigma)?;
    let no_equilibrium = Error::NoEquilibrium { k_v, varsigma, horizon: SCAN_HORIZON };
    if k_v * varsigma * varsigma <= 1.0 || varsigma <= 0.0 {
        return Err(no_equilibrium);
    }

    let g = |r: f64| equilibrium_residual(k_v, varsigma, r);
    let steps = (SCAN_HORIZON / SCAN_STEP).round() as usize;
    let mut lo = 0.0;
    let mut hi = None;
    for i in 1..=steps {
        let r = i as f64 * SCAN_STEP;
        let v = g(r);
        if v == 0.0 {
            return Ok(r);
        }
        if v > 0.0 {
            hi = Some(r);
            break;
        }
        lo = r;
    }
    let mut hi = hi.ok_or(no_equilibrium)?;

    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = g(mid);
        if v == 0.0 {
            return Ok(mid);
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = if g(lo).abs() <= g(hi).abs() { lo } else { hi };
    debug_assert!(g(root).abs() < RESIDUAL_TOLERANCE);
    Ok(root)
}

/// One cell of a design map. `scaled_radius` is `None` where the solver
/// found no equilibrium.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignMapEntry {
    pub k_v: f64,
    pub varsigma: f64,
    pub scaled_radius: Option<f64>,
}

/// Grid over `(k_v_min, k_v_max] × (varsigma_min, varsigma_max]`.
///
/// Lower bounds are open: cell `i` of `n` sits at
/// `max − (max − min)·(n − 1 − i)/n`, so the last cell lands exactly on `max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DesignGrid {
    pub k_v: (f64, f64),
    pub varsigma: (f64, f64),
    pub n_k_v: usize,
    pub n_varsigma: usize,
}

impl DesignGrid {
    pub fn square(k_v: (f64, f64), varsigma: (f64, f64), n: usize) -> Self {
        DesignGrid { k_v, varsigma, n_k_v: n, n_varsigma: n }
    }

    fn check(&self) -> Result<()> {
        let axis = |name: &str, (lo, hi): (f64, f64), n: usize| {
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::MalformedRange(format!("{name} range ({lo}, {hi}] is not finite")));
            }
            if lo < 0.0 || hi <= lo {
                return Err(Error::MalformedRange(format!("{name} range ({lo}, {hi}] is empty or inverted")));
            }
            if n == 0 {
                return Err(Error::MalformedRange(format!("{name} axis has zero cells")));
            }
            Ok(())
        };
        axis("k_v", self.k_v, self.n_k_v)?;
        axis("varsigma", self.varsigma, self.n_varsigma)
    }

    fn value((lo, hi): (f64, f64), n: usize, i: usize) -> f64 {
        hi - (hi - lo) * (n - 1 - i) as f64 / n as f64
    }

    pub fn k_v_at(&self, i: usize) -> f64 {
        Self::value(self.k_v, self.n_k_v, i)
    }

    pub fn varsigma_at(&self, j: usize) -> f64 {
        Self::value(self.varsigma, self.n_varsigma, j)
    }

    pub fn len(&self) -> usize {
        self.n_k_v * self.n_varsigma
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Solve every grid cell. Entries are row-major: `k_v` outer, `varsigma` inner.
pub fn design_map(grid: &DesignGrid, exec: Execution) -> Result<Vec<DesignMapEntry>> {
    grid.check()?;
    let n_vs = grid.n_varsigma;
    Ok(exec.map(grid.len(), |idx| {
        let k_v = grid.k_v_at(idx / n_vs);
        let varsigma = grid.varsigma_at(idx % n_vs);
        DesignMapEntry { k_v, varsigma, scaled_radius: solve_scaled_radius(k_v, varsigma).ok() }
    }))
}
