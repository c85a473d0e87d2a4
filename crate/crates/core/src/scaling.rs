//! The scaling triple `(u_t, v_t, w_t)`, the rescaled tail `Φ_t` and numeric
//! audits of the tail hypotheses.
//!
//! In the Weibull and Gumbel classes `u_t` solves `t·B(u) = u·A(u)`; it is
//! found by bisection on `log u` over `[2, t²]`. The Fréchet class uses
//! `(t, 0, B(t))` directly.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fitness::{EvtClass, FitnessSpec};
use crate::numeric::{bisect, integrate, integrate_to_infinity};

/// Lower end of the bisection bracket for `u_t`.
pub const U_BRACKET_MIN: f64 = 2.0;
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingTriple {
    pub t: f64,
    pub u: f64,
    pub v: f64,
    pub w: f64,
    /// `M - v_t`, exact for bounded entries and infinite otherwise.
    #[serde(skip)]
    pub gap: f64,
}

impl ScalingTriple {
    /// Relative residual `|t·B(u_t) - u_t·A(u_t)| / (t·B(u_t))`; zero for Fréchet.
    pub fn residual(&self) -> f64 {
        if self.v == 0.0 {
            return 0.0;
        }
        let lhs = self.t * self.w;
        (lhs - self.u * self.v).abs() / lhs
    }

    /// Upper end `(M - v_t)/w_t` of the rescaled weight axis.
    pub fn x_max(&self) -> f64 {
        self.gap / self.w
    }
}

/// `f(u) = u·A(u)/B(u)` evaluated at the bracket minimum: horizons below this
/// have no scaling solution.
pub fn scaling_threshold(spec: &FitnessSpec) -> Result<f64> {
    let (a, b) = spec.normalizers(U_BRACKET_MIN)?;
    Ok(U_BRACKET_MIN * a / b)
}

pub fn solve_scaling(spec: &FitnessSpec, t: f64) -> Result<ScalingTriple> {
    match spec.class() {
        EvtClass::None => Err(Error::NoNormalizers(spec.to_string())),
        EvtClass::Frechet => {
            let (_, b, _) = spec.normalizers_full(t)?;
            Ok(ScalingTriple { t, u: t, v: 0.0, w: b, gap: f64::INFINITY })
        }
        EvtClass::Weibull | EvtClass::Gumbel => {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::UnsupportedHorizon {
                    dist: spec.to_string(),
                    t,
                    min: spec.normalizer_min_horizon(),
                });
            }
            let ln_t = t.ln();
            let g = |ln_u: f64| -> f64 {
                let (a, b, _) = spec.normalizers_full(ln_u.exp()).expect("bracket lies inside the normalizer domain");
                ln_u + a.ln() - b.ln() - ln_t
            };
            let lo = U_BRACKET_MIN.ln();
            let hi = (2.0 * ln_t).max(lo);
            let no_solution = || -> Error {
                Error::NoSolution { dist: spec.to_string(), t, threshold: scaling_threshold(spec).unwrap_or(f64::NAN) }
            };
            if g(lo) > 0.0 || g(hi) < 0.0 {
                return Err(no_solution());
            }
            let ln_u = bisect(g, lo, hi, 1e-15, MAX_BISECTIONS).ok_or_else(no_solution)?;
            let u = ln_u.exp();
            let (v, w, gap) = spec.normalizers_full(u)?;
            Ok(ScalingTriple { t, u, v, w, gap })
        }
    }
}

/// `Φ_t(x) = u_t·μ((v_t + x·w_t, M))`.
pub fn phi_t(spec: &FitnessSpec, triple: &ScalingTriple, x: f64) -> f64 {
    if triple.gap.is_finite() {
        let d = triple.gap - x * triple.w;
        if d <= 0.0 {
            return 0.0;
        }
        triple.u * spec.tail_gap(d)
    } else {
        triple.u * spec.tail(triple.v + x * triple.w)
    }
}

/// Diagnostic `u_t·log log t / t`, expected to drift to zero in the Gumbel class.
pub fn loglog_diagnostic(triple: &ScalingTriple) -> f64 {
    triple.u * triple.t.ln().ln() / triple.t
}

/// Smallest `C` with `(1-y)^{-α} ≤ 1 + αy + C·y²` on `[-1, 1/2]`.
pub fn bounded_power_quadratic_constant(alpha: f64) -> f64 {
    let h = |y: f64| ((1.0 - y).powf(-alpha) - 1.0 - alpha * y) / (y * y);
    let n = 6000;
    (0..=n)
        .map(|i| -1.0 + 1.5 * i as f64 / n as f64)
        .filter(|y| y.abs() > 1e-6)
        .map(h)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Default `(c₁, c₂)` for the quadratic-correction audit.
pub fn default_g_constants(spec: &FitnessSpec) -> (f64, f64) {
    match spec.kind() {
        crate::fitness::FitnessKind::GumbelBoundedPower { alpha } => {
            (bounded_power_quadratic_constant(alpha) / (alpha * alpha), 1.0)
        }
        _ => (1.0, 1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GRow {
    pub x: f64,
    pub phi_t: f64,
    pub lower: f64,
    pub upper: f64,
    pub lower_applies: bool,
    pub upper_applies: bool,
    pub lower_ok: bool,
    pub upper_ok: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GReport {
    pub triple: ScalingTriple,
    pub c1: f64,
    pub c2: f64,
    pub rows: Vec<GRow>,
    /// Minimum of `ln Φ_t - ln lower` over rows where the lower bound applies.
    pub worst_lower_margin: f64,
    /// Minimum of `ln upper - ln Φ_t` over rows where the upper bound applies.
    pub worst_upper_margin: f64,
    pub lower_violations: usize,
    pub upper_violations: usize,
    pub loglog_diagnostic: f64,
}

impl GReport {
    pub fn all_pass(&self) -> bool {
        self.lower_violations == 0 && self.upper_violations == 0
    }
}

/// Relative slack on the bound comparisons, absorbing floating-point rounding
/// at points where the bound is attained (e.g. `x = 0`).
pub const G_ROUNDING_SLACK: f64 = 1e-12;

pub fn check_assumption_g(spec: &FitnessSpec, t: f64, c1: f64, c2: f64, grid: &[f64]) -> Result<GReport> {
    if spec.class() != EvtClass::Gumbel {
        return Err(Error::WrongClass { dist: spec.to_string(), expected: "Gumbel" });
    }
    if !(c1 >= 0.0 && c2 > 0.0) {
        return Err(Error::InvalidParameter(format!("need c1 >= 0 and c2 > 0, got ({c1}, {c2})")));
    }
    let triple = solve_scaling(spec, t)?;
    let ln_t = t.ln();
    let band = c2 * ln_t;
    let x_max = triple.x_max();
    let mut rows = Vec::with_capacity(grid.len());
    let mut worst_lower = f64::INFINITY;
    let mut worst_upper = f64::INFINITY;
    let mut lower_violations = 0;
    let mut upper_violations = 0;
    for &x in grid {
        let phi = phi_t(spec, &triple, x);
        let q = c1 * x * x / ln_t;
        let lower = (-x - q).exp();
        let upper = (-x + q).exp();
        let lower_applies = x > -band && x < band;
        let upper_applies = x > -band && x < x_max;
        let lower_ok = !lower_applies || phi >= lower * (1.0 - G_ROUNDING_SLACK);
        let upper_ok = !upper_applies || phi <= upper * (1.0 + G_ROUNDING_SLACK);
        if lower_applies {
            worst_lower = worst_lower.min(phi.ln() - lower.ln());
            lower_violations += usize::from(!lower_ok);
        }
        if upper_applies {
            worst_upper = worst_upper.min(upper.ln() - phi.ln());
            upper_violations += usize::from(!upper_ok);
        }
        rows.push(GRow {
            x,
            phi_t: phi,
            lower,
            upper,
            lower_applies,
            upper_applies,
            lower_ok,
            upper_ok,
            pass: lower_ok && upper_ok,
        });
    }
    Ok(GReport {
        triple,
        c1,
        c2,
        rows,
        worst_lower_margin: worst_lower,
        worst_upper_margin: worst_upper,
        lower_violations,
        upper_violations,
        loglog_diagnostic: loglog_diagnostic(&triple),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct L1Row {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct L1Report {
    pub x: f64,
    pub rows: Vec<L1Row>,
    /// Absolute error non-increasing along the grid.
    pub monotone_decay: bool,
}

/// `∫_x^∞ t·μ((A(t) + u·B(t), M)) du` by adaptive quadrature.
pub fn l1_integral(spec: &FitnessSpec, t: f64, x: f64) -> Result<f64> {
    let (a, b, gap) = spec.normalizers_full(t)?;
    const ABS_TOL: f64 = 1e-10;
    const REL_TOL: f64 = 1e-12;
    let q = if gap.is_finite() {
        let cut = gap / b;
        if cut <= x {
            return Ok(0.0);
        }
        integrate(|u| t * spec.tail_gap(gap - u * b), x, cut, ABS_TOL, REL_TOL)
    } else {
        integrate_to_infinity(|u| t * spec.tail(a + u * b), x, ABS_TOL, REL_TOL)
    };
    Ok(q.value)
}

fn l1_limit(spec: &FitnessSpec, x: f64) -> f64 {
    match (spec.class(), spec.tail_index()) {
        (EvtClass::Weibull, Some(alpha)) => {
            if x >= 0.0 {
                0.0
            } else {
                (-x).powf(alpha + 1.0) / (alpha + 1.0)
            }
        }
        _ => (-x).exp(),
    }
}

pub fn check_l1_convergence(spec: &FitnessSpec, x: f64, t_grid: &[f64]) -> Result<L1Report> {
    if !matches!(spec.class(), EvtClass::Weibull | EvtClass::Gumbel) {
        return Err(Error::WrongClass { dist: spec.to_string(), expected: "Weibull or Gumbel" });
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("L1 check needs x >= 0, got {x}")));
    }
    let rhs = l1_limit(spec, x);
    let rows = t_grid
        .iter()
        .map(|&t| {
            let lhs = l1_integral(spec, t, x)?;
            Ok(L1Row { t, lhs, rhs, error: (lhs - rhs).abs() })
        })
        .collect::<Result<Vec<_>>>()?;
    let monotone_decay = rows.windows(2).all(|w| w[1].error <= w[0].error + 1e-12);
    Ok(L1Report { x, rows, monotone_decay })
}
