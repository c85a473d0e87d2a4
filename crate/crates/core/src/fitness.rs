//! Catalog of table-weight distributions.
//!
//! Every entry has a closed-form upper tail `tail(x) = μ((x, M))`, an
//! inverse-transform sampler, an extreme-value class and (except for the
//! deterministic point mass) normalizing functions `A(t)`, `B(t)` with
//! `t·tail(A(t) + x·B(t)) → Φ(x)`.
//!
//! Bounded entries have essential supremum `M = 1`. Internally they are
//! evaluated through the distance to the supremum, `d = 1 - x`, which keeps
//! precision when weights crowd against 1.
//!
//! Distributions are built from a text key:
//! `kind[:param=value[,param=value]]`, e.g. `weibull:alpha=2`,
//! `gumbel-m:a:alpha=3`, `gumbel-m:e`, `frechet:alpha=1`, `deterministic:w=1`.

use std::f64::consts::{E, FRAC_PI_2};
use std::fmt;
use std::str::FromStr;

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::bisect;

/// Extreme-value class of the distribution of the maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvtClass {
    Weibull,
    Gumbel,
    Frechet,
    None,
}

impl fmt::Display for EvtClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EvtClass::Weibull => "weibull",
            EvtClass::Gumbel => "gumbel",
            EvtClass::Frechet => "frechet",
            EvtClass::None => "none",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FitnessKind {
    /// `μ((1-d, 1)) = d^α`.
    WeibullPower { alpha: f64 },
    /// `m(x) = (1-x)^{-α} - 1`.
    GumbelBoundedPower { alpha: f64 },
    /// `m(x) = e^{1/(1-x)} - e`.
    GumbelExpInv,
    /// `m(x) = x / (1-x)`.
    GumbelRatio,
    /// `m(x) = e^{1/√(1-x)} - e`.
    GumbelExpSqrt,
    /// `m(x) = tan(πx/2)`.
    GumbelTan,
    /// `m(x) = log(e/(1-x))·log log(e/(1-x))`: Gumbel domain of attraction
    /// but known to violate the quadratic-correction bounds on `Φ_t`.
    GumbelLogLog,
    /// `μ((x, ∞)) = exp(-x^α)`.
    GumbelUnbounded { alpha: f64 },
    /// `μ((x, ∞)) = x^{-α}` for `x ≥ 1`.
    FrechetPareto { alpha: f64 },
    /// Point mass at `w`.
    Deterministic { w: f64 },
}

/// A validated catalog entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FitnessSpec {
    kind: FitnessKind,
}

impl TryFrom<String> for FitnessSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FitnessSpec> for String {
    fn from(s: FitnessSpec) -> String {
        s.to_string()
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

impl FitnessSpec {
    pub fn new(kind: FitnessKind) -> Result<Self> {
        match kind {
            FitnessKind::WeibullPower { alpha }
            | FitnessKind::GumbelBoundedPower { alpha }
            | FitnessKind::GumbelUnbounded { alpha }
            | FitnessKind::FrechetPareto { alpha } => {
                positive("alpha", alpha)?;
            }
            FitnessKind::Deterministic { w } => {
                positive("w", w)?;
            }
            _ => {}
        }
        Ok(Self { kind })
    }

    pub fn weibull(alpha: f64) -> Result<Self> {
        Self::new(FitnessKind::WeibullPower { alpha })
    }
    pub fn gumbel_bounded(alpha: f64) -> Result<Self> {
        Self::new(FitnessKind::GumbelBoundedPower { alpha })
    }
    pub fn gumbel_unbounded(alpha: f64) -> Result<Self> {
        Self::new(FitnessKind::GumbelUnbounded { alpha })
    }
    pub fn frechet(alpha: f64) -> Result<Self> {
        Self::new(FitnessKind::FrechetPareto { alpha })
    }
    pub fn deterministic(w: f64) -> Result<Self> {
        Self::new(FitnessKind::Deterministic { w })
    }

    pub fn kind(&self) -> FitnessKind {
        self.kind
    }

    pub fn class(&self) -> EvtClass {
        match self.kind {
            FitnessKind::WeibullPower { .. } => EvtClass::Weibull,
            FitnessKind::FrechetPareto { .. } => EvtClass::Frechet,
            FitnessKind::Deterministic { .. } => EvtClass::None,
            _ => EvtClass::Gumbel,
        }
    }

    /// Essential supremum `M`.
    pub fn essup(&self) -> f64 {
        match self.kind {
            FitnessKind::GumbelUnbounded { .. } | FitnessKind::FrechetPareto { .. } => f64::INFINITY,
            FitnessKind::Deterministic { w } => w,
            _ => 1.0,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.essup().is_finite()
    }

    /// Index `α` of the Weibull or Fréchet limit.
    pub fn tail_index(&self) -> Option<f64> {
        match self.kind {
            FitnessKind::WeibullPower { alpha } | FitnessKind::FrechetPareto { alpha } => Some(alpha),
            _ => None,
        }
    }

    /// Entries known to fail the quadratic-correction bounds on `Φ_t`.
    pub fn assumption_g_known_false(&self) -> bool {
        matches!(self.kind, FitnessKind::GumbelLogLog)
    }

    /// Whether the entry satisfies the strengthened tail hypotheses under which
    /// the two-table statement holds (Weibull index above 1, any Fréchet,
    /// catalogued Gumbel entries other than the log-log counterexample and
    /// unbounded entries with `α ≤ 1`).
    pub fn two_table_admissible(&self) -> std::result::Result<(), String> {
        match self.kind {
            FitnessKind::WeibullPower { alpha } if alpha <= 1.0 => {
                Err(format!("Weibull index alpha={alpha} must exceed 1"))
            }
            FitnessKind::GumbelUnbounded { alpha } if alpha <= 1.0 => {
                Err(format!("unbounded Gumbel exponent alpha={alpha} must exceed 1"))
            }
            FitnessKind::GumbelLogLog => Err("log-log entry violates the Gumbel tail bounds".into()),
            FitnessKind::Deterministic { .. } => Err("deterministic weights have no extreme-value class".into()),
            _ => Ok(()),
        }
    }

    /// `m(x)` for the bounded Gumbel entries written as a function of the
    /// distance `d = 1 - x` to the supremum.
    fn m_of_gap(&self, d: f64) -> f64 {
        match self.kind {
            FitnessKind::GumbelBoundedPower { alpha } => d.powf(-alpha) - 1.0,
            FitnessKind::GumbelExpInv => (1.0 / d).exp() - E,
            FitnessKind::GumbelRatio => 1.0 / d - 1.0,
            FitnessKind::GumbelExpSqrt => (1.0 / d.sqrt()).exp() - E,
            FitnessKind::GumbelTan => 1.0 / (FRAC_PI_2 * d).tan(),
            FitnessKind::GumbelLogLog => {
                let l = 1.0 - d.ln();
                l * l.ln()
            }
            _ => unreachable!("m-function requested for a non-m entry"),
        }
    }

    /// `m'(x)` at `x = 1 - d`.
    fn m_prime_of_gap(&self, d: f64) -> f64 {
        match self.kind {
            FitnessKind::GumbelBoundedPower { alpha } => alpha * d.powf(-alpha - 1.0),
            FitnessKind::GumbelExpInv => (1.0 / d).exp() / (d * d),
            FitnessKind::GumbelRatio => 1.0 / (d * d),
            FitnessKind::GumbelExpSqrt => 0.5 * (1.0 / d.sqrt()).exp() * d.powf(-1.5),
            FitnessKind::GumbelTan => {
                let s = (FRAC_PI_2 * d).sin();
                FRAC_PI_2 / (s * s)
            }
            FitnessKind::GumbelLogLog => {
                let l = 1.0 - d.ln();
                (l.ln() + 1.0) / d
            }
            _ => unreachable!("m-function requested for a non-m entry"),
        }
    }

    /// Gap `d = 1 - m⁻¹(y)` for `y ≥ 0`.
    fn m_inverse_gap(&self, y: f64) -> f64 {
        match self.kind {
            FitnessKind::GumbelBoundedPower { alpha } => (1.0 + y).powf(-1.0 / alpha),
            FitnessKind::GumbelExpInv => 1.0 / (y + E).ln(),
            FitnessKind::GumbelRatio => 1.0 / (1.0 + y),
            FitnessKind::GumbelExpSqrt => {
                let l = (y + E).ln();
                1.0 / (l * l)
            }
            FitnessKind::GumbelTan => {
                if y <= 0.0 {
                    1.0
                } else {
                    (1.0 / y).atan() / FRAC_PI_2
                }
            }
            FitnessKind::GumbelLogLog => {
                if y <= 0.0 {
                    return 1.0;
                }
                // L·ln L = y on L ≥ 1; L ≤ y + e is always a valid upper bracket.
                let l = bisect(|l| l * l.ln() - y, 1.0, y + E, 1e-15 * (y + E), 400)
                    .expect("L ln L is increasing on [1, ∞)");
                (1.0 - l).exp()
            }
            _ => unreachable!("m-function requested for a non-m entry"),
        }
    }

    fn is_m_entry(&self) -> bool {
        matches!(
            self.kind,
            FitnessKind::GumbelBoundedPower { .. }
                | FitnessKind::GumbelExpInv
                | FitnessKind::GumbelRatio
                | FitnessKind::GumbelExpSqrt
                | FitnessKind::GumbelTan
                | FitnessKind::GumbelLogLog
        )
    }

    /// `m(x)` where the tail is written `exp(-m(x))`; `None` for entries
    /// without an m-function form.
    pub fn m(&self, x: f64) -> Option<f64> {
        if !self.is_m_entry() {
            return None;
        }
        if x >= 1.0 {
            return Some(f64::INFINITY);
        }
        Some(self.m_of_gap(1.0 - x.max(0.0)))
    }

    /// Bounded entries: `μ((M - d, M))` for `d ≥ 0`.
    ///
    /// For unbounded entries this is `tail(M - d)` with `M = ∞`, i.e. zero.
    pub fn tail_gap(&self, d: f64) -> f64 {
        if !self.is_bounded() {
            return 0.0;
        }
        if d <= 0.0 {
            return 0.0;
        }
        match self.kind {
            FitnessKind::Deterministic { .. } => 1.0,
            FitnessKind::WeibullPower { alpha } => {
                if d >= 1.0 {
                    1.0
                } else {
                    d.powf(alpha)
                }
            }
            _ => {
                if d >= 1.0 {
                    1.0
                } else {
                    (-self.m_of_gap(d)).exp()
                }
            }
        }
    }

    /// Upper tail `μ((x, M))`.
    pub fn tail(&self, x: f64) -> f64 {
        match self.kind {
            FitnessKind::Deterministic { w } => {
                if x < w {
                    1.0
                } else {
                    0.0
                }
            }
            FitnessKind::GumbelUnbounded { alpha } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-x.powf(alpha)).exp()
                }
            }
            FitnessKind::FrechetPareto { alpha } => {
                if x <= 1.0 {
                    1.0
                } else {
                    x.powf(-alpha)
                }
            }
            _ => {
                if x >= 1.0 {
                    0.0
                } else {
                    self.tail_gap(1.0 - x)
                }
            }
        }
    }

    /// Inverse of the tail: the weight `W` with `μ((W, M)) = u`, `u ∈ (0, 1)`.
    pub fn quantile_upper(&self, u: f64) -> f64 {
        match self.kind {
            FitnessKind::Deterministic { w } => w,
            FitnessKind::WeibullPower { alpha } => 1.0 - u.powf(1.0 / alpha),
            FitnessKind::GumbelUnbounded { alpha } => (-u.ln()).powf(1.0 / alpha),
            FitnessKind::FrechetPareto { alpha } => u.powf(-1.0 / alpha),
            _ => 1.0 - self.m_inverse_gap(-u.ln()),
        }
    }

    /// Draw one weight by inverse transform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if let FitnessKind::Deterministic { w } = self.kind {
            return w;
        }
        let u: f64 = rng.sample(Open01);
        self.quantile_upper(u)
    }

    /// Smallest horizon at which the closed-form normalizers are defined.
    pub fn normalizer_min_horizon(&self) -> f64 {
        match self.class() {
            EvtClass::Weibull | EvtClass::Frechet => 0.0,
            _ => 1.0,
        }
    }

    /// `(A(t), B(t), M - A(t))`. The third component is the exact distance
    /// to the supremum (infinite for unbounded entries).
    pub(crate) fn normalizers_full(&self, t: f64) -> Result<(f64, f64, f64)> {
        if self.class() == EvtClass::None {
            return Err(Error::NoNormalizers(self.to_string()));
        }
        let min = self.normalizer_min_horizon();
        if !(t > min) || !t.is_finite() {
            return Err(Error::UnsupportedHorizon { dist: self.to_string(), t, min });
        }
        Ok(match self.kind {
            FitnessKind::WeibullPower { alpha } => (1.0, t.powf(-1.0 / alpha), 0.0),
            FitnessKind::FrechetPareto { alpha } => (0.0, t.powf(1.0 / alpha), f64::INFINITY),
            FitnessKind::GumbelUnbounded { alpha } => {
                let l = t.ln();
                (l.powf(1.0 / alpha), l.powf(1.0 / alpha - 1.0) / alpha, f64::INFINITY)
            }
            FitnessKind::GumbelBoundedPower { alpha } => {
                let l = 1.0 + t.ln();
                let gap = l.powf(-1.0 / alpha);
                (1.0 - gap, l.powf(-1.0 / alpha - 1.0) / alpha, gap)
            }
            _ => {
                let gap = self.m_inverse_gap(t.ln());
                (1.0 - gap, 1.0 / self.m_prime_of_gap(gap), gap)
            }
        })
    }

    /// Normalizing functions `(A(t), B(t))`.
    pub fn normalizers(&self, t: f64) -> Result<(f64, f64)> {
        self.normalizers_full(t).map(|(a, b, _)| (a, b))
    }

    /// Limiting `Φ(x)` of the entry's extreme-value class.
    pub fn phi_limit(&self, x: f64) -> Result<f64> {
        Ok(match (self.class(), self.kind) {
            (EvtClass::Weibull, FitnessKind::WeibullPower { alpha }) => {
                if x < 0.0 {
                    (-x).powf(alpha)
                } else {
                    0.0
                }
            }
            (EvtClass::Frechet, FitnessKind::FrechetPareto { alpha }) => {
                if x <= 0.0 {
                    f64::INFINITY
                } else {
                    x.powf(-alpha)
                }
            }
            (EvtClass::Gumbel, _) => (-x).exp(),
            _ => return Err(Error::NoNormalizers(self.to_string())),
        })
    }
}

impl fmt::Display for FitnessSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FitnessKind::WeibullPower { alpha } => write!(f, "weibull:alpha={alpha}"),
            FitnessKind::GumbelBoundedPower { alpha } => write!(f, "gumbel-m:a:alpha={alpha}"),
            FitnessKind::GumbelExpInv => f.write_str("gumbel-m:b"),
            FitnessKind::GumbelRatio => f.write_str("gumbel-m:c"),
            FitnessKind::GumbelExpSqrt => f.write_str("gumbel-m:d"),
            FitnessKind::GumbelTan => f.write_str("gumbel-m:e"),
            FitnessKind::GumbelLogLog => f.write_str("gumbel-m:loglog"),
            FitnessKind::GumbelUnbounded { alpha } => write!(f, "gumbel-unbounded:alpha={alpha}"),
            FitnessKind::FrechetPareto { alpha } => write!(f, "frechet:alpha={alpha}"),
            FitnessKind::Deterministic { w } => write!(f, "deterministic:w={w}"),
        }
    }
}

impl FromStr for FitnessSpec {
    type Err = Error;

    fn from_str(key: &str) -> Result<Self> {
        let bad = |reason: &str| Error::BadKey { key: key.to_string(), reason: reason.to_string() };
        let key_trim = key.trim();
        let (kind, params) = match key_trim.rsplit_once(':') {
            Some((head, tail)) if tail.contains('=') => (head, tail),
            _ => (key_trim, ""),
        };
        let mut alpha = None;
        let mut w = None;
        for pair in params.split(',').filter(|p| !p.is_empty()) {
            let (name, value) = pair.split_once('=').ok_or_else(|| bad("expected param=value"))?;
            let value: f64 = value.trim().parse().map_err(|_| bad(&format!("`{value}` is not a number")))?;
            let slot = match name.trim() {
                "alpha" => &mut alpha,
                "w" => &mut w,
                other => return Err(bad(&format!("unknown parameter `{other}`"))),
            };
            if slot.replace(value).is_some() {
                return Err(bad(&format!("parameter `{}` given twice", name.trim())));
            }
        }
        let need_alpha = || alpha.ok_or_else(|| bad("missing parameter alpha"));
        let no_params = |k: FitnessKind| {
            if alpha.is_some() || w.is_some() {
                Err(bad("this distribution takes no parameters"))
            } else {
                Ok(k)
            }
        };
        let kind = match kind {
            "weibull" => FitnessKind::WeibullPower { alpha: need_alpha()? },
            "gumbel-m:a" | "gumbel-bounded" => FitnessKind::GumbelBoundedPower { alpha: need_alpha()? },
            "gumbel-m:b" => no_params(FitnessKind::GumbelExpInv)?,
            "gumbel-m:c" => no_params(FitnessKind::GumbelRatio)?,
            "gumbel-m:d" => no_params(FitnessKind::GumbelExpSqrt)?,
            "gumbel-m:e" => no_params(FitnessKind::GumbelTan)?,
            "gumbel-m:loglog" => no_params(FitnessKind::GumbelLogLog)?,
            "gumbel-unbounded" => FitnessKind::GumbelUnbounded { alpha: need_alpha()? },
            "frechet" => FitnessKind::FrechetPareto { alpha: need_alpha()? },
            "deterministic" => FitnessKind::Deterministic { w: w.ok_or_else(|| bad("missing parameter w"))? },
            other => return Err(bad(&format!("unknown distribution `{other}`"))),
        };
        if matches!(kind, FitnessKind::Deterministic { .. }) {
            if alpha.is_some() {
                return Err(bad("deterministic takes only w"));
            }
        } else if w.is_some() {
            return Err(bad("parameter w only applies to deterministic"));
        }
        FitnessSpec::new(kind).map_err(|e| bad(&e.to_string()))
    }
}

/// Every catalog entry at representative parameters; handy for sweeps.
pub fn catalog() -> Vec<FitnessSpec> {
    [
        "weibull:alpha=1",
        "weibull:alpha=2",
        "weibull:alpha=3",
        "gumbel-m:a:alpha=1",
        "gumbel-m:a:alpha=2",
        "gumbel-m:b",
        "gumbel-m:c",
        "gumbel-m:d",
        "gumbel-m:e",
        "gumbel-m:loglog",
        "gumbel-unbounded:alpha=1",
        "gumbel-unbounded:alpha=2",
        "frechet:alpha=0.5",
        "frechet:alpha=1",
        "frechet:alpha=2",
    ]
    .iter()
    .map(|k| k.parse().expect("catalog keys parse"))
    .collect()
}
