//! Unit-rate Yule processes.
//!
//! A state is either an exact count or, once the count is astronomically
//! large, the martingale limit `ζ ≈ Y(s)·e^{-s}` together with the elapsed
//! internal time, so that `log Y(s) ≈ s + log ζ`.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Open01, Poisson};
use serde::Serialize;

use crate::error::{Error, Result};

/// Internal time beyond which states are kept in log form.
pub const LOG_MODE_ELAPSED: f64 = 30.0;
/// Count beyond which states are kept in log form.
pub const COUNT_CAP: u64 = 1 << 48;
/// Up to this many branches the negative binomial increment is a sum of geometrics.
const DIRECT_SUM_BRANCHES: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum YuleMode {
    Exact { count: u64 },
    LogMode { zeta_hat: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YuleState {
    pub mode: YuleMode,
    pub elapsed: f64,
}

impl YuleState {
    pub fn new() -> Self {
        YuleState { mode: YuleMode::Exact { count: 1 }, elapsed: 0.0 }
    }

    pub fn log_size(&self) -> f64 {
        match self.mode {
            YuleMode::Exact { count } => (count as f64).ln(),
            YuleMode::LogMode { zeta_hat } => self.elapsed + zeta_hat.ln(),
        }
    }

    pub fn size(&self) -> f64 {
        match self.mode {
            YuleMode::Exact { count } => count as f64,
            YuleMode::LogMode { .. } => self.log_size().exp(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.mode, YuleMode::Exact { .. })
    }

    /// `ζ̂`: the stored limit in log form, `count·e^{-elapsed}` otherwise.
    pub fn zeta_hat(&self) -> f64 {
        match self.mode {
            YuleMode::Exact { count } => count as f64 * (-self.elapsed).exp(),
            YuleMode::LogMode { zeta_hat } => zeta_hat,
        }
    }
}

impl Default for YuleState {
    fn default() -> Self {
        Self::new()
    }
}

/// Geometric on `{1, 2, ...}` with success probability `e^{-s}`, by inversion.
/// Returned as `f64` because it may exceed the count cap.
fn geometric_exp(s: f64, rng: &mut (impl Rng + ?Sized)) -> f64 {
    if s <= 0.0 {
        return 1.0;
    }
    let u: f64 = rng.sample(Open01);
    // ln(1 - e^{-s}), accurate for both small and large s.
    let log_q = (-(-s).exp_m1()).ln();
    1.0 + (u.ln() / log_q).floor()
}

pub fn yule_sample(s: f64, rng: &mut (impl Rng + ?Sized)) -> YuleState {
    let s = s.max(0.0);
    if s > LOG_MODE_ELAPSED {
        let zeta: f64 = rng.sample(Exp1);
        return YuleState { mode: YuleMode::LogMode { zeta_hat: zeta }, elapsed: s };
    }
    let k = geometric_exp(s, rng);
    from_count(k, s)
}

fn from_count(count: f64, elapsed: f64) -> YuleState {
    if count > COUNT_CAP as f64 {
        YuleState { mode: YuleMode::LogMode { zeta_hat: count * (-elapsed).exp() }, elapsed }
    } else {
        YuleState { mode: YuleMode::Exact { count: count as u64 }, elapsed }
    }
}

/// Total size after `ds` of `k` independent unit-rate Yule processes each started at 1.
fn negbin_total(k: u64, ds: f64, rng: &mut (impl Rng + ?Sized)) -> f64 {
    if k <= DIRECT_SUM_BRANCHES {
        return (0..k).map(|_| geometric_exp(ds, rng)).sum();
    }
    // Failures ~ Poisson(Gamma(k, e^{ds} - 1)): the negative binomial as a mixture.
    let scale = ds.exp_m1();
    let g = Gamma::new(k as f64, scale).expect("positive shape and scale").sample(rng);
    if g <= 0.0 {
        return k as f64;
    }
    if g > 1e15 {
        // Poisson noise is far below f64 resolution of the count here.
        return k as f64 + g;
    }
    let extra: f64 = Poisson::new(g).expect("finite positive mean").sample(rng);
    k as f64 + extra
}

pub fn yule_extend(state: YuleState, ds: f64, rng: &mut (impl Rng + ?Sized)) -> YuleState {
    if !(ds > 0.0) {
        return state;
    }
    let elapsed = state.elapsed + ds;
    match state.mode {
        YuleMode::LogMode { .. } => YuleState { elapsed, ..state },
        YuleMode::Exact { count } => {
            if elapsed > LOG_MODE_ELAPSED {
                // Given Y(s₀) = k, the limit e^{s₀}·ζ is a sum of k unit exponentials.
                let g = Gamma::new(count as f64, 1.0).expect("count >= 1").sample(rng);
                let zeta_hat = g * (-state.elapsed).exp();
                return YuleState { mode: YuleMode::LogMode { zeta_hat }, elapsed };
            }
            from_count(negbin_total(count, ds, rng), elapsed)
        }
    }
}

/// `(2 + λa)·e^{-yb + λ(b-a)}` clamped to `[0, 1]`.
pub fn yule_tail_bound(lambda: f64, a: f64, b: f64, y: f64) -> Result<f64> {
    if !(lambda > 0.0 && a > 0.0 && b > 0.0 && y > 0.0) {
        return Err(Error::Domain(format!("need lambda, a, b, y > 0, got ({lambda}, {a}, {b}, {y})")));
    }
    if a > b {
        return Err(Error::Domain(format!("need a <= b, got a={a}, b={b}")));
    }
    let raw = (2.0 + lambda * a) * (-y * b + lambda * (b - a)).exp();
    Ok(raw.clamp(0.0, 1.0))
}

/// Number of grid steps across `[a, b]` used when estimating the supremum.
pub const SUP_STEPS: usize = 1000;

/// One path of a rate-`λ` Yule process on `[a, b]`: does
/// `max |log Y_t - λt|` over `SUP_STEPS + 1` grid points reach `yb`?
pub fn sup_deviation_exceeds(lambda: f64, a: f64, b: f64, y: f64, rng: &mut (impl Rng + ?Sized)) -> bool {
    let level = y * b;
    let mut state = yule_sample(lambda * a, rng);
    if (state.log_size() - lambda * a).abs() >= level {
        return true;
    }
    let dt = (b - a) / SUP_STEPS as f64;
    for i in 1..=SUP_STEPS {
        state = yule_extend(state, lambda * dt, rng);
        let t = a + dt * i as f64;
        if (state.log_size() - lambda * t).abs() >= level {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replica_rng;

    #[test]
    fn zero_time_is_one() {
        let mut rng = replica_rng(1, 0);
        for _ in 0..100 {
            assert_eq!(yule_sample(0.0, &mut rng).mode, YuleMode::Exact { count: 1 });
        }
    }

    #[test]
    fn extend_by_zero_is_identity() {
        let mut rng = replica_rng(1, 0);
        let s = YuleState { mode: YuleMode::Exact { count: 7 }, elapsed: 2.0 };
        assert_eq!(yule_extend(s, 0.0, &mut rng), s);
    }

    #[test]
    fn log_mode_reports_elapsed_plus_log_zeta() {
        let s = YuleState { mode: YuleMode::LogMode { zeta_hat: 2.0 }, elapsed: 40.0 };
        assert!((s.log_size() - (40.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn large_s_goes_to_log_mode() {
        let mut rng = replica_rng(2, 0);
        let s = yule_sample(100.0, &mut rng);
        assert!(!s.is_exact());
        assert_eq!(s.elapsed, 100.0);
    }

    #[test]
    fn tail_bound_examples() {
        let b = yule_tail_bound(1.0, 10.0, 10.0, 1.0).unwrap();
        assert!((b - 12.0 * (-10f64).exp()).abs() < 1e-15);
        assert!((b - 5.45e-4).abs() < 1e-6);
        let b = yule_tail_bound(1.0, 9.0, 10.0, 0.5).unwrap();
        assert!((b - 11.0 * (-4f64).exp()).abs() < 1e-14);
        assert!((b - 0.2014).abs() < 1e-4);
        assert_eq!(yule_tail_bound(1.0, 1.0, 2.0, 1e6).unwrap(), 0.0);
        assert!(yule_tail_bound(1.0, 3.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn geometric_mean_matches() {
        let mut rng = replica_rng(3, 0);
        let n = 100_000;
        let s = 1.5f64;
        let m: f64 = (0..n).map(|_| geometric_exp(s, &mut rng)).sum::<f64>() / n as f64;
        let sd = ((2.0 * s).exp() - s.exp()).sqrt();
        assert!((m - s.exp()).abs() < 4.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn mixture_branch_mean_matches() {
        let mut rng = replica_rng(4, 0);
        let n = 50_000;
        let k = 40u64;
        let xs: Vec<f64> = (0..n).map(|_| negbin_total(k, 0.7, &mut rng)).collect();
        let (m, se) = crate::stats::mean_se(&xs);
        assert!((m - k as f64 * 0.7f64.exp()).abs() < 4.0 * se);
    }

    #[test]
    fn cap_promotes_to_log_mode() {
        let mut rng = replica_rng(5, 0);
        let s = YuleState { mode: YuleMode::Exact { count: COUNT_CAP - 1 }, elapsed: 29.0 };
        let e = yule_extend(s, 0.5, &mut rng);
        assert!(!e.is_exact());
        assert!(e.log_size() >= s.log_size());
    }

    proptest::proptest! {
        #[test]
        fn extension_never_shrinks(seed in 0u64..1000, s in 0.0f64..40.0, ds in 0.0f64..10.0) {
            let mut rng = replica_rng(seed, 0);
            let a = yule_sample(s, &mut rng);
            let b = yule_extend(a, ds, &mut rng);
            proptest::prop_assert!(b.log_size() >= a.log_size() - 1e-9);
            proptest::prop_assert!((b.elapsed - (s + ds)).abs() < 1e-12);
        }
    }
}
