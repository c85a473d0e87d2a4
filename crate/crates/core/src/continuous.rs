//! Continuous-time embedding. Tables open at the jumps of a rate-`θ` Poisson
//! process; table `n` then grows as a Yule process run at speed `W_n`, so its
//! size at time `t` is `Y_n(W_n·(t − τ_n))`.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fitness::FitnessSpec;
use crate::scaling::ScalingTriple;
use crate::stats::logsumexp;
use crate::yule::{yule_extend, yule_sample, YuleState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Table {
    pub tau: f64,
    pub weight: f64,
    pub yule: YuleState,
}

impl Table {
    pub fn log_size(&self) -> f64 {
        self.yule.log_size()
    }
}

#[derive(Debug, Clone)]
pub struct ContinuousRestaurant {
    pub theta: f64,
    pub spec: FitnessSpec,
    pub t: f64,
    pub tables: Vec<Table>,
    /// Whether table 0 is the initial table opened at time 0.
    pub has_root: bool,
}

fn poisson_count(mean: f64, rng: &mut (impl Rng + ?Sized)) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as usize
}

/// `count` sorted uniforms on `(lo, hi]`.
fn sorted_uniforms(count: usize, lo: f64, hi: f64, rng: &mut (impl Rng + ?Sized)) -> Vec<f64> {
    let mut v: Vec<f64> = (0..count).map(|_| hi - (hi - lo) * rng.random::<f64>()).collect();
    v.sort_by(f64::total_cmp);
    v
}

impl ContinuousRestaurant {
    /// Empty restaurant at time 0, optionally with the root table.
    pub fn new(theta: f64, spec: FitnessSpec, include_root: bool, rng: &mut (impl Rng + ?Sized)) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")));
        }
        let mut tables = Vec::new();
        if include_root {
            tables.push(Table { tau: 0.0, weight: spec.sample(rng), yule: YuleState::new() });
        }
        Ok(ContinuousRestaurant { theta, spec, t: 0.0, tables, has_root: include_root })
    }

    /// Direct sample of the state at time `t`.
    pub fn snapshot(
        theta: f64,
        spec: FitnessSpec,
        t: f64,
        include_root: bool,
        rng: &mut (impl Rng + ?Sized),
    ) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon must be positive, got {t}")));
        }
        let mut r = Self::new(theta, spec, include_root, rng)?;
        for table in &mut r.tables {
            table.yule = yule_sample(table.weight * t, rng);
        }
        r.t = t;
        r.append_segment(0.0, t, rng);
        Ok(r)
    }

    fn append_segment(&mut self, lo: f64, hi: f64, rng: &mut (impl Rng + ?Sized)) {
        let m = poisson_count(self.theta * (hi - lo), rng);
        for tau in sorted_uniforms(m, lo, hi, rng) {
            let weight = self.spec.sample(rng);
            let yule = yule_sample(weight * (hi - tau), rng);
            self.tables.push(Table { tau, weight, yule });
        }
    }

    /// Advance the same trajectory to `t_next`.
    pub fn evolve(&mut self, t_next: f64, rng: &mut (impl Rng + ?Sized)) -> Result<()> {
        if !(t_next >= self.t) {
            return Err(Error::InvalidParameter(format!("cannot evolve backwards from {} to {t_next}", self.t)));
        }
        let dt = t_next - self.t;
        if dt == 0.0 {
            return Ok(());
        }
        for table in &mut self.tables {
            table.yule = yule_extend(table.yule, table.weight * dt, rng);
        }
        let lo = self.t;
        self.t = t_next;
        self.append_segment(lo, t_next, rng);
        Ok(())
    }

    /// `M(t)`.
    pub fn table_count(&self) -> usize {
        self.tables.len()
    }

    pub fn log_sizes(&self) -> Vec<f64> {
        self.tables.iter().map(Table::log_size).collect()
    }

    /// `log N(t)`.
    pub fn log_total_size(&self) -> f64 {
        logsumexp(&self.log_sizes())
    }

    pub fn size_summary(&self) -> Result<SizeSummary> {
        if self.tables.is_empty() {
            return Err(Error::TooFewTables("restaurant is empty".into()));
        }
        let ls = self.log_sizes();
        let top = top_k(&ls, 3);
        let log_n = logsumexp(&ls);
        let rest_after = |k: usize| -> f64 {
            let others: Vec<f64> =
                ls.iter().enumerate().filter(|(i, _)| !top[..k].contains(i)).map(|(_, &x)| x).collect();
            logsumexp(&others) - log_n
        };
        let log_deficit1 = rest_after(1);
        let log_deficit12 = if top.len() >= 2 { rest_after(2) } else { f64::NEG_INFINITY };
        Ok(SizeSummary {
            t: self.t,
            tables: self.tables.len(),
            log_total: log_n,
            leader: top[0],
            second: top.get(1).copied(),
            log_size1: ls[top[0]],
            share1: (ls[top[0]] - log_n).exp(),
            share12: top.iter().take(2).map(|&i| (ls[i] - log_n).exp()).sum(),
            log_deficit1,
            log_deficit12,
        })
    }
}

/// Creation time and weight of a table, without its size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mark {
    pub tau: f64,
    pub weight: f64,
}

/// The marks `(τ_n, W_n)` of a snapshot at time `t` (no root table). This is
/// all that exponent statistics need, and skips the Yule draws.
pub fn sample_marks(theta: f64, spec: &FitnessSpec, t: f64, rng: &mut (impl Rng + ?Sized)) -> Vec<Mark> {
    let m = poisson_count(theta * t, rng);
    sorted_uniforms(m, 0.0, t, rng).into_iter().map(|tau| Mark { tau, weight: spec.sample(rng) }).collect()
}

/// Largest normalized exponents `ξ⁽¹⁾ ≥ ξ⁽²⁾ ≥ ξ⁽³⁾` of a set of marks.
pub fn top_xi(marks: &[Mark], triple: &ScalingTriple) -> Vec<f64> {
    let t = triple.t;
    let xi: Vec<f64> = marks.iter().map(|m| (m.weight * (t - m.tau) - t * triple.v) / (t * triple.w)).collect();
    top_k(&xi, 3).into_iter().map(|i| xi[i]).collect()
}

/// Indices of the `k` largest values, ties by smaller index.
pub fn top_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Size shares computed in log space. `log_deficit1 = ln(1 − share1)` stays
/// informative when `share1` rounds to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizeSummary {
    pub t: f64,
    pub tables: usize,
    pub log_total: f64,
    pub leader: usize,
    pub second: Option<usize>,
    pub log_size1: f64,
    pub share1: f64,
    pub share12: f64,
    pub log_deficit1: f64,
    pub log_deficit12: f64,
}

fn check_horizon(r: &ContinuousRestaurant, triple: &ScalingTriple) -> Result<()> {
    if (triple.t - r.t).abs() > 1e-9 * r.t.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "scaling solved at t={} but restaurant is at t={}",
            triple.t, r.t
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentView {
    pub t: f64,
    /// `Θ_n = W_n·(t − τ_n)` per table.
    pub theta: Vec<f64>,
    /// `ξ_n = (Θ_n − t·v_t)/(t·w_t)` per table.
    pub xi: Vec<f64>,
    /// Argmax indices `m₁, m₂, m₃` (fewer when `M(t) < 3`).
    pub top: Vec<usize>,
}

impl ExponentView {
    pub fn is_complete(&self) -> bool {
        self.top.len() >= 3
    }

    pub fn theta_order(&self, k: usize) -> Option<f64> {
        self.top.get(k).map(|&i| self.theta[i])
    }

    pub fn xi_order(&self, k: usize) -> Option<f64> {
        self.top.get(k).map(|&i| self.xi[i])
    }

    /// `ξ⁽¹⁾ − ξ⁽³⁾`.
    pub fn gap13(&self) -> Result<f64> {
        if !self.is_complete() {
            return Err(Error::TooFewTables(format!("need 3 tables, have {}", self.theta.len())));
        }
        Ok(self.xi[self.top[0]] - self.xi[self.top[2]])
    }
}

pub fn exponent_view(r: &ContinuousRestaurant, triple: &ScalingTriple) -> Result<ExponentView> {
    check_horizon(r, triple)?;
    let t = r.t;
    let theta: Vec<f64> = r.tables.iter().map(|tb| tb.weight * (t - tb.tau)).collect();
    let xi = theta.iter().map(|th| (th - t * triple.v) / (t * triple.w)).collect();
    let top = top_k(&theta, 3);
    Ok(ExponentView { t, theta, xi, top })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaPoint {
    pub index: usize,
    pub tau: f64,
    pub weight: f64,
    pub s: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointMeasure {
    pub t: f64,
    pub points: Vec<GammaPoint>,
}

impl PointMeasure {
    /// Number of points in `[0, a] × [b, ∞) × [c, ∞)`.
    pub fn count_in_box(&self, a: f64, b: f64, c: Option<f64>) -> usize {
        self.points.iter().filter(|p| p.s <= a && p.y >= b && c.is_none_or(|c| p.z >= c)).count()
    }
}

/// The rescaled point measure `(τ/u_t, (W − v_t)/w_t, (log Z − t·v_t)/(t·w_t))`.
pub fn gamma_measure(r: &ContinuousRestaurant, triple: &ScalingTriple) -> Result<PointMeasure> {
    check_horizon(r, triple)?;
    let t = r.t;
    let points = r
        .tables
        .iter()
        .enumerate()
        .map(|(index, tb)| GammaPoint {
            index,
            tau: tb.tau,
            weight: tb.weight,
            s: tb.tau / triple.u,
            y: (tb.weight - triple.v) / triple.w,
            z: (tb.log_size() - t * triple.v) / (t * triple.w),
        })
        .collect();
    Ok(PointMeasure { t, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replica_rng;
    use crate::scaling::solve_scaling;
    use crate::yule::YuleMode;

    fn restaurant(t: f64, tables: &[(f64, f64)]) -> ContinuousRestaurant {
        ContinuousRestaurant {
            theta: 1.0,
            spec: FitnessSpec::weibull(1.0).unwrap(),
            t,
            tables: tables.iter().map(|&(tau, weight)| Table { tau, weight, yule: YuleState::new() }).collect(),
            has_root: false,
        }
    }

    #[test]
    fn single_table_exponent() {
        let r = restaurant(10.0, &[(0.0, 0.7)]);
        let tr = ScalingTriple { t: 10.0, u: 1.0, v: 1.0, w: 1.0, gap: 0.0 };
        let v = exponent_view(&r, &tr).unwrap();
        assert!((v.theta_order(0).unwrap() - 7.0).abs() < 1e-12);
        assert!(matches!(v.gap13(), Err(Error::TooFewTables(_))));
    }

    #[test]
    fn two_table_exponent() {
        let t = 8.0;
        let r = restaurant(t, &[(0.0, 1.0), (t / 2.0, 3.0)]);
        let tr = ScalingTriple { t, u: 1.0, v: 1.0, w: 1.0, gap: 0.0 };
        let v = exponent_view(&r, &tr).unwrap();
        assert_eq!(v.top[0], 1);
        assert!((v.theta_order(0).unwrap() - 1.5 * t).abs() < 1e-12);
    }

    #[test]
    fn weibull_xi_formula() {
        let spec = FitnessSpec::weibull(2.0).unwrap();
        let t = 1000.0;
        let tr = solve_scaling(&spec, t).unwrap();
        let r = restaurant(t, &[(100.0, 0.99), (3.0, 0.9)]);
        let v = exponent_view(&r, &tr).unwrap();
        let w_t = t.powf(-1.0 / 3.0);
        for (i, tb) in r.tables.iter().enumerate() {
            let expect = (tb.weight * (t - tb.tau) - t) / (t * w_t);
            assert!((v.xi[i] - expect).abs() < 1e-9 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn unit_table_z() {
        let spec = FitnessSpec::weibull(2.0).unwrap();
        let t = 1000.0;
        let tr = solve_scaling(&spec, t).unwrap();
        let r = restaurant(t, &[(5.0, 0.5)]);
        let g = gamma_measure(&r, &tr).unwrap();
        assert!((g.points[0].z - (-t * tr.v) / (t * tr.w)).abs() < 1e-12);
    }

    #[test]
    fn log_mode_offset() {
        let t = 100.0;
        let mut r = restaurant(t, &[(0.0, 1.0)]);
        r.tables[0].yule = YuleState { mode: YuleMode::LogMode { zeta_hat: 0.3 }, elapsed: 100.0 };
        let tr = ScalingTriple { t, u: 10.0, v: 1.0, w: 0.1, gap: 0.0 };
        let g = gamma_measure(&r, &tr).unwrap();
        let v = exponent_view(&r, &tr).unwrap();
        assert!((g.points[0].z - v.xi[0] - 0.3f64.ln() / (t * tr.w)).abs() < 1e-12);
    }

    #[test]
    fn horizon_mismatch_is_rejected() {
        let r = restaurant(10.0, &[(0.0, 1.0)]);
        let tr = ScalingTriple { t: 11.0, u: 1.0, v: 1.0, w: 1.0, gap: 0.0 };
        assert!(exponent_view(&r, &tr).is_err());
    }

    #[test]
    fn tiny_horizon_is_usually_empty() {
        let mut rng = replica_rng(1, 0);
        let spec = FitnessSpec::weibull(1.0).unwrap();
        let empty = (0..1000)
            .filter(|_| ContinuousRestaurant::snapshot(1.0, spec, 1e-6, false, &mut rng).unwrap().tables.is_empty())
            .count();
        assert!(empty >= 998);
    }

    #[test]
    fn shares_survive_saturation() {
        let mut r = restaurant(100.0, &[(0.0, 1.0), (1.0, 1.0)]);
        r.tables[0].yule = YuleState { mode: YuleMode::LogMode { zeta_hat: 1.0 }, elapsed: 200.0 };
        let s = r.size_summary().unwrap();
        assert_eq!(s.share1, 1.0);
        assert!((s.log_deficit1 - (-200.0)).abs() < 1e-9);
    }

    proptest::proptest! {
        #[test]
        fn evolve_invariants(seed in 0u64..300, t0 in 0.5f64..5.0, dt in 0.0f64..5.0) {
            let mut rng = replica_rng(seed, 0);
            let spec = FitnessSpec::weibull(2.0).unwrap();
            let mut r = ContinuousRestaurant::snapshot(2.0, spec, t0, true, &mut rng).unwrap();
            let before: Vec<f64> = r.log_sizes();
            r.evolve(t0 + dt, &mut rng).unwrap();
            for (b, a) in before.iter().zip(r.log_sizes()) {
                proptest::prop_assert!(a >= b - 1e-12);
            }
            proptest::prop_assert!(r.tables.windows(2).all(|w| w[0].tau < w[1].tau));
            for tb in &r.tables {
                proptest::prop_assert!(tb.tau <= r.t);
                proptest::prop_assert!((tb.yule.elapsed - tb.weight * (r.t - tb.tau)).abs() < 1e-9);
            }
            proptest::prop_assert!(r.log_total_size() >= (r.table_count() as f64).ln() - 1e-9);
        }

        #[test]
        fn theta_and_xi_agree_on_order(seed in 0u64..300) {
            let mut rng = replica_rng(seed, 1);
            let spec = FitnessSpec::frechet(1.5).unwrap();
            let r = ContinuousRestaurant::snapshot(1.0, spec, 30.0, false, &mut rng).unwrap();
            let tr = solve_scaling(&spec, 30.0).unwrap();
            let v = exponent_view(&r, &tr).unwrap();
            proptest::prop_assert_eq!(top_k(&v.xi, 3), v.top.clone());
        }
    }
}
