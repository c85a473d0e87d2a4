//! wasm-bindgen front end for the browser demo. Every export returns a JSON
//! string; errors come back as `{"error": "..."}` so the page never throws.

use crp_core::continuous::{gamma_measure, ContinuousRestaurant};
use crp_core::discrete::{log_checkpoints, run_discrete, DiscreteConfig};
use crp_core::pointprocess::max_xi_cdf;
use crp_core::rng::replica_rng;
use crp_core::scaling::{phi_t, solve_scaling};
use crp_core::{FitnessSpec, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Caps keep a single click responsive in the browser.
const MAX_ARRIVALS: u64 = 2_000_000;
const MAX_HORIZON: f64 = 5_000.0;

fn to_json<T: Serialize>(r: Result<T>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e.to_string()),
    }
}

fn error_json(msg: &str) -> String {
    serde_json::json!({ "error": msg }).to_string()
}

#[derive(Serialize)]
pub struct CurvePoint {
    pub x: f64,
    pub phi_t: f64,
    pub phi: f64,
}

#[derive(Serialize)]
pub struct ScalingView {
    pub t: f64,
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub curve: Vec<CurvePoint>,
}

/// Scaling triple at `t` and `Φ_t` against its limit on `points` grid points in `[x_lo, x_hi]`.
pub fn scaling_view(dist: &str, t: f64, x_lo: f64, x_hi: f64, points: usize) -> Result<ScalingView> {
    let spec: FitnessSpec = dist.parse()?;
    let tr = solve_scaling(&spec, t)?;
    let points = points.clamp(2, 2000);
    let curve = (0..points)
        .map(|i| {
            let x = x_lo + (x_hi - x_lo) * i as f64 / (points - 1) as f64;
            Ok(CurvePoint { x, phi_t: phi_t(&spec, &tr, x), phi: spec.phi_limit(x)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalingView { t, u: tr.u, v: tr.v, w: tr.w, curve })
}

#[derive(Serialize)]
pub struct TrajectoryPoint {
    pub n: u64,
    pub tables: u64,
    pub share1: f64,
    pub share12: f64,
    pub leader_birth: u64,
}

/// Leader and two-table shares of one discrete path at log-spaced checkpoints.
pub fn trajectory(dist: &str, theta: f64, n_max: u64, seed: u64) -> Result<Vec<TrajectoryPoint>> {
    let spec: FitnessSpec = dist.parse()?;
    let n_max = n_max.clamp(1, MAX_ARRIVALS);
    let cfg = DiscreteConfig { theta, spec, n_max, checkpoints: log_checkpoints(n_max, 60) };
    let recs = run_discrete(&cfg, &mut replica_rng(seed, 0))?;
    Ok(recs
        .into_iter()
        .map(|r| TrajectoryPoint {
            n: r.n,
            tables: r.k,
            share1: r.share1,
            share12: r.share12,
            leader_birth: r.leader_birth,
        })
        .collect())
}

#[derive(Serialize)]
pub struct PointView {
    pub s: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Serialize)]
pub struct MeasureView {
    pub t: f64,
    pub tables: usize,
    pub points: Vec<PointView>,
    /// `(x, P(ξ⁽¹⁾ ≤ x))` predicted from the Poisson intensity, at the sample's top exponents.
    pub max_cdf: Vec<(f64, f64)>,
}

/// One snapshot point measure at horizon `t`.
pub fn measure(dist: &str, theta: f64, t: f64, seed: u64) -> Result<MeasureView> {
    let spec: FitnessSpec = dist.parse()?;
    let t = t.clamp(1.0, MAX_HORIZON);
    let tr = solve_scaling(&spec, t)?;
    let r = ContinuousRestaurant::snapshot(theta, spec, t, false, &mut replica_rng(seed, 0))?;
    let pm = gamma_measure(&r, &tr)?;
    let mut top: Vec<f64> = pm.points.iter().map(|p| p.z).collect();
    top.sort_by(|a, b| b.total_cmp(a));
    top.truncate(10);
    let max_cdf = top.iter().filter_map(|&x| max_xi_cdf(theta, &spec, &tr, x).ok().map(|p| (x, p))).collect();
    Ok(MeasureView {
        t,
        tables: r.table_count(),
        points: pm.points.iter().map(|p| PointView { s: p.s, y: p.y, z: p.z }).collect(),
        max_cdf,
    })
}

#[wasm_bindgen]
pub fn scaling_json(dist: &str, t: f64, x_lo: f64, x_hi: f64, points: usize) -> String {
    to_json(scaling_view(dist, t, x_lo, x_hi, points))
}

#[wasm_bindgen]
pub fn trajectory_json(dist: &str, theta: f64, n_max: u64, seed: u64) -> String {
    to_json(trajectory(dist, theta, n_max, seed))
}

#[wasm_bindgen]
pub fn measure_json(dist: &str, theta: f64, t: f64, seed: u64) -> String {
    to_json(measure(dist, theta, t, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weibull_scaling_view() {
        let v = scaling_view("weibull:alpha=2", 1000.0, -2.0, 0.0, 5).unwrap();
        assert!((v.u - 100.0).abs() < 1e-9);
        assert_eq!(v.curve.len(), 5);
        assert!((v.curve[0].phi - 4.0).abs() < 1e-12);
    }

    #[test]
    fn bad_key_becomes_error_json() {
        let s = scaling_json("nope", 10.0, 0.0, 1.0, 3);
        assert!(s.contains("\"error\""));
    }

    #[test]
    fn trajectory_is_reproducible_and_capped() {
        let a = trajectory_json("frechet:alpha=1", 1.0, 5_000, 7);
        assert_eq!(a, trajectory_json("frechet:alpha=1", 1.0, 5_000, 7));
        let t = trajectory("weibull:alpha=2", 1.0, u64::MAX, 1).unwrap();
        assert_eq!(t.last().unwrap().n, MAX_ARRIVALS);
    }

    #[test]
    fn measure_has_one_point_per_table() {
        let m = measure("frechet:alpha=1", 1.0, 200.0, 3).unwrap();
        assert_eq!(m.points.len(), m.tables);
        assert!(m.max_cdf.windows(2).all(|w| w[0].1 >= w[1].1));
    }
}
