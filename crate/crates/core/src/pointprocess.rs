//! Intensity computations for the point process of rescaled table marks, and
//! comparison of simulated point measures against them.
//!
//! The marks `(τ_n, W_n)` of a snapshot without the root table form an exact
//! Poisson process with intensity `θ ds ⊗ μ(dw)`, so box counts and the law of
//! the largest exponent have finite-`t` predictions, not just limits.

use serde::Serialize;

use crate::continuous::{sample_marks, top_xi, PointMeasure};
use crate::error::{Error, Result};
use crate::fitness::{EvtClass, FitnessSpec};
use crate::numeric::{integrate, integrate_to_infinity, integrate_with_breaks};
use crate::rng::map_replicas;
use crate::scaling::{phi_t, ScalingTriple};
use crate::stats::{mean_se, wilson};

/// `π(A_t(x))`: expected number of tables with `ξ_n(t) > x`.
pub fn pi_at(theta: f64, spec: &FitnessSpec, triple: &ScalingTriple, x: f64) -> Result<f64> {
    let (v, w) = (triple.v, triple.w);
    if !(x > -v / w && v + x * w > 0.0) {
        return Err(Error::Domain(format!("need x > -v_t/w_t = {}, got {x}", -v / w)));
    }
    let upper = triple.x_max();
    if x >= upper {
        return Ok(0.0);
    }
    let prefactor = theta * (v + x * w) * triple.t * w / triple.u;
    let f = |z: f64| {
        let d = v + z * w;
        phi_t(spec, triple, z) / (d * d)
    };
    // Kinks of the tail: top of a unit-gap power law, and the Pareto cutoff at 1.
    let breaks = [(triple.gap - 1.0) / w, (1.0 - v) / w];
    let abs_tol = 1e-13 / prefactor.max(1e-300);
    let q = integrate_with_breaks(f, x, upper, &breaks, abs_tol, 1e-12);
    Ok(prefactor * q.value)
}

/// `P(ξ⁽¹⁾(t) ≤ x) = exp(−π(A_t(x)))`.
pub fn max_xi_cdf(theta: f64, spec: &FitnessSpec, triple: &ScalingTriple, x: f64) -> Result<f64> {
    Ok((-pi_at(theta, spec, triple, x)?).exp())
}

/// Box `[0, a] × [b, ∞) × [c, ∞)` in `(s, y, z)` coordinates; `c = None` drops
/// the third constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxSpec {
    pub a: f64,
    pub b: f64,
    pub c: Option<f64>,
}

impl BoxSpec {
    pub fn new(a: f64, b: f64, c: Option<f64>) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) || b.is_nan() || c.is_some_and(f64::is_nan) {
            return Err(Error::Domain(format!("bad box a={a}, b={b}, c={c:?}")));
        }
        Ok(BoxSpec { a, b, c })
    }

    /// Whether the limit formulas apply to this box in the given class.
    pub fn limit_applies(&self, class: EvtClass) -> bool {
        match class {
            EvtClass::Frechet => self.b > 0.0 && self.a < 1.0,
            EvtClass::None => false,
            _ => true,
        }
    }
}

/// Expected number of snapshot tables in the `(s, y)` box at time `t`:
/// `θ·min(a, t/u_t)·Φ_t(b)`.
pub fn box_mean_finite(theta: f64, spec: &FitnessSpec, triple: &ScalingTriple, bx: &BoxSpec) -> f64 {
    theta * bx.a.min(triple.t / triple.u) * phi_t(spec, triple, bx.b)
}

/// Limit mean `θ·∫₀^a Φ(max(b, g(s, c))) ds`, where `g` inverts the limiting
/// third coordinate: `z = y − s` (Weibull, Gumbel) or `z = y·(1 − s)` (Fréchet).
pub fn box_mean_limit(theta: f64, spec: &FitnessSpec, bx: &BoxSpec) -> Result<f64> {
    let class = spec.class();
    if !bx.limit_applies(class) {
        return Err(Error::Domain(format!("no limit prediction for box {bx:?} in class {class}")));
    }
    let phi = |y: f64| spec.phi_limit(y).expect("class has a limit");
    let Some(c) = bx.c else {
        return Ok(theta * bx.a * phi(bx.b));
    };
    let g = |s: f64| match class {
        EvtClass::Frechet => c / (1.0 - s),
        _ => c + s,
    };
    let integrand = |s: f64| phi(bx.b.max(g(s)));
    // g(s) = b at the kink.
    let kink = match class {
        EvtClass::Frechet => 1.0 - c / bx.b,
        _ => bx.b - c,
    };
    let q = integrate_with_breaks(integrand, 0.0, bx.a, &[kink], 1e-13, 1e-12);
    Ok(theta * q.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VoidPrediction {
    pub finite: f64,
    pub limit: f64,
}

/// Probability that the `(s, y)` box is empty.
pub fn void_probability(
    theta: f64,
    spec: &FitnessSpec,
    triple: &ScalingTriple,
    bx: &BoxSpec,
) -> Result<VoidPrediction> {
    let finite = (-box_mean_finite(theta, spec, triple, bx)).exp();
    let limit = (-box_mean_limit(theta, spec, &BoxSpec { c: None, ..*bx })?).exp();
    Ok(VoidPrediction { finite, limit })
}

/// Minimum number of replicas for an empirical comparison.
pub const MIN_REPLICAS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxReport {
    pub a: f64,
    pub b: f64,
    pub c: Option<f64>,
    pub replicas: usize,
    pub predicted_mean: f64,
    /// Finite-`t` mean; `NaN` for three-dimensional boxes.
    pub predicted_mean_finite: f64,
    pub empirical_mean: f64,
    pub se: f64,
    pub z: f64,
    pub predicted_void: f64,
    pub predicted_void_finite: f64,
    pub empirical_void: f64,
    pub void_se: f64,
    pub z_void: f64,
}

/// Box statistics of simulated point measures against the limit predictions.
pub fn empirical_compare(
    samples: &[PointMeasure],
    theta: f64,
    spec: &FitnessSpec,
    triple: &ScalingTriple,
    bx: &BoxSpec,
) -> Result<BoxReport> {
    let counts: Vec<usize> = samples.iter().map(|m| m.count_in_box(bx.a, bx.b, bx.c)).collect();
    compare_box_counts(&counts, theta, spec, triple, bx)
}

/// As [`empirical_compare`], from per-replica box counts. Standard errors are
/// computed under the predicted law (Poisson count, Bernoulli void
/// indicator), so they stay positive when the sample is degenerate.
pub fn compare_box_counts(
    counts: &[usize],
    theta: f64,
    spec: &FitnessSpec,
    triple: &ScalingTriple,
    bx: &BoxSpec,
) -> Result<BoxReport> {
    if counts.len() < MIN_REPLICAS {
        return Err(Error::TooFewReplicas { got: counts.len(), need: MIN_REPLICAS });
    }
    let n = counts.len() as f64;
    let counts: Vec<f64> = counts.iter().map(|&k| k as f64).collect();
    let (empirical_mean, _) = mean_se(&counts);
    let empirical_void = counts.iter().filter(|&&k| k == 0.0).count() as f64 / n;
    let predicted_mean = box_mean_limit(theta, spec, bx)?;
    let predicted_void = (-predicted_mean).exp();
    let se = (predicted_mean / n).sqrt();
    let void_se = (predicted_void * (1.0 - predicted_void) / n).sqrt();
    let (predicted_mean_finite, predicted_void_finite) = if bx.c.is_none() {
        let m = box_mean_finite(theta, spec, triple, bx);
        (m, (-m).exp())
    } else {
        (f64::NAN, f64::NAN)
    };
    let z_of = |emp: f64, pred: f64, se: f64| {
        if se > 0.0 {
            (emp - pred) / se
        } else if emp == pred {
            0.0
        } else {
            f64::INFINITY
        }
    };
    Ok(BoxReport {
        a: bx.a,
        b: bx.b,
        c: bx.c,
        replicas: counts.len(),
        predicted_mean,
        predicted_mean_finite,
        empirical_mean,
        se,
        z: z_of(empirical_mean, predicted_mean, se),
        predicted_void,
        predicted_void_finite,
        empirical_void,
        void_se,
        z_void: z_of(empirical_void, predicted_void, void_se),
    })
}

/// Box counts of `replicas` independent snapshot point measures at the triple's horizon.
pub fn simulate_box_counts(
    theta: f64,
    spec: &FitnessSpec,
    triple: &ScalingTriple,
    bx: &BoxSpec,
    replicas: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    let counts: Vec<Result<usize>> = map_replicas(seed, replicas, |_, rng| {
        let r = crate::continuous::ContinuousRestaurant::snapshot(theta, *spec, triple.t, false, rng)?;
        Ok(crate::continuous::gamma_measure(&r, triple)?.count_in_box(bx.a, bx.b, bx.c))
    });
    counts.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxXiRow {
    pub x: f64,
    pub predicted: f64,
    pub empirical: f64,
    pub se: f64,
    pub z: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

/// Largest normalized exponent of each of `replicas` snapshots (`−∞` when empty).
pub fn sample_max_xi(theta: f64, spec: &FitnessSpec, triple: &ScalingTriple, replicas: usize, seed: u64) -> Vec<f64> {
    map_replicas(seed, replicas, |_, rng| {
        let marks = sample_marks(theta, spec, triple.t, rng);
        top_xi(&marks, triple).first().copied().unwrap_or(f64::NEG_INFINITY)
    })
}

/// Empirical `P(ξ⁽¹⁾ ≤ x)` against `exp(−π(A_t(x)))` on a grid.
pub fn max_xi_compare(
    theta: f64,
    spec: &FitnessSpec,
    triple: &ScalingTriple,
    xs: &[f64],
    replicas: usize,
    seed: u64,
) -> Result<Vec<MaxXiRow>> {
    if replicas < MIN_REPLICAS {
        return Err(Error::TooFewReplicas { got: replicas, need: MIN_REPLICAS });
    }
    let maxima = sample_max_xi(theta, spec, triple, replicas, seed);
    let n = replicas as f64;
    xs.iter()
        .map(|&x| {
            let predicted = max_xi_cdf(theta, spec, triple, x)?;
            let k = maxima.iter().filter(|&&m| m <= x).count();
            let empirical = k as f64 / n;
            let se = (predicted * (1.0 - predicted) / n).sqrt();
            let z = if se > 0.0 { (empirical - predicted) / se } else { 0.0 };
            let (wilson_lo, wilson_hi) = wilson(k, replicas, 1.96);
            Ok(MaxXiRow { x, predicted, empirical, se, z, wilson_lo, wilson_hi })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapRow {
    pub lambda: f64,
    pub frequency: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    /// `frequency / λ²`.
    pub ratio: f64,
    pub used: usize,
}

/// Fraction of snapshots with `ξ⁽¹⁾ − ξ⁽³⁾ ≤ λ`, over replicas with at least
/// three tables.
pub fn gap_probability(
    theta: f64,
    spec: &FitnessSpec,
    triple: &ScalingTriple,
    lambdas: &[f64],
    replicas: usize,
    seed: u64,
) -> Result<Vec<GapRow>> {
    let gaps: Vec<Option<f64>> = map_replicas(seed, replicas, |_, rng| {
        let top = top_xi(&sample_marks(theta, spec, triple.t, rng), triple);
        (top.len() >= 3).then(|| top[0] - top[2])
    });
    let short = gaps.iter().filter(|g| g.is_none()).count();
    if short * 10 > replicas {
        return Err(Error::TooFewTables(format!("{short} of {replicas} replicas have fewer than 3 tables")));
    }
    let gaps: Vec<f64> = gaps.into_iter().flatten().collect();
    let used = gaps.len();
    Ok(lambdas
        .iter()
        .map(|&lambda| {
            let k = gaps.iter().filter(|&&g| g <= lambda).count();
            let frequency = k as f64 / used as f64;
            let (wilson_lo, wilson_hi) = wilson(k, used, 1.96);
            GapRow { lambda, frequency, wilson_lo, wilson_hi, ratio: frequency / (lambda * lambda), used }
        })
        .collect())
}

/// `π(A_t(x))` by the defining time integral `θ∫₀ᵗ μ((t·v_t + x·t·w_t)/(t − s), M) ds`.
/// Independent of the rescaled form used by [`pi_at`]; kept for cross-checks.
pub fn pi_at_direct(theta: f64, spec: &FitnessSpec, triple: &ScalingTriple, x: f64) -> f64 {
    let t = triple.t;
    let level = t * (triple.v + x * triple.w);
    let f = |s: f64| spec.tail(level / (t - s));
    let q = if spec.is_bounded() {
        let s_max = t - level / spec.essup();
        if s_max <= 0.0 {
            return 0.0;
        }
        integrate(f, 0.0, s_max, 1e-12, 1e-12)
    } else {
        // Substitute r = t - s on (0, t] and integrate over 1/r to reach the singular end.
        integrate_to_infinity(|q: f64| spec.tail(level * q) / (q * q), 1.0 / t, 1e-12, 1e-12)
    };
    theta * q.value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaling::solve_scaling;

    fn spec(k: &str) -> FitnessSpec {
        k.parse().unwrap()
    }

    #[test]
    fn frechet_closed_form() {
        let s = spec("frechet:alpha=1");
        let tr = solve_scaling(&s, 100.0).unwrap();
        let p = pi_at(1.0, &s, &tr, 2.0).unwrap();
        assert!((p - 0.25).abs() < 1e-8);
    }

    #[test]
    fn vanishes_beyond_support() {
        let s = spec("weibull:alpha=1");
        let tr = solve_scaling(&s, 100.0).unwrap();
        assert_eq!(pi_at(1.0, &s, &tr, 0.0).unwrap(), 0.0);
        assert_eq!(pi_at(1.0, &s, &tr, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn domain_error_left_of_zero_weight() {
        let s = spec("weibull:alpha=1");
        let tr = solve_scaling(&s, 100.0).unwrap();
        assert!(matches!(pi_at(1.0, &s, &tr, -tr.v / tr.w), Err(Error::Domain(_))));
        assert!(matches!(pi_at(1.0, &s, &tr, -11.0), Err(Error::Domain(_))));
    }

    #[test]
    fn void_examples() {
        let s = spec("frechet:alpha=1");
        let tr = solve_scaling(&s, 1000.0).unwrap();
        let v = void_probability(1.0, &s, &tr, &BoxSpec::new(0.5, 1.0, None).unwrap()).unwrap();
        assert!((v.limit - (-0.5f64).exp()).abs() < 1e-15);
        let v = void_probability(1.0, &s, &tr, &BoxSpec::new(0.0, 1.0, None).unwrap()).unwrap();
        assert_eq!((v.finite, v.limit), (1.0, 1.0));

        let g = spec("gumbel-unbounded:alpha=1");
        let tr = solve_scaling(&g, 1000.0).unwrap();
        let v = void_probability(2.0, &g, &tr, &BoxSpec::new(0.3, 0.0, None).unwrap()).unwrap();
        assert!((v.limit - (-0.6f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn three_dim_limit_reduces_to_two_dim_for_low_c() {
        let g = spec("gumbel-unbounded:alpha=1");
        let two = box_mean_limit(1.0, &g, &BoxSpec::new(0.5, 1.0, None).unwrap()).unwrap();
        let three = box_mean_limit(1.0, &g, &BoxSpec::new(0.5, 1.0, Some(-5.0)).unwrap()).unwrap();
        assert!((two - three).abs() < 1e-12);
        // z = y - s >= c with c = b: θ∫₀^a e^{-(b+s)} ds.
        let three = box_mean_limit(1.0, &g, &BoxSpec::new(0.5, 1.0, Some(1.0)).unwrap()).unwrap();
        let exact = (-1f64).exp() * (1.0 - (-0.5f64).exp());
        assert!((three - exact).abs() < 1e-11);
    }

    #[test]
    fn frechet_box_requires_positive_b() {
        let s = spec("frechet:alpha=1");
        assert!(box_mean_limit(1.0, &s, &BoxSpec::new(0.5, 0.0, None).unwrap()).is_err());
    }

    #[test]
    fn direct_and_rescaled_forms_agree() {
        for (key, x) in [
            ("weibull:alpha=2", -1.0),
            ("gumbel-unbounded:alpha=1", 0.5),
            ("frechet:alpha=2", 1.5),
            ("gumbel-m:b", 0.3),
        ] {
            let s = spec(key);
            let tr = solve_scaling(&s, 500.0).unwrap();
            let a = pi_at(1.3, &s, &tr, x).unwrap();
            let b = pi_at_direct(1.3, &s, &tr, x);
            assert!((a - b).abs() < 1e-7 * a.max(1.0), "{key}: {a} vs {b}");
        }
    }

    #[test]
    fn too_few_replicas() {
        let s = spec("frechet:alpha=1");
        let tr = solve_scaling(&s, 100.0).unwrap();
        assert!(matches!(max_xi_compare(1.0, &s, &tr, &[1.0], 10, 0), Err(Error::TooFewReplicas { .. })));
    }

    #[test]
    fn gap_extremes() {
        let s = spec("frechet:alpha=1");
        let tr = solve_scaling(&s, 200.0).unwrap();
        let rows = gap_probability(1.0, &s, &tr, &[0.0, 1e12], 500, 3).unwrap();
        assert_eq!(rows[0].frequency, 0.0);
        assert_eq!(rows[1].frequency, 1.0);
        let tiny = solve_scaling(&s, 1.0).unwrap();
        assert!(matches!(gap_probability(1.0, &s, &tiny, &[1.0], 200, 3), Err(Error::TooFewTables(_))));
    }

    proptest::proptest! {
        #[test]
        fn pi_non_increasing_and_difference_bound(x in 0.05f64..4.0, eps in 0.001f64..1.0) {
            for key in ["frechet:alpha=1.5", "gumbel-unbounded:alpha=2", "gumbel-m:a:alpha=2"] {
                let s = spec(key);
                let tr = solve_scaling(&s, 300.0).unwrap();
                let p0 = pi_at(1.0, &s, &tr, x).unwrap();
                let p1 = pi_at(1.0, &s, &tr, x + eps).unwrap();
                proptest::prop_assert!(p1 <= p0 + 1e-10);
                let bound = eps * tr.t * tr.w / tr.u * phi_t(&s, &tr, x) / (tr.v + x * tr.w);
                proptest::prop_assert!(p0 - p1 <= bound * (1.0 + 1e-8) + 1e-10, "{}: {} > {}", key, p0 - p1, bound);
            }
        }
    }
}
