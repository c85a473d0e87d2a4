//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use crp_core::discrete::RestaurantState;
use crp_core::experiments::{
    exp_basic_properties, exp_one_table, exp_two_table, yule_tail_rows, ExperimentConfig, YULE_TAIL_GRID,
};
use crp_core::fitness::FitnessSpec;
use crp_core::pointprocess::{compare_box_counts, max_xi_compare, pi_at, simulate_box_counts, BoxSpec};
use crp_core::rng::{map_replicas, replica_rng};
use crp_core::scaling::{check_assumption_g, solve_scaling};
use crp_core::stats::{ks_two_sample, mean_se};
use crp_core::yule::{yule_extend, yule_sample, YuleState};

type Criterion = (&'static str, fn() -> Outcome, Duration);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn spec(key: &str) -> FitnessSpec {
    key.parse().expect("valid key")
}

fn scaling_exactness() -> Outcome {
    let mut worst: f64 = 0.0;
    for alpha in [1.0, 2.0, 3.0] {
        let s = FitnessSpec::weibull(alpha).unwrap();
        for t in [1e2, 1e3, 1e4, 1e6] {
            let tr = solve_scaling(&s, t).unwrap();
            let u: f64 = t.powf(alpha / (alpha + 1.0));
            let w: f64 = t.powf(-1.0 / (alpha + 1.0));
            worst = worst.max((tr.u - u).abs() / u).max((tr.w - w).abs() / w);
        }
    }
    outcome(worst <= 1e-9, format!("max relative error {worst:.2e} (tol 1e-9)"))
}

fn frechet_pi_oracle() -> Outcome {
    let mut worst_f: f64 = 0.0;
    for alpha in [0.5, 1.0, 2.0] {
        let s = FitnessSpec::frechet(alpha).unwrap();
        let tr = solve_scaling(&s, 100.0).unwrap();
        for x in [0.5f64, 1.0, 2.0, 5.0] {
            let exact = x.powf(-alpha) / (alpha + 1.0);
            worst_f = worst_f.max((pi_at(1.0, &s, &tr, x).unwrap() - exact).abs());
        }
    }
    // Uniform weights: the set {(s, w): w(t - s) > c} has area (t - c) - c·ln(t/c).
    let s = spec("weibull:alpha=1");
    let t = 100.0;
    let tr = solve_scaling(&s, t).unwrap();
    let mut worst_w: f64 = 0.0;
    for x in [-9.0, -5.0, -2.0, -0.5, -0.1] {
        let c = t * (tr.v + x * tr.w);
        let area = (t - c) - c * (t / c).ln();
        worst_w = worst_w.max((pi_at(1.0, &s, &tr, x).unwrap() - area).abs());
    }
    outcome(
        worst_f <= 1e-8 && worst_w <= 1e-6,
        format!(
            "Fréchet closed form max err {worst_f:.2e} (tol 1e-8); Weibull set area max err {worst_w:.2e} (tol 1e-6)"
        ),
    )
}

fn poisson_void_identity() -> Outcome {
    let cases = [("frechet:alpha=1", [0.25, 0.5, 1.0, 2.0, 4.0]), ("weibull:alpha=2", [-2.0, -1.5, -1.0, -0.7, -0.4])];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (i, (key, xs)) in cases.iter().enumerate() {
        let s = spec(key);
        let tr = solve_scaling(&s, 200.0).unwrap();
        let rows = max_xi_compare(1.0, &s, &tr, xs, 10_000, 100 + i as u64).unwrap();
        for r in &rows {
            worst = worst.max(r.z.abs());
        }
        parts.push(format!(
            "{key}: z = [{}]",
            rows.iter().map(|r| format!("{:+.2}", r.z)).collect::<Vec<_>>().join(", ")
        ));
    }
    outcome(worst <= 3.0, format!("max |z| {worst:.2} (tol 3); {}", parts.join("; ")))
}

fn classical_reduction() -> Outcome {
    let n = 1000u64;
    let replicas = 1000;
    let theta = 1.0;
    let mean_oracle: f64 = 1.0 + (1..n).map(|m| theta / (theta + m as f64)).sum::<f64>();
    let var_oracle: f64 = (1..n).map(|m| theta * m as f64 / (theta + m as f64).powi(2)).sum();
    let det = FitnessSpec::deterministic(1.0).unwrap();
    let ks: Vec<f64> = map_replicas(7, replicas, |_, rng| {
        let mut st = RestaurantState::new(theta, det, rng).unwrap();
        while st.n < n {
            st.step(rng);
        }
        st.tables() as f64
    });
    let (mean, se) = mean_se(&ks);
    let nf = replicas as f64;
    let var = ks.iter().map(|k| (k - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let m4 = ks.iter().map(|k| (k - mean).powi(4)).sum::<f64>() / nf;
    let var_se = ((m4 - var * var * (nf - 3.0) / (nf - 1.0)) / nf).sqrt();
    let z_mean = (mean - mean_oracle) / se;
    let z_var = (var - var_oracle) / var_se;
    outcome(
        z_mean.abs() <= 3.0 && z_var.abs() <= 3.0,
        format!(
            "E K = {mean:.4} vs {mean_oracle:.4} (z {z_mean:+.2}); Var K = {var:.4} vs {var_oracle:.4} (z {z_var:+.2})"
        ),
    )
}

fn ppp_box_count() -> Outcome {
    let s = spec("frechet:alpha=1");
    let tr = solve_scaling(&s, 1000.0).unwrap();
    let bx = BoxSpec::new(0.5, 1.0, None).unwrap();
    let counts = simulate_box_counts(1.0, &s, &tr, &bx, 10_000, 21).unwrap();
    let r = compare_box_counts(&counts, 1.0, &s, &tr, &bx).unwrap();
    let se_void = r.void_se;
    outcome(
        r.z.abs() <= 3.0 && r.z_void.abs() <= 3.0 && (r.predicted_mean - 0.5).abs() < 1e-12,
        format!(
            "mean {:.4} vs {:.4} (z {:+.2}, finite-t {:.4}); void {:.4} vs {:.4} (z {:+.2}, se {se_void:.4}, finite-t {:.4})",
            r.empirical_mean,
            r.predicted_mean,
            r.z,
            r.predicted_mean_finite,
            r.empirical_void,
            r.predicted_void,
            r.z_void,
            r.predicted_void_finite
        ),
    )
}

fn yule_checks() -> Outcome {
    let draws = 100_000;
    let s = 3.0f64;
    let counts: Vec<f64> = {
        let mut rng = replica_rng(31, 0);
        (0..draws).map(|_| yule_sample(s, &mut rng).size()).collect()
    };
    let (mean, _) = mean_se(&counts);
    let se = ((2.0 * s).exp() - s.exp()).sqrt() / (draws as f64).sqrt();
    let z_mean = (mean - s.exp()) / se;

    let rows = yule_tail_rows(&YULE_TAIL_GRID, 4000, 32).unwrap();
    let tail_ok = rows.iter().all(|r| r.within_bound());

    let mut rng = replica_rng(33, 0);
    let direct: Vec<f64> = (0..draws).map(|_| yule_sample(2.0, &mut rng).size()).collect();
    let extended: Vec<f64> = (0..draws).map(|_| yule_extend(YuleState::new(), 2.0, &mut rng).size()).collect();
    let ks = ks_two_sample(&direct, &extended);

    outcome(
        z_mean.abs() <= 3.0 && tail_ok && ks.p_value > 0.01,
        format!(
            "mean Y(3) {mean:.3} vs {:.3} (z {z_mean:+.2}); tail grid [{}]; KS p {:.3}",
            s.exp(),
            rows.iter().map(|r| format!("{:.4}<={:.4}", r.empirical, r.bound)).collect::<Vec<_>>().join(", "),
            ks.p_value
        ),
    )
}

fn one_table_share() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, key) in ["frechet:alpha=1", "gumbel-unbounded:alpha=2"].iter().enumerate() {
        let mut cfg = ExperimentConfig::new(spec(key), 40 + i as u64);
        cfg.replicas = 1000;
        cfg.t_grid = Some(vec![50.0, 100.0, 200.0, 500.0]);
        let out = exp_one_table(&cfg).unwrap();
        ok &= out.all_passed();
        parts.push(format!(
            "{key}: median ln(1 - share) [{}]",
            out.rows.iter().map(|r| format!("{:.2}", r.median_log_deficit)).collect::<Vec<_>>().join(", ")
        ));
    }
    outcome(ok, format!("strictly increasing and >= 0.9 at t=500; {}", parts.join("; ")))
}

fn two_table_share() -> Outcome {
    let mut cfg = ExperimentConfig::new(spec("weibull:alpha=2"), 50);
    cfg.replicas = 100;
    cfg.t_max = Some(1000.0);
    let out = exp_two_table(&cfg).unwrap();
    let detail = out
        .checks
        .iter()
        .map(|c| format!("{} {:.3} (need {})", c.name, c.value, c.threshold))
        .collect::<Vec<_>>()
        .join("; ");
    outcome(out.all_passed(), detail)
}

fn tables_over_log_n() -> Outcome {
    let mut cfg = ExperimentConfig::new(spec("weibull:alpha=2"), 60);
    cfg.replicas = 100;
    cfg.n_grid = Some(vec![1_000, 1_000_000]);
    let out = exp_basic_properties(&cfg).unwrap();
    let check = out.checks.iter().find(|c| c.name == "k-over-log-n").expect("bounded spec");
    let last = out.rows.last().unwrap();
    // Per-replica band from the discrete-mode example: [0.7, 1.3] in at least 95% of replicas.
    let n = 1_000_000u64;
    let ratios: Vec<f64> = map_replicas(61, 100, |_, rng| {
        let mut st = RestaurantState::new(1.0, spec("weibull:alpha=2"), rng).unwrap();
        while st.n < n {
            st.step(rng);
        }
        st.tables() as f64 / (n as f64).ln()
    });
    let in_band = ratios.iter().filter(|&&r| (0.7..=1.3).contains(&r)).count() as f64 / ratios.len() as f64;
    outcome(
        check.passed && in_band >= 0.95,
        format!(
            "median K_n/log n at n=1e6: {:.3} (5%-95%: {:.3}-{:.3}), band [0.8, 1.2]; fraction in [0.7, 1.3]: {in_band:.2} (need 0.95)",
            last.k_over_log_median, last.k_over_log_q05, last.k_over_log_q95
        ),
    )
}

fn assumption_g_audit() -> Outcome {
    let s = FitnessSpec::gumbel_bounded(2.0).unwrap();
    let mut worst_upper = f64::INFINITY;
    let mut violations = 0;
    for t in [1e3, 1e6, 1e9] {
        let tr = solve_scaling(&s, t).unwrap();
        let x_hi = 2.0 * (1.0 + tr.u.ln());
        let grid: Vec<f64> = (1..400).map(|i| x_hi * i as f64 / 400.0).collect();
        // c1 = 0 turns the upper envelope into e^{-x}; c2 large lifts the band.
        let r = check_assumption_g(&s, t, 0.0, 1e6, &grid).unwrap();
        violations += r.upper_violations;
        worst_upper = worst_upper.min(r.worst_upper_margin);
    }
    let ll = spec("gumbel-m:loglog");
    let grid: Vec<f64> = (-40..=40).map(|i| i as f64 * 0.25).collect();
    let r = check_assumption_g(&ll, 1e6, 1.0, 1.0, &grid).unwrap();
    outcome(
        violations == 0 && r.lower_violations > 0,
        format!(
            "bounded power upper-bound violations {violations} (min log margin {worst_upper:.2e}); loglog lower-bound violations {}",
            r.lower_violations
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("scaling-exactness", scaling_exactness, Duration::from_secs(1)),
        ("frechet-pi-oracle", frechet_pi_oracle, Duration::from_secs(10)),
        ("poisson-void-identity", poisson_void_identity, Duration::from_secs(60)),
        ("classical-reduction", classical_reduction, Duration::from_secs(30)),
        ("ppp-box-count", ppp_box_count, Duration::from_secs(60)),
        ("yule", yule_checks, Duration::from_secs(60)),
        ("one-table", one_table_share, Duration::from_secs(300)),
        ("two-table", two_table_share, Duration::from_secs(600)),
        ("k-over-log-n", tables_over_log_n, Duration::from_secs(300)),
        ("assumption-g-audit", assumption_g_audit, Duration::from_secs(10)),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run, budget) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let passed = o.passed && in_time;
        failed += usize::from(!passed);
        println!(
            "{} {name}: {} [{:.1}s of {}s]{}",
            if passed { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { " over time budget" }
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
