use optest_core::random::suite_rng;
use optest_core::scenarios::{linear_estimate, run_scenario, LinearEstimateInputs, SCENARIO_NAMES};
use optest_core::Tolerances;
use rand::Rng;
use rand_distr::StandardNormal;
use serde_json::{json, Value};

/// Empirical mean-square error of `lambda m + (1 - lambda) mean` minimised
/// over a grid of `lambda`, for Gaussian signal and noise.
fn monte_carlo_linear(signal: f64, noise: f64, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = suite_rng(seed);
    let (mut ee, mut ed, mut dd) = (0.0, 0.0, 0.0);
    for _ in 0..samples {
        let d: f64 = signal.sqrt() * rng.sample::<f64, _>(StandardNormal);
        let e = d + noise.sqrt() * rng.sample::<f64, _>(StandardNormal);
        ee += e * e;
        ed += e * d;
        dd += d * d;
    }
    let n = samples as f64;
    let (ee, ed, dd) = (ee / n, ed / n, dd / n);
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..=10_000 {
        let lambda = i as f64 / 10_000.0;
        let err = lambda * lambda * ee - 2.0 * lambda * ed + dd;
        if err < best.0 {
            best = (err, lambda);
        }
    }
    best
}

#[test]
fn linear_estimate_matches_monte_carlo() {
    for (k, (signal, var_xprime)) in [(1.0, 0.5), (2.0, 0.1), (0.3, 2.5)].into_iter().enumerate() {
        let inputs = LinearEstimateInputs {
            mean_x: 1.0,
            var_x: signal,
            mean_p: 0.0,
            var_p: 1.0,
            var_xprime,
            var_pprime: 0.25 / var_xprime,
            hbar: 1.0,
        };
        let r = linear_estimate(&inputs).unwrap();
        let (err, lambda) = monte_carlo_linear(signal, var_xprime, 1_000_000, k as u64);
        let want = signal * var_xprime / (signal + var_xprime);
        assert!((r.x.inaccuracy.powi(2) - want).abs() < 1e-14);
        assert!((err / want - 1.0).abs() < 1e-2, "mse {err} vs {want}");
        assert!((lambda - r.x.lambda).abs() < 1e-2, "lambda {lambda} vs {}", r.x.lambda);
    }
}

#[test]
fn scenario_outputs_are_deterministic() {
    let tol = Tolerances::default();
    for name in ["spin", "squeezing", "thermal", "inefficient"] {
        let a = serde_json::to_string(&run_scenario(name, &Value::Null, 7, &tol).unwrap()).unwrap();
        let b = serde_json::to_string(&run_scenario(name, &Value::Null, 7, &tol).unwrap()).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn every_named_scenario_runs_and_passes() {
    let tol = Tolerances::default();
    for name in SCENARIO_NAMES {
        let params = if name == "heterodyne" {
            json!({"fock_dim": 25, "points_per_axis": 41, "state": {"kind": "number", "n": 1}})
        } else {
            Value::Null
        };
        let out = run_scenario(name, &params, 0, &tol).unwrap();
        assert!(!out.rows.is_empty(), "{name}");
        for row in &out.rows {
            assert!(row.passed, "{name}: {row:?}");
        }
    }
}

#[test]
fn epr_params_from_json() {
    let out = run_scenario("epr", &json!({"sigma": 0.2, "tau": 0.05, "hbar": 2.0}), 0, &Tolerances::default()).unwrap();
    assert_eq!(out.params["sigma"], 0.2);
    assert!((out.rows[0].lhs - 1.0).abs() < 1e-12);
    assert!(out.rows.iter().all(|r| r.passed), "{:?}", out.rows);
}

#[test]
fn squeezing_reports_both_regimes() {
    let out = run_scenario("squeezing", &json!({"var_x": 3.0, "var_p": 3.0}), 0, &Tolerances::default()).unwrap();
    let report = &out.results["report"];
    assert_eq!(report["regime"], "interior");
    assert_eq!(report["rule_regime"], "endpoint");
    assert_eq!(out.results["regimes_agree"], false);
}
