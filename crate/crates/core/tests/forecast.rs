mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use resdeploy::forecast::{
    empirical_quantile, read_forecast_csv, read_scenarios_csv, reserve_requirements, write_forecast_csv,
    write_scenarios_csv, ForecastError, QuantileMethod, ScenarioSet, UncertaintySet,
};
use resdeploy::lp::{solve_lp, LinearProgram, LpStatus, Relation, Sense, SolverOptions};
use resdeploy::robust::{enumerate_vertices, DEFAULT_VERTEX_CAP};

/// Type-7 quantile written out from its textbook definition.
fn type7(samples: &[f64], u: f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (s.len() as f64 - 1.0) * u;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(s.len() - 1);
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

fn set_from(lower: Vec<f64>, upper: Vec<f64>, a: f64, b: f64) -> Option<UncertaintySet> {
    let lo: f64 = lower.iter().sum();
    let hi: f64 = upper.iter().sum();
    let (rm, rp) = (lo + a * (hi - lo), lo + b.max(a) * (hi - lo));
    UncertaintySet::new(lower, upper, rm, rp).ok()
}

fn arb_set() -> impl Strategy<Value = UncertaintySet> {
    (2usize..6)
        .prop_flat_map(|d| {
            (
                prop::collection::vec(-5.0f64..0.0, d),
                prop::collection::vec(0.0f64..5.0, d),
                0.0f64..0.6,
                0.4f64..1.0,
            )
        })
        .prop_filter_map("empty set", |(l, u, a, b)| set_from(l, u, a, b))
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[test]
fn quantiles_match_textbook_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in [2, 3, 10, 101, 1000] {
        let s: Vec<f64> = (0..k).map(|_| rng.random_range(-50.0..50.0)).collect();
        for u in [0.005, 0.025, 0.05, 0.5, 0.95, 0.975, 0.995] {
            let got = empirical_quantile(&s, u, QuantileMethod::Linear).unwrap();
            assert!((got - type7(&s, u)).abs() < 1e-12);
            // Nearest rank: at least ceil(uK) samples at or below, and it is a sample.
            let nr = empirical_quantile(&s, u, QuantileMethod::NearestRank).unwrap();
            let below = s.iter().filter(|&&v| v <= nr).count();
            assert!(below as f64 >= (u * k as f64).ceil());
            assert!(s.contains(&nr));
        }
    }
}

#[test]
fn requirements_bracket_the_aggregate() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let errors: Vec<Vec<f64>> = (0..400)
        .map(|_| (0..3).map(|_| rng.random_range(-10.0..10.0)).collect())
        .collect();
    let s = ScenarioSet::new(errors, vec![0.0; 3], None).unwrap();
    let agg = s.aggregates();
    let r = reserve_requirements(&s, 0.9, QuantileMethod::Linear).unwrap();
    assert!((r.rho_plus - type7(&agg, 0.95)).abs() < 1e-12);
    assert!((r.rho_minus - type7(&agg, 0.05)).abs() < 1e-12);
    assert!(matches!(
        reserve_requirements(&s, 1.0, QuantileMethod::Linear),
        Err(ForecastError::Level(_))
    ));
}

#[test]
fn scenario_set_rejects_bad_input() {
    assert!(matches!(
        ScenarioSet::new(vec![vec![0.0]], vec![0.0], None),
        Err(ForecastError::TooFewScenarios(1))
    ));
    assert!(matches!(
        ScenarioSet::new(vec![vec![0.0], vec![0.0, 1.0]], vec![0.0], None),
        Err(ForecastError::Dimension { scenario: 1, .. })
    ));
    assert!(ScenarioSet::new(vec![vec![f64::NAN], vec![0.0]], vec![0.0], None).is_err());
}

#[test]
fn coverage_is_order_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let set = UncertaintySet::new(vec![-2.0; 3], vec![2.0; 3], -3.0, 3.0).unwrap();
    let mut pts: Vec<Vec<f64>> = (0..500)
        .map(|_| (0..3).map(|_| rng.random_range(-2.5..2.5)).collect())
        .collect();
    let count = |p: &[Vec<f64>]| p.iter().filter(|x| set.contains(x, 1e-8)).count();
    let before = count(&pts);
    pts.shuffle(&mut rng);
    assert_eq!(count(&pts), before);
    assert!(before > 0 && before < 500);
}

#[test]
fn scenario_and_forecast_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ids = [10, 20, 30];
    let sc = vec![vec![1.5, 0.0, -2.25], vec![0.1, 0.2, 0.3]];
    let p = dir.path().join("scenarios.csv");
    write_scenarios_csv(&p, &ids, &sc).unwrap();
    assert_eq!(read_scenarios_csv(&p, &ids).unwrap(), sc);
    let f = dir.path().join("forecast.csv");
    write_forecast_csv(&f, &ids, &[1.0, 2.0, 3.0], Some(&[0.0, 5.0, 0.0])).unwrap();
    let (d, v) = read_forecast_csv(&f, &ids).unwrap();
    assert_eq!(d, vec![1.0, 2.0, 3.0]);
    assert_eq!(v, Some(vec![0.0, 5.0, 0.0]));
    write_forecast_csv(&f, &ids, &[1.0, 2.0, 3.0], None).unwrap();
    assert_eq!(read_forecast_csv(&f, &ids).unwrap().1, None);
}

#[test]
fn unknown_scenario_node_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.csv");
    std::fs::write(&p, "scenario_id,node_id,error_mw\n0,1,1.0\n0,7,2.0\n").unwrap();
    let e = read_scenarios_csv(&p, &[1, 2]).unwrap_err().to_string();
    assert!(e.contains('7'), "{e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn knapsack_matches_lp(set in arb_set(), seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = set.dim();
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let (xi, v) = set.maximize_linear(&w);
        prop_assert!(set.contains(&xi, 1e-9));
        prop_assert!((w.iter().zip(&xi).map(|(a, b)| a * b).sum::<f64>() - v).abs() < 1e-9);

        let mut lp = LinearProgram::new(Sense::Maximize);
        let vars: Vec<usize> = (0..d).map(|i| lp.add_var(w[i], set.lower()[i], set.upper()[i])).collect();
        let all: Vec<(usize, f64)> = vars.iter().map(|&j| (j, 1.0)).collect();
        lp.add_row(all.clone(), Relation::Le, set.rho_plus());
        lp.add_row(all, Relation::Ge, set.rho_minus());
        let sol = solve_lp(&lp, &SolverOptions::default()).unwrap();
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        prop_assert!((sol.objective - v).abs() <= 1e-9 * (1.0 + v.abs()), "lp {} knapsack {}", sol.objective, v);

        let verts = enumerate_vertices(&set, &(0..d).collect::<Vec<_>>(), DEFAULT_VERTEX_CAP).unwrap();
        let best = verts.iter().map(|x| w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()).fold(f64::MIN, f64::max);
        prop_assert!((best - v).abs() <= 1e-9 * (1.0 + v.abs()));
    }

    #[test]
    fn projection_is_nonexpansive_and_idempotent(set in arb_set(), seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = set.dim();
        let a: Vec<f64> = (0..d).map(|_| rng.random_range(-8.0..8.0)).collect();
        let b: Vec<f64> = (0..d).map(|_| rng.random_range(-8.0..8.0)).collect();
        let (pa, pb) = (set.project(&a), set.project(&b));
        prop_assert!(set.contains(&pa, 1e-9) && set.contains(&pb, 1e-9));
        prop_assert!(dist(&pa, &pb) <= dist(&a, &b) + 1e-9);
        prop_assert_eq!(set.project(&pa), pa.clone());
        // Variational inequality: (a - pa)'(y - pa) <= 0 for every vertex y.
        let verts = enumerate_vertices(&set, &(0..d).collect::<Vec<_>>(), DEFAULT_VERTEX_CAP).unwrap();
        for y in &verts {
            let ip: f64 = (0..d).map(|i| (a[i] - pa[i]) * (y[i] - pa[i])).sum();
            prop_assert!(ip <= 1e-8, "inner product {}", ip);
        }
    }

    #[test]
    fn interior_points_are_fixed(set in arb_set(), t in 0.0f64..1.0) {
        let verts = enumerate_vertices(&set, &(0..set.dim()).collect::<Vec<_>>(), DEFAULT_VERTEX_CAP).unwrap();
        let a = &verts[0];
        let b = &verts[verts.len() - 1];
        let x: Vec<f64> = a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect();
        prop_assert!(set.contains(&x, 1e-9));
        let px = set.project(&x);
        prop_assert!(dist(&px, &x) <= 1e-9);
    }
}
