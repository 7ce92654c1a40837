mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use resdeploy::forecast::{reserve_requirements, QuantileMethod, ReserveRequirement, ScenarioSet, UncertaintySet};
use resdeploy::robust::{
    adversary, ccg, enumerate_vertices, extreme_scenarios, flag_congested_lines, solve_vertex_master, AdmConfig,
    AdversaryMode, CcgConfig, DeploymentScenarioSet, InitConfig, RobustError, ScenarioTag, Termination,
    DEFAULT_VERTEX_CAP,
};
use resdeploy::scheduling::{build_compact_forms, solve_da, solve_rt, ScheduleOptions};

use common::*;

/// Basic feasible solutions: every choice of `d` linearly independent
/// active constraints among the `2d` box faces and the two slab faces.
fn bfs_vertices(set: &UncertaintySet) -> Vec<Vec<f64>> {
    let d = set.dim();
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..d {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        rows.push((e.clone(), set.lower()[i]));
        rows.push((e, set.upper()[i]));
    }
    rows.push((vec![1.0; d], set.rho_minus()));
    rows.push((vec![1.0; d], set.rho_plus()));
    let m = rows.len();
    let mut out: Vec<Vec<f64>> = Vec::new();
    for mask in 0u32..(1 << m) {
        if mask.count_ones() as usize != d {
            continue;
        }
        let pick: Vec<usize> = (0..m).filter(|&r| mask >> r & 1 == 1).collect();
        let a = DMatrix::from_fn(d, d, |r, c| rows[pick[r]].0[c]);
        let b = DVector::from_iterator(d, pick.iter().map(|&r| rows[r].1));
        if a.determinant().abs() < 1e-12 {
            continue;
        }
        let x: Vec<f64> = a.lu().solve(&b).unwrap().iter().copied().collect();
        if set.contains(&x, 1e-9) && !out.iter().any(|v| max_diff(v, &x) < 1e-9) {
            out.push(x);
        }
    }
    out
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn arb_full_set() -> impl Strategy<Value = UncertaintySet> {
    (1usize..5)
        .prop_flat_map(|d| {
            (
                prop::collection::vec(-5.0f64..0.0, d),
                prop::collection::vec(0.1f64..5.0, d),
                0.0f64..0.7,
                0.3f64..1.0,
            )
        })
        .prop_filter_map("empty", |(l, u, a, b)| {
            let lo: f64 = l.iter().sum();
            let hi: f64 = u.iter().sum();
            UncertaintySet::new(l, u, lo + a * (hi - lo), lo + b.max(a) * (hi - lo)).ok()
        })
}

fn requirement(set: &UncertaintySet) -> ReserveRequirement {
    ReserveRequirement {
        rho_plus: set.rho_plus(),
        rho_minus: set.rho_minus(),
        alpha: 0.95,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn vertices_match_basic_feasible_solutions(set in arb_full_set()) {
        let d = set.dim();
        let got = enumerate_vertices(&set, &(0..d).collect::<Vec<_>>(), DEFAULT_VERTEX_CAP).unwrap();
        let want = bfs_vertices(&set);
        prop_assert_eq!(got.len(), want.len(), "got {:?} want {:?}", got, want);
        for v in &want {
            prop_assert!(got.iter().any(|g| max_diff(g, v) < 1e-9));
        }
    }
}

#[test]
fn vertex_cap_and_bad_dimension() {
    let set = UncertaintySet::new(vec![-1.0; 4], vec![1.0; 4], -2.0, 2.0).unwrap();
    assert!(matches!(
        enumerate_vertices(&set, &[0, 1, 2, 3], 3),
        Err(RobustError::TooManyDimensions { got: 4, cap: 3 })
    ));
    assert!(enumerate_vertices(&set, &[7], 3).is_err());
}

#[test]
fn symmetric_extremes_mirror_each_other() {
    let errors = vec![vec![3.0, 3.0], vec![-3.0, -3.0], vec![1.0, 1.0], vec![-1.0, -1.0]];
    let s = ScenarioSet::new(errors, vec![0.0, 0.0], None).unwrap();
    let req = reserve_requirements(&s, 0.9, QuantileMethod::Linear).unwrap();
    let set = UncertaintySet::from_scenarios(&s, &req).unwrap();
    let ext = extreme_scenarios(&s, &req, &set, QuantileMethod::Linear).unwrap();
    assert_eq!(ext.len(), 2);
    let (up, dn) = (&ext.entries()[0], &ext.entries()[1]);
    assert_eq!(up.tag, ScenarioTag::ExtremeUp);
    assert_eq!(dn.tag, ScenarioTag::ExtremeDown);
    for i in 0..2 {
        assert!((up.xi[i] + dn.xi[i]).abs() < 1e-12);
    }
    assert!((up.aggregate - req.rho_plus).abs() < 1e-12);
}

#[test]
fn deployment_set_rejects_outsiders_and_duplicates() {
    let set = UncertaintySet::new(vec![-1.0; 2], vec![1.0; 2], -1.0, 1.0).unwrap();
    let mut d = DeploymentScenarioSet::new();
    assert!(d.push(vec![0.5, 0.5], ScenarioTag::Ccg(1), &set).unwrap());
    assert!(!d.push(vec![0.5, 0.5 + 1e-9], ScenarioTag::Ccg(2), &set).unwrap());
    assert!(matches!(
        d.push(vec![1.0, 1.0], ScenarioTag::Ccg(3), &set),
        Err(RobustError::OutsideSet)
    ));
    assert_eq!(d.len(), 1);
}

#[test]
fn adversary_never_exceeds_the_exact_worst_case() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let opts = ScheduleOptions::default();
    let mut checked = 0;
    while checked < 15 {
        let n = rng.random_range(4..=6);
        let grid = random_grid(&mut rng, n, 3, 2, (40.0, 120.0));
        let d_hat = random_demand(&mut rng, n, 150.0);
        let dims: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.6)).take(3).collect();
        if dims.is_empty() {
            continue;
        }
        let set = random_set(&mut rng, n, &dims, 70.0);
        let Ok(da) = solve_da(&grid, &d_hat, &requirement(&set), &opts) else { continue };
        let compact = build_compact_forms(&grid, &d_hat, opts.c_viol);
        let x = da.first_stage(n);
        let init = InitConfig {
            fixed: vec![set.lower().to_vec(), set.upper().to_vec()],
            lines: (0..grid.num_lines()).collect(),
        };
        let r = adversary(&compact, &x, &set, &da, &grid, &init, &AdmConfig::default()).unwrap();
        let exact = enumerate_vertices(&set, &set.uncertain_nodes(), DEFAULT_VERTEX_CAP)
            .unwrap()
            .iter()
            .map(|v| solve_rt(&grid, &da, v, opts.c_viol, &opts.lp).unwrap().violation_cost)
            .fold(0.0f64, f64::max);
        let lb = r.best_result.lb;
        assert!(lb <= exact + 1e-6 * exact.max(1.0), "lb {lb} above exact {exact}");
        let at = solve_rt(&grid, &da, &r.xi, opts.c_viol, &opts.lp).unwrap().violation_cost;
        assert!((at - lb).abs() <= 1e-6 * lb.max(1.0), "certified value {lb} vs {at}");
        assert_eq!(r.starts.len(), 2 + grid.num_lines());
        checked += 1;
    }
}

#[test]
fn five_bus_ccg_adds_one_scenario_and_is_robust() {
    let (fb, input) = five_bus_hour(1, 1001, 1000);
    let req = reserve_requirements(&input.train, 0.95, QuantileMethod::Linear).unwrap();
    let set = UncertaintySet::from_scenarios(&input.train, &req).unwrap();
    let opts = ScheduleOptions::default();
    let dsw = solve_da(&fb.grid, &fb.d_hat, &req, &opts).unwrap();
    let ext = extreme_scenarios(&input.train, &req, &set, QuantileMethod::Linear).unwrap();
    let lines = flag_congested_lines(&fb.grid, &dsw, &input.train.errors()[..100], 15, &opts).unwrap();
    assert!(lines.len() <= 15 && lines.iter().all(|&l| l < fb.grid.num_lines()));
    let cfg = CcgConfig {
        init: InitConfig {
            fixed: ext.vectors(),
            lines,
        },
        ..CcgConfig::default()
    };
    let (da, dep, rep) = ccg(&fb.grid, &fb.d_hat, &req, &set, &cfg).unwrap();
    assert_eq!(dep.len(), 1);
    assert_eq!(rep.scenarios_added, 1);
    assert!(matches!(rep.termination, Termination::GapClosed | Termination::AdversaryZero));
    for w in rep.iterations.windows(2) {
        assert!(w[1].lb >= w[0].lb - 1e-9, "master bound decreased");
    }
    // The scenario sits on the downward slab face.
    assert!((dep.entries()[0].aggregate - set.rho_minus()).abs() < 1e-6);
    // No vertex of the set needs slack under the final schedule.
    for v in enumerate_vertices(&set, &set.uncertain_nodes(), DEFAULT_VERTEX_CAP).unwrap() {
        let rt = solve_rt(&fb.grid, &da, &v, opts.c_viol, &opts.lp).unwrap();
        assert!(rt.total_slack <= 1e-6, "vertex {v:?} needs {} MW of slack", rt.total_slack);
    }
    let (venum, _) = solve_vertex_master(&fb.grid, &fb.d_hat, &req, &set, &opts, None).unwrap();
    assert!(rel_diff(da.objective, venum.objective) < 1e-6);
    assert!(da.da_cost >= dsw.da_cost);
}

#[test]
fn exact_ccg_matches_vertex_master_with_three_dims() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut done = 0;
    while done < 6 {
        let grid = random_grid(&mut rng, 6, 4, 3, (40.0, 120.0));
        let d_hat = random_demand(&mut rng, 6, 180.0);
        let set = random_set(&mut rng, 6, &[0, 2, 5], 60.0);
        let req = requirement(&set);
        let cfg = CcgConfig {
            m_max: 64,
            mode: AdversaryMode::Exact { cap: DEFAULT_VERTEX_CAP },
            ..CcgConfig::default()
        };
        let Ok((da, dep, rep)) = ccg(&grid, &d_hat, &req, &set, &cfg) else { continue };
        let (v, verts) = solve_vertex_master(&grid, &d_hat, &req, &set, &cfg.schedule, None).unwrap();
        assert!(rel_diff(da.objective, v.objective) < 1e-6);
        assert!(dep.len() <= verts.len());
        assert!(rep.final_gap <= 1e-6 * da.objective.abs().max(1.0) || rep.termination != Termination::GapClosed);
        done += 1;
    }
}

#[test]
fn master_iteration_cap_is_respected() {
    let (fb, input) = five_bus_hour(3, 1003, 500);
    let req = reserve_requirements(&input.train, 0.95, QuantileMethod::Linear).unwrap();
    let set = UncertaintySet::from_scenarios(&input.train, &req).unwrap();
    let cfg = CcgConfig {
        m_max: 0,
        ..CcgConfig::default()
    };
    let (_, dep, rep) = ccg(&fb.grid, &fb.d_hat, &req, &set, &cfg).unwrap();
    assert!(dep.is_empty());
    assert!(matches!(rep.termination, Termination::MaxScenarios | Termination::AdversaryZero));
}
