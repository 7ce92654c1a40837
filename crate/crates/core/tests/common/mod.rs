#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use resdeploy::evalsim::{sample_scenarios, EvaluationReport, GaussianSampler, HourInput, SyntheticProfile};
use resdeploy::forecast::{read_forecast_csv, UncertaintySet};
use resdeploy::grid::{read_grid_csv, Generator, GridData, GridModel, Line, Node};

pub fn data_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub struct FiveBus {
    pub grid: GridModel,
    pub d_hat: Vec<f64>,
    pub vre: Option<Vec<f64>>,
}

pub fn five_bus() -> FiveBus {
    let dir = data_dir("five_bus");
    let grid = read_grid_csv(&dir).expect("five_bus grid");
    let ids: Vec<u32> = grid.nodes().iter().map(|n| n.id).collect();
    let (d_hat, vre) = read_forecast_csv(&dir.join("forecast.csv"), &ids).expect("five_bus forecast");
    FiveBus { grid, d_hat, vre }
}

/// Wind errors at nodes 3 and 5, per unit on a 100 MVA base.
pub fn five_bus_covariance() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.141, 0.001, 0.001, 0.141])
}

pub fn five_bus_sampler(seed: u64) -> GaussianSampler {
    GaussianSampler::new(five_bus_covariance(), vec![2, 4], 5, 100.0, seed).expect("sampler")
}

/// 1000 training draws with `train_seed`, 1000 test draws with `test_seed`.
pub fn five_bus_hour(train_seed: u64, test_seed: u64, k: usize) -> (FiveBus, HourInput) {
    let fb = five_bus();
    let s = five_bus_sampler(train_seed);
    let train = sample_scenarios(&s, k, fb.d_hat.clone(), fb.vre.clone()).expect("train");
    let test = s.with_seed(test_seed).draw(k);
    (fb, HourInput { hour: 0, train, test })
}

pub fn rts73() -> (GridModel, SyntheticProfile) {
    let dir = data_dir("rts73");
    let grid = read_grid_csv(&dir).expect("rts73 grid");
    let text = std::fs::read_to_string(dir.join("profile.json")).expect("profile.json");
    (grid, serde_json::from_str(&text).expect("profile"))
}

/// Connected random network: a random spanning tree plus `extra` chords.
/// Every node may host a generator; total capacity exceeds `load`.
pub fn random_grid(rng: &mut ChaCha8Rng, n: usize, gens: usize, extra: usize, limit: (f64, f64)) -> GridModel {
    let nodes = (0..n)
        .map(|i| Node {
            id: i as u32 + 1,
            zone: if i % 2 == 0 { "a".into() } else { "b".into() },
        })
        .collect();
    let mut lines = Vec::new();
    let add = |rng: &mut ChaCha8Rng, a: usize, b: usize, lines: &mut Vec<Line>| {
        let k = lines.len();
        lines.push(Line {
            id: format!("L{k}"),
            from: a as u32 + 1,
            to: b as u32 + 1,
            reactance: rng.random_range(0.01..0.1),
            flow_limit: rng.random_range(limit.0..limit.1),
        });
    };
    for i in 1..n {
        let j = rng.random_range(0..i);
        add(rng, j, i, &mut lines);
    }
    for _ in 0..extra {
        let a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n);
        if a == b {
            b = (a + 1) % n;
        }
        add(rng, a, b, &mut lines);
    }
    let generators = (0..gens)
        .map(|g| Generator {
            id: format!("G{g}"),
            node: rng.random_range(0..n) as u32 + 1,
            p_min: 0.0,
            p_max: rng.random_range(80.0..200.0),
            energy_cost: rng.random_range(5.0..40.0),
            up_reserve_cost: rng.random_range(1.0..15.0),
            down_reserve_cost: rng.random_range(1.0..15.0),
        })
        .collect();
    GridModel::new(GridData {
        nodes,
        lines,
        generators,
        slack: None,
    })
    .expect("random grid")
}

/// Nonnegative net demand summing to `total`.
pub fn random_demand(rng: &mut ChaCha8Rng, n: usize, total: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|v| total * v / s).collect()
}

/// Box on `dims` (zero elsewhere) with a slab cutting some corners.
pub fn random_set(rng: &mut ChaCha8Rng, n: usize, dims: &[usize], half_width: f64) -> UncertaintySet {
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for &i in dims {
        lower[i] = -rng.random_range(0.3..1.0) * half_width;
        upper[i] = rng.random_range(0.3..1.0) * half_width;
    }
    let lo: f64 = lower.iter().sum();
    let hi: f64 = upper.iter().sum();
    let rho_minus = lo * rng.random_range(0.4..1.0);
    let rho_plus = hi * rng.random_range(0.4..1.0);
    UncertaintySet::new(lower, upper, rho_minus, rho_plus).expect("set")
}

/// Per-method `(n, violations, rt cost, da cost sum, ok hours)` inside the
/// set, recomputed from `per_hour.csv` alone.
pub fn recompute_from_csv(path: &Path) -> BTreeMap<String, (usize, usize, f64, f64, usize)> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (m, st, da) = (col("method"), col("status"), col("da_cost"));
    let (n, v, c) = (col("n_inside"), col("violations_inside"), col("rt_cost_sum_inside"));
    let mut out: BTreeMap<String, (usize, usize, f64, f64, usize)> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        if &rec[st] != "ok" {
            continue;
        }
        let e = out.entry(rec[m].to_string()).or_default();
        e.0 += rec[n].parse::<usize>().unwrap();
        e.1 += rec[v].parse::<usize>().unwrap();
        e.2 += rec[c].parse::<f64>().unwrap();
        e.3 += rec[da].parse::<f64>().unwrap();
        e.4 += 1;
    }
    out
}

/// Compares the report summary with [`recompute_from_csv`] on `dir`.
pub fn check_against_csv(report: &EvaluationReport, dir: &Path) -> Result<(), String> {
    let sums = recompute_from_csv(&dir.join("per_hour.csv"));
    for s in &report.summary {
        let name = s.method.name();
        let (n, v, c, da, ok) = *sums.get(name).ok_or(format!("{name} missing from per_hour.csv"))?;
        let p = if n == 0 { 0.0 } else { 100.0 * v as f64 / n as f64 };
        let avg = if n == 0 { 0.0 } else { c / n as f64 };
        let da_mean = if ok == 0 { 0.0 } else { da / ok as f64 };
        if ok != s.hours_ok || n != s.inside.n || v != s.inside.violations {
            return Err(format!("{name}: counts differ from per_hour.csv"));
        }
        if (p - s.inside.violation_probability_pct).abs() > 1e-9
            || (avg - s.inside.avg_rt_cost).abs() > 1e-9 * avg.max(1.0)
            || (da_mean - s.da_cost_mean).abs() > 1e-9 * da_mean.max(1.0)
        {
            return Err(format!("{name}: means differ from per_hour.csv"));
        }
    }
    Ok(())
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
