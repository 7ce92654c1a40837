use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use resdeploy::evalsim::{sample_scenarios, GaussianSampler, SamplerSpec};
use resdeploy::forecast::{read_scenarios_csv, reserve_requirements, write_scenarios_csv, QuantileMethod};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_resdeploy"))
}

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn five_bus_dir() -> PathBuf {
    repo().join("crates/core/data/five_bus")
}

fn five_bus_config() -> PathBuf {
    repo().join("configs/five_bus.toml")
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_grid(dir: &Path, nodes: &str, lines: &str, gens: &str) {
    std::fs::create_dir_all(dir).unwrap();
    std::fs::write(dir.join("nodes.csv"), format!("node_id,zone,slack\n{nodes}")).unwrap();
    std::fs::write(
        dir.join("lines.csv"),
        format!("line_id,from_node,to_node,reactance_pu,flow_limit_mw\n{lines}"),
    )
    .unwrap();
    std::fs::write(
        dir.join("generators.csv"),
        format!(
            "gen_id,node_id,p_min_mw,p_max_mw,energy_cost_per_mwh,up_reserve_cost_per_mw,down_reserve_cost_per_mw\n{gens}"
        ),
    )
    .unwrap();
}

#[test]
fn validate_five_bus_is_clean() {
    let o = run(bin().args(["validate", "-c"]).arg(five_bus_config()));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("5 nodes, 6 lines, 4 generators"), "{out}");
    assert!(out.contains("condition number"));
    assert!(out.trim_end().ends_with("ok"));
}

#[test]
fn validate_names_file_row_and_unknown_node() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("grid");
    write_grid(&g, "1,a,1\n2,a,0\n3,a,0\n", "1-2,1,2,0.1,100\n2-3,2,3,0.1,100\n3-7,3,7,0.1,100\n", "G1,1,0,100,10,1,1\n");
    let o = run(bin().arg("validate").arg("--grid").arg(&g));
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.contains("lines.csv") && err.contains("row 3") && err.contains("unknown node id 7"), "{err}");
}

/// Components by union-find, formatted as `{a, b} {c, d}`.
fn union_find_components(n: u32, edges: &[(u32, u32)]) -> String {
    fn find(p: &mut Vec<u32>, x: u32) -> u32 {
        let mut r = x;
        while p[r as usize] != r {
            r = p[r as usize];
        }
        p[x as usize] = r;
        r
    }
    let mut parent: Vec<u32> = (0..=n).collect();
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra.max(rb) as usize] = ra.min(rb);
    }
    let mut groups: Vec<(u32, Vec<u32>)> = Vec::new();
    for v in 1..=n {
        let r = find(&mut parent, v);
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some((_, g)) => g.push(v),
            None => groups.push((r, vec![v])),
        }
    }
    groups
        .iter()
        .map(|(_, g)| format!("{{{}}}", g.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")))
        .collect::<Vec<_>>()
        .join(" ")
}

#[test]
fn validate_lists_both_components_of_a_split_grid() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("grid");
    write_grid(
        &g,
        "1,a,1\n2,a,0\n3,b,0\n4,b,0\n5,b,0\n",
        "a,1,2,0.1,100\nb,3,4,0.1,100\nc,5,4,0.1,100\n",
        "G1,1,0,100,10,1,1\nG3,3,0,100,10,1,1\n",
    );
    let o = run(bin().arg("validate").arg("--grid").arg(&g));
    assert_eq!(code(&o), 2);
    let expected = union_find_components(5, &[(1, 2), (3, 4), (5, 4)]);
    assert_eq!(expected, "{1, 2} {3, 4, 5}");
    let err = stderr(&o);
    assert!(err.contains("disconnected") && err.contains(&expected), "{err}");
}

#[test]
fn validate_flags_demand_beyond_capacity() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("grid");
    write_grid(&g, "1,a,1\n2,a,0\n", "a,1,2,0.1,100\n", "G1,1,0,100,10,1,1\n");
    let f = dir.path().join("forecast.csv");
    std::fs::write(&f, "node_id,net_demand_mw\n1,0\n2,150\n").unwrap();
    let o = run(bin().arg("validate").arg("--grid").arg(&g).arg("--forecast").arg(&f));
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("outside the generation range"), "{}", stderr(&o));
}

#[test]
fn dsw_only_run_reports_one_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(bin()
        .args(["run", "-c"])
        .arg(five_bus_config())
        .args(["--methods", "dsw", "--alpha", "0.95", "--train", "200", "--test", "300", "-o"])
        .arg(dir.path()));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("alpha_0.950/report.json")).unwrap();
    let r: serde_json::Value = serde_json::from_str(&text).unwrap();
    let hours = r["hours"].as_array().unwrap();
    assert_eq!(hours.len(), 1);
    let methods = hours[0]["methods"].as_array().unwrap();
    assert_eq!(methods.len(), 1);
    assert_eq!(methods[0]["method"], "dsw");
    assert_eq!(methods[0]["scenarios"], 0);
    assert_eq!(hours[0]["n_test"], 300);
    let n = methods[0]["inside"]["n"].as_u64().unwrap() + methods[0]["outside"]["n"].as_u64().unwrap();
    assert_eq!(n, 300);
    // No CCG report without CCG.
    assert!(!dir.path().join("alpha_0.950/ccg/hour_00.json").exists());
}

#[test]
fn unknown_method_is_a_usage_error() {
    let o = run(bin().args(["run", "-c"]).arg(five_bus_config()).args(["--methods", "dsw,foo"]));
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("foo"));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "methods = [\"dsw\", \"magic\"]\n").unwrap();
    let o = run(bin().args(["run", "-c"]).arg(&cfg));
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("magic"), "{}", stderr(&o));
}

#[test]
fn config_errors_exit_with_four() {
    let o = run(bin().args(["run", "-c"]).arg(five_bus_config()).args(["--alpha", "1.5"]));
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("alpha 1.5"));
    let o = run(bin().args(["run", "--grid", "/nonexistent/grid", "--forecast", "/nonexistent.csv"]));
    assert_eq!(code(&o), 4);
    let o = run(bin().args(["run", "-c", "/nonexistent.toml"]));
    assert_eq!(code(&o), 4);
    let o = run(bin().args(["run", "-c"]).arg(five_bus_config()).args(["--workers", "0"]));
    assert_eq!(code(&o), 4);
}

fn golden_run(out: &Path, workers: &str) -> Output {
    run(bin()
        .args(["run", "-c"])
        .arg(five_bus_config())
        .args(["--alpha", "0.95", "--train", "300", "--test", "300", "--train-seed", "5", "--test-seed", "1005"])
        .args(["--workers", workers, "-o"])
        .arg(out))
}

#[test]
fn five_bus_comparison_matches_golden_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = golden_run(dir.path(), "1");
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let got = std::fs::read_to_string(dir.path().join("alpha_0.950/report.json")).unwrap();
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/five_bus_report.json");
    if std::env::var_os("RESDEPLOY_BLESS").is_some() {
        std::fs::write(&golden, &got).unwrap();
    }
    let want = std::fs::read_to_string(&golden).expect("golden file");
    assert!(got == want, "report.json differs from {}", golden.display());
}

fn manifest_hashes(path: &Path) -> Vec<(String, String)> {
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    m["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| (a["path"].as_str().unwrap().to_string(), a["sha256"].as_str().unwrap().to_string()))
        .collect()
}

#[test]
fn manifest_replay_reproduces_hashes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(code(&golden_run(a.path(), "1")), 0);
    let first = manifest_hashes(&a.path().join("manifest.json"));
    assert_eq!(first.len(), 5);
    // Hashes agree with the system's sha256sum.
    for (path, hash) in &first {
        let o = run(Command::new("sha256sum").arg(a.path().join(path)));
        assert_eq!(stdout(&o).split_whitespace().next().unwrap(), hash, "{path}");
    }
    // Replay from the manifest with a different worker count.
    let o = run(bin()
        .args(["run", "-c"])
        .arg(a.path().join("manifest.json"))
        .args(["--workers", "2", "-o"])
        .arg(b.path()));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(manifest_hashes(&b.path().join("manifest.json")), first);
}

fn five_bus_training_set(seed: u64, k: usize) -> resdeploy::forecast::ScenarioSet {
    let spec = SamplerSpec {
        covariance: vec![vec![0.141, 0.001], vec![0.001, 0.141]],
        nodes: vec![2, 4],
        num_nodes: 5,
        base_mva: 100.0,
        seed,
    };
    let s = GaussianSampler::from_spec(&spec).unwrap();
    sample_scenarios(&s, k, vec![0.0; 5], None).unwrap()
}

#[test]
fn ccg_export_on_five_bus_is_one_scenario_on_the_lower_face() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ccg.csv");
    let o = run(bin()
        .args(["export-scenarios", "-c"])
        .arg(five_bus_config())
        .args(["--method", "ccg", "--alpha", "0.95", "-o"])
        .arg(&out));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let ids = [1, 2, 3, 4, 5];
    let sc = read_scenarios_csv(&out, &ids).unwrap();
    assert_eq!(sc.len(), 1);
    let train = five_bus_training_set(1, 1000);
    let req = reserve_requirements(&train, 0.95, QuantileMethod::Linear).unwrap();
    let agg: f64 = sc[0].iter().sum();
    assert!((agg - req.rho_minus).abs() < 1e-6, "aggregate {agg} vs {}", req.rho_minus);
    // Only the wind buses move.
    assert!(sc[0][0] == 0.0 && sc[0][1] == 0.0 && sc[0][3] == 0.0);
}

#[test]
fn export_import_export_is_a_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("ext.csv");
    let o = run(bin()
        .args(["export-scenarios", "-c"])
        .arg(five_bus_config())
        .args(["--method", "ext", "-o"])
        .arg(&first));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let ids = [1, 2, 3, 4, 5];
    let sc = read_scenarios_csv(&first, &ids).unwrap();
    assert_eq!(sc.len(), 2);
    let second = dir.path().join("again.csv");
    write_scenarios_csv(&second, &ids, &sc).unwrap();
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    // Exported files load as training scenarios too.
    let o = run(bin()
        .arg("validate")
        .arg("--grid")
        .arg(five_bus_dir())
        .arg("--scenarios")
        .arg(&second));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn ext_on_a_symmetric_two_node_set_mirrors() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("grid");
    write_grid(&g, "1,a,1\n2,a,0\n", "a,1,2,0.1,500\n", "G1,1,0,400,10,1,1\nG2,2,0,400,20,1,1\n");
    let f = dir.path().join("forecast.csv");
    std::fs::write(&f, "node_id,net_demand_mw\n1,100\n2,100\n").unwrap();
    let mut errors = Vec::new();
    for k in 1..=50 {
        let a = k as f64;
        let b = 0.5 * a;
        errors.push(vec![a, b]);
        errors.push(vec![-a, -b]);
    }
    let s = dir.path().join("train.csv");
    write_scenarios_csv(&s, &[1, 2], &errors).unwrap();
    let out = dir.path().join("ext.csv");
    let o = run(bin()
        .arg("export-scenarios")
        .arg("--grid")
        .arg(&g)
        .arg("--forecast")
        .arg(&f)
        .arg("--scenarios")
        .arg(&s)
        .arg("--test-scenarios")
        .arg(&s)
        .args(["--method", "ext", "--alpha", "0.9", "-o"])
        .arg(&out));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let sc = read_scenarios_csv(&out, &[1, 2]).unwrap();
    assert_eq!(sc.len(), 2);
    for i in 0..2 {
        assert!((sc[0][i] + sc[1][i]).abs() < 1e-9, "{sc:?}");
        assert!(sc[0][i] > 0.0);
    }
    // Allocation follows the per-node quantiles, 2:1.
    assert!((sc[0][0] - 2.0 * sc[0][1]).abs() < 1e-9, "{sc:?}");
}

#[test]
fn dsw_has_nothing_to_export() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(bin()
        .args(["export-scenarios", "-c"])
        .arg(five_bus_config())
        .args(["--method", "dsw", "-o"])
        .arg(dir.path().join("x.csv")));
    assert_eq!(code(&o), 4);
}

#[test]
fn sampler_draws_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let o = run(bin()
            .args(["sample", "-c"])
            .arg(five_bus_config())
            .args(["--count", "40", "--train-seed", "9", "-o"])
            .arg(p));
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let sc = read_scenarios_csv(&a, &[1, 2, 3, 4, 5]).unwrap();
    assert_eq!(sc, five_bus_training_set(9, 40).errors());
}

#[test]
fn profile_hour_sample_with_forecast() {
    let dir = tempfile::tempdir().unwrap();
    let data = repo().join("crates/core/data/rts73");
    let (s, f) = (dir.path().join("s.csv"), dir.path().join("f.csv"));
    let o = run(bin()
        .arg("sample")
        .arg("--grid")
        .arg(&data)
        .arg("--profile")
        .arg(data.join("profile.json"))
        .args(["--hour", "3", "--count", "25", "-o"])
        .arg(&s)
        .arg("--forecast-out")
        .arg(&f));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = run(bin().arg("validate").arg("--grid").arg(&data).arg("--forecast").arg(&f).arg("--scenarios").arg(&s));
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("scenarios: 25 x 73 nodes"));
}
