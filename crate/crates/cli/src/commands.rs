use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use resdeploy::evalsim::{evaluate_hour, multi_hour_run, write_outputs, EvaluationReport, Method};
use resdeploy::forecast::{read_forecast_csv, read_scenarios_csv, write_forecast_csv, write_scenarios_csv, ScenarioSet};

use crate::config::RunConfig;
use crate::fail::Fail;
use crate::inputs::{build_sampler, load_grid, load_hour, load_hours, load_profile, node_ids, HourSeeds};

/// Condition numbers above this are reported as a problem.
const MAX_CONDITION: f64 = 1e12;

pub fn validate(cfg: &RunConfig) -> Result<()> {
    let gpath = cfg.grid.as_deref().ok_or_else(|| Fail::Config("no grid given".into()))?;
    let mut problems: Vec<String> = Vec::new();
    match load_grid(gpath) {
        Err(e) => problems.push(format!("{e:#}")),
        Ok(grid) => {
            let ids = node_ids(&grid);
            let cap: f64 = grid.generators().iter().map(|g| g.p_max).sum();
            let floor: f64 = grid.generators().iter().map(|g| g.p_min).sum();
            println!(
                "grid: {} nodes, {} lines, {} generators ({cap} MW), slack bus {}",
                grid.num_nodes(),
                grid.num_lines(),
                grid.num_generators(),
                grid.slack()
            );
            let cond = grid.susceptance_condition();
            println!("ptdf: reduced susceptance condition number {cond:.3e}");
            if !(cond <= MAX_CONDITION) {
                problems.push(format!("reduced susceptance matrix is ill-conditioned ({cond:.3e})"));
            }
            if let Some(f) = &cfg.forecast {
                match read_forecast_csv(f, &ids) {
                    Ok((d, vre)) => {
                        let total: f64 = d.iter().sum();
                        println!(
                            "forecast: {total} MW net demand{}",
                            if vre.is_some() { ", with VRE" } else { "" }
                        );
                        if total > cap || total < floor {
                            problems.push(format!(
                                "{}: net demand {total} MW is outside the generation range [{floor}, {cap}] MW",
                                f.display()
                            ));
                        }
                    }
                    Err(e) => problems.push(e.to_string()),
                }
            }
            for (name, p) in [("scenarios", &cfg.scenarios), ("test scenarios", &cfg.test_scenarios)] {
                let Some(p) = p else { continue };
                match read_scenarios_csv(p, &ids) {
                    Ok(s) => {
                        println!("{name}: {} x {} nodes", s.len(), ids.len());
                        if let Err(e) = ScenarioSet::new(s, vec![0.0; ids.len()], None) {
                            problems.push(format!("{}: {e}", p.display()));
                        }
                    }
                    Err(e) => problems.push(e.to_string()),
                }
            }
            if let Some(s) = &cfg.sampler {
                match build_sampler(s, &grid, 0) {
                    Ok(_) => println!("sampler: {} uncertain nodes", s.nodes.len()),
                    Err(e) => problems.push(format!("{e:#}")),
                }
            }
            if let Some(p) = &cfg.profile {
                match load_profile(p, &grid) {
                    Ok(pr) => println!(
                        "profile: {} VRE nodes, {} training and {} test draws per hour",
                        pr.vre_nodes.len(),
                        pr.train,
                        pr.test
                    ),
                    Err(e) => problems.push(format!("{e:#}")),
                }
            }
        }
    }
    if problems.is_empty() {
        println!("ok");
        return Ok(());
    }
    for p in &problems {
        eprintln!("error: {p}");
    }
    Err(Fail::Validation(format!("{} problem(s) found", problems.len())).into())
}

#[derive(Serialize)]
struct Artifact {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    seeds: &'a [HourSeeds],
    artifacts: Vec<Artifact>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn print_summary(out: &mut impl Write, report: &EvaluationReport) -> std::io::Result<()> {
    writeln!(out, "alpha {}", report.alpha)?;
    writeln!(
        out,
        "  {:<6} {:>6} {:>14} {:>10} {:>11} {:>12}",
        "method", "hours", "da_cost_mean", "viol_in_%", "viol_out_%", "avg_rt_in"
    )?;
    for s in &report.summary {
        writeln!(
            out,
            "  {:<6} {:>6} {:>14.2} {:>10.2} {:>11.2} {:>12.2}",
            s.method.name(),
            format!("{}/{}", s.hours_ok, s.hours_ok + s.hours_failed),
            s.da_cost_mean,
            s.inside.violation_probability_pct,
            s.outside.violation_probability_pct,
            s.inside.avg_rt_cost
        )?;
    }
    Ok(())
}

/// Evaluates every alpha, writing one output tree per level plus
/// `manifest.json` at the top.
pub fn run(mut cfg: RunConfig) -> Result<()> {
    cfg.check()?;
    let mut seen = Vec::new();
    for a in &cfg.alphas {
        let key = format!("{a:.3}");
        if seen.contains(&key) {
            return Err(Fail::Config(format!("alpha {a} is listed twice")).into());
        }
        seen.push(key);
    }
    let grid = load_grid(cfg.grid.as_deref().expect("checked"))?;
    let (hours, seeds) = load_hours(&cfg, &grid)?;
    fs::create_dir_all(&cfg.output).with_context(|| format!("creating {}", cfg.output.display()))?;
    cfg.absolutize();
    cfg.output = fs::canonicalize(&cfg.output)?;

    let mut artifacts = Vec::new();
    let mut failures = Vec::new();
    let stdout = std::io::stdout();
    for &alpha in &cfg.alphas {
        let sub = format!("alpha_{alpha:.3}");
        eprintln!("alpha {alpha}: {} hour(s)", hours.len());
        let report = multi_hour_run(&grid, &hours, &cfg.methods, &cfg.eval_config(alpha));
        let files = write_outputs(&cfg.output.join(&sub), &grid, &report)?;
        for f in &files.files {
            let rel = format!("{sub}/{}", f.display());
            let bytes = fs::read(cfg.output.join(&rel))?;
            artifacts.push(Artifact {
                path: rel,
                sha256: sha256_hex(&bytes),
            });
        }
        for h in &report.hours {
            for m in h.methods.iter().filter(|m| m.error.is_some()) {
                failures.push(format!(
                    "alpha {alpha}, hour {}, {}: {}",
                    h.hour,
                    m.method,
                    m.error.as_deref().unwrap_or_default()
                ));
            }
        }
        print_summary(&mut stdout.lock(), &report)?;
    }

    let manifest = Manifest {
        tool: "resdeploy",
        version: env!("CARGO_PKG_VERSION"),
        config: &cfg,
        seeds: &seeds,
        artifacts,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    let mpath = cfg.output.join("manifest.json");
    fs::write(&mpath, text).with_context(|| format!("writing {}", mpath.display()))?;
    println!("wrote {}", cfg.output.display());

    if failures.is_empty() {
        return Ok(());
    }
    for f in &failures {
        eprintln!("failed: {f}");
    }
    Err(Fail::Solver(format!("{} method-hour(s) failed; see report.json", failures.len())).into())
}

/// Writes the deployment scenarios `method` builds for one hour at the first
/// alpha.
pub fn export_scenarios(cfg: &RunConfig, method: Method, hour: usize, out: &Path) -> Result<()> {
    if method == Method::Dsw {
        return Err(Fail::Config("dsw uses no deployment scenarios; pick ext, ccg or venum".into()).into());
    }
    cfg.check()?;
    let grid = load_grid(cfg.grid.as_deref().expect("checked"))?;
    let (mut input, _) = load_hour(cfg, &grid, hour)?;
    input.test.clear();
    let alpha = cfg.alphas[0];
    let rep = evaluate_hour(&grid, &[method], &input, &cfg.eval_config(alpha));
    let m = &rep.methods[0];
    if let Some(e) = &m.error {
        return Err(Fail::Solver(format!("{method}: {e}")).into());
    }
    let dep = m.deployment.as_ref().expect("masters keep their scenarios");
    write_scenarios_csv(out, &node_ids(&grid), &dep.vectors())?;
    println!(
        "{method}: {} scenario(s) at alpha {alpha}, hour {hour} (rho+ {} MW, rho- {} MW)",
        dep.len(),
        rep.rho_plus,
        rep.rho_minus
    );
    for (k, s) in dep.entries().iter().enumerate() {
        println!("  {k}: {} aggregate {} MW", s.tag, s.aggregate);
    }
    println!("wrote {}", out.display());
    Ok(())
}

/// Draws synthetic scenarios from the profile (for `hour`) or the sampler.
pub fn sample(cfg: &RunConfig, count: Option<usize>, hour: usize, out: &Path, forecast_out: Option<&Path>) -> Result<()> {
    let gpath = cfg.grid.as_deref().ok_or_else(|| Fail::Config("no grid given".into()))?;
    let grid = load_grid(gpath)?;
    let ids = node_ids(&grid);
    let (draws, seed) = if let Some(p) = &cfg.profile {
        let mut profile = load_profile(p, &grid)?;
        if let Some(s) = cfg.seeds.train {
            profile.seed = s;
        }
        if let Some(k) = count {
            profile.train = k;
        }
        let (input, (seed, _)) = profile.hour(hour)?;
        if let Some(f) = forecast_out {
            write_forecast_csv(f, &ids, input.train.d_hat(), input.train.vre())?;
        }
        (input.train.errors().to_vec(), seed)
    } else {
        let s = cfg
            .sampler
            .as_ref()
            .ok_or_else(|| Fail::Config("sample needs a profile or a sampler".into()))?;
        if forecast_out.is_some() {
            return Err(Fail::Config("--forecast-out needs a profile".into()).into());
        }
        let seed = cfg.sampler_seeds().0;
        (build_sampler(s, &grid, seed)?.draw(count.unwrap_or(cfg.train)), seed)
    };
    write_scenarios_csv(out, &ids, &draws)?;
    println!("wrote {} scenario(s) with seed {seed} to {}", draws.len(), out.display());
    Ok(())
}
