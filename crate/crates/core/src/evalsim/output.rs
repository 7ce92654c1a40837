use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::grid::GridModel;

use super::{EvalError, EvaluationReport};

/// Artifacts written by [`write_outputs`], relative to the output directory,
/// in write order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OutputFiles {
    pub files: Vec<PathBuf>,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> EvalError + '_ {
    move |source| EvalError::Io {
        file: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> EvalError + '_ {
    move |e| EvalError::Invalid(format!("{}: {e}", path.display()))
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), EvalError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| EvalError::Invalid(e.to_string()))?;
    s.push('\n');
    fs::write(path, s).map_err(io_err(path))
}

/// Writes `report.json`, `per_hour.csv`, `plotdata/deployment_scenarios.csv`,
/// `plotdata/zonal_stacks.csv` and one `ccg/hour_XX.json` per hour with a
/// column-and-constraint generation report. See `docs/formats.md`.
pub fn write_outputs(dir: &Path, grid: &GridModel, report: &EvaluationReport) -> Result<OutputFiles, EvalError> {
    let mut out = OutputFiles::default();
    for sub in ["", "plotdata", "ccg"] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(io_err(&p))?;
    }

    write_json(&dir.join("report.json"), report)?;
    out.files.push("report.json".into());

    let mut rows = Vec::new();
    for h in &report.hours {
        for m in &h.methods {
            rows.push(vec![
                h.hour.to_string(),
                m.method.to_string(),
                if m.error.is_none() { "ok" } else { "failed" }.to_string(),
                m.da_cost.to_string(),
                m.eta.to_string(),
                m.up_reserve_mw.to_string(),
                m.down_reserve_mw.to_string(),
                m.scenarios.to_string(),
                h.rho_plus.to_string(),
                h.rho_minus.to_string(),
                m.inside.n.to_string(),
                m.inside.violations.to_string(),
                m.inside.rt_cost_sum.to_string(),
                m.outside.n.to_string(),
                m.outside.violations.to_string(),
                m.outside.rt_cost_sum.to_string(),
            ]);
        }
    }
    let p = dir.join("per_hour.csv");
    write_csv(
        &p,
        &[
            "hour",
            "method",
            "status",
            "da_cost",
            "eta",
            "up_reserve_mw",
            "down_reserve_mw",
            "scenarios",
            "rho_plus_mw",
            "rho_minus_mw",
            "n_inside",
            "violations_inside",
            "rt_cost_sum_inside",
            "n_outside",
            "violations_outside",
            "rt_cost_sum_outside",
        ],
        &rows,
    )?;
    out.files.push("per_hour.csv".into());

    let node_ids: Vec<u32> = grid.nodes().iter().map(|n| n.id).collect();
    let mut rows = Vec::new();
    for h in &report.hours {
        for m in &h.methods {
            let Some(dep) = &m.deployment else { continue };
            for (k, e) in dep.entries().iter().enumerate() {
                for (i, v) in e.xi.iter().enumerate() {
                    rows.push(vec![
                        h.hour.to_string(),
                        m.method.to_string(),
                        k.to_string(),
                        e.tag.to_string(),
                        node_ids[i].to_string(),
                        v.to_string(),
                    ]);
                }
            }
        }
    }
    let p = dir.join("plotdata/deployment_scenarios.csv");
    write_csv(&p, &["hour", "method", "scenario", "tag", "node_id", "error_mw"], &rows)?;
    out.files.push("plotdata/deployment_scenarios.csv".into());

    let gen_nodes = grid.generator_nodes();
    let mut rows = Vec::new();
    for h in &report.hours {
        for m in &h.methods {
            let Some(da) = &m.schedule else { continue };
            // zone -> (energy, up, down, curtailment)
            let mut zones: BTreeMap<&str, [f64; 4]> = grid.nodes().iter().map(|n| (n.zone.as_str(), [0.0; 4])).collect();
            for (g, &node) in gen_nodes.iter().enumerate() {
                let z = zones.get_mut(grid.nodes()[node].zone.as_str()).expect("zone of generator node");
                z[0] += da.p[g];
                z[1] += da.r_plus[g];
                z[2] += da.r_minus[g];
            }
            if let Some(c) = &da.curtailment {
                for (i, v) in c.iter().enumerate() {
                    zones.get_mut(grid.nodes()[i].zone.as_str()).expect("zone of node")[3] += v;
                }
            }
            for (zone, v) in zones {
                rows.push(vec![
                    h.hour.to_string(),
                    m.method.to_string(),
                    zone.to_string(),
                    v[0].to_string(),
                    v[1].to_string(),
                    v[2].to_string(),
                    v[3].to_string(),
                ]);
            }
        }
    }
    let p = dir.join("plotdata/zonal_stacks.csv");
    write_csv(
        &p,
        &["hour", "method", "zone", "energy_mw", "up_reserve_mw", "down_reserve_mw", "curtailment_mw"],
        &rows,
    )?;
    out.files.push("plotdata/zonal_stacks.csv".into());

    for h in &report.hours {
        for m in &h.methods {
            if let Some(rep) = &m.ccg_report {
                let rel = PathBuf::from(format!("ccg/hour_{:02}.json", h.hour));
                write_json(&dir.join(&rel), rep)?;
                out.files.push(rel);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalsim::{evaluate, EvalConfig, Method};
    use crate::testutil::two_bus;

    #[test]
    fn headers_and_file_list() {
        let g = two_bus(100.0);
        let r = evaluate(&g, &[Method::Dsw, Method::Ccg], &crate::evalsim::tests::two_bus_hour(), &EvalConfig::default());
        let dir = tempfile::tempdir().unwrap();
        let out = write_outputs(dir.path(), &g, &r).unwrap();
        let names: Vec<String> = out.files.iter().map(|p| p.display().to_string()).collect();
        assert_eq!(
            names,
            [
                "report.json",
                "per_hour.csv",
                "plotdata/deployment_scenarios.csv",
                "plotdata/zonal_stacks.csv",
                "ccg/hour_07.json"
            ]
        );
        let per_hour = fs::read_to_string(dir.path().join("per_hour.csv")).unwrap();
        let mut lines = per_hour.lines();
        assert!(lines.next().unwrap().starts_with("hour,method,status,da_cost,"));
        assert!(lines.next().unwrap().starts_with("7,dsw,ok,"));
        assert_eq!(per_hour.lines().count(), 3);
        let zonal = fs::read_to_string(dir.path().join("plotdata/zonal_stacks.csv")).unwrap();
        // Two methods times two zones.
        assert_eq!(zonal.lines().count(), 1 + 4);
    }
}
