use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ForecastError;

#[derive(Serialize, Deserialize)]
struct ScenarioRow {
    scenario_id: u32,
    node_id: u32,
    error_mw: f64,
}

fn parse_err(path: &Path, row: usize, msg: impl Into<String>) -> ForecastError {
    ForecastError::Parse {
        file: path.display().to_string(),
        row,
        msg: msg.into(),
    }
}

fn reader(path: &Path) -> Result<csv::Reader<File>, ForecastError> {
    let file = File::open(path).map_err(|e| ForecastError::Io {
        file: path.display().to_string(),
        source: e,
    })?;
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(file))
}

/// Reads long-format scenarios into one dense vector per scenario id,
/// ordered by id. Columns follow `node_ids`; omitted pairs are zero.
pub fn read_scenarios_csv(path: &Path, node_ids: &[u32]) -> Result<Vec<Vec<f64>>, ForecastError> {
    let col: BTreeMap<u32, usize> = node_ids.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut rows: BTreeMap<u32, Vec<Option<f64>>> = BTreeMap::new();
    let mut rdr = reader(path)?;
    for (k, rec) in rdr.deserialize::<ScenarioRow>().enumerate() {
        let rec = rec.map_err(|e| parse_err(path, k + 1, e.to_string()))?;
        let &c = col
            .get(&rec.node_id)
            .ok_or_else(|| parse_err(path, k + 1, format!("unknown node id {}", rec.node_id)))?;
        if !rec.error_mw.is_finite() {
            return Err(parse_err(path, k + 1, "non-finite error"));
        }
        let slot = &mut rows.entry(rec.scenario_id).or_insert_with(|| vec![None; node_ids.len()])[c];
        if slot.is_some() {
            return Err(parse_err(
                path,
                k + 1,
                format!("duplicate entry for scenario {} node {}", rec.scenario_id, rec.node_id),
            ));
        }
        *slot = Some(rec.error_mw);
    }
    Ok(rows
        .into_values()
        .map(|r| r.into_iter().map(|v| v.unwrap_or(0.0)).collect())
        .collect())
}

/// Writes scenarios with ids `0..` in the given order, one row per node.
pub fn write_scenarios_csv(path: &Path, node_ids: &[u32], scenarios: &[Vec<f64>]) -> Result<(), ForecastError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| parse_err(path, 0, e.to_string()))?;
    for (k, xi) in scenarios.iter().enumerate() {
        for (n, &v) in node_ids.iter().zip(xi) {
            w.serialize(ScenarioRow {
                scenario_id: k as u32,
                node_id: *n,
                error_mw: v,
            })
            .map_err(|e| parse_err(path, k + 1, e.to_string()))?;
        }
    }
    w.flush().map_err(|e| ForecastError::Io {
        file: path.display().to_string(),
        source: e,
    })
}

/// Reads `node_id,net_demand_mw[,vre_mw]`; every node must appear once.
pub fn read_forecast_csv(path: &Path, node_ids: &[u32]) -> Result<(Vec<f64>, Option<Vec<f64>>), ForecastError> {
    let col: BTreeMap<u32, usize> = node_ids.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| parse_err(path, 0, e.to_string()))?.clone();
    let names: Vec<&str> = headers.iter().collect();
    let has_vre = match names.as_slice() {
        ["node_id", "net_demand_mw"] => false,
        ["node_id", "net_demand_mw", "vre_mw"] => true,
        _ => {
            return Err(parse_err(
                path,
                0,
                format!("expected header node_id,net_demand_mw[,vre_mw], got {}", names.join(",")),
            ))
        }
    };
    let mut demand = vec![None; node_ids.len()];
    let mut vre = vec![0.0; node_ids.len()];
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(path, k + 1, e.to_string()))?;
        let field = |i: usize| -> Result<&str, ForecastError> {
            rec.get(i).ok_or_else(|| parse_err(path, k + 1, "missing field"))
        };
        let node: u32 = field(0)?
            .parse()
            .map_err(|_| parse_err(path, k + 1, format!("bad node id {:?}", &rec[0])))?;
        let num = |s: &str| -> Result<f64, ForecastError> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(path, k + 1, format!("bad number {s:?}")))
        };
        let &c = col
            .get(&node)
            .ok_or_else(|| parse_err(path, k + 1, format!("unknown node id {node}")))?;
        if demand[c].is_some() {
            return Err(parse_err(path, k + 1, format!("duplicate node id {node}")));
        }
        demand[c] = Some(num(field(1)?)?);
        if has_vre {
            let v = field(2)?;
            vre[c] = if v.is_empty() { 0.0 } else { num(v)? };
        }
    }
    let mut out = Vec::with_capacity(node_ids.len());
    for (i, d) in demand.into_iter().enumerate() {
        out.push(d.ok_or_else(|| parse_err(path, 0, format!("node {} has no forecast", node_ids[i])))?);
    }
    Ok((out, has_vre.then_some(vre)))
}

pub fn write_forecast_csv(
    path: &Path,
    node_ids: &[u32],
    d_hat: &[f64],
    vre: Option<&[f64]>,
) -> Result<(), ForecastError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| parse_err(path, 0, e.to_string()))?;
    let io = |e: csv::Error| parse_err(path, 0, e.to_string());
    match vre {
        Some(v) => {
            w.write_record(["node_id", "net_demand_mw", "vre_mw"]).map_err(io)?;
            for i in 0..node_ids.len() {
                w.serialize((node_ids[i], d_hat[i], v[i])).map_err(io)?;
            }
        }
        None => {
            w.write_record(["node_id", "net_demand_mw"]).map_err(io)?;
            for i in 0..node_ids.len() {
                w.serialize((node_ids[i], d_hat[i])).map_err(io)?;
            }
        }
    }
    w.flush().map_err(|e| ForecastError::Io {
        file: path.display().to_string(),
        source: e,
    })
}
