use std::fs::File;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use super::{Generator, GridData, GridError, GridModel, Line, Node};

#[derive(Serialize, Deserialize)]
struct NodeRow {
    node_id: u32,
    zone: String,
    slack: u8,
}

#[derive(Serialize, Deserialize)]
struct LineRow {
    line_id: String,
    from_node: u32,
    to_node: u32,
    reactance_pu: f64,
    flow_limit_mw: f64,
}

#[derive(Serialize, Deserialize)]
struct GeneratorRow {
    gen_id: String,
    node_id: u32,
    p_min_mw: f64,
    p_max_mw: f64,
    energy_cost_per_mwh: f64,
    up_reserve_cost_per_mw: f64,
    down_reserve_cost_per_mw: f64,
}

fn io_err(path: &Path, source: std::io::Error) -> GridError {
    GridError::Io {
        file: path.display().to_string(),
        source,
    }
}

fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, GridError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut out = Vec::new();
    for (k, rec) in reader.deserialize().enumerate() {
        out.push(rec.map_err(|e| GridError::Parse {
            file: path.display().to_string(),
            row: k + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), GridError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| GridError::Parse {
        file: path.display().to_string(),
        row: 0,
        msg: e.to_string(),
    })?;
    for r in rows {
        w.serialize(r).map_err(|e| GridError::Parse {
            file: path.display().to_string(),
            row: 0,
            msg: e.to_string(),
        })?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Reads `nodes.csv`, `lines.csv` and `generators.csv` from `dir`.
///
/// Row numbers in errors count data records from 1 (the header is row 0).
pub fn read_grid_csv(dir: &Path) -> Result<GridModel, GridError> {
    let nodes_path = dir.join("nodes.csv");
    let node_rows: Vec<NodeRow> = read_rows(&nodes_path)?;
    let lines: Vec<LineRow> = read_rows(&dir.join("lines.csv"))?;
    let gens: Vec<GeneratorRow> = read_rows(&dir.join("generators.csv"))?;

    let mut slack = None;
    for (k, n) in node_rows.iter().enumerate() {
        match n.slack {
            0 => {}
            1 if slack.is_none() => slack = Some(n.node_id),
            1 => {
                return Err(GridError::Parse {
                    file: nodes_path.display().to_string(),
                    row: k + 1,
                    msg: "more than one slack bus".into(),
                })
            }
            v => {
                return Err(GridError::Parse {
                    file: nodes_path.display().to_string(),
                    row: k + 1,
                    msg: format!("slack must be 0 or 1, got {v}"),
                })
            }
        }
    }
    let data = GridData {
        nodes: node_rows
            .into_iter()
            .map(|n| Node { id: n.node_id, zone: n.zone })
            .collect(),
        lines: lines
            .into_iter()
            .map(|l| Line {
                id: l.line_id,
                from: l.from_node,
                to: l.to_node,
                reactance: l.reactance_pu,
                flow_limit: l.flow_limit_mw,
            })
            .collect(),
        generators: gens
            .into_iter()
            .map(|g| Generator {
                id: g.gen_id,
                node: g.node_id,
                p_min: g.p_min_mw,
                p_max: g.p_max_mw,
                energy_cost: g.energy_cost_per_mwh,
                up_reserve_cost: g.up_reserve_cost_per_mw,
                down_reserve_cost: g.down_reserve_cost_per_mw,
            })
            .collect(),
        slack,
    };
    GridModel::new(data).map_err(|e| match e {
        GridError::UnknownNode { file, row, node } => GridError::UnknownNode {
            file: dir.join(format!("{file}.csv")).display().to_string(),
            row,
            node,
        },
        other => other,
    })
}

/// Writes the CSV trio; the slack flag is set on the model's slack bus.
pub fn write_grid_csv(grid: &GridModel, dir: &Path) -> Result<(), GridError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    write_rows(
        &dir.join("nodes.csv"),
        grid.nodes().iter().map(|n| NodeRow {
            node_id: n.id,
            zone: n.zone.clone(),
            slack: u8::from(n.id == grid.slack()),
        }),
    )?;
    write_rows(
        &dir.join("lines.csv"),
        grid.lines().iter().map(|l| LineRow {
            line_id: l.id.clone(),
            from_node: l.from,
            to_node: l.to,
            reactance_pu: l.reactance,
            flow_limit_mw: l.flow_limit,
        }),
    )?;
    write_rows(
        &dir.join("generators.csv"),
        grid.generators().iter().map(|g| GeneratorRow {
            gen_id: g.id.clone(),
            node_id: g.node,
            p_min_mw: g.p_min,
            p_max_mw: g.p_max,
            energy_cost_per_mwh: g.energy_cost,
            up_reserve_cost_per_mw: g.up_reserve_cost,
            down_reserve_cost_per_mw: g.down_reserve_cost,
        }),
    )
}

pub fn read_grid_json(path: &Path) -> Result<GridModel, GridError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let data: GridData = serde_json::from_str(&text).map_err(|e| GridError::Parse {
        file: path.display().to_string(),
        row: e.line(),
        msg: e.to_string(),
    })?;
    GridModel::new(data)
}

pub fn write_grid_json(grid: &GridModel, path: &Path) -> Result<(), GridError> {
    let mut data = grid.data().clone();
    data.slack = Some(grid.slack());
    let text = serde_json::to_string_pretty(&data).expect("grid data serializes");
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}
