use crate::grid::{Generator, GridData, GridModel, Line, Node};

fn generator(id: &str, node: u32, p_max: f64, cost: f64) -> Generator {
    Generator {
        id: id.into(),
        node,
        p_min: 0.0,
        p_max,
        energy_cost: cost,
        up_reserve_cost: 1.0,
        down_reserve_cost: 1.0,
    }
}

/// Cheap unit at bus 1, expensive unit at bus 2, one line of `limit` MW.
pub fn two_bus(limit: f64) -> GridModel {
    GridModel::new(GridData {
        nodes: vec![Node { id: 1, zone: "west".into() }, Node { id: 2, zone: "east".into() }],
        lines: vec![Line {
            id: "1-2".into(),
            from: 1,
            to: 2,
            reactance: 0.1,
            flow_limit: limit,
        }],
        generators: vec![generator("cheap", 1, 300.0, 10.0), generator("dear", 2, 100.0, 30.0)],
        slack: None,
    })
    .unwrap()
}
