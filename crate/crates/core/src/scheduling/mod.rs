//! Day-ahead, master and real-time dispatch problems.
//!
//! First-stage decisions are `x = (p, r+, r-, u)`: dispatch, upward and
//! downward reserve per generator and (optional) VRE curtailment per node.
//! The real-time problem redispatches generators against a realised error
//! `xi` with penalised slacks on reserve use (`g+`, `g-`) and line flows
//! (`l+`, `l-`); its optimal value is the violation cost.
//!
//! Line-flow rows are generated lazily: each LP starts with the rows that are
//! known to matter, and violated limits are added until none remain. The
//! final solution satisfies every limit, so the result equals the full model.

mod compact;
mod da;
mod rt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::GridError;
use crate::lp::{LpError, LpStatus, SolverOptions};

pub use compact::{build_compact_forms, CompactSecondStage, RowKind};
pub use da::{solve_da, solve_master};
pub use rt::{solve_rt, RtOutcome};

/// Lines at or above this fraction of their limit count as congested.
pub const CONGESTION_RATIO: f64 = 0.99;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("infeasible: demand {demand:.3} MW outside the dispatchable range [{min:.3}, {max:.3}] MW")]
    Energy { demand: f64, min: f64, max: f64 },
    #[error("infeasible: upward requirement {required:.3} MW exceeds headroom {available:.3} MW")]
    UpReserve { required: f64, available: f64 },
    #[error("infeasible: downward requirement {required:.3} MW exceeds footroom {available:.3} MW")]
    DownReserve { required: f64, available: f64 },
    #[error("infeasible: line limits cannot be met with the required reserves")]
    Network,
    #[error("solver stopped with status {0:?}")]
    Status(LpStatus),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("{0}")]
    Dimension(String),
}

/// VRE curtailment in the day-ahead stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curtailment {
    /// Curtailable VRE forecast per node, MW.
    pub vre: Vec<f64>,
    /// $/MWh, default 0.
    #[serde(default)]
    pub cost: f64,
    /// Added to `cost` so curtailment is never chosen on a tie.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    1e-4
}

impl Curtailment {
    pub fn new(vre: Vec<f64>) -> Self {
        Curtailment {
            vre,
            cost: 0.0,
            epsilon: default_epsilon(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleOptions {
    /// Penalty on every slack, $/MWh.
    pub c_viol: f64,
    pub curtailment: Option<Curtailment>,
    pub lp: SolverOptions,
}

impl Default for ScheduleOptions {
    fn default() -> Self {
        ScheduleOptions {
            c_viol: 1000.0,
            curtailment: None,
            lp: SolverOptions::default(),
        }
    }
}

/// First-stage decisions and their cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DaSchedule {
    #[serde(rename = "p_mw")]
    pub p: Vec<f64>,
    #[serde(rename = "r_plus_mw")]
    pub r_plus: Vec<f64>,
    #[serde(rename = "r_minus_mw")]
    pub r_minus: Vec<f64>,
    #[serde(rename = "curtailment_mw", skip_serializing_if = "Option::is_none", default)]
    pub curtailment: Option<Vec<f64>>,
    /// Energy, reserve and curtailment cost, $/h.
    pub da_cost: f64,
    /// Worst violation cost over the deployment scenarios, $/h.
    pub eta: f64,
    /// `da_cost + eta`.
    pub objective: f64,
    /// Scheduled line flows, MW.
    #[serde(rename = "flows_mw")]
    pub flows: Vec<f64>,
    /// Violation cost of each deployment-scenario block, $/h.
    #[serde(default)]
    pub scenario_costs: Vec<f64>,
}

impl DaSchedule {
    /// `x = (p, r+, r-, u)` with `u = 0` when curtailment is off.
    pub fn first_stage(&self, num_nodes: usize) -> Vec<f64> {
        let n = num_nodes;
        let mut x = Vec::with_capacity(3 * self.p.len() + n);
        x.extend_from_slice(&self.p);
        x.extend_from_slice(&self.r_plus);
        x.extend_from_slice(&self.r_minus);
        match &self.curtailment {
            Some(u) => x.extend_from_slice(u),
            None => x.extend(std::iter::repeat_n(0.0, n)),
        }
        x
    }

    pub fn total_up_reserve(&self) -> f64 {
        self.r_plus.iter().sum()
    }

    pub fn total_down_reserve(&self) -> f64 {
        self.r_minus.iter().sum()
    }
}

/// Tolerance used when checking a flow against its limit.
pub(crate) fn flow_tol(opts: &SolverOptions, fmax: f64) -> f64 {
    opts.feas_tol * (1.0 + fmax)
}
