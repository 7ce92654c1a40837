//! Deployment scenarios for the day-ahead master.
//!
//! * [`extreme_scenarios`]: one upward and one downward scenario that split
//!   the aggregate requirement across nodes in proportion to their marginal
//!   error quantiles.
//! * [`ccg`]: column-and-constraint generation, alternating the master with
//!   an adversary that searches the uncertainty set for the error with the
//!   highest real-time violation cost.
//! * [`adm`]: the alternating-direction adversary on the dualized
//!   real-time problem, with [`adm_init_for_line`] starting points.
//! * [`enumerate_vertices`]: all extreme points of the uncertainty set in a
//!   few dimensions, for exact solves.

mod adm;
mod ccg;
mod vertices;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::forecast::{quantile_sorted, QuantileMethod, ReserveRequirement, ScenarioSet, UncertaintySet};
use crate::scheduling::ScheduleError;

pub use adm::{
    adm, adm_init_for_line, adversary, AdmConfig, AdmInit, AdmIteration, AdmResult, AdversaryResult, InitConfig,
    StartSummary,
};
pub use ccg::{
    ccg, flag_congested_lines, solve_vertex_master, AdversaryMode, CcgConfig, CcgIteration, CcgReport, Termination,
};
pub use vertices::{enumerate_vertices, DEFAULT_VERTEX_CAP};

/// Two scenarios closer than this in the max-norm are the same scenario.
pub const DUPLICATE_TOL: f64 = 1e-6;
/// Membership tolerance for stored deployment scenarios.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum RobustError {
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("master problem failed at iteration {iteration}: {source}")]
    Master {
        iteration: usize,
        #[source]
        source: ScheduleError,
    },
    #[error("scenario is outside the uncertainty set")]
    OutsideSet,
    #[error("{got} uncertain dimensions exceed the vertex-enumeration cap {cap}")]
    TooManyDimensions { got: usize, cap: usize },
    #[error("line index {0} out of range")]
    UnknownLine(usize),
    #[error("{0}")]
    Internal(String),
}

/// Where a deployment scenario came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioTag {
    ExtremeUp,
    ExtremeDown,
    /// Added by column-and-constraint generation at this iteration.
    Ccg(usize),
    VertexEnum,
}

impl fmt::Display for ScenarioTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioTag::ExtremeUp => f.write_str("extreme-up"),
            ScenarioTag::ExtremeDown => f.write_str("extreme-down"),
            ScenarioTag::Ccg(j) => write!(f, "ccg-iteration-{j}"),
            ScenarioTag::VertexEnum => f.write_str("vertex-enum"),
        }
    }
}

impl FromStr for ScenarioTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "extreme-up" => Ok(ScenarioTag::ExtremeUp),
            "extreme-down" => Ok(ScenarioTag::ExtremeDown),
            "vertex-enum" => Ok(ScenarioTag::VertexEnum),
            _ => s
                .strip_prefix("ccg-iteration-")
                .and_then(|j| j.parse().ok())
                .map(ScenarioTag::Ccg)
                .ok_or_else(|| format!("unknown scenario tag {s:?}")),
        }
    }
}

impl Serialize for ScenarioTag {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ScenarioTag {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeploymentScenario {
    #[serde(rename = "xi_mw")]
    pub xi: Vec<f64>,
    pub tag: ScenarioTag,
    #[serde(rename = "aggregate_mw")]
    pub aggregate: f64,
}

/// Ordered, duplicate-free list of scenarios inside the uncertainty set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DeploymentScenarioSet {
    entries: Vec<DeploymentScenario>,
}

impl DeploymentScenarioSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends `xi`; `Ok(false)` if it duplicates an entry.
    pub fn push(&mut self, xi: Vec<f64>, tag: ScenarioTag, set: &UncertaintySet) -> Result<bool, RobustError> {
        if !set.contains(&xi, MEMBERSHIP_TOL) {
            return Err(RobustError::OutsideSet);
        }
        if self.contains_close(&xi) {
            return Ok(false);
        }
        let aggregate = xi.iter().sum();
        self.entries.push(DeploymentScenario { xi, tag, aggregate });
        Ok(true)
    }

    pub fn contains_close(&self, xi: &[f64]) -> bool {
        self.entries.iter().any(|e| max_abs_diff(&e.xi, xi) <= DUPLICATE_TOL)
    }

    pub fn entries(&self) -> &[DeploymentScenario] {
        &self.entries
    }

    pub fn vectors(&self) -> Vec<Vec<f64>> {
        self.entries.iter().map(|e| e.xi.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Allocation factors behind the extreme scenarios.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremeAllocation {
    pub up_factors: Vec<f64>,
    pub down_factors: Vec<f64>,
    /// Before projection; aggregates equal the requirements.
    pub up_raw: Vec<f64>,
    pub down_raw: Vec<f64>,
    /// Set when all nodal quantiles in that direction summed to zero.
    pub up_uniform: bool,
    pub down_uniform: bool,
}

fn factors(q: &[f64]) -> (Vec<f64>, bool) {
    let total: f64 = q.iter().sum();
    let scale: f64 = q.iter().map(|v| v.abs()).sum();
    if total == 0.0 || total.abs() <= f64::EPSILON * scale {
        let n = q.len() as f64;
        (vec![1.0 / n; q.len()], true)
    } else {
        (q.iter().map(|v| v / total).collect(), false)
    }
}

/// Nodal factors proportional to the marginal quantiles at the levels that
/// define the requirement, scaled to the requirement.
pub fn extreme_allocation(
    scenarios: &ScenarioSet,
    req: &ReserveRequirement,
    method: QuantileMethod,
) -> ExtremeAllocation {
    let n = scenarios.num_nodes();
    let mut q_up = Vec::with_capacity(n);
    let mut q_dn = Vec::with_capacity(n);
    for i in 0..n {
        let mut s = scenarios.node_samples(i);
        s.sort_by(f64::total_cmp);
        q_up.push(quantile_sorted(&s, (1.0 + req.alpha) / 2.0, method));
        q_dn.push(quantile_sorted(&s, (1.0 - req.alpha) / 2.0, method));
    }
    let (up_factors, up_uniform) = factors(&q_up);
    let (down_factors, down_uniform) = factors(&q_dn);
    if up_uniform {
        log::warn!("upward nodal quantiles sum to zero; allocating the requirement uniformly");
    }
    if down_uniform {
        log::warn!("downward nodal quantiles sum to zero; allocating the requirement uniformly");
    }
    ExtremeAllocation {
        up_raw: up_factors.iter().map(|e| req.rho_plus * e).collect(),
        down_raw: down_factors.iter().map(|e| req.rho_minus * e).collect(),
        up_factors,
        down_factors,
        up_uniform,
        down_uniform,
    }
}

/// Upward and downward extreme scenarios, projected onto `set`.
///
/// If both projections coincide only one entry is kept.
pub fn extreme_scenarios(
    scenarios: &ScenarioSet,
    req: &ReserveRequirement,
    set: &UncertaintySet,
    method: QuantileMethod,
) -> Result<DeploymentScenarioSet, RobustError> {
    let alloc = extreme_allocation(scenarios, req, method);
    let mut out = DeploymentScenarioSet::new();
    out.push(set.project(&alloc.up_raw), ScenarioTag::ExtremeUp, set)?;
    out.push(set.project(&alloc.down_raw), ScenarioTag::ExtremeDown, set)?;
    Ok(out)
}
