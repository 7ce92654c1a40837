use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::forecast::{ReserveRequirement, UncertaintySet};
use crate::grid::GridModel;
use crate::scheduling::{
    build_compact_forms, solve_master, solve_rt, DaSchedule, ScheduleOptions, CONGESTION_RATIO,
};

use super::adm::{adversary, AdmConfig, InitConfig};
use super::vertices::{enumerate_vertices, DEFAULT_VERTEX_CAP};
use super::{DeploymentScenarioSet, RobustError, ScenarioTag};

/// How the worst-case error is searched for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum AdversaryMode {
    /// Multi-start alternating-direction heuristic.
    Adm,
    /// Real-time solves at every vertex of the uncertainty set.
    Exact { cap: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CcgConfig {
    /// Maximum number of deployment scenarios.
    pub m_max: usize,
    /// Relative tolerance on `UB - LB`, scaled by `max(1, |Q|)`.
    pub gap_tol: f64,
    /// A realisation whose total slack stays at or below this (MW) counts
    /// as served; the adversary value is zero below `c_viol * slack_tol`.
    pub slack_tol: f64,
    pub adm: AdmConfig,
    pub mode: AdversaryMode,
    pub init: InitConfig,
    pub schedule: ScheduleOptions,
}

impl Default for CcgConfig {
    fn default() -> Self {
        CcgConfig {
            m_max: 10,
            gap_tol: 1e-6,
            slack_tol: 1e-6,
            adm: AdmConfig::default(),
            mode: AdversaryMode::Adm,
            init: InitConfig::default(),
            schedule: ScheduleOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    GapClosed,
    MaxScenarios,
    DuplicateScenario,
    AdversaryZero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CcgIteration {
    pub iteration: usize,
    /// Master objective: day-ahead cost plus `eta`.
    pub lb: f64,
    /// Day-ahead cost plus the adversary value.
    pub ub: f64,
    pub eta: f64,
    pub da_cost: f64,
    /// Adversary estimate of the worst violation cost.
    pub q_tilde: f64,
    pub scenario_added: bool,
    /// ADM iterations of the winning start (0 for the exact adversary).
    pub adm_iterations: usize,
    /// Label of the winning start.
    pub init: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CcgReport {
    pub iterations: Vec<CcgIteration>,
    pub termination: Termination,
    /// `UB - LB` at the last iteration.
    pub final_gap: f64,
    pub scenarios_added: usize,
    /// Set when the final `eta` is positive: supply and demand cannot be
    /// balanced for every error in the uncertainty set.
    pub balance_not_guaranteed: bool,
    pub degenerate_lines: Vec<usize>,
    pub zero_flow_lines: Vec<usize>,
}

struct AdversaryOutcome {
    q: f64,
    xi: Vec<f64>,
    iterations: usize,
    label: String,
    degenerate: Vec<usize>,
    zero_flow: Vec<usize>,
}

fn exact_adversary(
    grid: &GridModel,
    da: &DaSchedule,
    set: &UncertaintySet,
    cap: usize,
    opts: &ScheduleOptions,
) -> Result<AdversaryOutcome, RobustError> {
    let verts = enumerate_vertices(set, &set.uncertain_nodes(), cap)?;
    let costs: Vec<f64> = verts
        .par_iter()
        .map(|v| solve_rt(grid, da, v, opts.c_viol, &opts.lp).map(|o| o.violation_cost))
        .collect::<Result<_, _>>()?;
    let mut best = 0;
    for (k, c) in costs.iter().enumerate() {
        if *c > costs[best] {
            best = k;
        }
    }
    Ok(AdversaryOutcome {
        q: costs[best],
        xi: verts[best].clone(),
        iterations: 0,
        label: format!("vertex-{best}"),
        degenerate: Vec::new(),
        zero_flow: Vec::new(),
    })
}

/// Column-and-constraint generation of deployment scenarios.
///
/// Each iteration solves the master over the current scenarios, then asks
/// the adversary for the worst error against that schedule. The loop stops
/// when the adversary finds nothing (`Q <= c_viol * slack_tol`), when its
/// value is covered by `eta` (`Q - eta <= gap_tol * max(1, |Q|)`), when
/// `m_max` scenarios are in, or when it returns a scenario already present.
pub fn ccg(
    grid: &GridModel,
    d_hat: &[f64],
    req: &ReserveRequirement,
    set: &UncertaintySet,
    cfg: &CcgConfig,
) -> Result<(DaSchedule, DeploymentScenarioSet, CcgReport), RobustError> {
    let opts = &cfg.schedule;
    let compact = build_compact_forms(grid, d_hat, opts.c_viol);
    let zero = opts.c_viol * cfg.slack_tol;
    let mut scenarios = DeploymentScenarioSet::new();
    let mut iterations = Vec::new();
    let mut degenerate_lines = Vec::new();
    let mut zero_flow_lines = Vec::new();
    for j in 0.. {
        let da = solve_master(grid, d_hat, req, &scenarios.vectors(), opts)
            .map_err(|source| RobustError::Master { iteration: j, source })?;
        let adv = match cfg.mode {
            AdversaryMode::Exact { cap } => exact_adversary(grid, &da, set, cap, opts)?,
            AdversaryMode::Adm => {
                let x = da.first_stage(grid.num_nodes());
                let r = adversary(&compact, &x, set, &da, grid, &cfg.init, &cfg.adm)?;
                AdversaryOutcome {
                    q: r.q_tilde,
                    iterations: r.best_result.iterations,
                    label: r.starts[r.best].label.clone(),
                    xi: r.xi,
                    degenerate: r.degenerate_lines,
                    zero_flow: r.zero_flow_lines,
                }
            }
        };
        for l in adv.degenerate {
            if !degenerate_lines.contains(&l) {
                degenerate_lines.push(l);
            }
        }
        for l in adv.zero_flow {
            if !zero_flow_lines.contains(&l) {
                zero_flow_lines.push(l);
            }
        }
        let gap = adv.q - da.eta;
        let mut it = CcgIteration {
            iteration: j,
            lb: da.objective,
            ub: da.da_cost + adv.q,
            eta: da.eta,
            da_cost: da.da_cost,
            q_tilde: adv.q,
            scenario_added: false,
            adm_iterations: adv.iterations,
            init: adv.label,
        };
        let stop = if adv.q <= zero {
            Some(Termination::AdversaryZero)
        } else if gap <= cfg.gap_tol * adv.q.abs().max(1.0) {
            Some(Termination::GapClosed)
        } else if scenarios.len() >= cfg.m_max {
            Some(Termination::MaxScenarios)
        } else if scenarios.contains_close(&adv.xi) {
            Some(Termination::DuplicateScenario)
        } else {
            None
        };
        if let Some(termination) = stop {
            iterations.push(it);
            degenerate_lines.sort_unstable();
            zero_flow_lines.sort_unstable();
            let report = CcgReport {
                final_gap: gap,
                termination,
                scenarios_added: scenarios.len(),
                balance_not_guaranteed: da.eta > zero,
                iterations,
                degenerate_lines,
                zero_flow_lines,
            };
            return Ok((da, scenarios, report));
        }
        let xi = if set.contains(&adv.xi, super::MEMBERSHIP_TOL) {
            adv.xi
        } else {
            set.project(&adv.xi)
        };
        it.scenario_added = scenarios.push(xi, ScenarioTag::Ccg(j + 1), set)?;
        iterations.push(it);
    }
    unreachable!("the iteration loop only exits by returning")
}

/// Master over every vertex of the uncertainty set; returns the schedule
/// and the vertices used.
pub fn solve_vertex_master(
    grid: &GridModel,
    d_hat: &[f64],
    req: &ReserveRequirement,
    set: &UncertaintySet,
    opts: &ScheduleOptions,
    cap: Option<usize>,
) -> Result<(DaSchedule, Vec<Vec<f64>>), RobustError> {
    let verts = enumerate_vertices(set, &set.uncertain_nodes(), cap.unwrap_or(DEFAULT_VERTEX_CAP))?;
    let da = solve_master(grid, d_hat, req, &verts, opts)?;
    Ok((da, verts))
}

/// Lines that are congested day-ahead or in real-time solves of `da`
/// against `errors`, most frequent first (ties by index), at most `k`.
pub fn flag_congested_lines(
    grid: &GridModel,
    da: &DaSchedule,
    errors: &[Vec<f64>],
    k: usize,
    opts: &ScheduleOptions,
) -> Result<Vec<usize>, RobustError> {
    let limits = grid.flow_limits();
    let mut counts = vec![0usize; limits.len()];
    for l in 0..limits.len() {
        if da.flows[l].abs() >= CONGESTION_RATIO * limits[l] {
            counts[l] += 1;
        }
    }
    let congested: Vec<Vec<usize>> = errors
        .par_iter()
        .map(|xi| solve_rt(grid, da, xi, opts.c_viol, &opts.lp).map(|o| o.congested))
        .collect::<Result<_, _>>()?;
    for c in congested {
        for l in c {
            counts[l] += 1;
        }
    }
    let mut lines: Vec<usize> = (0..limits.len()).filter(|&l| counts[l] > 0).collect();
    lines.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    lines.truncate(k);
    Ok(lines)
}
