use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::forecast::UncertaintySet;
use crate::grid::GridModel;
use crate::lp::SolverOptions;
use crate::scheduling::{CompactSecondStage, DaSchedule};

use super::RobustError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmConfig {
    /// Iteration limit `L`.
    pub max_iters: usize,
    /// Absolute tolerance on `UB - LB`.
    pub eps: f64,
    pub lp: SolverOptions,
}

impl Default for AdmConfig {
    fn default() -> Self {
        AdmConfig {
            max_iters: 20,
            eps: 1e-6,
            lp: SolverOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmIteration {
    /// Best dual value so far.
    pub lb: f64,
    /// Value of the error step for this iteration's multipliers.
    pub ub: f64,
    /// Dual value at `xi`; equals the real-time violation cost there.
    pub value: f64,
    /// Error at which the multipliers were computed.
    pub xi: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmResult {
    /// `(UB + LB) / 2` at return.
    pub q_tilde: f64,
    /// The error attaining `lb`.
    pub xi: Vec<f64>,
    pub lb: f64,
    pub ub: f64,
    pub history: Vec<AdmIteration>,
    pub iterations: usize,
    pub converged: bool,
}

/// Alternating maximisation of `pi'(H x - E xi - h)` over the real-time
/// dual multipliers `pi` and the error `xi`.
///
/// The multiplier step is an LP whose value is the violation cost at the
/// current error (a lower bound on the worst case); the error step is a
/// linear maximisation over the uncertainty set. `xi_init` outside the set
/// is projected first.
pub fn adm(
    compact: &CompactSecondStage,
    x: &[f64],
    set: &UncertaintySet,
    xi_init: &[f64],
    cfg: &AdmConfig,
) -> Result<AdmResult, RobustError> {
    if x.len() != compact.num_first_stage() || xi_init.len() != set.dim() {
        return Err(RobustError::Internal("adm: dimension mismatch".into()));
    }
    let mut xi = if set.contains(xi_init, 0.0) {
        xi_init.to_vec()
    } else {
        set.project(xi_init)
    };
    let hx = &compact.h_mat * nalgebra::DVector::from_column_slice(x) - &compact.h_vec;
    let mut lb = f64::NEG_INFINITY;
    let mut best = xi.clone();
    let mut ub = f64::INFINITY;
    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.max_iters.max(1) {
        let (value, pi) = compact.pi_step(x, &xi, &cfg.lp)?;
        if value > lb {
            lb = value;
            best = xi.clone();
        }
        let piv = nalgebra::DVector::from_column_slice(&pi);
        let w: Vec<f64> = (-(compact.e_mat.transpose() * &piv)).iter().copied().collect();
        let (next, wval) = set.maximize_linear(&w);
        ub = hx.dot(&piv) + wval;
        history.push(AdmIteration {
            lb,
            ub,
            value,
            xi: xi.clone(),
        });
        if ub - lb <= cfg.eps {
            converged = true;
            break;
        }
        xi = next;
    }
    Ok(AdmResult {
        q_tilde: 0.5 * (ub + lb),
        xi: best,
        lb,
        ub,
        iterations: history.len(),
        history,
        converged,
    })
}

/// Box-vertex starting point for the adversary aimed at one line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmInit {
    pub line: usize,
    /// Chosen box vertex before projection.
    pub vertex: Vec<f64>,
    /// `vertex` projected onto the uncertainty set.
    pub point: Vec<f64>,
    /// The vertex pushing the flow against its scheduled direction was larger.
    pub reversed: bool,
    /// Every PTDF entry of the line is zero.
    pub degenerate: bool,
    /// The scheduled flow is zero; its sign was taken as positive.
    pub zero_flow: bool,
}

/// `|f - m'v|`, summed in index order.
fn excursion(f: f64, row: &[f64], v: &[f64]) -> f64 {
    let mut s = 0.0;
    for j in 0..row.len() {
        s += row[j] * v[j];
    }
    (f - s).abs()
}

/// Box vertex maximising the post-error flow magnitude `|f_l - M_l xi|`.
///
/// With `s = sign(f_l)` (zero counts as positive), the vertex that pushes
/// the flow further in its scheduled direction takes the upper box bound
/// where `s M_lj < 0` and the lower bound where `s M_lj > 0`. The mirrored
/// vertex can give a larger magnitude when the box is lopsided, so both are
/// evaluated and the larger kept (ties go to the scheduled direction).
/// Zero PTDF entries take the lower bound.
pub fn adm_init_for_line(
    grid: &GridModel,
    da: &DaSchedule,
    line: usize,
    set: &UncertaintySet,
) -> Result<AdmInit, RobustError> {
    if line >= grid.num_lines() || line >= da.flows.len() {
        return Err(RobustError::UnknownLine(line));
    }
    let n = grid.num_nodes();
    let row: Vec<f64> = (0..n).map(|j| grid.ptdf()[(line, j)]).collect();
    let f = da.flows[line];
    let s = if f < 0.0 { -1.0 } else { 1.0 };
    let (lo, hi) = (set.lower(), set.upper());
    let same: Vec<f64> = (0..n)
        .map(|j| if s * row[j] < 0.0 { hi[j] } else { lo[j] })
        .collect();
    let mirrored: Vec<f64> = (0..n)
        .map(|j| if s * row[j] > 0.0 { hi[j] } else { lo[j] })
        .collect();
    let reversed = excursion(f, &row, &mirrored) > excursion(f, &row, &same);
    let vertex = if reversed { mirrored } else { same };
    Ok(AdmInit {
        line,
        point: set.project(&vertex),
        vertex,
        reversed,
        degenerate: row.iter().all(|v| *v == 0.0),
        zero_flow: f == 0.0,
    })
}

/// Starting points for the adversary: fixed errors (typically the extreme
/// scenarios) followed by one line-targeted vertex per listed line.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InitConfig {
    pub fixed: Vec<Vec<f64>>,
    pub lines: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartSummary {
    /// `fixed-<i>` or `line-<id>`.
    pub label: String,
    pub q_tilde: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversaryResult {
    pub q_tilde: f64,
    pub xi: Vec<f64>,
    /// Index into `starts` of the winning start.
    pub best: usize,
    pub starts: Vec<StartSummary>,
    pub best_result: AdmResult,
    /// Lines whose PTDF row is zero.
    pub degenerate_lines: Vec<usize>,
    /// Lines with zero scheduled flow.
    pub zero_flow_lines: Vec<usize>,
}

/// Runs [`adm`] from every start in parallel and keeps the highest
/// estimate (first start wins ties).
pub fn adversary(
    compact: &CompactSecondStage,
    x: &[f64],
    set: &UncertaintySet,
    da: &DaSchedule,
    grid: &GridModel,
    init: &InitConfig,
    cfg: &AdmConfig,
) -> Result<AdversaryResult, RobustError> {
    let mut starts: Vec<(String, Vec<f64>)> = Vec::new();
    for (i, xi) in init.fixed.iter().enumerate() {
        starts.push((format!("fixed-{i}"), set.project(xi)));
    }
    let mut degenerate_lines = Vec::new();
    let mut zero_flow_lines = Vec::new();
    for &l in &init.lines {
        let p = adm_init_for_line(grid, da, l, set)?;
        if p.degenerate {
            degenerate_lines.push(l);
        }
        if p.zero_flow {
            zero_flow_lines.push(l);
        }
        starts.push((format!("line-{}", grid.lines()[l].id), p.point));
    }
    if starts.is_empty() {
        starts.push(("origin".into(), set.project(&vec![0.0; set.dim()])));
    }
    let results: Vec<AdmResult> = starts
        .par_iter()
        .map(|(_, xi)| adm(compact, x, set, xi, cfg))
        .collect::<Result<_, _>>()?;
    let mut best = 0;
    for (k, r) in results.iter().enumerate() {
        if r.q_tilde > results[best].q_tilde {
            best = k;
        }
    }
    let summaries = starts
        .iter()
        .zip(&results)
        .map(|((label, _), r)| StartSummary {
            label: label.clone(),
            q_tilde: r.q_tilde,
            iterations: r.iterations,
            converged: r.converged,
        })
        .collect();
    let best_result = results[best].clone();
    Ok(AdversaryResult {
        q_tilde: best_result.q_tilde,
        xi: best_result.xi.clone(),
        best,
        starts: summaries,
        best_result,
        degenerate_lines,
        zero_flow_lines,
    })
}
