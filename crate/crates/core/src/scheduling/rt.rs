use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::grid::GridModel;
use crate::lp::{solve_lp, LinearProgram, LpStatus, Relation, Sense, SolverOptions};

use super::{flow_tol, DaSchedule, ScheduleError, CONGESTION_RATIO};

/// Real-time redispatch against one realised error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RtOutcome {
    /// Signed recourse per generator, MW.
    #[serde(rename = "p_rec_mw")]
    pub p_rec: Vec<f64>,
    /// Recourse beyond procured upward reserve, MW.
    #[serde(rename = "g_plus_mw")]
    pub g_plus: Vec<f64>,
    #[serde(rename = "g_minus_mw")]
    pub g_minus: Vec<f64>,
    /// Overload in the line direction, MW.
    #[serde(rename = "l_plus_mw")]
    pub l_plus: Vec<f64>,
    #[serde(rename = "l_minus_mw")]
    pub l_minus: Vec<f64>,
    /// Sum of all slacks, MW.
    pub total_slack: f64,
    /// `c_viol` times the total slack, $/h.
    pub violation_cost: f64,
    /// Post-recourse flows before overload slack, MW.
    #[serde(rename = "flows_mw")]
    pub flows: Vec<f64>,
    /// Lines loaded to at least 99% of their limit.
    pub congested: Vec<usize>,
}

/// Solves the real-time problem for schedule `da` and error `xi0`.
///
/// Recourse `p_rec = q + g+ - g-` with `-r- <= q <= r+`; this is the same
/// feasible set as bounding `p_rec` by the reserves plus slack. Line rows are
/// added lazily, starting from the lines already congested day-ahead. Slack
/// entries below the feasibility tolerance are reported as zero.
pub fn solve_rt(
    grid: &GridModel,
    da: &DaSchedule,
    xi0: &[f64],
    c_viol: f64,
    opts: &SolverOptions,
) -> Result<RtOutcome, ScheduleError> {
    let n = grid.num_nodes();
    let ng = grid.num_generators();
    if xi0.len() != n {
        return Err(ScheduleError::Dimension(format!("error has {} entries for {n} nodes", xi0.len())));
    }
    if da.p.len() != ng || da.flows.len() != grid.num_lines() {
        return Err(ScheduleError::Dimension("schedule does not match the grid".into()));
    }
    let limits = grid.flow_limits();
    let gnode = grid.generator_nodes();
    let ptdf = grid.ptdf();
    let mxi = grid.flows(xi0);
    let mut active: BTreeSet<usize> = (0..limits.len())
        .filter(|&l| da.flows[l].abs() >= CONGESTION_RATIO * limits[l])
        .collect();
    let agg: f64 = xi0.iter().sum();

    loop {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let q: Vec<usize> = (0..ng)
            .map(|k| lp.add_var(0.0, -da.r_minus[k].max(0.0), da.r_plus[k].max(0.0)))
            .collect();
        let gp: Vec<usize> = (0..ng).map(|_| lp.add_var(c_viol, 0.0, f64::INFINITY)).collect();
        let gm: Vec<usize> = (0..ng).map(|_| lp.add_var(c_viol, 0.0, f64::INFINITY)).collect();
        let mut bal = Vec::with_capacity(3 * ng);
        for k in 0..ng {
            bal.extend([(q[k], 1.0), (gp[k], 1.0), (gm[k], -1.0)]);
        }
        lp.add_row(bal, Relation::Eq, agg);
        let mut lcols = Vec::with_capacity(active.len());
        for &l in &active {
            let lplus = lp.add_var(c_viol, 0.0, f64::INFINITY);
            let lminus = lp.add_var(c_viol, 0.0, f64::INFINITY);
            let mut c = Vec::with_capacity(3 * ng + 2);
            for k in 0..ng {
                let a = ptdf[(l, gnode[k])];
                if a != 0.0 {
                    c.extend([(q[k], a), (gp[k], a), (gm[k], -a)]);
                }
            }
            c.push((lplus, -1.0));
            c.push((lminus, 1.0));
            let centre = mxi[l] - da.flows[l];
            lp.add_row(c, Relation::Range(centre - limits[l]), centre + limits[l]);
            lcols.push((l, lplus, lminus));
        }
        let sol = solve_lp(&lp, opts)?;
        if sol.status != LpStatus::Optimal {
            return Err(ScheduleError::Status(sol.status));
        }
        let x = &sol.primal;
        let clean = |v: f64| if v > opts.feas_tol { v } else { 0.0 };
        let g_plus: Vec<f64> = gp.iter().map(|&j| clean(x[j])).collect();
        let g_minus: Vec<f64> = gm.iter().map(|&j| clean(x[j])).collect();
        let p_rec: Vec<f64> = (0..ng).map(|k| x[q[k]] + x[gp[k]] - x[gm[k]]).collect();
        let mut delta = grid.nodal_generation(&p_rec);
        for i in 0..n {
            delta[i] -= xi0[i];
        }
        let shift = grid.flows(&delta);
        let flows: Vec<f64> = (0..limits.len()).map(|l| da.flows[l] + shift[l]).collect();

        let mut l_plus = vec![0.0; limits.len()];
        let mut l_minus = vec![0.0; limits.len()];
        for &(l, a, b) in &lcols {
            l_plus[l] = clean(x[a]);
            l_minus[l] = clean(x[b]);
        }
        let mut added = false;
        for l in 0..limits.len() {
            if !active.contains(&l) && flows[l].abs() > limits[l] + flow_tol(opts, limits[l]) {
                active.insert(l);
                added = true;
            }
        }
        if added {
            continue;
        }
        let total_slack: f64 = g_plus.iter().chain(&g_minus).chain(&l_plus).chain(&l_minus).sum();
        let congested = (0..limits.len())
            .filter(|&l| flows[l].abs() >= CONGESTION_RATIO * limits[l])
            .collect();
        return Ok(RtOutcome {
            p_rec,
            g_plus,
            g_minus,
            l_plus,
            l_minus,
            total_slack,
            violation_cost: c_viol * total_slack,
            flows,
            congested,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::two_bus;

    fn schedule(flow: f64) -> DaSchedule {
        DaSchedule {
            p: vec![150.0, 0.0],
            r_plus: vec![60.0, 0.0],
            r_minus: vec![0.0, 0.0],
            curtailment: None,
            da_cost: 0.0,
            eta: 0.0,
            objective: 0.0,
            flows: vec![flow],
            scenario_costs: vec![],
        }
    }

    #[test]
    fn lazily_added_line_catches_overload() {
        let g = two_bus(200.0);
        let rt = solve_rt(&g, &schedule(150.0), &[0.0, 60.0], 1000.0, &SolverOptions::default()).unwrap();
        assert!((rt.total_slack - 10.0).abs() < 1e-7, "{}", rt.total_slack);
        assert!((rt.violation_cost - 10_000.0).abs() < 1e-4);
        let rt = solve_rt(&g, &schedule(150.0), &[0.0, 45.0], 1000.0, &SolverOptions::default()).unwrap();
        assert_eq!(rt.total_slack, 0.0);
        assert!(rt.congested.is_empty());
    }

    #[test]
    fn dimensions_are_checked() {
        let g = two_bus(200.0);
        let e = solve_rt(&g, &schedule(150.0), &[0.0], 1000.0, &SolverOptions::default()).unwrap_err();
        assert!(matches!(e, ScheduleError::Dimension(_)));
        let mut bad = schedule(150.0);
        bad.flows.clear();
        assert!(solve_rt(&g, &bad, &[0.0, 1.0], 1000.0, &SolverOptions::default()).is_err());
    }
}
