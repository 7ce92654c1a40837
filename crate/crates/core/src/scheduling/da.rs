use std::collections::BTreeSet;

use crate::forecast::ReserveRequirement;
use crate::grid::GridModel;
use crate::lp::{solve_lp, LinearProgram, LpStatus, Relation, Sense};

use super::{flow_tol, DaSchedule, ScheduleError, ScheduleOptions};

/// Day-ahead energy and reserve schedule without deployment scenarios.
pub fn solve_da(
    grid: &GridModel,
    d_hat: &[f64],
    req: &ReserveRequirement,
    opts: &ScheduleOptions,
) -> Result<DaSchedule, ScheduleError> {
    solve_master(grid, d_hat, req, &[], opts)
}

struct Block {
    prec: Vec<usize>,
    gp: Vec<usize>,
    gm: Vec<usize>,
    lines: Vec<(usize, usize, usize)>,
}

struct Layout {
    p: Vec<usize>,
    rp: Vec<usize>,
    rm: Vec<usize>,
    u: Vec<Option<usize>>,
    eta: Option<usize>,
    blocks: Vec<Block>,
}

struct Inputs<'a> {
    grid: &'a GridModel,
    d_hat: &'a [f64],
    req: &'a ReserveRequirement,
    scenarios: &'a [Vec<f64>],
    opts: &'a ScheduleOptions,
    /// `M d` per line.
    md: Vec<f64>,
    /// `M xi` per scenario and line.
    mxi: Vec<Vec<f64>>,
}

/// Day-ahead schedule that keeps every deployment scenario servable, with
/// `eta` bounding the worst violation cost over the scenario blocks.
///
/// With no scenarios this is the plain day-ahead problem and `eta = 0`.
pub fn solve_master(
    grid: &GridModel,
    d_hat: &[f64],
    req: &ReserveRequirement,
    scenarios: &[Vec<f64>],
    opts: &ScheduleOptions,
) -> Result<DaSchedule, ScheduleError> {
    let n = grid.num_nodes();
    if d_hat.len() != n {
        return Err(ScheduleError::Dimension(format!(
            "forecast has {} entries for {n} nodes",
            d_hat.len()
        )));
    }
    if let Some(k) = scenarios.iter().position(|s| s.len() != n) {
        return Err(ScheduleError::Dimension(format!(
            "deployment scenario {k} has {} entries for {n} nodes",
            scenarios[k].len()
        )));
    }
    if let Some(c) = &opts.curtailment {
        if c.vre.len() != n {
            return Err(ScheduleError::Dimension(format!(
                "VRE forecast has {} entries for {n} nodes",
                c.vre.len()
            )));
        }
    }
    let inputs = Inputs {
        grid,
        d_hat,
        req,
        scenarios,
        opts,
        md: grid.flows(d_hat),
        mxi: scenarios.iter().map(|s| grid.flows(s)).collect(),
    };

    let limits = grid.flow_limits();
    let mut da_lines = BTreeSet::new();
    let mut blk_lines: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); scenarios.len()];
    loop {
        let (lp, layout) = build(&inputs, &da_lines, &blk_lines);
        let sol = solve_lp(&lp, &opts.lp)?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Err(diagnose(&inputs)),
            s => return Err(ScheduleError::Status(s)),
        }
        let x = &sol.primal;
        let p: Vec<f64> = layout.p.iter().map(|&j| x[j]).collect();
        let u: Vec<f64> = layout.u.iter().map(|j| j.map_or(0.0, |j| x[j])).collect();
        let mut inj = grid.nodal_generation(&p);
        for i in 0..n {
            inj[i] -= d_hat[i] + u[i];
        }
        let flows = grid.flows(&inj);

        let mut added = false;
        for (l, f) in flows.iter().enumerate() {
            if f.abs() > limits[l] + flow_tol(&opts.lp, limits[l]) && da_lines.insert(l) {
                added = true;
            }
        }
        let mut scenario_costs = Vec::with_capacity(scenarios.len());
        for (s, blk) in layout.blocks.iter().enumerate() {
            let prec: Vec<f64> = blk.prec.iter().map(|&j| x[j]).collect();
            let mut delta = grid.nodal_generation(&prec);
            for i in 0..n {
                delta[i] -= scenarios[s][i];
            }
            let shift = grid.flows(&delta);
            for l in 0..limits.len() {
                let f = flows[l] + shift[l];
                if f.abs() > limits[l] + flow_tol(&opts.lp, limits[l]) && blk_lines[s].insert(l) {
                    added = true;
                }
            }
            let slack: f64 = blk
                .gp
                .iter()
                .chain(&blk.gm)
                .chain(blk.lines.iter().flat_map(|(_, a, b)| [a, b]))
                .map(|&j| x[j])
                .sum();
            scenario_costs.push(opts.c_viol * slack);
        }
        if added {
            continue;
        }

        let eta = layout.eta.map_or(0.0, |j| x[j]);
        return Ok(DaSchedule {
            p,
            r_plus: layout.rp.iter().map(|&j| x[j]).collect(),
            r_minus: layout.rm.iter().map(|&j| x[j]).collect(),
            curtailment: opts.curtailment.as_ref().map(|_| u),
            da_cost: sol.objective - eta,
            eta,
            objective: sol.objective,
            flows,
            scenario_costs,
        });
    }
}

fn build(inp: &Inputs, da_lines: &BTreeSet<usize>, blk_lines: &[BTreeSet<usize>]) -> (LinearProgram, Layout) {
    let grid = inp.grid;
    let gens = grid.generators();
    let gnode = grid.generator_nodes();
    let ptdf = grid.ptdf();
    let limits = grid.flow_limits();
    let n = grid.num_nodes();
    let mut lp = LinearProgram::new(Sense::Minimize);

    let p: Vec<usize> = gens.iter().map(|g| lp.add_var(g.energy_cost, 0.0, g.p_max)).collect();
    let rp: Vec<usize> = gens
        .iter()
        .map(|g| lp.add_var(g.up_reserve_cost, 0.0, f64::INFINITY))
        .collect();
    let rm: Vec<usize> = gens
        .iter()
        .map(|g| lp.add_var(g.down_reserve_cost, 0.0, f64::INFINITY))
        .collect();
    let u: Vec<Option<usize>> = match &inp.opts.curtailment {
        Some(c) => (0..n)
            .map(|i| (c.vre[i] > 0.0).then(|| lp.add_var(c.cost + c.epsilon, 0.0, c.vre[i])))
            .collect(),
        None => vec![None; n],
    };

    let mut bal: Vec<(usize, f64)> = p.iter().map(|&j| (j, 1.0)).collect();
    bal.extend(u.iter().flatten().map(|&j| (j, -1.0)));
    lp.add_row(bal, Relation::Eq, inp.d_hat.iter().sum());
    lp.add_row(rp.iter().map(|&j| (j, 1.0)).collect(), Relation::Ge, inp.req.rho_plus);
    lp.add_row(rm.iter().map(|&j| (j, 1.0)).collect(), Relation::Ge, -inp.req.rho_minus);
    for (k, g) in gens.iter().enumerate() {
        lp.add_row(vec![(p[k], 1.0), (rp[k], 1.0)], Relation::Le, g.p_max);
        lp.add_row(vec![(p[k], 1.0), (rm[k], -1.0)], Relation::Ge, g.p_min);
    }

    // Injection coefficients of line `l` over (p, u).
    let line_coeffs = |l: usize, extra: &[usize]| -> Vec<(usize, f64)> {
        let mut c = Vec::with_capacity(p.len() + extra.len());
        for (k, &j) in p.iter().enumerate() {
            let a = ptdf[(l, gnode[k])];
            if a != 0.0 {
                c.push((j, a));
            }
        }
        for (k, &j) in extra.iter().enumerate() {
            let a = ptdf[(l, gnode[k])];
            if a != 0.0 {
                c.push((j, a));
            }
        }
        for (i, uj) in u.iter().enumerate() {
            if let Some(j) = uj {
                let a = ptdf[(l, i)];
                if a != 0.0 {
                    c.push((*j, -a));
                }
            }
        }
        c
    };
    for &l in da_lines {
        let c = line_coeffs(l, &[]);
        lp.add_row(c, Relation::Range(inp.md[l] - limits[l]), inp.md[l] + limits[l]);
    }

    let eta = (!inp.scenarios.is_empty()).then(|| lp.add_var(1.0, 0.0, f64::INFINITY));
    let c_viol = inp.opts.c_viol;
    let mut blocks = Vec::with_capacity(inp.scenarios.len());
    for (s, xi) in inp.scenarios.iter().enumerate() {
        let prec: Vec<usize> = gens
            .iter()
            .map(|_| lp.add_var(0.0, f64::NEG_INFINITY, f64::INFINITY))
            .collect();
        let gp: Vec<usize> = gens.iter().map(|_| lp.add_var(0.0, 0.0, f64::INFINITY)).collect();
        let gm: Vec<usize> = gens.iter().map(|_| lp.add_var(0.0, 0.0, f64::INFINITY)).collect();
        lp.add_row(prec.iter().map(|&j| (j, 1.0)).collect(), Relation::Eq, xi.iter().sum());
        for k in 0..gens.len() {
            lp.add_row(vec![(prec[k], 1.0), (rp[k], -1.0), (gp[k], -1.0)], Relation::Le, 0.0);
            lp.add_row(vec![(prec[k], -1.0), (rm[k], -1.0), (gm[k], -1.0)], Relation::Le, 0.0);
        }
        let mut lines = Vec::new();
        for &l in &blk_lines[s] {
            let lplus = lp.add_var(0.0, 0.0, f64::INFINITY);
            let lminus = lp.add_var(0.0, 0.0, f64::INFINITY);
            let mut c = line_coeffs(l, &prec);
            c.push((lplus, -1.0));
            c.push((lminus, 1.0));
            let centre = inp.md[l] + inp.mxi[s][l];
            lp.add_row(c, Relation::Range(centre - limits[l]), centre + limits[l]);
            lines.push((l, lplus, lminus));
        }
        let eta = eta.expect("eta exists with scenarios");
        let mut row = vec![(eta, 1.0)];
        row.extend(gp.iter().chain(&gm).map(|&j| (j, -c_viol)));
        row.extend(lines.iter().flat_map(|&(_, a, b)| [(a, -c_viol), (b, -c_viol)]));
        lp.add_row(row, Relation::Ge, 0.0);
        blocks.push(Block { prec, gp, gm, lines });
    }
    (lp, Layout { p, rp, rm, u, eta, blocks })
}

/// Names the side that makes the day-ahead problem infeasible.
fn diagnose(inp: &Inputs) -> ScheduleError {
    let gens = inp.grid.generators();
    let demand: f64 = inp.d_hat.iter().sum();
    let pmin: f64 = gens.iter().map(|g| g.p_min).sum();
    let pmax: f64 = gens.iter().map(|g| g.p_max).sum();
    let curtailable: f64 = inp.opts.curtailment.as_ref().map_or(0.0, |c| c.vre.iter().sum());
    let tol = inp.opts.lp.feas_tol * (1.0 + pmax);
    if demand > pmax + tol || demand + curtailable < pmin - tol {
        return ScheduleError::Energy {
            demand,
            min: pmin - curtailable,
            max: pmax,
        };
    }
    // With curtailment the dispatch can rise to `demand + curtailable`.
    let headroom = pmax - demand;
    if inp.req.rho_plus > headroom + tol {
        return ScheduleError::UpReserve {
            required: inp.req.rho_plus,
            available: headroom,
        };
    }
    let footroom = demand + curtailable - pmin;
    if -inp.req.rho_minus > footroom + tol {
        return ScheduleError::DownReserve {
            required: -inp.req.rho_minus,
            available: footroom,
        };
    }
    ScheduleError::Network
}
