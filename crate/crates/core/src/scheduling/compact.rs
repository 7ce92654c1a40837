use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::grid::GridModel;
use crate::lp::{solve_lp, LinearProgram, LpStatus, Relation, Sense, SolverOptions};

use super::ScheduleError;

/// Origin of a row in the standardized real-time constraints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowKind {
    /// `1'p_rec <= 1'xi`
    BalanceUp,
    /// `-1'p_rec <= -1'xi`
    BalanceDown,
    /// Upper flow limit of a line.
    FlowUp(usize),
    /// Lower flow limit of a line.
    FlowDown(usize),
    /// `p_rec <= r+ + g+` for a generator.
    ReserveUp(usize),
    /// `-p_rec <= r- + g-` for a generator.
    ReserveDown(usize),
}

impl RowKind {
    /// Balance rows carry no slack.
    pub fn has_slack(self) -> bool {
        !matches!(self, RowKind::BalanceUp | RowKind::BalanceDown)
    }
}

/// Real-time constraints as `H x + D p_rec - s <= E xi + h`.
///
/// `x = (p, r+, r-, u)` has length `3|G| + |N|`; `s` is nonnegative on
/// rows with slack and fixed to zero on the two balance rows. The
/// first-stage rows that do not depend on the reserve requirement are kept
/// as `B x <= b` (balance, capacity and scheduled flow limits).
#[derive(Clone, Debug)]
pub struct CompactSecondStage {
    pub h_mat: DMatrix<f64>,
    pub d_mat: DMatrix<f64>,
    pub e_mat: DMatrix<f64>,
    pub h_vec: DVector<f64>,
    pub rows: Vec<RowKind>,
    pub b_mat: DMatrix<f64>,
    pub b_vec: DVector<f64>,
    pub c_viol: f64,
}

pub fn build_compact_forms(grid: &GridModel, d_hat: &[f64], c_viol: f64) -> CompactSecondStage {
    let n = grid.num_nodes();
    let ng = grid.num_generators();
    let nl = grid.num_lines();
    let nx = 3 * ng + n;
    let nrows = 2 + 2 * nl + 2 * ng;
    let ptdf = grid.ptdf();
    let gnode = grid.generator_nodes();
    let limits = grid.flow_limits();
    let md = grid.flows(d_hat);

    let mut h = DMatrix::zeros(nrows, nx);
    let mut d = DMatrix::zeros(nrows, ng);
    let mut e = DMatrix::zeros(nrows, n);
    let mut hv = DVector::zeros(nrows);
    let mut rows = Vec::with_capacity(nrows);

    rows.push(RowKind::BalanceUp);
    rows.push(RowKind::BalanceDown);
    for k in 0..ng {
        d[(0, k)] = 1.0;
        d[(1, k)] = -1.0;
    }
    for i in 0..n {
        e[(0, i)] = 1.0;
        e[(1, i)] = -1.0;
    }
    // Flow rows: M A (p + p_rec) - M u - M xi within +-fmax + M d.
    for l in 0..nl {
        let up = 2 + 2 * l;
        let dn = up + 1;
        rows.push(RowKind::FlowUp(l));
        rows.push(RowKind::FlowDown(l));
        for k in 0..ng {
            let a = ptdf[(l, gnode[k])];
            h[(up, k)] = a;
            h[(dn, k)] = -a;
            d[(up, k)] = a;
            d[(dn, k)] = -a;
        }
        for i in 0..n {
            h[(up, 3 * ng + i)] = -ptdf[(l, i)];
            h[(dn, 3 * ng + i)] = ptdf[(l, i)];
            e[(up, i)] = ptdf[(l, i)];
            e[(dn, i)] = -ptdf[(l, i)];
        }
        hv[up] = limits[l] + md[l];
        hv[dn] = limits[l] - md[l];
    }
    let base = 2 + 2 * nl;
    for k in 0..ng {
        let up = base + 2 * k;
        let dn = up + 1;
        rows.push(RowKind::ReserveUp(k));
        rows.push(RowKind::ReserveDown(k));
        h[(up, ng + k)] = -1.0;
        d[(up, k)] = 1.0;
        h[(dn, 2 * ng + k)] = -1.0;
        d[(dn, k)] = -1.0;
    }

    // First stage: balance (two rows), capacity (2|G|), flows (2|L|).
    let nb = 2 + 2 * ng + 2 * nl;
    let mut b = DMatrix::zeros(nb, nx);
    let mut bv = DVector::zeros(nb);
    let total: f64 = d_hat.iter().sum();
    for k in 0..ng {
        b[(0, k)] = 1.0;
        b[(1, k)] = -1.0;
    }
    for i in 0..n {
        b[(0, 3 * ng + i)] = -1.0;
        b[(1, 3 * ng + i)] = 1.0;
    }
    bv[0] = total;
    bv[1] = -total;
    for (k, g) in grid.generators().iter().enumerate() {
        let r = 2 + 2 * k;
        b[(r, k)] = 1.0;
        b[(r, ng + k)] = 1.0;
        bv[r] = g.p_max;
        b[(r + 1, k)] = -1.0;
        b[(r + 1, 2 * ng + k)] = 1.0;
        bv[r + 1] = -g.p_min;
    }
    for l in 0..nl {
        let r = 2 + 2 * ng + 2 * l;
        for c in 0..nx {
            b[(r, c)] = h[(2 + 2 * l, c)];
            b[(r + 1, c)] = h[(3 + 2 * l, c)];
        }
        bv[r] = limits[l] + md[l];
        bv[r + 1] = limits[l] - md[l];
    }

    CompactSecondStage {
        h_mat: h,
        d_mat: d,
        e_mat: e,
        h_vec: hv,
        rows,
        b_mat: b,
        b_vec: bv,
        c_viol,
    }
}

impl CompactSecondStage {
    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_first_stage(&self) -> usize {
        self.h_mat.ncols()
    }

    /// `H x - E xi - h`: the dual objective coefficients at `(x, xi)`.
    pub fn dual_coefficients(&self, x: &[f64], xi: &[f64]) -> DVector<f64> {
        let xv = DVector::from_column_slice(x);
        let xiv = DVector::from_column_slice(xi);
        &self.h_mat * xv - &self.e_mat * xiv - &self.h_vec
    }

    /// Largest violation of `B x <= b`.
    pub fn first_stage_residual(&self, x: &[f64]) -> f64 {
        let r = &self.b_mat * DVector::from_column_slice(x) - &self.b_vec;
        r.iter().fold(0.0f64, |m, v| m.max(*v))
    }

    /// Minimum violation cost at `(x, xi)` from the standardized rows.
    pub fn solve(&self, x: &[f64], xi: &[f64], opts: &SolverOptions) -> Result<f64, ScheduleError> {
        let rhs = -self.dual_coefficients(x, xi);
        let ng = self.d_mat.ncols();
        let mut lp = LinearProgram::new(Sense::Minimize);
        let prec: Vec<usize> = (0..ng)
            .map(|_| lp.add_var(0.0, f64::NEG_INFINITY, f64::INFINITY))
            .collect();
        for (i, kind) in self.rows.iter().enumerate() {
            let mut c: Vec<(usize, f64)> = (0..ng)
                .filter(|&k| self.d_mat[(i, k)] != 0.0)
                .map(|k| (prec[k], self.d_mat[(i, k)]))
                .collect();
            if kind.has_slack() {
                c.push((lp.add_var(self.c_viol, 0.0, f64::INFINITY), -1.0));
            }
            lp.add_row(c, Relation::Le, rhs[i]);
        }
        let sol = solve_lp(&lp, opts)?;
        if sol.status != LpStatus::Optimal {
            return Err(ScheduleError::Status(sol.status));
        }
        Ok(sol.objective)
    }

    /// Dual of the real-time problem at fixed `(x, xi)`:
    /// `max pi'(H x - E xi - h)` over `D'pi = 0`, `0 <= pi <= c_viol` on rows
    /// with slack and `pi >= 0` on balance rows. Returns value and `pi`.
    pub fn pi_step(&self, x: &[f64], xi: &[f64], opts: &SolverOptions) -> Result<(f64, Vec<f64>), ScheduleError> {
        let coef = self.dual_coefficients(x, xi);
        let ng = self.d_mat.ncols();
        let mut lp = LinearProgram::new(Sense::Maximize);
        let pi: Vec<usize> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, kind)| {
                let hi = if kind.has_slack() { self.c_viol } else { f64::INFINITY };
                lp.add_var(coef[i], 0.0, hi)
            })
            .collect();
        for k in 0..ng {
            let c: Vec<(usize, f64)> = (0..self.num_rows())
                .filter(|&i| self.d_mat[(i, k)] != 0.0)
                .map(|i| (pi[i], self.d_mat[(i, k)]))
                .collect();
            lp.add_row(c, Relation::Eq, 0.0);
        }
        let sol = solve_lp(&lp, opts)?;
        if sol.status != LpStatus::Optimal {
            return Err(ScheduleError::Status(sol.status));
        }
        Ok((sol.objective, sol.primal))
    }
}
