//! Linear-programming layer.
//!
//! A [`LinearProgram`] is a row-form LP with per-row relations and variable
//! bounds. Every LP in this crate (day-ahead, master, real-time and the
//! adversarial pi-step) is assembled as one of these and dispatched through
//! [`solve_lp`], which uses the bundled [`DenseSimplex`] solver. Other solvers
//! can be plugged in behind the [`LpSolver`] trait.

mod mps;
mod simplex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use mps::{read_mps, write_mps};
pub use simplex::DenseSimplex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Relation of a row `a·x` to its right-hand side.
///
/// `Range(lower)` encodes `lower <= a·x <= rhs`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
    Range(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Row {
    /// Bounds `(lower, upper)` on the row activity.
    pub fn bounds(&self) -> (f64, f64) {
        match self.relation {
            Relation::Le => (f64::NEG_INFINITY, self.rhs),
            Relation::Ge => (self.rhs, f64::INFINITY),
            Relation::Eq => (self.rhs, self.rhs),
            Relation::Range(lo) => (lo, self.rhs),
        }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum LpError {
    #[error("invalid linear program: {0}")]
    Invalid(String),
    #[error("singular basis: no usable pivot in row {row} (basic column {column})")]
    SingularBasis { row: usize, column: usize },
    #[error("numerical breakdown: {0}")]
    Numerical(&'static str),
}

/// A linear program in row form.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    sense: Sense,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            sense,
            cost: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            rows: Vec::new(),
        }
    }

    /// Adds a variable and returns its column index.
    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.cost.len() - 1
    }

    /// Adds a row and returns its index.
    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> usize {
        self.rows.push(Row {
            coeffs,
            relation,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn set_cost(&mut self, j: usize, c: f64) {
        self.cost[j] = c;
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Checks dimensions, finiteness and bound ordering.
    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        for j in 0..n {
            let (c, lo, hi) = (self.cost[j], self.lower[j], self.upper[j]);
            if !c.is_finite() {
                return Err(LpError::Invalid(format!("cost of column {j} is not finite")));
            }
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(LpError::Invalid(format!("bad bounds on column {j}")));
            }
            if lo > hi {
                return Err(LpError::Invalid(format!(
                    "column {j} has lower bound {lo} above upper bound {hi}"
                )));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::Invalid(format!("rhs of row {i} is not finite")));
            }
            if let Relation::Range(lo) = row.relation {
                if !lo.is_finite() || lo > row.rhs {
                    return Err(LpError::Invalid(format!(
                        "row {i} has range [{lo}, {}]",
                        row.rhs
                    )));
                }
            }
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(LpError::Invalid(format!(
                        "row {i} references column {j} but only {n} columns exist"
                    )));
                }
                if !a.is_finite() {
                    return Err(LpError::Invalid(format!(
                        "coefficient ({i}, {j}) is not finite"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Largest bound or row violation of `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.num_vars() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        for row in &self.rows {
            let (lo, hi) = row.bounds();
            let a = row.activity(x);
            worst = worst.max(lo - a).max(a - hi);
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pricing {
    /// Lowest-index entering and leaving variable.
    Bland,
    /// Most negative reduced cost; falls back to Bland on long degenerate runs.
    Dantzig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub pivot_tol: f64,
    /// `None` lets the solver pick a limit from the problem size.
    pub max_iters: Option<usize>,
    pub pricing: Pricing,
    pub refactor_every: usize,
    pub want_duals: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feas_tol: 1e-8,
            opt_tol: 1e-8,
            pivot_tol: 1e-9,
            max_iters: None,
            pricing: Pricing::Bland,
            refactor_every: 64,
            want_duals: false,
        }
    }
}

impl SolverOptions {
    pub fn with_duals(mut self) -> Self {
        self.want_duals = true;
        self
    }

    pub fn with_pricing(mut self, pricing: Pricing) -> Self {
        self.pricing = pricing;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub objective: f64,
    /// One multiplier per row: the rate of change of the optimal objective
    /// with respect to the row's active bound.
    pub duals: Option<Vec<f64>>,
    /// Reduced cost per structural column, same sign convention as `duals`.
    pub reduced_costs: Option<Vec<f64>>,
    /// Basic columns in standard form (structurals `0..n`, row logicals `n..n+m`).
    pub basis: Vec<usize>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Objective of the dual built from the reported multipliers.
    ///
    /// Each row multiplier is paired with the row bound its sign selects and
    /// each reduced cost with the matching variable bound. Returns `None`
    /// when no duals are present or a multiplier points at an infinite bound
    /// (dual infeasible beyond `tol`).
    pub fn dual_objective(&self, lp: &LinearProgram, tol: f64) -> Option<f64> {
        let duals = self.duals.as_ref()?;
        let rc = self.reduced_costs.as_ref()?;
        // For maximization the multipliers flip orientation.
        let flip = match lp.sense() {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut total = 0.0;
        for (row, &y) in lp.rows().iter().zip(duals) {
            let (lo, hi) = row.bounds();
            total += pair_with_bound(flip * y, lo, hi, tol)?;
        }
        for j in 0..lp.num_vars() {
            total += pair_with_bound(flip * rc[j], lp.lower()[j], lp.upper()[j], tol)?;
        }
        Some(flip * total)
    }

    /// Largest complementary-slackness violation `|y_i| * slack_i`.
    pub fn complementarity_residual(&self, lp: &LinearProgram) -> Option<f64> {
        let duals = self.duals.as_ref()?;
        let mut worst: f64 = 0.0;
        for (row, &y) in lp.rows().iter().zip(duals) {
            let (lo, hi) = row.bounds();
            let a = row.activity(&self.primal);
            let slack = (a - lo).abs().min((hi - a).abs());
            worst = worst.max(y.abs() * slack);
        }
        Some(worst)
    }
}

fn pair_with_bound(y: f64, lo: f64, hi: f64, tol: f64) -> Option<f64> {
    if y > tol {
        lo.is_finite().then_some(y * lo)
    } else if y < -tol {
        hi.is_finite().then_some(y * hi)
    } else if lo.is_finite() && hi.is_finite() {
        Some(y * if y >= 0.0 { lo } else { hi })
    } else if lo.is_finite() {
        Some(y * lo)
    } else if hi.is_finite() {
        Some(y * hi)
    } else {
        Some(0.0)
    }
}

/// A solver backend.
pub trait LpSolver: Send + Sync {
    fn solve(&self, lp: &LinearProgram, options: &SolverOptions) -> Result<LpSolution, LpError>;
}

/// Solves `lp` with the bundled dense simplex.
pub fn solve_lp(lp: &LinearProgram, options: &SolverOptions) -> Result<LpSolution, LpError> {
    DenseSimplex.solve(lp, options)
}

/// Solves `lp` and always reports row duals and reduced costs.
pub fn solve_lp_dual_values(
    lp: &LinearProgram,
    options: &SolverOptions,
) -> Result<LpSolution, LpError> {
    let opts = options.clone().with_duals();
    DenseSimplex.solve(lp, &opts)
}
