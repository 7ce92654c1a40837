//! Forecast-error scenarios, reserve requirements and the uncertainty set.
//!
//! Errors are "actual minus forecast" net demand in MW, so a positive
//! aggregate error calls for upward reserve. The uncertainty set is the
//! per-node box spanned by the scenarios intersected with the slab
//! `rho_minus <= sum(xi) <= rho_plus`.

mod io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{read_forecast_csv, read_scenarios_csv, write_forecast_csv, write_scenarios_csv};

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("no samples")]
    Empty,
    #[error("need at least 2 scenarios, got {0}")]
    TooFewScenarios(usize),
    #[error("scenario {scenario} has {got} entries, expected {expected}")]
    Dimension {
        scenario: usize,
        got: usize,
        expected: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("quantile level {0} outside (0, 1)")]
    Level(f64),
    #[error("uncertainty set is empty: aggregate range [{lo}, {hi}] after intersecting box and slab")]
    EmptySet { lo: f64, hi: f64 },
    #[error("{file}: {source}")]
    Io {
        file: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}, row {row}: {msg}")]
    Parse { file: String, row: usize, msg: String },
}

/// Quantile estimator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantileMethod {
    /// Linear interpolation between order statistics at `(K - 1) u`.
    #[default]
    Linear,
    /// Smallest sample with at least `ceil(u K)` samples at or below it.
    NearestRank,
}

/// `u`-quantile of `samples`.
pub fn empirical_quantile(samples: &[f64], u: f64, method: QuantileMethod) -> Result<f64, ForecastError> {
    if samples.is_empty() {
        return Err(ForecastError::Empty);
    }
    if !(u > 0.0 && u < 1.0) {
        return Err(ForecastError::Level(u));
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(ForecastError::NonFinite("quantile samples".into()));
    }
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&x, u, method))
}

pub(crate) fn quantile_sorted(x: &[f64], u: f64, method: QuantileMethod) -> f64 {
    let k = x.len();
    match method {
        QuantileMethod::Linear => {
            let h = (k - 1) as f64 * u;
            let lo = h.floor() as usize;
            if lo + 1 >= k {
                return x[k - 1];
            }
            let frac = h - lo as f64;
            if frac == 0.0 {
                x[lo]
            } else {
                x[lo] + frac * (x[lo + 1] - x[lo])
            }
        }
        QuantileMethod::NearestRank => {
            let rank = (u * k as f64).ceil() as usize;
            x[rank.clamp(1, k) - 1]
        }
    }
}

/// `K` forecast-error vectors over the grid nodes plus the point forecast.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    errors: Vec<Vec<f64>>,
    d_hat: Vec<f64>,
    vre: Option<Vec<f64>>,
}

impl ScenarioSet {
    pub fn new(errors: Vec<Vec<f64>>, d_hat: Vec<f64>, vre: Option<Vec<f64>>) -> Result<Self, ForecastError> {
        if errors.len() < 2 {
            return Err(ForecastError::TooFewScenarios(errors.len()));
        }
        let n = d_hat.len();
        for (k, row) in errors.iter().enumerate() {
            if row.len() != n {
                return Err(ForecastError::Dimension {
                    scenario: k,
                    got: row.len(),
                    expected: n,
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(ForecastError::NonFinite(format!("scenario {k}")));
            }
        }
        if d_hat.iter().any(|v| !v.is_finite()) {
            return Err(ForecastError::NonFinite("point forecast".into()));
        }
        if let Some(v) = &vre {
            if v.len() != n || v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(ForecastError::NonFinite("VRE forecast".into()));
            }
        }
        Ok(ScenarioSet { errors, d_hat, vre })
    }

    pub fn errors(&self) -> &[Vec<f64>] {
        &self.errors
    }

    pub fn d_hat(&self) -> &[f64] {
        &self.d_hat
    }

    pub fn vre(&self) -> Option<&[f64]> {
        self.vre.as_deref()
    }

    pub fn len(&self) -> usize {
        self.errors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn num_nodes(&self) -> usize {
        self.d_hat.len()
    }

    /// Aggregate error `1'xi_k` of every scenario.
    pub fn aggregates(&self) -> Vec<f64> {
        self.errors.iter().map(|r| r.iter().sum()).collect()
    }

    /// Errors observed at node `n` across scenarios.
    pub fn node_samples(&self, n: usize) -> Vec<f64> {
        self.errors.iter().map(|r| r[n]).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReserveRequirement {
    /// Upward requirement, MW.
    pub rho_plus: f64,
    /// Downward requirement as a signed aggregate error, MW (typically <= 0).
    pub rho_minus: f64,
    pub alpha: f64,
}

/// Central `alpha` interval of the aggregate errors.
pub fn reserve_requirements(
    scenarios: &ScenarioSet,
    alpha: f64,
    method: QuantileMethod,
) -> Result<ReserveRequirement, ForecastError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ForecastError::Level(alpha));
    }
    let mut agg = scenarios.aggregates();
    agg.sort_by(f64::total_cmp);
    Ok(ReserveRequirement {
        rho_plus: quantile_sorted(&agg, (1.0 + alpha) / 2.0, method),
        rho_minus: quantile_sorted(&agg, (1.0 - alpha) / 2.0, method),
        alpha,
    })
}

/// Box of nodal errors intersected with an aggregate slab.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncertaintySet {
    lower: Vec<f64>,
    upper: Vec<f64>,
    rho_minus: f64,
    rho_plus: f64,
}

impl UncertaintySet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, rho_minus: f64, rho_plus: f64) -> Result<Self, ForecastError> {
        if lower.len() != upper.len() {
            return Err(ForecastError::Dimension {
                scenario: 0,
                got: upper.len(),
                expected: lower.len(),
            });
        }
        if lower.iter().chain(&upper).chain([&rho_minus, &rho_plus]).any(|v| !v.is_finite()) {
            return Err(ForecastError::NonFinite("uncertainty set bounds".into()));
        }
        let box_lo: f64 = lower.iter().sum();
        let box_hi: f64 = upper.iter().sum();
        let lo = rho_minus.max(box_lo);
        let hi = rho_plus.min(box_hi);
        if lower.iter().zip(&upper).any(|(l, u)| l > u) || lo > hi {
            return Err(ForecastError::EmptySet { lo, hi });
        }
        Ok(UncertaintySet {
            lower,
            upper,
            rho_minus,
            rho_plus,
        })
    }

    /// Box from per-node scenario extremes, slab from the requirement.
    pub fn from_scenarios(scenarios: &ScenarioSet, req: &ReserveRequirement) -> Result<Self, ForecastError> {
        let n = scenarios.num_nodes();
        let mut lower = vec![f64::INFINITY; n];
        let mut upper = vec![f64::NEG_INFINITY; n];
        for row in scenarios.errors() {
            for i in 0..n {
                lower[i] = lower[i].min(row[i]);
                upper[i] = upper[i].max(row[i]);
            }
        }
        Self::new(lower, upper, req.rho_minus, req.rho_plus)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn rho_minus(&self) -> f64 {
        self.rho_minus
    }

    pub fn rho_plus(&self) -> f64 {
        self.rho_plus
    }

    /// Nodes whose box has positive width.
    pub fn uncertain_nodes(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.lower[i] < self.upper[i]).collect()
    }

    /// Effective aggregate range `[max(rho-, 1'l), min(rho+, 1'u)]`.
    pub fn aggregate_range(&self) -> (f64, f64) {
        let box_lo: f64 = self.lower.iter().sum();
        let box_hi: f64 = self.upper.iter().sum();
        (self.rho_minus.max(box_lo), self.rho_plus.min(box_hi))
    }

    pub fn contains(&self, xi: &[f64], tol: f64) -> bool {
        assert_eq!(xi.len(), self.dim(), "dimension mismatch");
        let in_box = xi
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (l, u))| *x >= l - tol && *x <= u + tol);
        let agg: f64 = xi.iter().sum();
        in_box && agg >= self.rho_minus - tol && agg <= self.rho_plus + tol
    }

    fn scale(&self) -> f64 {
        1.0 + self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| l.abs().max(u.abs()))
            .sum::<f64>()
    }

    /// Euclidean projection.
    ///
    /// Clip to the box; if the aggregate then leaves the slab, the solution is
    /// `clip(xi - lambda)` with `lambda` chosen so the aggregate sits on the
    /// violated face. `lambda` is found exactly by scanning the breakpoints
    /// of the piecewise-linear aggregate. Points already in the set (to
    /// rounding) are returned unchanged, which makes the map idempotent.
    pub fn project(&self, xi: &[f64]) -> Vec<f64> {
        assert_eq!(xi.len(), self.dim(), "dimension mismatch");
        let tol = 1e-12 * self.scale();
        if self.contains(xi, tol) {
            return xi.to_vec();
        }
        let clipped: Vec<f64> = (0..self.dim())
            .map(|i| xi[i].clamp(self.lower[i], self.upper[i]))
            .collect();
        let agg: f64 = clipped.iter().sum();
        let target = if agg > self.rho_plus {
            self.rho_plus
        } else if agg < self.rho_minus {
            self.rho_minus
        } else {
            return clipped;
        };
        let lam = self.shift_for_aggregate(xi, target);
        (0..self.dim())
            .map(|i| (xi[i] - lam).clamp(self.lower[i], self.upper[i]))
            .collect()
    }

    /// `lambda` with `sum_i clip(xi_i - lambda, l_i, u_i) = target`.
    fn shift_for_aggregate(&self, xi: &[f64], target: f64) -> f64 {
        let n = self.dim();
        let agg_at = |lam: f64| -> f64 {
            (0..n).map(|i| (xi[i] - lam).clamp(self.lower[i], self.upper[i])).sum()
        };
        let mut bps: Vec<f64> = (0..n)
            .flat_map(|i| [xi[i] - self.upper[i], xi[i] - self.lower[i]])
            .collect();
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        // The aggregate is nonincreasing in lambda; locate the bracketing pair.
        let mut hi_idx = bps.len() - 1;
        for (k, &b) in bps.iter().enumerate() {
            if agg_at(b) <= target {
                hi_idx = k;
                break;
            }
        }
        let right = bps[hi_idx];
        if hi_idx == 0 {
            return right;
        }
        let left = bps[hi_idx - 1];
        let mid = 0.5 * (left + right);
        // Between breakpoints the free coordinates move one-for-one with lambda.
        let mut fixed = 0.0;
        let mut free_sum = 0.0;
        let mut free = 0usize;
        for i in 0..n {
            let v = xi[i] - mid;
            if v <= self.lower[i] {
                fixed += self.lower[i];
            } else if v >= self.upper[i] {
                fixed += self.upper[i];
            } else {
                free_sum += xi[i];
                free += 1;
            }
        }
        if free == 0 {
            return right;
        }
        ((fixed + free_sum - target) / free as f64).clamp(left, right)
    }

    /// Maximises `w'xi` over the set as a fractional knapsack.
    ///
    /// Start at the lower box corner and raise coordinates in order of
    /// decreasing weight (ties by index): positive weights up to `rho_plus`,
    /// others only as far as needed to reach `rho_minus`.
    pub fn maximize_linear(&self, w: &[f64]) -> (Vec<f64>, f64) {
        assert_eq!(w.len(), self.dim(), "dimension mismatch");
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
        let mut xi = self.lower.clone();
        let mut agg: f64 = xi.iter().sum();
        for &i in &order {
            let width = self.upper[i] - self.lower[i];
            let room = if w[i] > 0.0 {
                self.rho_plus - agg
            } else {
                self.rho_minus - agg
            };
            let step = width.min(room.max(0.0));
            if step > 0.0 {
                xi[i] += step;
                agg += step;
            }
        }
        let value = w.iter().zip(&xi).map(|(a, b)| a * b).sum();
        (xi, value)
    }
}
