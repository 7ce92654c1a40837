use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::sampler::{sample_scenarios, GaussianSampler};
use super::{EvalError, HourInput};

/// Synthetic hourly forecasts and errors for grids without forecast data.
///
/// Hour `h` has net demand `load_i * s(h) - vre_i(h)` where `s` is a daily
/// load shape and `vre_i(h) = capacity_i * cf_i(h)`. Errors are Gaussian on
/// the VRE nodes with standard deviation `sigma_frac * vre_i(h)` and a common
/// pairwise correlation. Training and test draws use independent seeds:
/// `seed + 2h` and `seed + 2h + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticProfile {
    /// Base load per node, MW.
    pub load_mw: Vec<f64>,
    /// Node positions carrying VRE.
    pub vre_nodes: Vec<usize>,
    pub vre_capacity_mw: Vec<f64>,
    pub sigma_frac: f64,
    pub correlation: f64,
    pub train: usize,
    pub test: usize,
    pub seed: u64,
}

/// Generated hours.
#[derive(Clone, Debug)]
pub struct SyntheticDay {
    pub hours: Vec<HourInput>,
    /// `(train_seed, test_seed)` per hour.
    pub seeds: Vec<(u64, u64)>,
}

fn load_shape(h: usize) -> f64 {
    let t = 2.0 * std::f64::consts::PI * (h as f64 - 17.0) / 24.0;
    0.8 + 0.2 * t.cos()
}

fn capacity_factor(h: usize, k: usize) -> f64 {
    let phase = 0.7 * k as f64;
    let t = 2.0 * std::f64::consts::PI * h as f64 / 24.0 + phase;
    0.45 + 0.25 * t.cos()
}

impl SyntheticProfile {
    pub fn validate(&self) -> Result<(), EvalError> {
        let n = self.load_mw.len();
        if self.vre_nodes.len() != self.vre_capacity_mw.len() {
            return Err(EvalError::Invalid("vre_nodes and vre_capacity_mw differ in length".into()));
        }
        if self.vre_nodes.iter().any(|&i| i >= n) {
            return Err(EvalError::Invalid("VRE node out of range".into()));
        }
        if !(-1.0..=1.0).contains(&self.correlation) || !(self.sigma_frac >= 0.0) {
            return Err(EvalError::Invalid("correlation must lie in [-1, 1] and sigma_frac be >= 0".into()));
        }
        if self.train < 2 || self.test < 1 {
            return Err(EvalError::Invalid("need at least 2 training and 1 test scenario".into()));
        }
        Ok(())
    }

    /// Point forecast and VRE forecast of hour `h`.
    pub fn forecast(&self, h: usize) -> (Vec<f64>, Vec<f64>) {
        let mut vre = vec![0.0; self.load_mw.len()];
        for (k, (&i, &cap)) in self.vre_nodes.iter().zip(&self.vre_capacity_mw).enumerate() {
            vre[i] += cap * capacity_factor(h, k);
        }
        let d_hat = self.load_mw.iter().zip(&vre).map(|(l, v)| l * load_shape(h) - v).collect();
        (d_hat, vre)
    }

    fn sampler(&self, vre: &[f64], seed: u64) -> Result<GaussianSampler, EvalError> {
        let sd: Vec<f64> = self.vre_nodes.iter().map(|&i| self.sigma_frac * vre[i]).collect();
        let d = sd.len();
        let cov = DMatrix::from_fn(d, d, |a, b| {
            let r = if a == b { 1.0 } else { self.correlation };
            r * sd[a] * sd[b]
        });
        GaussianSampler::new(cov, self.vre_nodes.clone(), self.load_mw.len(), 1.0, seed)
    }

    pub fn hour(&self, h: usize) -> Result<(HourInput, (u64, u64)), EvalError> {
        self.validate()?;
        let (d_hat, vre) = self.forecast(h);
        let seeds = (
            self.seed.wrapping_add(2 * h as u64),
            self.seed.wrapping_add(2 * h as u64 + 1),
        );
        let sampler = self.sampler(&vre, seeds.0)?;
        let train = sample_scenarios(&sampler, self.train, d_hat, Some(vre))?;
        let test = sampler.with_seed(seeds.1).draw(self.test);
        Ok((HourInput { hour: h, train, test }, seeds))
    }

    pub fn day(&self, hours: usize) -> Result<SyntheticDay, EvalError> {
        let mut day = SyntheticDay {
            hours: Vec::with_capacity(hours),
            seeds: Vec::with_capacity(hours),
        };
        for h in 0..hours {
            let (input, seeds) = self.hour(h)?;
            day.hours.push(input);
            day.seeds.push(seeds);
        }
        Ok(day)
    }
}
