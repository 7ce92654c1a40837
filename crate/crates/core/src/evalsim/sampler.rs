use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::forecast::{ForecastError, ScenarioSet};

use super::EvalError;

/// Zero-mean Gaussian errors on a subset of nodes.
///
/// Draws are `base_mva * L z` with `L L' = cov` (Cholesky, or an eigen
/// square root when `cov` is only semi-definite) and `z` standard normal
/// from a ChaCha8 stream seeded with `seed`.
#[derive(Clone, Debug)]
pub struct GaussianSampler {
    cov: DMatrix<f64>,
    factor: DMatrix<f64>,
    nodes: Vec<usize>,
    num_nodes: usize,
    base_mva: f64,
    seed: u64,
}

/// Serializable sampler description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    /// Row-major covariance in per unit squared.
    pub covariance: Vec<Vec<f64>>,
    /// Node positions the covariance dimensions map to.
    pub nodes: Vec<usize>,
    pub num_nodes: usize,
    pub base_mva: f64,
    pub seed: u64,
}

impl GaussianSampler {
    pub fn new(cov: DMatrix<f64>, nodes: Vec<usize>, num_nodes: usize, base_mva: f64, seed: u64) -> Result<Self, EvalError> {
        let d = nodes.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(EvalError::Sampler(format!(
                "covariance is {}x{} for {d} nodes",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if nodes.iter().any(|&n| n >= num_nodes) {
            return Err(EvalError::Sampler("sampler node out of range".into()));
        }
        if cov.iter().any(|v| !v.is_finite()) || !(base_mva > 0.0) {
            return Err(EvalError::Sampler("non-finite covariance or base power".into()));
        }
        let scale = cov.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        for i in 0..d {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 * scale {
                    return Err(EvalError::Sampler("covariance is not symmetric".into()));
                }
            }
        }
        let factor = match cov.clone().cholesky() {
            Some(c) => c.l(),
            None => {
                let eig = cov.clone().symmetric_eigen();
                if eig.eigenvalues.iter().any(|&l| l < -1e-10 * scale) {
                    return Err(EvalError::Sampler("covariance is not positive semi-definite".into()));
                }
                let sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
                &eig.eigenvectors * sqrt
            }
        };
        Ok(GaussianSampler {
            cov,
            factor,
            nodes,
            num_nodes,
            base_mva,
            seed,
        })
    }

    pub fn from_spec(spec: &SamplerSpec) -> Result<Self, EvalError> {
        let d = spec.covariance.len();
        if spec.covariance.iter().any(|r| r.len() != d) {
            return Err(EvalError::Sampler("covariance must be square".into()));
        }
        let cov = DMatrix::from_fn(d, d, |i, j| spec.covariance[i][j]);
        Self::new(cov, spec.nodes.clone(), spec.num_nodes, spec.base_mva, spec.seed)
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        GaussianSampler { seed, ..self.clone() }
    }

    /// `k` error vectors of full node length, MW.
    pub fn draw(&self, k: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let d = self.nodes.len();
        let mut z = vec![0.0; d];
        (0..k)
            .map(|_| {
                for v in z.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                let mut xi = vec![0.0; self.num_nodes];
                for (r, &node) in self.nodes.iter().enumerate() {
                    let mut s = 0.0;
                    for c in 0..d {
                        s += self.factor[(r, c)] * z[c];
                    }
                    xi[node] = self.base_mva * s;
                }
                xi
            })
            .collect()
    }
}

/// `k` scenarios around the point forecast `d_hat`.
pub fn sample_scenarios(
    sampler: &GaussianSampler,
    k: usize,
    d_hat: Vec<f64>,
    vre: Option<Vec<f64>>,
) -> Result<ScenarioSet, ForecastError> {
    ScenarioSet::new(sampler.draw(k), d_hat, vre)
}
