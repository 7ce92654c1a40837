use std::path::{Path, PathBuf};

use anyhow::Result;
use serde::{Deserialize, Serialize};

use resdeploy::evalsim::{EvalConfig, InitSet, Method};
use resdeploy::forecast::QuantileMethod;
use resdeploy::robust::{CcgConfig, DEFAULT_VERTEX_CAP};

use crate::fail::Fail;

/// Gaussian forecast errors on a subset of nodes, per unit of `base_mva`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub covariance: Vec<Vec<f64>>,
    /// Node ids carrying uncertainty, in covariance order.
    pub nodes: Vec<u32>,
    #[serde(default = "default_base")]
    pub base_mva: f64,
}

fn default_base() -> f64 {
    100.0
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    /// Training draws; in profile mode, replaces the profile's seed.
    pub train: Option<u64>,
    pub test: Option<u64>,
}

/// Everything a run needs. Relative paths in a config file are resolved
/// against the file's directory; relative paths given as flags against the
/// working directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Directory with `nodes.csv`, `lines.csv`, `generators.csv`, or a JSON file.
    pub grid: Option<PathBuf>,
    pub forecast: Option<PathBuf>,
    /// Training scenarios (long format).
    pub scenarios: Option<PathBuf>,
    /// Realised errors for scoring (long format).
    pub test_scenarios: Option<PathBuf>,
    /// Synthetic day in place of forecast and scenarios.
    pub profile: Option<PathBuf>,
    pub sampler: Option<SamplerConfig>,
    /// Hours taken from a profile.
    pub hours: usize,
    /// Sampled training scenarios per hour.
    pub train: usize,
    /// Sampled test realisations per hour.
    pub test: usize,
    pub seeds: Seeds,
    pub alphas: Vec<f64>,
    pub methods: Vec<Method>,
    pub c_viol: f64,
    /// Deployment scenario cap.
    pub m_max: usize,
    /// Alternating-direction iteration cap.
    pub adm_iters: usize,
    pub eps_adm: f64,
    pub gap_tol: f64,
    pub slack_tol: f64,
    pub flagged_lines: usize,
    pub presim: usize,
    pub init_set: InitSet,
    pub quantile: QuantileMethod,
    pub curtail: bool,
    pub vertex_cap: usize,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let eval = EvalConfig::default();
        RunConfig {
            grid: None,
            forecast: None,
            scenarios: None,
            test_scenarios: None,
            profile: None,
            sampler: None,
            hours: 24,
            train: 1000,
            test: 1000,
            seeds: Seeds::default(),
            alphas: vec![0.90, 0.95, 0.99],
            methods: vec![Method::Dsw, Method::Ext, Method::Ccg],
            c_viol: eval.ccg.schedule.c_viol,
            m_max: eval.ccg.m_max,
            adm_iters: eval.ccg.adm.max_iters,
            eps_adm: eval.ccg.adm.eps,
            gap_tol: eval.ccg.gap_tol,
            slack_tol: eval.slack_tol,
            flagged_lines: eval.flagged_lines,
            presim: eval.presim,
            init_set: eval.init_set,
            quantile: eval.quantile,
            curtail: eval.curtail,
            vertex_cap: DEFAULT_VERTEX_CAP,
            output: PathBuf::from("out"),
        }
    }
}

/// Manifests carry the resolved config under this key, so a manifest can be
/// fed back to `run`.
#[derive(Deserialize)]
struct ManifestEcho {
    config: RunConfig,
}

impl RunConfig {
    /// Reads TOML, or JSON when the extension is `.json`. A run manifest is
    /// accepted in place of a config.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Fail::Config(format!("cannot read config {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut cfg: RunConfig = if is_json {
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| Fail::Config(format!("{}: {e}", path.display())))?;
            let parsed = if value.get("config").is_some() {
                serde_json::from_value::<ManifestEcho>(value).map(|m| m.config)
            } else {
                serde_json::from_value(value)
            };
            parsed.map_err(|e| Fail::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| Fail::Config(format!("{}: {e}", path.display())))?
        };
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase(base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let join = |p: &mut Option<PathBuf>| {
            if let Some(q) = p {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        join(&mut self.grid);
        join(&mut self.forecast);
        join(&mut self.scenarios);
        join(&mut self.test_scenarios);
        join(&mut self.profile);
        if self.output.is_relative() {
            self.output = base.join(&self.output);
        }
    }

    /// Makes input paths absolute so the manifest echo can be replayed from
    /// anywhere.
    pub fn absolutize(&mut self) {
        let abs = |p: &mut Option<PathBuf>| {
            if let Some(q) = p {
                if let Ok(c) = std::fs::canonicalize(&*q) {
                    *q = c;
                }
            }
        };
        abs(&mut self.grid);
        abs(&mut self.forecast);
        abs(&mut self.scenarios);
        abs(&mut self.test_scenarios);
        abs(&mut self.profile);
    }

    /// Checks the numbers and that every named input exists.
    pub fn check(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.alphas.is_empty() {
            problems.push("alphas is empty".to_string());
        }
        for a in &self.alphas {
            if !(*a > 0.0 && *a < 1.0) {
                problems.push(format!("alpha {a} is outside (0, 1)"));
            }
        }
        if self.methods.is_empty() {
            problems.push("methods is empty".into());
        }
        if !(self.c_viol > 0.0) {
            problems.push(format!("c_viol must be positive, got {}", self.c_viol));
        }
        for (name, v) in [("eps_adm", self.eps_adm), ("gap_tol", self.gap_tol), ("slack_tol", self.slack_tol)] {
            if !(v >= 0.0) {
                problems.push(format!("{name} must be non-negative, got {v}"));
            }
        }
        if self.adm_iters == 0 {
            problems.push("adm_iters must be at least 1".into());
        }
        match &self.grid {
            None => problems.push("no grid given".into()),
            Some(p) if !p.exists() => problems.push(format!("grid {} does not exist", p.display())),
            _ => {}
        }
        for (name, p) in [
            ("forecast", &self.forecast),
            ("scenarios", &self.scenarios),
            ("test_scenarios", &self.test_scenarios),
            ("profile", &self.profile),
        ] {
            if let Some(p) = p {
                if !p.is_file() {
                    problems.push(format!("{name} file {} does not exist", p.display()));
                }
            }
        }
        if self.profile.is_some() {
            if self.forecast.is_some() || self.scenarios.is_some() || self.test_scenarios.is_some() {
                problems.push("profile excludes forecast, scenarios and test_scenarios".into());
            }
            if self.hours == 0 {
                problems.push("hours must be at least 1".into());
            }
        } else {
            if self.forecast.is_none() {
                problems.push("need a forecast or a profile".into());
            }
            if self.scenarios.is_none() && self.sampler.is_none() {
                problems.push("need training scenarios or a sampler".into());
            }
            if self.test_scenarios.is_none() && self.sampler.is_none() {
                problems.push("need test scenarios or a sampler".into());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Fail::Config(problems.join("; ")).into())
        }
    }

    pub fn eval_config(&self, alpha: f64) -> EvalConfig {
        let mut ccg = CcgConfig {
            m_max: self.m_max,
            gap_tol: self.gap_tol,
            slack_tol: self.slack_tol,
            ..CcgConfig::default()
        };
        ccg.adm.max_iters = self.adm_iters;
        ccg.adm.eps = self.eps_adm;
        ccg.schedule.c_viol = self.c_viol;
        EvalConfig {
            alpha,
            quantile: self.quantile,
            slack_tol: self.slack_tol,
            flagged_lines: self.flagged_lines,
            presim: self.presim,
            init_set: self.init_set,
            vertex_cap: self.vertex_cap,
            curtail: self.curtail,
            ccg,
            ..EvalConfig::default()
        }
    }

    /// Training and test seeds for sampler mode.
    pub fn sampler_seeds(&self) -> (u64, u64) {
        let train = self.seeds.train.unwrap_or(1);
        (train, self.seeds.test.unwrap_or(train + 1000))
    }
}
