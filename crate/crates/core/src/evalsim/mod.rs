//! Out-of-sample evaluation of scheduling methods.
//!
//! For each hour the methods schedule against training scenarios, then every
//! test realisation is redispatched in real time. A realisation counts as a
//! violation when its total slack exceeds `slack_tol`; its violation cost is
//! counted only then. Statistics are kept separately for realisations inside
//! and outside the hour's uncertainty set.

mod output;
mod sampler;
mod synthetic;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forecast::{reserve_requirements, QuantileMethod, ScenarioSet, UncertaintySet};
use crate::grid::GridModel;
use crate::robust::{
    ccg, extreme_scenarios, flag_congested_lines, solve_vertex_master, CcgConfig, CcgReport, DeploymentScenarioSet,
    InitConfig, RobustError, ScenarioTag,
};
use crate::scheduling::{solve_da, solve_master, solve_rt, Curtailment, DaSchedule, ScheduleError};

pub use output::{write_outputs, OutputFiles};
pub use sampler::{sample_scenarios, GaussianSampler, SamplerSpec};
pub use synthetic::{SyntheticDay, SyntheticProfile};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("sampler: {0}")]
    Sampler(String),
    #[error(transparent)]
    Forecast(#[from] crate::forecast::ForecastError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Robust(#[from] RobustError),
    #[error("{file}: {source}")]
    Io {
        file: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Day-ahead with system-wide requirements only.
    Dsw,
    /// Master with the two extreme scenarios.
    Ext,
    /// Master with column-and-constraint generated scenarios.
    Ccg,
    /// Master with every vertex of the uncertainty set.
    Venum,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Dsw, Method::Ext, Method::Ccg, Method::Venum];

    pub fn name(self) -> &'static str {
        match self {
            Method::Dsw => "dsw",
            Method::Ext => "ext",
            Method::Ccg => "ccg",
            Method::Venum => "venum",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown method {s:?} (expected dsw, ext, ccg or venum)"))
    }
}

/// Starting points handed to the adversary.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitSet {
    /// Extreme scenarios plus line-targeted vertices for flagged lines.
    #[default]
    ExtremesAndLines,
    ExtremesOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub alpha: f64,
    pub quantile: QuantileMethod,
    /// MW of total slack above which a realisation is a violation.
    pub slack_tol: f64,
    /// Tolerance of the inside-the-set test.
    pub membership_tol: f64,
    /// Number of congested lines given line-targeted starts.
    pub flagged_lines: usize,
    /// Training scenarios redispatched under the baseline schedule to find
    /// congested lines.
    pub presim: usize,
    pub init_set: InitSet,
    pub vertex_cap: usize,
    /// Curtail VRE day-ahead when a VRE forecast is present.
    pub curtail: bool,
    pub curtailment_cost: f64,
    pub curtailment_epsilon: f64,
    /// Master, adversary and LP settings (including `c_viol`).
    pub ccg: CcgConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            alpha: 0.95,
            quantile: QuantileMethod::Linear,
            slack_tol: 1e-6,
            membership_tol: 1e-8,
            flagged_lines: 15,
            presim: 100,
            init_set: InitSet::ExtremesAndLines,
            vertex_cap: crate::robust::DEFAULT_VERTEX_CAP,
            curtail: true,
            curtailment_cost: 0.0,
            curtailment_epsilon: 1e-4,
            ccg: CcgConfig::default(),
        }
    }
}

/// Inputs of one hour.
#[derive(Clone, Debug)]
pub struct HourInput {
    pub hour: usize,
    /// Training scenarios with the point (and optional VRE) forecast.
    pub train: ScenarioSet,
    /// Realised errors.
    pub test: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RegionStats {
    pub n: usize,
    pub violations: usize,
    /// Summed violation cost of violating realisations, $/h.
    pub rt_cost_sum: f64,
}

impl RegionStats {
    pub fn add(&mut self, other: &RegionStats) {
        self.n += other.n;
        self.violations += other.violations;
        self.rt_cost_sum += other.rt_cost_sum;
    }

    /// Percent of realisations with a violation (0 when empty).
    pub fn probability_pct(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            100.0 * self.violations as f64 / self.n as f64
        }
    }

    pub fn avg_rt_cost(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.rt_cost_sum / self.n as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodHour {
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub da_cost: f64,
    pub eta: f64,
    pub up_reserve_mw: f64,
    pub down_reserve_mw: f64,
    /// Deployment scenarios in the master.
    pub scenarios: usize,
    pub inside: RegionStats,
    pub outside: RegionStats,
    #[serde(skip)]
    pub schedule: Option<DaSchedule>,
    #[serde(skip)]
    pub deployment: Option<DeploymentScenarioSet>,
    #[serde(skip)]
    pub ccg_report: Option<CcgReport>,
}

impl MethodHour {
    fn failed(method: Method, err: impl fmt::Display) -> Self {
        MethodHour {
            method,
            error: Some(err.to_string()),
            da_cost: 0.0,
            eta: 0.0,
            up_reserve_mw: 0.0,
            down_reserve_mw: 0.0,
            scenarios: 0,
            inside: RegionStats::default(),
            outside: RegionStats::default(),
            schedule: None,
            deployment: None,
            ccg_report: None,
        }
    }

    pub fn all(&self) -> RegionStats {
        let mut s = self.inside;
        s.add(&self.outside);
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HourReport {
    pub hour: usize,
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub n_test: usize,
    pub n_inside: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub methods: Vec<MethodHour>,
    #[serde(skip)]
    pub set: Option<UncertaintySet>,
}

impl HourReport {
    pub fn method(&self, m: Method) -> Option<&MethodHour> {
        self.methods.iter().find(|r| r.method == m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub n: usize,
    pub violations: usize,
    pub violation_probability_pct: f64,
    pub avg_rt_cost: f64,
}

impl From<RegionStats> for RegionSummary {
    fn from(s: RegionStats) -> Self {
        RegionSummary {
            n: s.n,
            violations: s.violations,
            violation_probability_pct: s.probability_pct(),
            avg_rt_cost: s.avg_rt_cost(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub hours_ok: usize,
    pub hours_failed: usize,
    /// Mean over successful hours, $/h.
    pub da_cost_mean: f64,
    pub inside: RegionSummary,
    pub outside: RegionSummary,
    pub all: RegionSummary,
    /// Hours per deployment-scenario count (masters with scenarios only).
    pub scenario_histogram: BTreeMap<usize, usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub alpha: f64,
    pub hours: Vec<HourReport>,
    pub summary: Vec<MethodSummary>,
}

impl EvaluationReport {
    pub fn from_hours(alpha: f64, methods: &[Method], hours: Vec<HourReport>) -> Self {
        let summary = methods.iter().map(|&m| summarize(m, &hours)).collect();
        EvaluationReport { alpha, hours, summary }
    }

    pub fn summary(&self, m: Method) -> Option<&MethodSummary> {
        self.summary.iter().find(|s| s.method == m)
    }
}

fn summarize(method: Method, hours: &[HourReport]) -> MethodSummary {
    let mut inside = RegionStats::default();
    let mut outside = RegionStats::default();
    let mut ok = 0;
    let mut failed = 0;
    let mut cost = 0.0;
    let mut histogram = BTreeMap::new();
    for h in hours {
        match h.method(method) {
            Some(r) if r.error.is_none() => {
                ok += 1;
                cost += r.da_cost;
                inside.add(&r.inside);
                outside.add(&r.outside);
                if method != Method::Dsw {
                    *histogram.entry(r.scenarios).or_insert(0) += 1;
                }
            }
            Some(_) => failed += 1,
            None => {}
        }
    }
    let mut all = inside;
    all.add(&outside);
    MethodSummary {
        method,
        hours_ok: ok,
        hours_failed: failed,
        da_cost_mean: if ok > 0 { cost / ok as f64 } else { 0.0 },
        inside: inside.into(),
        outside: outside.into(),
        all: all.into(),
        scenario_histogram: histogram,
    }
}

/// Redispatches `da` against every test error.
fn score(
    grid: &GridModel,
    da: &DaSchedule,
    test: &[Vec<f64>],
    inside: &[bool],
    cfg: &EvalConfig,
) -> Result<(RegionStats, RegionStats), ScheduleError> {
    let opts = &cfg.ccg.schedule;
    let outcomes: Vec<(f64, f64)> = test
        .par_iter()
        .map(|xi| solve_rt(grid, da, xi, opts.c_viol, &opts.lp).map(|o| (o.total_slack, o.violation_cost)))
        .collect::<Result<_, _>>()?;
    let mut stats = [RegionStats::default(); 2];
    for ((slack, cost), &is_in) in outcomes.iter().zip(inside) {
        let s = &mut stats[usize::from(!is_in)];
        s.n += 1;
        if *slack > cfg.slack_tol {
            s.violations += 1;
            s.rt_cost_sum += cost;
        }
    }
    Ok((stats[0], stats[1]))
}

/// Evaluates `methods` on one hour. The baseline day-ahead schedule is
/// always solved since the adversary's line flags come from it; failures of
/// individual methods are recorded in their entries.
pub fn evaluate_hour(grid: &GridModel, methods: &[Method], input: &HourInput, cfg: &EvalConfig) -> HourReport {
    let train = &input.train;
    let mut report = HourReport {
        hour: input.hour,
        rho_plus: 0.0,
        rho_minus: 0.0,
        n_test: input.test.len(),
        n_inside: 0,
        error: None,
        methods: Vec::new(),
        set: None,
    };
    let fail_all = |mut report: HourReport, err: String| {
        report.methods = methods.iter().map(|&m| MethodHour::failed(m, &err)).collect();
        report.error = Some(err);
        report
    };
    let req = match reserve_requirements(train, cfg.alpha, cfg.quantile) {
        Ok(r) => r,
        Err(e) => return fail_all(report, e.to_string()),
    };
    report.rho_plus = req.rho_plus;
    report.rho_minus = req.rho_minus;
    let set = match UncertaintySet::from_scenarios(train, &req) {
        Ok(s) => s,
        Err(e) => return fail_all(report, e.to_string()),
    };
    let inside: Vec<bool> = input.test.iter().map(|xi| set.contains(xi, cfg.membership_tol)).collect();
    report.n_inside = inside.iter().filter(|b| **b).count();

    let mut ccg_cfg = cfg.ccg.clone();
    ccg_cfg.slack_tol = cfg.slack_tol;
    ccg_cfg.schedule.curtailment = match (cfg.curtail, train.vre()) {
        (true, Some(v)) => Some(Curtailment {
            vre: v.to_vec(),
            cost: cfg.curtailment_cost,
            epsilon: cfg.curtailment_epsilon,
        }),
        _ => None,
    };
    let opts = &ccg_cfg.schedule;
    let d_hat = train.d_hat();

    let dsw = match solve_da(grid, d_hat, &req, opts) {
        Ok(d) => d,
        Err(e) => return fail_all(report, e.to_string()),
    };
    let ext = extreme_scenarios(train, &req, &set, cfg.quantile);

    for &m in methods {
        let planned: Result<(DaSchedule, Option<DeploymentScenarioSet>, Option<CcgReport>), EvalError> = match m {
            Method::Dsw => Ok((dsw.clone(), None, None)),
            Method::Ext => match &ext {
                Ok(e) => solve_master(grid, d_hat, &req, &e.vectors(), opts)
                    .map(|d| (d, Some(e.clone()), None))
                    .map_err(EvalError::from),
                Err(e) => Err(EvalError::Invalid(e.to_string())),
            },
            Method::Ccg => (|| {
                let presim = &train.errors()[..cfg.presim.min(train.len())];
                let lines = match cfg.init_set {
                    InitSet::ExtremesAndLines => {
                        flag_congested_lines(grid, &dsw, presim, cfg.flagged_lines, opts)?
                    }
                    InitSet::ExtremesOnly => Vec::new(),
                };
                let fixed = match &ext {
                    Ok(e) => e.vectors(),
                    Err(_) => Vec::new(),
                };
                let mut c = ccg_cfg.clone();
                c.init = InitConfig { fixed, lines };
                let (da, scen, rep) = ccg(grid, d_hat, &req, &set, &c)?;
                Ok((da, Some(scen), Some(rep)))
            })(),
            Method::Venum => (|| {
                let (da, verts) = solve_vertex_master(grid, d_hat, &req, &set, opts, Some(cfg.vertex_cap))?;
                let mut dep = DeploymentScenarioSet::new();
                for v in verts {
                    dep.push(v, ScenarioTag::VertexEnum, &set)?;
                }
                Ok((da, Some(dep), None))
            })(),
        };
        let entry = match planned {
            Ok((da, dep, rep)) => match score(grid, &da, &input.test, &inside, cfg) {
                Ok((inn, out)) => MethodHour {
                    method: m,
                    error: None,
                    da_cost: da.da_cost,
                    eta: da.eta,
                    up_reserve_mw: da.total_up_reserve(),
                    down_reserve_mw: da.total_down_reserve(),
                    scenarios: dep.as_ref().map_or(0, |d| d.len()),
                    inside: inn,
                    outside: out,
                    schedule: Some(da),
                    deployment: dep,
                    ccg_report: rep,
                },
                Err(e) => MethodHour::failed(m, e),
            },
            Err(e) => MethodHour::failed(m, e),
        };
        report.methods.push(entry);
    }
    report.set = Some(set);
    report
}

/// One-hour evaluation wrapped as a report.
pub fn evaluate(grid: &GridModel, methods: &[Method], input: &HourInput, cfg: &EvalConfig) -> EvaluationReport {
    EvaluationReport::from_hours(cfg.alpha, methods, vec![evaluate_hour(grid, methods, input, cfg)])
}

/// Evaluates every hour (in parallel) and aggregates with realisation-count
/// weights.
pub fn multi_hour_run(grid: &GridModel, hours: &[HourInput], methods: &[Method], cfg: &EvalConfig) -> EvaluationReport {
    let reports: Vec<HourReport> = hours.par_iter().map(|h| evaluate_hour(grid, methods, h, cfg)).collect();
    EvaluationReport::from_hours(cfg.alpha, methods, reports)
}
