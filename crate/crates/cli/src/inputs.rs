use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use resdeploy::evalsim::{sample_scenarios, GaussianSampler, HourInput, SamplerSpec, SyntheticProfile};
use resdeploy::forecast::{read_forecast_csv, read_scenarios_csv, ScenarioSet};
use resdeploy::grid::{read_grid_csv, read_grid_json, GridModel};

use crate::config::{RunConfig, SamplerConfig};
use crate::fail::Fail;

/// A CSV directory, or a JSON file.
pub fn load_grid(path: &Path) -> Result<GridModel> {
    let grid = if path.is_dir() {
        read_grid_csv(path)
    } else {
        read_grid_json(path)
    };
    grid.with_context(|| format!("loading grid {}", path.display()))
}

pub fn node_ids(grid: &GridModel) -> Vec<u32> {
    grid.nodes().iter().map(|n| n.id).collect()
}

/// Seeds that produced one hour's draws; `None` when read from a file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HourSeeds {
    pub hour: usize,
    pub train: Option<u64>,
    pub test: Option<u64>,
}

pub fn load_profile(path: &Path, grid: &GridModel) -> Result<SyntheticProfile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let p: SyntheticProfile = serde_json::from_str(&text)
        .map_err(|e| Fail::Validation(format!("{}: {e}", path.display())))?;
    p.validate().with_context(|| format!("profile {}", path.display()))?;
    if p.load_mw.len() != grid.num_nodes() {
        return Err(Fail::Validation(format!(
            "{}: {} loads for a grid of {} nodes",
            path.display(),
            p.load_mw.len(),
            grid.num_nodes()
        ))
        .into());
    }
    Ok(p)
}

pub fn build_sampler(s: &SamplerConfig, grid: &GridModel, seed: u64) -> Result<GaussianSampler> {
    let nodes = s
        .nodes
        .iter()
        .map(|&id| {
            grid.node_index(id)
                .ok_or_else(|| Fail::Validation(format!("sampler: unknown node id {id}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let spec = SamplerSpec {
        covariance: s.covariance.clone(),
        nodes,
        num_nodes: grid.num_nodes(),
        base_mva: s.base_mva,
        seed,
    };
    Ok(GaussianSampler::from_spec(&spec).context("sampler")?)
}

/// Hourly inputs for a checked config: a profile day, or one hour built
/// from a forecast plus scenario files and/or the sampler.
pub fn load_hours(cfg: &RunConfig, grid: &GridModel) -> Result<(Vec<HourInput>, Vec<HourSeeds>)> {
    if let Some(path) = &cfg.profile {
        let mut profile = load_profile(path, grid)?;
        if let Some(s) = cfg.seeds.train {
            profile.seed = s;
        }
        let day = profile.day(cfg.hours).context("generating the synthetic day")?;
        let seeds = day
            .seeds
            .iter()
            .enumerate()
            .map(|(hour, &(a, b))| HourSeeds {
                hour,
                train: Some(a),
                test: Some(b),
            })
            .collect();
        return Ok((day.hours, seeds));
    }

    let ids = node_ids(grid);
    let fpath = cfg.forecast.as_deref().ok_or_else(|| Fail::Config("no forecast given".into()))?;
    let (d_hat, vre) = read_forecast_csv(fpath, &ids)?;
    let (train_seed, test_seed) = cfg.sampler_seeds();
    let sampler = cfg
        .sampler
        .as_ref()
        .map(|s| build_sampler(s, grid, train_seed))
        .transpose()?;
    let mut seeds = HourSeeds {
        hour: 0,
        train: None,
        test: None,
    };
    let train = match (&cfg.scenarios, &sampler) {
        (Some(p), _) => ScenarioSet::new(read_scenarios_csv(p, &ids)?, d_hat, vre)?,
        (None, Some(s)) => {
            seeds.train = Some(train_seed);
            sample_scenarios(s, cfg.train, d_hat, vre)?
        }
        (None, None) => return Err(Fail::Config("need training scenarios or a sampler".into()).into()),
    };
    let test = match (&cfg.test_scenarios, &sampler) {
        (Some(p), _) => read_scenarios_csv(p, &ids)?,
        (None, Some(s)) => {
            seeds.test = Some(test_seed);
            s.with_seed(test_seed).draw(cfg.test)
        }
        (None, None) => return Err(Fail::Config("need test scenarios or a sampler".into()).into()),
    };
    Ok((vec![HourInput { hour: 0, train, test }], vec![seeds]))
}

/// One hour: generated alone in profile mode, otherwise hour 0.
pub fn load_hour(cfg: &RunConfig, grid: &GridModel, hour: usize) -> Result<(HourInput, HourSeeds)> {
    if let Some(path) = &cfg.profile {
        let mut profile = load_profile(path, grid)?;
        if let Some(s) = cfg.seeds.train {
            profile.seed = s;
        }
        let (input, (a, b)) = profile.hour(hour)?;
        return Ok((
            input,
            HourSeeds {
                hour,
                train: Some(a),
                test: Some(b),
            },
        ));
    }
    if hour != 0 {
        return Err(Fail::Config(format!("hour {hour} requested but only a profile has more than hour 0")).into());
    }
    let (mut hours, mut seeds) = load_hours(cfg, grid)?;
    Ok((hours.remove(0), seeds.remove(0)))
}
