//! Seeded Monte-Carlo sweeps.
//!
//! Runs are independent and may execute on any number of worker threads;
//! results are gathered by run index before aggregation, so the aggregate
//! does not depend on the worker count.

use pcosync_core::engine::SimError;
use pcosync_core::{RunOutput, Tick};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, Prepared, ScenarioConfig, SweepConfig};
use crate::output::{mechanism_name, Conditions, RunSummary};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Error)]
#[error("run with seed {seed} failed: {source}")]
pub struct SweepError {
    pub seed: u64,
    #[source]
    pub source: RunError,
}

pub fn run_one(config: &ScenarioConfig, seed: u64) -> Result<(Prepared, RunOutput), RunError> {
    let prepared = config.prepare(seed)?;
    let output = prepared.scenario.run()?;
    Ok((prepared, output))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStatus {
    pub seed: u64,
    pub synced: bool,
    pub sync_tick: Option<Tick>,
    pub final_arc_rad: f64,
    pub collective_periods: Vec<Tick>,
    pub firing_gaps: Vec<Tick>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickStats {
    pub min: Tick,
    /// Lower median for an even count.
    pub median: Tick,
    pub max: Tick,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub config_digest: String,
    pub mechanism: String,
    pub runs: u64,
    pub seed_base: u64,
    pub synced: u64,
    pub synced_fraction: f64,
    pub sync_tick: Option<TickStats>,
    pub unsynced_seeds: Vec<u64>,
    pub conditions: Option<Conditions>,
    /// True when the synchronization conditions fail for this scenario.
    pub condition_violation: bool,
    pub per_run: Vec<RunStatus>,
}

impl Aggregate {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("aggregate serializes");
        s.push('\n');
        s
    }
}

pub struct SweepResult {
    pub aggregate: Aggregate,
    /// Filled only when per-run summaries were requested.
    pub summaries: Vec<RunSummary>,
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult, SweepError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .expect("thread pool");
    let results: Vec<Result<RunSummary, SweepError>> = pool.install(|| {
        (0..cfg.runs)
            .into_par_iter()
            .map(|k| {
                let seed = cfg.seed(k);
                let (prepared, output) = run_one(&cfg.base, seed).map_err(|source| SweepError { seed, source })?;
                let mut summary = RunSummary::new(&prepared, &output);
                if !cfg.per_run {
                    summary.arc_trace = Vec::new();
                }
                Ok(summary)
            })
            .collect()
    });
    let summaries = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let aggregate = aggregate(cfg, &summaries).map_err(|source| SweepError {
        seed: cfg.seed_base,
        source,
    })?;
    Ok(SweepResult {
        aggregate,
        summaries: if cfg.per_run { summaries } else { Vec::new() },
    })
}

fn aggregate(cfg: &SweepConfig, summaries: &[RunSummary]) -> Result<Aggregate, RunError> {
    let kind = cfg.base.mechanism.kind()?;
    let conditions = cfg.base.conditions()?.as_ref().map(Conditions::from);
    let mut ticks: Vec<Tick> = summaries.iter().filter_map(|s| s.sync_tick).collect();
    ticks.sort_unstable();
    let sync_tick = (!ticks.is_empty()).then(|| TickStats {
        min: ticks[0],
        median: ticks[(ticks.len() - 1) / 2],
        max: ticks[ticks.len() - 1],
    });
    let synced = ticks.len() as u64;
    Ok(Aggregate {
        config_digest: cfg.base.digest(),
        mechanism: mechanism_name(kind),
        runs: cfg.runs,
        seed_base: cfg.seed_base,
        synced,
        synced_fraction: synced as f64 / cfg.runs as f64,
        sync_tick,
        unsynced_seeds: summaries
            .iter()
            .filter(|s| s.sync_tick.is_none())
            .map(|s| s.seed)
            .collect(),
        condition_violation: conditions.as_ref().is_some_and(|c| !c.satisfied),
        conditions,
        per_run: summaries
            .iter()
            .map(|s| RunStatus {
                seed: s.seed,
                synced: s.sync_tick.is_some(),
                sync_tick: s.sync_tick,
                final_arc_rad: s.final_arc_rad,
                collective_periods: s.collective_periods.clone(),
                firing_gaps: s.firing_gaps.clone(),
            })
            .collect(),
    })
}
