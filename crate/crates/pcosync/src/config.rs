//! TOML scenario and sweep files.
//!
//! A scenario file describes one simulation; the same file with an extra
//! `[sweep]` table drives a Monte-Carlo sweep. See the README for the full
//! dialect.

use std::path::Path;

use pcosync_core::adversary::{AttackError, AttackPattern, AttackSpec};
use pcosync_core::engine::{random_initial_phases, ScenarioError};
use pcosync_core::time::ClockError;
use pcosync_core::topology::{ResilientMechanism, TopologyDescription, TopologyError};
use pcosync_core::{
    AttackSchedule, ConditionReport, MechanismKind, OscillatorId, Phase, Scenario, Tick, TickClock, Topology,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse { path: String, source: Box<toml::de::Error> },
    #[error("mechanism1 needs `n_known`")]
    MissingNetworkSize,
    #[error("conventional mechanism needs `coupling`")]
    MissingCoupling,
    #[error("`{0}` only applies to another mechanism kind")]
    UnexpectedField(&'static str),
    #[error("{count} explicit initial phases given, {expected} legitimate oscillators")]
    PhaseCount { count: usize, expected: usize },
    #[error(transparent)]
    Clock(#[from] ClockError),
    #[error("attacker ids must be distinct and below {n}")]
    BadAttackers { n: usize },
    #[error("sweep needs at least one run")]
    NoRuns,
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockConfig {
    pub ticks_per_period: u64,
    pub epsilon_ticks: u64,
}

impl Default for ClockConfig {
    fn default() -> Self {
        let c = TickClock::default();
        Self {
            ticks_per_period: c.ticks_per_period(),
            epsilon_ticks: c.epsilon_ticks(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologyConfig {
    Circle { n: usize, diameter: f64, range: f64 },
    Complete { n: usize },
    Explicit { adjacency: Vec<Vec<usize>> },
}

impl TopologyConfig {
    pub fn build(&self) -> Result<Topology, TopologyError> {
        match self {
            TopologyConfig::Circle { n, diameter, range } => Topology::from_description(&TopologyDescription::Circle {
                n: *n,
                diameter: *diameter,
                range: *range,
            }),
            TopologyConfig::Complete { n } => Topology::complete(*n),
            TopologyConfig::Explicit { adjacency } => Topology::from_adjacency(adjacency.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismName {
    Conventional,
    Mechanism1,
    Mechanism2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismConfig {
    pub kind: MechanismName,
    #[serde(default, alias = "l", skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_known: Option<usize>,
}

impl MechanismConfig {
    pub fn kind(&self) -> Result<MechanismKind, ConfigError> {
        match self.kind {
            MechanismName::Conventional => {
                if self.n_known.is_some() {
                    return Err(ConfigError::UnexpectedField("n_known"));
                }
                let coupling = self.coupling.ok_or(ConfigError::MissingCoupling)?;
                Ok(MechanismKind::Conventional { coupling })
            }
            MechanismName::Mechanism1 => {
                if self.coupling.is_some() {
                    return Err(ConfigError::UnexpectedField("coupling"));
                }
                let n_total = self.n_known.ok_or(ConfigError::MissingNetworkSize)?;
                Ok(MechanismKind::Mechanism1 { n_total })
            }
            MechanismName::Mechanism2 => {
                if self.coupling.is_some() {
                    return Err(ConfigError::UnexpectedField("coupling"));
                }
                if self.n_known.is_some() {
                    return Err(ConfigError::UnexpectedField("n_known"));
                }
                Ok(MechanismKind::Mechanism2)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PatternConfig {
    RandomBudget { total_pulses: usize, horizon_ticks: Tick },
    Periodic { period_ticks: Tick, horizon_ticks: Tick },
    Stealthy { horizon_ticks: Tick },
    Scripted { ticks: Vec<Vec<Tick>> },
}

impl PatternConfig {
    fn pattern(&self) -> AttackPattern {
        match self.clone() {
            PatternConfig::RandomBudget {
                total_pulses,
                horizon_ticks,
            } => AttackPattern::RandomBudget {
                total_pulses,
                horizon: horizon_ticks,
            },
            PatternConfig::Periodic {
                period_ticks,
                horizon_ticks,
            } => AttackPattern::Periodic {
                period: period_ticks,
                horizon: horizon_ticks,
            },
            PatternConfig::Stealthy { horizon_ticks } => AttackPattern::Stealthy { horizon: horizon_ticks },
            PatternConfig::Scripted { ticks } => AttackPattern::Scripted { ticks },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackersConfig {
    pub ids: Vec<usize>,
    pub pattern: PatternConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialPhases {
    /// Uniform on `[0, 2π]` per legitimate oscillator, drawn from the run seed.
    RandomUniform,
    /// Radians for the legitimate oscillators in ascending id order.
    Explicit { radians: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: String,
    #[serde(default = "yes")]
    pub events: bool,
    #[serde(default = "yes")]
    pub phases: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_interval_ticks: Option<Tick>,
}

fn default_out_dir() -> String {
    "out".into()
}

fn yes() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            events: true,
            phases: true,
            snapshot_interval_ticks: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepOptions {
    pub runs: u64,
    /// Run `k` uses seed `seed_base + k`; defaults to the scenario seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_base: Option<u64>,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub workers: usize,
    /// Also write one summary per run.
    #[serde(default)]
    pub per_run: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_ticks: Option<Tick>,
    #[serde(default)]
    pub clock: ClockConfig,
    pub topology: TopologyConfig,
    pub mechanism: MechanismConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attackers: Option<AttackersConfig>,
    #[serde(default = "random_uniform")]
    pub initial_phases: InitialPhases,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepOptions>,
}

fn random_uniform() -> InitialPhases {
    InitialPhases::RandomUniform
}

/// A scenario ready to run, with everything derived from the seed.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub scenario: Scenario,
    pub seed: u64,
    pub digest: String,
    pub conditions: Option<ConditionReport>,
    /// Pulses scheduled per attacker, in ascending attacker order.
    pub attack_division: Vec<(OscillatorId, usize)>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: shown.clone(),
            source,
        })?;
        Self::from_toml(&text).map_err(|source| ConfigError::Parse {
            path: shown,
            source: Box::new(source),
        })
    }

    /// Canonical TOML: fixed key order, defaults written out.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    pub fn clock(&self) -> Result<TickClock, ConfigError> {
        Ok(TickClock::new(self.clock.ticks_per_period, self.clock.epsilon_ticks)?)
    }

    pub fn horizon(&self) -> Result<Tick, ConfigError> {
        Ok(self.horizon_ticks.unwrap_or(20 * self.clock()?.ticks_per_period()))
    }

    pub fn attacker_ids(&self) -> Vec<usize> {
        self.attackers.as_ref().map(|a| a.ids.clone()).unwrap_or_default()
    }

    /// SHA-256 of the canonical form with the seed and sweep table left out,
    /// so every run of a sweep shares one digest.
    pub fn digest(&self) -> String {
        let mut bare = self.clone();
        bare.seed = 0;
        bare.sweep = None;
        hex::encode(Sha256::digest(bare.to_toml().as_bytes()))
    }

    /// Synchronization conditions for the resilient mechanisms; `None` for the
    /// conventional one.
    pub fn conditions(&self) -> Result<Option<ConditionReport>, ConfigError> {
        let topology = self.topology.build()?;
        let kind = self.mechanism.kind()?;
        Ok(match kind {
            MechanismKind::Mechanism1 { n_total } => Some(ConditionReport::evaluate(
                ResilientMechanism::Mechanism1,
                n_total,
                topology.network_degree(),
                self.attacker_ids().len(),
            )),
            MechanismKind::Mechanism2 => {
                Some(topology.validate_conditions(ResilientMechanism::Mechanism2, self.attacker_ids().len()))
            }
            MechanismKind::Conventional { .. } => None,
        })
    }

    /// Validates the file and draws phases and attack pulses from `seed`.
    ///
    /// One ChaCha8 stream per run: legitimate phases first, in ascending id
    /// order, then the attack schedule.
    pub fn prepare(&self, seed: u64) -> Result<Prepared, ConfigError> {
        let clock = self.clock()?;
        let topology = self.topology.build()?;
        let kind = self.mechanism.kind()?;
        let n = topology.len();
        let ids = self.attacker_ids();
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != ids.len() || sorted.last().is_some_and(|&i| i >= n) {
            return Err(ConfigError::BadAttackers { n });
        }
        let legit = n - ids.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phases = match &self.initial_phases {
            InitialPhases::RandomUniform => random_initial_phases(&clock, legit, &mut rng),
            InitialPhases::Explicit { radians } => {
                if radians.len() != legit {
                    return Err(ConfigError::PhaseCount {
                        count: radians.len(),
                        expected: legit,
                    });
                }
                radians
                    .iter()
                    .map(|&r| clock.rad_to_ticks(r).map(Phase))
                    .collect::<Result<_, _>>()?
            }
        };
        let schedules: Vec<AttackSchedule> = match &self.attackers {
            Some(a) if !a.ids.is_empty() => AttackSpec {
                attackers: a.ids.iter().map(|&i| OscillatorId(i)).collect(),
                pattern: a.pattern.pattern(),
            }
            .generate(&clock, &mut rng)?,
            _ => Vec::new(),
        };
        let mut attack_division: Vec<(OscillatorId, usize)> = schedules.iter().map(|s| (s.attacker, s.len())).collect();
        attack_division.sort_unstable();
        let mut scenario = Scenario::new(clock, topology, kind, schedules, phases, self.horizon()?)?;
        if let Some(interval) = self.output.snapshot_interval_ticks {
            scenario = scenario.with_snapshot_interval(interval)?;
        }
        Ok(Prepared {
            scenario,
            seed,
            digest: self.digest(),
            conditions: self.conditions()?,
            attack_division,
        })
    }
}

/// A scenario plus the sweep settings resolved against it.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub base: ScenarioConfig,
    pub runs: u64,
    pub seed_base: u64,
    pub workers: usize,
    pub per_run: bool,
}

impl SweepConfig {
    /// Uses the file's `[sweep]` table when present, else a single run.
    pub fn from_scenario(base: ScenarioConfig) -> Result<Self, ConfigError> {
        let opts = base.sweep.clone().unwrap_or(SweepOptions {
            runs: 1,
            seed_base: None,
            workers: 0,
            per_run: false,
        });
        if opts.runs == 0 {
            return Err(ConfigError::NoRuns);
        }
        Ok(Self {
            seed_base: opts.seed_base.unwrap_or(base.seed),
            runs: opts.runs,
            workers: opts.workers,
            per_run: opts.per_run,
            base,
        })
    }

    pub fn seed(&self, k: u64) -> u64 {
        self.seed_base.wrapping_add(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const KNOWN_N_ATTACKED: &str = r#"
seed = 11

[topology]
kind = "circle"
n = 24
diameter = 40.0
range = 39.0

[mechanism]
kind = "mechanism1"
n_known = 24

[attackers]
ids = [1, 8, 20]
pattern = { kind = "random_budget", total_pulses = 40, horizon_ticks = 3500000 }
"#;

    #[test]
    fn defaults_fill_in() {
        let c = ScenarioConfig::from_toml(KNOWN_N_ATTACKED).unwrap();
        assert_eq!(c.clock, ClockConfig::default());
        assert_eq!(c.horizon().unwrap(), 20_000_000);
        assert_eq!(c.initial_phases, InitialPhases::RandomUniform);
        assert_eq!(c.output, OutputConfig::default());
        let p = c.prepare(c.seed).unwrap();
        assert_eq!(p.scenario.legitimate().len(), 21);
        assert_eq!(p.attack_division.iter().map(|(_, k)| k).sum::<usize>(), 40);
        let report = p.conditions.unwrap();
        assert!(report.is_satisfied());
        assert_eq!(report.max_allowed_attackers, 3);
    }

    #[test]
    fn mechanism_fields_are_checked() {
        let m = |kind, coupling, n_known| {
            MechanismConfig {
                kind,
                coupling,
                n_known,
            }
            .kind()
        };
        assert!(matches!(
            m(MechanismName::Mechanism1, None, None),
            Err(ConfigError::MissingNetworkSize)
        ));
        assert!(matches!(
            m(MechanismName::Conventional, None, None),
            Err(ConfigError::MissingCoupling)
        ));
        assert!(matches!(
            m(MechanismName::Mechanism2, Some(0.5), None),
            Err(ConfigError::UnexpectedField("coupling"))
        ));
        assert_eq!(
            m(MechanismName::Conventional, Some(1.0), None).unwrap(),
            MechanismKind::Conventional { coupling: 1.0 }
        );
        let aliased: MechanismConfig = toml::from_str("kind = \"conventional\"\nl = 0.021").unwrap();
        assert_eq!(aliased.coupling, Some(0.021));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = KNOWN_N_ATTACKED.replace("seed = 11", "seed = 11\nsede = 3");
        assert!(ScenarioConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn bad_attackers_and_phases() {
        let mut c = ScenarioConfig::from_toml(KNOWN_N_ATTACKED).unwrap();
        c.attackers.as_mut().unwrap().ids = vec![1, 1, 8];
        assert!(matches!(c.prepare(0), Err(ConfigError::BadAttackers { n: 24 })));
        c.attackers.as_mut().unwrap().ids = vec![24];
        assert!(matches!(c.prepare(0), Err(ConfigError::BadAttackers { n: 24 })));
        c.attackers = None;
        c.initial_phases = InitialPhases::Explicit { radians: vec![0.0; 3] };
        assert!(matches!(
            c.prepare(0),
            Err(ConfigError::PhaseCount { count: 3, expected: 24 })
        ));
        c.initial_phases = InitialPhases::Explicit { radians: vec![7.0; 24] };
        assert!(matches!(c.prepare(0), Err(ConfigError::Clock(_))));
    }

    #[test]
    fn digest_ignores_seed_only() {
        let a = ScenarioConfig::from_toml(KNOWN_N_ATTACKED).unwrap();
        let mut b = a.clone();
        b.seed = 99;
        assert_eq!(a.digest(), b.digest());
        b.mechanism.n_known = Some(25);
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn sweep_seeds_follow_the_base() {
        let mut c = ScenarioConfig::from_toml(KNOWN_N_ATTACKED).unwrap();
        c.sweep = Some(SweepOptions {
            runs: 10,
            seed_base: Some(100),
            workers: 2,
            per_run: false,
        });
        let s = SweepConfig::from_scenario(c.clone()).unwrap();
        assert_eq!((s.seed(0), s.seed(9)), (100, 109));
        c.sweep.as_mut().unwrap().seed_base = None;
        assert_eq!(SweepConfig::from_scenario(c.clone()).unwrap().seed(0), 11);
        c.sweep.as_mut().unwrap().runs = 0;
        assert!(matches!(SweepConfig::from_scenario(c), Err(ConfigError::NoRuns)));
    }
}
