//! Byzantine pulse attackers.
//!
//! An attacker has no phase and ignores everything it hears. Its only
//! constraint is the channel: two consecutive pulses from the same attacker
//! are separated by strictly more than `ε`. Random, periodic and stealthy
//! attack patterns are all special cases of such a schedule.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::time::{OscillatorId, Tick, TickClock};

/// Retries allowed per conflicting tick in [`AttackPattern::RandomBudget`].
pub const RESAMPLE_LIMIT: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AttackError {
    #[error("attacker {attacker} needs {pulses} pulses but at most {capacity} fit in the horizon")]
    Infeasible {
        attacker: OscillatorId,
        pulses: usize,
        capacity: u64,
    },
    #[error("could not place a pulse for attacker {0} after {RESAMPLE_LIMIT} attempts")]
    ResampleExhausted(OscillatorId),
    #[error("schedule for attacker {0} is unsorted or has a gap of at most ε")]
    BadSchedule(OscillatorId),
    #[error("period {period} must exceed ε = {epsilon}")]
    PeriodTooShort { period: Tick, epsilon: Tick },
    #[error("scripted attack lists {lists} schedules for {attackers} attackers")]
    ScriptMismatch { lists: usize, attackers: usize },
    #[error("a random budget needs at least one attacker")]
    NoAttackers,
}

/// Pulse emission ticks of a single attacker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackSchedule {
    pub attacker: OscillatorId,
    ticks: Vec<Tick>,
}

impl AttackSchedule {
    pub fn new(attacker: OscillatorId, ticks: Vec<Tick>, clock: &TickClock) -> Result<Self, AttackError> {
        if !validate_schedule(&ticks, clock) {
            return Err(AttackError::BadSchedule(attacker));
        }
        Ok(Self { attacker, ticks })
    }

    /// A silent attacker.
    pub fn silent(attacker: OscillatorId) -> Self {
        Self {
            attacker,
            ticks: Vec::new(),
        }
    }

    pub fn ticks(&self) -> &[Tick] {
        &self.ticks
    }

    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }
}

/// True when `ticks` is strictly increasing with every gap above `ε`.
pub fn validate_schedule(ticks: &[Tick], clock: &TickClock) -> bool {
    ticks
        .windows(2)
        .all(|w| w[1] > w[0] && w[1] - w[0] > clock.epsilon_ticks())
}

/// Largest number of pulses one attacker can emit in `[0, horizon]`.
pub fn capacity(horizon: Tick, clock: &TickClock) -> u64 {
    horizon / (clock.epsilon_ticks() + 1) + 1
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttackPattern {
    /// `total_pulses` uniform draws over `[0, horizon]`, each given to a
    /// uniformly chosen attacker.
    RandomBudget { total_pulses: usize, horizon: Tick },
    /// Every attacker pulses at `0, period, 2·period, …` up to `horizon`.
    Periodic { period: Tick, horizon: Tick },
    /// At most one pulse per half period per attacker.
    Stealthy { horizon: Tick },
    /// Explicit ticks, one list per attacker in `attackers` order.
    Scripted { ticks: Vec<Vec<Tick>> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackSpec {
    pub attackers: Vec<OscillatorId>,
    pub pattern: AttackPattern,
}

impl AttackSpec {
    pub fn none() -> Self {
        Self {
            attackers: Vec::new(),
            pattern: AttackPattern::Scripted { ticks: Vec::new() },
        }
    }

    /// One schedule per attacker, in `attackers` order.
    pub fn generate<R: Rng + ?Sized>(
        &self,
        clock: &TickClock,
        rng: &mut R,
    ) -> Result<Vec<AttackSchedule>, AttackError> {
        match &self.pattern {
            AttackPattern::RandomBudget { total_pulses, horizon } => {
                random_budget(&self.attackers, *total_pulses, *horizon, clock, rng)
            }
            AttackPattern::Periodic { period, horizon } => {
                if *period <= clock.epsilon_ticks() {
                    return Err(AttackError::PeriodTooShort {
                        period: *period,
                        epsilon: clock.epsilon_ticks(),
                    });
                }
                let ticks: Vec<Tick> = (0..).map(|k| k * period).take_while(|t| t <= horizon).collect();
                Ok(self
                    .attackers
                    .iter()
                    .map(|&a| AttackSchedule {
                        attacker: a,
                        ticks: ticks.clone(),
                    })
                    .collect())
            }
            AttackPattern::Stealthy { horizon } => Ok(self
                .attackers
                .iter()
                .map(|&a| AttackSchedule {
                    attacker: a,
                    ticks: stealthy(*horizon, clock, rng),
                })
                .collect()),
            AttackPattern::Scripted { ticks } => {
                if ticks.len() != self.attackers.len() {
                    return Err(AttackError::ScriptMismatch {
                        lists: ticks.len(),
                        attackers: self.attackers.len(),
                    });
                }
                self.attackers
                    .iter()
                    .zip(ticks)
                    .map(|(&a, t)| AttackSchedule::new(a, t.clone(), clock))
                    .collect()
            }
        }
    }
}

fn random_budget<R: Rng + ?Sized>(
    attackers: &[OscillatorId],
    total: usize,
    horizon: Tick,
    clock: &TickClock,
    rng: &mut R,
) -> Result<Vec<AttackSchedule>, AttackError> {
    if attackers.is_empty() {
        return if total == 0 {
            Ok(Vec::new())
        } else {
            Err(AttackError::NoAttackers)
        };
    }
    let mut drawn: Vec<Vec<Tick>> = vec![Vec::new(); attackers.len()];
    for _ in 0..total {
        let tick = rng.gen_range(0..=horizon);
        let owner = rng.gen_range(0..attackers.len());
        drawn[owner].push(tick);
    }
    let cap = capacity(horizon, clock);
    let eps = clock.epsilon_ticks();
    let mut schedules = Vec::with_capacity(attackers.len());
    for (&attacker, ticks) in attackers.iter().zip(drawn) {
        if ticks.len() as u64 > cap {
            return Err(AttackError::Infeasible {
                attacker,
                pulses: ticks.len(),
                capacity: cap,
            });
        }
        let mut accepted: BTreeSet<Tick> = BTreeSet::new();
        let conflicts = |set: &BTreeSet<Tick>, t: Tick| {
            set.range(t.saturating_sub(eps)..=t.saturating_add(eps))
                .next()
                .is_some()
        };
        for mut tick in ticks {
            let mut attempts = 0;
            while conflicts(&accepted, tick) {
                if attempts == RESAMPLE_LIMIT {
                    return Err(AttackError::ResampleExhausted(attacker));
                }
                tick = rng.gen_range(0..=horizon);
                attempts += 1;
            }
            accepted.insert(tick);
        }
        schedules.push(AttackSchedule {
            attacker,
            ticks: accepted.into_iter().collect(),
        });
    }
    Ok(schedules)
}

/// One uniform pulse per half-period window, never closer than half a
/// period to the previous one.
fn stealthy<R: Rng + ?Sized>(horizon: Tick, clock: &TickClock, rng: &mut R) -> Vec<Tick> {
    let half = clock.half_period();
    let mut ticks: Vec<Tick> = Vec::new();
    let mut window_start = 0;
    while window_start <= horizon {
        let window_end = (window_start + half - 1).min(horizon);
        let lo = ticks.last().map_or(window_start, |&prev| window_start.max(prev + half));
        if lo <= window_end {
            ticks.push(rng.gen_range(lo..=window_end));
        }
        window_start += half;
    }
    ticks
}
