//! Containing arc, synchronization detection and collective period.
//!
//! All comparisons are on integer ticks: "synchronized" means identical
//! phases and identical firing ticks, with no tolerance.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use thiserror::Error;

use crate::engine::{EventLog, Record, RunOutput};
use crate::mechanism::ResetTarget;
use crate::time::{OscillatorId, Phase, Tick, TickClock};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("containing arc of an empty phase set")]
    Empty,
    #[error("collective period requested for a run that never synchronized")]
    NotSynchronized,
}

/// Post-instant phases of the legitimate oscillators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseSnapshot {
    pub tick: Tick,
    pub phases: Vec<(OscillatorId, Phase)>,
}

/// Length in ticks of the shortest arc holding every phase: the period
/// minus the largest circular gap between neighbouring phases.
pub fn containing_arc_ticks(phases: &[u64], period: u64) -> Result<u64, MetricsError> {
    if phases.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut sorted: Vec<u64> = phases.iter().map(|&p| p % period).collect();
    sorted.sort_unstable();
    let wrap_gap = sorted[0] + period - sorted[sorted.len() - 1];
    let max_gap = sorted.windows(2).map(|w| w[1] - w[0]).fold(wrap_gap, u64::max);
    Ok(period - max_gap)
}

/// [`containing_arc_ticks`] in radians.
pub fn containing_arc(clock: &TickClock, phases: &[u64]) -> Result<f64, MetricsError> {
    containing_arc_ticks(phases, clock.ticks_per_period()).map(|t| clock.ticks_to_rad(t))
}

impl PhaseSnapshot {
    pub fn arc_ticks(&self, clock: &TickClock) -> u64 {
        let raw: Vec<u64> = self.phases.iter().map(|(_, p)| p.ticks()).collect();
        containing_arc_ticks(&raw, clock.ticks_per_period()).unwrap_or(0)
    }
}

/// `(tick, arc in radians)` for every snapshot.
pub fn arc_trace(clock: &TickClock, snapshots: &[PhaseSnapshot]) -> Vec<(Tick, f64)> {
    snapshots
        .iter()
        .map(|s| (s.tick, clock.ticks_to_rad(s.arc_ticks(clock))))
        .collect()
}

/// Earliest tick `t*` at which every legitimate oscillator resets to zero
/// and after which the legitimate population stays locked: every snapshot
/// from `t*` on has a zero containing arc, and legitimate firings happen
/// exactly at `t* + kT` with every legitimate oscillator firing each time.
pub fn detect_sync(clock: &TickClock, output: &RunOutput) -> Option<Tick> {
    let legit = &output.legitimate;
    if legit.is_empty() {
        return None;
    }
    let n = legit.iter().map(|id| id.0).max().unwrap_or(0) + 1;
    let mut is_legit = alloc::vec![false; n];
    for id in legit {
        is_legit[id.0] = true;
    }
    let legit_of = |id: OscillatorId| id.0 < n && is_legit[id.0];

    // final reset target per legitimate oscillator at each tick
    let mut resets: BTreeMap<Tick, BTreeMap<usize, ResetTarget>> = BTreeMap::new();
    // legitimate firings grouped by tick
    let mut firings: BTreeMap<Tick, Vec<usize>> = BTreeMap::new();
    for record in output.log.iter() {
        match *record {
            Record::ResetToZero { id, tick } if legit_of(id) => {
                resets.entry(tick).or_default().insert(id.0, ResetTarget::Zero);
            }
            Record::ResetToPi { id, tick } if legit_of(id) => {
                resets.entry(tick).or_default().insert(id.0, ResetTarget::Pi);
            }
            Record::Fired { id, tick } if legit_of(id) => firings.entry(tick).or_default().push(id.0),
            _ => {}
        }
    }

    let last_unsynced_snapshot = output
        .snapshots
        .iter()
        .rev()
        .find(|s| s.arc_ticks(clock) != 0)
        .map(|s| s.tick);

    let period = clock.ticks_per_period();
    resets
        .iter()
        .filter(|(_, by_id)| by_id.len() == legit.len() && by_id.values().all(|&r| r == ResetTarget::Zero))
        .map(|(&tick, _)| tick)
        .filter(|&t| last_unsynced_snapshot.is_none_or(|last| last < t))
        .find(|&t| {
            let after: Vec<(&Tick, &Vec<usize>)> = firings.range(t + 1..).collect();
            let expected_rounds = (output.horizon.saturating_sub(t)) / period;
            after.len() as u64 == expected_rounds
                && after.iter().enumerate().all(|(k, (&tick, ids))| {
                    tick == t + (k as u64 + 1) * period && {
                        // each legitimate oscillator exactly once
                        let mut distinct = (*ids).clone();
                        distinct.sort_unstable();
                        distinct.dedup();
                        distinct.len() == ids.len() && ids.len() == legit.len()
                    }
                })
        })
}

/// Distinct ticks at which at least one legitimate oscillator fired, after
/// `after` (exclusive).
pub fn legit_firing_ticks(log: &EventLog, legitimate: &[OscillatorId], after: Tick) -> Vec<Tick> {
    let mut ticks: Vec<Tick> = log
        .fired()
        .filter(|&(id, tick)| tick > after && legitimate.contains(&id))
        .map(|(_, tick)| tick)
        .collect();
    ticks.dedup();
    ticks
}

/// Gaps between consecutive legitimate firing instants after `after`,
/// regardless of whether the run synchronized.
pub fn firing_gaps(log: &EventLog, legitimate: &[OscillatorId], after: Tick) -> Vec<Tick> {
    legit_firing_ticks(log, legitimate, after)
        .windows(2)
        .map(|w| w[1] - w[0])
        .collect()
}

/// Gaps between consecutive collective firing instants, starting from the
/// synchronization tick.
pub fn collective_period(
    log: &EventLog,
    legitimate: &[OscillatorId],
    sync_tick: Option<Tick>,
) -> Result<Vec<Tick>, MetricsError> {
    let start = sync_tick.ok_or(MetricsError::NotSynchronized)?;
    let mut previous = start;
    Ok(legit_firing_ticks(log, legitimate, start)
        .into_iter()
        .map(|t| {
            let gap = t - previous;
            previous = t;
            gap
        })
        .collect())
}

/// Everything derived from one completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncAnalysis {
    pub sync_tick: Option<Tick>,
    pub arc_trace: Vec<(Tick, f64)>,
    pub collective_periods: Vec<Tick>,
    /// Firing gaps over the whole run, useful when no sync was reached.
    pub firing_gaps: Vec<Tick>,
    pub final_arc_rad: f64,
}

pub fn analyze(clock: &TickClock, output: &RunOutput) -> SyncAnalysis {
    let sync_tick = detect_sync(clock, output);
    let final_raw: Vec<u64> = output.final_phases.iter().map(|(_, p)| p.ticks()).collect();
    SyncAnalysis {
        sync_tick,
        arc_trace: arc_trace(clock, &output.snapshots),
        collective_periods: collective_period(&output.log, &output.legitimate, sync_tick).unwrap_or_default(),
        firing_gaps: firing_gaps(&output.log, &output.legitimate, 0),
        final_arc_rad: containing_arc(clock, &final_raw).unwrap_or(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{PI, TAU};

    #[test]
    fn arc_examples() {
        let clock = TickClock::default();
        let t = |x: f64| clock.rad_to_ticks(x).unwrap();
        let wrap = containing_arc(&clock, &[t(0.1), t(TAU - 0.1)]).unwrap();
        assert!((wrap - 0.2).abs() < 2.0 * clock.tick_rad());
        let half = containing_arc(&clock, &[0, t(PI / 2.0), t(PI)]).unwrap();
        assert!((half - PI).abs() < 1e-12);
        assert_eq!(containing_arc_ticks(&[123, 123, 123], 1_000_000), Ok(0));
        assert_eq!(containing_arc_ticks(&[42], 1_000_000), Ok(0));
        assert_eq!(containing_arc_ticks(&[], 10), Err(MetricsError::Empty));
    }

    #[test]
    fn arc_of_evenly_spread_phases() {
        // four points a quarter apart: arc is three quarters
        assert_eq!(containing_arc_ticks(&[0, 250, 500, 750], 1000), Ok(750));
        // the top value is the same point as zero
        assert_eq!(containing_arc_ticks(&[0, 1000], 1000), Ok(0));
    }

    #[test]
    fn collective_period_needs_sync() {
        let log = EventLog::new();
        assert_eq!(collective_period(&log, &[], None), Err(MetricsError::NotSynchronized));
    }

    #[test]
    fn gaps_from_log() {
        let mut log = EventLog::new();
        for (id, tick) in [(0, 10), (1, 10), (5, 15), (0, 20), (1, 20), (0, 30)] {
            log.push(Record::Fired {
                id: OscillatorId(id),
                tick,
            });
        }
        let legit = [OscillatorId(0), OscillatorId(1)];
        assert_eq!(legit_firing_ticks(&log, &legit, 0), [10, 20, 30]);
        assert_eq!(firing_gaps(&log, &legit, 0), [10, 10]);
        assert_eq!(collective_period(&log, &legit, Some(10)).unwrap(), [10, 10]);
    }
}
