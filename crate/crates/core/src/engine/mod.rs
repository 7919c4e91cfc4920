//! Event-driven simulation kernel.
//!
//! Time advances from one event instant to the next. Two kinds of events are
//! queued: a legitimate oscillator's phase reaching `2π` and an attacker's
//! scheduled pulse. Pulses propagate with zero delay, so everything that
//! happens at one tick is resolved to a fixpoint before time moves on:
//!
//! 1. all queued events at the tick are taken in queue order (attacker
//!    pulses first, then phase wraps, each by ascending oscillator index);
//! 2. every emission enqueues one delivery per out-neighbour in ascending
//!    receiver order, each with a fresh global sequence number;
//! 3. deliveries are processed one at a time in sequence order; a shift to
//!    `2π` runs the top-of-cycle rule immediately, which may fire and enqueue
//!    further deliveries;
//! 4. the loop ends when no work is left at the tick.
//!
//! Simultaneous pulses are never merged: each is logged and counted on its
//! own.

mod log;
mod state;

use alloc::collections::{BinaryHeap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use rand::Rng;
use thiserror::Error;

pub use self::log::{EventLog, Record};
pub use self::state::OscillatorState;
use crate::adversary::{validate_schedule, AttackSchedule};
use crate::mechanism::{Mechanism, MechanismError, MechanismKind, PulseAction, ResetTarget};
use crate::metrics::PhaseSnapshot;
use crate::time::{OscillatorId, Phase, Tick, TickClock};
use crate::topology::Topology;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("attacker id {id} out of range for {n} nodes")]
    AttackerOutOfRange { id: OscillatorId, n: usize },
    #[error("attacker {0} listed twice")]
    DuplicateAttacker(OscillatorId),
    #[error("expected {expected} initial phases for legitimate oscillators, got {got}")]
    PhaseCount { expected: usize, got: usize },
    #[error("initial phase {0} ticks exceeds one period")]
    PhaseOutOfRange(u64),
    #[error("attack schedule for {0} violates the ε separation")]
    BadSchedule(OscillatorId),
    #[error("snapshot interval must be positive")]
    ZeroSnapshotInterval,
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("cascade at tick {tick} exceeded {limit} top-of-cycle steps")]
    CascadeOverflow { tick: Tick, limit: usize },
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
}

/// A fully resolved simulation input.
#[derive(Debug, Clone)]
pub struct Scenario {
    clock: TickClock,
    topology: Topology,
    kind: MechanismKind,
    mechanisms: Vec<Mechanism>,
    attackers: Vec<AttackSchedule>,
    is_attacker: Vec<bool>,
    initial_phases: Vec<Option<Phase>>,
    horizon: Tick,
    snapshot_interval: Tick,
    cascade_limit: Option<usize>,
}

impl Scenario {
    /// `legit_phases` lists the initial phases of the legitimate oscillators
    /// in ascending id order. Every node gets the mechanism instantiated with
    /// its own degree.
    pub fn new(
        clock: TickClock,
        topology: Topology,
        kind: MechanismKind,
        attackers: Vec<AttackSchedule>,
        legit_phases: Vec<Phase>,
        horizon: Tick,
    ) -> Result<Self, ScenarioError> {
        let n = topology.len();
        let mut is_attacker = vec![false; n];
        for s in &attackers {
            if s.attacker.0 >= n {
                return Err(ScenarioError::AttackerOutOfRange { id: s.attacker, n });
            }
            if is_attacker[s.attacker.0] {
                return Err(ScenarioError::DuplicateAttacker(s.attacker));
            }
            if !validate_schedule(s.ticks(), &clock) {
                return Err(ScenarioError::BadSchedule(s.attacker));
            }
            is_attacker[s.attacker.0] = true;
        }
        let legit_count = n - attackers.len();
        if legit_phases.len() != legit_count {
            return Err(ScenarioError::PhaseCount {
                expected: legit_count,
                got: legit_phases.len(),
            });
        }
        if let Some(bad) = legit_phases.iter().find(|p| p.ticks() > clock.ticks_per_period()) {
            return Err(ScenarioError::PhaseOutOfRange(bad.ticks()));
        }
        let mut phases = legit_phases.into_iter();
        let initial_phases = is_attacker
            .iter()
            .map(|&a| if a { None } else { phases.next() })
            .collect();
        let mechanisms = (0..n)
            .map(|i| kind.instantiate(topology.degree(i)))
            .collect::<Result<Vec<_>, _>>()?;
        let mut attackers = attackers;
        attackers.sort_by_key(|s| s.attacker);
        Ok(Self {
            clock,
            topology,
            kind,
            mechanisms,
            attackers,
            is_attacker,
            initial_phases,
            horizon,
            snapshot_interval: (clock.ticks_per_period() / 100).max(1),
            cascade_limit: None,
        })
    }

    /// Replaces the rule of one oscillator, e.g. to inject thresholds
    /// computed for a different network than the one simulated.
    pub fn set_mechanism(&mut self, id: OscillatorId, mechanism: Mechanism) {
        self.mechanisms[id.0] = mechanism;
    }

    pub fn with_snapshot_interval(mut self, interval: Tick) -> Result<Self, ScenarioError> {
        if interval == 0 {
            return Err(ScenarioError::ZeroSnapshotInterval);
        }
        self.snapshot_interval = interval;
        Ok(self)
    }

    /// Caps top-of-cycle steps per instant. Defaults to `N²`, which no valid
    /// mechanism can reach.
    pub fn with_cascade_limit(mut self, limit: usize) -> Self {
        self.cascade_limit = Some(limit);
        self
    }

    pub fn clock(&self) -> &TickClock {
        &self.clock
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn kind(&self) -> MechanismKind {
        self.kind
    }

    pub fn mechanism(&self, id: OscillatorId) -> &Mechanism {
        &self.mechanisms[id.0]
    }

    pub fn attackers(&self) -> &[AttackSchedule] {
        &self.attackers
    }

    pub fn is_attacker(&self, id: OscillatorId) -> bool {
        self.is_attacker[id.0]
    }

    pub fn legitimate(&self) -> Vec<OscillatorId> {
        (0..self.topology.len())
            .filter(|&i| !self.is_attacker[i])
            .map(OscillatorId)
            .collect()
    }

    pub fn initial_phase(&self, id: OscillatorId) -> Option<Phase> {
        self.initial_phases[id.0]
    }

    pub fn horizon(&self) -> Tick {
        self.horizon
    }

    pub fn snapshot_interval(&self) -> Tick {
        self.snapshot_interval
    }

    pub fn run(&self) -> Result<RunOutput, SimError> {
        Engine::new(self).run()
    }
}

/// Uniform initial phases on `[0, 2π]`, snapped to ticks.
pub fn random_initial_phases<R: Rng + ?Sized>(clock: &TickClock, count: usize, rng: &mut R) -> Vec<Phase> {
    (0..count)
        .map(|_| Phase(rng.gen_range(0..=clock.ticks_per_period())))
        .collect()
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: EventLog,
    pub snapshots: Vec<PhaseSnapshot>,
    pub final_phases: Vec<(OscillatorId, Phase)>,
    pub legitimate: Vec<OscillatorId>,
    pub horizon: Tick,
}

const ATTACK_CLASS: u8 = 0;
const WRAP_CLASS: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Queued {
    tick: Tick,
    class: u8,
    id: usize,
    seq: u64,
    generation: u64,
}

#[derive(Debug, Clone, Copy)]
enum Work {
    Attack(usize),
    Wrap { id: usize, generation: u64 },
    Deliver { to: usize, from: usize, seq: u64 },
}

struct Engine<'a> {
    sc: &'a Scenario,
    states: Vec<Option<OscillatorState>>,
    queue: BinaryHeap<Reverse<Queued>>,
    event_seq: u64,
    pulse_seq: u64,
    work: VecDeque<Work>,
    log: EventLog,
    snapshots: Vec<PhaseSnapshot>,
    legitimate: Vec<OscillatorId>,
    cascade_limit: usize,
}

impl<'a> Engine<'a> {
    fn new(sc: &'a Scenario) -> Self {
        let n = sc.topology.len();
        let states = (0..n)
            .map(|i| sc.initial_phases[i].map(|p| OscillatorState::new(OscillatorId(i), p, 0)))
            .collect();
        let mut engine = Self {
            sc,
            states,
            queue: BinaryHeap::new(),
            event_seq: 0,
            pulse_seq: 0,
            work: VecDeque::new(),
            log: EventLog::new(),
            snapshots: Vec::new(),
            legitimate: sc.legitimate(),
            cascade_limit: sc.cascade_limit.unwrap_or((n * n).max(1)),
        };
        for schedule in &sc.attackers {
            for &tick in schedule.ticks().iter().take_while(|&&t| t <= sc.horizon) {
                engine.push(tick, ATTACK_CLASS, schedule.attacker.0, 0);
            }
        }
        for i in 0..n {
            if engine.states[i].is_some() {
                engine.schedule_wrap(i, 0);
            }
        }
        engine
    }

    fn push(&mut self, tick: Tick, class: u8, id: usize, generation: u64) {
        self.event_seq += 1;
        self.queue.push(Reverse(Queued {
            tick,
            class,
            id,
            seq: self.event_seq,
            generation,
        }));
    }

    fn state(&self, id: usize) -> &OscillatorState {
        self.states[id].as_ref().expect("legitimate oscillator")
    }

    fn state_mut(&mut self, id: usize) -> &mut OscillatorState {
        self.states[id].as_mut().expect("legitimate oscillator")
    }

    fn schedule_wrap(&mut self, id: usize, now: Tick) {
        let state = self.state(id);
        let (tick, generation) = (state.next_wrap_tick(&self.sc.clock, now), state.generation());
        self.push(tick, WRAP_CLASS, id, generation);
    }

    fn is_current(&self, q: &Queued) -> bool {
        q.class == ATTACK_CLASS || self.state(q.id).generation() == q.generation
    }

    /// Next tick holding a live event, discarding stale wraps on the way.
    fn peek_tick(&mut self) -> Option<Tick> {
        while let Some(&Reverse(top)) = self.queue.peek() {
            if self.is_current(&top) {
                return Some(top.tick);
            }
            self.queue.pop();
        }
        None
    }

    fn run(mut self) -> Result<RunOutput, SimError> {
        let horizon = self.sc.horizon;
        let interval = self.sc.snapshot_interval;
        let mut next_cadence: Tick = 0;
        while let Some(t) = self.peek_tick() {
            if t > horizon {
                break;
            }
            while next_cadence < t {
                self.snapshot(next_cadence);
                next_cadence += interval;
            }
            self.resolve_instant(t)?;
            self.snapshot(t);
            if next_cadence == t {
                next_cadence += interval;
            }
        }
        while next_cadence <= horizon {
            self.snapshot(next_cadence);
            next_cadence += interval;
        }
        let final_phases = self.phases_at(horizon);
        Ok(RunOutput {
            log: self.log,
            snapshots: self.snapshots,
            final_phases,
            legitimate: self.legitimate,
            horizon,
        })
    }

    fn phases_at(&self, tick: Tick) -> Vec<(OscillatorId, Phase)> {
        self.legitimate
            .iter()
            .map(|&id| (id, self.state(id.0).phase_at(&self.sc.clock, tick)))
            .collect()
    }

    fn snapshot(&mut self, tick: Tick) {
        let phases = self.phases_at(tick);
        debug_assert!(phases.iter().all(|(_, p)| !p.is_top(&self.sc.clock)));
        self.snapshots.push(PhaseSnapshot { tick, phases });
    }

    /// Processes every event at tick `t` to a fixpoint.
    fn resolve_instant(&mut self, t: Tick) -> Result<(), SimError> {
        while let Some(&Reverse(q)) = self.queue.peek() {
            if q.tick != t {
                break;
            }
            self.queue.pop();
            if !self.is_current(&q) {
                continue;
            }
            self.work.push_back(match q.class {
                ATTACK_CLASS => Work::Attack(q.id),
                _ => Work::Wrap {
                    id: q.id,
                    generation: q.generation,
                },
            });
        }

        let mut top_steps = 0usize;
        while let Some(item) = self.work.pop_front() {
            match item {
                Work::Attack(a) => {
                    self.log.push(Record::Fired {
                        id: OscillatorId(a),
                        tick: t,
                    });
                    self.emit(a);
                }
                Work::Wrap { id, generation } => {
                    // an earlier pulse in this instant may already have moved it
                    if self.state(id).generation() == generation {
                        self.reach_top(id, t, &mut top_steps)?;
                    }
                }
                Work::Deliver { to, from, seq } => self.deliver(to, from, seq, t, &mut top_steps)?,
            }
        }
        Ok(())
    }

    fn emit(&mut self, from: usize) {
        let sc = self.sc;
        for &to in &sc.topology.adjacency()[from] {
            self.pulse_seq += 1;
            self.work.push_back(Work::Deliver {
                to,
                from,
                seq: self.pulse_seq,
            });
        }
    }

    fn deliver(&mut self, to: usize, from: usize, seq: u64, t: Tick, top_steps: &mut usize) -> Result<(), SimError> {
        self.log.push(Record::Received {
            receiver: OscillatorId(to),
            sender: OscillatorId(from),
            tick: t,
            seq,
        });
        if self.sc.is_attacker[to] {
            return Ok(());
        }
        let clock = self.sc.clock;
        let state = self.state_mut(to);
        state.prune(&clock, t);
        state.record_pulse(t, seq);
        let state = self.state(to);
        let current = state.phase_at(&clock, t);
        match self.sc.mechanisms[to].on_pulse(&clock, state, t, seq) {
            PulseAction::Ignore => Ok(()),
            PulseAction::ShiftTo2Pi => {
                if !current.is_top(&clock) {
                    self.log.push(Record::ShiftedTo2Pi {
                        id: OscillatorId(to),
                        tick: t,
                    });
                    self.state_mut(to).set_phase(t, Phase(clock.ticks_per_period()));
                }
                self.reach_top(to, t, top_steps)
            }
            PulseAction::JumpTo(target) => {
                if target == current {
                    return Ok(());
                }
                self.log.push(Record::Jumped {
                    id: OscillatorId(to),
                    tick: t,
                    phase: target,
                });
                self.state_mut(to).set_phase(t, target);
                if target.is_top(&clock) {
                    self.reach_top(to, t, top_steps)
                } else {
                    self.schedule_wrap(to, t);
                    Ok(())
                }
            }
        }
    }

    fn reach_top(&mut self, id: usize, t: Tick, top_steps: &mut usize) -> Result<(), SimError> {
        *top_steps += 1;
        if *top_steps > self.cascade_limit {
            return Err(SimError::CascadeOverflow {
                tick: t,
                limit: self.cascade_limit,
            });
        }
        let clock = self.sc.clock;
        let action = self.sc.mechanisms[id].on_reach_top(&clock, self.state(id), t)?;
        let oid = OscillatorId(id);
        if action.fire {
            self.log.push(Record::Fired { id: oid, tick: t });
            self.state_mut(id).mark_fired(t);
            self.emit(id);
        }
        match action.reset_to {
            ResetTarget::Zero => {
                self.log.push(Record::ResetToZero { id: oid, tick: t });
                let state = self.state_mut(id);
                state.set_phase(t, Phase::ZERO);
                state.mark_reset_to_zero(t);
            }
            ResetTarget::Pi => {
                self.log.push(Record::ResetToPi { id: oid, tick: t });
                self.state_mut(id).set_phase(t, Phase(clock.half_period()));
            }
        }
        self.schedule_wrap(id, t);
        Ok(())
    }
}

#[cfg(test)]
mod tests;
