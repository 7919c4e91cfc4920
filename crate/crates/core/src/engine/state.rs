use alloc::collections::VecDeque;
use core::ops::{Bound, RangeBounds};

use crate::mechanism::Window;
use crate::time::{OscillatorId, Phase, Tick, TickClock};

/// Mutable per-oscillator state owned by the engine.
///
/// The phase is stored as an anchor `(tick, phase)`; between events it
/// advances one tick per tick.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OscillatorState {
    id: OscillatorId,
    anchor_tick: Tick,
    anchor_phase: Phase,
    /// `(tick, seq)` of every received pulse, sorted.
    receive_log: VecDeque<(Tick, u64)>,
    last_fire_tick: Option<Tick>,
    last_reset_to_zero_tick: Option<Tick>,
    started_at: Tick,
    generation: u64,
}

impl OscillatorState {
    pub fn new(id: OscillatorId, initial: Phase, started_at: Tick) -> Self {
        Self {
            id,
            anchor_tick: started_at,
            anchor_phase: initial,
            receive_log: VecDeque::new(),
            last_fire_tick: None,
            last_reset_to_zero_tick: None,
            started_at,
            generation: 0,
        }
    }

    pub fn id(&self) -> OscillatorId {
        self.id
    }

    pub fn started_at(&self) -> Tick {
        self.started_at
    }

    pub fn last_fire_tick(&self) -> Option<Tick> {
        self.last_fire_tick
    }

    pub fn last_reset_to_zero_tick(&self) -> Option<Tick> {
        self.last_reset_to_zero_tick
    }

    pub fn receive_log(&self) -> impl Iterator<Item = (Tick, u64)> + '_ {
        self.receive_log.iter().copied()
    }

    pub(crate) fn generation(&self) -> u64 {
        self.generation
    }

    /// Phase at `now`, assuming no event in between. Saturates at the top.
    pub fn phase_at(&self, clock: &TickClock, now: Tick) -> Phase {
        let elapsed = now.saturating_sub(self.anchor_tick);
        Phase((self.anchor_phase.ticks() + elapsed).min(clock.ticks_per_period()))
    }

    /// Tick at which the phase reaches the top if left alone.
    pub fn next_wrap_tick(&self, clock: &TickClock, now: Tick) -> Tick {
        let phase = self.phase_at(clock, now);
        now + (clock.ticks_per_period() - phase.ticks())
    }

    /// Moves the anchor; invalidates any scheduled wrap.
    pub fn set_phase(&mut self, now: Tick, phase: Phase) {
        self.anchor_tick = now;
        self.anchor_phase = phase;
        self.generation += 1;
    }

    pub fn record_pulse(&mut self, tick: Tick, seq: u64) {
        debug_assert!(self.receive_log.back().is_none_or(|&last| last <= (tick, seq)));
        self.receive_log.push_back((tick, seq));
    }

    pub fn mark_fired(&mut self, tick: Tick) {
        self.last_fire_tick = Some(tick);
    }

    pub fn mark_reset_to_zero(&mut self, tick: Tick) {
        self.last_reset_to_zero_tick = Some(tick);
    }

    /// Drops entries older than `now − T/2`, the widest counting window.
    pub fn prune(&mut self, clock: &TickClock, now: Tick) {
        if let Some(cutoff) = now.checked_sub(clock.half_period()) {
            while self.receive_log.front().is_some_and(|&(t, _)| t < cutoff) {
                self.receive_log.pop_front();
            }
        }
    }

    /// Pulses received inside `window`. With `before_seq`, only pulses that
    /// precede that sequence number are counted.
    pub fn receive_count(&self, window: Window, before_seq: Option<u64>) -> usize {
        let start = match window.0 {
            Bound::Included(lo) => self.receive_log.partition_point(|&(t, _)| t < lo),
            Bound::Excluded(lo) => self.receive_log.partition_point(|&(t, _)| t <= lo),
            Bound::Unbounded => 0,
        };
        self.receive_log
            .range(start..)
            .take_while(|&&(t, _)| match window.1 {
                Bound::Included(hi) => t <= hi,
                Bound::Excluded(hi) => t < hi,
                Bound::Unbounded => true,
            })
            .filter(|&&(t, seq)| window.contains(&t) && before_seq.is_none_or(|cur| seq < cur))
            .count()
    }
}
