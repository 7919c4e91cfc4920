//! Per-oscillator behaviour on reaching `2π` and on receiving a pulse.
//!
//! Three mechanisms are provided:
//!
//! - **Conventional**: every pulse moves the phase by `l·F(φ)`, with
//!   `F(φ) = −φ` on `[0, π]` and `2π − φ` on `(π, 2π]`. Oscillators fire on
//!   every arrival at `2π` and reset to zero.
//! - **Mechanism 1** (network size `N` known): on reaching `2π` at `t` fire
//!   unless already fired in `(t−ε, t]` or still within the first period;
//!   reset to `0` if more than `⌊N/3⌋` pulses arrived in `(t−ε, t]`, else to
//!   `π`. A pulse at `t′` shifts the phase to `2π` only when `φ ∈ [π, 2π]`
//!   and, counting pulses received before the current one, either
//!   (a) at least `d_i − ⌊2N/3⌋ − 1` arrived in `[t′−T/2, t′]` and there was
//!   no reset to zero in `(t′−T, t′)`, or (b) at least that many arrived in
//!   `(t′−ε, t′]`.
//! - **Mechanism 2** (only `d_i` known): same shape with a reset threshold
//!   of at least `⌊d_i/3⌋` pulses and a response threshold of `⌊d_i/6⌋ − 1`.
//!
//! Thresholds are fixed when a [`Mechanism`] is instantiated for an
//! oscillator; nothing global is consulted at run time.

use core::ops::Bound;

use thiserror::Error;

use crate::engine::OscillatorState;
use crate::time::{Phase, Tick, TickClock};
use crate::topology::ResilientMechanism;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MechanismError {
    #[error("on_reach_top called at phase {phase} ticks, expected the top of the cycle")]
    NotAtTop { phase: u64 },
    #[error("coupling strength must lie in (0, 1], got {0}")]
    BadCoupling(f64),
    #[error("phase {0} rad is outside [0, 2π]")]
    PhaseOutOfRange(f64),
    #[error("mechanism 1 needs the network size")]
    MissingNetworkSize,
}

/// Mechanism selection as written in a scenario, before per-node
/// instantiation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MechanismKind {
    Conventional { coupling: f64 },
    Mechanism1 { n_total: usize },
    Mechanism2,
}

impl MechanismKind {
    pub fn resilient(&self) -> Option<ResilientMechanism> {
        match self {
            MechanismKind::Conventional { .. } => None,
            MechanismKind::Mechanism1 { .. } => Some(ResilientMechanism::Mechanism1),
            MechanismKind::Mechanism2 => Some(ResilientMechanism::Mechanism2),
        }
    }

    /// Instantiates the rule for one oscillator with degree `own_degree`.
    pub fn instantiate(&self, own_degree: usize) -> Result<Mechanism, MechanismError> {
        match *self {
            MechanismKind::Conventional { coupling } => {
                if !(coupling > 0.0 && coupling <= 1.0) {
                    return Err(MechanismError::BadCoupling(coupling));
                }
                Ok(Mechanism::Conventional { coupling })
            }
            MechanismKind::Mechanism1 { n_total } => {
                if n_total == 0 {
                    return Err(MechanismError::MissingNetworkSize);
                }
                Ok(Mechanism::Resilient(ResilientRule::mechanism1(n_total, own_degree)))
            }
            MechanismKind::Mechanism2 => Ok(Mechanism::Resilient(ResilientRule::mechanism2(own_degree))),
        }
    }
}

/// Thresholds of Mechanism 1 or 2 for a single oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResilientRule {
    pub variant: ResilientMechanism,
    /// Pulses needed in `(t−ε, t]` to reset to zero rather than to `π`.
    pub reset_min_pulses: usize,
    /// Prior pulses needed for a shift to `2π`. May be zero or negative for
    /// networks that violate the degree conditions.
    pub response_threshold: i64,
}

impl ResilientRule {
    /// "over ⌊N/3⌋" is strict, so at least `⌊N/3⌋ + 1`.
    pub fn mechanism1(n_total: usize, own_degree: usize) -> Self {
        Self {
            variant: ResilientMechanism::Mechanism1,
            reset_min_pulses: n_total / 3 + 1,
            response_threshold: own_degree as i64 - (2 * n_total / 3) as i64 - 1,
        }
    }

    pub fn mechanism2(own_degree: usize) -> Self {
        Self {
            variant: ResilientMechanism::Mechanism2,
            reset_min_pulses: own_degree / 3,
            response_threshold: (own_degree / 6) as i64 - 1,
        }
    }

    pub fn with_response_threshold(mut self, threshold: i64) -> Self {
        self.response_threshold = threshold;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mechanism {
    Conventional { coupling: f64 },
    Resilient(ResilientRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ResetTarget {
    Zero,
    Pi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TopAction {
    pub fire: bool,
    pub reset_to: ResetTarget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseAction {
    Ignore,
    ShiftTo2Pi,
    JumpTo(Phase),
}

impl Mechanism {
    pub fn on_reach_top(
        &self,
        clock: &TickClock,
        state: &OscillatorState,
        now: Tick,
    ) -> Result<TopAction, MechanismError> {
        let phase = state.phase_at(clock, now);
        if !phase.is_top(clock) {
            return Err(MechanismError::NotAtTop { phase: phase.ticks() });
        }
        match self {
            Mechanism::Conventional { .. } => Ok(TopAction {
                fire: true,
                reset_to: ResetTarget::Zero,
            }),
            Mechanism::Resilient(rule) => {
                let recently_fired = state
                    .last_fire_tick()
                    .is_some_and(|last| in_window(last, epsilon_window(clock, now)));
                let initiated = now >= state.started_at() + clock.ticks_per_period();
                let received = state.receive_count(epsilon_window(clock, now), None);
                let reset_to = if received >= rule.reset_min_pulses {
                    ResetTarget::Zero
                } else {
                    ResetTarget::Pi
                };
                Ok(TopAction {
                    fire: initiated && !recently_fired,
                    reset_to,
                })
            }
        }
    }

    /// Decision for the pulse with sequence number `current_seq`, which the
    /// caller has already appended to the receive log.
    pub fn on_pulse(&self, clock: &TickClock, state: &OscillatorState, now: Tick, current_seq: u64) -> PulseAction {
        let phase = state.phase_at(clock, now);
        match self {
            Mechanism::Conventional { coupling } => {
                PulseAction::JumpTo(apply_conventional_jump(clock, phase, *coupling))
            }
            Mechanism::Resilient(rule) => {
                if !phase.in_upper_half(clock) {
                    return PulseAction::Ignore;
                }
                let meets = |count: usize| count as i64 >= rule.response_threshold;
                let half_window = (
                    now.checked_sub(clock.half_period())
                        .map_or(Bound::Unbounded, Bound::Included),
                    Bound::Included(now),
                );
                let no_recent_zero_reset = state.last_reset_to_zero_tick().is_none_or(|r| {
                    let period_window = (
                        now.checked_sub(clock.ticks_per_period())
                            .map_or(Bound::Unbounded, Bound::Excluded),
                        Bound::Excluded(now),
                    );
                    !in_window(r, period_window)
                });
                let cond_a = no_recent_zero_reset && meets(state.receive_count(half_window, Some(current_seq)));
                let cond_b = meets(state.receive_count(epsilon_window(clock, now), Some(current_seq)));
                if cond_a || cond_b {
                    PulseAction::ShiftTo2Pi
                } else {
                    PulseAction::Ignore
                }
            }
        }
    }
}

/// Time window as a pair of bounds on ticks.
pub type Window = (Bound<Tick>, Bound<Tick>);

/// `(now − ε, now]`.
pub fn epsilon_window(clock: &TickClock, now: Tick) -> Window {
    (
        now.checked_sub(clock.epsilon_ticks())
            .map_or(Bound::Unbounded, Bound::Excluded),
        Bound::Included(now),
    )
}

pub fn in_window(tick: Tick, window: Window) -> bool {
    use core::ops::RangeBounds;
    window.contains(&tick)
}

/// Phase response function in radians.
pub fn prf(phase: f64) -> Result<f64, MechanismError> {
    use core::f64::consts::{PI, TAU};
    if !(0.0..=TAU).contains(&phase) {
        return Err(MechanismError::PhaseOutOfRange(phase));
    }
    Ok(if phase <= PI { -phase } else { TAU - phase })
}

/// `φ + l·F(φ)` evaluated on the tick grid, rounded to the nearest tick and
/// clamped to `[0, T]`. A result at the top means the oscillator fires now.
pub fn apply_conventional_jump(clock: &TickClock, phase: Phase, coupling: f64) -> Phase {
    let period = clock.ticks_per_period();
    let p = phase.ticks().min(period);
    let response = if p <= clock.half_period() {
        -(p as f64)
    } else {
        (period - p) as f64
    };
    let next = libm::round(p as f64 + coupling * response);
    Phase(next.clamp(0.0, period as f64) as u64)
}
