//! Integer time base.
//!
//! One oscillation period `T = 2π` seconds is split into `ticks_per_period`
//! ticks. Oscillators advance at one radian per second, so a phase expressed
//! in ticks is also the time (in ticks) since the last reset to zero.

use core::f64::consts::{PI, TAU};
use core::fmt;

use thiserror::Error;

/// Absolute simulation time in ticks since the common start instant.
pub type Tick = u64;

pub const DEFAULT_TICKS_PER_PERIOD: u64 = 1_000_000;
pub const DEFAULT_EPSILON_TICKS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClockError {
    #[error("ticks_per_period must be a positive even integer, got {0}")]
    BadPeriod(u64),
    #[error("epsilon_ticks must be positive and below half a period, got {epsilon} for period {period}")]
    BadEpsilon { epsilon: u64, period: u64 },
    #[error("angle {0} rad is outside [0, 2π]")]
    AngleOutOfRange(f64),
}

/// Maps ticks to seconds/radians and carries the attacker separation `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TickClock {
    ticks_per_period: u64,
    epsilon_ticks: u64,
}

impl Default for TickClock {
    fn default() -> Self {
        Self {
            ticks_per_period: DEFAULT_TICKS_PER_PERIOD,
            epsilon_ticks: DEFAULT_EPSILON_TICKS,
        }
    }
}

impl TickClock {
    pub fn new(ticks_per_period: u64, epsilon_ticks: u64) -> Result<Self, ClockError> {
        // π must land on a tick exactly.
        if ticks_per_period == 0 || !ticks_per_period.is_multiple_of(2) {
            return Err(ClockError::BadPeriod(ticks_per_period));
        }
        if epsilon_ticks == 0 || epsilon_ticks >= ticks_per_period / 2 {
            return Err(ClockError::BadEpsilon {
                epsilon: epsilon_ticks,
                period: ticks_per_period,
            });
        }
        Ok(Self {
            ticks_per_period,
            epsilon_ticks,
        })
    }

    #[inline]
    pub fn ticks_per_period(&self) -> u64 {
        self.ticks_per_period
    }

    #[inline]
    pub fn half_period(&self) -> u64 {
        self.ticks_per_period / 2
    }

    #[inline]
    pub fn epsilon_ticks(&self) -> u64 {
        self.epsilon_ticks
    }

    /// Nearest tick for an angle in `[0, 2π]`. `2π` and `π` are exact.
    pub fn rad_to_ticks(&self, angle: f64) -> Result<u64, ClockError> {
        if !(0.0..=TAU).contains(&angle) {
            return Err(ClockError::AngleOutOfRange(angle));
        }
        let ticks = libm::round(angle / TAU * self.ticks_per_period as f64) as u64;
        Ok(ticks.min(self.ticks_per_period))
    }

    pub fn ticks_to_rad(&self, ticks: u64) -> f64 {
        ticks as f64 * TAU / self.ticks_per_period as f64
    }

    /// Seconds and radians coincide because `ω = 1 rad/s`.
    pub fn ticks_to_seconds(&self, ticks: Tick) -> f64 {
        self.ticks_to_rad(ticks)
    }

    /// Radians spanned by a single tick.
    pub fn tick_rad(&self) -> f64 {
        2.0 * PI / self.ticks_per_period as f64
    }
}

/// Phase of a legitimate oscillator in ticks, within `[0, ticks_per_period]`.
///
/// The top value (`2π`) only exists transiently inside a single instant; the
/// engine always resolves it to a reset before time advances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Phase(pub u64);

impl Phase {
    pub const ZERO: Phase = Phase(0);

    #[inline]
    pub fn ticks(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn is_top(self, clock: &TickClock) -> bool {
        self.0 == clock.ticks_per_period()
    }

    /// True when the phase lies in `[π, 2π]`, the only region where the
    /// resilient mechanisms react to pulses.
    #[inline]
    pub fn in_upper_half(self, clock: &TickClock) -> bool {
        self.0 >= clock.half_period() && self.0 <= clock.ticks_per_period()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct OscillatorId(pub usize);

impl OscillatorId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for OscillatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for OscillatorId {
    fn from(value: usize) -> Self {
        Self(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_or_zero_period() {
        assert_eq!(TickClock::new(999, 1), Err(ClockError::BadPeriod(999)));
        assert_eq!(TickClock::new(0, 1), Err(ClockError::BadPeriod(0)));
    }

    #[test]
    fn rejects_epsilon_at_or_above_half_period() {
        assert!(TickClock::new(1000, 500).is_err());
        assert!(TickClock::new(1000, 0).is_err());
        assert!(TickClock::new(1000, 499).is_ok());
    }

    #[test]
    fn default_matches_one_percent_epsilon() {
        let clock = TickClock::default();
        assert_eq!(clock.ticks_per_period(), 1_000_000);
        assert_eq!(clock.epsilon_ticks(), 10_000);
    }

    #[test]
    fn rad_to_ticks_landmarks() {
        let clock = TickClock::new(1_000_000, 10_000).unwrap();
        assert_eq!(clock.rad_to_ticks(TAU).unwrap(), 1_000_000);
        assert_eq!(clock.rad_to_ticks(PI).unwrap(), 500_000);
        assert_eq!(clock.rad_to_ticks(0.0).unwrap(), 0);
        assert_eq!(clock.rad_to_ticks(PI / 2.0).unwrap(), 250_000);
    }

    #[test]
    fn rad_to_ticks_rejects_out_of_range() {
        let clock = TickClock::default();
        assert!(clock.rad_to_ticks(-1e-9).is_err());
        assert!(clock.rad_to_ticks(TAU + 1e-9).is_err());
        assert!(clock.rad_to_ticks(f64::NAN).is_err());
    }

    #[test]
    fn upper_half_gate() {
        let clock = TickClock::new(1000, 10).unwrap();
        assert!(!Phase(499).in_upper_half(&clock));
        assert!(Phase(500).in_upper_half(&clock));
        assert!(Phase(1000).in_upper_half(&clock));
        assert!(Phase(1000).is_top(&clock));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn round_trip_within_one_tick(half in 50u64..5_000_000, x in 0.0f64..=1.0) {
                let clock = TickClock::new(half * 2, 1).unwrap();
                let angle = x * TAU;
                let back = clock.ticks_to_rad(clock.rad_to_ticks(angle).unwrap());
                prop_assert!((back - angle).abs() < clock.tick_rad());
            }

            #[test]
            fn rad_to_ticks_is_monotone(a in 0.0f64..=TAU, b in 0.0f64..=TAU) {
                let clock = TickClock::default();
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                prop_assert!(clock.rad_to_ticks(lo).unwrap() <= clock.rad_to_ticks(hi).unwrap());
            }

            #[test]
            fn ticks_survive_conversion(t in 0u64..=1_000_000) {
                let clock = TickClock::default();
                prop_assert_eq!(clock.rad_to_ticks(clock.ticks_to_rad(t)).unwrap(), t);
            }
        }
    }
}
