//! Deterministic simulation kernel for pulse-coupled oscillator (PCO)
//! networks under Byzantine pulse attacks.
//!
//! Everything in this crate is `no_std` + `alloc`: time is an integer tick
//! count, phases are tick offsets into the period, and all randomness flows
//! through caller-seeded ChaCha streams. File formats, configuration and the
//! command line live in the companion `pcosync` crate.
//!
//! Module map:
//!
//! - [`time`]: tick clock, phases, identifiers and radian conversion.
//! - [`floor`]: the floor-function inequalities behind the mechanism thresholds.
//! - [`topology`]: directed network model, circle deployment, synchronization conditions.
//! - [`mechanism`]: conventional PRF coupling and the two resilient mechanisms.
//! - [`adversary`]: attack schedule generation and validation.
//! - [`engine`]: event queue, same-instant cascade resolution, event log.
//! - [`metrics`]: containing arc, synchronization detection, collective period.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod adversary;
pub mod engine;
pub mod floor;
pub mod mechanism;
pub mod metrics;
pub mod time;
pub mod topology;

pub use adversary::{AttackSchedule, AttackSpec};
pub use engine::{EventLog, Record, RunOutput, Scenario, SimError};
pub use mechanism::{Mechanism, MechanismKind, PulseAction, ResetTarget, TopAction};
pub use metrics::{containing_arc, containing_arc_ticks, detect_sync, PhaseSnapshot};
pub use time::{OscillatorId, Phase, Tick, TickClock};
pub use topology::{ConditionReport, Topology};
