use alloc::vec::Vec;

use crate::time::{OscillatorId, Phase, Tick};

/// One entry of the event log, in exact processing order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Record {
    /// A pulse was emitted. Attackers' pulses are recorded the same way.
    Fired {
        id: OscillatorId,
        tick: Tick,
    },
    Received {
        receiver: OscillatorId,
        sender: OscillatorId,
        tick: Tick,
        seq: u64,
    },
    ShiftedTo2Pi {
        id: OscillatorId,
        tick: Tick,
    },
    ResetToZero {
        id: OscillatorId,
        tick: Tick,
    },
    ResetToPi {
        id: OscillatorId,
        tick: Tick,
    },
    /// Conventional coupling moved the phase to `phase`.
    Jumped {
        id: OscillatorId,
        tick: Tick,
        phase: Phase,
    },
}

impl Record {
    pub fn tick(&self) -> Tick {
        match *self {
            Record::Fired { tick, .. }
            | Record::Received { tick, .. }
            | Record::ShiftedTo2Pi { tick, .. }
            | Record::ResetToZero { tick, .. }
            | Record::ResetToPi { tick, .. }
            | Record::Jumped { tick, .. } => tick,
        }
    }

    /// The oscillator whose state the record describes (the receiver for
    /// deliveries).
    pub fn subject(&self) -> OscillatorId {
        match *self {
            Record::Fired { id, .. }
            | Record::ShiftedTo2Pi { id, .. }
            | Record::ResetToZero { id, .. }
            | Record::ResetToPi { id, .. }
            | Record::Jumped { id, .. } => id,
            Record::Received { receiver, .. } => receiver,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventLog {
    records: Vec<Record>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: Record) {
        debug_assert!(self.records.last().is_none_or(|r| r.tick() <= record.tick()));
        self.records.push(record);
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Record> {
        self.records.iter()
    }

    pub fn fired(&self) -> impl Iterator<Item = (OscillatorId, Tick)> + '_ {
        self.records.iter().filter_map(|r| match *r {
            Record::Fired { id, tick } => Some((id, tick)),
            _ => None,
        })
    }
}

impl<'a> IntoIterator for &'a EventLog {
    type Item = &'a Record;
    type IntoIter = core::slice::Iter<'a, Record>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}
