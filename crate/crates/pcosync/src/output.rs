//! Run summaries and trace files.
//!
//! Field orders are fixed:
//!
//! - `events.jsonl`: `tick, type, ids, seq` per line; `jumped` records add
//!   `phase_ticks`. `ids` is `[subject]`, or `[receiver, sender]` for
//!   `received`; `seq` is null except on `received`.
//! - `phases.csv`: `tick, seconds`, then one radian column per legitimate
//!   oscillator named `phi_<id>`.
//! - `arc.csv`: `tick, seconds, arc_rad`.
//!
//! Radians are written with 9 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use pcosync_core::metrics::analyze;
use pcosync_core::topology::ResilientMechanism;
use pcosync_core::{ConditionReport, MechanismKind, Record, RunOutput, Tick, TickClock};
use serde::{Deserialize, Serialize};

use crate::config::Prepared;

/// `x` rounded to 9 significant digits, so that the shortest decimal form
/// printed by `Display` or `serde_json` has at most 9 of them.
pub fn sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conditions {
    pub mechanism: String,
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub degree_bound: usize,
    pub degree_ok: bool,
    pub attacker_bound_ok: bool,
    pub max_allowed_attackers: i64,
    pub satisfied: bool,
}

impl From<&ConditionReport> for Conditions {
    fn from(r: &ConditionReport) -> Self {
        Self {
            mechanism: match r.mechanism {
                ResilientMechanism::Mechanism1 => "mechanism1",
                ResilientMechanism::Mechanism2 => "mechanism2",
            }
            .into(),
            n: r.n,
            d: r.d,
            m: r.m,
            degree_bound: r.degree_bound,
            degree_ok: r.degree_ok,
            attacker_bound_ok: r.attacker_bound_ok,
            max_allowed_attackers: r.max_allowed_attackers,
            satisfied: r.is_satisfied(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackShare {
    pub attacker: usize,
    pub pulses: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub config_digest: String,
    pub mechanism: String,
    pub nodes: usize,
    pub legitimate: usize,
    pub ticks_per_period: u64,
    pub horizon_ticks: Tick,
    pub conditions: Option<Conditions>,
    pub attack_division: Vec<AttackShare>,
    pub sync_tick: Option<Tick>,
    pub final_arc_rad: f64,
    pub collective_periods: Vec<Tick>,
    /// Gaps between legitimate firing instants over the whole run.
    pub firing_gaps: Vec<Tick>,
    /// `[tick, arc_rad]` per snapshot.
    pub arc_trace: Vec<(Tick, f64)>,
}

pub fn mechanism_name(kind: MechanismKind) -> String {
    match kind {
        MechanismKind::Conventional { coupling } => format!("conventional(l={coupling})"),
        MechanismKind::Mechanism1 { n_total } => format!("mechanism1(N={n_total})"),
        MechanismKind::Mechanism2 => "mechanism2".into(),
    }
}

impl RunSummary {
    pub fn new(prepared: &Prepared, output: &RunOutput) -> Self {
        let sc = &prepared.scenario;
        let clock = sc.clock();
        let analysis = analyze(clock, output);
        Self {
            seed: prepared.seed,
            config_digest: prepared.digest.clone(),
            mechanism: mechanism_name(sc.kind()),
            nodes: sc.topology().len(),
            legitimate: output.legitimate.len(),
            ticks_per_period: clock.ticks_per_period(),
            horizon_ticks: output.horizon,
            conditions: prepared.conditions.as_ref().map(Conditions::from),
            attack_division: prepared
                .attack_division
                .iter()
                .map(|&(id, pulses)| AttackShare { attacker: id.0, pulses })
                .collect(),
            sync_tick: analysis.sync_tick,
            final_arc_rad: sig9(analysis.final_arc_rad),
            collective_periods: analysis.collective_periods,
            firing_gaps: analysis.firing_gaps,
            arc_trace: analysis.arc_trace.into_iter().map(|(t, a)| (t, sig9(a))).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

#[derive(Serialize)]
struct EventLine {
    tick: Tick,
    #[serde(rename = "type")]
    kind: &'static str,
    ids: Vec<usize>,
    seq: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phase_ticks: Option<u64>,
}

fn event_line(record: &Record) -> EventLine {
    let simple = |kind, id: pcosync_core::OscillatorId, tick| EventLine {
        tick,
        kind,
        ids: vec![id.0],
        seq: None,
        phase_ticks: None,
    };
    match *record {
        Record::Fired { id, tick } => simple("fired", id, tick),
        Record::ShiftedTo2Pi { id, tick } => simple("shifted_to_2pi", id, tick),
        Record::ResetToZero { id, tick } => simple("reset_to_zero", id, tick),
        Record::ResetToPi { id, tick } => simple("reset_to_pi", id, tick),
        Record::Received {
            receiver,
            sender,
            tick,
            seq,
        } => EventLine {
            tick,
            kind: "received",
            ids: vec![receiver.0, sender.0],
            seq: Some(seq),
            phase_ticks: None,
        },
        Record::Jumped { id, tick, phase } => EventLine {
            phase_ticks: Some(phase.ticks()),
            ..simple("jumped", id, tick)
        },
    }
}

pub fn events_jsonl(output: &RunOutput) -> String {
    let mut s = String::new();
    for record in output.log.iter() {
        s.push_str(&serde_json::to_string(&event_line(record)).expect("event serializes"));
        s.push('\n');
    }
    s
}

pub fn phases_csv(clock: &TickClock, output: &RunOutput) -> String {
    let mut s = String::from("tick,seconds");
    for id in &output.legitimate {
        let _ = write!(s, ",phi_{}", id.0);
    }
    s.push('\n');
    for snap in &output.snapshots {
        let _ = write!(s, "{},{}", snap.tick, sig9(clock.ticks_to_seconds(snap.tick)));
        for (_, p) in &snap.phases {
            let _ = write!(s, ",{}", sig9(clock.ticks_to_rad(p.ticks())));
        }
        s.push('\n');
    }
    s
}

pub fn arc_csv(clock: &TickClock, summary: &RunSummary) -> String {
    let mut s = String::from("tick,seconds,arc_rad\n");
    for &(tick, arc) in &summary.arc_trace {
        let _ = writeln!(s, "{tick},{},{arc}", sig9(clock.ticks_to_seconds(tick)));
    }
    s
}

/// Writes `summary.json`, `arc.csv` and, when enabled, `events.jsonl` and
/// `phases.csv` into `dir`.
pub fn write_run(
    dir: &Path,
    prepared: &Prepared,
    output: &RunOutput,
    events: bool,
    phases: bool,
) -> io::Result<RunSummary> {
    fs::create_dir_all(dir)?;
    let clock = prepared.scenario.clock();
    let summary = RunSummary::new(prepared, output);
    fs::write(dir.join("summary.json"), summary.to_json())?;
    fs::write(dir.join("arc.csv"), arc_csv(clock, &summary))?;
    if events {
        fs::write(dir.join("events.jsonl"), events_jsonl(output))?;
    }
    if phases {
        fs::write(dir.join("phases.csv"), phases_csv(clock, output))?;
    }
    Ok(summary)
}
