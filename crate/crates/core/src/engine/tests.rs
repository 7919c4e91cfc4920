use super::*;
use crate::mechanism::ResilientRule;
use crate::metrics::detect_sync;

const T: u64 = 1_000_000;

fn clock() -> TickClock {
    TickClock::default()
}

fn at(log: &EventLog, tick: Tick) -> Vec<Record> {
    log.iter().copied().filter(|r| r.tick() == tick).collect()
}

fn count(log: &EventLog, pred: impl Fn(&Record) -> bool) -> usize {
    log.iter().filter(|r| pred(r)).count()
}

#[test]
fn two_nodes_from_zero_lock_at_first_period() {
    let topo = Topology::complete(2).unwrap();
    let sc = Scenario::new(
        clock(),
        topo,
        MechanismKind::Mechanism1 { n_total: 2 },
        vec![],
        vec![Phase(0), Phase(0)],
        5 * T,
    )
    .unwrap();
    let out = sc.run().unwrap();
    let first_fire = out.log.fired().next().unwrap();
    assert_eq!(first_fire.1, T);
    let zero_resets: Vec<_> = at(&out.log, T)
        .into_iter()
        .filter(|r| matches!(r, Record::ResetToZero { .. }))
        .collect();
    assert_eq!(zero_resets.len(), 2);
    // last reset of each oscillator at T is to zero
    for id in 0..2 {
        let last = at(&out.log, T)
            .into_iter()
            .rev()
            .find(|r| matches!(r, Record::ResetToZero { id: i, .. } | Record::ResetToPi { id: i, .. } if i.0 == id))
            .unwrap();
        assert!(matches!(last, Record::ResetToZero { .. }));
    }
    assert_eq!(detect_sync(&clock(), &out), Some(T));
    let fires: Vec<Tick> = out.log.fired().map(|(_, t)| t).collect();
    assert_eq!(fires, [T, T, 2 * T, 2 * T, 3 * T, 3 * T, 4 * T, 4 * T, 5 * T, 5 * T]);
}

#[test]
fn lone_oscillator_never_resets_to_zero() {
    let topo = Topology::from_adjacency(vec![vec![]]).unwrap();
    let sc = Scenario::new(
        clock(),
        topo,
        MechanismKind::Mechanism1 { n_total: 1 },
        vec![],
        vec![Phase(0)],
        4 * T,
    )
    .unwrap();
    let out = sc.run().unwrap();
    assert_eq!(count(&out.log, |r| matches!(r, Record::ResetToZero { .. })), 0);
    let fires: Vec<Tick> = out.log.fired().map(|(_, t)| t).collect();
    assert_eq!(fires, [T, 3 * T / 2, 2 * T, 5 * T / 2, 3 * T, 7 * T / 2, 4 * T]);
    assert_eq!(detect_sync(&clock(), &out), None);
}

#[test]
fn three_nodes_at_top_together_all_reset_to_zero() {
    let sc = Scenario::new(
        clock(),
        Topology::complete(3).unwrap(),
        MechanismKind::Mechanism1 { n_total: 3 },
        vec![],
        vec![Phase(0); 3],
        T,
    )
    .unwrap();
    let out = sc.run().unwrap();
    let records = at(&out.log, T);
    assert_eq!(count(&out.log, |r| matches!(r, Record::Fired { .. })), 3);
    for id in 0..3 {
        let received = records
            .iter()
            .filter(|r| matches!(r, Record::Received { receiver, .. } if receiver.0 == id))
            .count();
        assert_eq!(received, 2);
    }
    assert!(out.final_phases.iter().all(|&(_, p)| p == Phase(0)));
    assert_eq!(detect_sync(&clock(), &out), Some(T));
}

#[test]
fn lower_half_receiver_only_logs_the_pulse() {
    // attacker 1 pulses at tick 100 while node 0 is still below π
    let c = clock();
    let topo = Topology::complete(2).unwrap();
    let attack = AttackSchedule::new(OscillatorId(1), vec![100], &c).unwrap();
    let sc = Scenario::new(
        c,
        topo,
        MechanismKind::Mechanism1 { n_total: 2 },
        vec![attack],
        vec![Phase(0)],
        T / 2,
    )
    .unwrap();
    let out = sc.run().unwrap();
    assert_eq!(
        at(&out.log, 100),
        [
            Record::Fired {
                id: OscillatorId(1),
                tick: 100
            },
            Record::Received {
                receiver: OscillatorId(0),
                sender: OscillatorId(1),
                tick: 100,
                seq: 1
            },
        ]
    );
    assert_eq!(out.final_phases[0].1, Phase(T / 2));
}

#[test]
fn shifted_again_within_epsilon_resets_without_firing() {
    // A (0) fires at T+1; B (1) fires at T+2 and pushes A back to 2π.
    let topo = Topology::complete(2).unwrap();
    let mut sc = Scenario::new(
        clock(),
        topo,
        MechanismKind::Mechanism1 { n_total: 2 },
        vec![],
        vec![Phase(T / 2 - 1), Phase(T / 2 - 2)],
        T + 10,
    )
    .unwrap();
    sc.set_mechanism(
        OscillatorId(1),
        Mechanism::Resilient(ResilientRule::mechanism1(2, 1).with_response_threshold(100)),
    );
    let out = sc.run().unwrap();
    let a = OscillatorId(0);
    assert!(at(&out.log, T + 1).contains(&Record::Fired { id: a, tick: T + 1 }));
    let a_at_t2: Vec<Record> = at(&out.log, T + 2)
        .into_iter()
        .filter(|r| r.subject() == a && !matches!(r, Record::Received { .. }))
        .collect();
    assert_eq!(
        a_at_t2,
        [
            Record::ShiftedTo2Pi { id: a, tick: T + 2 },
            Record::ResetToZero { id: a, tick: T + 2 }
        ]
    );
}

#[test]
fn conventional_full_coupling_pulls_upper_half_to_fire() {
    let topo = Topology::complete(2).unwrap();
    let sc = Scenario::new(
        clock(),
        topo,
        MechanismKind::Conventional { coupling: 1.0 },
        vec![],
        vec![Phase(0), Phase(T / 4)],
        2 * T,
    )
    .unwrap();
    let out = sc.run().unwrap();
    // node 1 wraps first at 0.75T and fires (no initiation guard), node 0 is
    // at 0.75T then and jumps straight to 2π
    let records = at(&out.log, 3 * T / 4);
    assert_eq!(records.iter().filter(|r| matches!(r, Record::Fired { .. })).count(), 2);
    assert!(out.final_phases[0].1 == out.final_phases[1].1);
}

#[test]
fn attackers_fire_on_schedule_and_ignore_pulses() {
    let c = clock();
    let topo = Topology::complete(3).unwrap();
    let attack = AttackSchedule::new(OscillatorId(2), vec![100, 200_000], &c).unwrap();
    let sc = Scenario::new(
        c,
        topo,
        MechanismKind::Mechanism1 { n_total: 3 },
        vec![attack],
        vec![Phase(0), Phase(0)],
        2 * T,
    )
    .unwrap();
    let out = sc.run().unwrap();
    let attacker_fires: Vec<Tick> = out.log.fired().filter(|(id, _)| id.0 == 2).map(|(_, t)| t).collect();
    assert_eq!(attacker_fires, [100, 200_000]);
    assert_eq!(out.legitimate, [OscillatorId(0), OscillatorId(1)]);
    assert_eq!(out.final_phases.len(), 2);
    assert!(!out
        .log
        .iter()
        .any(|r| matches!(r, Record::ResetToPi { id, .. } | Record::ResetToZero { id, .. } if id.0 == 2)));
}

#[test]
fn cascade_limit_aborts() {
    let sc = Scenario::new(
        clock(),
        Topology::complete(3).unwrap(),
        MechanismKind::Mechanism1 { n_total: 3 },
        vec![],
        vec![Phase(0); 3],
        T,
    )
    .unwrap()
    .with_cascade_limit(2);
    assert_eq!(sc.run().unwrap_err(), SimError::CascadeOverflow { tick: T, limit: 2 });
}

#[test]
fn scenario_validation() {
    let c = clock();
    let topo = Topology::complete(3).unwrap();
    let kind = MechanismKind::Mechanism2;
    assert!(matches!(
        Scenario::new(c, topo.clone(), kind, vec![], vec![Phase(0); 2], T),
        Err(ScenarioError::PhaseCount { expected: 3, got: 2 })
    ));
    assert!(matches!(
        Scenario::new(c, topo.clone(), kind, vec![], vec![Phase(0), Phase(0), Phase(T + 1)], T),
        Err(ScenarioError::PhaseOutOfRange(_))
    ));
    let dup = vec![
        AttackSchedule::silent(OscillatorId(1)),
        AttackSchedule::silent(OscillatorId(1)),
    ];
    assert!(matches!(
        Scenario::new(c, topo.clone(), kind, dup, vec![Phase(0)], T),
        Err(ScenarioError::DuplicateAttacker(_))
    ));
    let far = vec![AttackSchedule::silent(OscillatorId(7))];
    assert!(matches!(
        Scenario::new(c, topo, kind, far, vec![Phase(0); 2], T),
        Err(ScenarioError::AttackerOutOfRange { .. })
    ));
}

#[test]
fn initial_phase_at_top_wraps_immediately() {
    let sc = Scenario::new(
        clock(),
        Topology::complete(2).unwrap(),
        MechanismKind::Mechanism1 { n_total: 2 },
        vec![],
        vec![Phase(T), Phase(0)],
        T / 4,
    )
    .unwrap();
    let out = sc.run().unwrap();
    assert_eq!(
        out.log.records()[0],
        Record::ResetToPi {
            id: OscillatorId(0),
            tick: 0
        }
    );
    assert_eq!(out.snapshots[0].tick, 0);
    assert_eq!(out.snapshots[0].phases[0].1, Phase(T / 2));
}

#[test]
fn snapshot_cadence_covers_horizon() {
    let sc = Scenario::new(
        clock(),
        Topology::complete(2).unwrap(),
        MechanismKind::Mechanism2,
        vec![],
        vec![Phase(1), Phase(2)],
        T,
    )
    .unwrap();
    let out = sc.run().unwrap();
    let ticks: Vec<Tick> = out.snapshots.iter().map(|s| s.tick).collect();
    assert!(ticks.windows(2).all(|w| w[0] < w[1]));
    for k in 0..=100 {
        assert!(ticks.contains(&(k * T / 100)), "missing cadence tick {k}");
    }
    // wraps at T-1 and T-2 are event instants
    assert!(ticks.contains(&(T - 1)) && ticks.contains(&(T - 2)));
}
