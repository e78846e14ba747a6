mod common;

use std::collections::BTreeSet;

use common::run;
use polaris_core::geometry::Vec2;
use polaris_core::models::Agent;
use polaris_core::polar::{ControlMode, RegionIndex};
use polaris_core::sim::engine::{agent_event_strings, Journal};
use polaris_core::sim::output::{event_log, trajectory_csv, TRAJECTORY_HEADER};
use polaris_core::sim::{run_scenario, Detected, ScenarioConfig, ScenarioOutcome, SimError, Simulator, WorldState};

fn mission_run() -> ScenarioOutcome {
    run_scenario(&ScenarioConfig::two_phase_mission()).unwrap()
}

fn position_of(events: &[String], id: &str) -> Option<usize> {
    events.iter().position(|e| e == id)
}

#[test]
fn two_phase_mission_reaches_both_formations_with_one_alarm() {
    let cfg = ScenarioConfig::two_phase_mission();
    let out = mission_run();
    let v = &out.verdict;
    assert_eq!(v.phases.len(), 2);
    for (n, phase) in v.phases.iter().enumerate() {
        for k in 0..2 {
            let t =
                phase.t_reach[k].unwrap_or_else(|| panic!("follower {} never reached formation in phase {n}", k + 1));
            assert!(t >= phase.start && t < cfg.t_end);
            assert!(phase.hold[k], "follower {} left the first ring in phase {n}", k + 1);
        }
    }
    assert_eq!(v.phases[0].alarm_episodes, 0);
    assert_eq!(v.phases[1].alarm_episodes, 1);
    let ep = &v.episodes[0];
    assert!(ep.start > 50.0 && ep.release.is_some());
    assert!(v.min_separation > 0.5 * cfg.alarm_radius, "{}", v.min_separation);
}

#[test]
fn alarm_episode_follows_stop_turn_release_order() {
    let out = mission_run();
    let ep = &out.verdict.episodes[0];
    let avoider = ep.avoider;
    let other = avoider.other();
    let during: Vec<String> = out
        .log
        .iter()
        .filter(|r| r.t >= ep.start && r.t <= ep.release.unwrap())
        .map(|r| r.event.clone())
        .collect();
    let alarm = position_of(&during, &ep.alarm).unwrap();
    let stop = position_of(&during, &other.stop_event()).unwrap();
    let turn = position_of(&during, &avoider.command_event(ControlMode::ExitThetaPlus)).unwrap();
    let release = position_of(&during, &other.release_event()).unwrap();
    assert!(alarm < stop && stop < turn && turn < release, "{during:?}");
    // The stopped follower issues no command until released.
    let commands: BTreeSet<String> = ControlMode::ALL.iter().map(|&m| other.command_event(m)).collect();
    assert!(during[stop..release].iter().all(|e| !commands.contains(e)));
}

#[test]
fn per_agent_logs_are_words_of_the_local_closed_loop() {
    let cfg = ScenarioConfig::two_phase_mission();
    let sim = Simulator::new(cfg).unwrap();
    let out = sim.run().unwrap();
    for agent in Agent::BOTH {
        let local = &sim.models().local[agent.slot()];
        for (phase, word) in agent_event_strings(&out.log, sim.models().alphabet(agent))
            .iter()
            .enumerate()
        {
            assert!(!word.is_empty());
            for a in local {
                assert!(
                    !run(a, word).is_empty(),
                    "phase {phase} agent {}: {word:?}",
                    agent.index()
                );
            }
        }
    }
}

#[test]
fn tracked_regions_match_positions() {
    let cfg = ScenarioConfig::two_phase_mission();
    for row in &mission_run().rows {
        for k in 0..2 {
            assert_eq!(
                cfg.partition.locate(row.relative[k]).unwrap(),
                row.regions[k],
                "t={}",
                row.t
            );
        }
    }
}

#[test]
fn follower_speed_respects_the_bound() {
    let cfg = ScenarioConfig::two_phase_mission();
    let rows = mission_run().rows;
    let switches: Vec<f64> = cfg.switch_times();
    for w in rows.windows(2) {
        if switches.iter().any(|&s| (w[1].t - s).abs() < 1e-9) {
            continue;
        }
        for k in 0..2 {
            let moved = w[1].followers[k].distance(w[0].followers[k]);
            assert!(moved <= cfg.dt * cfg.u_max + 1e-9, "t={} moved {moved}", w[1].t);
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let (a, b) = (mission_run(), mission_run());
    assert_eq!(trajectory_csv(&a.rows), trajectory_csv(&b.rows));
    assert_eq!(event_log(&a.log), event_log(&b.log));
    assert_eq!(a.verdict.to_string(), b.verdict.to_string());
}

#[test]
fn csv_has_the_documented_layout() {
    let out = mission_run();
    let csv = trajectory_csv(&out.rows);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(TRAJECTORY_HEADER));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 15);
    assert_eq!(first[0], "0.000000");
    assert_eq!(csv.lines().count(), out.rows.len() + 1);
    let text = out.verdict.to_string();
    for key in ["t_reach_1=", "t_reach_2=", "min_separation=", "alarm_episodes="] {
        assert!(text.lines().any(|l| l.starts_with(key)), "{key} missing");
    }
}

fn still_leader(mut cfg: ScenarioConfig) -> ScenarioConfig {
    cfg.leader_velocity = vec![(0.0, Vec2::ZERO)];
    cfg
}

#[test]
fn zero_speed_bound_freezes_the_relative_frame() {
    let mut cfg = still_leader(ScenarioConfig::two_phase_mission());
    cfg.u_max = 0.0;
    cfg.t_end = 40.0;
    let out = run_scenario(&cfg).unwrap();
    let first = &out.rows[0];
    assert!(out.rows.iter().all(|r| r.relative == first.relative));
    assert_eq!(out.verdict.phases[0].t_reach, [None, None]);
    assert!(out.verdict.to_string().contains("t_reach_1=none"));
}

#[test]
fn invariant_mode_keeps_a_follower_in_place_for_ten_thousand_steps() {
    let mut cfg = still_leader(ScenarioConfig::two_phase_mission());
    cfg.t_end = 220.0;
    for f in &mut cfg.followers {
        f.offsets.truncate(1);
        f.displacements.truncate(1);
    }
    cfg.followers[0].displacements[0].1 = Vec2::new(3.0, 2.0);
    let out = run_scenario(&cfg).unwrap();
    // Starting inside the first ring, the supervisor still needs one detection
    // before it allows C0; the inward command falls back to an angular exit.
    let c0: Vec<f64> = out.log.iter().filter(|r| r.event == "C0_1").map(|r| r.t).collect();
    assert_eq!(c0.len(), 1);
    let held: Vec<_> = out.rows.iter().filter(|r| r.t >= c0[0]).collect();
    assert!(held.len() > 10_000);
    assert!(held
        .iter()
        .all(|r| r.regions[0] == held[0].regions[0] && r.regions[0].i == 1));
}

#[test]
fn stopped_follower_holds_its_relative_position() {
    let sim = Simulator::new(ScenarioConfig::two_phase_mission()).unwrap();
    let mut w = sim.initial_state().unwrap();
    sim.supervisor_react(&mut w, &[], &mut Journal::default()).unwrap();
    w.agents[1].stopped = true;
    let next = sim.step(&w).unwrap();
    assert_eq!(next.relative_pos[1], w.relative_pos[1]);
    assert_eq!(next.follower_pos[1], w.follower_pos[1]);
    assert_ne!(next.leader_pos, w.leader_pos);
    assert_ne!(next.relative_pos[0], w.relative_pos[0]);
}

fn far_apart(sim: &Simulator) -> WorldState {
    let mut w = sim.initial_state().unwrap();
    sim.supervisor_react(&mut w, &[], &mut Journal::default()).unwrap();
    w
}

fn place(sim: &Simulator, w: &mut WorldState, k: usize, rel: Vec2) {
    let offset = sim.config().followers[k].offsets[0].1;
    w.relative_pos[k] = rel;
    w.follower_pos[k] = offset + rel;
}

#[test]
fn quiet_step_detects_nothing() {
    let sim = Simulator::new(ScenarioConfig::two_phase_mission()).unwrap();
    let w = far_apart(&sim);
    assert!(sim.detect_events(&w, &w).unwrap().is_empty());
}

#[test]
fn boundary_crossing_emits_one_detection() {
    let sim = Simulator::new(ScenarioConfig::two_phase_mission()).unwrap();
    let p = &sim.config().partition;
    let mut prev = far_apart(&sim);
    place(
        &sim,
        &mut prev,
        0,
        p.point_at(RegionIndex::new(3, 2), 0.02, 0.5).unwrap(),
    );
    prev.agents[0].region = RegionIndex::new(3, 2);
    let mut next = prev.clone();
    place(
        &sim,
        &mut next,
        0,
        p.point_at(RegionIndex::new(2, 2), 0.98, 0.5).unwrap(),
    );
    let events = sim.detect_events(&prev, &next).unwrap();
    assert_eq!(
        events,
        [Detected::Region {
            agent: Agent::One,
            region: RegionIndex::new(2, 2)
        }]
    );
    assert_eq!(Agent::One.detection_event(2, 2), "d_2_2_1");
}

/// Follower 1 heads along +x; follower 2 sits 7 m away at `bearing` from that heading.
fn alarm_at_bearing(bearing_deg: f64) -> Vec<Detected> {
    let sim = Simulator::new(still_leader(ScenarioConfig::two_phase_mission())).unwrap();
    let prev = far_apart(&sim);
    let mut next = prev.clone();
    next.agents[0].velocity = Vec2::new(2.0, 0.0);
    next.agents[0].command = Some(ControlMode::ExitRMinus);
    let f1 = next.follower_pos[0];
    let f2 = f1 + Vec2::from_polar(7.0, bearing_deg.to_radians());
    let offset2 = sim.config().followers[1].offsets[0].1;
    next.follower_pos[1] = f2;
    next.relative_pos[1] = f2 - offset2;
    next.agents[1].region = sim.config().partition.locate(next.relative_pos[1]).unwrap();
    sim.detect_events(&prev, &next).unwrap()
}

#[test]
fn alarm_side_follows_the_bearing() {
    let front = alarm_at_bearing(0.0);
    assert!(
        matches!(
            front.last(),
            Some(Detected::Alarm {
                avoider: Agent::One,
                in_front: true,
                ..
            })
        ),
        "{front:?}"
    );
    let side = alarm_at_bearing(120.0);
    assert!(
        matches!(
            side.last(),
            Some(Detected::Alarm {
                avoider: Agent::One,
                in_front: false,
                ..
            })
        ),
        "{side:?}"
    );
}

#[test]
fn supervisor_commands_follow_the_mission() {
    let out = mission_run();
    let first: Vec<&str> = out.log.iter().take(2).map(|r| r.event.as_str()).collect();
    assert_eq!(first, ["Cr-_1", "Cr-_2"]);
    // After entering the first ring a follower only ever repeats C0.
    for agent in Agent::BOTH {
        let words = agent_event_strings(
            &out.log,
            &out.log
                .iter()
                .map(|r| r.event.clone())
                .filter(|e| e.ends_with(&format!("_{}", agent.index())))
                .collect(),
        );
        for w in words {
            let entered = w
                .iter()
                .position(|e| e == &agent.command_event(ControlMode::Invariant))
                .unwrap();
            assert!(w[entered..]
                .iter()
                .all(|e| e == &agent.command_event(ControlMode::Invariant)));
        }
    }
}

#[test]
fn leaving_the_horizon_is_an_error() {
    let mut cfg = ScenarioConfig::two_phase_mission();
    cfg.leader_velocity = vec![(0.0, Vec2::new(4.0, 0.0))];
    cfg.u_max = 0.5;
    cfg.speed = 0.5;
    assert!(matches!(run_scenario(&cfg), Err(SimError::HorizonViolation { .. })));
}
