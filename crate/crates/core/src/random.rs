//! Seeded generators of small automata for property checks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::automaton::{Automaton, AutomatonBuilder, EventInfo};
use crate::synthesis::check_controllability;

const EVENT_NAMES: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

/// Shape of a generated automaton.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shape {
    pub max_states: usize,
    pub max_events: usize,
    /// Probability that a given (state, event) pair has a transition.
    pub density: f64,
    pub uncontrollable_fraction: f64,
    pub deterministic: bool,
}

impl Default for Shape {
    fn default() -> Self {
        Shape {
            max_states: 5,
            max_events: 4,
            density: 0.5,
            uncontrollable_fraction: 0.35,
            deterministic: true,
        }
    }
}

/// Event infos for `n` events named `a, b, ...`; the controllability of each
/// is drawn independently.
pub fn random_events(rng: &mut impl Rng, n: usize, uncontrollable_fraction: f64) -> Vec<EventInfo> {
    assert!(n <= EVENT_NAMES.len(), "at most {} events", EVENT_NAMES.len());
    EVENT_NAMES[..n]
        .iter()
        .map(|e| {
            if rng.gen_bool(uncontrollable_fraction) {
                EventInfo::uncontrollable(*e)
            } else {
                EventInfo::controllable(*e)
            }
        })
        .collect()
}

fn state_name(prefix: &str, q: usize) -> String {
    format!("{prefix}{q}")
}

fn skeleton(prefix: &str, n: usize, events: &[EventInfo]) -> AutomatonBuilder {
    let mut b = Automaton::builder();
    b.events(events.iter().cloned());
    for q in 0..n {
        b.state(state_name(prefix, q));
    }
    b.initial(state_name(prefix, 0));
    b
}

/// A random automaton over `events` with `1..=max_states` states and a random,
/// non-empty marked set.
pub fn random_automaton_over(rng: &mut impl Rng, shape: &Shape, events: &[EventInfo]) -> Automaton {
    let n = rng.gen_range(1..=shape.max_states.max(1));
    let mut b = skeleton("q", n, events);
    for q in 0..n {
        for e in events {
            if !rng.gen_bool(shape.density) {
                continue;
            }
            let fanout = if shape.deterministic { 1 } else { rng.gen_range(1..=2) };
            for _ in 0..fanout {
                b.transition(state_name("q", q), &e.id, state_name("q", rng.gen_range(0..n)));
            }
        }
    }
    let mut marked: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
    if marked.is_empty() {
        marked.push(rng.gen_range(0..n));
    }
    for q in marked {
        b.marked(state_name("q", q));
    }
    b.build().expect("generated automaton is well formed")
}

pub fn random_automaton(rng: &mut impl Rng, shape: &Shape) -> Automaton {
    let n_events = rng.gen_range(1..=shape.max_events.max(1));
    let events = random_events(rng, n_events, shape.uncontrollable_fraction);
    random_automaton_over(rng, shape, &events)
}

/// A deterministic supervisor over the alphabet of `plant` with every state
/// marked, made controllable with respect to `plant` by adding the missing
/// uncontrollable transitions that the controllability check reports.
pub fn random_supervisor(rng: &mut impl Rng, plant: &Automaton, max_states: usize) -> Automaton {
    let events: Vec<EventInfo> = plant.events().to_vec();
    let n = rng.gen_range(1..=max_states.max(1));
    let mut transitions: Vec<(usize, String, usize)> = Vec::new();
    for q in 0..n {
        for e in &events {
            if rng.gen_bool(0.6) {
                transitions.push((q, e.id.clone(), rng.gen_range(0..n)));
            }
        }
    }
    let build = |transitions: &[(usize, String, usize)]| {
        let mut b = skeleton("s", n, &events);
        for q in 0..n {
            b.marked(state_name("s", q));
        }
        for (q, e, r) in transitions {
            b.transition(state_name("s", *q), e, state_name("s", *r));
        }
        b.build().expect("generated supervisor is well formed")
    };
    let uc = plant.uncontrollable_events();
    // Each repair fills one undefined (state, event) pair, so at most n·|E| rounds.
    loop {
        let s = build(&transitions);
        let report = check_controllability(&s, plant, &uc).expect("supervisor shares the plant alphabet");
        let Some(w) = report.witness else { return s };
        let q = *s
            .run_from(s.initial(), &w.prefix)
            .iter()
            .next()
            .expect("witness prefix is generated by the supervisor");
        let q: usize = s.state_name(q)[1..].parse().expect("generated state name");
        transitions.push((q, w.event, rng.gen_range(0..n)));
    }
}

/// A plant with two controllable supervisors over its alphabet.
#[derive(Debug, Clone)]
pub struct SupervisionInstance {
    pub plant: Automaton,
    pub s1: Automaton,
    pub s2: Automaton,
}

/// The instance drawn from `seed`; equal seeds give equal instances.
pub fn supervision_instance(seed: u64, shape: &Shape) -> SupervisionInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = Shape {
        deterministic: true,
        ..*shape
    };
    let plant = random_automaton(&mut rng, &shape);
    let s1 = random_supervisor(&mut rng, &plant, shape.max_states);
    let s2 = random_supervisor(&mut rng, &plant, shape.max_states);
    SupervisionInstance { plant, s1, s2 }
}

/// Two event sets covering `events`, each non-empty when `events` has at least
/// two members, with a random shared part.
pub fn random_split(rng: &mut impl Rng, events: &[String]) -> (Vec<String>, Vec<String>) {
    let mut shuffled = events.to_vec();
    shuffled.shuffle(rng);
    let (mut e1, mut e2) = (Vec::new(), Vec::new());
    for (i, e) in shuffled.into_iter().enumerate() {
        match (i, rng.gen_range(0..3)) {
            (0, _) | (_, 0) => e1.push(e),
            (1, _) | (_, 1) => e2.push(e),
            _ => {
                e1.push(e.clone());
                e2.push(e);
            }
        }
    }
    e1.sort();
    e2.sort();
    (e1, e2)
}
