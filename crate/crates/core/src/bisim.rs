//! Strong bisimulation by partition refinement.
//!
//! Both automata are placed side by side in one transition graph over the
//! union alphabet. The initial partition separates marked from unmarked states,
//! so bisimilar automata have equal marked languages. Blocks are split on the
//! set of `(event, target block)` pairs until stable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::automaton::{Automaton, StateId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Why two states are not bisimilar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Distinction {
    /// One state is marked, the other is not.
    Marking { left_marked: bool },
    /// Only one side can fire `event`.
    EventOnly { side: Side, event: String },
}

/// A path from the initial pair to a pair of states that differ locally.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BisimCounterexample {
    pub trace: Vec<String>,
    pub left: String,
    pub right: String,
    pub distinction: Distinction,
}

impl fmt::Display for BisimCounterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "after [{}]: left state `{}` vs right state `{}`: ",
            self.trace.join(" "),
            self.left,
            self.right
        )?;
        match &self.distinction {
            Distinction::Marking { left_marked } => {
                let (m, u) = if *left_marked {
                    ("left", "right")
                } else {
                    ("right", "left")
                };
                write!(f, "{m} is marked, {u} is not")
            }
            Distinction::EventOnly { side, event } => {
                let s = match side {
                    Side::Left => "left",
                    Side::Right => "right",
                };
                write!(f, "only the {s} state enables `{event}`")
            }
        }
    }
}

/// Pairs of state names `(state of A1, state of A2)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BisimRelation {
    pub pairs: BTreeSet<(String, String)>,
}

impl BisimRelation {
    /// Checks the defining conditions directly: the initial pair is related,
    /// related states agree on marking, and every move of either side is
    /// matched by an equally labelled move of the other into a related pair.
    pub fn is_bisimulation(&self, a1: &Automaton, a2: &Automaton) -> bool {
        let related = |p: StateId, q: StateId| {
            self.pairs
                .contains(&(a1.state_name(p).to_string(), a2.state_name(q).to_string()))
        };
        if !related(a1.initial(), a2.initial()) {
            return false;
        }
        for (n1, n2) in &self.pairs {
            let (Some(p), Some(q)) = (a1.state_id(n1), a2.state_id(n2)) else {
                return false;
            };
            if a1.is_marked(p) != a2.is_marked(q) {
                return false;
            }
            for (e, p2) in a1.transitions_from(p) {
                let ok = a2
                    .event_id(&a1.event(e).id)
                    .map(|e2| a2.successors(q, e2).any(|q2| related(p2, q2)))
                    .unwrap_or(false);
                if !ok {
                    return false;
                }
            }
            for (e, q2) in a2.transitions_from(q) {
                let ok = a1
                    .event_id(&a2.event(e).id)
                    .map(|e1| a1.successors(p, e1).any(|p2| related(p2, q2)))
                    .unwrap_or(false);
                if !ok {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BisimVerdict {
    pub bisimilar: bool,
    /// The coarsest bisimulation between the two automata, when they are bisimilar.
    pub relation: Option<BisimRelation>,
    pub counterexample: Option<BisimCounterexample>,
}

/// The disjoint union of two automata over their union alphabet.
struct Union<'a> {
    a1: &'a Automaton,
    a2: &'a Automaton,
    event_names: Vec<String>,
    /// Outgoing `(union event, union state)` pairs, sorted.
    edges: Vec<Vec<(usize, usize)>>,
    marked: Vec<bool>,
}

impl<'a> Union<'a> {
    fn new(a1: &'a Automaton, a2: &'a Automaton) -> Self {
        let event_names: Vec<String> = a1.alphabet().union(&a2.alphabet()).cloned().collect();
        let global: BTreeMap<&str, usize> = event_names.iter().enumerate().map(|(i, e)| (e.as_str(), i)).collect();
        let n1 = a1.num_states();
        let mut edges = Vec::with_capacity(n1 + a2.num_states());
        let mut marked = Vec::with_capacity(n1 + a2.num_states());
        for (a, offset) in [(a1, 0), (a2, n1)] {
            for q in 0..a.num_states() {
                let mut out: Vec<(usize, usize)> = a
                    .transitions_from(q)
                    .map(|(e, t)| (global[a.event(e).id.as_str()], t + offset))
                    .collect();
                out.sort_unstable();
                edges.push(out);
                marked.push(a.is_marked(q));
            }
        }
        Union {
            a1,
            a2,
            event_names,
            edges,
            marked,
        }
    }

    fn name(&self, s: usize) -> &str {
        let n1 = self.a1.num_states();
        if s < n1 {
            self.a1.state_name(s)
        } else {
            self.a2.state_name(s - n1)
        }
    }

    /// Block numbering of every refinement round; the last entry is stable.
    fn refine(&self) -> Vec<Vec<usize>> {
        let mut levels = vec![self.marked.iter().map(|&m| usize::from(m)).collect::<Vec<_>>()];
        loop {
            let current = levels.last().unwrap();
            let mut ids: BTreeMap<(usize, Vec<(usize, usize)>), usize> = BTreeMap::new();
            let mut next = Vec::with_capacity(current.len());
            for s in 0..current.len() {
                let mut sig: Vec<(usize, usize)> = self.edges[s].iter().map(|&(e, t)| (e, current[t])).collect();
                sig.sort_unstable();
                sig.dedup();
                let fresh = ids.len();
                next.push(*ids.entry((current[s], sig)).or_insert(fresh));
            }
            let before = current.iter().collect::<BTreeSet<_>>().len();
            let stable = ids.len() == before;
            levels.push(next);
            if stable {
                return levels;
            }
        }
    }
}

fn split_level(levels: &[Vec<usize>], p: usize, q: usize) -> Option<usize> {
    levels.iter().position(|blocks| blocks[p] != blocks[q])
}

fn describe(union: &Union<'_>, levels: &[Vec<usize>], mut p: usize, mut q: usize) -> BisimCounterexample {
    let mut trace = Vec::new();
    loop {
        let k = split_level(levels, p, q).expect("pair must be distinguished");
        let done = |distinction| BisimCounterexample {
            trace: trace.clone(),
            left: union.name(p).to_string(),
            right: union.name(q).to_string(),
            distinction,
        };
        if k == 0 {
            return done(Distinction::Marking {
                left_marked: union.marked[p],
            });
        }
        let prev = &levels[k - 1];
        // Look for a move of one side that the other cannot match at level k-1.
        let mut step: Option<(usize, usize, usize)> = None;
        'search: for (mover, other, mover_is_left) in [(p, q, true), (q, p, false)] {
            for &(e, t) in &union.edges[mover] {
                let answers: Vec<usize> = union.edges[other]
                    .iter()
                    .filter(|&&(e2, _)| e2 == e)
                    .map(|&(_, t2)| t2)
                    .collect();
                if answers.is_empty() {
                    let side = if mover_is_left { Side::Left } else { Side::Right };
                    return done(Distinction::EventOnly {
                        side,
                        event: union.event_names[e].clone(),
                    });
                }
                if answers.iter().all(|&t2| prev[t2] != prev[t]) {
                    // Follow the answer that stays equivalent the longest; ties by name.
                    let best = answers
                        .into_iter()
                        .max_by(|&x, &y| {
                            let kx = split_level(levels, t, x);
                            let ky = split_level(levels, t, y);
                            kx.cmp(&ky).then_with(|| union.name(y).cmp(union.name(x)))
                        })
                        .unwrap();
                    let (np, nq) = if mover_is_left { (t, best) } else { (best, t) };
                    step = Some((e, np, nq));
                    break 'search;
                }
            }
        }
        let (e, np, nq) = step.expect("a split pair always has an unmatched move");
        trace.push(union.event_names[e].clone());
        p = np;
        q = nq;
    }
}

/// Coarsest bisimulation classes of the states of one automaton.
pub fn state_classes(a: &Automaton) -> Vec<usize> {
    let union = Union::new(a, a);
    let levels = union.refine();
    levels.last().unwrap()[..a.num_states()].to_vec()
}

/// Decides `A1 ≅ A2` (marking-sensitive strong bisimulation).
pub fn is_bisimilar(a1: &Automaton, a2: &Automaton) -> BisimVerdict {
    let union = Union::new(a1, a2);
    let levels = union.refine();
    let stable = levels.last().unwrap();
    let n1 = a1.num_states();
    let (p0, q0) = (a1.initial(), n1 + a2.initial());
    if stable[p0] == stable[q0] {
        let mut pairs = BTreeSet::new();
        for p in 0..n1 {
            for q in 0..a2.num_states() {
                if stable[p] == stable[n1 + q] {
                    pairs.insert((a1.state_name(p).to_string(), a2.state_name(q).to_string()));
                }
            }
        }
        BisimVerdict {
            bisimilar: true,
            relation: Some(BisimRelation { pairs }),
            counterexample: None,
        }
    } else {
        BisimVerdict {
            bisimilar: false,
            relation: None,
            counterexample: Some(describe(&union, &levels, p0, q0)),
        }
    }
}
