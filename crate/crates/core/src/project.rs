//! Natural projection onto a sub-alphabet.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::automaton::{uniquify, Automaton, AutomatonError, EventId, StateId};

/// The automaton `A` seen through a sub-alphabet: every event outside `keep`
/// becomes an ε-move. This is the nondeterministic object that [`natural_project`]
/// determinizes.
pub struct EpsilonView<'a> {
    automaton: &'a Automaton,
    kept: Vec<bool>,
}

impl<'a> EpsilonView<'a> {
    pub fn new(automaton: &'a Automaton, keep: &BTreeSet<String>) -> Result<Self, AutomatonError> {
        if let Some(missing) = keep.iter().find(|e| !automaton.has_event(e)) {
            return Err(AutomatonError::UnknownEvent(missing.clone()));
        }
        let kept = automaton.events().iter().map(|e| keep.contains(&e.id)).collect();
        Ok(EpsilonView { automaton, kept })
    }

    pub fn automaton(&self) -> &'a Automaton {
        self.automaton
    }

    pub fn is_kept(&self, e: EventId) -> bool {
        self.kept[e]
    }

    /// Kept events, in id order.
    pub fn kept_events(&self) -> impl Iterator<Item = EventId> + '_ {
        (0..self.kept.len()).filter(move |&e| self.kept[e])
    }

    /// ε-closure of a set of states.
    pub fn closure(&self, seed: impl IntoIterator<Item = StateId>) -> BTreeSet<StateId> {
        let mut out: BTreeSet<StateId> = BTreeSet::new();
        let mut stack: Vec<StateId> = Vec::new();
        for q in seed {
            if out.insert(q) {
                stack.push(q);
            }
        }
        while let Some(q) = stack.pop() {
            for (e, t) in self.automaton.transitions_from(q) {
                if !self.kept[e] && out.insert(t) {
                    stack.push(t);
                }
            }
        }
        out
    }

    /// Direct `e`-successors of the ε-closure of `q` (no closure afterwards).
    pub fn step(&self, q: StateId, e: EventId) -> BTreeSet<StateId> {
        debug_assert!(self.kept[e]);
        self.closure([q])
            .into_iter()
            .flat_map(|p| self.automaton.successors(p, e))
            .collect()
    }

    /// Closure of the `e`-successors of a closed set.
    pub fn post(&self, set: &BTreeSet<StateId>, e: EventId) -> BTreeSet<StateId> {
        self.closure(set.iter().flat_map(|&p| self.automaton.successors(p, e)))
    }

    /// Kept events that some member of the closed set can fire.
    pub fn enabled(&self, set: &BTreeSet<StateId>) -> BTreeSet<EventId> {
        set.iter()
            .flat_map(|&q| self.automaton.enabled(q))
            .filter(|&e| self.kept[e])
            .collect()
    }

    /// Searches for a string over the kept alphabet generated from one of `x1`, `x2`
    /// but not the other. `None` means their projected generated languages coincide.
    pub fn distinguishing_string(&self, x1: StateId, x2: StateId) -> Option<Vec<EventId>> {
        let start = (self.closure([x1]), self.closure([x2]));
        let mut seen: BTreeSet<(BTreeSet<StateId>, BTreeSet<StateId>)> = BTreeSet::new();
        let mut queue: VecDeque<(BTreeSet<StateId>, BTreeSet<StateId>, Vec<EventId>)> = VecDeque::new();
        seen.insert(start.clone());
        queue.push_back((start.0, start.1, Vec::new()));
        while let Some((s1, s2, word)) = queue.pop_front() {
            let en1 = self.enabled(&s1);
            let en2 = self.enabled(&s2);
            if let Some(&e) = en1.symmetric_difference(&en2).next() {
                let mut w = word;
                w.push(e);
                return Some(w);
            }
            for e in en1 {
                let next = (self.post(&s1, e), self.post(&s2, e));
                if seen.insert(next.clone()) {
                    let mut w = word.clone();
                    w.push(e);
                    queue.push_back((next.0, next.1, w));
                }
            }
        }
        None
    }
}

/// Natural projection `P(A)` onto `keep`: events outside `keep` are replaced
/// by ε-moves and the result is determinized by subset construction. A subset
/// state is marked iff it contains a marked state.
///
/// Singleton subsets keep their original state name; larger subsets are named
/// by their sorted member names joined with `-`.
pub fn natural_project(a: &Automaton, keep: &BTreeSet<String>) -> Result<Automaton, AutomatonError> {
    let view = EpsilonView::new(a, keep)?;
    let kept: Vec<EventId> = view.kept_events().collect();
    let events = kept.iter().map(|&e| a.event(e).clone()).collect();

    let mut index: HashMap<BTreeSet<StateId>, StateId> = HashMap::new();
    let mut subsets: Vec<BTreeSet<StateId>> = Vec::new();
    let mut delta: Vec<BTreeMap<EventId, BTreeSet<StateId>>> = Vec::new();
    let mut queue = VecDeque::new();

    let start = view.closure([a.initial()]);
    index.insert(start.clone(), 0);
    subsets.push(start);
    delta.push(BTreeMap::new());
    queue.push_back(0);

    while let Some(id) = queue.pop_front() {
        for (new_e, &e) in kept.iter().enumerate() {
            let next = view.post(&subsets[id], e);
            if next.is_empty() {
                continue;
            }
            let target = match index.get(&next) {
                Some(&t) => t,
                None => {
                    let t = subsets.len();
                    index.insert(next.clone(), t);
                    subsets.push(next);
                    delta.push(BTreeMap::new());
                    queue.push_back(t);
                    t
                }
            };
            delta[id].entry(new_e).or_default().insert(target);
        }
    }

    let names = uniquify(
        subsets
            .iter()
            .map(|set| {
                let mut members: Vec<&str> = set.iter().map(|&q| a.state_name(q)).collect();
                members.sort_unstable();
                members.join("-")
            })
            .collect(),
    );
    let marked = subsets.iter().map(|set| set.iter().any(|&q| a.is_marked(q))).collect();
    Ok(Automaton::from_parts(names, 0, marked, events, delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::EventInfo;
    use crate::language::marked_language_upto;

    fn keep(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn chain_projected_to_last_event() {
        let a = Automaton::builder()
            .events([EventInfo::controllable("a"), EventInfo::controllable("b")])
            .initial("q0")
            .marked("q2")
            .transition("q0", "a", "q1")
            .transition("q1", "b", "q2")
            .build()
            .unwrap();
        let p = natural_project(&a, &keep(&["b"])).unwrap();
        assert!(p.is_deterministic());
        assert_eq!(p.num_states(), 2);
        assert_eq!(p.num_transitions(), 1);
        assert_eq!(p.state_name(p.initial()), "q0-q1");
        let lm = marked_language_upto(&p, 3).unwrap();
        assert_eq!(lm, BTreeSet::from([vec!["b".to_string()]]));
    }

    #[test]
    fn unknown_keep_event_is_an_error() {
        let a = Automaton::builder().state("s").initial("s").build().unwrap();
        assert!(matches!(
            natural_project(&a, &keep(&["x"])),
            Err(AutomatonError::UnknownEvent(_))
        ));
    }

    #[test]
    fn distinguishing_string_detects_different_futures() {
        let a = Automaton::builder()
            .events([
                EventInfo::controllable("a"),
                EventInfo::controllable("b"),
                EventInfo::controllable("h"),
            ])
            .initial("x")
            .transition("x", "a", "y")
            .transition("x", "a", "z")
            .transition("y", "b", "y")
            .transition("z", "h", "w")
            .transition("w", "b", "w")
            .build()
            .unwrap();
        let view = EpsilonView::new(&a, &keep(&["a", "b"])).unwrap();
        let y = a.state_id("y").unwrap();
        let z = a.state_id("z").unwrap();
        let x = a.state_id("x").unwrap();
        // z reaches b through the hidden h, so y and z agree on the kept alphabet.
        assert_eq!(view.distinguishing_string(y, z), None);
        assert!(view.distinguishing_string(x, y).is_some());
    }
}
