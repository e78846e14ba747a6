//! Synchronous (parallel) composition.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::automaton::{merge_alphabets, uniquify, Automaton, AutomatonError, EventId, StateId};

/// `A1 ‖ A2`: shared events synchronize, private events interleave, a product
/// state is marked iff both components are. Only the accessible part is built.
///
/// Product states are named `q1+q2`.
pub fn parallel_compose(a1: &Automaton, a2: &Automaton) -> Result<Automaton, AutomatonError> {
    let events = merge_alphabets(a1.events(), a2.events())?;
    let local: Vec<(Option<EventId>, Option<EventId>)> = events
        .iter()
        .map(|e| (a1.event_id(&e.id), a2.event_id(&e.id)))
        .collect();

    let mut index: HashMap<(StateId, StateId), StateId> = HashMap::new();
    let mut pairs: Vec<(StateId, StateId)> = Vec::new();
    let mut delta: Vec<BTreeMap<EventId, BTreeSet<StateId>>> = Vec::new();
    let mut queue = VecDeque::new();

    let mut intern = |pair: (StateId, StateId),
                      pairs: &mut Vec<(StateId, StateId)>,
                      delta: &mut Vec<BTreeMap<EventId, BTreeSet<StateId>>>,
                      queue: &mut VecDeque<StateId>| {
        *index.entry(pair).or_insert_with(|| {
            pairs.push(pair);
            delta.push(BTreeMap::new());
            queue.push_back(pairs.len() - 1);
            pairs.len() - 1
        })
    };

    let start = intern((a1.initial(), a2.initial()), &mut pairs, &mut delta, &mut queue);
    while let Some(id) = queue.pop_front() {
        let (q1, q2) = pairs[id];
        for (e, &(e1, e2)) in local.iter().enumerate() {
            let next1: Vec<StateId> = match e1 {
                Some(e1) => a1.successors(q1, e1).collect(),
                None => vec![q1],
            };
            if next1.is_empty() {
                continue;
            }
            let next2: Vec<StateId> = match e2 {
                Some(e2) => a2.successors(q2, e2).collect(),
                None => vec![q2],
            };
            for &t1 in &next1 {
                for &t2 in &next2 {
                    let t = intern((t1, t2), &mut pairs, &mut delta, &mut queue);
                    delta[id].entry(e).or_default().insert(t);
                }
            }
        }
    }

    let names = uniquify(
        pairs
            .iter()
            .map(|&(q1, q2)| format!("{}+{}", a1.state_name(q1), a2.state_name(q2)))
            .collect(),
    );
    let marked = pairs
        .iter()
        .map(|&(q1, q2)| a1.is_marked(q1) && a2.is_marked(q2))
        .collect();
    Ok(Automaton::from_parts(names, start, marked, events, delta))
}

/// Composition of a non-empty list of automata, left to right.
pub fn compose_all<'a>(automata: impl IntoIterator<Item = &'a Automaton>) -> Result<Automaton, AutomatonError> {
    let mut iter = automata.into_iter();
    let first = iter.next().expect("compose_all needs at least one automaton").clone();
    iter.try_fold(first, |acc, a| parallel_compose(&acc, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::EventInfo;
    use crate::language::marked_language_upto;

    fn one_step(event: &str) -> Automaton {
        Automaton::builder()
            .event(EventInfo::controllable(event))
            .states(["p", "q"])
            .initial("p")
            .marked("q")
            .transition("p", event, "q")
            .build()
            .unwrap()
    }

    #[test]
    fn disjoint_alphabets_shuffle() {
        let c = parallel_compose(&one_step("a"), &one_step("b")).unwrap();
        assert_eq!(c.num_states(), 4);
        let lm = marked_language_upto(&c, 3).unwrap();
        let expected: std::collections::BTreeSet<Vec<String>> = [vec!["a", "b"], vec!["b", "a"]]
            .into_iter()
            .map(|w| w.into_iter().map(String::from).collect())
            .collect();
        assert_eq!(lm, expected);
        assert_eq!(c.state_name(c.initial()), "p+p");
    }

    #[test]
    fn shared_event_must_synchronize() {
        let left = one_step("a");
        let right = Automaton::builder()
            .event(EventInfo::controllable("a"))
            .state("r")
            .initial("r")
            .marked("r")
            .build()
            .unwrap();
        let c = parallel_compose(&left, &right).unwrap();
        assert_eq!(c.num_states(), 1);
        assert!(!c.generates(&["a"]));
    }

    #[test]
    fn conflicting_flags_are_rejected() {
        let left = one_step("a");
        let right = Automaton::builder()
            .event(EventInfo::uncontrollable("a"))
            .state("r")
            .initial("r")
            .build()
            .unwrap();
        assert_eq!(
            parallel_compose(&left, &right).unwrap_err(),
            AutomatonError::AlphabetConflict { event: "a".into() }
        );
    }
}
