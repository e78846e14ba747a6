//! Reference implementations used as oracles. They work directly on the
//! transition relation and share no code with composition, projection,
//! bisimulation or controllability.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BTreeSet;

use polaris_core::automaton::{Automaton, StateId};
use polaris_core::random::{random_automaton, Shape};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Word = Vec<String>;

type Visit<'a> = dyn FnMut(&[String], &[BTreeSet<StateId>]) + 'a;

pub fn automaton_from_seed(seed: u64, shape: &Shape) -> Automaton {
    random_automaton(&mut ChaCha8Rng::seed_from_u64(seed), shape)
}

/// States reached from the initial state of `a` on `event`, from `set`.
/// Events outside the alphabet of `a` leave the set unchanged.
pub fn post(a: &Automaton, set: &BTreeSet<StateId>, event: &str) -> BTreeSet<StateId> {
    match a.event_id(event) {
        None => set.clone(),
        Some(e) => set.iter().flat_map(|&q| a.successors(q, e)).collect(),
    }
}

pub fn run(a: &Automaton, word: &[String]) -> BTreeSet<StateId> {
    let mut set = BTreeSet::from([a.initial()]);
    for e in word {
        set = post(a, &set, e);
    }
    set
}

pub fn any_marked(a: &Automaton, set: &BTreeSet<StateId>) -> bool {
    set.iter().any(|&q| a.is_marked(q))
}

pub fn union_alphabet(automata: &[&Automaton]) -> Vec<String> {
    let set: BTreeSet<String> = automata.iter().flat_map(|a| a.alphabet()).collect();
    set.into_iter().collect()
}

/// Depth-first walk over words of length ≤ `bound` on the sorted union
/// alphabet, tracking the run of every automaton separately. A branch is cut
/// as soon as one run is empty. `visit` sees every surviving word in
/// lexicographic order.
pub fn walk(automata: &[&Automaton], bound: usize, mut visit: impl FnMut(&[String], &[BTreeSet<StateId>])) {
    let alphabet = union_alphabet(automata);
    let start: Vec<BTreeSet<StateId>> = automata.iter().map(|a| BTreeSet::from([a.initial()])).collect();
    let mut word = Vec::new();
    fn go(
        automata: &[&Automaton],
        alphabet: &[String],
        bound: usize,
        word: &mut Vec<String>,
        sets: &[BTreeSet<StateId>],
        visit: &mut Visit<'_>,
    ) {
        visit(word, sets);
        if word.len() == bound {
            return;
        }
        for e in alphabet {
            let next: Vec<BTreeSet<StateId>> = automata.iter().zip(sets).map(|(a, s)| post(a, s, e)).collect();
            if next.iter().all(|s| !s.is_empty()) {
                word.push(e.clone());
                go(automata, alphabet, bound, word, &next, visit);
                word.pop();
            }
        }
    }
    go(automata, &alphabet, bound, &mut word, &start, &mut visit);
}

/// Words of length ≤ `bound` generated by every automaton, in lexicographic order.
pub fn joint_generated(automata: &[&Automaton], bound: usize) -> Vec<Word> {
    let mut out = Vec::new();
    walk(automata, bound, |w, _| out.push(w.to_vec()));
    out
}

/// Words of length ≤ `bound` generated by every automaton and marked by all
/// of `automata[i]` with `must_mark[i]`.
pub fn joint_marked(automata: &[&Automaton], must_mark: &[bool], bound: usize) -> Vec<Word> {
    let mut out = Vec::new();
    walk(automata, bound, |w, sets| {
        if automata
            .iter()
            .zip(sets)
            .zip(must_mark)
            .all(|((a, s), &m)| !m || any_marked(a, s))
        {
            out.push(w.to_vec());
        }
    });
    out
}

/// Streams `a` and `b`, both sorted, and reports the first word present in
/// only one of them.
pub fn first_difference(
    a: impl IntoIterator<Item = Word>,
    b: impl IntoIterator<Item = Word>,
) -> Option<(Word, &'static str)> {
    let (mut a, mut b) = (a.into_iter().peekable(), b.into_iter().peekable());
    loop {
        match (a.peek(), b.peek()) {
            (None, None) => return None,
            (Some(x), None) => return Some((x.clone(), "left only")),
            (None, Some(y)) => return Some((y.clone(), "right only")),
            (Some(x), Some(y)) => match x.cmp(y) {
                Ordering::Equal => {
                    a.next();
                    b.next();
                }
                Ordering::Less => return Some((x.clone(), "left only")),
                Ordering::Greater => return Some((y.clone(), "right only")),
            },
        }
    }
}

/// Sorted intersection of two sorted streams.
pub fn intersect_sorted(
    a: impl IntoIterator<Item = Word>,
    b: impl IntoIterator<Item = Word>,
) -> impl Iterator<Item = Word> {
    let (mut a, mut b) = (a.into_iter().peekable(), b.into_iter().peekable());
    std::iter::from_fn(move || loop {
        let ord = a.peek()?.cmp(b.peek()?);
        match ord {
            Ordering::Equal => {
                b.next();
                return a.next();
            }
            Ordering::Less => {
                a.next();
            }
            Ordering::Greater => {
                b.next();
            }
        }
    })
}

/// Greatest bisimulation by pair elimination over the union alphabet,
/// with marking as part of the state label.
pub fn naive_bisimilar(a: &Automaton, b: &Automaton) -> bool {
    let alphabet = union_alphabet(&[a, b]);
    let succ = |x: &Automaton, q: StateId, e: &str| -> Vec<StateId> {
        x.event_id(e)
            .map(|id| x.successors(q, id).collect())
            .unwrap_or_default()
    };
    let mut rel: BTreeSet<(StateId, StateId)> = (0..a.num_states())
        .flat_map(|p| (0..b.num_states()).map(move |q| (p, q)))
        .filter(|&(p, q)| a.is_marked(p) == b.is_marked(q))
        .collect();
    loop {
        let keep: BTreeSet<(StateId, StateId)> = rel
            .iter()
            .copied()
            .filter(|&(p, q)| {
                alphabet.iter().all(|e| {
                    let (sp, sq) = (succ(a, p, e), succ(b, q, e));
                    sp.iter().all(|&p2| sq.iter().any(|&q2| rel.contains(&(p2, q2))))
                        && sq.iter().all(|&q2| sp.iter().any(|&p2| rel.contains(&(p2, q2))))
                })
            })
            .collect();
        if keep.len() == rel.len() {
            return keep.contains(&(a.initial(), b.initial()));
        }
        rel = keep;
    }
}

/// ε-closure of `set` in `a`, where ε is every event outside `keep`.
pub fn eps_closure(a: &Automaton, keep: &BTreeSet<String>, set: &BTreeSet<StateId>) -> BTreeSet<StateId> {
    let mut out = set.clone();
    let mut stack: Vec<StateId> = set.iter().copied().collect();
    while let Some(q) = stack.pop() {
        for (e, r) in a.transitions_from(q) {
            if !keep.contains(&a.event(e).id) && out.insert(r) {
                stack.push(r);
            }
        }
    }
    out
}

/// Runs of `a` observed through `keep`: the set of states compatible with
/// having observed `word`.
pub fn observed_run(a: &Automaton, keep: &BTreeSet<String>, word: &[String]) -> BTreeSet<StateId> {
    let mut set = eps_closure(a, keep, &BTreeSet::from([a.initial()]));
    for e in word {
        set = eps_closure(a, keep, &post(a, &set, e));
    }
    set
}

/// Every word over `alphabet` of length ≤ `bound`, in lexicographic order.
pub fn all_words(alphabet: &[String], bound: usize) -> Vec<Word> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..bound {
        let mut next = Vec::new();
        for w in &frontier {
            for e in alphabet {
                let mut w2: Word = w.clone();
                w2.push(e.clone());
                next.push(w2);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out.sort();
    out
}
