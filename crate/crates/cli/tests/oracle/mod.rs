//! Table-driven oracles for deterministic automata. They read only the
//! transition relation of each part and never build a product automaton, so
//! they share no code with composition, projection, bisimulation or the
//! controllability check of the library.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet, VecDeque};

use polaris_core::automaton::Automaton;

const ABSENT: usize = usize::MAX;
const BLOCKED: usize = usize::MAX - 1;

/// Synchronous product of deterministic parts, evaluated on the fly over the
/// sorted union alphabet.
pub struct Product<'a> {
    parts: Vec<&'a Automaton>,
    pub alphabet: Vec<String>,
    /// `delta[k][q * n + e]`: successor of part `k`, `ABSENT` when `e` is not
    /// in its alphabet, `BLOCKED` when it is but is not enabled.
    delta: Vec<Vec<usize>>,
}

impl<'a> Product<'a> {
    pub fn new(parts: &[&'a Automaton]) -> Self {
        let alphabet: Vec<String> = parts
            .iter()
            .flat_map(|a| a.alphabet())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let n = alphabet.len();
        let delta = parts
            .iter()
            .map(|a| {
                let mut table = vec![ABSENT; a.num_states() * n];
                for (e, name) in alphabet.iter().enumerate() {
                    if let Some(id) = a.event_id(name) {
                        for q in 0..a.num_states() {
                            let succ: Vec<usize> = a.successors(q, id).collect();
                            assert!(succ.len() <= 1, "oracle needs deterministic parts");
                            table[q * n + e] = succ.first().copied().unwrap_or(BLOCKED);
                        }
                    }
                }
                table
            })
            .collect();
        Product {
            parts: parts.to_vec(),
            alphabet,
            delta,
        }
    }

    pub fn initial(&self) -> Vec<usize> {
        self.parts.iter().map(|a| a.initial()).collect()
    }

    pub fn step(&self, state: &[usize], e: usize) -> Option<Vec<usize>> {
        let n = self.alphabet.len();
        let mut next = Vec::with_capacity(state.len());
        for (k, &q) in state.iter().enumerate() {
            match self.delta[k][q * n + e] {
                BLOCKED => return None,
                ABSENT => next.push(q),
                r => next.push(r),
            }
        }
        Some(next)
    }

    pub fn marked(&self, state: &[usize], must_mark: &[bool]) -> bool {
        self.parts
            .iter()
            .zip(state)
            .zip(must_mark)
            .all(|((a, &q), &m)| !m || a.is_marked(q))
    }

    /// Visits every generated word of length ≤ `bound` in lexicographic
    /// order, with whether it is marked by every part flagged in `must_mark`.
    pub fn walk(&self, must_mark: &[bool], bound: usize, visit: &mut dyn FnMut(&[usize], bool)) {
        let mut word = Vec::new();
        self.go(&self.initial(), must_mark, bound, &mut word, visit);
    }

    fn go(
        &self,
        state: &[usize],
        must_mark: &[bool],
        bound: usize,
        word: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize], bool),
    ) {
        visit(word, self.marked(state, must_mark));
        if word.len() == bound {
            return;
        }
        for e in 0..self.alphabet.len() {
            if let Some(next) = self.step(state, e) {
                word.push(e);
                self.go(&next, must_mark, bound, word, visit);
                word.pop();
            }
        }
    }

    pub fn names(&self, word: &[usize]) -> Vec<String> {
        word.iter().map(|&e| self.alphabet[e].clone()).collect()
    }
}

/// Equivalence of two deterministic products: their reachable pairs agree on
/// enabled events and marking. For deterministic systems this is exactly
/// strong bisimilarity. Returns the path to a disagreeing pair.
pub fn equivalent(left: &Product, right: &Product) -> Result<usize, String> {
    let alphabet: Vec<String> = left
        .alphabet
        .iter()
        .chain(&right.alphabet)
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index = |p: &Product, name: &str| p.alphabet.iter().position(|e| e == name);
    let l_idx: Vec<Option<usize>> = alphabet.iter().map(|e| index(left, e)).collect();
    let r_idx: Vec<Option<usize>> = alphabet.iter().map(|e| index(right, e)).collect();
    let all_left = vec![true; left.parts.len()];
    let all_right = vec![true; right.parts.len()];

    let start = (left.initial(), right.initial());
    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([(start, Vec::<String>::new())]);
    while let Some(((l, r), path)) = queue.pop_front() {
        if left.marked(&l, &all_left) != right.marked(&r, &all_right) {
            return Err(format!("marking differs after [{}]", path.join(" ")));
        }
        for (e, name) in alphabet.iter().enumerate() {
            // An event outside one side's alphabet is never enabled there.
            let ln = l_idx[e].and_then(|i| left.step(&l, i));
            let rn = r_idx[e].and_then(|i| right.step(&r, i));
            match (ln, rn) {
                (None, None) => {}
                (Some(ln), Some(rn)) => {
                    if seen.insert((ln.clone(), rn.clone())) {
                        let mut p = path.clone();
                        p.push(name.clone());
                        queue.push_back(((ln, rn), p));
                    }
                }
                (l_only, _) => {
                    let side = if l_only.is_some() { "left" } else { "right" };
                    return Err(format!(
                        "after [{}] only the {side} side enables {name}",
                        path.join(" ")
                    ));
                }
            }
        }
    }
    Ok(seen.len())
}

/// First `(prefix, event)` where the product `plant` can fire an
/// uncontrollable event that the deterministic `spec` blocks. Spec events
/// must belong to the plant alphabet; plant events outside the spec alphabet
/// leave the spec unchanged.
pub fn controllability_violation(
    spec: &Automaton,
    plant: &Product,
    uncontrollable: &BTreeSet<String>,
) -> Option<(Vec<String>, String)> {
    let spec_p = Product::new(&[spec]);
    let spec_of: Vec<Option<usize>> = plant
        .alphabet
        .iter()
        .map(|e| spec_p.alphabet.iter().position(|s| s == e))
        .collect();
    let start = (spec_p.initial(), plant.initial());
    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([(start, Vec::<String>::new())]);
    while let Some(((s, p), path)) = queue.pop_front() {
        for (e, spec_e) in spec_of.iter().enumerate() {
            let Some(pn) = plant.step(&p, e) else { continue };
            let sn = match *spec_e {
                None => Some(s.clone()),
                Some(i) => spec_p.step(&s, i),
            };
            match sn {
                Some(sn) => {
                    if seen.insert((sn.clone(), pn.clone())) {
                        let mut path2 = path.clone();
                        path2.push(plant.alphabet[e].clone());
                        queue.push_back(((sn, pn), path2));
                    }
                }
                None if uncontrollable.contains(&plant.alphabet[e]) => {
                    return Some((path, plant.alphabet[e].clone()));
                }
                None => {}
            }
        }
    }
    None
}
