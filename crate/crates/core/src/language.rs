//! Bounded enumeration of generated and marked languages.
//!
//! Words are produced depth-first with events tried in id order, which yields
//! them in lexicographic order of their event-id sequences. Two enumerations of
//! equal languages therefore produce identical streams and can be compared
//! without materializing either set.

use std::collections::BTreeSet;

use crate::automaton::{Automaton, AutomatonError, EventId, StateId, Word};

/// Default cap on the number of enumeration nodes for [`marked_language_upto`].
pub const DEFAULT_NODE_BUDGET: usize = 1 << 21;

struct Frame {
    states: Vec<StateId>,
    next_event: EventId,
}

/// Depth-first enumeration of the words of length ≤ `bound` in L(A) or Lm(A).
pub struct Words<'a> {
    automaton: &'a Automaton,
    bound: usize,
    marked_only: bool,
    root: Option<Vec<StateId>>,
    stack: Vec<Frame>,
    word: Vec<EventId>,
    nodes: usize,
}

impl<'a> Words<'a> {
    fn new(automaton: &'a Automaton, bound: usize, marked_only: bool) -> Self {
        Words {
            automaton,
            bound,
            marked_only,
            root: Some(vec![automaton.initial()]),
            stack: Vec::new(),
            word: Vec::new(),
            nodes: 0,
        }
    }

    /// Number of prefix-tree nodes visited so far.
    pub fn nodes_visited(&self) -> usize {
        self.nodes
    }

    fn accepting(&self, states: &[StateId]) -> bool {
        !self.marked_only || states.iter().any(|&q| self.automaton.is_marked(q))
    }

    /// Next word as event indices of the automaton's alphabet.
    pub fn next_indices(&mut self) -> Option<&[EventId]> {
        if let Some(root) = self.root.take() {
            self.nodes += 1;
            let accept = self.accepting(&root);
            self.stack.push(Frame {
                states: root,
                next_event: 0,
            });
            if accept {
                return Some(&self.word);
            }
        }
        let n_events = self.automaton.events().len();
        loop {
            let depth = self.stack.len().checked_sub(1)?;
            let frame = self.stack.last_mut()?;
            let mut successor: Option<(EventId, Vec<StateId>)> = None;
            if depth < self.bound {
                while frame.next_event < n_events {
                    let e = frame.next_event;
                    frame.next_event += 1;
                    let mut next: Vec<StateId> = frame
                        .states
                        .iter()
                        .flat_map(|&q| self.automaton.successors(q, e))
                        .collect();
                    if !next.is_empty() {
                        next.sort_unstable();
                        next.dedup();
                        successor = Some((e, next));
                        break;
                    }
                }
            }
            match successor {
                Some((e, states)) => {
                    self.nodes += 1;
                    self.word.push(e);
                    let accept = self.accepting(&states);
                    self.stack.push(Frame { states, next_event: 0 });
                    if accept {
                        return Some(&self.word);
                    }
                }
                None => {
                    self.stack.pop();
                    if !self.stack.is_empty() {
                        self.word.pop();
                    }
                }
            }
        }
    }
}

impl Iterator for Words<'_> {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        let automaton = self.automaton;
        self.next_indices()
            .map(|w| w.iter().map(|&e| automaton.event(e).id.clone()).collect())
    }
}

/// Words of L(A) with length ≤ `bound`, lexicographic by event id.
pub fn generated_words(a: &Automaton, bound: usize) -> Words<'_> {
    Words::new(a, bound, false)
}

/// Words of Lm(A) with length ≤ `bound`, lexicographic by event id.
pub fn marked_words(a: &Automaton, bound: usize) -> Words<'_> {
    Words::new(a, bound, true)
}

/// The strings of length ≤ `bound` in Lm(A), failing with
/// [`AutomatonError::BoundTooLarge`] beyond [`DEFAULT_NODE_BUDGET`] visited prefixes.
pub fn marked_language_upto(a: &Automaton, bound: usize) -> Result<BTreeSet<Word>, AutomatonError> {
    marked_language_upto_with_budget(a, bound, DEFAULT_NODE_BUDGET)
}

pub fn marked_language_upto_with_budget(
    a: &Automaton,
    bound: usize,
    budget: usize,
) -> Result<BTreeSet<Word>, AutomatonError> {
    collect_with_budget(marked_words(a, bound), budget)
}

/// The strings of length ≤ `bound` in L(A).
pub fn generated_language_upto(a: &Automaton, bound: usize) -> Result<BTreeSet<Word>, AutomatonError> {
    collect_with_budget(generated_words(a, bound), DEFAULT_NODE_BUDGET)
}

fn collect_with_budget(mut words: Words<'_>, budget: usize) -> Result<BTreeSet<Word>, AutomatonError> {
    let mut out = BTreeSet::new();
    while let Some(w) = words.next() {
        if words.nodes_visited() > budget {
            return Err(AutomatonError::BoundTooLarge { budget });
        }
        out.insert(w);
    }
    if words.nodes_visited() > budget {
        return Err(AutomatonError::BoundTooLarge { budget });
    }
    Ok(out)
}
