//! Finite automata over named events.
//!
//! An [`Automaton`] stores its transition function in relational form
//! (a state may have several successors on one event) so that intermediate
//! results such as ε-substituted projections can be represented. Most
//! supervisory-control routines additionally require [`Automaton::is_deterministic`].

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

/// Index of a state inside one automaton.
pub type StateId = usize;
/// Index of an event inside one automaton's alphabet.
pub type EventId = usize;
/// A string of event identifiers.
pub type Word = Vec<String>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutomatonError {
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("state `{0}` declared twice")]
    DuplicateState(String),
    #[error("no initial state declared")]
    MissingInitial,
    #[error("event `{event}` has conflicting controllability flags")]
    AlphabetConflict { event: String },
    #[error("invalid token `{0}` (allowed characters: A-Z a-z 0-9 _ + -)")]
    InvalidToken(String),
    #[error("language enumeration exceeded the node budget of {budget}")]
    BoundTooLarge { budget: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Returns true if `s` is a legal identifier for states and events.
pub fn is_valid_token(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '+' || c == '-')
}

/// An event of an alphabet together with its control attributes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventInfo {
    pub id: String,
    pub controllable: bool,
    /// Agents whose local alphabet contains this event.
    pub owners: BTreeSet<u8>,
}

impl EventInfo {
    pub fn controllable(id: impl Into<String>) -> Self {
        EventInfo {
            id: id.into(),
            controllable: true,
            owners: BTreeSet::new(),
        }
    }

    pub fn uncontrollable(id: impl Into<String>) -> Self {
        EventInfo {
            id: id.into(),
            controllable: false,
            owners: BTreeSet::new(),
        }
    }

    pub fn owned_by(mut self, owners: &[u8]) -> Self {
        self.owners.extend(owners.iter().copied());
        self
    }
}

/// Merges two alphabets by event id. Shared ids must agree on controllability;
/// owner tags are united.
pub(crate) fn merge_alphabets(a: &[EventInfo], b: &[EventInfo]) -> Result<Vec<EventInfo>, AutomatonError> {
    let mut merged: BTreeMap<String, EventInfo> = BTreeMap::new();
    for info in a.iter().chain(b) {
        match merged.get_mut(&info.id) {
            Some(existing) => {
                if existing.controllable != info.controllable {
                    return Err(AutomatonError::AlphabetConflict { event: info.id.clone() });
                }
                existing.owners.extend(info.owners.iter().copied());
            }
            None => {
                merged.insert(info.id.clone(), info.clone());
            }
        }
    }
    Ok(merged.into_values().collect())
}

/// Makes a list of generated state names unique by suffixing repeats with `_2`, `_3`, ...
pub(crate) fn uniquify(names: Vec<String>) -> Vec<String> {
    let mut taken: BTreeSet<String> = names.iter().cloned().collect();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut out = Vec::with_capacity(names.len());
    for name in names {
        if seen.insert(name.clone()) {
            out.push(name);
            continue;
        }
        let mut n = 2;
        let fresh = loop {
            let candidate = format!("{name}_{n}");
            if !taken.contains(&candidate) {
                break candidate;
            }
            n += 1;
        };
        taken.insert(fresh.clone());
        seen.insert(fresh.clone());
        out.push(fresh);
    }
    out
}

/// A finite automaton `(Q, q0, E, δ, Qm)` with δ ⊆ Q × E × Q.
///
/// The alphabet is kept sorted by event id, so event indices follow the
/// lexicographic order of the ids. Immutable once built.
#[derive(Clone, PartialEq, Eq)]
pub struct Automaton {
    states: Vec<String>,
    state_index: HashMap<String, StateId>,
    initial: StateId,
    marked: Vec<bool>,
    events: Vec<EventInfo>,
    event_index: HashMap<String, EventId>,
    delta: Vec<BTreeMap<EventId, BTreeSet<StateId>>>,
}

impl fmt::Debug for Automaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::format::write_automaton(self))
    }
}

impl Automaton {
    /// Assembles an automaton from already-indexed parts. Events must be sorted by id.
    pub(crate) fn from_parts(
        states: Vec<String>,
        initial: StateId,
        marked: Vec<bool>,
        events: Vec<EventInfo>,
        delta: Vec<BTreeMap<EventId, BTreeSet<StateId>>>,
    ) -> Automaton {
        debug_assert!(events.windows(2).all(|w| w[0].id < w[1].id));
        debug_assert_eq!(states.len(), marked.len());
        debug_assert_eq!(states.len(), delta.len());
        let state_index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let event_index = events.iter().enumerate().map(|(i, e)| (e.id.clone(), i)).collect();
        Automaton {
            states,
            state_index,
            initial,
            marked,
            events,
            event_index,
            delta,
        }
    }

    pub fn builder() -> AutomatonBuilder {
        AutomatonBuilder::default()
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_name(&self, q: StateId) -> &str {
        &self.states[q]
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.state_index.get(name).copied()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_marked(&self, q: StateId) -> bool {
        self.marked[q]
    }

    pub fn marked_states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.states.len()).filter(move |&q| self.marked[q])
    }

    pub fn events(&self) -> &[EventInfo] {
        &self.events
    }

    pub fn event(&self, e: EventId) -> &EventInfo {
        &self.events[e]
    }

    pub fn event_id(&self, name: &str) -> Option<EventId> {
        self.event_index.get(name).copied()
    }

    pub fn has_event(&self, name: &str) -> bool {
        self.event_index.contains_key(name)
    }

    /// The set of event ids of the alphabet.
    pub fn alphabet(&self) -> BTreeSet<String> {
        self.events.iter().map(|e| e.id.clone()).collect()
    }

    pub fn uncontrollable_events(&self) -> BTreeSet<String> {
        self.events
            .iter()
            .filter(|e| !e.controllable)
            .map(|e| e.id.clone())
            .collect()
    }

    /// Successors of `q` on event `e`.
    pub fn successors(&self, q: StateId, e: EventId) -> impl Iterator<Item = StateId> + '_ {
        self.delta[q].get(&e).into_iter().flatten().copied()
    }

    /// The unique successor of `q` on `e`, if any (first one for nondeterministic automata).
    pub fn step(&self, q: StateId, e: EventId) -> Option<StateId> {
        self.delta[q].get(&e).and_then(|s| s.iter().next().copied())
    }

    /// Events with at least one transition out of `q`, in id order.
    pub fn enabled(&self, q: StateId) -> impl Iterator<Item = EventId> + '_ {
        self.delta[q].keys().copied()
    }

    pub fn is_enabled(&self, q: StateId, e: EventId) -> bool {
        self.delta[q].contains_key(&e)
    }

    /// Outgoing transitions of `q` as `(event, target)` pairs, ordered by event then target.
    pub fn transitions_from(&self, q: StateId) -> impl Iterator<Item = (EventId, StateId)> + '_ {
        self.delta[q]
            .iter()
            .flat_map(|(&e, targets)| targets.iter().map(move |&t| (e, t)))
    }

    /// All transitions `(source, event, target)`.
    pub fn transitions(&self) -> impl Iterator<Item = (StateId, EventId, StateId)> + '_ {
        (0..self.states.len()).flat_map(move |q| self.transitions_from(q).map(move |(e, t)| (q, e, t)))
    }

    pub fn num_transitions(&self) -> usize {
        self.delta
            .iter()
            .map(|m| m.values().map(BTreeSet::len).sum::<usize>())
            .sum()
    }

    /// |δ(q, e)| ≤ 1 for every state and event.
    pub fn is_deterministic(&self) -> bool {
        self.delta.iter().all(|m| m.values().all(|targets| targets.len() <= 1))
    }

    /// Set of states reached from `from` by `word`; empty if the word is not generated.
    pub fn run_from(&self, from: StateId, word: &[impl AsRef<str>]) -> BTreeSet<StateId> {
        let mut current: BTreeSet<StateId> = BTreeSet::from([from]);
        for name in word {
            let Some(e) = self.event_id(name.as_ref()) else {
                return BTreeSet::new();
            };
            current = current.iter().flat_map(|&q| self.successors(q, e)).collect();
            if current.is_empty() {
                break;
            }
        }
        current
    }

    /// Membership in L(A).
    pub fn generates(&self, word: &[impl AsRef<str>]) -> bool {
        !self.run_from(self.initial, word).is_empty()
    }

    /// Membership in Lm(A).
    pub fn accepts(&self, word: &[impl AsRef<str>]) -> bool {
        self.run_from(self.initial, word).iter().any(|&q| self.marked[q])
    }

    /// Reachability flags from the initial state.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.states.len()];
        let mut queue = VecDeque::from([self.initial]);
        seen[self.initial] = true;
        while let Some(q) = queue.pop_front() {
            for (_, t) in self.transitions_from(q) {
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        seen
    }

    /// States from which some marked state can be reached.
    pub fn coreachable(&self) -> Vec<bool> {
        let mut reverse: Vec<Vec<StateId>> = vec![Vec::new(); self.states.len()];
        for (q, _, t) in self.transitions() {
            reverse[t].push(q);
        }
        let mut seen = self.marked.clone();
        let mut queue: VecDeque<StateId> = self.marked_states().collect();
        while let Some(q) = queue.pop_front() {
            for &p in &reverse[q] {
                if !seen[p] {
                    seen[p] = true;
                    queue.push_back(p);
                }
            }
        }
        seen
    }

    /// Every reachable state can still reach a marked state.
    pub fn is_nonblocking(&self) -> bool {
        let co = self.coreachable();
        self.reachable().iter().zip(&co).all(|(&reach, &co)| !reach || co)
    }

    /// Restriction to the states reachable from the initial state.
    pub fn accessible(&self) -> Automaton {
        let reach = self.reachable();
        if reach.iter().all(|&r| r) {
            return self.clone();
        }
        let mut remap = vec![usize::MAX; self.states.len()];
        let mut states = Vec::new();
        for (q, _) in reach.iter().enumerate().filter(|(_, &r)| r) {
            remap[q] = states.len();
            states.push(q);
        }
        let delta = states
            .iter()
            .map(|&q| {
                self.delta[q]
                    .iter()
                    .map(|(&e, ts)| (e, ts.iter().map(|&t| remap[t]).collect()))
                    .collect()
            })
            .collect();
        Automaton::from_parts(
            states.iter().map(|&q| self.states[q].clone()).collect(),
            remap[self.initial],
            states.iter().map(|&q| self.marked[q]).collect(),
            self.events.clone(),
            delta,
        )
    }

    /// Same structure with every state marked.
    pub fn with_all_marked(&self) -> Automaton {
        let mut out = self.clone();
        out.marked = vec![true; self.states.len()];
        out
    }
}

/// Incremental construction of an [`Automaton`]; validation happens in [`build`](Self::build).
#[derive(Debug, Default, Clone)]
pub struct AutomatonBuilder {
    states: Vec<String>,
    initial: Option<String>,
    marked: BTreeSet<String>,
    events: Vec<EventInfo>,
    transitions: Vec<(String, String, String)>,
    duplicate_state: Option<String>,
}

impl AutomatonBuilder {
    /// Declares a state; transitions may also introduce states implicitly.
    pub fn state(&mut self, name: impl Into<String>) -> &mut Self {
        let name = name.into();
        if self.states.contains(&name) {
            self.duplicate_state.get_or_insert(name);
        } else {
            self.states.push(name);
        }
        self
    }

    pub fn states<I, S>(&mut self, names: I) -> &mut Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        for name in names {
            self.state(name);
        }
        self
    }

    pub fn initial(&mut self, name: impl Into<String>) -> &mut Self {
        self.initial = Some(name.into());
        self
    }

    pub fn marked(&mut self, name: impl Into<String>) -> &mut Self {
        self.marked.insert(name.into());
        self
    }

    pub fn event(&mut self, info: EventInfo) -> &mut Self {
        self.events.push(info);
        self
    }

    pub fn events(&mut self, infos: impl IntoIterator<Item = EventInfo>) -> &mut Self {
        self.events.extend(infos);
        self
    }

    pub fn transition(
        &mut self,
        source: impl Into<String>,
        event: impl Into<String>,
        target: impl Into<String>,
    ) -> &mut Self {
        self.transitions.push((source.into(), event.into(), target.into()));
        self
    }

    /// Adds `state --e--> state` for every event in `events`.
    pub fn self_loops<I, S>(&mut self, state: &str, events: I) -> &mut Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        for e in events {
            self.transition(state, e, state);
        }
        self
    }

    pub fn build(&self) -> Result<Automaton, AutomatonError> {
        if let Some(dup) = &self.duplicate_state {
            return Err(AutomatonError::DuplicateState(dup.clone()));
        }
        let events = merge_alphabets(&self.events, &[])?;
        for e in &events {
            if !is_valid_token(&e.id) {
                return Err(AutomatonError::InvalidToken(e.id.clone()));
            }
        }
        let mut states = self.states.clone();
        let mut known: BTreeSet<String> = states.iter().cloned().collect();
        for (s, _, t) in &self.transitions {
            for name in [s, t] {
                if known.insert(name.clone()) {
                    states.push(name.clone());
                }
            }
        }
        if let Some(bad) = states.iter().find(|s| !is_valid_token(s)) {
            return Err(AutomatonError::InvalidToken(bad.clone()));
        }
        let index: HashMap<&str, StateId> = states.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let initial_name = self.initial.as_ref().ok_or(AutomatonError::MissingInitial)?;
        let initial = *index
            .get(initial_name.as_str())
            .ok_or_else(|| AutomatonError::UnknownState(initial_name.clone()))?;
        let mut marked = vec![false; states.len()];
        for m in &self.marked {
            let q = index
                .get(m.as_str())
                .ok_or_else(|| AutomatonError::UnknownState(m.clone()))?;
            marked[*q] = true;
        }
        let event_index: HashMap<&str, EventId> = events.iter().enumerate().map(|(i, e)| (e.id.as_str(), i)).collect();
        let mut delta: Vec<BTreeMap<EventId, BTreeSet<StateId>>> = vec![BTreeMap::new(); states.len()];
        for (s, e, t) in &self.transitions {
            let e = *event_index
                .get(e.as_str())
                .ok_or_else(|| AutomatonError::UnknownEvent(e.clone()))?;
            delta[index[s.as_str()]].entry(e).or_default().insert(index[t.as_str()]);
        }
        Ok(Automaton::from_parts(states, initial, marked, events, delta))
    }
}
