//! Supervisor checks: controllability, closed loops, modular supervision,
//! decomposability and the decentralized-control verification.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::automaton::{Automaton, AutomatonError, EventId, StateId};
use crate::bisim::{is_bisimilar, state_classes, BisimCounterexample, BisimRelation, BisimVerdict};
use crate::compose::parallel_compose;
use crate::project::natural_project;

/// Default depth for the bounded DC3 exploration.
pub const DEFAULT_DC3_BOUND: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthesisError {
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("specification is not controllable: {0}")]
    NotControllable(ControllabilityWitness),
    #[error("supervisor state `{0}` is not marked; supervisors must realize a prefix-closed language")]
    NotPrefixClosed(String),
    #[error("local event sets do not cover the alphabet: {0}")]
    Coverage(String),
    #[error("automaton is nondeterministic at state `{state}` on event `{event}`")]
    NondeterministicInput { state: String, event: String },
    #[error("controller is not decomposable: {0}")]
    NotDecomposable(String),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
}

/// `s ∈ K̄`, `sσ ∈ L(A)`, `sσ ∉ K̄`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControllabilityWitness {
    pub prefix: Vec<String>,
    pub event: String,
}

impl fmt::Display for ControllabilityWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "after [{}] the plant can fire uncontrollable `{}` but the specification cannot",
            self.prefix.join(" "),
            self.event
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControllabilityReport {
    pub controllable: bool,
    pub witness: Option<ControllabilityWitness>,
}

fn ids_to_names(a: &Automaton, word: &[EventId]) -> Vec<String> {
    word.iter().map(|&e| a.event(e).id.clone()).collect()
}

fn require_deterministic(a: &Automaton) -> Result<(), SynthesisError> {
    for q in 0..a.num_states() {
        for e in a.enabled(q) {
            if a.successors(q, e).nth(1).is_some() {
                return Err(SynthesisError::NondeterministicInput {
                    state: a.state_name(q).to_string(),
                    event: a.event(e).id.clone(),
                });
            }
        }
    }
    Ok(())
}

/// Checks `K̄ E_uc ∩ L(A) ⊆ K̄` where `K̄ = L(spec)`.
///
/// Plant events outside the specification alphabet are unconstrained by the
/// specification, exactly as in `spec ‖ plant`.
pub fn check_controllability(
    spec: &Automaton,
    plant: &Automaton,
    e_uc: &BTreeSet<String>,
) -> Result<ControllabilityReport, SynthesisError> {
    if let Some(e) = spec.alphabet().iter().find(|e| !plant.has_event(e)) {
        return Err(SynthesisError::AlphabetMismatch(format!(
            "specification event `{e}` is not in the plant alphabet"
        )));
    }
    if let Some(e) = e_uc.iter().find(|e| !plant.has_event(e)) {
        return Err(SynthesisError::AlphabetMismatch(format!(
            "uncontrollable event `{e}` is not in the plant alphabet"
        )));
    }
    let spec_event: Vec<Option<EventId>> = plant.events().iter().map(|e| spec.event_id(&e.id)).collect();
    let uncontrollable: Vec<bool> = plant.events().iter().map(|e| e_uc.contains(&e.id)).collect();

    type Node = (BTreeSet<StateId>, BTreeSet<StateId>);
    let start: Node = (BTreeSet::from([spec.initial()]), BTreeSet::from([plant.initial()]));
    let mut parent: HashMap<Node, Option<(Node, EventId)>> = HashMap::new();
    parent.insert(start.clone(), None);
    let mut queue = VecDeque::from([start]);

    let trace = |parent: &HashMap<Node, Option<(Node, EventId)>>, mut node: Node| {
        let mut word = Vec::new();
        while let Some(Some((prev, e))) = parent.get(&node) {
            word.push(*e);
            node = prev.clone();
        }
        word.reverse();
        word
    };

    while let Some(node) = queue.pop_front() {
        let (s_set, p_set) = &node;
        let plant_enabled: BTreeSet<EventId> = p_set.iter().flat_map(|&q| plant.enabled(q)).collect();
        for e in plant_enabled {
            let p_next: BTreeSet<StateId> = p_set.iter().flat_map(|&q| plant.successors(q, e)).collect();
            let s_next: BTreeSet<StateId> = match spec_event[e] {
                Some(se) => s_set.iter().flat_map(|&q| spec.successors(q, se)).collect(),
                None => s_set.clone(),
            };
            if s_next.is_empty() {
                if uncontrollable[e] {
                    let prefix = ids_to_names(plant, &trace(&parent, node.clone()));
                    return Ok(ControllabilityReport {
                        controllable: false,
                        witness: Some(ControllabilityWitness {
                            prefix,
                            event: plant.event(e).id.clone(),
                        }),
                    });
                }
                continue;
            }
            let next = (s_next, p_next);
            if !parent.contains_key(&next) {
                parent.insert(next.clone(), Some((node.clone(), e)));
                queue.push_back(next);
            }
        }
    }
    Ok(ControllabilityReport {
        controllable: true,
        witness: None,
    })
}

/// `S ‖ A` after checking that `S` is prefix-closed and controllable with
/// respect to the plant's uncontrollable events.
pub fn closed_loop(supervisor: &Automaton, plant: &Automaton) -> Result<Automaton, SynthesisError> {
    if let Some(q) = (0..supervisor.num_states()).find(|&q| !supervisor.is_marked(q)) {
        return Err(SynthesisError::NotPrefixClosed(supervisor.state_name(q).to_string()));
    }
    let report = check_controllability(supervisor, plant, &plant.uncontrollable_events())?;
    if let Some(w) = report.witness {
        return Err(SynthesisError::NotControllable(w));
    }
    Ok(parallel_compose(supervisor, plant)?)
}

/// `(S1 ‖ S2) ‖ A`.
pub fn modular_supervisor(s1: &Automaton, s2: &Automaton, plant: &Automaton) -> Result<Automaton, SynthesisError> {
    Ok(parallel_compose(&parallel_compose(s1, s2)?, plant)?)
}

fn check_coverage(a: &Automaton, e1: &BTreeSet<String>, e2: &BTreeSet<String>) -> Result<(), SynthesisError> {
    let alphabet = a.alphabet();
    let union: BTreeSet<String> = e1.union(e2).cloned().collect();
    if let Some(e) = union.difference(&alphabet).next() {
        return Err(SynthesisError::Coverage(format!(
            "`{e}` is not an event of the automaton"
        )));
    }
    if let Some(e) = alphabet.difference(&union).next() {
        return Err(SynthesisError::Coverage(format!(
            "`{e}` belongs to neither local event set"
        )));
    }
    Ok(())
}

/// `(P1(A), P2(A))`.
pub fn decompose(
    a: &Automaton,
    e1: &BTreeSet<String>,
    e2: &BTreeSet<String>,
) -> Result<(Automaton, Automaton), SynthesisError> {
    check_coverage(a, e1, e2)?;
    Ok((natural_project(a, e1)?, natural_project(a, e2)?))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dc1Witness {
    pub state: String,
    pub e1: String,
    pub e2: String,
}

/// `continuation` is defined after exactly one of `e1 e2` and `e2 e1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dc2Witness {
    pub state: String,
    pub e1: String,
    pub e2: String,
    pub continuation: Vec<String>,
}

/// `word` is generated by the composed local views of the behaviour from
/// `state` whose first shared event is `shared`, but is not defined at `state`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dc3Witness {
    pub state: String,
    pub shared: String,
    pub word: Vec<String>,
}

/// Two `event`-successors of `state` in the ε-merged view of agent `agent`
/// whose futures differ on `continuation`. States of that view are classes of
/// ε-related states, named by their members joined with `-`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dc4Witness {
    pub agent: u8,
    pub state: String,
    pub event: String,
    pub x1: String,
    pub x2: String,
    pub continuation: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecomposabilityReport {
    /// Verdict of `A ≅ P1(A) ‖ P2(A)`, the authoritative answer.
    pub decomposable: bool,
    pub relation: Option<BisimRelation>,
    pub counterexample: Option<BisimCounterexample>,
    pub dc1: Option<Dc1Witness>,
    pub dc2: Option<Dc2Witness>,
    pub dc3: Option<Dc3Witness>,
    pub dc3_bound: usize,
    pub dc4: [Option<Dc4Witness>; 2],
    pub local: (Automaton, Automaton),
}

impl DecomposabilityReport {
    pub fn dc1_passed(&self) -> bool {
        self.dc1.is_none()
    }
    pub fn dc2_passed(&self) -> bool {
        self.dc2.is_none()
    }
    pub fn dc3_passed(&self) -> bool {
        self.dc3.is_none()
    }
    pub fn dc4_passed(&self) -> bool {
        self.dc4.iter().all(Option::is_none)
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

impl fmt::Display for DecomposabilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "decomposable={}", self.decomposable)?;
        if let Some(c) = &self.counterexample {
            writeln!(f, "counterexample={c}")?;
        }
        write!(f, "dc1={}", verdict(self.dc1_passed()))?;
        if let Some(w) = &self.dc1 {
            write!(f, " state={} e1={} e2={}", w.state, w.e1, w.e2)?;
        }
        writeln!(f)?;
        write!(f, "dc2={}", verdict(self.dc2_passed()))?;
        if let Some(w) = &self.dc2 {
            write!(
                f,
                " state={} e1={} e2={} continuation=[{}]",
                w.state,
                w.e1,
                w.e2,
                w.continuation.join(" ")
            )?;
        }
        writeln!(f)?;
        write!(f, "dc3={} bound={}", verdict(self.dc3_passed()), self.dc3_bound)?;
        if let Some(w) = &self.dc3 {
            write!(f, " state={} shared={} word=[{}]", w.state, w.shared, w.word.join(" "))?;
        }
        writeln!(f)?;
        for (i, w) in self.dc4.iter().enumerate() {
            write!(f, "dc4_{}={}", i + 1, verdict(w.is_none()))?;
            if let Some(w) = w {
                write!(
                    f,
                    " state={} event={} x1={} x2={} continuation=[{}]",
                    w.state,
                    w.event,
                    w.x1,
                    w.x2,
                    w.continuation.join(" ")
                )?;
            }
            writeln!(f)?;
        }
        writeln!(f, "local1_states={}", self.local.0.num_states())?;
        writeln!(f, "local2_states={}", self.local.1.num_states())
    }
}

struct Alphabets {
    private1: Vec<EventId>,
    private2: Vec<EventId>,
    shared: Vec<EventId>,
}

impl Alphabets {
    fn new(a: &Automaton, e1: &BTreeSet<String>, e2: &BTreeSet<String>) -> Self {
        let mut out = Alphabets {
            private1: Vec::new(),
            private2: Vec::new(),
            shared: Vec::new(),
        };
        for (e, info) in a.events().iter().enumerate() {
            match (e1.contains(&info.id), e2.contains(&info.id)) {
                (true, true) => out.shared.push(e),
                (true, false) => out.private1.push(e),
                (false, true) => out.private2.push(e),
                (false, false) => {}
            }
        }
        out
    }
}

fn run2(a: &Automaton, q: StateId, x: EventId, y: EventId) -> Option<StateId> {
    a.step(q, x).and_then(|t| a.step(t, y))
}

fn dc1(a: &Automaton, reach: &[bool], al: &Alphabets) -> Option<Dc1Witness> {
    for q in (0..a.num_states()).filter(|&q| reach[q]) {
        for &x in al.private1.iter().filter(|&&x| a.is_enabled(q, x)) {
            for &y in al.private2.iter().filter(|&&y| a.is_enabled(q, y)) {
                if run2(a, q, x, y).is_none() || run2(a, q, y, x).is_none() {
                    return Some(Dc1Witness {
                        state: a.state_name(q).to_string(),
                        e1: a.event(x).id.clone(),
                        e2: a.event(y).id.clone(),
                    });
                }
            }
        }
    }
    None
}

/// Shortest continuation defined from exactly one of two states of a
/// deterministic automaton.
fn generated_difference(a: &Automaton, x: StateId, y: StateId) -> Option<Vec<EventId>> {
    let mut seen = BTreeSet::from([(x, y)]);
    let mut queue = VecDeque::from([(x, y, Vec::new())]);
    while let Some((p, q, word)) = queue.pop_front() {
        for e in 0..a.events().len() {
            match (a.step(p, e), a.step(q, e)) {
                (None, None) => {}
                (Some(_), None) | (None, Some(_)) => {
                    let mut w = word;
                    w.push(e);
                    return Some(w);
                }
                (Some(p2), Some(q2)) => {
                    if seen.insert((p2, q2)) {
                        let mut w = word.clone();
                        w.push(e);
                        queue.push_back((p2, q2, w));
                    }
                }
            }
        }
    }
    None
}

fn dc2(a: &Automaton, reach: &[bool], al: &Alphabets) -> Option<Dc2Witness> {
    let classes = state_classes(&a.with_all_marked());
    for q in (0..a.num_states()).filter(|&q| reach[q]) {
        for &x in &al.private1 {
            for &y in &al.private2 {
                let continuation = match (run2(a, q, x, y), run2(a, q, y, x)) {
                    (None, None) => continue,
                    (Some(s), Some(t)) if classes[s] == classes[t] => continue,
                    (Some(s), Some(t)) => {
                        generated_difference(a, s, t).expect("distinct classes differ on some string")
                    }
                    _ => Vec::new(),
                };
                return Some(Dc2Witness {
                    state: a.state_name(q).to_string(),
                    e1: a.event(x).id.clone(),
                    e2: a.event(y).id.clone(),
                    continuation: ids_to_names(a, &continuation),
                });
            }
        }
    }
    None
}

/// The behaviour of `a` from `q` restricted to strings whose first shared event is `shared`.
fn first_shared_restriction(a: &Automaton, q: StateId, shared: EventId, al: &Alphabets) -> Automaton {
    let n = a.num_states();
    let mut is_shared = vec![false; a.events().len()];
    for &e in &al.shared {
        is_shared[e] = true;
    }
    // State `p` is "before the first shared event", `n + p` is "after".
    let mut delta: Vec<BTreeMap<EventId, BTreeSet<StateId>>> = vec![BTreeMap::new(); 2 * n];
    for (p, e, t) in a.transitions() {
        if !is_shared[e] {
            delta[p].entry(e).or_default().insert(t);
        } else if e == shared {
            delta[p].entry(e).or_default().insert(n + t);
        }
        delta[n + p].entry(e).or_default().insert(n + t);
    }
    let names = (0..2 * n)
        .map(|s| {
            if s < n {
                a.state_name(s).to_string()
            } else {
                format!("{}_after", a.state_name(s - n))
            }
        })
        .collect();
    Automaton::from_parts(names, q, vec![true; 2 * n], a.events().to_vec(), delta).accessible()
}

fn dc3(
    a: &Automaton,
    reach: &[bool],
    al: &Alphabets,
    e1: &BTreeSet<String>,
    e2: &BTreeSet<String>,
    bound: usize,
) -> Result<Option<Dc3Witness>, SynthesisError> {
    for q in (0..a.num_states()).filter(|&q| reach[q]) {
        for &shared in &al.shared {
            let restricted = first_shared_restriction(a, q, shared, al);
            if restricted.num_transitions() == 0 {
                continue;
            }
            let product = parallel_compose(&natural_project(&restricted, e1)?, &natural_project(&restricted, e2)?)?;
            let mut seen = BTreeSet::from([(product.initial(), q)]);
            let mut queue = VecDeque::from([(product.initial(), q, Vec::<String>::new())]);
            while let Some((p, r, word)) = queue.pop_front() {
                if word.len() >= bound {
                    continue;
                }
                for (e, p2) in product.transitions_from(p) {
                    let name = &product.event(e).id;
                    let mut w = word.clone();
                    w.push(name.clone());
                    let step = a.event_id(name).and_then(|ae| a.step(r, ae));
                    match step {
                        None => {
                            return Ok(Some(Dc3Witness {
                                state: a.state_name(q).to_string(),
                                shared: a.event(shared).id.clone(),
                                word: w,
                            }))
                        }
                        Some(r2) => {
                            if seen.insert((p2, r2)) {
                                queue.push_back((p2, r2, w));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(None)
}

/// The ε-merged view of agent `i`: reachable states joined into classes along
/// events outside `keep` (in either direction), with the kept transitions
/// between classes. This nondeterministic automaton is the one DC4 speaks about.
struct MergedView {
    members: Vec<Vec<StateId>>,
    /// `delta[class][event]` lists successor classes; events are kept-event positions.
    delta: Vec<Vec<BTreeSet<usize>>>,
}

impl MergedView {
    fn new(a: &Automaton, reach: &[bool], kept: &[EventId]) -> Self {
        let n = a.num_states();
        let mut parent: Vec<StateId> = (0..n).collect();
        fn find(parent: &mut [StateId], mut q: StateId) -> StateId {
            while parent[q] != q {
                parent[q] = parent[parent[q]];
                q = parent[q];
            }
            q
        }
        for (q, e, r) in a.transitions() {
            if reach[q] && !kept.contains(&e) {
                let (x, y) = (find(&mut parent, q), find(&mut parent, r));
                parent[x.max(y)] = x.min(y);
            }
        }
        let mut class_of = vec![usize::MAX; n];
        let mut members: Vec<Vec<StateId>> = Vec::new();
        let mut root_class: HashMap<StateId, usize> = HashMap::new();
        for q in (0..n).filter(|&q| reach[q]) {
            let root = find(&mut parent, q);
            let c = *root_class.entry(root).or_insert_with(|| {
                members.push(Vec::new());
                members.len() - 1
            });
            class_of[q] = c;
            members[c].push(q);
        }
        let mut delta = vec![vec![BTreeSet::new(); kept.len()]; members.len()];
        for (k, &e) in kept.iter().enumerate() {
            for (q, e2, r) in a.transitions() {
                if e2 == e && reach[q] {
                    delta[class_of[q]][k].insert(class_of[r]);
                }
            }
        }
        MergedView { members, delta }
    }

    fn name(&self, a: &Automaton, c: usize) -> String {
        let mut names: Vec<&str> = self.members[c].iter().map(|&q| a.state_name(q)).collect();
        names.sort_unstable();
        names.join("-")
    }

    /// A kept-event word defined from one of `c1`, `c2` but not the other.
    fn distinguishing(&self, c1: usize, c2: usize) -> Option<Vec<usize>> {
        let start = (BTreeSet::from([c1]), BTreeSet::from([c2]));
        let mut seen = BTreeSet::from([start.clone()]);
        let mut queue = VecDeque::from([(start.0, start.1, Vec::new())]);
        let post = |set: &BTreeSet<usize>, k: usize| -> BTreeSet<usize> {
            set.iter().flat_map(|&c| self.delta[c][k].iter().copied()).collect()
        };
        while let Some((s1, s2, word)) = queue.pop_front() {
            for k in 0..self.delta.first().map_or(0, Vec::len) {
                let (n1, n2) = (post(&s1, k), post(&s2, k));
                let mut w = word.clone();
                w.push(k);
                if n1.is_empty() != n2.is_empty() {
                    return Some(w);
                }
                if !n1.is_empty() && seen.insert((n1.clone(), n2.clone())) {
                    queue.push_back((n1, n2, w));
                }
            }
        }
        None
    }
}

fn dc4(
    a: &Automaton,
    reach: &[bool],
    keep: &BTreeSet<String>,
    agent: u8,
) -> Result<Option<Dc4Witness>, SynthesisError> {
    if let Some(missing) = keep.iter().find(|e| !a.has_event(e)) {
        return Err(AutomatonError::UnknownEvent(missing.clone()).into());
    }
    let kept: Vec<EventId> = (0..a.events().len())
        .filter(|&e| keep.contains(&a.event(e).id))
        .collect();
    let view = MergedView::new(a, reach, &kept);
    for x in 0..view.members.len() {
        for (k, &e) in kept.iter().enumerate() {
            let succ: Vec<usize> = view.delta[x][k].iter().copied().collect();
            for (i, &x1) in succ.iter().enumerate() {
                for &x2 in &succ[i + 1..] {
                    if let Some(t) = view.distinguishing(x1, x2) {
                        return Ok(Some(Dc4Witness {
                            agent,
                            state: view.name(a, x),
                            event: a.event(e).id.clone(),
                            x1: view.name(a, x1),
                            x2: view.name(a, x2),
                            continuation: t.iter().map(|&k| a.event(kept[k]).id.clone()).collect(),
                        }));
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Decides `A ≅ P1(A) ‖ P2(A)` by construction and bisimulation, and
/// evaluates the four decomposability conditions as diagnostics. DC3 is
/// explored to depth `bound`.
pub fn check_decomposability(
    a: &Automaton,
    e1: &BTreeSet<String>,
    e2: &BTreeSet<String>,
    bound: usize,
) -> Result<DecomposabilityReport, SynthesisError> {
    require_deterministic(a)?;
    let (p1, p2) = decompose(a, e1, e2)?;
    let composed = parallel_compose(&p1, &p2)?;
    let BisimVerdict {
        bisimilar,
        relation,
        counterexample,
    } = is_bisimilar(a, &composed);

    let reach = a.reachable();
    let al = Alphabets::new(a, e1, e2);
    Ok(DecomposabilityReport {
        decomposable: bisimilar,
        relation,
        counterexample,
        dc1: dc1(a, &reach, &al),
        dc2: dc2(a, &reach, &al),
        dc3: dc3(a, &reach, &al, e1, e2, bound)?,
        dc3_bound: bound,
        dc4: [dc4(a, &reach, e1, 1)?, dc4(a, &reach, e2, 2)?],
        local: (p1, p2),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TheoremReport {
    /// `(AP1 ‖ P1(AC)) ‖ (AP2 ‖ P2(AC)) ≅ AS`.
    pub decentralized: BisimVerdict,
    /// `AC ‖ (AP1 ‖ AP2) ≅ AS`.
    pub centralized: BisimVerdict,
}

impl TheoremReport {
    pub fn holds(&self) -> bool {
        self.decentralized.bisimilar
    }
}

/// Checks the decentralized closed loop against the global specification.
/// The local event sets are the plant alphabets.
pub fn verify_decentralized(
    ap1: &Automaton,
    ap2: &Automaton,
    ac: &Automaton,
    a_s: &Automaton,
) -> Result<TheoremReport, SynthesisError> {
    require_deterministic(ac)?;
    let controller = ac.alphabet();
    let e1: BTreeSet<String> = ap1.alphabet().intersection(&controller).cloned().collect();
    let e2: BTreeSet<String> = ap2.alphabet().intersection(&controller).cloned().collect();
    let (c1, c2) = decompose(ac, &e1, &e2)?;
    let oracle = is_bisimilar(ac, &parallel_compose(&c1, &c2)?);
    if !oracle.bisimilar {
        let why = oracle.counterexample.map(|c| c.to_string()).unwrap_or_default();
        return Err(SynthesisError::NotDecomposable(why));
    }
    let team = parallel_compose(&parallel_compose(ap1, &c1)?, &parallel_compose(ap2, &c2)?)?;
    let central = parallel_compose(ac, &parallel_compose(ap1, ap2)?)?;
    Ok(TheoremReport {
        decentralized: is_bisimilar(&team, a_s),
        centralized: is_bisimilar(&central, a_s),
    })
}
