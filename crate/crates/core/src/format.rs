//! Line-based text exchange format for automata.
//!
//! ```text
//! # comment
//! states: s0 s1
//! initial: s0
//! marked: s0
//! controllable: a
//! uncontrollable: d
//! owners: a=1 d=1,2
//! trans: s0 a s1
//! trans: s1 d s0
//! ```
//!
//! [`write_automaton`] emits the canonical ordering: states, event lists and
//! owner entries sorted lexicographically, transitions sorted by
//! `(source, event, target)`.

use std::collections::BTreeSet;

use crate::automaton::{is_valid_token, Automaton, AutomatonError, EventInfo};

fn parse_error(line: usize, message: impl Into<String>) -> AutomatonError {
    AutomatonError::Parse {
        line,
        message: message.into(),
    }
}

fn token(line: usize, tok: &str) -> Result<String, AutomatonError> {
    if is_valid_token(tok) {
        Ok(tok.to_string())
    } else {
        Err(parse_error(line, format!("invalid token `{tok}`")))
    }
}

pub fn parse_automaton(text: &str) -> Result<Automaton, AutomatonError> {
    let mut states: Vec<String> = Vec::new();
    let mut initial: Option<String> = None;
    let mut marked: Vec<String> = Vec::new();
    let mut events: Vec<EventInfo> = Vec::new();
    let mut owners: Vec<(usize, String, BTreeSet<u8>)> = Vec::new();
    let mut transitions: Vec<(usize, String, String, String)> = Vec::new();
    let mut saw_states = false;

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, rest) = line
            .split_once(':')
            .ok_or_else(|| parse_error(line_no, "expected `key: values`"))?;
        let tokens: Vec<&str> = rest.split_whitespace().collect();
        match key.trim() {
            "states" => {
                saw_states = true;
                for t in tokens {
                    states.push(token(line_no, t)?);
                }
            }
            "initial" => {
                if initial.is_some() {
                    return Err(parse_error(line_no, "initial state declared twice"));
                }
                match tokens.as_slice() {
                    [q] => initial = Some(token(line_no, q)?),
                    _ => return Err(parse_error(line_no, "expected exactly one initial state")),
                }
            }
            "marked" => {
                for t in tokens {
                    marked.push(token(line_no, t)?);
                }
            }
            "controllable" => {
                for t in tokens {
                    events.push(EventInfo::controllable(token(line_no, t)?));
                }
            }
            "uncontrollable" => {
                for t in tokens {
                    events.push(EventInfo::uncontrollable(token(line_no, t)?));
                }
            }
            "owners" => {
                for t in tokens {
                    let (event, tags) = t
                        .split_once('=')
                        .ok_or_else(|| parse_error(line_no, format!("expected `event=tags`, got `{t}`")))?;
                    let mut set = BTreeSet::new();
                    for tag in tags.split(',') {
                        let tag: u8 = tag
                            .parse()
                            .map_err(|_| parse_error(line_no, format!("invalid owner tag `{tag}`")))?;
                        set.insert(tag);
                    }
                    owners.push((line_no, token(line_no, event)?, set));
                }
            }
            "trans" => match tokens.as_slice() {
                [s, e, t] => transitions.push((line_no, token(line_no, s)?, token(line_no, e)?, token(line_no, t)?)),
                _ => return Err(parse_error(line_no, "expected `trans: source event target`")),
            },
            other => return Err(parse_error(line_no, format!("unknown key `{other}`"))),
        }
    }

    if !saw_states {
        return Err(parse_error(0, "missing `states:` line"));
    }
    let declared: BTreeSet<&String> = states.iter().collect();
    for (line_no, s, _, t) in &transitions {
        for q in [s, t] {
            if !declared.contains(q) {
                return Err(parse_error(*line_no, format!("undeclared state `{q}`")));
            }
        }
    }
    let mut seen_events = BTreeSet::new();
    for e in &events {
        if !seen_events.insert(e.id.clone()) {
            return Err(parse_error(0, format!("event `{}` declared twice", e.id)));
        }
    }
    for (line_no, event, tags) in owners {
        let info = events
            .iter_mut()
            .find(|e| e.id == event)
            .ok_or_else(|| parse_error(line_no, format!("owners given for undeclared event `{event}`")))?;
        info.owners.extend(tags);
    }

    let mut builder = Automaton::builder();
    builder.states(states).events(events);
    if let Some(q) = initial {
        builder.initial(q);
    }
    for m in marked {
        builder.marked(m);
    }
    for (_, s, e, t) in transitions {
        builder.transition(s, e, t);
    }
    builder.build()
}

pub fn write_automaton(a: &Automaton) -> String {
    let mut out = String::new();
    let mut line = |key: &str, items: Vec<String>| {
        out.push_str(key);
        out.push(':');
        for item in items {
            out.push(' ');
            out.push_str(&item);
        }
        out.push('\n');
    };

    let mut states: Vec<String> = a.states().to_vec();
    states.sort();
    line("states", states);
    line("initial", vec![a.state_name(a.initial()).to_string()]);
    let mut marked: Vec<String> = a.marked_states().map(|q| a.state_name(q).to_string()).collect();
    marked.sort();
    line("marked", marked);
    line(
        "controllable",
        a.events()
            .iter()
            .filter(|e| e.controllable)
            .map(|e| e.id.clone())
            .collect(),
    );
    line(
        "uncontrollable",
        a.events()
            .iter()
            .filter(|e| !e.controllable)
            .map(|e| e.id.clone())
            .collect(),
    );
    let owners: Vec<String> = a
        .events()
        .iter()
        .filter(|e| !e.owners.is_empty())
        .map(|e| {
            let tags: Vec<String> = e.owners.iter().map(u8::to_string).collect();
            format!("{}={}", e.id, tags.join(","))
        })
        .collect();
    if !owners.is_empty() {
        line("owners", owners);
    }
    let mut transitions: Vec<(&str, &str, &str)> = a
        .transitions()
        .map(|(q, e, t)| (a.state_name(q), a.event(e).id.as_str(), a.state_name(t)))
        .collect();
    transitions.sort();
    for (q, e, t) in transitions {
        line("trans", vec![q.to_string(), e.to_string(), t.to_string()]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const CANONICAL: &str = "states: s0 s1\n\
initial: s0\n\
marked: s0\n\
controllable: a stop2\n\
uncontrollable: d\n\
owners: a=1 stop2=1,2\n\
trans: s0 a s1\n\
trans: s0 stop2 s0\n\
trans: s1 d s0\n";

    #[test]
    fn canonical_file_round_trips_byte_identical() {
        let a = parse_automaton(CANONICAL).unwrap();
        assert_eq!(write_automaton(&a), CANONICAL);
        assert_eq!(a.event(a.event_id("stop2").unwrap()).owners, BTreeSet::from([1, 2]));
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# plant\nstates: b a   # two states\n\ninitial: a\nmarked:\ncontrollable: x\nuncontrollable:\ntrans: a x b\n";
        let a = parse_automaton(text).unwrap();
        assert_eq!(a.num_states(), 2);
        assert!(a.generates(&["x"]));
        assert!(!a.accepts(&["x"]));
        let canonical = write_automaton(&a);
        assert!(canonical.starts_with("states: a b\n"));
        assert_eq!(write_automaton(&parse_automaton(&canonical).unwrap()), canonical);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_automaton("states: a\ninitial: a\ntrans: a x\n").unwrap_err();
        assert!(matches!(err, AutomatonError::Parse { line: 3, .. }), "{err}");
        let err = parse_automaton("states: a\nfoo: bar\n").unwrap_err();
        assert!(matches!(err, AutomatonError::Parse { line: 2, .. }));
        let err = parse_automaton("states: a\ninitial: a\ncontrollable: x\ntrans: a x b\n").unwrap_err();
        assert!(matches!(err, AutomatonError::Parse { line: 4, .. }));
        let err = parse_automaton("states: a*\n").unwrap_err();
        assert!(matches!(err, AutomatonError::Parse { line: 1, .. }));
        assert!(parse_automaton("").is_err());
        assert_eq!(
            parse_automaton("states: a\n").unwrap_err(),
            AutomatonError::MissingInitial
        );
    }
}
