//! Subcommand implementations. Each writes a `key=value` report to `out` and
//! returns whether the checked property holds.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{debug, info};
use polaris_core::automaton::Automaton;
use polaris_core::bisim::is_bisimilar;
use polaris_core::compose::parallel_compose;
use polaris_core::format::{parse_automaton, write_automaton};
use polaris_core::models::{build_collision_spec, build_local_supervisors, build_plant, Agent};
use polaris_core::polar::PolarPartition;
use polaris_core::project::natural_project;
use polaris_core::sim::output::{event_log, summary, trajectory_csv};
use polaris_core::sim::run_scenario;
use polaris_core::synthesis::{check_controllability, check_decomposability, verify_decentralized};

use crate::error::CliError;
use crate::scenario::parse_scenario;

pub fn read_automaton(path: &Path) -> Result<Automaton, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_automaton(&text).map_err(|source| CliError::Format {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    debug!("wrote {}", path.display());
    Ok(())
}

fn write_automaton_file(path: &Path, a: &Automaton) -> Result<(), CliError> {
    write_file(path, &write_automaton(a))
}

/// Composes every automaton in `paths`, left to right.
fn read_composed(paths: &[PathBuf]) -> Result<Automaton, CliError> {
    let (first, rest) = paths
        .split_first()
        .ok_or_else(|| CliError::Usage("at least one automaton is required".into()))?;
    let mut acc = read_automaton(first)?;
    for p in rest {
        acc = parallel_compose(&acc, &read_automaton(p)?)?;
    }
    Ok(acc)
}

/// A comma-separated list, or `@path` naming a file of whitespace- or
/// comma-separated events.
pub fn event_list(arg: &str) -> Result<BTreeSet<String>, CliError> {
    let text = match arg.strip_prefix('@') {
        Some(path) => fs::read_to_string(path).map_err(|e| CliError::io(Path::new(path), e))?,
        None => arg.to_string(),
    };
    Ok(text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect())
}

fn owned_by(a: &Automaton, k: u8) -> BTreeSet<String> {
    a.events()
        .iter()
        .filter(|e| e.owners.contains(&k))
        .map(|e| e.id.clone())
        .collect()
}

fn report_size(out: &mut dyn Write, prefix: &str, a: &Automaton) -> Result<(), CliError> {
    writeln!(out, "{prefix}states={}", a.num_states())?;
    writeln!(out, "{prefix}transitions={}", a.num_transitions())?;
    Ok(())
}

pub fn compose(a: &Path, b: &Path, output: &Path, out: &mut dyn Write) -> Result<bool, CliError> {
    let c = parallel_compose(&read_automaton(a)?, &read_automaton(b)?)?;
    write_automaton_file(output, &c)?;
    report_size(out, "", &c)?;
    Ok(true)
}

pub fn project(a: &Path, keep: &str, output: &Path, out: &mut dyn Write) -> Result<bool, CliError> {
    let p = natural_project(&read_automaton(a)?, &event_list(keep)?)?;
    write_automaton_file(output, &p)?;
    report_size(out, "", &p)?;
    Ok(true)
}

pub fn bisim(a: &Path, b: &Path, out: &mut dyn Write) -> Result<bool, CliError> {
    let v = is_bisimilar(&read_automaton(a)?, &read_automaton(b)?);
    writeln!(out, "bisimilar={}", v.bisimilar)?;
    if let Some(r) = &v.relation {
        writeln!(out, "relation_pairs={}", r.pairs.len())?;
    }
    if let Some(c) = &v.counterexample {
        writeln!(out, "counterexample={c}")?;
    }
    Ok(v.bisimilar)
}

pub fn check_controllable(
    plants: &[PathBuf],
    spec: &Path,
    uncontrollable: Option<&str>,
    out: &mut dyn Write,
) -> Result<bool, CliError> {
    let plant = read_composed(plants)?;
    let spec = read_automaton(spec)?;
    let e_uc = match uncontrollable {
        Some(list) => event_list(list)?,
        None => plant.uncontrollable_events(),
    };
    let start = Instant::now();
    let r = check_controllability(&spec, &plant, &e_uc)?;
    info!("controllability checked in {:?}", start.elapsed());
    writeln!(out, "controllable={}", r.controllable)?;
    if let Some(w) = &r.witness {
        writeln!(out, "prefix=[{}]", w.prefix.join(" "))?;
        writeln!(out, "event={}", w.event)?;
    }
    Ok(r.controllable)
}

pub fn check_decomposable(
    a: &Path,
    events1: Option<&str>,
    events2: Option<&str>,
    bound: usize,
    out_dir: Option<&Path>,
    out: &mut dyn Write,
) -> Result<bool, CliError> {
    let a = read_automaton(a)?;
    let e1 = match events1 {
        Some(list) => event_list(list)?,
        None => owned_by(&a, 1),
    };
    let e2 = match events2 {
        Some(list) => event_list(list)?,
        None => owned_by(&a, 2),
    };
    let start = Instant::now();
    let r = check_decomposability(&a, &e1, &e2, bound)?;
    info!("decomposability checked in {:?}", start.elapsed());
    write!(out, "{r}")?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        write_automaton_file(&dir.join("local1.aut"), &r.local.0)?;
        write_automaton_file(&dir.join("local2.aut"), &r.local.1)?;
    }
    Ok(r.decomposable)
}

/// `R_m,n_r,n_theta`.
pub fn parse_partition(arg: &str) -> Result<PolarPartition, CliError> {
    let parts: Vec<&str> = arg.split(',').map(str::trim).collect();
    let usage = || CliError::Usage(format!("--partition expects R_m,n_r,n_theta, got `{arg}`"));
    let [r, nr, nt] = parts[..] else { return Err(usage()) };
    let r: f64 = r.parse().map_err(|_| usage())?;
    let nr: usize = nr.parse().map_err(|_| usage())?;
    let nt: usize = nt.parse().map_err(|_| usage())?;
    PolarPartition::new(r, nr, nt).map_err(|e| CliError::Usage(e.to_string()))
}

pub const MODEL_FILES: [&str; 7] = [
    "plant1.aut",
    "plant2.aut",
    "formation1.aut",
    "formation2.aut",
    "collision.aut",
    "collision1.aut",
    "collision2.aut",
];

pub fn build_models(partition: &str, dir: &Path, out: &mut dyn Write) -> Result<bool, CliError> {
    let p = parse_partition(partition)?;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let (f1, f2, c1, c2) = build_local_supervisors(&p)?;
    let models = [
        build_plant(Agent::One, &p)?,
        build_plant(Agent::Two, &p)?,
        f1,
        f2,
        build_collision_spec(&p)?,
        c1,
        c2,
    ];
    for (name, a) in MODEL_FILES.iter().zip(&models) {
        write_automaton_file(&dir.join(name), a)?;
        writeln!(
            out,
            "{name} states={} transitions={}",
            a.num_states(),
            a.num_transitions()
        )?;
    }
    Ok(true)
}

pub fn simulate(scenario: &Path, dir: &Path, out: &mut dyn Write) -> Result<bool, CliError> {
    let cfg = parse_scenario(scenario)?;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let start = Instant::now();
    let outcome = run_scenario(&cfg)?;
    info!("simulated {} steps in {:?}", outcome.rows.len(), start.elapsed());
    write_file(&dir.join("trajectory.csv"), &trajectory_csv(&outcome.rows))?;
    write_file(&dir.join("events.log"), &event_log(&outcome.log))?;
    write_file(&dir.join("verdict.txt"), &summary(&outcome))?;
    write!(out, "{}", outcome.verdict)?;
    let ok = outcome
        .verdict
        .phases
        .iter()
        .all(|p| p.t_reach.iter().all(Option::is_some) && p.hold.iter().all(|&h| h));
    Ok(ok)
}

pub fn verify_theorem1(
    plant1: &Path,
    plant2: &Path,
    controller: &Path,
    spec: Option<&Path>,
    out: &mut dyn Write,
) -> Result<bool, CliError> {
    let ap1 = read_automaton(plant1)?;
    let ap2 = read_automaton(plant2)?;
    let ac = read_automaton(controller)?;
    let a_s = match spec {
        Some(p) => read_automaton(p)?,
        None => parallel_compose(&ac, &parallel_compose(&ap1, &ap2)?)?,
    };
    let start = Instant::now();
    let r = verify_decentralized(&ap1, &ap2, &ac, &a_s)?;
    info!("decentralized loop verified in {:?}", start.elapsed());
    writeln!(out, "decentralized_bisimilar={}", r.decentralized.bisimilar)?;
    if let Some(c) = &r.decentralized.counterexample {
        writeln!(out, "decentralized_counterexample={c}")?;
    }
    writeln!(out, "centralized_bisimilar={}", r.centralized.bisimilar)?;
    if let Some(c) = &r.centralized.counterexample {
        writeln!(out, "centralized_counterexample={c}")?;
    }
    Ok(r.holds())
}
