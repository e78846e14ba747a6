//! Scenario files: flat `section.key = value` lines.
//!
//! Schedules are `;`-separated entries of comma-separated numbers, for
//! example `follower1.offset = 0, 12, 10; 50, -30, -10` (time, x, y).
//! Every key except the follower offsets and starting positions has a default.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use polaris_core::geometry::Vec2;
use polaris_core::polar::{PolarPartition, DEFAULT_LATERAL, DEFAULT_MARGIN};
use polaris_core::sim::{FollowerConfig, ScenarioConfig, Schedule};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("field {field}: {message}")]
    Field { field: String, message: String },
    #[error("invalid scenario: {0}")]
    Validation(String),
}

const KEYS: [&str; 22] = [
    "partition.r_max",
    "partition.n_r",
    "partition.n_theta",
    "sim.dt",
    "sim.t_end",
    "sim.rng_seed",
    "control.u_max",
    "control.speed",
    "control.margin",
    "control.lateral",
    "alarm.radius",
    "alarm.release_radius",
    "alarm.front_half_angle_deg",
    "leader.velocity",
    "follower1.offset",
    "follower1.displacement",
    "follower1.initial_position",
    "follower2.offset",
    "follower2.displacement",
    "follower2.initial_position",
    // Accepted so that files can document the mission they describe.
    "scenario.name",
    "scenario.description",
];

struct Fields {
    values: BTreeMap<String, (usize, String)>,
}

impl Fields {
    fn field_error(&self, key: &str, message: impl Into<String>) -> ScenarioError {
        match self.values.get(key) {
            Some((line, _)) => ScenarioError::Parse {
                line: *line,
                message: format!("{key}: {}", message.into()),
            },
            None => ScenarioError::Field {
                field: key.to_string(),
                message: message.into(),
            },
        }
    }

    fn number(&self, key: &str, default: f64) -> Result<f64, ScenarioError> {
        match self.values.get(key) {
            None => Ok(default),
            Some((_, v)) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| self.field_error(key, format!("`{v}` is not a finite number"))),
        }
    }

    fn count(&self, key: &str, default: u64) -> Result<u64, ScenarioError> {
        match self.values.get(key) {
            None => Ok(default),
            Some((_, v)) => v
                .parse::<u64>()
                .map_err(|_| self.field_error(key, format!("`{v}` is not a non-negative integer"))),
        }
    }

    fn tuples(&self, key: &str, arity: usize) -> Result<Option<Vec<Vec<f64>>>, ScenarioError> {
        let Some((_, v)) = self.values.get(key) else {
            return Ok(None);
        };
        let mut out = Vec::new();
        for entry in v.split(';').map(str::trim).filter(|e| !e.is_empty()) {
            let nums: Vec<f64> = entry
                .split(',')
                .map(|x| x.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
                .collect::<Option<_>>()
                .ok_or_else(|| self.field_error(key, format!("`{entry}` is not a list of numbers")))?;
            if nums.len() != arity {
                return Err(self.field_error(key, format!("`{entry}` needs {arity} comma-separated numbers")));
            }
            out.push(nums);
        }
        if out.is_empty() {
            return Err(self.field_error(key, "no entries"));
        }
        Ok(Some(out))
    }

    fn schedule(&self, key: &str) -> Result<Option<Schedule>, ScenarioError> {
        Ok(self
            .tuples(key, 3)?
            .map(|rows| rows.into_iter().map(|r| (r[0], Vec2::new(r[1], r[2]))).collect()))
    }
}

fn lex(text: &str) -> Result<Fields, ScenarioError> {
    let mut values = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ScenarioError::Parse {
            line,
            message: "expected `section.key = value`".into(),
        })?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(ScenarioError::Parse {
                line,
                message: format!("unknown key `{key}`"),
            });
        }
        if let Some((first, _)) = values.insert(key.to_string(), (line, value.trim().to_string())) {
            return Err(ScenarioError::Parse {
                line,
                message: format!("`{key}` already set on line {first}"),
            });
        }
    }
    if values.is_empty() {
        return Err(ScenarioError::Parse {
            line: 0,
            message: "scenario file has no settings".into(),
        });
    }
    Ok(Fields { values })
}

fn follower(fields: &Fields, k: usize) -> Result<FollowerConfig, ScenarioError> {
    let prefix = format!("follower{k}");
    let offsets = fields
        .schedule(&format!("{prefix}.offset"))?
        .ok_or_else(|| fields.field_error(&format!("{prefix}.offset"), "required"))?;
    let mut displacements = fields.schedule(&format!("{prefix}.displacement"))?.unwrap_or_default();
    let start_key = format!("{prefix}.initial_position");
    if let Some(p) = fields.tuples(&start_key, 2)? {
        if p.len() != 1 {
            return Err(fields.field_error(&start_key, "expects a single x, y pair"));
        }
        if displacements.first().is_some_and(|(t, _)| *t == 0.0) {
            return Err(fields.field_error(&start_key, "conflicts with a displacement at t = 0"));
        }
        let first_offset = offsets[0].1;
        displacements.insert(0, (0.0, Vec2::new(p[0][0], p[0][1]) - first_offset));
    }
    if displacements.is_empty() {
        return Err(fields.field_error(
            &format!("{prefix}.displacement"),
            "a displacement at t = 0 or an initial_position is required",
        ));
    }
    Ok(FollowerConfig { offsets, displacements })
}

/// Parses and validates scenario text.
pub fn parse_scenario_str(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let f = lex(text)?;
    let d = ScenarioConfig::two_phase_mission();
    let n_r = f.count("partition.n_r", d.partition.n_r() as u64)? as usize;
    let n_theta = f.count("partition.n_theta", d.partition.n_theta() as u64)? as usize;
    let partition = PolarPartition::new(f.number("partition.r_max", d.partition.r_max())?, n_r, n_theta)
        .map_err(|e| ScenarioError::Validation(e.to_string()))?;
    let cfg = ScenarioConfig {
        partition,
        dt: f.number("sim.dt", d.dt)?,
        t_end: f.number("sim.t_end", d.t_end)?,
        u_max: f.number("control.u_max", d.u_max)?,
        speed: f.number("control.speed", d.speed)?,
        margin: f.number("control.margin", DEFAULT_MARGIN)?,
        lateral: f.number("control.lateral", DEFAULT_LATERAL)?,
        alarm_radius: f.number("alarm.radius", d.alarm_radius)?,
        release_radius: f.number("alarm.release_radius", d.release_radius)?,
        front_half_angle: f
            .number("alarm.front_half_angle_deg", d.front_half_angle.to_degrees())?
            .to_radians(),
        leader_velocity: f.schedule("leader.velocity")?.unwrap_or(d.leader_velocity),
        followers: [follower(&f, 1)?, follower(&f, 2)?],
        rng_seed: f.count("sim.rng_seed", d.rng_seed)?,
    };
    cfg.validate().map_err(|e| ScenarioError::Validation(e.to_string()))?;
    Ok(cfg)
}

pub fn parse_scenario(path: &Path) -> Result<ScenarioConfig, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario_str(&text)
}

/// Scenario text that parses back to `cfg`.
pub fn write_scenario(cfg: &ScenarioConfig) -> String {
    let schedule = |s: &Schedule| {
        s.iter()
            .map(|(t, v)| format!("{t}, {}, {}", v.x, v.y))
            .collect::<Vec<_>>()
            .join("; ")
    };
    let mut out = String::new();
    let p = &cfg.partition;
    let _ = writeln!(out, "partition.r_max = {}", p.r_max());
    let _ = writeln!(out, "partition.n_r = {}", p.n_r());
    let _ = writeln!(out, "partition.n_theta = {}", p.n_theta());
    let _ = writeln!(out, "sim.dt = {}", cfg.dt);
    let _ = writeln!(out, "sim.t_end = {}", cfg.t_end);
    let _ = writeln!(out, "sim.rng_seed = {}", cfg.rng_seed);
    let _ = writeln!(out, "control.u_max = {}", cfg.u_max);
    let _ = writeln!(out, "control.speed = {}", cfg.speed);
    let _ = writeln!(out, "control.margin = {}", cfg.margin);
    let _ = writeln!(out, "control.lateral = {}", cfg.lateral);
    let _ = writeln!(out, "alarm.radius = {}", cfg.alarm_radius);
    let _ = writeln!(out, "alarm.release_radius = {}", cfg.release_radius);
    let _ = writeln!(
        out,
        "alarm.front_half_angle_deg = {}",
        cfg.front_half_angle.to_degrees()
    );
    let _ = writeln!(out, "leader.velocity = {}", schedule(&cfg.leader_velocity));
    for (k, f) in cfg.followers.iter().enumerate() {
        let _ = writeln!(out, "follower{}.offset = {}", k + 1, schedule(&f.offsets));
        let _ = writeln!(out, "follower{}.displacement = {}", k + 1, schedule(&f.displacements));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "follower1.offset = 0, 12, 10\nfollower1.displacement = 0, -41.9, -0.9\n\
                           follower2.offset = 0, -12, -10\nfollower2.initial_position = -29.5, -9.5\n";

    #[test]
    fn defaults_fill_everything_but_the_followers() {
        let cfg = parse_scenario_str(MINIMAL).unwrap();
        assert_eq!(cfg.partition.n_r(), 6);
        assert_eq!(cfg.alarm_radius, 8.0);
        let d2 = cfg.followers[1].displacements[0].1;
        assert!((d2.x + 17.5).abs() < 1e-12 && (d2.y - 0.5).abs() < 1e-12);
    }

    #[test]
    fn written_scenarios_parse_back() {
        let cfg = ScenarioConfig::two_phase_mission();
        assert_eq!(parse_scenario_str(&write_scenario(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn empty_file_is_a_parse_error() {
        assert!(matches!(parse_scenario_str(""), Err(ScenarioError::Parse { .. })));
        assert!(matches!(
            parse_scenario_str("# only a comment\n"),
            Err(ScenarioError::Parse { .. })
        ));
    }

    #[test]
    fn reversed_radii_fail_validation() {
        let text = format!("{MINIMAL}alarm.release_radius = 5\n");
        let err = parse_scenario_str(&text).unwrap_err();
        assert!(
            matches!(err, ScenarioError::Validation(ref m) if m.contains("release_radius")),
            "{err}"
        );
    }

    #[test]
    fn unknown_and_duplicate_keys_are_rejected() {
        let unknown = format!("{MINIMAL}alarm.radiu = 3\n");
        assert!(matches!(
            parse_scenario_str(&unknown),
            Err(ScenarioError::Parse { line: 5, .. })
        ));
        let dup = format!("{MINIMAL}sim.dt = 0.1\nsim.dt = 0.2\n");
        assert!(matches!(
            parse_scenario_str(&dup),
            Err(ScenarioError::Parse { line: 6, .. })
        ));
    }

    #[test]
    fn malformed_tuples_name_their_line() {
        let text = MINIMAL.replace("0, 12, 10", "0, 12");
        let err = parse_scenario_str(&text).unwrap_err();
        assert!(matches!(err, ScenarioError::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn missing_follower_is_a_field_error() {
        let text = "sim.dt = 0.02\nfollower1.offset = 0, 1, 1\nfollower1.displacement = 0, 1, 1\n";
        assert!(
            matches!(parse_scenario_str(text), Err(ScenarioError::Field { ref field, .. }) if field == "follower2.offset")
        );
    }
}
