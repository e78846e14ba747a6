use std::f64::consts::PI;

use crate::geometry::Vec2;
use crate::polar::{PolarPartition, DEFAULT_LATERAL, DEFAULT_MARGIN};

use super::SimError;

/// Piecewise-constant schedule of `(start time, value)` entries, time-sorted.
pub type Schedule = Vec<(f64, Vec2)>;

/// The value in force at `t`: the last entry starting at or before `t`, or
/// the first entry if `t` precedes them all.
pub fn schedule_value(schedule: &[(f64, Vec2)], t: f64) -> Vec2 {
    schedule
        .iter()
        .take_while(|(start, _)| *start <= t)
        .last()
        .or_else(|| schedule.first())
        .map(|(_, v)| *v)
        .unwrap_or(Vec2::ZERO)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FollowerConfig {
    /// Desired offset from the leader, leader frame.
    pub offsets: Schedule,
    /// Position relative to the desired offset at the start of each formation
    /// phase. The entry at `t = 0` fixes the initial position; later entries
    /// must coincide with offset switches and re-seed the follower there.
    /// Without one, a switch keeps the follower's leader-frame position.
    pub displacements: Schedule,
}

impl FollowerConfig {
    /// Initial position in the leader frame.
    pub fn initial_position(&self) -> Vec2 {
        schedule_value(&self.offsets, 0.0) + schedule_value(&self.displacements, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub partition: PolarPartition,
    pub dt: f64,
    pub t_end: f64,
    pub u_max: f64,
    /// Controller design speed, capped at `u_max`.
    pub speed: f64,
    pub margin: f64,
    pub lateral: f64,
    pub alarm_radius: f64,
    pub release_radius: f64,
    pub front_half_angle: f64,
    pub leader_velocity: Schedule,
    pub followers: [FollowerConfig; 2],
    /// Seed for sampled-start checks; the simulation itself is not random.
    pub rng_seed: u64,
}

impl ScenarioConfig {
    /// The two-phase leader-follower mission: formation switch at 50 s and
    /// the phase-start displacements of both followers.
    pub fn two_phase_mission() -> Self {
        ScenarioConfig {
            partition: PolarPartition::new(50.0, 6, 9).expect("valid partition"),
            dt: 0.02,
            t_end: 150.0,
            u_max: 5.0,
            speed: 2.0,
            margin: DEFAULT_MARGIN,
            lateral: DEFAULT_LATERAL,
            alarm_radius: 8.0,
            release_radius: 12.0,
            front_half_angle: PI / 3.0,
            leader_velocity: vec![(0.0, Vec2::new(1.0, 0.0))],
            followers: [
                FollowerConfig {
                    offsets: vec![(0.0, Vec2::new(12.0, 10.0)), (50.0, Vec2::new(-30.0, -10.0))],
                    displacements: vec![(0.0, Vec2::new(-41.9, -0.9)), (50.0, Vec2::new(40.5, 23.3))],
                },
                FollowerConfig {
                    offsets: vec![(0.0, Vec2::new(-12.0, -10.0)), (50.0, Vec2::new(0.0, 10.0))],
                    displacements: vec![(0.0, Vec2::new(-17.5, 0.5)), (50.0, Vec2::new(-14.5, -23.0))],
                },
            ],
            rng_seed: 0,
        }
    }

    /// Design speed actually used by the region controllers.
    pub fn design_speed(&self) -> f64 {
        self.speed.min(self.u_max)
    }

    /// Offset switch instants after `t = 0`, sorted and deduplicated.
    pub fn switch_times(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .followers
            .iter()
            .flat_map(|f| f.offsets.iter().map(|(t, _)| *t))
            .filter(|&t| t > 0.0)
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        let positive = |name: &str, v: f64| -> Result<(), SimError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(SimError::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        };
        positive("dt", self.dt)?;
        positive("t_end", self.t_end)?;
        positive("speed", self.speed)?;
        positive("alarm_radius", self.alarm_radius)?;
        if !(self.u_max.is_finite() && self.u_max >= 0.0) {
            return bad(format!("u_max must be non-negative, got {}", self.u_max));
        }
        if self.release_radius.partial_cmp(&self.alarm_radius) != Some(std::cmp::Ordering::Greater) {
            return bad(format!(
                "release_radius ({}) must exceed alarm_radius ({})",
                self.release_radius, self.alarm_radius
            ));
        }
        if !(self.front_half_angle > 0.0 && self.front_half_angle <= PI) {
            return bad(format!(
                "front_half_angle must lie in (0, pi], got {}",
                self.front_half_angle
            ));
        }
        if !(self.margin > 0.0 && self.margin < 1.0) {
            return bad(format!("margin must lie in (0, 1), got {}", self.margin));
        }
        if !(0.0..1.0).contains(&self.lateral) {
            return bad(format!("lateral must lie in [0, 1), got {}", self.lateral));
        }
        check_schedule("leader.velocity", &self.leader_velocity)?;
        for (k, f) in self.followers.iter().enumerate() {
            let name = format!("follower{}", k + 1);
            check_schedule(&format!("{name}.offset"), &f.offsets)?;
            check_schedule(&format!("{name}.displacement"), &f.displacements)?;
            if f.offsets[0].0 != 0.0 || f.displacements[0].0 != 0.0 {
                return bad(format!("{name}: offset and displacement schedules must start at t = 0"));
            }
            for (t, _) in &f.displacements[1..] {
                if !f.offsets.iter().any(|(s, _)| s == t) {
                    return bad(format!(
                        "{name}: displacement at t = {t} does not match an offset switch"
                    ));
                }
            }
            for (t, d) in &f.displacements {
                if d.norm() > self.partition.r_max() {
                    return bad(format!(
                        "{name}: displacement at t = {t} lies outside the control horizon {}",
                        self.partition.r_max()
                    ));
                }
            }
        }
        Ok(())
    }
}

fn check_schedule(name: &str, s: &[(f64, Vec2)]) -> Result<(), SimError> {
    if s.is_empty() {
        return Err(SimError::InvalidConfig(format!("{name} is empty")));
    }
    if s.iter()
        .any(|(t, v)| !(t.is_finite() && v.x.is_finite() && v.y.is_finite()))
    {
        return Err(SimError::InvalidConfig(format!("{name} has a non-finite entry")));
    }
    if s.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(SimError::InvalidConfig(format!("{name} is not strictly time-sorted")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_phase_mission_is_valid() {
        let cfg = ScenarioConfig::two_phase_mission();
        cfg.validate().unwrap();
        assert_eq!(cfg.switch_times(), [50.0]);
        let p1 = cfg.followers[0].initial_position();
        assert!((p1.x - (12.0 - 41.9)).abs() < 1e-12 && (p1.y - 9.1).abs() < 1e-12);
    }

    #[test]
    fn hysteresis_is_enforced() {
        let mut cfg = ScenarioConfig::two_phase_mission();
        cfg.release_radius = 6.0;
        assert!(matches!(cfg.validate(), Err(SimError::InvalidConfig(_))));
    }

    #[test]
    fn schedule_lookup() {
        let s = vec![(0.0, Vec2::new(1.0, 0.0)), (10.0, Vec2::new(2.0, 0.0))];
        assert_eq!(schedule_value(&s, 9.99).x, 1.0);
        assert_eq!(schedule_value(&s, 10.0).x, 2.0);
        assert_eq!(schedule_value(&s, -1.0).x, 1.0);
    }
}
