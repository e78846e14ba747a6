//! Text renderings of a scenario outcome: trajectory CSV, event log, verdict.

use std::fmt::{self, Write as _};

use super::engine::{ScenarioOutcome, ScenarioVerdict};
use super::world::{EventRecord, TrajectoryRow};

pub const TRAJECTORY_HEADER: &str = "t,leader_x,leader_y,f1_x,f1_y,f2_x,f2_y,f1_rel_x,f1_rel_y,f2_rel_x,f2_rel_y,f1_region_i,f1_region_j,f2_region_i,f2_region_j";

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut out = String::with_capacity(rows.len() * 160);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{:.6},{:.6},{:.6}", r.t, r.leader.x, r.leader.y);
        for p in r.followers.iter().chain(&r.relative) {
            let _ = write!(out, ",{:.6},{:.6}", p.x, p.y);
        }
        for g in &r.regions {
            let _ = write!(out, ",{},{}", g.i, g.j);
        }
        out.push('\n');
    }
    out
}

pub fn event_log(log: &[EventRecord]) -> String {
    log.iter().map(|r| format!("{r}\n")).collect()
}

fn opt_time(t: Option<f64>) -> String {
    t.map_or_else(|| "none".to_string(), |t| format!("{t:.3}"))
}

impl fmt::Display for ScenarioVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let per_phase = |g: &dyn Fn(usize) -> String| (0..self.phases.len()).map(g).collect::<Vec<_>>().join(",");
        writeln!(f, "phases={}", self.phases.len())?;
        for k in 0..2 {
            writeln!(
                f,
                "t_reach_{}={}",
                k + 1,
                per_phase(&|p| opt_time(self.phases[p].t_reach[k]))
            )?;
        }
        for k in 0..2 {
            writeln!(
                f,
                "hold_{}={}",
                k + 1,
                per_phase(&|p| {
                    let ph = &self.phases[p];
                    (ph.t_reach[k].is_some() && ph.hold[k]).to_string()
                })
            )?;
        }
        writeln!(f, "min_separation={:.3}", self.min_separation)?;
        writeln!(
            f,
            "min_separation_by_phase={}",
            per_phase(&|p| format!("{:.3}", self.phases[p].min_separation))
        )?;
        writeln!(f, "alarm_episodes={}", self.episodes.len())?;
        for (n, ep) in self.episodes.iter().enumerate() {
            writeln!(
                f,
                "episode_{}=avoider:{} alarm:{} start:{:.3} release:{}",
                n + 1,
                ep.avoider.index(),
                ep.alarm,
                ep.start,
                opt_time(ep.release)
            )?;
        }
        writeln!(f, "final_region_1={}", self.final_regions[0])?;
        write!(f, "final_region_2={}", self.final_regions[1])
    }
}

/// Verdict text followed by a blank line and the event log.
pub fn summary(outcome: &ScenarioOutcome) -> String {
    format!("{}\n\n{}", outcome.verdict, event_log(&outcome.log))
}
