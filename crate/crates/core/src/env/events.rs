use serde::{Deserialize, Serialize};

use super::observation::GlobalObservation;
use super::task::{Affordance, TaskSpec};
use crate::crm::{EventFlags, StageId};
use crate::taxonomy::TopologySpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EventConfig {
    pub arrive_threshold: f64,
    /// Half side of the cubic workspace centred at the origin (m).
    pub workspace_half: f64,
    /// Consecutive steps the success predicate must hold.
    pub stable_steps: u32,
    pub grasp_budget: u32,
    pub force_tol: f64,
    pub torque_tol: f64,
    pub twist_torque: f64,
    pub press_force: f64,
}

impl Default for EventConfig {
    fn default() -> Self {
        Self {
            arrive_threshold: 0.02,
            workspace_half: 0.5,
            stable_steps: 20,
            grasp_budget: 300,
            force_tol: 0.5,
            torque_tol: 0.05,
            twist_torque: 0.05,
            press_force: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    /// Steps taken in the current stage, including the one being evaluated.
    pub steps_in_stage: u32,
    /// Consecutive steps (ending now) with the success predicate true.
    pub stable_streak: u32,
}

pub fn success_predicate(
    obs: &GlobalObservation,
    task: &TaskSpec,
    topo: &TopologySpec,
    cfg: &EventConfig,
) -> bool {
    if obs.n_c == 0 || obs.n_c < topo.min_contacts {
        return false;
    }
    match task.affordance {
        Affordance::Twist => obs.o_torque.dot(&task.success_axis) >= cfg.twist_torque,
        Affordance::Press => obs.o_force.dot(&task.success_axis) >= cfg.press_force,
        _ => obs.o_cone && obs.o_force.norm() <= cfg.force_tol && obs.o_torque.norm() <= cfg.torque_tol,
    }
}

pub fn in_workspace(p: &nalgebra::Vector3<f64>, half: f64) -> bool {
    p.iter().all(|c| c.abs() <= half)
}

pub fn detect_events(obs: &GlobalObservation, stage: StageId, counters: &Counters, cfg: &EventConfig) -> EventFlags {
    let mut flags = EventFlags::default();
    let outside = !in_workspace(&obs.o_object, cfg.workspace_half);
    match stage {
        StageId::Approach => {
            flags.arrive = obs.o_dist < cfg.arrive_threshold;
            flags.aor = outside;
        }
        StageId::Grasp => {
            flags.gor = outside;
            flags.succ = counters.stable_streak >= cfg.stable_steps;
            flags.fail = !flags.succ && counters.steps_in_stage >= cfg.grasp_budget;
        }
        _ => {}
    }
    flags
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn obs() -> GlobalObservation {
        GlobalObservation {
            n_c: 0,
            o_dist: 0.1,
            o_object: Vector3::zeros(),
            o_cone: false,
            o_relative: Vector3::zeros(),
            o_force: Vector3::zeros(),
            o_torque: Vector3::zeros(),
        }
    }

    #[test]
    fn out_of_reach_in_approach() {
        let mut o = obs();
        o.o_object = Vector3::new(2.0, 0.0, 0.0);
        let f = detect_events(&o, StageId::Approach, &Counters::default(), &EventConfig::default());
        assert!(f.aor && !f.gor);
    }

    #[test]
    fn arrival_threshold() {
        let mut o = obs();
        o.o_dist = 0.015;
        assert!(detect_events(&o, StageId::Approach, &Counters::default(), &EventConfig::default()).arrive);
        o.o_dist = 0.02;
        assert!(!detect_events(&o, StageId::Approach, &Counters::default(), &EventConfig::default()).arrive);
    }

    #[test]
    fn success_needs_full_streak() {
        let cfg = EventConfig::default();
        let c = Counters {
            steps_in_stage: 19,
            stable_streak: 19,
        };
        assert!(!detect_events(&obs(), StageId::Grasp, &c, &cfg).succ);
        let c = Counters {
            steps_in_stage: 20,
            stable_streak: 20,
        };
        assert!(detect_events(&obs(), StageId::Grasp, &c, &cfg).succ);
    }

    #[test]
    fn budget_exhaustion_fails_unless_success() {
        let cfg = EventConfig::default();
        let c = Counters {
            steps_in_stage: 300,
            stable_streak: 0,
        };
        assert!(detect_events(&obs(), StageId::Grasp, &c, &cfg).fail);
        let c = Counters {
            steps_in_stage: 300,
            stable_streak: 25,
        };
        let f = detect_events(&obs(), StageId::Grasp, &c, &cfg);
        assert!(f.succ && !f.fail);
    }
}
