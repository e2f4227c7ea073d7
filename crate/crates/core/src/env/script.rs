//! Hand-written controller: drive the palm to the grasp location, then close
//! every active digit and hold. Used as a feasibility oracle for generated
//! tasks and as a regression fixture.

use nalgebra::Vector3;

use super::{Affordance, EnvConfig, GraspEnv, TaskSpec};
use crate::crm::{RewardMachine, StageId, TransitionTable};
use crate::error::Result;
use crate::taxonomy::NUM_DIGITS;

/// Extra travel past the grasp location when pressing (m).
pub const PRESS_DEPTH: f64 = 0.01;

pub fn scripted_action(env: &GraspEnv, stage: StageId) -> Vec<f64> {
    let cfg = env.config();
    let hand = env.hand();
    let mut target = env.grasp_location();
    match stage {
        StageId::Approach => {
            let d = (target - hand.palm_pos) / cfg.step_max;
            d.iter().map(|v| v.clamp(-1.0, 1.0)).collect()
        }
        _ => {
            if env.task().affordance == Affordance::Press {
                target += hand.approach_axis() * PRESS_DEPTH;
            }
            let d: Vector3<f64> = (target - hand.palm_pos) / (cfg.step_max * cfg.grasp_scale);
            let mut a: Vec<f64> = d.iter().map(|v| v.clamp(-1.0, 1.0)).collect();
            let placed = (target - hand.palm_pos).norm() < 1e-3;
            for digit in 0..NUM_DIGITS {
                a.push(if placed && env.geometry().active[digit] { 1.0 } else { 0.0 });
            }
            a
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedOutcome {
    pub final_stage: StageId,
    pub steps: u32,
    pub return_total: f64,
}

impl ScriptedOutcome {
    pub fn success(&self) -> bool {
        self.final_stage == StageId::GraspSuccess
    }
}

/// Runs the scripted controller for one unrandomized episode.
pub fn run_scripted(task: &TaskSpec, cfg: &EnvConfig) -> Result<ScriptedOutcome> {
    let mut env = GraspEnv::new(task.clone(), cfg.clone())?;
    run_scripted_in(&mut env)
}

/// Runs the scripted controller from the environment's current (freshly
/// reset) state.
pub fn run_scripted_in(env: &mut GraspEnv) -> Result<ScriptedOutcome> {
    let cfg = env.config().clone();
    let machine = RewardMachine::with_defaults(TransitionTable::default())?;
    let mut state = machine.start();
    let mut total = 0.0;
    while !state.is_terminal() && state.episode_step < cfg.episode_cap {
        if state.current == StageId::Approach && state.steps_in_stage >= cfg.approach_budget {
            break;
        }
        let stage = state.current;
        let a = scripted_action(env, stage);
        let out = env.step(&a, stage)?;
        let t = machine.step(&mut state, out.flags, out.obs.o_cone)?;
        total += out.intra_reward + t.reward;
    }
    Ok(ScriptedOutcome {
        final_stage: state.current,
        steps: state.episode_step,
        return_total: total,
    })
}
