use nalgebra::Vector3;
use rand_chacha::ChaCha8Rng;

use super::Environment;
use crate::crm::{EventFlags, StageId};
use crate::env::{Affordance, GlobalObservation, StepOutcome};
use crate::error::{Error, Result};

/// Test double that arrives on the first approach step and succeeds on the
/// first grasp step, whatever the action.
#[derive(Debug, Clone, Default)]
pub struct AlwaysSuccessEnv;

fn obs() -> GlobalObservation {
    GlobalObservation {
        n_c: 0,
        o_dist: 0.0,
        o_object: Vector3::zeros(),
        o_cone: true,
        o_relative: Vector3::zeros(),
        o_force: Vector3::zeros(),
        o_torque: Vector3::zeros(),
    }
}

impl Environment for AlwaysSuccessEnv {
    fn reset(&mut self, _rng: &mut ChaCha8Rng, _randomize: bool) -> GlobalObservation {
        obs()
    }

    fn step(&mut self, _action: &[f64], stage: StageId) -> Result<StepOutcome> {
        let mut flags = EventFlags::default();
        match stage {
            StageId::Approach => flags.arrive = true,
            StageId::Grasp => flags.succ = true,
            other => return Err(Error::TerminalStage(other)),
        }
        Ok(StepOutcome {
            obs: obs(),
            flags,
            intra_reward: 0.0,
            predicate: stage == StageId::Grasp,
        })
    }

    fn affordance(&self) -> Affordance {
        Affordance::Lift
    }

    fn approach_budget(&self) -> u32 {
        200
    }

    fn episode_cap(&self) -> u32 {
        500
    }
}
