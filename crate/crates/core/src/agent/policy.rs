use rand::Rng;
use serde::{Deserialize, Serialize};

use super::TrainConfig;
use crate::approx::{Checkpoint, GaussianPolicyOutput, Mlp, NamedNet, OptimState};
use crate::crm::{ObsField, RewardMachine, StageContext, StageId};
use crate::error::{Error, Result};

/// Fixed input gains so metre-scale positions and newton-scale wrenches
/// reach the networks at comparable magnitudes.
fn field_scale(field: ObsField) -> f64 {
    match field {
        ObsField::NumContacts => 0.2,
        ObsField::Dist | ObsField::Object | ObsField::Relative => 10.0,
        ObsField::Cone | ObsField::Force => 1.0,
        ObsField::Torque => 10.0,
    }
}

fn input_scale(ctx: &StageContext) -> Vec<f64> {
    let mut fields = ctx.abstraction_mask.clone();
    fields.sort();
    fields.dedup();
    fields
        .into_iter()
        .flat_map(|f| std::iter::repeat_n(field_scale(f), f.width()))
        .collect()
}

/// Gaussian actor with a state-independent log standard deviation, and a
/// separate value network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorCritic {
    pub stage: StageId,
    pub actor: Mlp,
    pub log_std: Vec<f64>,
    pub critic: Mlp,
    pub input_scale: Vec<f64>,
    pub opt_actor: OptimState,
    pub opt_log_std: OptimState,
    pub opt_critic: OptimState,
}

impl ActorCritic {
    pub fn new<R: Rng + ?Sized>(
        ctx: &StageContext,
        hidden: &[usize],
        init_log_std: f64,
        finger_bias: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let inp = ctx.abstract_dim();
        let mut sizes = vec![inp];
        sizes.extend(hidden);
        let mut actor_sizes = sizes.clone();
        actor_sizes.push(ctx.action_dim);
        sizes.push(1);
        let mut actor = Mlp::glorot(&actor_sizes, rng)?;
        // start near a zero-mean policy
        let last = actor.num_layers() - 1;
        let (start, end) = actor.layer_offsets(last);
        actor.params_mut()[start..end].iter_mut().for_each(|p| *p *= 0.01);
        let critic = Mlp::glorot(&sizes, rng)?;
        if ctx.stage == StageId::Grasp {
            let (_, bias) = actor.layer_offsets(last);
            for b in &mut actor.params_mut()[bias + 3..bias + ctx.action_dim] {
                *b = finger_bias;
            }
        }
        Ok(Self {
            stage: ctx.stage,
            opt_actor: OptimState::new(actor.params().len(), 1e-3),
            opt_log_std: OptimState::new(ctx.action_dim, 1e-3),
            opt_critic: OptimState::new(critic.params().len(), 1e-3),
            actor,
            log_std: vec![init_log_std; ctx.action_dim],
            critic,
            input_scale: input_scale(ctx),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.actor.output_dim()
    }

    pub fn scale(&self, obs: &[f64]) -> Result<Vec<f64>> {
        if obs.len() != self.input_scale.len() {
            return Err(Error::dim(format!("{} policy input", self.stage.name()), self.input_scale.len(), obs.len()));
        }
        Ok(obs.iter().zip(&self.input_scale).map(|(o, s)| o * s).collect())
    }

    pub fn distribution(&self, obs: &[f64]) -> Result<GaussianPolicyOutput> {
        let mean = self.actor.forward(&self.scale(obs)?)?;
        Ok(GaussianPolicyOutput::new(mean, &self.log_std))
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.critic.forward(&self.scale(obs)?)?[0])
    }

    /// Deterministic action used for evaluation.
    pub fn mean_action(&self, obs: &[f64]) -> Result<Vec<f64>> {
        self.actor.forward(&self.scale(obs)?)
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.opt_actor.lr = lr;
        self.opt_log_std.lr = lr;
        self.opt_critic.lr = lr;
    }
}

/// One actor-critic per stage that acts: approach and grasp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagePolicies {
    pub approach: ActorCritic,
    pub grasp: ActorCritic,
}

impl StagePolicies {
    pub fn new<R: Rng + ?Sized>(machine: &RewardMachine, cfg: &TrainConfig, rng: &mut R) -> Result<Self> {
        let (h, s, b) = (&cfg.hidden, cfg.init_log_std, cfg.init_finger_bias);
        Ok(Self {
            approach: ActorCritic::new(machine.context(StageId::Approach), h, s, b, rng)?,
            grasp: ActorCritic::new(machine.context(StageId::Grasp), h, s, b, rng)?,
        })
    }

    pub fn get(&self, stage: StageId) -> Result<&ActorCritic> {
        match stage {
            StageId::Approach => Ok(&self.approach),
            StageId::Grasp => Ok(&self.grasp),
            other => Err(Error::TerminalStage(other)),
        }
    }

    pub fn get_mut(&mut self, stage: StageId) -> Result<&mut ActorCritic> {
        match stage {
            StageId::Approach => Ok(&mut self.approach),
            StageId::Grasp => Ok(&mut self.grasp),
            other => Err(Error::TerminalStage(other)),
        }
    }

    /// Value of a state under the critic of the stage it belongs to; zero
    /// for terminal stages.
    pub fn value(&self, stage: StageId, obs: &[f64]) -> Result<f64> {
        if stage.is_terminal() {
            return Ok(0.0);
        }
        self.get(stage)?.value(obs)
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.approach.set_lr(lr);
        self.grasp.set_lr(lr);
    }

    /// Networks only; optimizer state is left out.
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut nets = Vec::new();
        for ac in [&self.approach, &self.grasp] {
            let name = ac.stage.name();
            nets.push(NamedNet::from_mlp(&format!("{name}.actor"), &ac.actor, &ac.log_std));
            nets.push(NamedNet::from_mlp(&format!("{name}.critic"), &ac.critic, &[]));
        }
        Checkpoint::new(nets)
    }

    /// Rebuilds policies from a checkpoint, rejecting networks whose shapes
    /// do not match the machine's stage contexts.
    pub fn from_checkpoint(ckpt: &Checkpoint, machine: &RewardMachine) -> Result<Self> {
        let load = |stage: StageId| -> Result<ActorCritic> {
            let ctx = machine.context(stage);
            let name = stage.name();
            let a = ckpt.get(&format!("{name}.actor"))?;
            let c = ckpt.get(&format!("{name}.critic"))?;
            let actor = a.to_mlp()?;
            let critic = c.to_mlp()?;
            if actor.input_dim() != ctx.abstract_dim() || critic.input_dim() != ctx.abstract_dim() {
                return Err(Error::dim(format!("{name} checkpoint input"), ctx.abstract_dim(), actor.input_dim()));
            }
            if actor.output_dim() != ctx.action_dim || a.log_std.len() != ctx.action_dim {
                return Err(Error::dim(format!("{name} checkpoint action"), ctx.action_dim, actor.output_dim()));
            }
            if critic.output_dim() != 1 {
                return Err(Error::dim(format!("{name} checkpoint value"), 1, critic.output_dim()));
            }
            Ok(ActorCritic {
                stage,
                opt_actor: OptimState::new(actor.params().len(), 1e-3),
                opt_log_std: OptimState::new(ctx.action_dim, 1e-3),
                opt_critic: OptimState::new(critic.params().len(), 1e-3),
                actor,
                log_std: a.log_std.clone(),
                critic,
                input_scale: input_scale(ctx),
            })
        };
        Ok(Self {
            approach: load(StageId::Approach)?,
            grasp: load(StageId::Grasp)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crm::TransitionTable;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn policies() -> (StagePolicies, RewardMachine) {
        let m = RewardMachine::with_defaults(TransitionTable::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = TrainConfig {
            hidden: vec![16, 16],
            ..TrainConfig::default()
        };
        (StagePolicies::new(&m, &cfg, &mut rng).unwrap(), m)
    }

    #[test]
    fn shapes_follow_contexts() {
        let (p, _) = policies();
        assert_eq!((p.approach.input_dim(), p.approach.action_dim()), (8, 3));
        assert_eq!((p.grasp.input_dim(), p.grasp.action_dim()), (15, 8));
        assert!(p.get(StageId::GraspSuccess).is_err());
        assert!(p.approach.value(&[0.0; 15]).is_err());
    }

    #[test]
    fn checkpoint_roundtrip() {
        let (p, m) = policies();
        let back = StagePolicies::from_checkpoint(&p.to_checkpoint(), &m).unwrap();
        assert_eq!(back.approach.actor, p.approach.actor);
        assert_eq!(back.grasp.log_std, p.grasp.log_std);
        assert_eq!(back.grasp.critic, p.grasp.critic);
    }

    #[test]
    fn mismatched_checkpoint_rejected() {
        let (p, m) = policies();
        let mut ckpt = p.to_checkpoint();
        let wrong = Mlp::zeros(&[16, 16, 8]).unwrap();
        ckpt.nets[2] = NamedNet::from_mlp("grasp.actor", &wrong, &[0.0; 8]);
        assert!(matches!(StagePolicies::from_checkpoint(&ckpt, &m), Err(Error::Dimension { .. })));
    }
}
