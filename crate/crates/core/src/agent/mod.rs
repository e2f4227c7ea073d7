//! PPO adapted to the reward machine: one actor-critic per active stage,
//! advantages over the combined stage-plus-transition reward stream, and
//! reward-ablation baselines.

pub mod gae;
pub mod policy;
pub mod ppo;
pub mod rollout;
pub mod stub;
pub mod trainer;

pub use gae::{compute_advantages, Advantages};
pub use policy::{ActorCritic, StagePolicies};
pub use ppo::{clipped_objective, ppo_update, surrogate_objective, LossStats};
pub use rollout::{collect_rollout, EnvPool, Environment, EpisodeSummary, RolloutBatch, StepRecord};
pub use stub::AlwaysSuccessEnv;
pub use trainer::{CurveRow, StopReason, TrainSummary, Trainer, TrainerState, CURVE_WINDOW};

use serde::{Deserialize, Serialize};

use crate::crm::StageId;
use crate::env::{RewardConfig, RewardMode};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    /// Minibatch size for each optimizer step.
    pub batch_size: usize,
    pub clip_eps: f64,
    pub base_lr: f64,
    pub epochs_per_batch: usize,
    pub total_timesteps: u64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub seed: u64,
    /// Environment steps collected between updates, summed over the pool.
    pub horizon: usize,
    pub n_envs: usize,
    pub hidden: Vec<usize>,
    pub init_log_std: f64,
    /// Initial mean of the grasp policy's finger increments. A positive
    /// value starts the hand closing instead of dithering open.
    pub init_finger_bias: f64,
    pub max_grad_norm: f64,
    /// Hard episode budget; 0 means unlimited.
    pub max_episodes: u64,
    pub early_stop_window: usize,
    pub early_stop_threshold: f64,
    /// Apply reset noise during training.
    pub randomize: bool,
    /// Multiplier on the combined reward seen by the learner.
    pub reward_scale: f64,
    /// Per-stage multiplier on the stage reward, applied before clipping.
    pub intra_scale: PerStage,
    /// Per-stage symmetric bound on the stage reward seen by the learner;
    /// 0 disables clipping.
    pub intra_clip: PerStage,
}

/// A value for each stage that acts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerStage {
    pub approach: f64,
    pub grasp: f64,
}

impl PerStage {
    pub const fn both(v: f64) -> Self {
        Self { approach: v, grasp: v }
    }

    pub fn for_stage(&self, stage: StageId) -> f64 {
        match stage {
            StageId::Approach => self.approach,
            _ => self.grasp,
        }
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            batch_size: 64,
            clip_eps: 0.2,
            base_lr: 3e-5,
            epochs_per_batch: 10,
            total_timesteps: 200_000,
            value_coef: 0.5,
            entropy_coef: 0.0,
            seed: 0,
            horizon: 2048,
            n_envs: 4,
            hidden: vec![64, 64],
            init_log_std: -0.5,
            init_finger_bias: 0.5,
            max_grad_norm: 0.5,
            max_episodes: 0,
            early_stop_window: 100,
            early_stop_threshold: 0.99,
            randomize: true,
            reward_scale: 1.0,
            intra_scale: PerStage::both(1.0),
            intra_clip: PerStage::both(0.0),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::config("train.gamma", "must lie in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(Error::config("train.gae_lambda", "must lie in [0, 1]"));
        }
        if !(self.clip_eps > 0.0) {
            return Err(Error::config("train.clip_eps", "must be positive"));
        }
        if !(self.base_lr > 0.0) {
            return Err(Error::config("train.base_lr", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("train.batch_size", "must be at least 1"));
        }
        if self.epochs_per_batch == 0 {
            return Err(Error::config("train.epochs_per_batch", "must be at least 1"));
        }
        if self.n_envs == 0 {
            return Err(Error::config("train.n_envs", "must be at least 1"));
        }
        if self.horizon < self.n_envs {
            return Err(Error::config("train.horizon", "must cover at least one step per environment"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::config("train.hidden", "layer widths must be positive"));
        }
        if !(self.max_grad_norm > 0.0) {
            return Err(Error::config("train.max_grad_norm", "must be positive"));
        }
        if !(self.reward_scale > 0.0) {
            return Err(Error::config("train.reward_scale", "must be positive"));
        }
        if !(self.intra_clip.approach >= 0.0 && self.intra_clip.grasp >= 0.0) {
            return Err(Error::config("train.intra_clip", "must be non-negative"));
        }
        if !(self.intra_scale.approach >= 0.0 && self.intra_scale.grasp >= 0.0) {
            return Err(Error::config("train.intra_scale", "must be non-negative"));
        }
        if self.early_stop_window == 0 {
            return Err(Error::config("train.early_stop_window", "must be at least 1"));
        }
        if !(self.value_coef >= 0.0 && self.entropy_coef >= 0.0) {
            return Err(Error::config("train.value_coef", "loss coefficients must be non-negative"));
        }
        Ok(())
    }
}

/// Step-wise decay: full rate for the first 40% of training, 90% until 70%,
/// then 80%.
pub fn lr_schedule(progress: f64, base_lr: f64) -> f64 {
    let p = progress.clamp(0.0, 1.0);
    if p < 0.4 {
        base_lr
    } else if p < 0.7 {
        base_lr * 9.0 / 10.0
    } else {
        base_lr * 8.0 / 10.0
    }
}

pub fn early_stop_with(history: &[bool], window: usize, threshold: f64) -> bool {
    if window == 0 || history.len() < window {
        return false;
    }
    let recent = &history[history.len() - window..];
    recent.iter().filter(|&&s| s).count() as f64 / window as f64 >= threshold
}

/// True once the latest 100 episodes succeed at least 99% of the time.
pub fn early_stop(success_history: &[bool]) -> bool {
    early_stop_with(success_history, 100, 0.99)
}

/// Reward configuration and display label for a training mode.
pub fn make_baseline(mode: RewardMode) -> (RewardConfig, &'static str) {
    let cfg = RewardConfig {
        mode,
        ..RewardConfig::default()
    };
    let label = match mode {
        RewardMode::Full => "CRM-PPO",
        RewardMode::TransitionOnly => "Transition-only PPO",
        RewardMode::IntraOnly => "Intra-only PPO",
    };
    (cfg, label)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_plateaus() {
        assert_eq!(lr_schedule(0.2, 3e-5), 3e-5);
        assert_eq!(lr_schedule(0.5, 3e-5), 2.7e-5);
        assert_eq!(lr_schedule(0.8, 3e-5), 2.4e-5);
        assert_eq!(lr_schedule(0.4, 1.0), 0.9);
        assert_eq!(lr_schedule(0.7, 1.0), 0.8);
    }

    #[test]
    fn early_stop_examples() {
        assert!(early_stop(&[true; 100]));
        let mut h = vec![true; 100];
        h[3] = false;
        h[50] = false;
        assert!(!early_stop(&h));
        h[3] = true;
        assert!(early_stop(&h));
        assert!(!early_stop(&[true; 50]));
        let mut long = vec![false; 500];
        long.extend([true; 100]);
        assert!(early_stop(&long));
    }

    #[test]
    fn baselines_set_mode() {
        for m in RewardMode::ALL {
            assert_eq!(make_baseline(m).0.mode, m);
        }
        assert_eq!(make_baseline(RewardMode::Full).1, "CRM-PPO");
    }

    #[test]
    fn config_validation_names_key() {
        let cfg = TrainConfig {
            gamma: 1.5,
            ..TrainConfig::default()
        };
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("train.gamma"), "{err}");
        TrainConfig::default().validate().unwrap();
    }
}
