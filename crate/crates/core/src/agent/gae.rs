use super::{PerStage, RolloutBatch, StepRecord, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Advantages {
    pub advantages: Vec<f64>,
    /// Regression targets for the critics: advantage plus value estimate.
    pub returns: Vec<f64>,
}

/// Generalized advantage estimation over the combined reward
/// `intra + transition`, computed separately along each environment's
/// stream of records. The transition reward enters undiscounted, so with
/// `lambda = 0` each advantage is `r + gamma V(next) + R_T - V(cur)`.
pub fn compute_advantages(batch: &RolloutBatch, cfg: &TrainConfig) -> Advantages {
    let plain = PerStage::both(1.0);
    if cfg.reward_scale == 1.0 && cfg.intra_scale == plain && cfg.intra_clip == PerStage::both(0.0) {
        return advantages_for(&batch.records, cfg.gamma, cfg.gae_lambda);
    }
    let shaped: Vec<StepRecord> = batch
        .records
        .iter()
        .map(|r| {
            let clip = cfg.intra_clip.for_stage(r.stage);
            let mut intra = r.intra_reward * cfg.intra_scale.for_stage(r.stage);
            if clip > 0.0 {
                intra = intra.clamp(-clip, clip);
            }
            StepRecord {
                intra_reward: intra * cfg.reward_scale,
                transition_reward: r.transition_reward * cfg.reward_scale,
                ..r.clone()
            }
        })
        .collect();
    advantages_for(&shaped, cfg.gamma, cfg.gae_lambda)
}

pub fn advantages_for(records: &[StepRecord], gamma: f64, lambda: f64) -> Advantages {
    let mut adv = vec![0.0; records.len()];
    let n_env = records.iter().map(|r| r.env + 1).max().unwrap_or(0);
    let mut carry = vec![0.0; n_env];
    for (i, r) in records.iter().enumerate().rev() {
        let bootstrap = if r.terminal { 0.0 } else { r.next_value };
        let delta = r.intra_reward + r.transition_reward + gamma * bootstrap - r.value_estimate;
        let follow = if r.done { 0.0 } else { carry[r.env] };
        adv[i] = delta + gamma * lambda * follow;
        carry[r.env] = adv[i];
    }
    let returns = adv.iter().zip(records).map(|(a, r)| a + r.value_estimate).collect();
    Advantages { advantages: adv, returns }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crm::StageId;

    fn rec(env: usize, r: f64, rt: f64, v: f64, vn: f64, done: bool, terminal: bool) -> StepRecord {
        StepRecord {
            env,
            stage: StageId::Approach,
            abstract_obs: vec![],
            action: vec![],
            log_prob_old: 0.0,
            intra_reward: r,
            transition_reward: rt,
            value_estimate: v,
            next_value: vn,
            done,
            terminal,
            success: false,
        }
    }

    #[test]
    fn one_step_example() {
        let a = advantages_for(&[rec(0, 1.0, 0.0, 1.0, 2.0, false, false)], 0.99, 0.0);
        assert!((a.advantages[0] - 1.98).abs() < 1e-12);
    }

    #[test]
    fn terminal_step_ignores_bootstrap() {
        let a = advantages_for(&[rec(0, -1.0, 100.0, 5.0, 42.0, true, true)], 0.99, 0.95);
        assert_eq!(a.advantages[0], 99.0 - 5.0);
    }

    #[test]
    fn truncation_bootstraps_but_cuts_chain() {
        let recs = [rec(0, 0.0, 0.0, 0.0, 3.0, true, false), rec(0, 7.0, 0.0, 0.0, 0.0, true, true)];
        let a = advantages_for(&recs, 0.5, 1.0);
        assert_eq!(a.advantages, vec![1.5, 7.0]);
    }

    #[test]
    fn interleaved_envs_are_independent() {
        let recs = [
            rec(0, 1.0, 0.0, 0.0, 0.0, false, false),
            rec(1, 10.0, 0.0, 0.0, 0.0, false, false),
            rec(0, 1.0, 0.0, 0.0, 0.0, true, true),
            rec(1, 10.0, 0.0, 0.0, 0.0, true, true),
        ];
        let a = advantages_for(&recs, 1.0, 1.0);
        assert_eq!(a.advantages, vec![2.0, 20.0, 1.0, 10.0]);
    }
}
