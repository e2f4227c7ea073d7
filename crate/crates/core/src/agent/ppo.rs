use log::warn;
use rand::seq::SliceRandom;
use rand::Rng;

use super::{ActorCritic, Advantages, RolloutBatch, StagePolicies, StepRecord, TrainConfig};
use crate::approx::policy::log_prob_grads;
use crate::approx::GaussianPolicyOutput;
use crate::crm::StageId;
use crate::error::Result;

/// Per-sample clipped surrogate `min(rho A, clip(rho, 1-eps, 1+eps) A)`.
pub fn clipped_objective(ratio: f64, adv: f64, eps: f64) -> f64 {
    (ratio * adv).min(ratio.clamp(1.0 - eps, 1.0 + eps) * adv)
}

/// Derivative of [`clipped_objective`] with respect to the log-ratio.
fn clipped_grad(ratio: f64, adv: f64, eps: f64) -> f64 {
    let clipped = (adv >= 0.0 && ratio > 1.0 + eps) || (adv < 0.0 && ratio < 1.0 - eps);
    if clipped {
        0.0
    } else {
        ratio * adv
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossStats {
    pub loss_pi: f64,
    pub loss_v: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub minibatches: usize,
    pub skipped: usize,
}

/// Mean clipped surrogate over a set of records with fixed advantages.
pub fn surrogate_objective(policies: &StagePolicies, records: &[StepRecord], advantages: &[f64], eps: f64) -> Result<f64> {
    let mut total = 0.0;
    for (r, &a) in records.iter().zip(advantages) {
        let lp = policies.get(r.stage)?.distribution(&r.abstract_obs)?.log_prob(&r.action);
        total += clipped_objective((lp - r.log_prob_old).exp(), a, eps);
    }
    Ok(total / records.len().max(1) as f64)
}

struct Grads {
    actor: Vec<f64>,
    log_std: Vec<f64>,
    critic: Vec<f64>,
}

impl Grads {
    fn zeros(ac: &ActorCritic) -> Self {
        Self {
            actor: vec![0.0; ac.actor.params().len()],
            log_std: vec![0.0; ac.log_std.len()],
            critic: vec![0.0; ac.critic.params().len()],
        }
    }

    fn all(&mut self) -> impl Iterator<Item = &mut f64> {
        self.actor.iter_mut().chain(self.log_std.iter_mut()).chain(self.critic.iter_mut())
    }

    fn clip(&mut self, max_norm: f64) {
        let norm = self.all().map(|g| *g * *g).sum::<f64>().sqrt();
        if norm > max_norm {
            let s = max_norm / norm;
            self.all().for_each(|g| *g *= s);
        }
    }
}

/// One gradient step on a minibatch; `None` when the loss was non-finite.
fn minibatch_step(
    ac: &mut ActorCritic,
    records: &[StepRecord],
    idx: &[usize],
    adv: &Advantages,
    cfg: &TrainConfig,
) -> Result<Option<LossStats>> {
    let n = idx.len() as f64;
    let mean = idx.iter().map(|&i| adv.advantages[i]).sum::<f64>() / n;
    let var = idx.iter().map(|&i| (adv.advantages[i] - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt().max(1e-8);

    let mut g = Grads::zeros(ac);
    let mut stats = LossStats::default();
    for &i in idx {
        let r = &records[i];
        let a = (adv.advantages[i] - mean) / std;
        let x = ac.scale(&r.abstract_obs)?;

        let trace = ac.actor.forward_trace(&x)?;
        let mu = trace.output().to_vec();
        let dist = GaussianPolicyOutput::new(mu.clone(), &ac.log_std);
        let log_ratio = dist.log_prob(&r.action) - r.log_prob_old;
        let ratio = log_ratio.exp();
        stats.loss_pi -= clipped_objective(ratio, a, cfg.clip_eps) / n;
        stats.approx_kl += (ratio - 1.0 - log_ratio) / n;
        if (ratio - 1.0).abs() > cfg.clip_eps {
            stats.clip_fraction += 1.0 / n;
        }
        let coeff = -clipped_grad(ratio, a, cfg.clip_eps) / n;
        let (d_mean, d_log_std) = log_prob_grads(&mu, &ac.log_std, &r.action);
        let grad_out: Vec<f64> = d_mean.iter().map(|d| coeff * d).collect();
        ac.actor.backward_accumulate(&trace, &grad_out, &mut g.actor)?;
        for (gs, d) in g.log_std.iter_mut().zip(&d_log_std) {
            *gs += coeff * d;
        }

        let vtrace = ac.critic.forward_trace(&x)?;
        let v = vtrace.output()[0];
        let err = v - adv.returns[i];
        stats.loss_v += err * err / n;
        ac.critic
            .backward_accumulate(&vtrace, &[2.0 * cfg.value_coef * err / n], &mut g.critic)?;
    }
    let entropy = GaussianPolicyOutput::new(vec![0.0; ac.log_std.len()], &ac.log_std).entropy();
    stats.entropy = entropy;
    stats.loss_pi -= cfg.entropy_coef * entropy;
    if cfg.entropy_coef > 0.0 {
        for (gs, &s) in g.log_std.iter_mut().zip(&ac.log_std) {
            if s > crate::approx::policy::LOG_STD_MIN && s < crate::approx::policy::LOG_STD_MAX {
                *gs -= cfg.entropy_coef;
            }
        }
    }
    let total = stats.loss_pi + cfg.value_coef * stats.loss_v;
    if !total.is_finite() || g.all().any(|v| !v.is_finite()) {
        return Ok(None);
    }
    g.clip(cfg.max_grad_norm);
    ac.opt_actor.step(ac.actor.params_mut(), &g.actor)?;
    ac.opt_log_std.step(&mut ac.log_std, &g.log_std)?;
    ac.opt_critic.step(ac.critic.params_mut(), &g.critic)?;
    Ok(Some(stats))
}

/// Clipped-surrogate update. Records are routed to their stage's
/// actor-critic; every epoch visits each stage's records once in shuffled
/// minibatches. Returns losses averaged over the applied minibatches.
pub fn ppo_update<R: Rng + ?Sized>(
    policies: &mut StagePolicies,
    batch: &RolloutBatch,
    adv: &Advantages,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<LossStats> {
    let mut by_stage: Vec<(StageId, Vec<usize>)> = [StageId::Approach, StageId::Grasp]
        .into_iter()
        .map(|s| (s, batch.records.iter().enumerate().filter(|(_, r)| r.stage == s).map(|(i, _)| i).collect()))
        .collect();
    let mut sum = LossStats::default();
    for _ in 0..cfg.epochs_per_batch {
        for (stage, idx) in &mut by_stage {
            idx.shuffle(rng);
            let ac = policies.get_mut(*stage)?;
            for mb in idx.chunks(cfg.batch_size) {
                match minibatch_step(ac, &batch.records, mb, adv, cfg)? {
                    Some(s) => {
                        sum.loss_pi += s.loss_pi;
                        sum.loss_v += s.loss_v;
                        sum.entropy += s.entropy;
                        sum.approx_kl += s.approx_kl;
                        sum.clip_fraction += s.clip_fraction;
                        sum.minibatches += 1;
                    }
                    None => {
                        warn!("{} minibatch skipped: non-finite loss", stage.name());
                        sum.skipped += 1;
                    }
                }
            }
        }
    }
    let k = sum.minibatches.max(1) as f64;
    Ok(LossStats {
        loss_pi: sum.loss_pi / k,
        loss_v: sum.loss_v / k,
        entropy: sum.entropy / k,
        approx_kl: sum.approx_kl / k,
        clip_fraction: sum.clip_fraction / k,
        ..sum
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_ratio_gives_advantage() {
        for a in [-2.0, 0.0, 3.5] {
            assert_eq!(clipped_objective(1.0, a, 0.2), a);
        }
    }

    #[test]
    fn clip_arithmetic() {
        assert_eq!(clipped_objective(2.0, 1.0, 0.2), 1.2);
        assert_eq!(clipped_objective(0.5, -1.0, 0.2), -0.8);
        assert_eq!(clipped_objective(0.5, 1.0, 0.2), 0.5);
    }

    #[test]
    fn clipped_grad_matches_finite_difference() {
        let eps = 0.2;
        for &(lr, a) in &[(0.1, 1.0), (0.3, 1.0), (-0.3, -1.0), (-0.1, 2.0), (0.25, -0.5)] {
            let h = 1e-7;
            let f = |x: f64| clipped_objective(f64::exp(x), a, eps);
            let fd = (f(lr + h) - f(lr - h)) / (2.0 * h);
            assert!((fd - clipped_grad(f64::exp(lr), a, eps)).abs() < 1e-5, "{lr} {a}");
        }
    }
}
