use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    collect_rollout, compute_advantages, early_stop_with, lr_schedule, ppo_update, EnvPool, EpisodeSummary, StagePolicies,
    TrainConfig,
};
use crate::crm::RewardMachine;
use crate::error::Result;

/// Window of the rolling metrics written to the learning curves.
pub const CURVE_WINDOW: usize = 100;

/// One learning-curve row, written when an episode finishes.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub episode: u64,
    pub timestep: u64,
    pub success_100: f64,
    pub ep_len_100: f64,
    pub lr: f64,
    pub loss_pi: f64,
    pub loss_v: f64,
    /// Cumulative entries into each stage, indexed by `StageId::index`.
    pub stage_entry_counts: [u64; 6],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EarlyStop,
    EpisodeBudget,
    TimestepBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub episodes: u64,
    pub timesteps: u64,
    pub updates: u64,
    pub stop: StopReason,
    pub success_100: f64,
    pub ep_len_100: f64,
}

/// Everything needed to continue a run from an update boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerState {
    pub policies: StagePolicies,
    pub rng: ChaCha8Rng,
    pub timesteps: u64,
    pub updates: u64,
    pub successes: Vec<bool>,
    pub lengths: Vec<u32>,
    pub stage_totals: [u64; 6],
    pub loss_pi: f64,
    pub loss_v: f64,
}

impl TrainerState {
    pub fn episodes(&self) -> u64 {
        self.successes.len() as u64
    }

    /// Success rate and mean length over the latest `CURVE_WINDOW` episodes.
    pub fn rolling(&self) -> (f64, f64) {
        let n = self.successes.len().min(CURVE_WINDOW);
        if n == 0 {
            return (0.0, 0.0);
        }
        let s = self.successes[self.successes.len() - n..].iter().filter(|&&b| b).count();
        let l: u64 = self.lengths[self.lengths.len() - n..].iter().map(|&l| l as u64).sum();
        (s as f64 / n as f64, l as f64 / n as f64)
    }
}

pub struct Trainer {
    cfg: TrainConfig,
    machine: RewardMachine,
    pool: EnvPool,
    state: TrainerState,
}

impl Trainer {
    pub fn new(cfg: TrainConfig, machine: RewardMachine, pool: EnvPool) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let policies = StagePolicies::new(&machine, &cfg, &mut rng)?;
        let state = TrainerState {
            policies,
            rng,
            timesteps: 0,
            updates: 0,
            successes: Vec::new(),
            lengths: Vec::new(),
            stage_totals: [0; 6],
            loss_pi: 0.0,
            loss_v: 0.0,
        };
        Ok(Self { cfg, machine, pool, state })
    }

    /// Continues from saved state; episodes in flight when it was saved
    /// start over.
    pub fn resume(cfg: TrainConfig, machine: RewardMachine, mut pool: EnvPool, state: TrainerState) -> Result<Self> {
        cfg.validate()?;
        pool.steps = state.timesteps;
        pool.restart();
        Ok(Self { cfg, machine, pool, state })
    }

    pub fn state(&self) -> &TrainerState {
        &self.state
    }

    pub fn policies(&self) -> &StagePolicies {
        &self.state.policies
    }

    pub fn machine(&self) -> &RewardMachine {
        &self.machine
    }

    fn progress(&self) -> f64 {
        self.state.timesteps as f64 / self.cfg.total_timesteps.max(1) as f64
    }

    fn budget_reached(&self) -> Option<StopReason> {
        if self.cfg.max_episodes > 0 && self.state.episodes() >= self.cfg.max_episodes {
            Some(StopReason::EpisodeBudget)
        } else if self.state.timesteps >= self.cfg.total_timesteps {
            Some(StopReason::TimestepBudget)
        } else if early_stop_with(&self.state.successes, self.cfg.early_stop_window, self.cfg.early_stop_threshold) {
            Some(StopReason::EarlyStop)
        } else {
            None
        }
    }

    /// Trains until a budget is exhausted or early stopping fires.
    /// `on_row` sees every finished episode; `on_update` sees the state
    /// after every parameter update.
    pub fn run(
        &mut self,
        mut on_row: impl FnMut(&CurveRow) -> Result<()>,
        mut on_update: impl FnMut(&TrainerState) -> Result<()>,
    ) -> Result<TrainSummary> {
        let stop = loop {
            if let Some(reason) = self.budget_reached() {
                break reason;
            }
            let lr = lr_schedule(self.progress(), self.cfg.base_lr);
            self.state.policies.set_lr(lr);

            let cfg = &self.cfg;
            let st = &mut self.state;
            let mut rows = Vec::new();
            let batch = collect_rollout(&st.policies, &mut self.pool, &self.machine, cfg.horizon, &mut st.rng, |ep: &EpisodeSummary| {
                st.successes.push(ep.success);
                st.lengths.push(ep.length);
                for (t, e) in st.stage_totals.iter_mut().zip(ep.stage_entries) {
                    *t += e as u64;
                }
                let n = st.successes.len();
                let w = n.min(CURVE_WINDOW);
                let succ = st.successes[n - w..].iter().filter(|&&b| b).count() as f64 / w as f64;
                let len = st.lengths[n - w..].iter().map(|&l| l as f64).sum::<f64>() / w as f64;
                rows.push(CurveRow {
                    episode: n as u64,
                    timestep: ep.end_timestep,
                    success_100: succ,
                    ep_len_100: len,
                    lr,
                    loss_pi: st.loss_pi,
                    loss_v: st.loss_v,
                    stage_entry_counts: st.stage_totals,
                });
                (cfg.max_episodes > 0 && n as u64 >= cfg.max_episodes)
                    || early_stop_with(&st.successes, cfg.early_stop_window, cfg.early_stop_threshold)
            })?;
            self.state.timesteps = self.pool.steps;
            for row in &rows {
                on_row(row)?;
            }
            if batch.stopped {
                continue;
            }
            let adv = compute_advantages(&batch, &self.cfg);
            let st = &mut self.state;
            let stats = ppo_update(&mut st.policies, &batch, &adv, &self.cfg, &mut st.rng)?;
            if stats.minibatches > 0 {
                st.loss_pi = stats.loss_pi;
                st.loss_v = stats.loss_v;
            }
            st.updates += 1;
            on_update(&self.state)?;
        };
        let (success_100, ep_len_100) = self.state.rolling();
        Ok(TrainSummary {
            episodes: self.state.episodes(),
            timesteps: self.state.timesteps,
            updates: self.state.updates,
            stop,
            success_100,
            ep_len_100,
        })
    }
}
