use log::warn;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::StagePolicies;
use crate::crm::{abstract_state, MachineState, RewardMachine, StageId};
use crate::env::{Affordance, GlobalObservation, GraspEnv, RewardMode, StepOutcome};
use crate::error::{Error, Result};

/// What the learner needs from an environment.
pub trait Environment {
    fn reset(&mut self, rng: &mut ChaCha8Rng, randomize: bool) -> GlobalObservation;
    fn step(&mut self, action: &[f64], stage: StageId) -> Result<StepOutcome>;
    fn affordance(&self) -> Affordance;
    /// Steps allowed in the approach stage before the episode is cut.
    fn approach_budget(&self) -> u32;
    fn episode_cap(&self) -> u32;
}

impl Environment for GraspEnv {
    fn reset(&mut self, rng: &mut ChaCha8Rng, randomize: bool) -> GlobalObservation {
        GraspEnv::reset(self, rng, randomize)
    }

    fn step(&mut self, action: &[f64], stage: StageId) -> Result<StepOutcome> {
        GraspEnv::step(self, action, stage)
    }

    fn affordance(&self) -> Affordance {
        self.task().affordance
    }

    fn approach_budget(&self) -> u32 {
        self.config().approach_budget
    }

    fn episode_cap(&self) -> u32 {
        self.config().episode_cap
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub env: usize,
    pub stage: StageId,
    pub abstract_obs: Vec<f64>,
    pub action: Vec<f64>,
    pub log_prob_old: f64,
    pub intra_reward: f64,
    pub transition_reward: f64,
    pub value_estimate: f64,
    /// Value of the following state under its own stage's critic; zero
    /// when the episode terminated.
    pub next_value: f64,
    /// The episode ended here, by termination or truncation.
    pub done: bool,
    /// The episode reached a terminal stage here.
    pub terminal: bool,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSummary {
    pub env: usize,
    pub task: usize,
    pub affordance: Affordance,
    pub length: u32,
    pub success: bool,
    pub final_stage: StageId,
    pub return_total: f64,
    pub transition_total: f64,
    /// Entries into each stage, indexed by `StageId::index`.
    pub stage_entries: [u32; 6],
    /// Pool step count when the episode ended.
    pub end_timestep: u64,
    pub aborted: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutBatch {
    pub records: Vec<StepRecord>,
    pub episodes: Vec<EpisodeSummary>,
    /// Collection ended early at the caller's request.
    pub stopped: bool,
}

struct Slot {
    envs: Vec<Box<dyn Environment>>,
    active: usize,
    machine: MachineState,
    obs: Vec<f64>,
    value: f64,
    ep_return: f64,
    started: bool,
}

/// Parallel episode slots, each cycling through the task suite.
pub struct EnvPool {
    slots: Vec<Slot>,
    pub mode: RewardMode,
    pub randomize: bool,
    /// Environment steps taken so far.
    pub steps: u64,
}

impl EnvPool {
    /// `make` builds one environment per task for each slot.
    pub fn new(n: usize, mode: RewardMode, randomize: bool, mut make: impl FnMut() -> Result<Vec<Box<dyn Environment>>>) -> Result<Self> {
        let mut slots = Vec::with_capacity(n);
        for _ in 0..n {
            let envs = make()?;
            if envs.is_empty() {
                return Err(Error::Task("environment pool needs at least one task".into()));
            }
            slots.push(Slot {
                envs,
                active: 0,
                machine: MachineState::default(),
                obs: Vec::new(),
                value: 0.0,
                ep_return: 0.0,
                started: false,
            });
        }
        Ok(Self {
            slots,
            mode,
            randomize,
            steps: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Forces every slot to start a fresh episode on its next step.
    pub fn restart(&mut self) {
        for s in &mut self.slots {
            s.started = false;
        }
    }

    fn begin(&mut self, i: usize, policies: &StagePolicies, machine: &RewardMachine, rng: &mut ChaCha8Rng) -> Result<()> {
        let randomize = self.randomize;
        let slot = &mut self.slots[i];
        slot.active = rng.random_range(0..slot.envs.len());
        let obs = slot.envs[slot.active].reset(rng, randomize);
        slot.machine = machine.start();
        slot.obs = abstract_state(machine.context(StageId::Approach), &obs);
        slot.value = policies.value(StageId::Approach, &slot.obs)?;
        slot.ep_return = 0.0;
        slot.started = true;
        Ok(())
    }
}

fn entries(state: &MachineState) -> [u32; 6] {
    let mut out = [0; 6];
    for t in &state.history {
        out[t.to.index()] += 1;
    }
    out
}

/// Collects `horizon` steps round-robin over the pool. `on_episode` sees
/// each finished episode in order and may return `true` to stop collection
/// immediately.
pub fn collect_rollout(
    policies: &StagePolicies,
    pool: &mut EnvPool,
    machine: &RewardMachine,
    horizon: usize,
    rng: &mut ChaCha8Rng,
    mut on_episode: impl FnMut(&EpisodeSummary) -> bool,
) -> Result<RolloutBatch> {
    if horizon == 0 {
        return Err(Error::config("train.horizon", "must be at least 1"));
    }
    let mut batch = RolloutBatch {
        records: Vec::with_capacity(horizon),
        ..RolloutBatch::default()
    };
    let n = pool.len();
    let use_transition = pool.mode.uses_transition();
    for i in 0..horizon {
        let k = i % n;
        if !pool.slots[k].started {
            pool.begin(k, policies, machine, rng)?;
        }
        let slot = &mut pool.slots[k];
        let stage = slot.machine.current;
        let ac = policies.get(stage)?;
        let dist = ac.distribution(&slot.obs)?;
        let (action, log_prob) = dist.sample(rng);
        let env = &mut slot.envs[slot.active];
        let out = match env.step(&action, stage) {
            Ok(out) => out,
            Err(Error::NonFinite(what)) => {
                warn!("episode aborted in env {k}: non-finite {what}");
                if let Some(prev) = batch.records.iter_mut().rev().find(|r| r.env == k) {
                    if !prev.done {
                        prev.done = true;
                    }
                }
                let summary = EpisodeSummary {
                    env: k,
                    task: slot.active,
                    affordance: env.affordance(),
                    length: slot.machine.episode_step,
                    success: false,
                    final_stage: stage,
                    return_total: slot.ep_return,
                    transition_total: slot.machine.transition_total(),
                    stage_entries: entries(&slot.machine),
                    end_timestep: pool.steps,
                    aborted: true,
                };
                slot.started = false;
                batch.episodes.push(summary);
                if on_episode(batch.episodes.last().expect("just pushed")) {
                    batch.stopped = true;
                    break;
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        pool.steps += 1;
        let crm = machine.step(&mut slot.machine, out.flags, out.obs.o_cone)?;
        let transition_reward = if use_transition { crm.reward } else { 0.0 };
        let next = crm.next;
        let terminal = next.is_terminal();
        let truncated = !terminal
            && ((next == StageId::Approach && slot.machine.steps_in_stage >= env.approach_budget())
                || slot.machine.episode_step >= env.episode_cap());
        let (next_obs, next_value) = if terminal {
            (Vec::new(), 0.0)
        } else {
            let o = abstract_state(machine.context(next), &out.obs);
            let v = policies.value(next, &o)?;
            (o, v)
        };
        let success = next == StageId::GraspSuccess;
        batch.records.push(StepRecord {
            env: k,
            stage,
            abstract_obs: std::mem::replace(&mut slot.obs, next_obs),
            action,
            log_prob_old: log_prob,
            intra_reward: out.intra_reward,
            transition_reward,
            value_estimate: slot.value,
            next_value,
            done: terminal || truncated,
            terminal,
            success,
        });
        slot.value = next_value;
        slot.ep_return += out.intra_reward + transition_reward;
        if terminal || truncated {
            let summary = EpisodeSummary {
                env: k,
                task: slot.active,
                affordance: env.affordance(),
                length: slot.machine.episode_step,
                success,
                final_stage: next,
                return_total: slot.ep_return,
                transition_total: if use_transition { slot.machine.transition_total() } else { 0.0 },
                stage_entries: entries(&slot.machine),
                end_timestep: pool.steps,
                aborted: false,
            };
            slot.started = false;
            batch.episodes.push(summary);
            if on_episode(batch.episodes.last().expect("just pushed")) {
                batch.stopped = true;
                break;
            }
        }
    }
    Ok(batch)
}
