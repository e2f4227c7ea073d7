use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{Environment, StagePolicies};
use crate::approx::Checkpoint;
use crate::crm::{abstract_state, RewardMachine, StageId};
use crate::env::{Affordance, EnvConfig, GraspEnv, TaskSpec};
use crate::error::{Error, Result};

pub const EVAL_HEADER: &str = "affordance,success_rate,mean_episode_length,n_trials";

/// Anything that maps a stage and its abstract state to an action.
pub trait Controller {
    fn act(&self, stage: StageId, obs: &[f64]) -> Result<Vec<f64>>;
}

/// Deterministic evaluation: the mean of each stage's policy.
impl Controller for StagePolicies {
    fn act(&self, stage: StageId, obs: &[f64]) -> Result<Vec<f64>> {
        self.get(stage)?.mean_action(obs)
    }
}

/// Never moves the palm or fingers.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdleController;

impl Controller for IdleController {
    fn act(&self, stage: StageId, _obs: &[f64]) -> Result<Vec<f64>> {
        match stage {
            StageId::Approach => Ok(vec![0.0; 3]),
            StageId::Grasp => Ok(vec![0.0; 8]),
            other => Err(Error::TerminalStage(other)),
        }
    }
}

/// One table row. Counts are kept as integers so the overall row is an
/// exact aggregate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRow {
    pub label: String,
    pub n_trials: u64,
    pub successes: u64,
    pub total_length: u64,
}

impl EvalRow {
    fn empty(label: &str) -> Self {
        Self {
            label: label.to_string(),
            n_trials: 0,
            successes: 0,
            total_length: 0,
        }
    }

    pub fn success_rate(&self) -> f64 {
        if self.n_trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.n_trials as f64
        }
    }

    pub fn mean_episode_length(&self) -> f64 {
        if self.n_trials == 0 {
            0.0
        } else {
            self.total_length as f64 / self.n_trials as f64
        }
    }
}

/// Per-affordance rows in table order, then `Overall`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    pub fn overall(&self) -> &EvalRow {
        self.rows.last().expect("report always has an overall row")
    }

    pub fn row(&self, label: &str) -> Option<&EvalRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn labels(&self) -> Vec<&str> {
        self.rows.iter().map(|r| r.label.as_str()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{EVAL_HEADER}\n");
        for r in &self.rows {
            out += &format!("{},{},{},{}\n", r.label, r.success_rate(), r.mean_episode_length(), r.n_trials);
        }
        out
    }
}

pub struct TrialOutcome {
    pub success: bool,
    pub length: u32,
}

/// Runs one episode with `ctl` until a terminal stage, the approach budget
/// or the episode cap.
pub fn run_episode(
    env: &mut dyn Environment,
    ctl: &dyn Controller,
    machine: &RewardMachine,
    rng: &mut ChaCha8Rng,
    randomize: bool,
) -> Result<TrialOutcome> {
    let obs = env.reset(rng, randomize);
    let mut state = machine.start();
    let mut abs = abstract_state(machine.context(StageId::Approach), &obs);
    loop {
        let stage = state.current;
        let action = ctl.act(stage, &abs)?;
        let out = match env.step(&action, stage) {
            Ok(out) => out,
            Err(Error::NonFinite(_)) => {
                return Ok(TrialOutcome {
                    success: false,
                    length: state.episode_step,
                })
            }
            Err(e) => return Err(e),
        };
        let step = machine.step(&mut state, out.flags, out.obs.o_cone)?;
        let next = step.next;
        let cut = (next == StageId::Approach && state.steps_in_stage >= env.approach_budget())
            || state.episode_step >= env.episode_cap();
        if next.is_terminal() || cut {
            return Ok(TrialOutcome {
                success: next == StageId::GraspSuccess,
                length: state.episode_step,
            });
        }
        abs = abstract_state(machine.context(next), &out.obs);
    }
}

/// Evaluates `ctl` on `n_trials` tasks drawn uniformly from `tasks`, with
/// reset noise.
pub fn run_eval(
    ctl: &dyn Controller,
    tasks: &[TaskSpec],
    env_cfg: &EnvConfig,
    machine: &RewardMachine,
    n_trials: usize,
    seed: u64,
) -> Result<EvalReport> {
    if n_trials == 0 {
        return Err(Error::config("n_trials", "evaluation needs at least one trial"));
    }
    if tasks.is_empty() {
        return Err(Error::Task("no tasks to evaluate on".into()));
    }
    let mut envs = tasks
        .iter()
        .map(|t| GraspEnv::new(t.clone(), env_cfg.clone()))
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<EvalRow> = Affordance::ALL
        .iter()
        .filter(|a| tasks.iter().any(|t| t.affordance == **a))
        .map(|a| EvalRow::empty(a.title()))
        .collect();
    let mut overall = EvalRow::empty("Overall");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_trials {
        let k = rng.random_range(0..envs.len());
        let aff = tasks[k].affordance;
        let t = run_episode(&mut envs[k], ctl, machine, &mut rng, true)?;
        let row = rows.iter_mut().find(|r| r.label == aff.title()).expect("row per suite affordance");
        for r in [row, &mut overall] {
            r.n_trials += 1;
            r.successes += t.success as u64;
            r.total_length += t.length as u64;
        }
    }
    rows.push(overall);
    Ok(EvalReport { rows })
}

/// Loads a checkpoint, checks it against the machine's stage shapes and
/// evaluates its mean policy.
pub fn eval_checkpoint(
    path: &Path,
    tasks: &[TaskSpec],
    env_cfg: &EnvConfig,
    machine: &RewardMachine,
    n_trials: usize,
    seed: u64,
) -> Result<EvalReport> {
    let ckpt = Checkpoint::load(path)?;
    let policies = StagePolicies::from_checkpoint(&ckpt, machine)?;
    run_eval(&policies, tasks, env_cfg, machine, n_trials, seed)
}
