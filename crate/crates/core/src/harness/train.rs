use std::cell::RefCell;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};

use super::{build_suite, ExperimentConfig};
use crate::agent::{make_baseline, CurveRow, EnvPool, Environment, StopReason, Trainer, TrainerState, CURVE_WINDOW};
use crate::crm::RewardMachine;
use crate::env::{GraspEnv, RewardMode, TaskSpec};
use crate::error::{Error, Result};

pub const CURVE_HEADER: &str = "episode,timestep,success_100,ep_len_100,lr,loss_pi,loss_v,stage_entry_counts";

/// Artifact locations for one (mode, seed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPaths {
    pub dir: PathBuf,
}

impl RunPaths {
    pub fn new(out: &Path, mode: RewardMode, seed: u64) -> Self {
        Self {
            dir: out.join(mode.as_str()).join(format!("seed_{seed}")),
        }
    }

    pub fn curves(&self) -> PathBuf {
        self.dir.join("curves.csv")
    }

    pub fn final_checkpoint(&self) -> PathBuf {
        self.dir.join("final.ckpt")
    }

    pub fn best_checkpoint(&self) -> PathBuf {
        self.dir.join("best.ckpt")
    }

    pub fn state(&self) -> PathBuf {
        self.dir.join("state.json")
    }

    pub fn summary(&self) -> PathBuf {
        self.dir.join("summary.json")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub threshold: f64,
    /// First episode whose full rolling window reached the threshold.
    pub episode: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub mode: RewardMode,
    pub seed: u64,
    pub episodes: u64,
    pub timesteps: u64,
    pub updates: u64,
    pub stop: StopReason,
    pub success_100: f64,
    pub ep_len_100: f64,
    pub best_success_100: f64,
    pub episodes_to: Vec<Crossing>,
    pub wall_seconds: f64,
}

impl RunSummary {
    pub fn episodes_to(&self, threshold: f64) -> Option<u64> {
        self.episodes_to.iter().find(|c| c.threshold == threshold).and_then(|c| c.episode)
    }
}

/// What is saved between updates so an interrupted run can continue.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SavedRun {
    trainer: TrainerState,
    best_success: Option<f64>,
    crossings: Vec<Crossing>,
}

pub fn format_row(r: &CurveRow) -> String {
    let stages: Vec<String> = r.stage_entry_counts.iter().map(|c| c.to_string()).collect();
    format!(
        "{},{},{},{},{},{},{},{}",
        r.episode,
        r.timestep,
        r.success_100,
        r.ep_len_100,
        r.lr,
        r.loss_pi,
        r.loss_v,
        stages.join(";")
    )
}

/// Keeps the header and rows up to `episodes`, dropping any written after
/// the last saved state.
fn truncate_curves(path: &Path, episodes: u64) -> Result<()> {
    let reader = BufReader::new(File::open(path)?);
    let mut kept = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 {
            kept.push(line);
            continue;
        }
        let ep: u64 = line
            .split(',')
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Task(format!("malformed curve row in {}", path.display())))?;
        if ep <= episodes {
            kept.push(line);
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    for line in kept {
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, serde_json::to_string(value)?)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn task_pool(tasks: &[TaskSpec], cfg: &ExperimentConfig, mode: RewardMode) -> Result<EnvPool> {
    let env_cfg = cfg.env_for(mode);
    EnvPool::new(cfg.train.n_envs, mode, cfg.train.randomize, || {
        tasks
            .iter()
            .map(|t| Ok(Box::new(GraspEnv::new(t.clone(), env_cfg.clone())?) as Box<dyn Environment>))
            .collect()
    })
}

/// Trains one seed on a prepared pool and writes its artifacts. With
/// `resume`, continues from the saved state when one exists.
pub fn train_seed(
    cfg: &ExperimentConfig,
    machine: RewardMachine,
    pool: EnvPool,
    seed: u64,
    paths: &RunPaths,
    resume: bool,
) -> Result<RunSummary> {
    let mode = pool.mode;
    let train_cfg = crate::agent::TrainConfig {
        seed,
        ..cfg.train.clone()
    };
    fs::create_dir_all(&paths.dir)?;
    let saved: Option<SavedRun> = if resume && paths.state().is_file() && paths.curves().is_file() {
        Some(serde_json::from_str(&fs::read_to_string(paths.state())?)?)
    } else {
        None
    };
    let (mut trainer, mut best, crossings, curves) = match saved {
        Some(s) => {
            info!("resuming {mode} seed {seed} at episode {}", s.trainer.episodes());
            truncate_curves(&paths.curves(), s.trainer.episodes())?;
            let file = OpenOptions::new().append(true).open(paths.curves())?;
            let t = Trainer::resume(train_cfg, machine, pool, s.trainer)?;
            (t, s.best_success, s.crossings, file)
        }
        None => {
            let mut file = File::create(paths.curves())?;
            writeln!(file, "{CURVE_HEADER}")?;
            let crossings = cfg
                .harness
                .thresholds
                .iter()
                .map(|&threshold| Crossing { threshold, episode: None })
                .collect();
            (Trainer::new(train_cfg, machine, pool)?, None, crossings, file)
        }
    };
    // both callbacks write to these
    let curves = RefCell::new(BufWriter::new(curves));
    let shared = RefCell::new(crossings);
    let started = Instant::now();
    let save_every = cfg.harness.save_every;
    let summary = trainer.run(
        |row| {
            writeln!(curves.borrow_mut(), "{}", format_row(row))?;
            if row.episode >= CURVE_WINDOW as u64 {
                for c in shared.borrow_mut().iter_mut().filter(|c| c.episode.is_none()) {
                    if row.success_100 >= c.threshold {
                        c.episode = Some(row.episode);
                    }
                }
            }
            Ok(())
        },
        |state| {
            if state.episodes() >= CURVE_WINDOW as u64 {
                let (succ, _) = state.rolling();
                if best.is_none_or(|b| succ > b) {
                    best = Some(succ);
                    state.policies.to_checkpoint().save(&paths.best_checkpoint())?;
                }
            }
            if state.updates % save_every == 0 {
                curves.borrow_mut().flush()?;
                let saved = SavedRun {
                    trainer: state.clone(),
                    best_success: best,
                    crossings: shared.borrow().clone(),
                };
                write_json(&paths.state(), &saved)?;
            }
            Ok(())
        },
    )?;
    curves.borrow_mut().flush()?;
    let crossings = shared.into_inner();
    let state = trainer.state();
    state.policies.to_checkpoint().save(&paths.final_checkpoint())?;
    if !paths.best_checkpoint().is_file() {
        state.policies.to_checkpoint().save(&paths.best_checkpoint())?;
    }
    write_json(
        &paths.state(),
        &SavedRun {
            trainer: state.clone(),
            best_success: best,
            crossings: crossings.clone(),
        },
    )?;
    let out = RunSummary {
        label: make_baseline(mode).1.to_string(),
        mode,
        seed,
        episodes: summary.episodes,
        timesteps: summary.timesteps,
        updates: summary.updates,
        stop: summary.stop,
        success_100: summary.success_100,
        ep_len_100: summary.ep_len_100,
        best_success_100: best.unwrap_or(0.0),
        episodes_to: crossings,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    fs::write(paths.summary(), serde_json::to_string_pretty(&out)?)?;
    info!(
        "{mode} seed {seed}: {} episodes, success_100 {:.3}, stop {:?}",
        out.episodes, out.success_100, out.stop
    );
    Ok(out)
}

/// Trains every configured seed in the configured mode.
pub fn run_train(cfg: &ExperimentConfig, resume: bool) -> Result<Vec<RunSummary>> {
    cfg.validate()?;
    let tasks = build_suite(cfg)?;
    let mode = cfg.harness.mode;
    cfg.harness
        .seeds
        .iter()
        .map(|&seed| {
            let pool = task_pool(&tasks, cfg, mode)?;
            let paths = RunPaths::new(&cfg.harness.out, mode, seed);
            train_seed(cfg, cfg.machine()?, pool, seed, &paths, resume)
        })
        .collect()
}
