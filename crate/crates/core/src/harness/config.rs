use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::TrainConfig;
use crate::crm::{RewardMachine, TransitionRewards, TransitionTable};
use crate::env::{Affordance, EnvConfig, RewardMode};
use crate::error::{Error, Result};
use crate::taxonomy::TaxonomyConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrmConfig {
    pub transition_rewards: TransitionRewards,
}

/// Run orchestration: which seeds and tasks, and where artifacts go.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    pub seeds: Vec<u64>,
    pub mode: RewardMode,
    /// Task suite on disk; when absent the suite is generated.
    pub task_file: Option<PathBuf>,
    /// Affordances of the generated suite, one task each.
    pub suite: Vec<Affordance>,
    pub suite_seed: u64,
    pub out: PathBuf,
    /// Success levels whose first crossing is recorded in run summaries.
    pub thresholds: Vec<f64>,
    /// Updates between saved trainer states.
    pub save_every: u64,
    pub eval_trials: usize,
    pub eval_seed: u64,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            seeds: vec![0],
            mode: RewardMode::Full,
            task_file: None,
            suite: vec![Affordance::Lift, Affordance::Pull, Affordance::Lift],
            suite_seed: 2024,
            out: PathBuf::from("runs"),
            thresholds: vec![0.8, 0.9],
            save_every: 10,
            eval_trials: 1000,
            eval_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub crm: CrmConfig,
    pub env: EnvConfig,
    pub train: TrainConfig,
    pub taxonomy: TaxonomyConfig,
    pub harness: HarnessConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(json_key(&e), e.to_string()))
    }

    /// Reads and validates a config file. Relative task paths resolve
    /// against the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(tf) = &cfg.harness.task_file {
            if tf.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.harness.task_file = Some(base.join(tf));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.table().validate()?;
        self.env.validate()?;
        self.train.validate()?;
        self.taxonomy.validate()?;
        let h = &self.harness;
        if h.seeds.is_empty() {
            return Err(Error::config("harness.seeds", "need at least one seed"));
        }
        if h.seeds.iter().collect::<HashSet<_>>().len() != h.seeds.len() {
            return Err(Error::config("harness.seeds", "seeds must be distinct"));
        }
        match &h.task_file {
            Some(p) if !p.is_file() => {
                return Err(Error::config("harness.task_file", format!("{} does not exist", p.display())));
            }
            None if h.suite.is_empty() => {
                return Err(Error::config("harness.suite", "need a task file or at least one affordance"));
            }
            _ => {}
        }
        if h.thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::config("harness.thresholds", "must lie in [0, 1]"));
        }
        if h.save_every == 0 {
            return Err(Error::config("harness.save_every", "must be at least 1"));
        }
        Ok(())
    }

    pub fn table(&self) -> TransitionTable {
        TransitionTable::from_rewards(&self.crm.transition_rewards)
    }

    pub fn machine(&self) -> Result<RewardMachine> {
        RewardMachine::with_defaults(self.table())
    }

    /// Environment config with the reward mode of `mode` applied.
    pub fn env_for(&self, mode: RewardMode) -> EnvConfig {
        let mut env = self.env.clone();
        env.reward.mode = mode;
        env
    }
}

/// Best-effort dotted key for a serde error, e.g. `train.gamma`.
fn json_key(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    if let Some(rest) = msg.split("unknown field `").nth(1) {
        return rest.split('`').next().unwrap_or("config").to_string();
    }
    if let Some(rest) = msg.split("missing field `").nth(1) {
        return rest.split('`').next().unwrap_or("config").to_string();
    }
    format!("config (line {}, column {})", e.line(), e.column())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        let cfg = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfig::from_json(r#"{"train": {"gama": 0.9}}"#).unwrap_err().to_string();
        assert!(err.contains("gama"), "{err}");
    }

    #[test]
    fn duplicate_seeds_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.harness.seeds = vec![1, 2, 1];
        assert!(cfg.validate().unwrap_err().to_string().contains("harness.seeds"));
    }

    #[test]
    fn reward_ordering_checked() {
        let cfg = ExperimentConfig::from_json(r#"{"crm": {"transition_rewards": {"aor": -5.0}}}"#).unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("R_aor < R_gor"));
    }
}
