//! Stage reward functions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::observation::GlobalObservation;
use crate::crm::{Event, TransitionTable};
use crate::error::{Error, Result};

/// Which reward components reach the learner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    #[default]
    Full,
    /// Stage rewards zeroed; only transition rewards remain.
    TransitionOnly,
    /// Transition rewards zeroed; only stage rewards remain.
    IntraOnly,
}

impl RewardMode {
    pub const ALL: [RewardMode; 3] = [RewardMode::Full, RewardMode::TransitionOnly, RewardMode::IntraOnly];

    pub fn as_str(self) -> &'static str {
        match self {
            RewardMode::Full => "full",
            RewardMode::TransitionOnly => "transition_only",
            RewardMode::IntraOnly => "intra_only",
        }
    }

    pub fn uses_intra(self) -> bool {
        self != RewardMode::TransitionOnly
    }

    pub fn uses_transition(self) -> bool {
        self != RewardMode::IntraOnly
    }
}

impl fmt::Display for RewardMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RewardMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::config("mode", format!("unknown mode `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilNorm {
    #[default]
    L1,
    L2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub rho_appr: f64,
    pub rho_grasp: f64,
    pub mode: RewardMode,
    pub equil_norm: EquilNorm,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            rho_appr: 0.1,
            rho_grasp: 0.5,
            mode: RewardMode::Full,
            equil_norm: EquilNorm::L1,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho_appr > 0.0) {
            return Err(Error::config("env.reward.rho_appr", "must be positive"));
        }
        if !(self.rho_grasp > 0.0) {
            return Err(Error::config("env.reward.rho_grasp", "must be positive"));
        }
        Ok(())
    }

    fn norm(&self, v: &nalgebra::Vector3<f64>) -> f64 {
        match self.equil_norm {
            EquilNorm::L1 => v.lp_norm(1),
            EquilNorm::L2 => v.norm(),
        }
    }
}

/// Distance term plus a penalty per contact made while approaching.
pub fn reward_approach(obs: &GlobalObservation, cfg: &RewardConfig) -> f64 {
    if !cfg.mode.uses_intra() {
        return 0.0;
    }
    -obs.o_dist.exp() - cfg.rho_appr * obs.n_c as f64
}

/// Equilibrium term plus a bonus per contact.
pub fn reward_grasp(obs: &GlobalObservation, cfg: &RewardConfig) -> f64 {
    if !cfg.mode.uses_intra() {
        return 0.0;
    }
    let equil = -cfg.norm(&obs.o_force).exp() - cfg.norm(&obs.o_torque).exp();
    equil + cfg.rho_grasp * obs.n_c as f64
}

/// Reward for entering a terminal stage, as the transition layer emits it.
pub fn terminal_reward(event: Event, obs: &GlobalObservation, table: &TransitionTable) -> Result<f64> {
    let (from, extra) = match event {
        Event::ApproachOutOfReach => (crate::crm::StageId::Approach, 0.0),
        Event::GraspOutOfReach | Event::Fail => (crate::crm::StageId::Grasp, 0.0),
        Event::Succ => (
            crate::crm::StageId::Grasp,
            if obs.o_cone { table.r_cone } else { 0.0 },
        ),
        Event::Arrive => {
            return Err(Error::InvalidEvent {
                stage: crate::crm::StageId::Approach,
                event: "e_arrive is not terminal",
            })
        }
    };
    let entry = table.lookup(from, event).ok_or(Error::InvalidEvent {
        stage: from,
        event: event.name(),
    })?;
    Ok(entry.reward + extra)
}
