use serde::{Deserialize, Serialize};

use super::{Event, EventFlags, StageContext, StageId, TransitionTable};
use crate::error::{Error, Result};

/// One recorded stage change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub from: StageId,
    pub to: StageId,
    pub event: Option<Event>,
    /// Reward emitted for this transition (including any cone bonus).
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineState {
    pub current: StageId,
    pub history: Vec<Transition>,
    pub steps_in_stage: u32,
    pub episode_step: u32,
}

impl Default for MachineState {
    fn default() -> Self {
        Self {
            current: StageId::Initial,
            history: Vec::new(),
            steps_in_stage: 0,
            episode_step: 0,
        }
    }
}

impl MachineState {
    pub fn is_terminal(&self) -> bool {
        self.current.is_terminal()
    }

    /// Sum of all emitted transition rewards so far.
    pub fn transition_total(&self) -> f64 {
        self.history.iter().map(|t| t.reward).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrmStep {
    pub next: StageId,
    pub reward: f64,
    pub transitioned: bool,
    pub event: Option<Event>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardMachine {
    contexts: Vec<StageContext>,
    table: TransitionTable,
}

impl RewardMachine {
    /// Validates contexts (one per stage) and the table.
    pub fn new(contexts: Vec<StageContext>, table: TransitionTable) -> Result<Self> {
        let mut ordered = Vec::with_capacity(StageId::ALL.len());
        for stage in StageId::ALL {
            let found: Vec<_> = contexts.iter().filter(|c| c.stage == stage).collect();
            if found.len() != 1 {
                return Err(Error::config(
                    "crm.contexts",
                    format!("expected exactly one context for {stage:?}, found {}", found.len()),
                ));
            }
            let ctx = found[0].clone();
            let active = matches!(stage, StageId::Approach | StageId::Grasp);
            if !active && ctx.action_dim != 0 {
                return Err(Error::config(
                    "crm.contexts",
                    format!("{stage:?} must have action_dim 0"),
                ));
            }
            if active && (ctx.action_dim == 0 || ctx.abstraction_mask.is_empty()) {
                return Err(Error::config(
                    "crm.contexts",
                    format!("{stage:?} needs a non-empty mask and action set"),
                ));
            }
            ordered.push(ctx);
        }
        table.validate()?;
        Ok(Self {
            contexts: ordered,
            table,
        })
    }

    pub fn with_defaults(table: TransitionTable) -> Result<Self> {
        Self::new(StageContext::defaults(), table)
    }

    pub fn context(&self, stage: StageId) -> &StageContext {
        &self.contexts[stage.index()]
    }

    pub fn table(&self) -> &TransitionTable {
        &self.table
    }

    /// Fresh per-episode state, already moved from Initial to Approach with
    /// zero reward.
    pub fn start(&self) -> MachineState {
        let mut st = MachineState::default();
        st.history.push(Transition {
            from: StageId::Initial,
            to: StageId::Approach,
            event: None,
            reward: 0.0,
        });
        st.current = StageId::Approach;
        st
    }

    /// Advances the machine by one environment step.
    ///
    /// `cone` is the friction-cone flag of the resulting observation; it only
    /// matters on entry to GraspSuccess.
    pub fn step(&self, state: &mut MachineState, flags: EventFlags, cone: bool) -> Result<CrmStep> {
        let stage = state.current;
        if stage.is_terminal() {
            return Err(Error::TerminalStage(stage));
        }
        if stage == StageId::Initial {
            return Err(Error::Task("machine has not been started".into()));
        }
        for e in Event::ALL {
            if flags.get(e) && e.source_stage() != stage {
                return Err(Error::InvalidEvent {
                    stage,
                    event: e.name(),
                });
            }
        }
        let priority: &[Event] = match stage {
            StageId::Approach => &[Event::Arrive, Event::ApproachOutOfReach],
            _ => &[Event::Succ, Event::GraspOutOfReach, Event::Fail],
        };
        state.episode_step += 1;
        let Some(&event) = priority.iter().find(|&&e| flags.get(e)) else {
            state.steps_in_stage += 1;
            return Ok(CrmStep {
                next: stage,
                reward: 0.0,
                transitioned: false,
                event: None,
            });
        };
        let entry = self
            .table
            .lookup(stage, event)
            .ok_or(Error::InvalidEvent {
                stage,
                event: event.name(),
            })?;
        let mut reward = entry.reward;
        if entry.to == StageId::GraspSuccess && cone {
            reward += self.table.r_cone;
        }
        state.history.push(Transition {
            from: stage,
            to: entry.to,
            event: Some(event),
            reward,
        });
        state.current = entry.to;
        state.steps_in_stage = 0;
        Ok(CrmStep {
            next: entry.to,
            reward,
            transitioned: true,
            event: Some(event),
        })
    }
}

/// Episode return: per-step stage rewards plus transition rewards.
pub fn cumulative_reward(step_rewards: &[f64], transition_rewards: &[f64]) -> f64 {
    step_rewards.iter().sum::<f64>() + transition_rewards.iter().sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn machine() -> RewardMachine {
        RewardMachine::with_defaults(TransitionTable::default()).unwrap()
    }

    #[test]
    fn start_enters_approach_without_reward() {
        let st = machine().start();
        assert_eq!(st.current, StageId::Approach);
        assert_eq!(st.transition_total(), 0.0);
        assert_eq!(st.episode_step, 0);
    }

    #[test]
    fn no_event_keeps_stage() {
        let m = machine();
        let mut st = m.start();
        let out = m.step(&mut st, EventFlags::default(), false).unwrap();
        assert_eq!((out.next, out.reward, out.transitioned), (StageId::Approach, 0.0, false));
        assert_eq!(st.steps_in_stage, 1);
    }

    #[test]
    fn arrive_gives_table_reward() {
        let m = machine();
        let mut st = m.start();
        let out = m.step(&mut st, EventFlags::only(Event::Arrive), false).unwrap();
        assert_eq!((out.next, out.reward), (StageId::Grasp, 10.0));
        assert_eq!(st.steps_in_stage, 0);
        assert_eq!(st.history.len(), 2);
    }

    #[test]
    fn success_beats_out_of_reach() {
        let m = machine();
        let mut st = m.start();
        m.step(&mut st, EventFlags::only(Event::Arrive), false).unwrap();
        let flags = EventFlags {
            succ: true,
            gor: true,
            ..Default::default()
        };
        let out = m.step(&mut st, flags, false).unwrap();
        assert_eq!((out.next, out.reward), (StageId::GraspSuccess, 100.0));
        assert!(m.step(&mut st, EventFlags::default(), false).is_err());
    }

    #[test]
    fn cone_bonus_only_on_success() {
        let m = machine();
        let mut st = m.start();
        m.step(&mut st, EventFlags::only(Event::Arrive), true).unwrap();
        assert_eq!(st.transition_total(), 10.0);
        let out = m.step(&mut st, EventFlags::only(Event::Succ), true).unwrap();
        assert_eq!(out.reward, 120.0);
    }

    #[test]
    fn wrong_stage_flags_rejected() {
        let m = machine();
        let mut st = m.start();
        assert!(matches!(
            m.step(&mut st, EventFlags::only(Event::Succ), false),
            Err(Error::InvalidEvent { .. })
        ));
        m.step(&mut st, EventFlags::only(Event::Arrive), false).unwrap();
        assert!(m.step(&mut st, EventFlags::only(Event::Arrive), false).is_err());
    }

    #[test]
    fn missing_context_rejected() {
        let mut ctx = StageContext::defaults();
        ctx.pop();
        assert!(RewardMachine::new(ctx, TransitionTable::default()).is_err());
    }

    #[test]
    fn cumulative_examples() {
        assert_eq!(cumulative_reward(&[-1.0, -2.0], &[10.0]), 7.0);
        assert_eq!(cumulative_reward(&[], &[]), 0.0);
    }
}
