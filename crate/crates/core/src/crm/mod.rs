//! Contextual reward machine: stage contexts, the transition table with
//! transition rewards, and the per-episode machine state with its history.

mod machine;
mod table;

pub use machine::{cumulative_reward, CrmStep, MachineState, RewardMachine, Transition};
pub use table::{TableEntry, TransitionRewards, TransitionTable};

use serde::{Deserialize, Serialize};

use crate::env::GlobalObservation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageId {
    Initial,
    Approach,
    Grasp,
    OutOfReach,
    GraspFailure,
    GraspSuccess,
}

impl StageId {
    pub const ALL: [StageId; 6] = [
        StageId::Initial,
        StageId::Approach,
        StageId::Grasp,
        StageId::OutOfReach,
        StageId::GraspFailure,
        StageId::GraspSuccess,
    ];

    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            StageId::OutOfReach | StageId::GraspFailure | StageId::GraspSuccess
        )
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            StageId::Initial => "initial",
            StageId::Approach => "approach",
            StageId::Grasp => "grasp",
            StageId::OutOfReach => "out_of_reach",
            StageId::GraspFailure => "grasp_failure",
            StageId::GraspSuccess => "grasp_success",
        }
    }
}

/// Stage-transition events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    Arrive,
    ApproachOutOfReach,
    GraspOutOfReach,
    Fail,
    Succ,
}

impl Event {
    pub const ALL: [Event; 5] = [
        Event::Arrive,
        Event::ApproachOutOfReach,
        Event::GraspOutOfReach,
        Event::Fail,
        Event::Succ,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Event::Arrive => "e_arrive",
            Event::ApproachOutOfReach => "e_aor",
            Event::GraspOutOfReach => "e_gor",
            Event::Fail => "e_fail",
            Event::Succ => "e_succ",
        }
    }

    /// The only stage in which this event may fire.
    pub fn source_stage(self) -> StageId {
        match self {
            Event::Arrive | Event::ApproachOutOfReach => StageId::Approach,
            _ => StageId::Grasp,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventFlags {
    pub arrive: bool,
    pub aor: bool,
    pub gor: bool,
    pub fail: bool,
    pub succ: bool,
}

impl EventFlags {
    pub fn get(&self, event: Event) -> bool {
        match event {
            Event::Arrive => self.arrive,
            Event::ApproachOutOfReach => self.aor,
            Event::GraspOutOfReach => self.gor,
            Event::Fail => self.fail,
            Event::Succ => self.succ,
        }
    }

    pub fn set(&mut self, event: Event, value: bool) {
        match event {
            Event::Arrive => self.arrive = value,
            Event::ApproachOutOfReach => self.aor = value,
            Event::GraspOutOfReach => self.gor = value,
            Event::Fail => self.fail = value,
            Event::Succ => self.succ = value,
        }
    }

    pub fn only(event: Event) -> Self {
        let mut flags = Self::default();
        flags.set(event, true);
        flags
    }

    pub fn any(&self) -> bool {
        Event::ALL.iter().any(|&e| self.get(e))
    }

    /// Builds flags from the low five bits of `bits`, in [`Event::ALL`] order.
    pub fn from_bits(bits: u8) -> Self {
        let mut flags = Self::default();
        for (i, &e) in Event::ALL.iter().enumerate() {
            flags.set(e, bits & (1 << i) != 0);
        }
        flags
    }
}

/// Fields of the global observation, in observation-vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObsField {
    NumContacts,
    Dist,
    Object,
    Cone,
    Relative,
    Force,
    Torque,
}

impl ObsField {
    pub const ALL: [ObsField; 7] = [
        ObsField::NumContacts,
        ObsField::Dist,
        ObsField::Object,
        ObsField::Cone,
        ObsField::Relative,
        ObsField::Force,
        ObsField::Torque,
    ];

    pub fn width(self) -> usize {
        match self {
            ObsField::NumContacts | ObsField::Dist | ObsField::Cone => 1,
            _ => 3,
        }
    }
}

/// Which stage reward function a context uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardId {
    None,
    Approach,
    Grasp,
    Terminal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageContext {
    pub stage: StageId,
    pub action_dim: usize,
    /// Selected observation fields; order is normalized on use.
    pub abstraction_mask: Vec<ObsField>,
    pub reward_id: RewardId,
}

impl StageContext {
    pub fn abstract_dim(&self) -> usize {
        self.fields().iter().map(|f| f.width()).sum()
    }

    fn fields(&self) -> Vec<ObsField> {
        let mut fields = self.abstraction_mask.clone();
        fields.sort();
        fields.dedup();
        fields
    }

    /// Default contexts: approach sees distance, relative pose, contact
    /// count and object position; grasp sees every field.
    pub fn defaults() -> Vec<StageContext> {
        StageId::ALL
            .iter()
            .map(|&stage| match stage {
                StageId::Approach => StageContext {
                    stage,
                    action_dim: 3,
                    abstraction_mask: vec![
                        ObsField::NumContacts,
                        ObsField::Dist,
                        ObsField::Object,
                        ObsField::Relative,
                    ],
                    reward_id: RewardId::Approach,
                },
                StageId::Grasp => StageContext {
                    stage,
                    action_dim: 8,
                    abstraction_mask: ObsField::ALL.to_vec(),
                    reward_id: RewardId::Grasp,
                },
                StageId::Initial => StageContext {
                    stage,
                    action_dim: 0,
                    abstraction_mask: vec![],
                    reward_id: RewardId::None,
                },
                _ => StageContext {
                    stage,
                    action_dim: 0,
                    abstraction_mask: vec![],
                    reward_id: RewardId::Terminal,
                },
            })
            .collect()
    }
}

/// Projects the global observation onto the context's fields, flattened in
/// observation-vector order.
pub fn abstract_state(context: &StageContext, obs: &GlobalObservation) -> Vec<f64> {
    let mut out = Vec::with_capacity(context.abstract_dim());
    for field in context.fields() {
        match field {
            ObsField::NumContacts => out.push(obs.n_c as f64),
            ObsField::Dist => out.push(obs.o_dist),
            ObsField::Object => out.extend(obs.o_object.iter()),
            ObsField::Cone => out.push(if obs.o_cone { 1.0 } else { 0.0 }),
            ObsField::Relative => out.extend(obs.o_relative.iter()),
            ObsField::Force => out.extend(obs.o_force.iter()),
            ObsField::Torque => out.extend(obs.o_torque.iter()),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn obs() -> GlobalObservation {
        GlobalObservation {
            n_c: 2,
            o_dist: 0.1,
            o_object: Vector3::new(0.3, 0.0, 0.05),
            o_cone: true,
            o_relative: Vector3::new(-0.1, 0.02, 0.0),
            o_force: Vector3::new(0.5, -0.5, 1.0),
            o_torque: Vector3::new(0.01, 0.02, 0.03),
        }
    }

    #[test]
    fn approach_abstraction_is_eight_dims() {
        let ctx = &StageContext::defaults()[StageId::Approach.index()];
        let u = abstract_state(ctx, &obs());
        assert_eq!(u.len(), 8);
        assert_eq!(u, vec![2.0, 0.1, 0.3, 0.0, 0.05, -0.1, 0.02, 0.0]);
    }

    #[test]
    fn grasp_abstraction_is_full_observation_in_order() {
        let ctx = &StageContext::defaults()[StageId::Grasp.index()];
        let u = abstract_state(ctx, &obs());
        assert_eq!(u.len(), 15);
        assert_eq!(
            u,
            vec![
                2.0, 0.1, 0.3, 0.0, 0.05, 1.0, -0.1, 0.02, 0.0, 0.5, -0.5, 1.0, 0.01, 0.02, 0.03
            ]
        );
    }

    #[test]
    fn abstraction_is_pure_and_order_insensitive() {
        let mut ctx = StageContext::defaults()[StageId::Approach.index()].clone();
        let a = abstract_state(&ctx, &obs());
        ctx.abstraction_mask.reverse();
        assert_eq!(a, abstract_state(&ctx, &obs()));
        assert_eq!(a, abstract_state(&ctx, &obs()));
    }

    #[test]
    fn flags_from_bits_covers_all_combinations() {
        let all: Vec<_> = (0u8..32).map(EventFlags::from_bits).collect();
        assert!(!all[0].any());
        assert!(all[31].arrive && all[31].succ);
        for (i, f) in all.iter().enumerate() {
            assert_eq!(f.any(), i != 0);
        }
    }
}
