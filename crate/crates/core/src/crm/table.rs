use serde::{Deserialize, Serialize};

use super::{Event, StageId};
use crate::error::{Error, Result};

/// Scalar transition rewards; the table is built from these.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransitionRewards {
    pub arrive: f64,
    pub aor: f64,
    pub gor: f64,
    pub fail: f64,
    pub succ: f64,
    /// Bonus added on success when every contact is inside its friction cone.
    pub cone: f64,
}

impl Default for TransitionRewards {
    fn default() -> Self {
        Self {
            arrive: 10.0,
            aor: -20.0,
            gor: -10.0,
            fail: -5.0,
            succ: 100.0,
            cone: 20.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub from: StageId,
    pub event: Event,
    pub to: StageId,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionTable {
    pub entries: Vec<TableEntry>,
    pub r_cone: f64,
}

const CANONICAL: [(StageId, Event, StageId); 5] = [
    (StageId::Approach, Event::Arrive, StageId::Grasp),
    (StageId::Approach, Event::ApproachOutOfReach, StageId::OutOfReach),
    (StageId::Grasp, Event::GraspOutOfReach, StageId::OutOfReach),
    (StageId::Grasp, Event::Fail, StageId::GraspFailure),
    (StageId::Grasp, Event::Succ, StageId::GraspSuccess),
];

impl TransitionTable {
    pub fn from_rewards(r: &TransitionRewards) -> Self {
        let reward = |e: Event| match e {
            Event::Arrive => r.arrive,
            Event::ApproachOutOfReach => r.aor,
            Event::GraspOutOfReach => r.gor,
            Event::Fail => r.fail,
            Event::Succ => r.succ,
        };
        let entries = CANONICAL
            .iter()
            .map(|&(from, event, to)| TableEntry {
                from,
                event,
                to,
                reward: reward(event),
            })
            .collect();
        Self {
            entries,
            r_cone: r.cone,
        }
    }

    pub fn lookup(&self, from: StageId, event: Event) -> Option<&TableEntry> {
        self.entries
            .iter()
            .find(|e| e.from == from && e.event == event)
    }

    fn reward_of(&self, event: Event) -> f64 {
        self.entries
            .iter()
            .find(|e| e.event == event)
            .map(|e| e.reward)
            .unwrap_or(f64::NAN)
    }

    /// Checks structure and reward ordering; errors name the violated rule.
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: &str| Err(Error::config(key, reason));
        for e in &self.entries {
            if e.from == StageId::Approach
                && matches!(e.to, StageId::GraspFailure | StageId::GraspSuccess)
            {
                return bad(
                    "crm.table",
                    &format!("Approach cannot transition directly to {:?}", e.to),
                );
            }
            if !e.reward.is_finite() {
                return bad("crm.table", &format!("non-finite reward for {}", e.event.name()));
            }
        }
        if !self.r_cone.is_finite() {
            return bad("crm.transition_rewards.cone", "must be finite");
        }
        if self.entries.len() != CANONICAL.len() {
            return bad(
                "crm.table",
                &format!("expected {} entries, found {}", CANONICAL.len(), self.entries.len()),
            );
        }
        for &(from, event, to) in &CANONICAL {
            let hits: Vec<_> = self
                .entries
                .iter()
                .filter(|e| e.from == from && e.event == event)
                .collect();
            if hits.len() != 1 || hits[0].to != to {
                return bad(
                    "crm.table",
                    &format!("({from:?}, {}) must map to {to:?} exactly once", event.name()),
                );
            }
        }
        let arrive = self.reward_of(Event::Arrive);
        let aor = self.reward_of(Event::ApproachOutOfReach);
        let gor = self.reward_of(Event::GraspOutOfReach);
        let fail = self.reward_of(Event::Fail);
        let succ = self.reward_of(Event::Succ);
        if !(arrive > -1.0) {
            return bad("crm.transition_rewards.arrive", "R_arrive > -1 violated");
        }
        if !(aor < gor) {
            return bad("crm.transition_rewards.aor", "R_aor < R_gor violated");
        }
        if !(gor < 0.0) {
            return bad("crm.transition_rewards.gor", "R_gor < 0 violated");
        }
        if !(gor < fail) {
            return bad("crm.transition_rewards.gor", "R_gor < R_fail violated");
        }
        if !(fail < 0.0) {
            return bad("crm.transition_rewards.fail", "R_fail < 0 violated");
        }
        if !(succ > 0.0) {
            return bad("crm.transition_rewards.succ", "R_succ > 0 violated");
        }
        Ok(())
    }
}

impl Default for TransitionTable {
    fn default() -> Self {
        Self::from_rewards(&TransitionRewards::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with(f: impl FnOnce(&mut TransitionRewards)) -> Result<()> {
        let mut r = TransitionRewards::default();
        f(&mut r);
        TransitionTable::from_rewards(&r).validate()
    }

    #[test]
    fn defaults_are_valid() {
        TransitionTable::default().validate().unwrap();
    }

    #[test]
    fn each_ordering_rule_is_named() {
        let cases: [(fn(&mut TransitionRewards), &str); 6] = [
            (|r| r.arrive = -1.0, "R_arrive > -1"),
            (|r| { r.aor = -5.0; r.gor = -10.0 }, "R_aor < R_gor"),
            (|r| { r.gor = 1.0; r.aor = -1.0 }, "R_gor < 0"),
            (|r| r.fail = -15.0, "R_gor < R_fail"),
            (|r| r.fail = 0.0, "R_fail < 0"),
            (|r| r.succ = 0.0, "R_succ > 0"),
        ];
        for (f, name) in cases {
            let err = with(f).unwrap_err().to_string();
            assert!(err.contains(name), "{err} should mention {name}");
        }
    }

    #[test]
    fn rejects_approach_to_success() {
        let mut t = TransitionTable::default();
        t.entries[0].to = StageId::GraspSuccess;
        let err = t.validate().unwrap_err().to_string();
        assert!(err.contains("GraspSuccess"), "{err}");
        let mut t = TransitionTable::default();
        t.entries.push(TableEntry {
            from: StageId::Approach,
            event: Event::Fail,
            to: StageId::GraspFailure,
            reward: -5.0,
        });
        assert!(t.validate().is_err());
    }

    #[test]
    fn rejects_missing_or_duplicate_entries() {
        let mut t = TransitionTable::default();
        t.entries.pop();
        assert!(t.validate().is_err());
        let mut t = TransitionTable::default();
        t.entries[4] = t.entries[3];
        assert!(t.validate().is_err());
    }
}
