//! Browser demo: hand kinematics per topology, stage reward curves and a
//! steppable reward machine. Every export returns JSON text so the page
//! needs no bindings beyond strings and numbers.

use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

use crm_grasp::crm::{Event, EventFlags, MachineState, RewardMachine, StageId, TransitionTable};
use crm_grasp::env::kinematics::{HandConfig, HandGeometry};
use crm_grasp::env::{reward_approach, reward_grasp, Affordance, GlobalObservation, RewardConfig, Shape};
use crm_grasp::taxonomy::{label_oracle, topology_spec, FeatureVector, TopologyLabel, NUM_DIGITS};

const GRAVITY: f64 = 9.81;

#[derive(Serialize)]
struct Digit {
    active: bool,
    /// Anchor, midpoint and tip in the hand frame (m).
    chain: [[f64; 3]; 3],
}

fn obs(n_c: usize, dist: f64, force: [f64; 3]) -> GlobalObservation {
    use nalgebra::Vector3;
    GlobalObservation {
        n_c,
        o_dist: dist,
        o_object: Vector3::zeros(),
        o_cone: false,
        o_relative: Vector3::zeros(),
        o_force: Vector3::from(force),
        o_torque: Vector3::zeros(),
    }
}

pub fn topology_names() -> String {
    let names: Vec<&str> = TopologyLabel::ALL.iter().map(|l| l.as_str()).collect();
    json!(names).to_string()
}

/// Digit chains for `topology` with every active digit flexed to
/// `flexion` radians; inactive digits stay straight.
pub fn hand_pose(topology: &str, flexion: f64) -> Result<String, String> {
    let label: TopologyLabel = topology.parse().map_err(|e: crm_grasp::Error| e.to_string())?;
    let spec = topology_spec(label);
    let cfg = HandConfig::default();
    let theta = flexion.clamp(0.0, cfg.theta_max);
    let geom = HandGeometry::new(&cfg, &spec);
    let digits: Vec<Digit> = (0..NUM_DIGITS)
        .map(|d| {
            let t = if spec.active_fingers[d] { theta } else { 0.0 };
            let [mid, tip] = geom.digit_points(d, t);
            let a = geom.anchors[d];
            Digit {
                active: spec.active_fingers[d],
                chain: [[a.x, a.y, a.z], [mid.x, mid.y, mid.z], [tip.x, tip.y, tip.z]],
            }
        })
        .collect();
    Ok(json!({
        "topology": label.as_str(),
        "flexion": theta,
        "palm": [cfg.palm_length, cfg.palm_width],
        "palm_contact": spec.palm_contact_required,
        "min_contacts": spec.min_contacts,
        "digits": digits,
    })
    .to_string())
}

/// Approach reward against palm distance and grasp reward against the
/// vertical force left unbalanced, for an object of `mass` kg.
pub fn reward_curves(mass: f64, contacts: usize, samples: usize) -> Result<String, String> {
    if mass.is_nan() || mass <= 0.0 || samples < 2 {
        return Err("mass must be positive and samples at least 2".into());
    }
    let cfg = RewardConfig::default();
    let step = |i: usize, hi: f64| hi * i as f64 / (samples - 1) as f64;
    let approach: Vec<[f64; 2]> = (0..samples)
        .map(|i| {
            let d = step(i, 0.25);
            [d, reward_approach(&obs(0, d, [0.0; 3]), &cfg)]
        })
        .collect();
    // lifting force from zero (object resting on its weight) to full support
    let weight = mass * GRAVITY;
    let grasp: Vec<[f64; 2]> = (0..samples)
        .map(|i| {
            let lift = step(i, weight);
            [lift, reward_grasp(&obs(contacts, 0.0, [0.0, 0.0, lift - weight]), &cfg)]
        })
        .collect();
    Ok(json!({ "weight": weight, "approach": approach, "grasp": grasp }).to_string())
}

/// Topology the rule table assigns to an object.
pub fn rule_topology(shape: &str, size: f64, mass: f64, affordance: &str) -> Result<String, String> {
    let half = size / 2.0;
    let shape = match shape {
        "box" => Shape::Box { half_extents: [half; 3] },
        "cylinder" => Shape::Cylinder {
            radius: half,
            half_height: half,
        },
        "sphere" => Shape::Sphere { radius: half },
        other => return Err(format!("unknown shape `{other}`")),
    };
    let aff: Affordance = affordance.parse().map_err(|e: crm_grasp::Error| e.to_string())?;
    let label = label_oracle(&FeatureVector::new(&shape, mass, aff), 0.06);
    Ok(label.as_str().to_string())
}

/// Reward machine driven by hand-picked events.
#[wasm_bindgen]
pub struct MachineDemo {
    machine: RewardMachine,
    state: MachineState,
}

impl Default for MachineDemo {
    fn default() -> Self {
        Self::new()
    }
}

#[wasm_bindgen]
impl MachineDemo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Self {
        let machine = RewardMachine::with_defaults(TransitionTable::default()).expect("default table is valid");
        let state = machine.start();
        Self { machine, state }
    }

    pub fn reset(&mut self) {
        self.state = self.machine.start();
    }

    /// Current stage, total transition reward and the events allowed now.
    pub fn snapshot(&self) -> String {
        let stage = self.state.current;
        let events: Vec<&str> = Event::ALL
            .iter()
            .filter(|e| !stage.is_terminal() && e.source_stage() == stage)
            .map(|e| e.name())
            .collect();
        json!({
            "stage": stage.name(),
            "terminal": stage.is_terminal(),
            "steps": self.state.episode_step,
            "total": self.state.transition_total(),
            "events": events,
        })
        .to_string()
    }

    /// Steps with the named events set (comma separated, may be empty).
    pub fn step(&mut self, events: &str, cone: bool) -> Result<String, JsError> {
        self.step_inner(events, cone).map_err(|e| JsError::new(&e))
    }
}

impl MachineDemo {
    pub fn step_inner(&mut self, events: &str, cone: bool) -> Result<String, String> {
        let mut flags = EventFlags::default();
        for name in events.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let e = Event::ALL
                .into_iter()
                .find(|e| e.name() == name)
                .ok_or_else(|| format!("unknown event `{name}`"))?;
            flags.set(e, true);
        }
        let from = self.state.current;
        let out = self.machine.step(&mut self.state, flags, cone).map_err(|e| e.to_string())?;
        Ok(json!({
            "from": from.name(),
            "to": out.next.name(),
            "event": out.event.map(|e| e.name()),
            "reward": out.reward,
            "success": out.next == StageId::GraspSuccess,
        })
        .to_string())
    }
}

#[wasm_bindgen]
pub fn topologies() -> String {
    topology_names()
}

#[wasm_bindgen]
pub fn hand(topology: &str, flexion: f64) -> Result<String, JsError> {
    hand_pose(topology, flexion).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn curves(mass: f64, contacts: usize, samples: usize) -> Result<String, JsError> {
    reward_curves(mass, contacts, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn select_topology(shape: &str, size: f64, mass: f64, affordance: &str) -> Result<String, JsError> {
    rule_topology(shape, size, mass, affordance).map_err(|e| JsError::new(&e))
}
