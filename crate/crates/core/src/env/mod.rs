//! Quasi-static grasping environment.
//!
//! The palm is positioned kinematically. Fingers are commanded by flexion
//! setpoints and stop where their contact force reaches the grip limit, so
//! a closing hand settles on the object instead of driving through it.

pub mod contact;
pub mod events;
pub mod kinematics;
pub mod observation;
pub mod reward;
pub mod script;
pub mod shape;
pub mod task;

use nalgebra::{UnitQuaternion, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use contact::{compute_contacts, contact_wrench, friction_cone_check, Contact, ContactConfig};
pub use events::{detect_events, success_predicate, Counters, EventConfig};
pub use kinematics::{forward_kinematics, HandConfig, HandGeometry};
pub use observation::GlobalObservation;
pub use reward::{reward_approach, reward_grasp, terminal_reward, EquilNorm, RewardConfig, RewardMode};
pub use shape::Shape;
pub use task::{load_tasks, save_tasks, Affordance, ObjectState, TaskSpec};

use crate::crm::{EventFlags, StageId};
use crate::error::{Error, Result};
use crate::taxonomy::{topology_spec, TopologySpec, NUM_DIGITS};
use kinematics::{NUM_POINTS, PALM_POINT, THUMB};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub hand: HandConfig,
    pub contact: ContactConfig,
    pub events: EventConfig,
    pub reward: RewardConfig,
    /// Palm translation per unit action in the approach stage (m).
    pub step_max: f64,
    /// Palm step scale in the grasp stage.
    pub grasp_scale: f64,
    /// Flexion setpoint change per unit action (rad).
    pub dtheta_max: f64,
    /// Initial palm distance from the grasp location along the approach axis (m).
    pub start_distance: f64,
    pub approach_budget: u32,
    pub episode_cap: u32,
    /// Squeeze force shared by the opposing fingers (N).
    pub grip_force: f64,
    /// Height of the support surface objects rest on (m).
    pub floor_z: f64,
    pub pos_noise: f64,
    /// Yaw perturbation bound (rad).
    pub yaw_noise: f64,
    pub joint_noise: f64,
    /// Object relaxation passes per step.
    pub settle_iters: u32,
    /// Net squeeze force treated as balanced (N).
    pub settle_tol: f64,
    /// Largest object shift per relaxation pass (m).
    pub settle_max_step: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            hand: HandConfig::default(),
            contact: ContactConfig::default(),
            events: EventConfig::default(),
            reward: RewardConfig::default(),
            step_max: 0.02,
            grasp_scale: 0.25,
            dtheta_max: 0.05,
            start_distance: 0.25,
            approach_budget: 200,
            episode_cap: 500,
            grip_force: 2.0,
            floor_z: 0.0,
            pos_noise: 0.003,
            yaw_noise: 11.5f64.to_radians(),
            joint_noise: 0.02,
            settle_iters: 8,
            settle_tol: 0.05,
            settle_max_step: 0.002,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        self.reward.validate()?;
        let positive = [
            ("env.step_max", self.step_max),
            ("env.grasp_scale", self.grasp_scale),
            ("env.dtheta_max", self.dtheta_max),
            ("env.start_distance", self.start_distance),
            ("env.grip_force", self.grip_force),
            ("env.contact.k_contact", self.contact.k_contact),
            ("env.contact.contact_eps", self.contact.contact_eps),
            ("env.hand.theta_max", self.hand.theta_max),
            ("env.events.workspace_half", self.events.workspace_half),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(key, format!("must be positive, got {v}")));
            }
        }
        if self.events.stable_steps == 0 {
            return Err(Error::config("env.events.stable_steps", "must be at least 1"));
        }
        if self.approach_budget == 0 || self.episode_cap == 0 {
            return Err(Error::config("env.episode_cap", "budgets must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandState {
    pub palm_pos: Vector3<f64>,
    pub palm_orient: UnitQuaternion<f64>,
    /// Realised flexion per digit (thumb first).
    pub theta_pip: [f64; NUM_DIGITS],
    /// Commanded flexion setpoints.
    pub theta_cmd: [f64; NUM_DIGITS],
}

impl HandState {
    /// Palm normal in world coordinates; the approach direction.
    pub fn approach_axis(&self) -> Vector3<f64> {
        self.palm_orient.transform_vector(&Vector3::y())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub obs: GlobalObservation,
    pub flags: EventFlags,
    pub intra_reward: f64,
    pub predicate: bool,
}

struct ResetNoise {
    offset: Vector3<f64>,
    yaw: f64,
    joints: [f64; NUM_DIGITS],
}

/// One environment instance bound to a task.
#[derive(Debug, Clone)]
pub struct GraspEnv {
    cfg: EnvConfig,
    task: TaskSpec,
    topo: TopologySpec,
    geom: HandGeometry,
    hand: HandState,
    object: ObjectState,
    grasp_location: Vector3<f64>,
    contacts: Vec<Contact>,
    obs: GlobalObservation,
    counters: Counters,
    stage: StageId,
}

impl GraspEnv {
    pub fn new(task: TaskSpec, cfg: EnvConfig) -> Result<Self> {
        cfg.validate()?;
        task.validate(cfg.events.workspace_half)?;
        let topo = topology_spec(task.topology);
        let geom = HandGeometry::new(&cfg.hand, &topo);
        let hand = HandState {
            palm_pos: Vector3::zeros(),
            palm_orient: task.grasp_orient,
            theta_pip: [0.0; NUM_DIGITS],
            theta_cmd: [0.0; NUM_DIGITS],
        };
        let object = task.object.clone();
        let grasp_location = task.grasp_location;
        let obs = GlobalObservation::build(&hand.palm_pos, &grasp_location, &object, &[], cfg.contact.gravity);
        let mut env = Self {
            cfg,
            task,
            topo,
            geom,
            hand,
            object,
            grasp_location,
            contacts: Vec::new(),
            obs,
            counters: Counters::default(),
            stage: StageId::Approach,
        };
        env.place(None);
        Ok(env)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn task(&self) -> &TaskSpec {
        &self.task
    }

    pub fn topology(&self) -> &TopologySpec {
        &self.topo
    }

    pub fn geometry(&self) -> &HandGeometry {
        &self.geom
    }

    pub fn hand(&self) -> &HandState {
        &self.hand
    }

    pub fn object(&self) -> &ObjectState {
        &self.object
    }

    pub fn contacts(&self) -> &[Contact] {
        &self.contacts
    }

    pub fn observation(&self) -> &GlobalObservation {
        &self.obs
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    /// Episode-specific grasp target (follows the object's position noise).
    pub fn grasp_location(&self) -> Vector3<f64> {
        self.grasp_location
    }

    /// Starts a new episode.
    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R, randomize: bool) -> GlobalObservation {
        let noise = randomize.then(|| {
            let c = &self.cfg;
            let mut u = |h: f64| rng.random_range(-h..=h);
            ResetNoise {
                offset: Vector3::new(u(c.pos_noise), u(c.pos_noise), u(c.pos_noise)),
                yaw: u(c.yaw_noise),
                joints: [(); NUM_DIGITS].map(|_| u(c.joint_noise).clamp(0.0, c.hand.theta_max)),
            }
        });
        self.place(noise);
        self.obs.clone()
    }

    fn place(&mut self, noise: Option<ResetNoise>) {
        self.object = self.task.object.clone();
        self.grasp_location = self.task.grasp_location;
        let mut theta = [0.0; NUM_DIGITS];
        if let Some(n) = noise {
            self.object.position += n.offset;
            self.object.orient = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), n.yaw) * self.object.orient;
            self.grasp_location += n.offset;
            theta = n.joints;
        }
        let axis = self.task.grasp_orient.transform_vector(&Vector3::y());
        self.hand = HandState {
            palm_pos: self.grasp_location - axis * self.cfg.start_distance,
            palm_orient: self.task.grasp_orient,
            theta_pip: theta,
            theta_cmd: theta,
        };
        self.counters = Counters::default();
        self.stage = StageId::Approach;
        self.settle();
    }

    /// Applies one action in `stage` and evaluates the result.
    pub fn step(&mut self, action: &[f64], stage: StageId) -> Result<StepOutcome> {
        let dim = match stage {
            StageId::Approach => 3,
            StageId::Grasp => 8,
            other => return Err(Error::TerminalStage(other)),
        };
        if action.len() != dim {
            return Err(Error::dim(format!("{} action", stage.name()), dim, action.len()));
        }
        if action.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite(format!("{} action", stage.name())));
        }
        if stage != self.stage {
            self.stage = stage;
            self.counters = Counters::default();
        }
        let a: Vec<f64> = action.iter().map(|v| v.clamp(-1.0, 1.0)).collect();
        let scale = match stage {
            StageId::Approach => self.cfg.step_max,
            _ => self.cfg.step_max * self.cfg.grasp_scale,
        };
        self.hand.palm_pos += Vector3::new(a[0], a[1], a[2]) * scale;
        if stage == StageId::Grasp {
            for d in 0..NUM_DIGITS {
                if self.geom.active[d] {
                    let c = self.hand.theta_cmd[d] + a[3 + d] * self.cfg.dtheta_max;
                    self.hand.theta_cmd[d] = c.clamp(0.0, self.cfg.hand.theta_max);
                }
            }
        }
        self.settle();
        if !self.obs.is_finite() {
            return Err(Error::NonFinite("observation".into()));
        }

        self.counters.steps_in_stage += 1;
        let predicate = stage == StageId::Grasp
            && success_predicate(&self.obs, &self.task, &self.topo, &self.cfg.events);
        self.counters.stable_streak = if predicate { self.counters.stable_streak + 1 } else { 0 };
        let flags = detect_events(&self.obs, stage, &self.counters, &self.cfg.events);
        let intra_reward = match stage {
            StageId::Approach => reward_approach(&self.obs, &self.cfg.reward),
            _ => reward_grasp(&self.obs, &self.cfg.reward),
        };
        Ok(StepOutcome {
            obs: self.obs.clone(),
            flags,
            intra_reward,
            predicate,
        })
    }

    /// Moves the palm directly to `pos` and re-evaluates contacts.
    pub fn set_palm(&mut self, pos: Vector3<f64>) {
        self.hand.palm_pos = pos;
        self.settle();
    }

    /// World-frame candidate contact points for the current posture.
    /// Contact candidates in world frame. The palm pad point tracks the
    /// object: it sits where the object centre projects onto the palm plate.
    pub fn points(&self) -> [Vector3<f64>; NUM_POINTS] {
        let mut pts = forward_kinematics(&self.geom, &self.hand.palm_pos, &self.hand.palm_orient, &self.hand.theta_pip);
        let rel = self
            .hand
            .palm_orient
            .inverse_transform_vector(&(self.object.position - self.hand.palm_pos));
        let (hl, hw) = (self.cfg.hand.palm_length / 2.0, self.cfg.hand.palm_width / 2.0);
        let pad = Vector3::new(rel.x.clamp(-hl, hl), 0.0, rel.z.clamp(-hw, hw));
        pts[PALM_POINT] = self.hand.palm_pos + self.hand.palm_orient.transform_vector(&pad);
        pts
    }

    fn settle(&mut self) {
        self.hand.theta_pip = self.solve_flexion();
        let result = compute_contacts(&self.points(), &self.object, &self.cfg.contact);
        self.contacts = result.contacts;
        if result.pushed_displacement != Vector3::zeros() {
            self.shift_object(result.pushed_displacement);
            self.hand.theta_pip = self.solve_flexion();
            self.contacts = compute_contacts(&self.points(), &self.object, &self.cfg.contact).contacts;
        }
        // Let the object slide along any unbalanced squeeze until the
        // contact normal forces cancel or the contacts release it.
        for _ in 0..self.cfg.settle_iters {
            let net: Vector3<f64> = self.contacts.iter().map(|c| -c.normal * c.f_normal).sum();
            if net.norm() <= self.cfg.settle_tol {
                break;
            }
            let n = self.contacts.iter().filter(|c| c.f_normal > 0.0).count().max(1);
            let mut step = net / (self.cfg.contact.k_contact * n as f64);
            let len = step.norm();
            if len > self.cfg.settle_max_step {
                step *= self.cfg.settle_max_step / len;
            }
            let before = self.object.position;
            self.shift_object(step);
            if self.object.position == before {
                break;
            }
            self.hand.theta_pip = self.solve_flexion();
            self.contacts = compute_contacts(&self.points(), &self.object, &self.cfg.contact).contacts;
        }
        self.obs = GlobalObservation::build(
            &self.hand.palm_pos,
            &self.grasp_location,
            &self.object,
            &self.contacts,
            self.cfg.contact.gravity,
        );
    }

    /// Moves the object, keeping it on or above the support surface.
    fn shift_object(&mut self, d: Vector3<f64>) {
        self.object.position += d;
        let floor = self.cfg.floor_z + self.object.vertical_half_extent();
        if self.object.position.z < floor {
            self.object.position.z = floor;
        }
    }

    fn digit_force(&self, digit: usize, theta: f64) -> f64 {
        self.geom
            .digit_points(digit, theta)
            .iter()
            .map(|p| {
                let w = self.hand.palm_pos + self.hand.palm_orient.transform_vector(p);
                contact::penetration_force(&self.object, &w, &self.cfg.contact)
            })
            .sum()
    }

    /// Flexion of a digit driven toward `cmd` from `from`, stopping where its
    /// contact force would exceed `limit`.
    fn stall_angle(&self, digit: usize, from: f64, cmd: f64, limit: f64) -> f64 {
        const SCAN: f64 = 0.05;
        let over = |t: f64| self.digit_force(digit, t) > limit;
        let bisect = |mut ok: f64, mut bad: f64| {
            for _ in 0..24 {
                let m = 0.5 * (ok + bad);
                if over(m) {
                    bad = m;
                } else {
                    ok = m;
                }
            }
            ok
        };
        let start = from.min(cmd).max(0.0);
        if over(start) {
            // back off until the digit is within its force limit
            let mut hi = start;
            while hi > 0.0 {
                let lo = (hi - SCAN).max(0.0);
                if !over(lo) {
                    return bisect(lo, hi);
                }
                hi = lo;
            }
            return 0.0;
        }
        let mut lo = start;
        while lo < cmd {
            let hi = (lo + SCAN).min(cmd);
            if over(hi) {
                return bisect(lo, hi);
            }
            lo = hi;
        }
        cmd
    }

    fn solve_flexion(&self) -> [f64; NUM_DIGITS] {
        let mut theta = self.hand.theta_pip;
        let fingers = self.topo.active_non_thumb();
        let mut touching = 0;
        for d in 1..NUM_DIGITS {
            if !self.geom.active[d] {
                continue;
            }
            let share = self.cfg.grip_force / fingers as f64;
            theta[d] = self.stall_angle(d, theta[d], self.hand.theta_cmd[d], share);
            if self.digit_force(d, theta[d]) > 0.0 {
                touching += 1;
            }
        }
        if self.geom.active[THUMB] {
            let opposed = touching.max(1) as f64 / fingers.max(1) as f64;
            theta[THUMB] = self.stall_angle(THUMB, theta[THUMB], self.hand.theta_cmd[THUMB], self.cfg.grip_force * opposed);
        }
        theta
    }
}

/// Canonical reset without an environment handle.
pub fn reset<R: Rng + ?Sized>(
    task: &TaskSpec,
    cfg: &EnvConfig,
    rng: &mut R,
    randomize: bool,
) -> Result<(HandState, ObjectState, GlobalObservation)> {
    let mut env = GraspEnv::new(task.clone(), cfg.clone())?;
    let obs = env.reset(rng, randomize);
    Ok((env.hand.clone(), env.object.clone(), obs))
}
