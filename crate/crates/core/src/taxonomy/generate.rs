//! Synthetic task suites.
//!
//! Objects are drawn from parametric shape ranges, labelled by the rule
//! table, and given a grasp location found by searching palm placements
//! around the object. A placement is kept only when the scripted
//! close-and-hold controller succeeds from it, both unperturbed and under
//! reset noise, so every generated task is known to be solvable.

use log::debug;
use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{label_oracle, topology_spec, FeatureVector, TaxonomyConfig, TopologyLabel};
use crate::crm::StageId;
use crate::env::kinematics::{canonical_orientation, HandGeometry, PALM_POINT, THUMB};
use crate::env::script::{run_scripted, run_scripted_in};
use crate::env::{Affordance, EnvConfig, GraspEnv, ObjectState, Shape, TaskSpec};
use crate::error::{Error, Result};

/// Clearance between the palm and the top face for press tasks (m).
const PRESS_CLEARANCE: f64 = 0.005;

/// Generates `n` tasks; the first seven cover every affordance once.
pub fn generate_tasks(seed: u64, n: usize, cfg: &TaxonomyConfig, env_cfg: &EnvConfig) -> Result<Vec<TaskSpec>> {
    if n < Affordance::ALL.len() {
        return Err(Error::Task(format!(
            "need at least {} tasks to cover every affordance, got {n}",
            Affordance::ALL.len()
        )));
    }
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let aff = if i < Affordance::ALL.len() {
                Affordance::ALL[i]
            } else {
                Affordance::ALL[rng.random_range(0..Affordance::ALL.len())]
            };
            let name = format!("task{:02}_{}", i, aff.title().to_lowercase());
            generate_task(&mut rng, aff, &name, cfg, env_cfg, |_| true)
        })
        .collect()
}

/// Draws objects until one admits a verified grasp. `accept` can veto an
/// object before placement search.
pub fn generate_task<R: Rng + ?Sized>(
    rng: &mut R,
    affordance: Affordance,
    name: &str,
    cfg: &TaxonomyConfig,
    env_cfg: &EnvConfig,
    accept: impl Fn(&ObjectState) -> bool,
) -> Result<TaskSpec> {
    for attempt in 0..cfg.max_attempts {
        let shape = super::features::sample_shape(rng, cfg);
        let mass = rng.random_range(cfg.mass[0]..=cfg.mass[1]);
        let mu = rng.random_range(cfg.mu[0]..=cfg.mu[1]);
        let x = rng.random_range(cfg.place_x[0]..=cfg.place_x[1]);
        let y = rng.random_range(cfg.place_y[0]..=cfg.place_y[1]);
        let noise_seed: u64 = rng.random();
        let mut object = ObjectState {
            position: Vector3::new(x, y, 0.0),
            orient: UnitQuaternion::identity(),
            shape,
            mass,
            mu,
        };
        object.position.z = env_cfg.floor_z + object.vertical_half_extent();
        if !accept(&object) {
            continue;
        }
        if let Some(task) = place(object, affordance, name, cfg, env_cfg, noise_seed)? {
            debug!("{name}: placed after {} attempts", attempt + 1);
            return Ok(task);
        }
    }
    Err(Error::Task(format!(
        "no feasible {affordance} object found in {} attempts",
        cfg.max_attempts
    )))
}

/// Searches grasp placements for `object`; `None` when nothing works.
pub fn place(
    object: ObjectState,
    affordance: Affordance,
    name: &str,
    cfg: &TaxonomyConfig,
    env_cfg: &EnvConfig,
    noise_seed: u64,
) -> Result<Option<TaskSpec>> {
    let features = FeatureVector::new(&object.shape, object.mass, affordance);
    let topology = label_oracle(&features, cfg.size_threshold);
    let spec = topology_spec(topology);
    let orient = canonical_orientation() * spec.palm_orient_offset;
    let mut task = TaskSpec {
        name: name.to_string(),
        object,
        affordance,
        topology,
        grasp_location: Vector3::zeros(),
        grasp_orient: orient,
        success_axis: Vector3::z(),
    };

    if topology == TopologyLabel::Platform {
        let top = task.object.position.z + task.object.vertical_half_extent();
        task.grasp_location = Vector3::new(task.object.position.x, task.object.position.y, top + PRESS_CLEARANCE);
        task.success_axis = orient.transform_vector(&Vector3::y());
        return verify(task, cfg, env_cfg, noise_seed);
    }

    let geom = HandGeometry::new(&env_cfg.hand, &spec);
    let s0 = geom.anchors[THUMB].z;
    let to_obj = |v: Vector3<f64>| task.object.orient.inverse_transform_vector(&orient.transform_vector(&v));
    let e_p = task.object.shape.half_extent_along(&to_obj(Vector3::y()));
    for k in 0..4 {
        let p0 = e_p + 0.0005 + 0.004 * k as f64;
        for j in 0..21 {
            let f0 = -0.03 + 0.005 * j as f64;
            let centre = Vector3::new(f0, p0, s0);
            let palm = task.object.position - orient.transform_vector(&centre);
            task.grasp_location = palm;
            let Some(axis) = close_in_place(&task, env_cfg)? else {
                continue;
            };
            task.success_axis = axis;
            if let Some(t) = verify(task.clone(), cfg, env_cfg, noise_seed)? {
                return Ok(Some(t));
            }
        }
    }
    Ok(None)
}

/// Puts the open hand at the grasp location, closes every active digit and
/// reports the success axis if the grasp holds.
fn close_in_place(task: &TaskSpec, env_cfg: &EnvConfig) -> Result<Option<Vector3<f64>>> {
    if task.validate(env_cfg.events.workspace_half).is_err() {
        return Ok(None);
    }
    // coarse finger increments: the stall solver lands on the same angles
    let mut fast = env_cfg.clone();
    fast.dtheta_max = 0.2;
    let mut env = GraspEnv::new(task.clone(), fast)?;
    env.set_palm(task.grasp_location);
    // the open hand must not already be inside the object
    if env.contacts().iter().any(|c| c.source != PALM_POINT && c.f_normal > 0.0) {
        return Ok(None);
    }
    let mut action = vec![0.0; 8];
    for (d, a) in action[3..].iter_mut().enumerate() {
        *a = if env.geometry().active[d] { 1.0 } else { 0.0 };
    }
    let steps = (env_cfg.hand.theta_max / 0.2).ceil() as u32 + 4;
    for _ in 0..steps {
        env.step(&action, StageId::Grasp)?;
    }
    let obs = env.observation().clone();
    let spec = env.topology().clone();
    if obs.n_c < spec.min_contacts {
        return Ok(None);
    }
    if spec.palm_contact_required && !env.contacts().iter().any(|c| c.source == PALM_POINT) {
        return Ok(None);
    }
    let axis = if task.affordance == Affordance::Twist {
        let tz = obs.o_torque.z;
        if tz.abs() < 1.2 * env_cfg.events.twist_torque {
            return Ok(None);
        }
        Vector3::z() * tz.signum()
    } else {
        task.success_axis
    };
    let mut probe = task.clone();
    probe.success_axis = axis;
    let cfg = &env_cfg.events;
    if !crate::env::success_predicate(&obs, &probe, &spec, cfg) {
        return Ok(None);
    }
    Ok(Some(axis))
}

/// Accepts a task only if the scripted controller succeeds unperturbed and
/// on every randomized trial.
fn verify(task: TaskSpec, cfg: &TaxonomyConfig, env_cfg: &EnvConfig, noise_seed: u64) -> Result<Option<TaskSpec>> {
    if task.validate(env_cfg.events.workspace_half).is_err() {
        return Ok(None);
    }
    if !run_scripted(&task, env_cfg)?.success() {
        return Ok(None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let mut env = GraspEnv::new(task.clone(), env_cfg.clone())?;
    for _ in 0..cfg.robustness_trials {
        env.reset(&mut rng, true);
        if !run_scripted_in(&mut env)?.success() {
            return Ok(None);
        }
    }
    Ok(Some(task))
}

/// A fixed cylinder-lift task used as a regression fixture.
pub fn canonical_cylinder_lift(env_cfg: &EnvConfig) -> Result<TaskSpec> {
    let object = ObjectState {
        position: Vector3::new(0.3, 0.0, env_cfg.floor_z + 0.04),
        orient: UnitQuaternion::identity(),
        shape: Shape::Cylinder {
            radius: 0.02,
            half_height: 0.04,
        },
        mass: 0.1,
        mu: 0.6,
    };
    place(object, Affordance::Lift, "canonical_cylinder_lift", &TaxonomyConfig::default(), env_cfg, 7)?
        .ok_or_else(|| Error::Task("canonical cylinder admits no grasp".into()))
}
