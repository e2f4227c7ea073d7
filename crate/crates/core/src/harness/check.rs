//! Oracle suites run by the `check` command. Each compares the library
//! against an independent computation on seeded random inputs.

use std::time::Instant;

use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::agent::gae::advantages_for;
use crate::agent::StepRecord;
use crate::approx::policy::log_prob_grads;
use crate::approx::{GaussianPolicyOutput, Mlp};
use crate::crm::{Event, EventFlags, RewardMachine, StageId, TransitionRewards, TransitionTable};
use crate::env::kinematics::coupled_joints;
use crate::env::{contact_wrench, friction_cone_check, Contact, EnvConfig, GraspEnv, TaskSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

fn timed(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    let t = Instant::now();
    let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    CheckResult {
        name,
        passed,
        detail,
        seconds: t.elapsed().as_secs_f64(),
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-7)
}

/// Backpropagated gradients against central differences, for the network
/// and for the Gaussian log-density.
pub fn gradient_check(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let net = Mlp::glorot(&[5, 8, 8, 3], &mut rng)?;
        let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let analytic = net.backward(&x, &g)?;
        let loss = |m: &Mlp| -> Result<f64> { Ok(m.forward(&x)?.iter().zip(&g).map(|(o, w)| o * w).sum()) };
        for i in 0..net.params().len() {
            let mut plus = net.clone();
            plus.params_mut()[i] += h;
            let mut minus = net.clone();
            minus.params_mut()[i] -= h;
            let numeric = (loss(&plus)? - loss(&minus)?) / (2.0 * h);
            worst = worst.max(rel_err(analytic[i], numeric));
        }

        let mean: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let log_std: Vec<f64> = (0..3).map(|_| rng.random_range(-1.5..0.5)).collect();
        let action: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (dm, ds) = log_prob_grads(&mean, &log_std, &action);
        let lp = |m: &[f64], s: &[f64]| GaussianPolicyOutput::new(m.to_vec(), s).log_prob(&action);
        for i in 0..3 {
            let mut mp = mean.clone();
            mp[i] += h;
            let mut mm = mean.clone();
            mm[i] -= h;
            worst = worst.max(rel_err(dm[i], (lp(&mp, &log_std) - lp(&mm, &log_std)) / (2.0 * h)));
            let mut sp = log_std.clone();
            sp[i] += h;
            let mut sm = log_std.clone();
            sm[i] -= h;
            worst = worst.max(rel_err(ds[i], (lp(&mean, &sp) - lp(&mean, &sm)) / (2.0 * h)));
        }
    }
    Ok((worst < 1e-4, format!("max relative error {worst:.2e}")))
}

/// With lambda = 0 every advantage is the one-step TD error with the
/// transition reward added undiscounted.
pub fn gae_one_step(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(1..60);
        let gamma = rng.random_range(0.5..1.0);
        let records: Vec<StepRecord> = (0..n)
            .map(|_| {
                let terminal = rng.random_bool(0.1);
                StepRecord {
                    env: rng.random_range(0..3),
                    stage: StageId::Grasp,
                    abstract_obs: Vec::new(),
                    action: Vec::new(),
                    log_prob_old: 0.0,
                    intra_reward: rng.random_range(-5.0..5.0),
                    transition_reward: if rng.random_bool(0.2) { rng.random_range(-20.0..120.0) } else { 0.0 },
                    value_estimate: rng.random_range(-10.0..10.0),
                    next_value: rng.random_range(-10.0..10.0),
                    done: terminal || rng.random_bool(0.05),
                    terminal,
                    success: false,
                }
            })
            .collect();
        let adv = advantages_for(&records, gamma, 0.0);
        for (a, r) in adv.advantages.iter().zip(&records) {
            let next = if r.terminal { 0.0 } else { gamma * r.next_value };
            let expected = r.intra_reward + next + r.transition_reward - r.value_estimate;
            worst = worst.max((a - expected).abs());
        }
    }
    Ok((worst < 1e-12, format!("max abs error {worst:.2e}")))
}

fn random_contact(rng: &mut ChaCha8Rng, mu: f64) -> Contact {
    let dir = |rng: &mut ChaCha8Rng| {
        let v: Vector3<f64> = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        v / v.norm().max(1e-9)
    };
    let normal = dir(rng);
    let f_normal = rng.random_range(0.0..10.0);
    let t = dir(rng);
    let tangent = t - normal * t.dot(&normal);
    let tangent = tangent / tangent.norm().max(1e-9);
    Contact {
        point: Vector3::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1)),
        normal,
        f_normal,
        f_tangent: tangent * (mu * f_normal * rng.random_range(0.0..2.0)),
        source: 0,
    }
}

/// Friction-cone predicate against a component-wise restatement.
pub fn friction_cone_oracle(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    let trials = 5000;
    for _ in 0..trials {
        let mu = rng.random_range(0.1..1.0);
        let n = rng.random_range(0..5);
        let contacts: Vec<Contact> = (0..n).map(|_| random_contact(&mut rng, mu)).collect();
        let oracle = !contacts.is_empty()
            && contacts.iter().all(|c| {
                let t = c.f_tangent;
                (t.x * t.x + t.y * t.y + t.z * t.z).sqrt() <= mu * c.f_normal
            });
        if friction_cone_check(&contacts, mu) != oracle {
            mismatches += 1;
        }
    }
    Ok((mismatches == 0, format!("{mismatches} disagreements in {trials} contact sets")))
}

/// Net force and torque against explicit cross-product components.
pub fn wrench_oracle(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..2000 {
        let contacts: Vec<Contact> = (0..rng.random_range(0..8)).map(|_| random_contact(&mut rng, 0.5)).collect();
        let com = Vector3::new(rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05));
        let (force, torque) = contact_wrench(&contacts, &com);
        let (mut f, mut tq) = ([0.0f64; 3], [0.0f64; 3]);
        for c in &contacts {
            let fc = [
                -c.normal.x * c.f_normal + c.f_tangent.x,
                -c.normal.y * c.f_normal + c.f_tangent.y,
                -c.normal.z * c.f_normal + c.f_tangent.z,
            ];
            let r = [c.point.x - com.x, c.point.y - com.y, c.point.z - com.z];
            for k in 0..3 {
                f[k] += fc[k];
            }
            tq[0] += r[1] * fc[2] - r[2] * fc[1];
            tq[1] += r[2] * fc[0] - r[0] * fc[2];
            tq[2] += r[0] * fc[1] - r[1] * fc[0];
        }
        for k in 0..3 {
            worst = worst.max((force[k] - f[k]).abs()).max((torque[k] - tq[k]).abs());
        }
    }
    Ok((worst < 1e-9, format!("max abs error {worst:.2e}")))
}

/// Dependent joints are fixed multiples of the commanded flexion.
pub fn coupling_ratios(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dip = [0.77, 0.75, 0.75, 0.57];
    let mut bad = 0;
    for _ in 0..2000 {
        let theta = rng.random_range(0.0..1.6);
        if coupled_joints(0, theta) != vec![theta, 0.5 * theta] {
            bad += 1;
        }
        for finger in 1..5 {
            if coupled_joints(finger, theta) != vec![0.67 * theta, theta, dip[finger - 1] * theta] {
                bad += 1;
            }
        }
    }
    Ok((bad == 0, format!("{bad} mismatching digit postures")))
}

/// Expected next stage and reward of a flag set, restated from the event
/// precedence rules. `None` when the flags include an event foreign to
/// the stage.
fn precedence_oracle(stage: StageId, flags: EventFlags, r: &TransitionRewards, cone: bool) -> Option<(StageId, f64)> {
    let foreign = match stage {
        StageId::Approach => flags.gor || flags.fail || flags.succ,
        _ => flags.arrive || flags.aor,
    };
    if foreign {
        return None;
    }
    Some(match stage {
        StageId::Approach if flags.arrive => (StageId::Grasp, r.arrive),
        StageId::Approach if flags.aor => (StageId::OutOfReach, r.aor),
        StageId::Grasp if flags.succ => (StageId::GraspSuccess, r.succ + if cone { r.cone } else { 0.0 }),
        StageId::Grasp if flags.gor => (StageId::OutOfReach, r.gor),
        StageId::Grasp if flags.fail => (StageId::GraspFailure, r.fail),
        s => (s, 0.0),
    })
}

/// Every flag combination in both active stages.
pub fn event_precedence() -> Result<(bool, String)> {
    let rewards = TransitionRewards::default();
    let machine = RewardMachine::with_defaults(TransitionTable::from_rewards(&rewards))?;
    let mut bad = 0;
    let mut cases = 0;
    for stage in [StageId::Approach, StageId::Grasp] {
        for bits in 0..32u8 {
            for cone in [false, true] {
                cases += 1;
                let flags = EventFlags::from_bits(bits);
                let mut st = machine.start();
                if stage == StageId::Grasp {
                    machine.step(&mut st, EventFlags::only(Event::Arrive), false)?;
                }
                let got = machine.step(&mut st, flags, cone);
                let ok = match (precedence_oracle(stage, flags, &rewards, cone), got) {
                    (None, Err(Error::InvalidEvent { .. })) => true,
                    (Some((next, reward)), Ok(step)) => step.next == next && step.reward == reward && st.current == next,
                    _ => false,
                };
                bad += !ok as usize;
            }
        }
    }
    Ok((bad == 0, format!("{bad} of {cases} flag combinations disagree")))
}

/// Random event streams: the rewards paid equal the rewards of the
/// transitions taken, each paid once, and terminal stages pay nothing more.
pub fn reward_accounting(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut bad = 0;
    for _ in 0..2000 {
        let rewards = TransitionRewards {
            arrive: rng.random_range(0.0..20.0),
            aor: rng.random_range(-40.0..-21.0),
            gor: rng.random_range(-20.0..-11.0),
            fail: rng.random_range(-10.0..-0.5),
            succ: rng.random_range(1.0..200.0),
            cone: rng.random_range(0.0..40.0),
        };
        let machine = RewardMachine::with_defaults(TransitionTable::from_rewards(&rewards))?;
        let mut st = machine.start();
        let (mut paid, mut expected) = (0.0, 0.0);
        let mut transitions = 0;
        for _ in 0..50 {
            if st.is_terminal() {
                break;
            }
            let mut flags = EventFlags::default();
            for e in Event::ALL {
                if e.source_stage() == st.current && rng.random_bool(0.15) {
                    flags.set(e, true);
                }
            }
            let cone = rng.random_bool(0.5);
            let (next, r) = precedence_oracle(st.current, flags, &rewards, cone).expect("flags drawn from the stage");
            let step = machine.step(&mut st, flags, cone)?;
            paid += step.reward;
            expected += r;
            transitions += step.transitioned as usize;
            if step.next != next {
                bad += 1;
            }
        }
        if st.is_terminal() && machine.step(&mut st, EventFlags::default(), true).is_ok() {
            bad += 1;
        }
        if st.history.len() != transitions + 1 {
            bad += 1;
        }
        worst = worst.max((paid - expected).abs()).max((st.transition_total() - expected).abs());
    }
    Ok((bad == 0 && worst < 1e-9, format!("max abs error {worst:.2e}, {bad} structural violations")))
}

/// Each ordering rule rejects a table that breaks it, naming the rule.
pub fn table_ordering() -> Result<(bool, String)> {
    if let Err(e) = TransitionTable::default().validate() {
        return Ok((false, format!("default table rejected: {e}")));
    }
    type Breaker = fn(&mut TransitionRewards);
    let cases: [(Breaker, &str); 6] = [
        (|r| r.arrive = -1.5, "R_arrive > -1"),
        (|r| r.aor = -5.0, "R_aor < R_gor"),
        (|r| {
            r.gor = 0.5;
            r.aor = -1.0;
        }, "R_gor < 0"),
        (|r| r.fail = -15.0, "R_gor < R_fail"),
        (|r| r.fail = 0.0, "R_fail < 0"),
        (|r| r.succ = -1.0, "R_succ > 0"),
    ];
    let mut missed = Vec::new();
    for (brk, rule) in cases {
        let mut r = TransitionRewards::default();
        brk(&mut r);
        match TransitionTable::from_rewards(&r).validate() {
            Err(e) if e.to_string().contains(rule) => {}
            _ => missed.push(rule),
        }
    }
    let mut t = TransitionTable::default();
    t.entries[0].to = StageId::GraspSuccess;
    if t.validate().is_ok() {
        missed.push("Approach -> GraspSuccess");
    }
    Ok((missed.is_empty(), if missed.is_empty() { "7 violations rejected".into() } else { format!("accepted: {missed:?}") }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResetExtremes {
    pub position: f64,
    pub yaw_degrees: f64,
    pub joint: f64,
}

/// Largest perturbation seen over `n` randomized resets spread across
/// `tasks`: per-axis object offset, object rotation angle and initial
/// flexion.
pub fn reset_extremes(tasks: &[TaskSpec], cfg: &EnvConfig, n: usize, seed: u64) -> Result<ResetExtremes> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut envs = tasks.iter().map(|t| GraspEnv::new(t.clone(), cfg.clone())).collect::<Result<Vec<_>>>()?;
    let mut worst = ResetExtremes {
        position: 0.0,
        yaw_degrees: 0.0,
        joint: 0.0,
    };
    for i in 0..n {
        let env = &mut envs[i % tasks.len()];
        env.reset(&mut rng, true);
        let nominal = &env.task().object;
        let d = env.object().position - nominal.position;
        worst.position = worst.position.max(d.amax());
        let rot: UnitQuaternion<f64> = env.object().orient * nominal.orient.inverse();
        worst.yaw_degrees = worst.yaw_degrees.max(rot.angle().to_degrees());
        for t in env.hand().theta_pip {
            worst.joint = worst.joint.max(t.abs());
        }
    }
    Ok(worst)
}

pub fn reset_bounds(tasks: &[TaskSpec], cfg: &EnvConfig, n: usize, seed: u64) -> Result<(bool, String)> {
    let w = reset_extremes(tasks, cfg, n, seed)?;
    let ok = w.position <= 0.003 && w.yaw_degrees <= 11.5 && w.joint <= 0.02;
    Ok((
        ok,
        format!(
            "{n} resets: max offset {:.4} m, max rotation {:.3} deg, max joint {:.4} rad",
            w.position, w.yaw_degrees, w.joint
        ),
    ))
}

/// The property suites, in a fixed order.
pub fn run_property_suites(seed: u64) -> Vec<CheckResult> {
    vec![
        timed("gradient check", || gradient_check(seed)),
        timed("GAE lambda=0 one-step form", || gae_one_step(seed)),
        timed("friction-cone oracle", || friction_cone_oracle(seed)),
        timed("wrench cross-product oracle", || wrench_oracle(seed)),
        timed("joint-coupling ratios", || coupling_ratios(seed)),
        timed("exactly-once reward accounting", || reward_accounting(seed)),
        timed("transition-table ordering", table_ordering),
        timed("event precedence", event_precedence),
    ]
}
