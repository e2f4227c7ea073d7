use crm_grasp::agent::gae::advantages_for;
use crm_grasp::agent::{clipped_objective, early_stop, lr_schedule, StepRecord};
use crm_grasp::approx::policy::log_prob_grads;
use crm_grasp::approx::{Checkpoint, GaussianPolicyOutput, Mlp, NamedNet};
use crm_grasp::crm::{cumulative_reward, Event, EventFlags, RewardMachine, StageId, TransitionTable};
use crm_grasp::env::kinematics::{coupled_joints, ALPHA_DIP, ALPHA_MCP, ALPHA_TMCP};
use crm_grasp::env::{contact_wrench, friction_cone_check, Contact};
use crm_grasp::harness::check::run_property_suites;
use nalgebra::Vector3;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn vec3() -> impl Strategy<Value = Vector3<f64>> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(x, y, z)| Vector3::new(x, y, z))
}

fn contact() -> impl Strategy<Value = Contact> {
    (vec3(), vec3(), 0.0f64..5.0, vec3()).prop_map(|(point, n, f_normal, t)| {
        let normal = if n.norm() > 1e-3 { n.normalize() } else { Vector3::z() };
        // keep only the part of t orthogonal to the normal
        let f_tangent = t - normal * normal.dot(&t);
        Contact {
            point,
            normal,
            f_normal,
            f_tangent,
            source: 0,
        }
    })
}

fn record(env: usize, r: f64, rt: f64, v: f64, vn: f64, terminal: bool) -> StepRecord {
    StepRecord {
        env,
        stage: StageId::Grasp,
        abstract_obs: vec![],
        action: vec![],
        log_prob_old: 0.0,
        intra_reward: r,
        transition_reward: rt,
        value_estimate: v,
        next_value: vn,
        done: terminal,
        terminal,
        success: false,
    }
}

#[test]
fn oracle_suites_all_pass() {
    for r in run_property_suites(7) {
        assert!(r.passed, "{}: {}", r.name, r.detail);
    }
}

#[test]
fn schedule_values() {
    assert_eq!(lr_schedule(0.2, 3e-5), 3e-5);
    assert_eq!(lr_schedule(0.5, 3e-5), 2.7e-5);
    assert_eq!(lr_schedule(0.8, 3e-5), 2.4e-5);
}

proptest! {
    #[test]
    fn gae_without_lambda_is_one_step_td(
        rows in prop::collection::vec((0usize..3, -5.0f64..5.0, -20.0f64..100.0, -3.0f64..3.0, -3.0f64..3.0, any::<bool>()), 1..40),
        gamma in 0.5f64..1.0,
    ) {
        let records: Vec<StepRecord> = rows.iter().map(|&(e, r, rt, v, vn, t)| record(e, r, rt, v, vn, t)).collect();
        let a = advantages_for(&records, gamma, 0.0);
        for (adv, r) in a.advantages.iter().zip(&records) {
            let boot = if r.terminal { 0.0 } else { r.next_value };
            let expect = r.intra_reward + gamma * boot + r.transition_reward - r.value_estimate;
            prop_assert!((adv - expect).abs() < 1e-9);
        }
        for ((ret, adv), r) in a.returns.iter().zip(&a.advantages).zip(&records) {
            prop_assert!((ret - adv - r.value_estimate).abs() < 1e-9);
        }
    }

    #[test]
    fn gae_streams_do_not_mix(
        rows in prop::collection::vec((-5.0f64..5.0, -3.0f64..3.0, -3.0f64..3.0), 1..20),
        noise in prop::collection::vec((-5.0f64..5.0, -3.0f64..3.0, -3.0f64..3.0), 1..20),
    ) {
        let alone: Vec<StepRecord> = rows.iter().map(|&(r, v, vn)| record(0, r, 0.0, v, vn, false)).collect();
        let mut mixed = Vec::new();
        for (i, rec) in alone.iter().enumerate() {
            mixed.push(rec.clone());
            if let Some(&(r, v, vn)) = noise.get(i) {
                mixed.push(record(1, r, 0.0, v, vn, false));
            }
        }
        let a = advantages_for(&alone, 0.99, 0.95);
        let b = advantages_for(&mixed, 0.99, 0.95);
        let b0: Vec<f64> = mixed.iter().zip(&b.advantages).filter(|(r, _)| r.env == 0).map(|(_, a)| *a).collect();
        for (x, y) in a.advantages.iter().zip(&b0) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn clipped_objective_is_pessimistic(ratio in 0.0f64..3.0, adv in -10.0f64..10.0, eps in 0.05f64..0.5) {
        let c = clipped_objective(ratio, adv, eps);
        prop_assert!(c <= ratio * adv + 1e-12);
        prop_assert!(c <= ratio.clamp(1.0 - eps, 1.0 + eps) * adv + 1e-12);
        if adv > 0.0 {
            prop_assert!(c <= (1.0 + eps) * adv + 1e-12);
        }
    }

    #[test]
    fn schedule_never_increases(p in 0.0f64..1.0, q in 0.0f64..1.0, lr in 1e-6f64..1e-2) {
        let (a, b) = if p <= q { (p, q) } else { (q, p) };
        prop_assert!(lr_schedule(b, lr) <= lr_schedule(a, lr));
        prop_assert!(lr_schedule(b, lr) >= 0.8 * lr - 1e-18);
    }

    #[test]
    fn early_stop_needs_ninety_nine_of_last_hundred(prefix in prop::collection::vec(any::<bool>(), 0..50), misses in 0usize..4) {
        let mut h = prefix.clone();
        let mut tail = vec![true; 100];
        for m in tail.iter_mut().take(misses) {
            *m = false;
        }
        h.extend(tail);
        prop_assert_eq!(early_stop(&h), misses <= 1);
    }

    #[test]
    fn cone_check_matches_definition(cs in prop::collection::vec(contact(), 0..6), mu in 0.1f64..1.5) {
        let expect = !cs.is_empty() && cs.iter().all(|c| c.f_tangent.norm() <= mu * c.f_normal);
        prop_assert_eq!(friction_cone_check(&cs, mu), expect);
    }

    #[test]
    fn wrench_torque_shifts_with_reference_point(cs in prop::collection::vec(contact(), 1..6), a in vec3(), b in vec3()) {
        let (fa, ta) = contact_wrench(&cs, &a);
        let (fb, tb) = contact_wrench(&cs, &b);
        prop_assert!((fa - fb).norm() < 1e-12);
        // moving the reference point adds (b - a) x F
        prop_assert!((ta - tb - (b - a).cross(&fa)).norm() < 1e-9);
    }

    #[test]
    fn coupling_is_proportional(digit in 0usize..5, theta in 0.0f64..1.6) {
        let j = coupled_joints(digit, theta);
        if digit == 0 {
            prop_assert_eq!(j, vec![theta, ALPHA_TMCP * theta]);
        } else {
            prop_assert_eq!(j, vec![ALPHA_MCP * theta, theta, ALPHA_DIP[digit - 1] * theta]);
        }
    }

    #[test]
    fn machine_pays_each_transition_once(bits in prop::collection::vec(0u8..32, 1..30), cone in any::<bool>()) {
        let m = RewardMachine::with_defaults(TransitionTable::default()).unwrap();
        let mut st = m.start();
        let mut paid = Vec::new();
        for b in bits {
            if st.is_terminal() {
                prop_assert!(m.step(&mut st, EventFlags::default(), cone).is_err());
                break;
            }
            // only events that belong to the current stage
            let mut flags = EventFlags::from_bits(b);
            for e in Event::ALL {
                if e.source_stage() != st.current {
                    flags.set(e, false);
                }
            }
            let out = m.step(&mut st, flags, cone).unwrap();
            prop_assert_eq!(out.transitioned, flags.any());
            paid.push(out.reward);
        }
        prop_assert!(st.history.iter().filter(|t| t.event.is_some()).count() <= 2);
        prop_assert_eq!(cumulative_reward(&[], &paid), st.transition_total());
        if st.current == StageId::GraspSuccess {
            prop_assert_eq!(st.history.last().unwrap().reward, if cone { 120.0 } else { 100.0 });
        }
    }

    #[test]
    fn log_prob_gradient_matches_difference(
        xs in prop::collection::vec((-1.0f64..1.0, -1.5f64..0.5, -2.0f64..2.0), 1..5)
    ) {
        let mean: Vec<f64> = xs.iter().map(|x| x.0).collect();
        let log_std: Vec<f64> = xs.iter().map(|x| x.1).collect();
        let act: Vec<f64> = xs.iter().map(|x| x.2).collect();
        let (dm, _) = log_prob_grads(&mean, &log_std, &act);
        let h = 1e-6;
        for i in 0..mean.len() {
            let mut up = mean.clone();
            up[i] += h;
            let mut dn = mean.clone();
            dn[i] -= h;
            let num = (GaussianPolicyOutput::new(up, &log_std).log_prob(&act)
                - GaussianPolicyOutput::new(dn, &log_std).log_prob(&act)) / (2.0 * h);
            prop_assert!((num - dm[i]).abs() < 1e-5 * (1.0 + num.abs()));
        }
    }

    #[test]
    fn checkpoint_binary_roundtrip(seed in any::<u64>(), width in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Mlp::glorot(&[4, width, 2], &mut rng).unwrap();
        let ckpt = Checkpoint::new(vec![NamedNet::from_mlp("a", &net, &[-0.5, 0.25])]);
        let mut bytes = Vec::new();
        ckpt.write_binary(&mut bytes).unwrap();
        let back = Checkpoint::read_binary(bytes.as_slice()).unwrap();
        prop_assert_eq!(back.get("a").unwrap().to_mlp().unwrap(), net);
        prop_assert_eq!(&back.get("a").unwrap().log_std, &vec![-0.5, 0.25]);
    }
}
