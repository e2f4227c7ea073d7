use crm_grasp_demo::{hand_pose, reward_curves, rule_topology, topology_names, MachineDemo};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn every_topology_has_a_pose() {
    let names = parse(&topology_names());
    let names = names.as_array().unwrap();
    assert_eq!(names.len(), 6);
    for n in names {
        let pose = parse(&hand_pose(n.as_str().unwrap(), 0.8).unwrap());
        assert_eq!(pose["digits"].as_array().unwrap().len(), 5);
    }
    assert!(hand_pose("fist", 0.5).is_err());
}

#[test]
fn flexion_moves_only_active_digits() {
    let open = parse(&hand_pose("pPdAb2", 0.0).unwrap());
    let closed = parse(&hand_pose("pPdAb2", 1.2).unwrap());
    for d in 0..5 {
        let moved = open["digits"][d]["chain"][2] != closed["digits"][d]["chain"][2];
        assert_eq!(moved, closed["digits"][d]["active"].as_bool().unwrap(), "digit {d}");
    }
}

#[test]
fn reward_curves_have_expected_ends() {
    let c = parse(&reward_curves(0.2, 0, 11).unwrap());
    let approach = c["approach"].as_array().unwrap();
    assert_eq!(approach.len(), 11);
    // zero distance costs exp(0)
    assert_eq!(approach[0][1].as_f64().unwrap(), -1.0);
    let grasp = c["grasp"].as_array().unwrap();
    let last = grasp.last().unwrap()[1].as_f64().unwrap();
    let first = grasp[0][1].as_f64().unwrap();
    assert!(last > first);
    assert_eq!(last, -2.0);
    assert!(reward_curves(0.0, 0, 11).is_err());
}

#[test]
fn rule_table_lookup() {
    assert_eq!(rule_topology("sphere", 0.04, 0.1, "lift").unwrap(), "pPdAb23");
    assert_eq!(rule_topology("box", 0.1, 0.1, "press").unwrap(), "platform");
    assert!(rule_topology("torus", 0.1, 0.1, "lift").is_err());
}

#[test]
fn machine_walks_to_success() {
    let mut m = MachineDemo::new();
    assert_eq!(parse(&m.snapshot())["stage"], "approach");
    let s = parse(&m.step_inner("", false).unwrap());
    assert_eq!(s["reward"], 0.0);
    let s = parse(&m.step_inner("e_arrive", false).unwrap());
    assert_eq!((s["to"].as_str(), s["reward"].as_f64()), (Some("grasp"), Some(10.0)));
    let s = parse(&m.step_inner("e_fail,e_succ", true).unwrap());
    assert_eq!((s["to"].as_str(), s["reward"].as_f64()), (Some("grasp_success"), Some(120.0)));
    let snap = parse(&m.snapshot());
    assert_eq!(snap["total"], 130.0);
    assert!(m.step_inner("", false).is_err());
    m.reset();
    assert_eq!(parse(&m.snapshot())["steps"], 0);
    assert!(m.step_inner("e_succ", false).is_err());
}
