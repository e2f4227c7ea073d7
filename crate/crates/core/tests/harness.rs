use std::fs;
use std::path::Path;

use crm_grasp::agent::{AlwaysSuccessEnv, EnvPool, Environment, StopReason};
use crm_grasp::approx::Checkpoint;
use crm_grasp::env::RewardMode;
use crm_grasp::harness::{
    build_suite, emit_report, run_eval, run_train, task_pool, train_seed, EvalReport, ExperimentConfig, IdleController,
    RunPaths, CURVE_HEADER, EVAL_HEADER, REFERENCE_LENGTH, REFERENCE_SUCCESS,
};
use crm_grasp::Error;

fn smoke(out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_json(
        r#"{
            "train": { "base_lr": 0.001, "epochs_per_batch": 2, "hidden": [16, 16],
                       "horizon": 256, "n_envs": 2, "total_timesteps": 3000 },
            "harness": { "seeds": [1], "suite": ["lift"], "save_every": 2 }
        }"#,
    )
    .unwrap();
    cfg.harness.out = out.to_path_buf();
    cfg.validate().unwrap();
    cfg
}

fn curve_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CURVE_HEADER));
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn training_writes_consistent_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke(dir.path());
    let summaries = run_train(&cfg, false).unwrap();
    assert_eq!(summaries.len(), 1);
    let s = &summaries[0];
    assert_eq!(s.stop, StopReason::TimestepBudget);

    let paths = RunPaths::new(dir.path(), RewardMode::Full, 1);
    let rows = curve_rows(&paths.curves());
    assert_eq!(rows.len() as u64, s.episodes);
    let mut last_ts = 0;
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r.len(), 8);
        assert_eq!(r[0].parse::<u64>().unwrap(), i as u64 + 1);
        let ts: u64 = r[1].parse().unwrap();
        assert!(ts >= last_ts);
        last_ts = ts;
        let succ: f64 = r[2].parse().unwrap();
        assert!((0.0..=1.0).contains(&succ));
        assert_eq!(r[7].split(';').count(), 6);
    }
    assert!(last_ts <= s.timesteps);
    for p in [paths.final_checkpoint(), paths.best_checkpoint()] {
        Checkpoint::load(&p).unwrap();
    }
    assert!(paths.summary().is_file() && paths.state().is_file());
}

#[test]
fn same_seed_gives_identical_curves() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_train(&smoke(a.path()), false).unwrap();
    run_train(&smoke(b.path()), false).unwrap();
    let ca = fs::read(RunPaths::new(a.path(), RewardMode::Full, 1).curves()).unwrap();
    let cb = fs::read(RunPaths::new(b.path(), RewardMode::Full, 1).curves()).unwrap();
    assert_eq!(ca, cb);
}

#[test]
fn resume_continues_the_episode_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = smoke(dir.path());
    cfg.train.total_timesteps = 1500;
    let first = run_train(&cfg, false).unwrap()[0].clone();
    cfg.train.total_timesteps = 3000;
    let second = run_train(&cfg, true).unwrap()[0].clone();
    assert!(second.timesteps > first.timesteps);
    let rows = curve_rows(&RunPaths::new(dir.path(), RewardMode::Full, 1).curves());
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0].parse::<u64>().unwrap(), i as u64 + 1);
    }
    assert_eq!(rows.len() as u64, second.episodes);
}

#[test]
fn stub_environment_stops_at_episode_one_hundred() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke(dir.path());
    let pool = EnvPool::new(4, RewardMode::Full, true, || Ok(vec![Box::new(AlwaysSuccessEnv) as Box<dyn Environment>])).unwrap();
    let paths = RunPaths::new(dir.path(), RewardMode::Full, 0);
    let s = train_seed(&cfg, cfg.machine().unwrap(), pool, 0, &paths, false).unwrap();
    assert_eq!(s.stop, StopReason::EarlyStop);
    assert_eq!(s.episodes, 100);
    let rows = curve_rows(&paths.curves());
    assert_eq!(rows.last().unwrap()[0], "100");
}

#[test]
fn idle_controller_never_succeeds_and_runs_out_the_budget() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = smoke(dir.path());
    cfg.harness.suite = vec![crm_grasp::env::Affordance::Lift, crm_grasp::env::Affordance::Pull];
    let tasks = build_suite(&cfg).unwrap();
    let report = run_eval(&IdleController, &tasks, &cfg.env, &cfg.machine().unwrap(), 30, 4).unwrap();
    assert_eq!(report.labels(), vec!["Lift", "Pull", "Overall"]);
    let overall = report.overall();
    assert_eq!(overall.n_trials, 30);
    assert_eq!(overall.successes, 0);
    assert_eq!(overall.mean_episode_length(), cfg.env.approach_budget as f64);
    let parts = &report.rows[..2];
    assert_eq!(parts.iter().map(|r| r.n_trials).sum::<u64>(), overall.n_trials);
    assert_eq!(parts.iter().map(|r| r.total_length).sum::<u64>(), overall.total_length);
    assert!(report.to_csv().starts_with(EVAL_HEADER));
}

#[test]
fn evaluation_rejects_zero_trials() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke(dir.path());
    let tasks = build_suite(&cfg).unwrap();
    let err = run_eval(&IdleController, &tasks, &cfg.env, &cfg.machine().unwrap(), 0, 0).unwrap_err();
    assert!(matches!(err, Error::Config { .. }));
}

#[test]
fn report_carries_reference_on_overall_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke(dir.path());
    let tasks = build_suite(&cfg).unwrap();
    let machine = cfg.machine().unwrap();
    let a = run_eval(&IdleController, &tasks, &cfg.env, &machine, 5, 0).unwrap();
    let (text, csv) = emit_report(&[a.clone(), a.clone()], &["x", "y"]).unwrap();
    assert_eq!(text.matches(&format!("{REFERENCE_LENGTH:.2}")).count(), 1);
    let overall = csv.lines().find(|l| l.starts_with("Overall")).unwrap();
    assert!(overall.ends_with(&format!(",{REFERENCE_SUCCESS},{REFERENCE_LENGTH}")));
    let lift = csv.lines().find(|l| l.starts_with("Lift")).unwrap();
    assert!(lift.ends_with(",,"));

    let mut other: EvalReport = a.clone();
    other.rows[0].label = "Pull".into();
    assert!(emit_report(&[a, other], &["x", "y"]).is_err());
}

#[test]
fn config_errors_name_the_key() {
    let err = ExperimentConfig::from_json(r#"{"train": {"gama": 0.9}}"#).unwrap_err();
    assert!(err.to_string().contains("gama"), "{err}");
    let mut cfg = ExperimentConfig::default();
    cfg.harness.seeds = vec![1, 1];
    assert!(matches!(cfg.validate(), Err(Error::Config { .. })));
}

#[test]
fn pool_cycles_suite_tasks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke(dir.path());
    let tasks = build_suite(&cfg).unwrap();
    let pool = task_pool(&tasks, &cfg, RewardMode::IntraOnly).unwrap();
    assert_eq!(pool.len(), cfg.train.n_envs);
    assert_eq!(pool.mode, RewardMode::IntraOnly);
}
