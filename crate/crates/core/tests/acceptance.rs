//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits successfully either way; a criterion that is not met is reported,
//! not hidden. Training criteria take several minutes on one core.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crm_grasp::agent::{lr_schedule, AlwaysSuccessEnv, EnvPool, Environment, StopReason};
use crm_grasp::env::RewardMode;
use crm_grasp::harness::check::{reset_bounds, run_property_suites};
use crm_grasp::harness::{build_suite, task_pool, train_seed, ExperimentConfig, RunPaths, RunSummary};
use crm_grasp::taxonomy::{label_oracle, sample_features, train_selector, TaxonomyConfig, TopologySelector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);

fn config(name: &str) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn train_all(cfg: &ExperimentConfig, mode: RewardMode, out: &Path) -> crm_grasp::Result<Vec<RunSummary>> {
    let tasks = build_suite(cfg)?;
    cfg.harness
        .seeds
        .iter()
        .map(|&seed| {
            let pool = task_pool(&tasks, cfg, mode)?;
            train_seed(cfg, cfg.machine()?, pool, seed, &RunPaths::new(out, mode, seed), false)
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn to_threshold(runs: &[RunSummary], t: f64) -> f64 {
    median(runs.iter().map(|s| s.episodes_to(t).map_or(f64::INFINITY, |e| e as f64)).collect())
}

fn property_suites() -> Outcome {
    let t = Instant::now();
    let results = run_property_suites(0);
    let secs = t.elapsed().as_secs_f64();
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    (
        failed.is_empty() && secs < 60.0,
        format!("{}/{} suites in {secs:.2}s; failed {failed:?}", results.len() - failed.len(), results.len()),
    )
}

fn full_mode_reaches_ninety(full: &[RunSummary], wall: f64) -> Outcome {
    let hits = full.iter().filter(|s| s.episodes_to(0.9).is_some_and(|e| e <= 4000)).count();
    let per_seed: Vec<String> = full
        .iter()
        .map(|s| format!("seed {}: {}", s.seed, s.episodes_to(0.9).map_or("never".into(), |e| e.to_string())))
        .collect();
    (
        hits >= 4 && wall <= 1800.0,
        format!("{hits}/{} seeds reach 0.90 within 4000 episodes ({}); {wall:.0}s", full.len(), per_seed.join(", ")),
    )
}

fn ablation_ordering(full: &[RunSummary], trans: &[RunSummary], intra: &[RunSummary]) -> Outcome {
    let (f, t, i) = (to_threshold(full, 0.8), to_threshold(trans, 0.8), to_threshold(intra, 0.8));
    let len = |runs: &[RunSummary]| median(runs.iter().map(|s| s.ep_len_100).collect());
    let (lf, lt, li) = (len(full), len(trans), len(intra));
    let ordered = f < t && t < i;
    let shortest = lf < lt && lf < li;
    (
        ordered && shortest,
        format!(
            "median episodes to 0.80: full {f}, transition_only {t}, intra_only {i}; \
             median final ep_len_100: full {lf:.1}, transition_only {lt:.1}, intra_only {li:.1}"
        ),
    )
}

fn stub_stops_at_hundred(out: &Path) -> crm_grasp::Result<Outcome> {
    let cfg = config("smoke.json");
    let pool = EnvPool::new(cfg.train.n_envs, RewardMode::Full, true, || {
        Ok(vec![Box::new(AlwaysSuccessEnv) as Box<dyn Environment>])
    })?;
    let paths = RunPaths::new(out, RewardMode::Full, 0);
    let s = train_seed(&cfg, cfg.machine()?, pool, 0, &paths, false)?;
    let curves = fs::read_to_string(paths.curves())?;
    let last = curves.lines().last().and_then(|l| l.split(',').next()).unwrap_or("").to_string();
    Ok((
        s.stop == StopReason::EarlyStop && s.episodes == 100 && last == "100",
        format!("stopped by {:?} after {} episodes, last curve row {last}", s.stop, s.episodes),
    ))
}

fn schedule() -> Outcome {
    let got = [0.2, 0.5, 0.8].map(|p| lr_schedule(p, 3e-5));
    (got == [3e-5, 2.7e-5, 2.4e-5], format!("{got:?}"))
}

fn resets() -> crm_grasp::Result<Outcome> {
    let cfg = config("desk.json");
    let tasks = build_suite(&cfg)?;
    reset_bounds(&tasks, &cfg.env, 10_000, 0)
}

fn selector() -> crm_grasp::Result<Outcome> {
    let cfg = TaxonomyConfig::default();
    let sample = |n: usize, seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let f = sample_features(&mut rng, &cfg);
                let y = label_oracle(&f, cfg.size_threshold);
                (f, y)
            })
            .collect::<Vec<_>>()
    };
    let train = sample(cfg.selector.n_train, 1);
    let (net, _) = train_selector(&train, &cfg.selector, &mut ChaCha8Rng::seed_from_u64(2))?;
    let sel = TopologySelector::with_net(net, cfg.size_threshold);
    let agree = sample(1000, 3).iter().filter(|(f, y)| sel.select(f) == *y).count();
    Ok((agree >= 990, format!("{agree}/1000 held-out samples agree")))
}

fn deterministic(out: &Path) -> crm_grasp::Result<Outcome> {
    // the tuned config, cut to 500 episodes so the check stays quick
    let mut cfg = config("desk.json");
    cfg.train.max_episodes = 500;
    cfg.harness.seeds = vec![3];
    let mut files = Vec::new();
    for run in ["a", "b"] {
        cfg.harness.out = out.join(run);
        let seed = cfg.harness.seeds[0];
        let tasks = build_suite(&cfg)?;
        let paths = RunPaths::new(&cfg.harness.out, RewardMode::Full, seed);
        train_seed(&cfg, cfg.machine()?, task_pool(&tasks, &cfg, RewardMode::Full)?, seed, &paths, false)?;
        files.push(fs::read(paths.curves())?);
    }
    Ok((files[0] == files[1], format!("{} and {} bytes", files[0].len(), files[1].len())))
}

fn report(n: u32, name: &str, outcome: crm_grasp::Result<Outcome>) {
    let (ok, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    println!("{} [{n}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
}

fn main() {
    // `cargo test -- --list` and filtered runs should not start training
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let tmp = tempfile::tempdir().expect("temp dir");
    let out = |p: &str| -> PathBuf { tmp.path().join(p) };

    report(1, "property suites", Ok(property_suites()));

    let desk = config("desk.json");
    let started = Instant::now();
    let full = train_all(&desk, RewardMode::Full, &out("desk"));
    let wall = started.elapsed().as_secs_f64();
    report(2, "full mode convergence", full.as_ref().map(|f| full_mode_reaches_ninety(f, wall)).map_err(clone_err));

    let baselines = train_all(&desk, RewardMode::TransitionOnly, &out("desk"))
        .and_then(|t| Ok((t, train_all(&desk, RewardMode::IntraOnly, &out("desk"))?)));
    let c3 = match (&full, &baselines) {
        (Ok(f), Ok((t, i))) => Ok(ablation_ordering(f, t, i)),
        (Err(e), _) | (_, Err(e)) => Err(clone_err(e)),
    };
    report(3, "ablation ordering", c3);

    report(4, "always-success stub early stop", stub_stops_at_hundred(&out("stub")));
    report(5, "learning-rate schedule", Ok(schedule()));
    report(6, "reset perturbation bounds", resets());
    report(7, "topology selector agreement", selector());
    report(8, "byte-identical curves", deterministic(&out("det")));
}

fn clone_err(e: &crm_grasp::Error) -> crm_grasp::Error {
    crm_grasp::Error::Task(e.to_string())
}
