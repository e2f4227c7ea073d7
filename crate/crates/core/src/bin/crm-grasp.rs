use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use crm_grasp::agent::make_baseline;
use crm_grasp::env::{save_tasks, RewardMode};
use crm_grasp::harness::check::{reset_bounds, run_property_suites};
use crm_grasp::harness::{
    build_suite, emit_report, eval_checkpoint, run_train, EvalReport, EvalRow, ExperimentConfig, RunPaths, RunSummary,
};
use crm_grasp::taxonomy::generate::canonical_cylinder_lift;
use crm_grasp::taxonomy::generate_tasks;

#[derive(Parser)]
#[command(name = "crm-grasp", version, about = "Staged dexterous grasping with contextual reward machines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON); defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<RewardMode>,
    /// Output directory (or file, for gen-tasks).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train every configured seed.
    Train {
        #[command(flatten)]
        common: Common,
        /// Continue from saved state where present.
        #[arg(long)]
        resume: bool,
    },
    /// Evaluate a checkpoint's mean policy on the task suite.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Evaluate trained runs of every mode and print a comparison table.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Train all modes first.
        #[arg(long)]
        train: bool,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Generate a task suite file.
    GenTasks {
        #[command(flatten)]
        common: Common,
        /// Number of tasks drawn across all affordances; without it the
        /// configured suite is written.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Run the oracle and property suites.
    Check {
        #[command(flatten)]
        common: Common,
    },
}

fn parse_mode(s: &str) -> std::result::Result<RewardMode, String> {
    s.parse().map_err(|e: crm_grasp::Error| e.to_string())
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.harness.seeds = vec![s];
    }
    if let Some(m) = common.mode {
        cfg.harness.mode = m;
    }
    if let Some(o) = &common.out {
        cfg.harness.out = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Sums per-seed reports; counts add exactly.
fn merge(reports: Vec<EvalReport>) -> EvalReport {
    let mut rows: Vec<EvalRow> = reports[0].rows.clone();
    for r in &reports[1..] {
        for (acc, row) in rows.iter_mut().zip(&r.rows) {
            acc.n_trials += row.n_trials;
            acc.successes += row.successes;
            acc.total_length += row.total_length;
        }
    }
    EvalReport { rows }
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

fn train(common: Common, resume: bool) -> Result<()> {
    let cfg = load(&common)?;
    for s in run_train(&cfg, resume)? {
        println!(
            "{} seed {}: {} episodes, success_100 {:.3}, ep_len_100 {:.1}, stop {:?}",
            s.mode, s.seed, s.episodes, s.success_100, s.ep_len_100, s.stop
        );
    }
    Ok(())
}

fn eval(common: Common, checkpoint: PathBuf, trials: Option<usize>) -> Result<()> {
    let cfg = load(&common)?;
    let tasks = build_suite(&cfg)?;
    let n = trials.unwrap_or(cfg.harness.eval_trials);
    let seed = common.seed.unwrap_or(cfg.harness.eval_seed);
    let report = eval_checkpoint(&checkpoint, &tasks, &cfg.env, &cfg.machine()?, n, seed)?;
    let (text, _) = emit_report(std::slice::from_ref(&report), &["model"])?;
    print!("{text}");
    let out = cfg.harness.out.join("eval.csv");
    write(&out, &report.to_csv())?;
    info!("wrote {}", out.display());
    Ok(())
}

fn compare(common: Common, do_train: bool, trials: Option<usize>) -> Result<()> {
    let cfg = load(&common)?;
    let tasks = build_suite(&cfg)?;
    let machine = cfg.machine()?;
    let n = trials.unwrap_or(cfg.harness.eval_trials);
    let (mut reports, mut labels, mut lines) = (Vec::new(), Vec::new(), Vec::new());
    for mode in RewardMode::ALL {
        let mut mode_cfg = cfg.clone();
        mode_cfg.harness.mode = mode;
        if do_train {
            run_train(&mode_cfg, false)?;
        }
        let mut per_seed = Vec::new();
        let mut summaries: Vec<RunSummary> = Vec::new();
        for &seed in &cfg.harness.seeds {
            let paths = RunPaths::new(&cfg.harness.out, mode, seed);
            if !paths.final_checkpoint().is_file() {
                continue;
            }
            per_seed.push(eval_checkpoint(&paths.final_checkpoint(), &tasks, &cfg.env, &machine, n, cfg.harness.eval_seed)?);
            if let Ok(text) = fs::read_to_string(paths.summary()) {
                summaries.push(serde_json::from_str(&text)?);
            }
        }
        if per_seed.is_empty() {
            continue;
        }
        for &t in &cfg.harness.thresholds {
            // runs that never got there count as unbounded
            let eps = summaries
                .iter()
                .map(|s| s.episodes_to(t).map_or(f64::INFINITY, |e| e as f64))
                .collect();
            lines.push(format!("{} median episodes to {t}: {}", mode, median(eps)));
        }
        let lens = summaries.iter().map(|s| s.ep_len_100).collect();
        lines.push(format!("{} median final ep_len_100: {:.2}", mode, median(lens)));
        reports.push(merge(per_seed));
        labels.push(make_baseline(mode).1);
    }
    if reports.is_empty() {
        bail!("no trained runs under {}", cfg.harness.out.display());
    }
    let (text, csv) = emit_report(&reports, &labels)?;
    print!("{text}");
    for l in &lines {
        println!("{l}");
    }
    write(&cfg.harness.out.join("compare.txt"), &format!("{text}\n{}\n", lines.join("\n")))?;
    write(&cfg.harness.out.join("compare.csv"), &csv)?;
    Ok(())
}

fn gen_tasks(common: Common, count: Option<usize>) -> Result<()> {
    let cfg = load(&common)?;
    let tasks = match count {
        Some(n) => generate_tasks(common.seed.unwrap_or(cfg.harness.suite_seed), n, &cfg.taxonomy, &cfg.env)?,
        None => {
            let mut c = cfg.clone();
            c.harness.task_file = None;
            if let Some(s) = common.seed {
                c.harness.suite_seed = s;
            }
            build_suite(&c)?
        }
    };
    let out = common.out.unwrap_or_else(|| PathBuf::from("tasks.json"));
    if let Some(dir) = out.parent() {
        fs::create_dir_all(dir)?;
    }
    save_tasks(&out, &tasks)?;
    println!("wrote {} tasks to {}", tasks.len(), out.display());
    Ok(())
}

fn check(common: Common) -> Result<bool> {
    let cfg = load(&common)?;
    let seed = common.seed.unwrap_or(0);
    let mut results = run_property_suites(seed);
    let task = canonical_cylinder_lift(&cfg.env)?;
    let t = std::time::Instant::now();
    let (passed, detail) = reset_bounds(&[task], &cfg.env, 10_000, seed)?;
    results.push(crm_grasp::harness::check::CheckResult {
        name: "reset perturbation bounds",
        passed,
        detail,
        seconds: t.elapsed().as_secs_f64(),
    });
    for r in &results {
        println!("{} {:<34} {} ({:.2}s)", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail, r.seconds);
    }
    Ok(results.iter().all(|r| r.passed))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Train { common, resume } => train(common, resume)?,
        Command::Eval { common, checkpoint, trials } => eval(common, checkpoint, trials)?,
        Command::Compare { common, train, trials } => compare(common, train, trials)?,
        Command::GenTasks { common, count } => gen_tasks(common, count)?,
        Command::Check { common } => return check(common),
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            let config_error = e
                .chain()
                .any(|c| matches!(c.downcast_ref::<crm_grasp::Error>(), Some(crm_grasp::Error::Config { .. })));
            ExitCode::from(if config_error { 2 } else { 3 })
        }
    }
}
