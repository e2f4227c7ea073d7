use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ExperimentConfig;
use crate::env::{load_tasks, TaskSpec};
use crate::error::{Error, Result};
use crate::taxonomy::generate_task;

/// Loads the configured task file, or generates one task per listed
/// affordance from the suite seed.
pub fn build_suite(cfg: &ExperimentConfig) -> Result<Vec<TaskSpec>> {
    let h = &cfg.harness;
    let tasks = match &h.task_file {
        Some(path) => load_tasks(path)?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(h.suite_seed);
            h.suite
                .iter()
                .enumerate()
                .map(|(i, &aff)| {
                    let name = format!("{}_{i}", aff.title().to_lowercase());
                    let t = generate_task(&mut rng, aff, &name, &cfg.taxonomy, &cfg.env, |_| true)?;
                    info!("generated {} ({:?}, {:?})", t.name, t.topology, t.object.shape);
                    Ok(t)
                })
                .collect::<Result<_>>()?
        }
    };
    if tasks.is_empty() {
        return Err(Error::Task("task suite is empty".into()));
    }
    for t in &tasks {
        t.validate(cfg.env.events.workspace_half)?;
    }
    Ok(tasks)
}
