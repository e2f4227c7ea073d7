//! Experiment plumbing: configuration, task suites, training runs with
//! resumable artifacts, evaluation, comparison tables and oracle checks.

pub mod check;
pub mod config;
pub mod eval;
pub mod report;
pub mod suite;
pub mod train;

pub use config::{CrmConfig, ExperimentConfig, HarnessConfig};
pub use eval::{eval_checkpoint, run_episode, run_eval, Controller, EvalReport, EvalRow, IdleController, EVAL_HEADER};
pub use report::{emit_report, REFERENCE_LENGTH, REFERENCE_SUCCESS};
pub use suite::build_suite;
pub use train::{run_train, task_pool, train_seed, Crossing, RunPaths, RunSummary, CURVE_HEADER};
