//! Config-driven experiments: paired clean/poisoned runs per seed, the
//! attack-time scaling benchmark and result files.

mod bench;
mod config;
mod output;
mod run;

pub use bench::{linear_fit, scaling_benchmark, BenchReport, BenchRow, LinearFit};
pub use config::{apply_overrides, AttackMethod, AttackSpec, DatasetSpec, ExperimentConfig, ModelKind, ModelSpec};
pub use output::{emit_results, prepare_dir, Summary, HISTOGRAM_BINS};
pub use run::{
    prepare, replay, resolved_attack, run_experiment, run_paired, run_seed, test_accuracy, Prepared, RunOutput,
    RunResult,
};
