use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::run::{RunOutput, RunResult};
use crate::dist::{write_divergence_csv, write_worker_csv};
use crate::error::{Error, Result};
use crate::stealth::{histogram, write_histogram_csv};

pub const HISTOGRAM_BINS: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub version: String,
    pub config: ExperimentConfig,
    pub runs: Vec<RunResult>,
}

impl Summary {
    pub fn new(config: &ExperimentConfig, outputs: &[RunOutput]) -> Summary {
        Summary {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            runs: outputs.iter().map(|o| o.result.clone()).collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Summary> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))
    }
}

/// Creates `dir`, refusing a non-empty existing directory unless `force`.
pub fn prepare_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let nonempty = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .next()
            .is_some();
        if nonempty && !force {
            return Err(Error::config(
                "output",
                format!("{} already exists; pass --force to overwrite", dir.display()),
            ));
        }
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes `summary.json` plus, per run, the per-worker gradient CSVs of the
/// clean and poisoned trajectories, the divergence series, the homophily
/// histogram and the perturbation set. Returns the paths written.
pub fn emit_results(config: &ExperimentConfig, outputs: &[RunOutput], dir: &Path, force: bool) -> Result<Vec<PathBuf>> {
    prepare_dir(dir, force)?;
    let mut written = Vec::new();
    let summary = Summary::new(config, outputs);
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::parse("summary", e))?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    written.push(path);

    for o in outputs {
        let stem = format!("seed{}", o.result.seed);
        let p = dir.join(format!("{stem}_grad_clean.csv"));
        write_worker_csv(&p, &o.clean_records)?;
        written.push(p);
        let p = dir.join(format!("{stem}_grad_poisoned.csv"));
        write_worker_csv(&p, &o.poisoned_records)?;
        written.push(p);
        if config.workers >= 2 {
            let pw = config.attack.params.poisoned_worker;
            let p = dir.join(format!("{stem}_divergence.csv"));
            write_divergence_csv(&p, &o.poisoned_records, pw)?;
            written.push(p);
        }
        let p = dir.join(format!("{stem}_homophily.csv"));
        write_histogram_csv(&p, &histogram(&o.clean_homophily, &o.perturbed_homophily, HISTOGRAM_BINS)?)?;
        written.push(p);
        let p = dir.join(format!("{stem}_perturbations.json"));
        o.perturbations.save(&p)?;
        written.push(p);
    }
    Ok(written)
}
