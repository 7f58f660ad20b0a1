use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{AttackMethod, ExperimentConfig};
use crate::attack::{
    apply_perturbations, baseline_dice, baseline_random, run_disttack, select_targets, AttackConfig, PerturbationSet,
};
use crate::dist::{gradient_norm_divergence, train_distributed, Poison, SyncRecord, TrainConfig};
use crate::error::{Error, Result};
use crate::gnn::{accuracy, forward, ParamSet};
use crate::graph::{normalize_adjacency, partition_nodes, Graph, Partition};
use crate::stealth::{distribution_distance, homophily_distribution, DistanceMeasure, HomophilyDistribution};

/// Per-seed outcome as archived in `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub method: AttackMethod,
    pub num_nodes: usize,
    pub num_edges: usize,
    pub edge_budget: usize,
    pub feature_budget: usize,
    pub clean_accuracy: f64,
    pub attacked_accuracy: f64,
    /// `clean_accuracy − attacked_accuracy`
    pub accuracy_drop: f64,
    /// Poisoned worker norm minus the mean of the others, per epoch; empty
    /// with a single worker.
    pub divergence: Vec<f64>,
    /// The same statistic on the paired clean run.
    pub clean_divergence: Vec<f64>,
    pub homophily_w1: f64,
    pub homophily_ks: f64,
    pub attack_seconds: f64,
    pub edges_removed: usize,
    pub edges_added: usize,
    pub features_flipped: usize,
    pub targets: Vec<usize>,
}

/// Everything a run produced, including what is written beside the summary.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub result: RunResult,
    pub clean_records: Vec<SyncRecord>,
    pub poisoned_records: Vec<SyncRecord>,
    pub perturbations: PerturbationSet,
    pub clean_homophily: HomophilyDistribution,
    pub perturbed_homophily: HomophilyDistribution,
    pub clean_params: ParamSet,
    pub poisoned_params: ParamSet,
}

pub fn test_accuracy(params: &ParamSet, g: &Graph) -> Result<f64> {
    let z = forward(params, &normalize_adjacency(g), g.features())?;
    Ok(accuracy(&z, g.labels(), &g.splits().test))
}

fn wrap(seed: u64, stage: &str, e: Error) -> Error {
    if e.is_config() {
        e
    } else {
        Error::InvalidArgument(format!("seed {seed}, {stage}: {e}"))
    }
}

/// Attack parameters for one run: budget resolved on the run's graph and
/// the attack seed offset by the run seed.
pub fn resolved_attack(cfg: &ExperimentConfig, g: &Graph, seed: u64) -> AttackConfig {
    AttackConfig {
        edge_budget: cfg.attack.edge_budget(g.num_edges()),
        seed: cfg.attack.params.seed.wrapping_add(seed),
        ..cfg.attack.params.clone()
    }
}

pub struct Prepared {
    pub graph: Graph,
    pub partition: Partition,
    pub init: ParamSet,
    pub attack: AttackConfig,
}

pub fn prepare(cfg: &ExperimentConfig, seed: u64) -> Result<Prepared> {
    let graph = cfg.dataset.build(seed).map_err(|e| wrap(seed, "dataset", e))?;
    let partition = partition_nodes(&graph, cfg.workers, cfg.partition).map_err(|e| wrap(seed, "partition", e))?;
    let init = cfg.model.init(graph.feature_dim(), graph.num_classes(), seed);
    let attack = resolved_attack(cfg, &graph, seed);
    Ok(Prepared {
        graph,
        partition,
        init,
        attack,
    })
}

fn perturb(cfg: &ExperimentConfig, p: &Prepared) -> Result<(PerturbationSet, Vec<usize>)> {
    let a = &p.attack;
    let w = a.poisoned_worker;
    Ok(match cfg.attack.method {
        AttackMethod::None => (PerturbationSet::default(), Vec::new()),
        AttackMethod::Disttack => {
            let targets = select_targets(&p.graph, &p.partition, w, a.num_targets)?;
            (run_disttack(&p.graph, &p.partition, a, &targets)?, targets)
        }
        AttackMethod::Ra => (
            baseline_random(&p.graph, &p.partition, w, a.edge_budget, a.feature_budget, a.seed)?,
            Vec::new(),
        ),
        AttackMethod::Dice => (baseline_dice(&p.graph, &p.partition, w, a.edge_budget, a.seed)?, Vec::new()),
    })
}

/// Paired clean and poisoned training of one seed under a given
/// perturbation set; both runs share graph, partition, initialization and
/// sampling seed.
pub fn run_paired(
    cfg: &ExperimentConfig,
    seed: u64,
    p: &Prepared,
    set: PerturbationSet,
    targets: Vec<usize>,
    attack_seconds: f64,
) -> Result<RunOutput> {
    let g = &p.graph;
    let tc = TrainConfig {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        seed,
        aggregation: cfg.aggregation,
        parallel: true,
    };
    let pw = p.attack.poisoned_worker;
    let clean = train_distributed(g, &p.partition, &p.init, &tc, None).map_err(|e| wrap(seed, "clean training", e))?;
    let poisoned = if set.is_empty() {
        // identical inputs, identical trajectory
        clean.clone()
    } else {
        let poison = Poison {
            worker: pw,
            perturbations: &set,
        };
        train_distributed(g, &p.partition, &p.init, &tc, Some(poison)).map_err(|e| wrap(seed, "poisoned training", e))?
    };
    let clean_accuracy = test_accuracy(&clean.params, g)?;
    let attacked_accuracy = test_accuracy(&poisoned.params, g)?;
    let (divergence, clean_divergence) = if cfg.workers >= 2 {
        (
            gradient_norm_divergence(&poisoned.records, pw)?,
            gradient_norm_divergence(&clean.records, pw)?,
        )
    } else {
        (Vec::new(), Vec::new())
    };
    let gp = apply_perturbations(g, &set)?;
    let clean_h = homophily_distribution(g);
    let pert_h = homophily_distribution(&gp);
    let result = RunResult {
        seed,
        method: cfg.attack.method,
        num_nodes: g.num_nodes(),
        num_edges: g.num_edges(),
        edge_budget: p.attack.edge_budget,
        feature_budget: p.attack.feature_budget,
        clean_accuracy,
        attacked_accuracy,
        accuracy_drop: clean_accuracy - attacked_accuracy,
        divergence,
        clean_divergence,
        homophily_w1: distribution_distance(&clean_h, &pert_h, DistanceMeasure::Wasserstein1)?,
        homophily_ks: distribution_distance(&clean_h, &pert_h, DistanceMeasure::Ks)?,
        attack_seconds,
        edges_removed: set.edges_removed.len(),
        edges_added: set.edges_added.len(),
        features_flipped: set.features_flipped.len(),
        targets,
    };
    Ok(RunOutput {
        result,
        clean_records: clean.records,
        poisoned_records: poisoned.records,
        perturbations: set,
        clean_homophily: clean_h,
        perturbed_homophily: pert_h,
        clean_params: clean.params,
        poisoned_params: poisoned.params,
    })
}

pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<RunOutput> {
    let p = prepare(cfg, seed)?;
    let start = Instant::now();
    let (set, targets) = perturb(cfg, &p).map_err(|e| wrap(seed, "attack", e))?;
    let secs = start.elapsed().as_secs_f64().max(1e-9);
    run_paired(cfg, seed, &p, set, targets, secs)
}

/// Trains the configured pipeline for `seed` with a stored perturbation set
/// in place of a fresh attack.
pub fn replay(cfg: &ExperimentConfig, seed: u64, set: PerturbationSet) -> Result<RunOutput> {
    cfg.validate()?;
    let p = prepare(cfg, seed)?;
    run_paired(cfg, seed, &p, set, Vec::new(), 1e-9)
}

/// One `RunOutput` per configured seed, in seed order. `parallel_seeds > 1`
/// runs seeds on a dedicated thread pool of that size.
pub fn run_experiment(cfg: &ExperimentConfig, parallel_seeds: usize) -> Result<Vec<RunOutput>> {
    cfg.validate()?;
    if parallel_seeds <= 1 {
        return cfg.seeds.iter().map(|&s| run_seed(cfg, s)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel_seeds)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| cfg.seeds.par_iter().map(|&s| run_seed(cfg, s)).collect())
}
