use std::collections::HashSet;

use rayon::prelude::*;
use serde_json::json;

use super::features::{flip_multiplier, sgn};
use super::scoring::{combined_subgraph_gradient, edge_scores, select_edge_removals, ScoreMatrix};
use super::{AttackConfig, EdgeRemoval, FeatureFlip, PerturbationSet};
use crate::error::{Error, Result};
use crate::gnn::{backward, ParamSet};
use crate::graph::{normalize_adjacency, sample_union, Graph, Partition, Subgraph};
use crate::stealth::HomophilyTracker;

pub fn surrogate_init(g: &Graph, cfg: &AttackConfig) -> ParamSet {
    ParamSet::init_gcn(g.feature_dim(), cfg.surrogate_hidden, g.num_classes(), cfg.surrogate_lr, cfg.seed)
}

/// Full-batch training of `init` on `g`'s training nodes.
pub fn train_surrogate_from(g: &Graph, init: &ParamSet, epochs: usize) -> Result<ParamSet> {
    let train = &g.splits().train;
    if train.is_empty() {
        return Err(Error::EmptyNodeSet);
    }
    let adj = normalize_adjacency(g);
    let mut p = init.clone();
    for epoch in 0..epochs {
        let b = backward(&p, &adj, g.features(), g.labels(), train, false, false)
            .map_err(|e| Error::NonFinite(format!("surrogate at epoch {epoch} ({e})")))?;
        p.apply_gradient(&b.weights)?;
    }
    Ok(p)
}

pub fn train_surrogate(g: &Graph, cfg: &AttackConfig) -> Result<ParamSet> {
    train_surrogate_from(g, &surrogate_init(g, cfg), cfg.surrogate_epochs)
}

/// Highest-degree training nodes owned by `worker`, ties to the lower id.
pub fn select_targets(g: &Graph, part: &Partition, worker: usize, count: usize) -> Result<Vec<usize>> {
    let mut pool = part.train_pool(g, worker);
    if pool.is_empty() {
        return Err(Error::EmptyPool(worker));
    }
    pool.sort_by(|&a, &b| g.degree(b).cmp(&g.degree(a)).then(a.cmp(&b)));
    pool.truncate(count);
    Ok(pool)
}

/// Picks the best remaining candidate by `key`, highest first, ties to the
/// smaller id tuple. Only strictly positive keys qualify.
fn best<K: Ord + Copy + Send + Sync>(keys: &[(K, f64, f64)]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (idx, &(k, _, key)) in keys.iter().enumerate() {
        if key <= 0.0 {
            continue;
        }
        best = match best {
            Some(b) if keys[b].2 > key || (keys[b].2 == key && keys[b].0 < k) => Some(b),
            _ => Some(idx),
        };
    }
    best
}

/// Same pick as `best` over `raw − penalty`, but evaluates penalties lazily.
/// `raw` must be sorted by score descending, ties by id ascending. Penalties
/// are non-negative, so once a raw score falls below the best penalized key no
/// later candidate can win.
fn lazy_best<K, F>(raw: &[(K, f64)], penalty: F) -> Option<(usize, f64)>
where
    K: Ord + Copy + Send + Sync,
    F: Fn(K) -> f64 + Sync,
{
    const CHUNK: usize = 64;
    let mut keyed: Vec<(K, f64, f64)> = Vec::new();
    let mut found: Option<usize> = None;
    for start in (0..raw.len()).step_by(CHUNK) {
        if let Some(b) = found {
            if raw[start].1 < keyed[b].2 {
                break;
            }
        }
        let chunk = &raw[start..(start + CHUNK).min(raw.len())];
        keyed.extend(
            chunk
                .par_iter()
                .map(|&(k, s)| {
                    let pen = penalty(k);
                    (k, pen, s - pen)
                })
                .collect::<Vec<_>>(),
        );
        found = best(&keyed);
    }
    found.map(|b| (b, keyed[b].1))
}

fn by_score_desc<K: Ord>(v: &mut [(K, f64)]) {
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
}

fn remove_edges(
    gp: &mut Graph,
    scores: &ScoreMatrix,
    quota: usize,
    cfg: &AttackConfig,
    tracker: &mut HomophilyTracker,
    iter: usize,
    out: &mut Vec<EdgeRemoval>,
) -> Result<usize> {
    if quota == 0 {
        return Ok(0);
    }
    if cfg.lambda_homo == 0.0 {
        let picks = select_edge_removals(scores, quota);
        for &(i, j) in &picks {
            gp.remove_edge(i, j)?;
            out.push(EdgeRemoval {
                i,
                j,
                score: scores.get(i, j),
                iter,
                penalty: 0.0,
            });
        }
        return Ok(picks.len());
    }
    let mut pending: Vec<((usize, usize), f64)> = scores.iter().filter(|&(_, s)| s > 0.0).collect();
    by_score_desc(&mut pending);
    let mut taken = 0;
    while taken < quota && !pending.is_empty() {
        let base = tracker.distance();
        let g_ref: &Graph = gp;
        let pick = lazy_best(&pending, |(i, j)| {
            cfg.lambda_homo * (tracker.distance_after_removal(g_ref, i, j) - base).abs()
        });
        let Some((idx, pen)) = pick else { break };
        let ((i, j), score) = pending.remove(idx);
        tracker.apply_removal(gp, i, j);
        gp.remove_edge(i, j)?;
        out.push(EdgeRemoval {
            i,
            j,
            score,
            iter,
            penalty: pen,
        });
        taken += 1;
    }
    Ok(taken)
}

struct FlipCandidate {
    node: usize,
    dim: usize,
    grad: f64,
}

#[allow(clippy::too_many_arguments)]
fn flip_features_greedy(
    gp: &mut Graph,
    sub: &Subgraph,
    grad: &ndarray::Array2<f64>,
    quota: usize,
    cfg: &AttackConfig,
    tracker: &mut HomophilyTracker,
    flipped: &mut HashSet<(usize, usize)>,
    iter: usize,
    out: &mut Vec<FeatureFlip>,
) -> usize {
    if quota == 0 {
        return 0;
    }
    let new_value = |gp: &Graph, c: &FlipCandidate| gp.features()[[c.node, c.dim]] * flip_multiplier(sgn(c.grad), cfg.strict_flip);
    // Eligible: the flip moves the attack loss down to first order.
    let mut pending: Vec<FlipCandidate> = Vec::new();
    for (l, &u) in sub.node_ids.iter().enumerate() {
        for d in 0..grad.ncols() {
            let gk = grad[[l, d]];
            if gk == 0.0 || flipped.contains(&(u, d)) {
                continue;
            }
            let c = FlipCandidate { node: u, dim: d, grad: gk };
            let delta = new_value(gp, &c) - gp.features()[[u, d]];
            if gk * delta < 0.0 {
                pending.push(c);
            }
        }
    }
    pending.sort_by(|a, b| b.grad.abs().total_cmp(&a.grad.abs()).then((a.node, a.dim).cmp(&(b.node, b.dim))));
    let mut taken = 0;
    while taken < quota && !pending.is_empty() {
        let pick = if cfg.lambda_homo == 0.0 {
            Some((0, 0.0))
        } else {
            let base = tracker.distance();
            let g_ref: &Graph = gp;
            let raw: Vec<(usize, f64)> = pending.iter().enumerate().map(|(k, c)| (k, c.grad.abs())).collect();
            lazy_best(&raw, |k| {
                let c = &pending[k];
                let after = tracker.distance_after_feature(g_ref, c.node, c.dim, new_value(g_ref, c));
                cfg.lambda_homo * (after - base).abs()
            })
        };
        let Some((idx, pen)) = pick else { break };
        let c = pending.remove(idx);
        let old = gp.features()[[c.node, c.dim]];
        let new = new_value(gp, &c);
        if cfg.lambda_homo != 0.0 {
            tracker.apply_feature(gp, c.node, c.dim, new);
        }
        gp.features_mut()[[c.node, c.dim]] = new;
        flipped.insert((c.node, c.dim));
        out.push(FeatureFlip {
            node: c.node,
            dim: c.dim,
            old,
            new,
            sign: sgn(c.grad),
            iter,
            penalty: pen,
        });
        taken += 1;
    }
    taken
}

/// Iterative attack on the subgraph around `targets`: retrain the
/// surrogate, score existing edges by weighted attack-loss gradient plus the
/// communication term, remove the best edges, then sign-flip the most
/// sensitive features. With `lambda_homo > 0` each candidate is charged the
/// change it causes in the homophily distance, re-evaluated after every pick.
pub fn run_disttack(g: &Graph, part: &Partition, cfg: &AttackConfig, targets: &[usize]) -> Result<PerturbationSet> {
    cfg.validate()?;
    if targets.is_empty() {
        return Err(Error::EmptyNodeSet);
    }
    if part.len() != g.num_nodes() {
        return Err(Error::ShapeMismatch("partition size differs from graph".into()));
    }
    for &t in targets {
        g.check_node(t)?;
        if part.worker_of(t)? != cfg.poisoned_worker {
            return Err(Error::InvalidArgument(format!(
                "target {t} is not on poisoned worker {}",
                cfg.poisoned_worker
            )));
        }
    }
    let mut set = PerturbationSet {
        config: json!({ "method": "disttack", "attack": cfg, "targets": targets }),
        ..Default::default()
    };
    if cfg.edge_budget == 0 && cfg.feature_budget == 0 {
        return Ok(set);
    }

    let mut gp = g.clone();
    let mut tracker = HomophilyTracker::new(g, cfg.homophily_form, cfg.measure);
    let mut flipped = HashSet::new();
    let mut theta: Option<ParamSet> = None;
    for iter in 0..cfg.iterations {
        let left = cfg.iterations - iter;
        let edge_quota = (cfg.edge_budget - set.edges_removed.len()).div_ceil(left);
        let feature_quota = (cfg.feature_budget - set.features_flipped.len()).div_ceil(left);
        if edge_quota == 0 && feature_quota == 0 {
            break;
        }
        let init = match (&theta, cfg.warm_start) {
            (Some(t), true) => t.clone(),
            _ => surrogate_init(g, cfg),
        };
        let th = train_surrogate_from(&gp, &init, cfg.surrogate_epochs)?;
        let sub = sample_union(&gp, targets)?;
        let grad = combined_subgraph_gradient(&th, &gp, &sub, targets, cfg)?;
        let scores = edge_scores(&grad.edges, &sub, part, cfg.lambda_comm)?;

        let removed = remove_edges(&mut gp, &scores, edge_quota, cfg, &mut tracker, iter, &mut set.edges_removed)?;
        let flips = flip_features_greedy(
            &mut gp,
            &sub,
            &grad.features,
            feature_quota,
            cfg,
            &mut tracker,
            &mut flipped,
            iter,
            &mut set.features_flipped,
        );
        theta = Some(th);
        if removed == 0 && flips == 0 && !cfg.warm_start {
            // same graph, same surrogate: nothing new to find
            break;
        }
    }
    Ok(set)
}
