//! Poisoning attacks against one worker's view of the graph: the
//! gradient-guided attack with communication-aware edge scoring, sign-flip
//! feature perturbation and a homophily stealth penalty, plus the random and
//! DICE baselines.
//!
//! Sign convention: the attack loss is the negated sum of target
//! cross-entropies and the attacker minimizes it. A positive edge score means
//! removing the edge is predicted to lower the attack loss, i.e. to raise the
//! targets' cross-entropy.

mod baselines;
mod disttack;
mod features;
mod scoring;

pub use baselines::{baseline_dice, baseline_random};
pub use disttack::{run_disttack, select_targets, surrogate_init, train_surrogate, train_surrogate_from};
pub use features::{flip_multiplier, flip_features};
pub use scoring::{
    combined_subgraph_gradient, communication_matrix, edge_scores, select_edge_removals, ScoreMatrix,
    SubgraphGradient,
};

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::stealth::{DistanceMeasure, HomophilyForm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackConfig {
    /// Weight of the structure gradient.
    pub w_a: f64,
    /// Weight of the feature gradient.
    pub w_x: f64,
    pub lambda_comm: f64,
    pub lambda_homo: f64,
    pub edge_budget: usize,
    pub feature_budget: usize,
    /// Outer attack iterations; budgets are spread evenly across them.
    pub iterations: usize,
    pub surrogate_epochs: usize,
    pub surrogate_hidden: usize,
    pub surrogate_lr: f64,
    /// Continue from the previous surrogate instead of retraining from
    /// scratch each iteration.
    pub warm_start: bool,
    pub num_targets: usize,
    pub poisoned_worker: usize,
    /// Keep the literal ×3 branch for negative gradients; otherwise negate.
    pub strict_flip: bool,
    pub measure: DistanceMeasure,
    pub homophily_form: HomophilyForm,
    pub seed: u64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            w_a: 1.0,
            w_x: 1.0,
            lambda_comm: 0.1,
            lambda_homo: 1.0,
            edge_budget: 0,
            feature_budget: 0,
            iterations: 2,
            surrogate_epochs: 100,
            surrogate_hidden: 16,
            surrogate_lr: 0.5,
            warm_start: false,
            num_targets: 8,
            poisoned_worker: 0,
            strict_flip: true,
            measure: DistanceMeasure::Wasserstein1,
            homophily_form: HomophilyForm::DegreeRatio,
            seed: 0,
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("w_a", self.w_a), ("w_x", self.w_x), ("lambda_homo", self.lambda_homo)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("attack.{name}"), "must be finite and >= 0"));
            }
        }
        if !self.lambda_comm.is_finite() {
            return Err(Error::config("attack.lambda_comm", "must be finite"));
        }
        if !(self.surrogate_lr > 0.0 && self.surrogate_lr.is_finite()) {
            return Err(Error::config("attack.surrogate_lr", "must be positive"));
        }
        if self.surrogate_hidden == 0 {
            return Err(Error::config("attack.surrogate_hidden", "must be >= 1"));
        }
        if self.iterations == 0 {
            return Err(Error::config("attack.iterations", "must be >= 1"));
        }
        if self.num_targets == 0 {
            return Err(Error::config("attack.num_targets", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRemoval {
    pub i: usize,
    pub j: usize,
    pub score: f64,
    pub iter: usize,
    /// Homophily penalty charged when the edge was picked.
    #[serde(default)]
    pub penalty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeAddition {
    pub i: usize,
    pub j: usize,
    pub iter: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureFlip {
    pub node: usize,
    pub dim: usize,
    pub old: f64,
    pub new: f64,
    /// Sign of the attack-loss gradient; 0 for gradient-free baselines.
    pub sign: i8,
    pub iter: usize,
    #[serde(default)]
    pub penalty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct PerturbationSet {
    pub edges_removed: Vec<EdgeRemoval>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges_added: Vec<EdgeAddition>,
    pub features_flipped: Vec<FeatureFlip>,
    #[serde(default)]
    pub config: serde_json::Value,
}

impl PerturbationSet {
    pub fn is_empty(&self) -> bool {
        self.edges_removed.is_empty() && self.edges_added.is_empty() && self.features_flipped.is_empty()
    }

    /// Edge operations count against the edge budget, flips against the
    /// feature budget.
    pub fn edge_count(&self) -> usize {
        self.edges_removed.len() + self.edges_added.len()
    }

    pub fn flip_count(&self) -> usize {
        self.features_flipped.len()
    }

    pub fn within_budget(&self, edge_budget: usize, feature_budget: usize) -> bool {
        self.edge_count() <= edge_budget && self.flip_count() <= feature_budget
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::parse(path.display().to_string(), e))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<PerturbationSet> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))
    }
}

/// Returns `g` with the removals, additions and feature writes applied in
/// order. Every removed edge must exist and every flip's `old` value must
/// match, so a set recorded on another graph is rejected.
pub fn apply_perturbations(g: &Graph, set: &PerturbationSet) -> Result<Graph> {
    let mut out = g.clone();
    let mut removed = HashSet::new();
    for r in &set.edges_removed {
        if !removed.insert((r.i.min(r.j), r.i.max(r.j))) {
            return Err(Error::InvalidArgument(format!("edge ({}, {}) removed twice", r.i, r.j)));
        }
        out.remove_edge(r.i, r.j)?;
    }
    if !set.edges_added.is_empty() {
        let add: Vec<_> = set.edges_added.iter().map(|a| (a.i, a.j)).collect();
        out.add_edges(&add)?;
    }
    out.compact();
    let dim = out.feature_dim();
    for f in &set.features_flipped {
        out.check_node(f.node)?;
        if f.dim >= dim {
            return Err(Error::ShapeMismatch(format!("feature dim {} >= {dim}", f.dim)));
        }
        let cur = &mut out.features_mut()[[f.node, f.dim]];
        if cur.to_bits() != f.old.to_bits() {
            return Err(Error::InvalidArgument(format!(
                "feature ({}, {}) is {} but the perturbation expects {}",
                f.node, f.dim, cur, f.old
            )));
        }
        *cur = f.new;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::plain;

    #[test]
    fn empty_set_is_identity() {
        let g = plain(4, &[(0, 1), (1, 2)]);
        assert_eq!(apply_perturbations(&g, &PerturbationSet::default()).unwrap(), g);
    }

    #[test]
    fn rejects_missing_edge_and_stale_flip() {
        let g = plain(4, &[(0, 1)]);
        let mut s = PerturbationSet::default();
        s.edges_removed.push(EdgeRemoval {
            i: 2,
            j: 3,
            score: 1.0,
            iter: 0,
            penalty: 0.0,
        });
        assert!(apply_perturbations(&g, &s).is_err());
        let mut s = PerturbationSet::default();
        s.features_flipped.push(FeatureFlip {
            node: 0,
            dim: 0,
            old: 123.0,
            new: -123.0,
            sign: 1,
            iter: 0,
            penalty: 0.0,
        });
        assert!(apply_perturbations(&g, &s).is_err());
    }

    #[test]
    fn json_shape() {
        let s = PerturbationSet {
            edges_removed: vec![EdgeRemoval {
                i: 1,
                j: 2,
                score: 0.5,
                iter: 0,
                penalty: 0.0,
            }],
            ..Default::default()
        };
        let v: serde_json::Value = serde_json::to_value(&s).unwrap();
        assert!(v.get("edges_added").is_none());
        assert_eq!(v["edges_removed"][0]["i"], 1);
        assert!(v["features_flipped"].as_array().unwrap().is_empty());
        let back: PerturbationSet = serde_json::from_value(v).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn config_validation() {
        assert!(AttackConfig::default().validate().is_ok());
        let bad = AttackConfig {
            w_a: -1.0,
            ..AttackConfig::default()
        };
        assert!(bad.validate().unwrap_err().is_config());
    }
}
