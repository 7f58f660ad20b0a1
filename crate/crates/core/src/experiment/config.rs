use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attack::AttackConfig;
use crate::dist::AggregationMode;
use crate::error::{Error, Result};
use crate::gnn::{Architecture, ParamSet};
use crate::graph::{generate_sbm, load_graph, Graph, PartitionStrategy, SbmParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    /// Generated per run; the run seed is added to `seed`.
    Sbm(SbmParams),
    Files {
        edges: PathBuf,
        features: PathBuf,
        splits: PathBuf,
    },
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec::Sbm(SbmParams::default())
    }
}

impl DatasetSpec {
    pub fn build(&self, run_seed: u64) -> Result<Graph> {
        match self {
            DatasetSpec::Sbm(p) => generate_sbm(&SbmParams {
                seed: p.seed.wrapping_add(run_seed),
                ..p.clone()
            }),
            DatasetSpec::Files {
                edges,
                features,
                splits,
            } => load_graph(edges, features, splits),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    Gcn,
    Sgc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub hidden: usize,
    /// Propagation depth for SGC.
    pub k: usize,
    pub learning_rate: f64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            kind: ModelKind::Gcn,
            hidden: 16,
            k: 2,
            learning_rate: 0.5,
        }
    }
}

impl ModelSpec {
    pub fn init(&self, feature_dim: usize, num_classes: usize, seed: u64) -> ParamSet {
        match self.kind {
            ModelKind::Gcn => ParamSet::init_gcn(feature_dim, self.hidden, num_classes, self.learning_rate, seed),
            ModelKind::Sgc => ParamSet::init_sgc(feature_dim, num_classes, self.k, self.learning_rate, seed),
        }
    }

    pub fn architecture(&self) -> Architecture {
        match self.kind {
            ModelKind::Gcn => Architecture::Gcn,
            ModelKind::Sgc => Architecture::Sgc { k: self.k },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AttackMethod {
    None,
    #[default]
    Disttack,
    Ra,
    Dice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackSpec {
    pub method: AttackMethod,
    /// When set, the edge budget is `ceil(frac · |E|)` of each run's graph
    /// and overrides `params.edge_budget`.
    pub edge_budget_frac: Option<f64>,
    pub params: AttackConfig,
}

impl Default for AttackSpec {
    fn default() -> Self {
        AttackSpec {
            method: AttackMethod::Disttack,
            edge_budget_frac: Some(0.05),
            params: AttackConfig {
                feature_budget: 20,
                ..AttackConfig::default()
            },
        }
    }
}

impl AttackSpec {
    pub fn edge_budget(&self, num_edges: usize) -> usize {
        match self.edge_budget_frac {
            Some(f) => (f * num_edges as f64).ceil() as usize,
            None => self.params.edge_budget,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub model: ModelSpec,
    pub workers: usize,
    pub partition: PartitionStrategy,
    pub epochs: usize,
    pub batch_size: usize,
    pub aggregation: AggregationMode,
    pub attack: AttackSpec,
    pub seeds: Vec<u64>,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetSpec::default(),
            model: ModelSpec::default(),
            workers: 4,
            partition: PartitionStrategy::RoundRobin,
            epochs: 100,
            batch_size: 4,
            aggregation: AggregationMode::Mean,
            attack: AttackSpec::default(),
            seeds: (0..10).collect(),
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::config("workers", "must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be >= 1"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        if self.model.hidden == 0 {
            return Err(Error::config("model.hidden", "must be >= 1"));
        }
        if self.model.kind == ModelKind::Sgc && self.model.k == 0 {
            return Err(Error::config("model.k", "must be >= 1"));
        }
        if !(self.model.learning_rate > 0.0 && self.model.learning_rate.is_finite()) {
            return Err(Error::config("model.learning_rate", "must be positive"));
        }
        if let DatasetSpec::Sbm(p) = &self.dataset {
            p.validate()
                .map_err(|e| Error::config("dataset", e.to_string()))?;
        }
        if let Some(f) = self.attack.edge_budget_frac {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::config("attack.edge_budget_frac", "must lie in [0, 1]"));
            }
        }
        if self.attack.method != AttackMethod::None {
            self.attack.params.validate()?;
            if self.attack.params.poisoned_worker >= self.workers {
                return Err(Error::config(
                    "attack.params.poisoned_worker",
                    format!("must be < workers ({})", self.workers),
                ));
            }
        }
        Ok(())
    }

    /// Layers the TOML text over the defaults, applies `key=value`
    /// overrides, then validates.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let user: toml::Table = toml::from_str(text).map_err(|e| Error::config("config", e.to_string()))?;
        let mut value = toml::Table::try_from(ExperimentConfig::default())
            .map_err(|e| Error::config("config", e.to_string()))?;
        merge(&mut value, user);
        apply_overrides(&mut value, overrides)?;
        let cfg: ExperimentConfig = toml::Value::Table(value)
            .try_into()
            .map_err(|e: toml::de::Error| Error::config("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("config", e.to_string()))
    }
}

/// Deep merge; a table that names its own `kind` replaces the default
/// wholesale since its fields belong to a different variant.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) if !o.contains_key("kind") => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Applies dotted `key=value` assignments. The value is read as a TOML
/// literal when it parses as one and as a bare string otherwise.
pub fn apply_overrides(root: &mut toml::Table, overrides: &[String]) -> Result<()> {
    for ov in overrides {
        let (key, raw) = ov
            .split_once('=')
            .ok_or_else(|| Error::config(ov.clone(), "override must look like key=value"))?;
        let key = key.trim();
        let raw = raw.trim();
        let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        let parts: Vec<&str> = key.split('.').collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(Error::config(key, "empty path segment"));
        }
        let mut table = &mut *root;
        for part in &parts[..parts.len() - 1] {
            let entry = table
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            table = entry
                .as_table_mut()
                .ok_or_else(|| Error::config(key, format!("`{part}` is not a table")))?;
        }
        table.insert(parts[parts.len() - 1].to_string(), value);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip_through_toml() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text, &[]).unwrap(), cfg);
    }

    #[test]
    fn empty_text_is_default() {
        assert_eq!(ExperimentConfig::from_toml_str("", &[]).unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn overrides_win() {
        let cfg = ExperimentConfig::from_toml_str(
            "workers = 2\n[attack]\nmethod = \"ra\"\n",
            &[
                "workers=3".into(),
                "attack.params.lambda_homo=0.0".into(),
                "attack.method=dice".into(),
                "dataset.noise=0.5".into(),
                "seeds=[1, 2]".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.workers, 3);
        assert_eq!(cfg.attack.params.lambda_homo, 0.0);
        assert_eq!(cfg.attack.method, AttackMethod::Dice);
        assert_eq!(cfg.seeds, vec![1, 2]);
        match cfg.dataset {
            DatasetSpec::Sbm(p) => assert_eq!(p.noise, 0.5),
            _ => panic!("dataset kind changed"),
        }
    }

    #[test]
    fn field_level_errors() {
        let e = ExperimentConfig::from_toml_str("batch_size = 0", &[]).unwrap_err();
        assert!(e.is_config());
        assert!(e.to_string().contains("batch_size"), "{e}");
        let e = ExperimentConfig::from_toml_str("", &["attack.params.poisoned_worker=9".into()]).unwrap_err();
        assert!(e.to_string().contains("poisoned_worker"), "{e}");
        assert!(ExperimentConfig::from_toml_str("bogus = 1", &[]).unwrap_err().is_config());
        assert!(ExperimentConfig::from_toml_str("", &["novalue".into()]).unwrap_err().is_config());
    }

    #[test]
    fn budget_from_fraction() {
        let a = AttackSpec::default();
        assert_eq!(a.edge_budget(640), 32);
        assert_eq!(a.edge_budget(641), 33);
    }
}
