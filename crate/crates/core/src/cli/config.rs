//! The run configuration: one TOML document holding every effective value.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::SplitStrategy;
use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::models::{CnnLstmConfig, MaxEntConfig, ModelKind, PriorityOrder, TrainConfig};
use crate::nn::config_hash;
use crate::synthetic::SyntheticConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    /// PubTator file with the documents and every tagger's spans.
    pub documents: PathBuf,
    /// Normalized repository records, `SOURCE PMID TYPE ID` per line.
    pub records: PathBuf,
    /// word2vec/GloVe text vectors; empty means hashed vectors only.
    pub embeddings: PathBuf,
    pub work_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            documents: "data/documents.pubtator".into(),
            records: "data/records.tsv".into(),
            embeddings: PathBuf::new(),
            work_dir: "work".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    pub strategy: SplitStrategy,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { strategy: SplitStrategy::Random, test_fraction: 0.2, seed: 42 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// Take the argmax over the mention's candidate types only.
    pub restrict_candidates: bool,
    pub priority_order: PriorityOrder,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { kind: ModelKind::CnnLstm, restrict_candidates: true, priority_order: PriorityOrder::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub paths: PathsConfig,
    pub split: SplitConfig,
    pub features: FeatureConfig,
    pub model: ModelConfig,
    pub cnnlstm: CnnLstmConfig,
    pub maxent: MaxEntConfig,
    pub train: TrainConfig,
    pub synthetic: SyntheticConfig,
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(config_err)?;
        config.validate()?;
        Ok(config)
    }

    /// Defaults, then the file (if any), then `section.key=value` overrides
    /// in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut config = match path {
            Some(p) => Self::from_toml_str(&std::fs::read_to_string(p)?)?,
            None => RunConfig::default(),
        };
        for o in overrides {
            config.apply_override(o)?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(config_err)
    }

    /// Sets one dotted key. The value is read as a TOML literal when it
    /// parses as one and as a bare string otherwise, so `model.kind=maxent`
    /// and `train.epochs=3` both work.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
        let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));

        let mut doc = toml::Value::try_from(&*self).map_err(config_err)?;
        let mut slot = &mut doc;
        let parts: Vec<&str> = key.trim().split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            let table =
                slot.as_table_mut().ok_or_else(|| Error::Config(format!("{key}: {part:?} is not inside a table")))?;
            if i + 1 == parts.len() {
                if !table.contains_key(*part) {
                    return Err(Error::Config(format!("unknown config key {key:?}")));
                }
                table.insert(part.to_string(), value);
                break;
            }
            slot = table.get_mut(*part).ok_or_else(|| Error::Config(format!("unknown config section in {key:?}")))?;
        }
        *self = doc.try_into().map_err(|e| Error::Config(format!("{key}: {e}")))?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.split.test_fraction > 0.0 && self.split.test_fraction < 1.0) {
            return Err(Error::Config("split.test_fraction must lie in (0, 1)".into()));
        }
        if self.cnnlstm.context_len != self.features.context_len
            || self.cnnlstm.feature_len != self.features.feature_len
        {
            return Err(Error::Config(format!(
                "cnnlstm lengths {}/{} differ from features lengths {}/{}",
                self.cnnlstm.context_len,
                self.cnnlstm.feature_len,
                self.features.context_len,
                self.features.feature_len
            )));
        }
        self.cnnlstm.validate()?;
        self.train.validate()
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> Result<String> {
        config_hash(self)
    }
}
