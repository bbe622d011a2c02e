// SPDX-License-Identifier: MIT OR Apache-2.0

//! Experiment configuration: one TOML file per run.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attribution::{DEFAULT_STEPS, DEFAULT_TARGET};
use crate::analysis::DEFAULT_TAU;
use crate::corpus::{
    CorpusConfig, FreqParams, FrequencyBand, KnowledgeType, Relation, TaskFilter, TaskFilterName, TypeRatio,
};
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::training::TrainConfig;

/// Version string stamped into every artifact.
pub const CODE_VERSION: &str = concat!("kcircuits ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    Desk,
    PaperShape,
}

/// Model shape; the vocabulary size comes from the synthesized corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelShape {
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_model: usize,
    #[serde(default)]
    pub d_mlp: Option<usize>,
    pub max_context: usize,
    #[serde(default)]
    pub tie_unembedding: bool,
}

impl ModelShape {
    pub fn config(&self, vocab_size: usize) -> ModelConfig {
        let mut c = ModelConfig::new(self.n_layers, self.n_heads, self.d_model, vocab_size, self.max_context);
        if let Some(m) = self.d_mlp {
            c.d_mlp = m;
        }
        c.tie_unembedding = self.tie_unembedding;
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageTraining {
    pub base: TrainConfig,
    pub continual: TrainConfig,
    pub forgetting: TrainConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscoveryConfig {
    /// Integrated-gradient steps.
    pub steps: usize,
    /// Fixed circuit size; calibrated on the final checkpoint when unset.
    #[serde(default)]
    pub edge_budget: Option<usize>,
    pub calibration_target: f64,
    /// Examples per filter used for scoring and calibration.
    pub val_examples: usize,
    /// Held-out examples per filter used for evaluation.
    pub test_examples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub filters: Vec<TaskFilterName>,
    pub relations: Vec<Relation>,
    pub tau: f64,
    /// Apply the final layer norm in the logit lens.
    pub lens_final_norm: bool,
    /// Circuit followed through the forgetting stage.
    pub forget_filter: TaskFilterName,
    pub replay_ratios: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scale: Scale,
    pub seed: u64,
    pub corpus: CorpusConfig,
    pub model: ModelShape,
    pub train: StageTraining,
    pub discovery: DiscoveryConfig,
    pub analysis: AnalysisConfig,
    /// Where runs are written; overridden by the command line and environment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

fn knowledge_filters() -> Vec<TaskFilterName> {
    TaskFilter::all().into_iter().map(TaskFilterName).collect()
}

impl ExperimentConfig {
    /// 4 layers, 4 heads, d_model 128, 500 entities, 20 continual epochs.
    pub fn desk() -> Self {
        let base = TrainConfig {
            learning_rate: 1e-3,
            batch_size: 4,
            block_size: 128,
            epochs: 10,
            ..TrainConfig::default()
        };
        Self {
            scale: Scale::Desk,
            seed: 1,
            corpus: CorpusConfig {
                n_entities: 500,
                type_ratio: TypeRatio::default(),
                freq: FreqParams::default(),
                n_base_entities: 200,
                n_forget_entities: 200,
                templates_per_relation: 10,
                anchor_frequency: None,
            },
            model: ModelShape {
                n_layers: 4,
                n_heads: 4,
                d_model: 128,
                d_mlp: None,
                max_context: 128,
                tie_unembedding: false,
            },
            train: StageTraining {
                continual: TrainConfig {
                    epochs: 20,
                    ..base.clone()
                },
                forgetting: TrainConfig {
                    epochs: 6,
                    ..base.clone()
                },
                base,
            },
            discovery: DiscoveryConfig {
                steps: DEFAULT_STEPS,
                edge_budget: None,
                calibration_target: DEFAULT_TARGET,
                val_examples: 48,
                test_examples: 96,
            },
            analysis: AnalysisConfig {
                filters: knowledge_filters(),
                relations: Relation::TASKS.to_vec(),
                tau: DEFAULT_TAU,
                lens_final_norm: true,
                forget_filter: TaskFilterName(TaskFilter::Type(KnowledgeType::CompletelyNew)),
                replay_ratios: vec![0.0, 0.5],
            },
            out_dir: None,
        }
        .seeded(1)
    }

    /// GPT-2 Small shape with the reference corpus size and schedule.
    pub fn paper_shape() -> Self {
        let base = TrainConfig {
            learning_rate: 1e-3,
            batch_size: 32,
            block_size: 1024,
            epochs: 25,
            ..TrainConfig::default()
        };
        Self {
            scale: Scale::PaperShape,
            seed: 1,
            corpus: CorpusConfig {
                n_entities: 50_000,
                type_ratio: TypeRatio::default(),
                freq: FreqParams::default(),
                n_base_entities: 10_000,
                n_forget_entities: 10_000,
                templates_per_relation: 50,
                anchor_frequency: None,
            },
            model: ModelShape {
                n_layers: 12,
                n_heads: 12,
                d_model: 768,
                d_mlp: None,
                max_context: 1024,
                tie_unembedding: true,
            },
            train: StageTraining {
                continual: base.clone(),
                forgetting: TrainConfig {
                    epochs: 10,
                    ..base.clone()
                },
                base,
            },
            discovery: DiscoveryConfig {
                steps: DEFAULT_STEPS,
                edge_budget: Some(8000),
                calibration_target: DEFAULT_TARGET,
                val_examples: 300,
                test_examples: 300,
            },
            analysis: AnalysisConfig {
                filters: knowledge_filters(),
                relations: Relation::TASKS.to_vec(),
                tau: DEFAULT_TAU,
                lens_final_norm: true,
                forget_filter: TaskFilterName(TaskFilter::Band(FrequencyBand::High)),
                replay_ratios: vec![0.0, 0.1, 0.3],
            },
            out_dir: None,
        }
        .seeded(1)
    }

    fn seeded(mut self, seed: u64) -> Self {
        self.set_seed(seed);
        self
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(Self::desk()),
            "paper-shape" => Ok(Self::paper_shape()),
            _ => Err(Error::Config(format!("unknown preset `{name}` (desk, paper-shape)"))),
        }
    }

    /// Set the experiment seed and every stage's training seed.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.train.base.seed = seed;
        self.train.continual.seed = seed;
        self.train.forgetting.seed = seed;
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("experiment config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.corpus.validate()?;
        self.model.config(16).validate()?;
        let ctx = self.model.max_context;
        self.train.base.validate(ctx)?;
        self.train.continual.validate(ctx)?;
        self.train.forgetting.validate(ctx)?;
        let d = &self.discovery;
        if d.steps == 0 {
            return Err(Error::Config("discovery.steps must be at least 1".into()));
        }
        if !(d.calibration_target > 0.0 && d.calibration_target <= 1.0) {
            return Err(Error::Config(format!(
                "discovery.calibration_target must be in (0, 1], got {}",
                d.calibration_target
            )));
        }
        if d.val_examples == 0 || d.test_examples == 0 {
            return Err(Error::Config("discovery.val_examples and test_examples must be positive".into()));
        }
        let a = &self.analysis;
        if a.filters.is_empty() || a.relations.is_empty() {
            return Err(Error::Config("analysis.filters and analysis.relations must be nonempty".into()));
        }
        if let Some(r) = a.relations.iter().find(|r| !r.is_task()) {
            return Err(Error::Config(format!("{r} has no recall query")));
        }
        if !a.filters.contains(&a.forget_filter) {
            return Err(Error::Config(format!(
                "analysis.forget_filter {} is not among analysis.filters",
                a.forget_filter.0
            )));
        }
        if !(a.tau > 1.0) {
            return Err(Error::Config(format!("analysis.tau must exceed 1, got {}", a.tau)));
        }
        if let Some(r) = a.replay_ratios.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::Config(format!("replay ratio {r} outside [0, 1]")));
        }
        Ok(())
    }

    /// SHA-256 of the serialized config, without the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = None;
        let digest = Sha256::digest(c.to_toml().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
