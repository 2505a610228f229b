use std::path::{Path, PathBuf};

use m2i_core::experiment::Mode;
use m2i_core::metrics::MatchThresholds;
use m2i_core::predict::PredictorConfig;
use m2i_core::relation::TrainingOptions;
use m2i_core::scengen::GeneratorConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Share of the corpus used for fitting; the rest is held out.
    pub train_fraction: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        let opts = TrainingOptions::default();
        Self {
            epochs: opts.epochs,
            learning_rate: opts.learning_rate,
            train_fraction: 0.8,
        }
    }
}

/// Everything a run needs. Loaded from TOML, then overridden by command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Drives generation and the train/held-out split. Replaces `generator.seed`.
    pub seed: u64,
    pub out: PathBuf,
    /// Defaults to `<out>/scenarios`.
    pub corpus: Option<PathBuf>,
    /// Defaults to `<out>/classifier.json`.
    pub classifier: Option<PathBuf>,
    /// Relation CSV from `label`; heuristic labels are recomputed when absent.
    pub labels: Option<PathBuf>,
    pub mode: Vec<Mode>,
    pub teacher_forcing: bool,
    pub multi_agent: bool,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    /// Agents per fan and independent multi-agent scene.
    pub fan_agents: usize,
    pub predictor: PredictorConfig,
    pub generator: GeneratorConfig,
    pub thresholds: MatchThresholds,
    pub training: TrainingConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out"),
            corpus: None,
            classifier: None,
            labels: None,
            mode: vec![Mode::Marginal, Mode::Joint, Mode::M2i],
            teacher_forcing: false,
            multi_agent: false,
            workers: 0,
            fan_agents: 4,
            predictor: PredictorConfig::default(),
            generator: GeneratorConfig::default(),
            thresholds: MatchThresholds::default(),
            training: TrainingConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn corpus_path(&self) -> PathBuf {
        self.corpus.clone().unwrap_or_else(|| self.out.join("scenarios"))
    }

    pub fn classifier_path(&self) -> PathBuf {
        self.classifier.clone().unwrap_or_else(|| self.out.join("classifier.json"))
    }

    pub fn generator(&self) -> GeneratorConfig {
        GeneratorConfig {
            seed: self.seed,
            ..self.generator.clone()
        }
    }

    pub fn training_options(&self) -> TrainingOptions {
        TrainingOptions {
            epochs: self.training.epochs,
            learning_rate: self.training.learning_rate,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.predictor.validate()?;
        self.thresholds.validate()?;
        if self.mode.is_empty() {
            return Err(CliError::Validation("at least one mode is required".into()));
        }
        if !(self.training.train_fraction > 0.0 && self.training.train_fraction < 1.0) {
            return Err(CliError::Validation("training.train_fraction must lie in (0, 1)".into()));
        }
        if self.training.epochs == 0 || self.training.learning_rate <= 0.0 || self.training.learning_rate.is_nan() {
            return Err(CliError::Validation("training needs epochs >= 1 and a positive learning rate".into()));
        }
        if self.fan_agents < 3 {
            return Err(CliError::Validation("fan_agents must be at least 3".into()));
        }
        Ok(())
    }
}
