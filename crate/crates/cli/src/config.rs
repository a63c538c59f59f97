//! Settings resolution: flags, then the JSON file, then defaults.

use std::path::Path;

use reflow_shift::datagen::GenConfig;
use reflow_shift::eval::CvConfig;
use reflow_shift::models::nn::NnConfig;
use reflow_shift::models::rfr::RfrParams;
use reflow_shift::models::svr::SvrParams;
use reflow_shift::preprocess::{DEFAULT_FENCE_MULTIPLIER, DEFAULT_SPEARMAN_THRESHOLD};
use reflow_shift::{ModelConfig, ModelFamily};
use serde::{Deserialize, Serialize};

use crate::args::{Command, GlobalArgs};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessSettings {
    pub fence_multiplier: f64,
    pub spearman_threshold: f64,
}

impl Default for PreprocessSettings {
    fn default() -> Self {
        PreprocessSettings {
            fence_multiplier: DEFAULT_FENCE_MULTIPLIER,
            spearman_threshold: DEFAULT_SPEARMAN_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvSettings {
    pub folds: usize,
    pub stratified: bool,
    pub drop_duplicates: bool,
}

impl Default for CvSettings {
    fn default() -> Self {
        let d = CvConfig::default();
        CvSettings {
            folds: d.folds,
            stratified: d.stratified,
            drop_duplicates: d.drop_duplicates,
        }
    }
}

/// Contents of a `--config` file. Every field is optional. The top-level
/// seed replaces any seed nested in a section.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub generate: GenConfig,
    pub preprocess: PreprocessSettings,
    pub cv: CvSettings,
    pub svr: SvrParams,
    pub nn: NnConfig,
    pub rfr: RfrParams,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(skip)]
    pub command: Command,
    pub seed: u64,
    pub threads: Option<usize>,
    pub generate: GenConfig,
    pub preprocess: PreprocessSettings,
    pub cv: CvConfig,
    pub svr: SvrParams,
    pub nn: NnConfig,
    pub rfr: RfrParams,
}

impl RunConfig {
    pub fn resolve(global: &GlobalArgs, command: Command) -> CliResult<Self> {
        let file = match &global.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let seed = global.seed.or(file.seed).unwrap_or(0);
        let threads = global.threads.or(file.threads);
        if threads == Some(0) {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        let folds = match &command {
            Command::Evaluate { folds: Some(k), .. } => *k,
            _ => file.cv.folds,
        };
        let cv = CvConfig {
            folds,
            seed,
            stratified: file.cv.stratified,
            spearman_threshold: file.preprocess.spearman_threshold,
            drop_duplicates: file.cv.drop_duplicates,
        };
        let p = &file.preprocess;
        if !(p.fence_multiplier >= 0.0 && p.fence_multiplier.is_finite()) {
            return Err(CliError::Config(format!("fence_multiplier must be finite and >= 0, got {}", p.fence_multiplier)));
        }
        if !(0.0..=1.0).contains(&p.spearman_threshold) {
            return Err(CliError::Config(format!("spearman_threshold must lie in [0, 1], got {}", p.spearman_threshold)));
        }
        Ok(RunConfig {
            command,
            seed,
            threads,
            generate: GenConfig { seed, ..file.generate },
            preprocess: file.preprocess,
            cv,
            svr: file.svr,
            nn: NnConfig { seed, ..file.nn },
            rfr: RfrParams { seed, ..file.rfr },
        })
    }

    pub fn model_config(&self, family: ModelFamily) -> ModelConfig {
        match family {
            ModelFamily::Svr => ModelConfig::Svr(self.svr),
            ModelFamily::Nn => ModelConfig::Nn(self.nn),
            ModelFamily::Rfr => ModelConfig::Rfr(self.rfr),
            ModelFamily::Mean => ModelConfig::Mean,
        }
    }
}
