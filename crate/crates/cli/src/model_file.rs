use std::path::Path;

use reflow_shift::features::{feature_names, SCHEMA_VERSION};
use reflow_shift::{ModelFamily, Target, TrainedModel};
use serde::{Deserialize, Serialize};

use crate::csvio::write_json;
use crate::error::{CliError, CliResult};

pub const MODEL_SCHEMA_VERSION: &str = "reflow-shift-model/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: String,
    pub feature_schema: String,
    pub family: ModelFamily,
    pub target: Target,
    pub seed: u64,
    pub n_train: usize,
    pub train_r2: f64,
    pub model: TrainedModel<f64>,
}

impl ModelFile {
    pub fn new(model: TrainedModel<f64>, seed: u64, n_train: usize, train_r2: f64) -> Self {
        ModelFile {
            schema_version: MODEL_SCHEMA_VERSION.to_string(),
            feature_schema: SCHEMA_VERSION.to_string(),
            family: model.family(),
            target: model.target,
            seed,
            n_train,
            train_r2,
            model,
        }
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let bad = |m: String| CliError::SchemaMismatch(format!("{}: {m}", path.display()));
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(format!("not a JSON document: {e}")))?;
        match value.get("schema_version").and_then(|v| v.as_str()) {
            Some(MODEL_SCHEMA_VERSION) => {}
            Some(other) => return Err(bad(format!("model schema {other}, expected {MODEL_SCHEMA_VERSION}"))),
            None => return Err(bad("missing schema_version".into())),
        }
        let file: ModelFile = serde_json::from_value(value).map_err(|e| bad(format!("malformed model file: {e}")))?;
        if file.feature_schema != SCHEMA_VERSION {
            return Err(bad(format!("feature schema {}, expected {SCHEMA_VERSION}", file.feature_schema)));
        }
        let names = feature_names();
        let m = &file.model;
        let consistent = m.n_inputs == names.len()
            && m.kept.len() == m.kept_names.len()
            && m.kept.iter().zip(&m.kept_names).all(|(&j, n)| names.get(j) == Some(&n.as_str()));
        if !consistent || file.family != m.family() || file.target != m.target {
            return Err(bad("model body disagrees with the feature schema or its own header".into()));
        }
        Ok(file)
    }
}
