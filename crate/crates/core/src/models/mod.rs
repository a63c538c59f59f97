//! The three learners plus a mean baseline behind one dispatch type.

pub mod nn;
pub mod rfr;
pub mod svr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Target;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

use nn::{NnConfig, NnModel};
use rfr::{RfrModel, RfrParams};
use svr::{SvrModel, SvrParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Svr,
    Nn,
    Rfr,
    Mean,
}

impl ModelFamily {
    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::Svr => "svr",
            ModelFamily::Nn => "nn",
            ModelFamily::Rfr => "rfr",
            ModelFamily::Mean => "mean",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "svr" => Some(ModelFamily::Svr),
            "nn" => Some(ModelFamily::Nn),
            "rfr" => Some(ModelFamily::Rfr),
            "mean" => Some(ModelFamily::Mean),
            _ => None,
        }
    }

    pub fn default_config(self) -> ModelConfig {
        match self {
            ModelFamily::Svr => ModelConfig::Svr(SvrParams::default()),
            ModelFamily::Nn => ModelConfig::Nn(NnConfig::default()),
            ModelFamily::Rfr => ModelConfig::Rfr(RfrParams::default()),
            ModelFamily::Mean => ModelConfig::Mean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelConfig {
    Svr(SvrParams),
    Nn(NnConfig),
    Rfr(RfrParams),
    Mean,
}

impl ModelConfig {
    pub fn family(&self) -> ModelFamily {
        match self {
            ModelConfig::Svr(_) => ModelFamily::Svr,
            ModelConfig::Nn(_) => ModelFamily::Nn,
            ModelConfig::Rfr(_) => ModelFamily::Rfr,
            ModelConfig::Mean => ModelFamily::Mean,
        }
    }

    /// Same configuration with the random seed replaced, where one exists.
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            ModelConfig::Nn(c) => ModelConfig::Nn(NnConfig { seed, ..c }),
            ModelConfig::Rfr(p) => ModelConfig::Rfr(RfrParams { seed, ..p }),
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "model", rename_all = "snake_case")]
#[serde(bound = "T: Scalar")]
pub enum FittedModel<T> {
    Svr(SvrModel<T>),
    Nn(NnModel<T>),
    Rfr(RfrModel<T>),
    Mean(T),
}

impl<T: Scalar> FittedModel<T> {
    pub fn fit(x: &Matrix<T>, y: &[T], config: &ModelConfig) -> Result<Self> {
        Ok(match config {
            ModelConfig::Svr(p) => FittedModel::Svr(SvrModel::fit(x, y, p)?.0),
            ModelConfig::Nn(c) => FittedModel::Nn(NnModel::fit(x, y, c)?),
            ModelConfig::Rfr(p) => FittedModel::Rfr(RfrModel::fit(x, y, p)?),
            ModelConfig::Mean => {
                if y.is_empty() {
                    return Err(Error::EmptyDataset { stage: "mean baseline" });
                }
                FittedModel::Mean(y.iter().copied().sum::<T>() / T::of_usize(y.len()))
            }
        })
    }

    pub fn family(&self) -> ModelFamily {
        match self {
            FittedModel::Svr(_) => ModelFamily::Svr,
            FittedModel::Nn(_) => ModelFamily::Nn,
            FittedModel::Rfr(_) => ModelFamily::Rfr,
            FittedModel::Mean(_) => ModelFamily::Mean,
        }
    }

    pub fn predict(&self, x: &[T]) -> Result<T> {
        match self {
            FittedModel::Svr(m) => m.predict(x),
            FittedModel::Nn(m) => m.predict(x),
            FittedModel::Rfr(m) => m.predict(x),
            FittedModel::Mean(v) => Ok(*v),
        }
    }
}

/// A fitted learner for one target together with the feature columns it
/// reads out of a full schema row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TrainedModel<T> {
    pub target: Target,
    /// Width of the full input rows.
    pub n_inputs: usize,
    /// Indices into the full row, ascending.
    pub kept: Vec<usize>,
    pub kept_names: Vec<String>,
    pub model: FittedModel<T>,
}

impl<T: Scalar> TrainedModel<T> {
    pub fn fit(
        x: &Matrix<T>,
        y: &[T],
        kept: &[usize],
        names: &[String],
        target: Target,
        config: &ModelConfig,
    ) -> Result<Self> {
        if names.len() != x.cols() {
            return Err(Error::ShapeMismatch {
                expected: x.cols(),
                got: names.len(),
            });
        }
        if kept.iter().any(|&j| j >= x.cols()) {
            return Err(Error::InvalidParameter("kept feature index out of range".into()));
        }
        let model = FittedModel::fit(&x.select_columns(kept), y, config)?;
        Ok(TrainedModel {
            target,
            n_inputs: x.cols(),
            kept: kept.to_vec(),
            kept_names: kept.iter().map(|&j| names[j].clone()).collect(),
            model,
        })
    }

    pub fn family(&self) -> ModelFamily {
        self.model.family()
    }

    pub fn predict(&self, row: &[T]) -> Result<T> {
        if row.len() != self.n_inputs {
            return Err(Error::ShapeMismatch {
                expected: self.n_inputs,
                got: row.len(),
            });
        }
        let z: Vec<T> = self.kept.iter().map(|&j| row[j]).collect();
        self.model.predict(&z)
    }

    pub fn predict_matrix(&self, x: &Matrix<T>) -> Result<Vec<T>> {
        x.iter_rows().map(|r| self.predict(r)).collect()
    }

    /// Importances mapped back onto the full row, for forests only.
    pub fn full_importances(&self) -> Option<Vec<f64>> {
        let FittedModel::Rfr(m) = &self.model else {
            return None;
        };
        let mut out = vec![0.0; self.n_inputs];
        for (&j, &v) in self.kept.iter().zip(&m.importances) {
            out[j] = v;
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_json_is_tagged_by_family() {
        let c = ModelConfig::Rfr(RfrParams { n_trees: 5, ..RfrParams::default() });
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.starts_with("{\"family\":\"rfr\""));
        assert_eq!(serde_json::from_str::<ModelConfig>(&s).unwrap(), c);
        assert_eq!(serde_json::from_str::<ModelConfig>("{\"family\":\"mean\"}").unwrap(), ModelConfig::Mean);
    }

    #[test]
    fn trained_model_reads_kept_columns() {
        let x = Matrix::from_rows(&[vec![9.0, 1.0, 5.0], vec![9.0, 2.0, 5.0], vec![9.0, 3.0, 5.0]], 3).unwrap();
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let cfg = ModelConfig::Rfr(RfrParams { n_trees: 1, feature_fraction: 1.0, ..RfrParams::default() });
        let m = TrainedModel::fit(&x, &[10.0, 20.0, 30.0], &[1], &names, Target::ShiftX, &cfg).unwrap();
        assert_eq!(m.kept_names, vec!["b"]);
        assert_eq!(m.predict(&[0.0, 2.0, 0.0]).unwrap(), 20.0);
        assert_eq!(m.full_importances().unwrap(), vec![0.0, 1.0, 0.0]);
        assert!(matches!(m.predict(&[1.0]), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn mean_baseline() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0]], 1).unwrap();
        let m = FittedModel::fit(&x, &[1.0, 4.0], &ModelConfig::Mean).unwrap();
        assert_eq!(m.predict(&[100.0]).unwrap(), 2.5);
    }
}
