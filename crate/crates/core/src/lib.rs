//! Pad geometry, feature extraction, three regressors and a
//! cross-validation harness for predicting how far two-terminal chip
//! components move during reflow soldering.
//!
//! Numeric code is generic over [`Scalar`]; records and reports are `f64`.

pub mod datagen;
pub mod error;
pub mod eval;
pub mod features;
pub mod geometry;
pub mod matrix;
pub mod models;
pub mod preprocess;
pub mod scalar;

pub use error::{Error, Result};
pub use features::{extract_features, feature_names, AssemblyRecord, FeatureVector, Target, FEATURE_COUNT};
pub use matrix::Matrix;
pub use models::{FittedModel, ModelConfig, ModelFamily, TrainedModel};
pub use scalar::Scalar;

pub type Rect2Df32 = geometry::Rect2D<f32>;
pub type Rect2Df64 = geometry::Rect2D<f64>;
pub type MatrixF32 = Matrix<f32>;
pub type MatrixF64 = Matrix<f64>;
pub type DatasetF32 = preprocess::Dataset<f32>;
pub type DatasetF64 = preprocess::Dataset<f64>;
pub type TrainedModelF32 = TrainedModel<f32>;
pub type TrainedModelF64 = TrainedModel<f64>;
