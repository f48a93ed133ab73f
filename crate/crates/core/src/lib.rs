//! Reduced-precision fraud-detection benchmark toolkit.
//!
//! The pipeline loads the credit-card transaction table, stores the feature
//! matrix at 32 or 16 bits, rebalances the training partition, fits a random
//! forest and scores it. [`bench`] wires the stages together and times them.

pub mod bench;
pub mod data;
pub mod error;
pub mod forest;
pub mod lowprec;
pub mod metrics;
pub mod resample;
pub mod seed;

pub use data::{ClassStats, Dataset, ValidationReport};
pub use error::{Error, Result};
pub use forest::{Criterion, ForestConfig, ForestModel, MaxFeatures, SplitRule, Tree, TreeNode};
pub use lowprec::{
    decode, encode, encode_with, quantization_error, quantize_matrix, Format16, Packed16,
    PrecisionFormat, PrecisionKind, QuantizedMatrix, Rounding,
};
pub use metrics::{confusion, derive_metrics, roc_auc, ConfusionMatrix, MetricsReport};
pub use resample::ResampleMode;
