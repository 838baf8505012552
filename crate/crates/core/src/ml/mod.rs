//! CART decision trees and genetic-algorithm feature-subset selection.

mod ga;
mod tree;

pub use ga::{cv_accuracy, ga_search, ga_select_features, stratified_folds, Chromosome, GaConfig, GaOutcome};
pub use tree::{fit_tree, gini, predict_tree, DecisionTree, TreeNode};

#[derive(Debug, thiserror::Error)]
pub enum MlError {
    #[error("no samples")]
    Empty,
    #[error("{samples} samples but {labels} labels")]
    LengthMismatch { samples: usize, labels: usize },
    #[error("expected {expected} features, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("feature values must be finite")]
    NonFinite,
    #[error("subset size {subset} exceeds feature count {features}")]
    SubsetTooLarge { subset: usize, features: usize },
    #[error("invalid GA configuration: {0}")]
    Config(String),
    #[error("malformed tree text: {0}")]
    Format(String),
}
