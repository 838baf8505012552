//! Dense numeric core and the static prediction network.

mod layers;
mod model;
mod serialize;
mod tensor;
mod train;

pub use layers::{
    fcnn_forward, pool_mean, residual_norm, rgcn_forward, Activation, Adjacency, Dense, NormParams, RgcnLayer,
    NORM_EPS,
};
pub use model::{predict_static, GraphInput, ModelConfig, StaticModel, KIND_WIDTH};
pub use serialize::{read_model, write_model, FORMAT_TAG};
pub use tensor::{Scalar, Tensor};
pub use train::{train_static, train_static_inputs, Adam, Trained};

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("node vocabulary index {index} outside model vocabulary of {size}")]
    VocabMismatch { index: usize, size: usize },
    #[error("training corpus has a single label ({0}); nothing to learn")]
    DegenerateCorpus(u32),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("training diverged to non-finite parameters")]
    NonFinite,
    #[error("malformed model file line {line}: {message}")]
    Format { line: usize, message: String },
}
