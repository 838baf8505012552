pub mod ir;
pub mod passes;
pub mod graph;
pub mod nn;
pub mod ml;
pub mod config;
pub mod dataset;
pub mod pipeline;

/// Scalar type used by the pipeline.
pub type Real = f64;
pub type Tensor = nn::Tensor<Real>;
pub type StaticModel = nn::StaticModel<Real>;
pub type RgcnLayer = nn::RgcnLayer<Real>;
