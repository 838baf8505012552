use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{
    fcnn_backward, fcnn_forward_cached, glorot, layer_norm_backward, layer_norm_cached, Activation, Adjacency,
    Dense, NormCache, NormParams, RgcnCache, RgcnLayer,
};
use super::tensor::{lit, Scalar, Tensor};
use super::NnError;
use crate::graph::{NodeKind, ProgramGraph};

/// Width of the node-kind one-hot appended to each token embedding.
pub const KIND_WIDTH: usize = NodeKind::ALL.len();

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub embedding_dim: usize,
    /// Width of the hidden RGCN layers and of the classifier's hidden layer.
    pub hidden_dim: usize,
    pub num_rgcn_layers: usize,
    pub vector_dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            embedding_dim: 64,
            hidden_dim: 256,
            num_rgcn_layers: 2,
            vector_dim: 256,
            learning_rate: 1e-3,
            epochs: 200,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        let dims = [
            self.embedding_dim,
            self.hidden_dim,
            self.num_rgcn_layers,
            self.vector_dim,
            self.epochs,
            self.batch_size,
        ];
        if dims.contains(&0) || !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(NnError::Config("all model dimensions and the learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// A graph resolved into model inputs.
#[derive(Debug, Clone)]
pub struct GraphInput<T> {
    pub tokens: Vec<usize>,
    pub kinds: Vec<usize>,
    pub adjacency: Adjacency<T>,
}

impl<T: Scalar> GraphInput<T> {
    pub fn new(g: &ProgramGraph, vocab_size: usize) -> Result<Self, NnError> {
        if g.nodes.is_empty() {
            return Err(NnError::EmptyGraph);
        }
        if let Some(n) = g.nodes.iter().find(|n| n.vocab_index >= vocab_size) {
            return Err(NnError::VocabMismatch { index: n.vocab_index, size: vocab_size });
        }
        Ok(GraphInput {
            tokens: g.nodes.iter().map(|n| n.vocab_index).collect(),
            kinds: g.nodes.iter().map(|n| n.kind.index()).collect(),
            adjacency: Adjacency::from_graph(g),
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// The static network: token embedding with node-kind one-hot, stacked RGCN
/// layers, mean pooling, a residual from the projected mean input features,
/// layer normalisation and a dense classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticModel<T> {
    pub config: ModelConfig,
    /// Label value of each output class, ascending.
    pub labels: Vec<u32>,
    pub embedding: Tensor<T>,
    pub rgcn_layers: Vec<RgcnLayer<T>>,
    /// Projects pooled input features to the region-vector width.
    pub residual: Tensor<T>,
    pub norm: NormParams<T>,
    pub classifier: Vec<Dense<T>>,
}

pub(crate) struct ForwardCache<T> {
    x0_mean: Tensor<T>,
    layers: Vec<RgcnCache<T>>,
    norm: NormCache<T>,
    dense: Vec<(Tensor<T>, Tensor<T>)>,
}

pub(crate) struct Forward<T> {
    pub vector: Vec<T>,
    pub logits: Tensor<T>,
    pub cache: ForwardCache<T>,
}

impl<T: Scalar> StaticModel<T> {
    pub fn new(config: ModelConfig, vocab_size: usize, labels: Vec<u32>) -> Result<Self, NnError> {
        config.validate()?;
        if vocab_size == 0 || labels.is_empty() {
            return Err(NnError::Config("vocabulary and label set must be nonempty".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let d0 = config.embedding_dim + KIND_WIDTH;
        let v = config.vector_dim;
        let embedding = glorot(vocab_size, config.embedding_dim, &mut rng);
        let mut rgcn_layers = Vec::with_capacity(config.num_rgcn_layers);
        let mut d_in = d0;
        for l in 0..config.num_rgcn_layers {
            let d_out = if l + 1 == config.num_rgcn_layers { v } else { config.hidden_dim };
            rgcn_layers.push(RgcnLayer::new(d_in, d_out, Activation::Relu, &mut rng));
            d_in = d_out;
        }
        let residual = glorot(d0, v, &mut rng);
        let classifier = vec![
            Dense::new(v, config.hidden_dim, Activation::Relu, &mut rng),
            Dense::new(config.hidden_dim, labels.len(), Activation::Identity, &mut rng),
        ];
        Ok(StaticModel { config, labels, embedding, rgcn_layers, residual, norm: NormParams::new(v), classifier })
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding.rows()
    }

    pub fn num_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn vector_dim(&self) -> usize {
        self.norm.gain.cols()
    }

    pub fn input_width(&self) -> usize {
        self.embedding.cols() + KIND_WIDTH
    }

    /// A model of the same shape with every parameter zero.
    pub fn zeros_like(&self) -> Self {
        StaticModel {
            config: self.config.clone(),
            labels: self.labels.clone(),
            embedding: self.embedding.zeros_like(),
            rgcn_layers: self.rgcn_layers.iter().map(RgcnLayer::zeros_like).collect(),
            residual: self.residual.zeros_like(),
            norm: NormParams {
                gain: self.norm.gain.zeros_like(),
                bias: self.norm.bias.zeros_like(),
                eps: self.norm.eps,
            },
            classifier: self.classifier.iter().map(Dense::zeros_like).collect(),
        }
    }

    /// Every trainable tensor with a stable name, in serialisation order.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out = vec![("embedding".to_string(), &self.embedding)];
        for (l, layer) in self.rgcn_layers.iter().enumerate() {
            out.push((format!("rgcn{l}.self"), &layer.w_self));
            for (r, w) in layer.w_rel.iter().enumerate() {
                out.push((format!("rgcn{l}.rel{r}"), w));
            }
        }
        out.push(("residual".into(), &self.residual));
        out.push(("norm.gain".into(), &self.norm.gain));
        out.push(("norm.bias".into(), &self.norm.bias));
        for (k, d) in self.classifier.iter().enumerate() {
            out.push((format!("dense{k}.weight"), &d.weight));
            out.push((format!("dense{k}.bias"), &d.bias));
        }
        out
    }

    /// Mutable view in the same order as [`StaticModel::named_tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = vec![&mut self.embedding];
        for layer in &mut self.rgcn_layers {
            out.push(&mut layer.w_self);
            out.extend(layer.w_rel.iter_mut());
        }
        out.push(&mut self.residual);
        out.push(&mut self.norm.gain);
        out.push(&mut self.norm.bias);
        for d in &mut self.classifier {
            out.push(&mut d.weight);
            out.push(&mut d.bias);
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.named_tensors().iter().map(|(_, t)| t.data().len()).sum()
    }

    pub fn input(&self, g: &ProgramGraph) -> Result<GraphInput<T>, NnError> {
        GraphInput::new(g, self.vocab_size())
    }

    fn node_features(&self, g: &GraphInput<T>) -> Tensor<T> {
        let e = self.embedding.cols();
        let mut x0 = Tensor::zeros(g.len(), e + KIND_WIDTH);
        for (i, (&tok, &kind)) in g.tokens.iter().zip(&g.kinds).enumerate() {
            let row = x0.row_mut(i);
            row[..e].copy_from_slice(self.embedding.row(tok));
            row[e + kind] = T::one();
        }
        x0
    }

    pub(crate) fn forward(&self, g: &GraphInput<T>) -> Forward<T> {
        let x0 = self.node_features(g);
        let mut h = x0.clone();
        let mut layers = Vec::with_capacity(self.rgcn_layers.len());
        for layer in &self.rgcn_layers {
            let (out, cache) = layer.forward_cached(&h, &g.adjacency);
            layers.push(cache);
            h = out;
        }
        let pooled = h.mean_rows();
        let x0_mean = x0.mean_rows();
        let mut z = x0_mean.matmul(&self.residual);
        z.add_assign(&pooled);
        let (vector, norm) = layer_norm_cached(z.data(), &self.norm);
        let (logits, dense) = fcnn_forward_cached(&self.classifier, &Tensor::from_vec(1, vector.len(), vector.clone()));
        Forward { vector, logits, cache: ForwardCache { x0_mean, layers, norm, dense } }
    }

    /// Accumulates the gradient of the loss with respect to every parameter.
    pub(crate) fn backward(&self, g: &GraphInput<T>, cache: &ForwardCache<T>, d_logits: &Tensor<T>, grad: &mut Self) {
        let dy = fcnn_backward(&self.classifier, &cache.dense, d_logits, &mut grad.classifier);
        let dz = layer_norm_backward(&cache.norm, &self.norm, dy.data(), &mut grad.norm);
        let dz = Tensor::from_vec(1, dz.len(), dz);

        cache.x0_mean.t_matmul_acc(&dz, &mut grad.residual);
        let mut d_x0_mean = Tensor::zeros(1, self.input_width());
        dz.matmul_t_acc(&self.residual, &mut d_x0_mean);

        let n = g.len();
        let inv_n = T::one() / lit(n as f64);
        let mut dh = Tensor::zeros(n, self.vector_dim());
        for i in 0..n {
            for (d, &s) in dh.row_mut(i).iter_mut().zip(dz.data()) {
                *d = s * inv_n;
            }
        }
        for (l, layer) in self.rgcn_layers.iter().enumerate().rev() {
            dh = layer.backward(&cache.layers[l], &g.adjacency, &dh, &mut grad.rgcn_layers[l]);
        }
        let e = self.embedding.cols();
        for (i, &tok) in g.tokens.iter().enumerate() {
            let dst = grad.embedding.row_mut(tok);
            for k in 0..e {
                dst[k] += dh[(i, k)] + d_x0_mean[(0, k)] * inv_n;
            }
        }
    }

    /// Cross-entropy loss of `class` for one graph.
    pub fn loss(&self, g: &GraphInput<T>, class: usize) -> T {
        softmax_cross_entropy(&self.forward(g).logits, class).0
    }

    /// Loss and accumulated parameter gradients for one graph.
    pub fn loss_and_grad(&self, g: &GraphInput<T>, class: usize, grad: &mut Self) -> T {
        let f = self.forward(g);
        let (loss, d_logits) = softmax_cross_entropy(&f.logits, class);
        self.backward(g, &f.cache, &d_logits, grad);
        loss
    }

    pub fn class_of(&self, label: u32) -> Option<usize> {
        self.labels.binary_search(&label).ok()
    }

    /// Logits and post-normalisation region vector.
    pub fn logits_and_vector(&self, g: &GraphInput<T>) -> (Vec<T>, Vec<T>) {
        let f = self.forward(g);
        (f.logits.data().to_vec(), f.vector)
    }
}

/// Returns the loss and its gradient with respect to the logits.
pub(crate) fn softmax_cross_entropy<T: Scalar>(logits: &Tensor<T>, class: usize) -> (T, Tensor<T>) {
    let z = logits.data();
    let max = z.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let exps: Vec<T> = z.iter().map(|&x| (x - max).exp()).collect();
    let sum = exps.iter().fold(T::zero(), |a, &b| a + b);
    let loss = sum.ln() + max - z[class];
    let mut grad = Tensor::from_vec(1, z.len(), exps.iter().map(|&e| e / sum).collect());
    grad.data_mut()[class] -= T::one();
    (loss, grad)
}

pub(crate) fn argmax<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Predicted label and the region vector consumed by the downstream models.
pub fn predict_static<T: Scalar>(model: &StaticModel<T>, g: &ProgramGraph) -> Result<(u32, Vec<T>), NnError> {
    let input = model.input(g)?;
    let (logits, vector) = model.logits_and_vector(&input);
    Ok((model.labels[argmax(&logits)], vector))
}
