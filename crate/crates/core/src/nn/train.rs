use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{GraphInput, ModelConfig, StaticModel};
use super::tensor::{lit, Scalar, Tensor};
use super::NnError;
use crate::graph::ProgramGraph;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Adam optimiser state for a fixed list of parameter tensors.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    lr: T,
    step: i32,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(lr: f64, shapes: &[(usize, usize)]) -> Self {
        let zeros = || shapes.iter().map(|&(r, c)| Tensor::zeros(r, c)).collect();
        Adam { lr: lit(lr), step: 0, m: zeros(), v: zeros() }
    }

    pub fn update(&mut self, params: Vec<&mut Tensor<T>>, grads: Vec<&mut Tensor<T>>) {
        self.step += 1;
        let (b1, b2, eps): (T, T, T) = (lit(BETA1), lit(BETA2), lit(ADAM_EPS));
        let c1 = T::one() - b1.powi(self.step);
        let c2 = T::one() - b2.powi(self.step);
        for (k, (p, g)) in params.into_iter().zip(grads).enumerate() {
            let (m, v) = (self.m[k].data_mut(), self.v[k].data_mut());
            for (((w, &gi), mi), vi) in p.data_mut().iter_mut().zip(g.data()).zip(m).zip(v) {
                *mi = b1 * *mi + (T::one() - b1) * gi;
                *vi = b2 * *vi + (T::one() - b2) * gi * gi;
                let m_hat = *mi / c1;
                let v_hat = *vi / c2;
                *w -= self.lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

/// Result of [`train_static`].
#[derive(Debug, Clone)]
pub struct Trained<T> {
    pub model: StaticModel<T>,
    /// Loss over the whole corpus before training, then the mean mini-batch
    /// loss of every epoch.
    pub loss_trace: Vec<T>,
}

/// Fits the static model to `(graph, label)` pairs by mini-batch Adam on the
/// cross-entropy loss.
pub fn train_static<T: Scalar>(
    samples: &[(&ProgramGraph, u32)],
    vocab_size: usize,
    cfg: &ModelConfig,
) -> Result<Trained<T>, NnError> {
    let inputs = samples
        .iter()
        .map(|(g, label)| Ok((GraphInput::new(g, vocab_size)?, *label)))
        .collect::<Result<Vec<_>, NnError>>()?;
    train_static_inputs(&inputs, vocab_size, cfg)
}

pub fn train_static_inputs<T: Scalar>(
    samples: &[(GraphInput<T>, u32)],
    vocab_size: usize,
    cfg: &ModelConfig,
) -> Result<Trained<T>, NnError> {
    if samples.is_empty() {
        return Err(NnError::EmptyCorpus);
    }
    let mut labels: Vec<u32> = samples.iter().map(|s| s.1).collect();
    labels.sort_unstable();
    labels.dedup();
    if labels.len() < 2 {
        return Err(NnError::DegenerateCorpus(labels[0]));
    }
    let mut model = StaticModel::new(cfg.clone(), vocab_size, labels)?;
    let classes: Vec<usize> = samples.iter().map(|s| model.class_of(s.1).expect("label in set")).collect();

    let n: T = lit(samples.len() as f64);
    let initial = samples.iter().zip(&classes).fold(T::zero(), |a, ((g, _), &c)| a + model.loss(g, c)) / n;
    let mut loss_trace = vec![initial];

    let shapes: Vec<(usize, usize)> = model.named_tensors().iter().map(|(_, t)| t.shape()).collect();
    let mut adam = Adam::new(cfg.learning_rate, &shapes);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x05ee_d0fb_a7c4);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = T::zero();
        for batch in order.chunks(cfg.batch_size) {
            let mut grad = model.zeros_like();
            let mut batch_loss = T::zero();
            for &k in batch {
                batch_loss += model.loss_and_grad(&samples[k].0, classes[k], &mut grad);
            }
            let scale = T::one() / lit(batch.len() as f64);
            let mut grads = grad.tensors_mut();
            grads.iter_mut().for_each(|t| t.scale(scale));
            adam.update(model.tensors_mut(), grads);
            epoch_loss += batch_loss;
        }
        loss_trace.push(epoch_loss / n);
    }
    if model.named_tensors().iter().any(|(_, t)| !t.is_finite()) {
        return Err(NnError::NonFinite);
    }
    Ok(Trained { model, loss_trace })
}
