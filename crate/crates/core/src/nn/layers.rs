use rand::Rng;

use super::tensor::{lit, Scalar, Tensor};
use super::NnError;
use crate::graph::{ProgramGraph, NUM_RELATIONS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "relu" => Some(Activation::Relu),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }

    fn apply<T: Scalar>(self, t: &mut Tensor<T>) {
        if self == Activation::Relu {
            t.data_mut().iter_mut().for_each(|x| *x = x.max(T::zero()));
        }
    }

    /// Zeroes gradient entries whose pre-activation was clipped.
    fn backprop<T: Scalar>(self, pre: &Tensor<T>, grad: &mut Tensor<T>) {
        if self == Activation::Relu {
            for (g, &a) in grad.data_mut().iter_mut().zip(pre.data()) {
                if a <= T::zero() {
                    *g = T::zero();
                }
            }
        }
    }
}

/// Glorot-uniform initialisation.
pub(crate) fn glorot<T: Scalar, R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Tensor<T> {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    Tensor::from_vec(rows, cols, (0..rows * cols).map(|_| lit(rng.gen_range(-a..a))).collect())
}

/// Per-relation neighbour lists with the `1/c_{i,r}` weights folded in.
#[derive(Debug, Clone)]
pub struct Adjacency<T> {
    pub nodes: usize,
    /// `edges[r]` holds `(i, j, 1/c_{i,r})` for each message `j → i`.
    pub edges: Vec<Vec<(usize, usize, T)>>,
}

impl<T: Scalar> Adjacency<T> {
    /// `c_{i,r}` counts incoming edges of type `r`, so parallel edges with
    /// different positions each contribute.
    pub fn from_graph(g: &ProgramGraph) -> Self {
        let n = g.nodes.len();
        let mut counts = vec![[0usize; NUM_RELATIONS]; n];
        for (_, dst, r) in g.typed_edges() {
            counts[dst][r] += 1;
        }
        let mut edges = vec![Vec::new(); NUM_RELATIONS];
        for (src, dst, r) in g.typed_edges() {
            edges[r].push((dst, src, T::one() / lit(counts[dst][r] as f64)));
        }
        Adjacency { nodes: n, edges }
    }

    /// `M_r · h` for every relation.
    fn aggregate(&self, h: &Tensor<T>) -> Vec<Option<Tensor<T>>> {
        self.edges
            .iter()
            .map(|list| {
                if list.is_empty() {
                    return None;
                }
                let mut agg = Tensor::zeros(h.rows(), h.cols());
                for &(i, j, w) in list {
                    for (d, &s) in agg.row_mut(i).iter_mut().zip(h.row(j)) {
                        *d += w * s;
                    }
                }
                Some(agg)
            })
            .collect()
    }

    /// Adds `M_rᵀ · g` into `out`.
    fn scatter_back(&self, r: usize, g: &Tensor<T>, out: &mut Tensor<T>) {
        for &(i, j, w) in &self.edges[r] {
            for (d, &s) in out.row_mut(j).iter_mut().zip(g.row(i)) {
                *d += w * s;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RgcnLayer<T> {
    pub w_self: Tensor<T>,
    pub w_rel: Vec<Tensor<T>>,
    pub activation: Activation,
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub struct RgcnCache<T> {
    input: Tensor<T>,
    agg: Vec<Option<Tensor<T>>>,
    pre: Tensor<T>,
}

impl<T: Scalar> RgcnLayer<T> {
    pub fn new<R: Rng>(d_in: usize, d_out: usize, activation: Activation, rng: &mut R) -> Self {
        RgcnLayer {
            w_self: glorot(d_in, d_out, rng),
            w_rel: (0..NUM_RELATIONS).map(|_| glorot(d_in, d_out, rng)).collect(),
            activation,
        }
    }

    pub fn d_in(&self) -> usize {
        self.w_self.rows()
    }

    pub fn d_out(&self) -> usize {
        self.w_self.cols()
    }

    pub fn zeros_like(&self) -> Self {
        RgcnLayer {
            w_self: self.w_self.zeros_like(),
            w_rel: self.w_rel.iter().map(Tensor::zeros_like).collect(),
            activation: self.activation,
        }
    }

    pub(crate) fn forward_cached(&self, h: &Tensor<T>, adj: &Adjacency<T>) -> (Tensor<T>, RgcnCache<T>) {
        let agg = adj.aggregate(h);
        let mut pre = h.matmul(&self.w_self);
        for (a, w) in agg.iter().zip(&self.w_rel) {
            if let Some(a) = a {
                a.matmul_acc(w, &mut pre);
            }
        }
        let mut out = pre.clone();
        self.activation.apply(&mut out);
        (out, RgcnCache { input: h.clone(), agg, pre })
    }

    /// Accumulates parameter gradients into `grad` and returns the gradient
    /// with respect to the layer input.
    pub(crate) fn backward(
        &self,
        cache: &RgcnCache<T>,
        adj: &Adjacency<T>,
        d_out: &Tensor<T>,
        grad: &mut RgcnLayer<T>,
    ) -> Tensor<T> {
        let mut d_pre = d_out.clone();
        self.activation.backprop(&cache.pre, &mut d_pre);
        cache.input.t_matmul_acc(&d_pre, &mut grad.w_self);
        let mut d_in = Tensor::zeros(cache.input.rows(), self.d_in());
        d_pre.matmul_t_acc(&self.w_self, &mut d_in);
        for r in 0..NUM_RELATIONS {
            let Some(agg) = &cache.agg[r] else { continue };
            agg.t_matmul_acc(&d_pre, &mut grad.w_rel[r]);
            let mut d_agg = Tensor::zeros(agg.rows(), agg.cols());
            d_pre.matmul_t_acc(&self.w_rel[r], &mut d_agg);
            adj.scatter_back(r, &d_agg, &mut d_in);
        }
        d_in
    }
}

/// One relational graph convolution over node features `h`.
pub fn rgcn_forward<T: Scalar>(layer: &RgcnLayer<T>, h: &Tensor<T>, g: &ProgramGraph) -> Result<Tensor<T>, NnError> {
    if h.rows() != g.nodes.len() {
        return Err(NnError::Shape(format!("{} feature rows for {} nodes", h.rows(), g.nodes.len())));
    }
    if h.cols() != layer.d_in() {
        return Err(NnError::Shape(format!("feature width {} for layer input {}", h.cols(), layer.d_in())));
    }
    if layer.w_rel.len() != NUM_RELATIONS {
        return Err(NnError::Shape(format!("layer has {} relation weights", layer.w_rel.len())));
    }
    Ok(layer.forward_cached(h, &Adjacency::from_graph(g)).0)
}

pub fn pool_mean<T: Scalar>(h: &Tensor<T>) -> Result<Tensor<T>, NnError> {
    if h.rows() == 0 {
        return Err(NnError::EmptyGraph);
    }
    Ok(h.mean_rows())
}

/// Learned gain and bias of the layer normalisation.
#[derive(Debug, Clone, PartialEq)]
pub struct NormParams<T> {
    pub gain: Tensor<T>,
    pub bias: Tensor<T>,
    pub eps: T,
}

pub const NORM_EPS: f64 = 1e-8;

impl<T: Scalar> NormParams<T> {
    pub fn new(width: usize) -> Self {
        let mut gain = Tensor::zeros(1, width);
        gain.fill(T::one());
        NormParams { gain, bias: Tensor::zeros(1, width), eps: lit(NORM_EPS) }
    }
}

#[derive(Debug, Clone)]
pub struct NormCache<T> {
    centred: Vec<T>,
    std: T,
    normalised: Vec<T>,
}

pub(crate) fn layer_norm_cached<T: Scalar>(z: &[T], p: &NormParams<T>) -> (Vec<T>, NormCache<T>) {
    let n: T = lit(z.len() as f64);
    let mean = z.iter().fold(T::zero(), |a, &b| a + b) / n;
    let centred: Vec<T> = z.iter().map(|&x| x - mean).collect();
    let std = (centred.iter().fold(T::zero(), |a, &d| a + d * d) / n).sqrt();
    let normalised: Vec<T> = centred.iter().map(|&d| d / (std + p.eps)).collect();
    let out = normalised
        .iter()
        .zip(p.gain.data().iter().zip(p.bias.data()))
        .map(|(&x, (&g, &b))| g * x + b)
        .collect();
    (out, NormCache { centred, std, normalised })
}

pub(crate) fn layer_norm_backward<T: Scalar>(
    cache: &NormCache<T>,
    p: &NormParams<T>,
    dy: &[T],
    grad: &mut NormParams<T>,
) -> Vec<T> {
    let n: T = lit(dy.len() as f64);
    let s = cache.std + p.eps;
    let dxhat: Vec<T> = dy.iter().zip(p.gain.data()).map(|(&d, &g)| d * g).collect();
    for (k, &d) in dy.iter().enumerate() {
        grad.gain.data_mut()[k] += d * cache.normalised[k];
        grad.bias.data_mut()[k] += d;
    }
    let mean_dxhat = dxhat.iter().fold(T::zero(), |a, &b| a + b) / n;
    let dot = dxhat.iter().zip(&cache.centred).fold(T::zero(), |a, (&g, &d)| a + g * d);
    dxhat
        .iter()
        .zip(&cache.centred)
        .map(|(&g, &d)| {
            let spread = if cache.std > T::zero() { d * dot / (n * cache.std * s * s) } else { T::zero() };
            (g - mean_dxhat) / s - spread
        })
        .collect()
}

/// Layer normalisation of `x_in + x_out`.
pub fn residual_norm<T: Scalar>(x_in: &[T], x_out: &[T], p: &NormParams<T>) -> Result<Vec<T>, NnError> {
    if x_in.len() != x_out.len() || x_in.len() != p.gain.cols() {
        return Err(NnError::Shape(format!(
            "residual widths {} and {} with norm width {}",
            x_in.len(),
            x_out.len(),
            p.gain.cols()
        )));
    }
    let z: Vec<T> = x_in.iter().zip(x_out).map(|(&a, &b)| a + b).collect();
    Ok(layer_norm_cached(&z, p).0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
    pub activation: Activation,
}

impl<T: Scalar> Dense<T> {
    pub fn new<R: Rng>(d_in: usize, d_out: usize, activation: Activation, rng: &mut R) -> Self {
        Dense { weight: glorot(d_in, d_out, rng), bias: Tensor::zeros(1, d_out), activation }
    }

    pub fn zeros_like(&self) -> Self {
        Dense { weight: self.weight.zeros_like(), bias: self.bias.zeros_like(), activation: self.activation }
    }
}

/// Affine layers; `caches[k]` is (input, pre-activation) of layer `k`.
pub(crate) fn fcnn_forward_cached<T: Scalar>(
    layers: &[Dense<T>],
    v: &Tensor<T>,
) -> (Tensor<T>, Vec<(Tensor<T>, Tensor<T>)>) {
    let mut x = v.clone();
    let mut caches = Vec::with_capacity(layers.len());
    for l in layers {
        let mut pre = x.matmul(&l.weight);
        pre.add_assign(&l.bias);
        let mut out = pre.clone();
        l.activation.apply(&mut out);
        caches.push((x, pre));
        x = out;
    }
    (x, caches)
}

pub(crate) fn fcnn_backward<T: Scalar>(
    layers: &[Dense<T>],
    caches: &[(Tensor<T>, Tensor<T>)],
    d_logits: &Tensor<T>,
    grads: &mut [Dense<T>],
) -> Tensor<T> {
    let mut d = d_logits.clone();
    for ((l, (input, pre)), g) in layers.iter().zip(caches).zip(grads.iter_mut()).rev() {
        l.activation.backprop(pre, &mut d);
        input.t_matmul_acc(&d, &mut g.weight);
        g.bias.add_assign(&d);
        let mut d_in = Tensor::zeros(1, l.weight.rows());
        d.matmul_t_acc(&l.weight, &mut d_in);
        d = d_in;
    }
    d
}

/// Classifier logits for a `1 × d` region vector.
pub fn fcnn_forward<T: Scalar>(layers: &[Dense<T>], v: &Tensor<T>) -> Result<Tensor<T>, NnError> {
    let mut width = v.cols();
    for l in layers {
        if l.weight.rows() != width || l.bias.cols() != l.weight.cols() {
            return Err(NnError::Shape(format!("dense layer {:?} after width {width}", l.weight.shape())));
        }
        width = l.weight.cols();
    }
    Ok(fcnn_forward_cached(layers, v).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphEdge, GraphNode, NodeKind, Relation};

    fn graph(n: usize, edges: &[(usize, usize, Relation)]) -> ProgramGraph {
        ProgramGraph {
            region_id: "t".into(),
            flag_seq_id: 0,
            nodes: (0..n)
                .map(|_| GraphNode { kind: NodeKind::Instruction, token: "add".into(), vocab_index: 0 })
                .collect(),
            edges: edges
                .iter()
                .enumerate()
                .map(|(k, &(src, dst, relation))| GraphEdge { src, dst, relation, position: k as u32 })
                .collect(),
        }
    }

    fn layer(d: usize, w_self: Tensor<f64>, rel: Tensor<f64>) -> RgcnLayer<f64> {
        let mut w_rel = vec![Tensor::zeros(d, d); NUM_RELATIONS];
        w_rel[Relation::Data.index()] = rel;
        RgcnLayer { w_self, w_rel, activation: Activation::Identity }
    }

    #[test]
    fn isolated_node_only_sees_self_weight() {
        let w = Tensor::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let l = layer(2, w.clone(), Tensor::identity(2));
        let h = Tensor::from_vec(1, 2, vec![0.5, -1.0]);
        assert_eq!(rgcn_forward(&l, &h, &graph(1, &[])).unwrap(), h.matmul(&w));
    }

    #[test]
    fn single_edge_adds_neighbour() {
        // the edge 1 -> 0 also produces a reverse message 0 -> 1, silenced here
        let l = layer(2, Tensor::identity(2), Tensor::identity(2));
        let h = Tensor::from_rows(&[vec![1.0, 2.0], vec![10.0, 20.0]]);
        let out = rgcn_forward(&l, &h, &graph(2, &[(1, 0, Relation::Data)])).unwrap();
        assert_eq!(out.row(0), &[11.0, 22.0]);
        assert_eq!(out.row(1), &[10.0, 20.0]);
    }

    #[test]
    fn two_neighbours_are_averaged() {
        let l = layer(2, Tensor::zeros(2, 2), Tensor::identity(2));
        let h = Tensor::from_rows(&[vec![0.0, 0.0], vec![2.0, 4.0], vec![6.0, -8.0]]);
        let g = graph(3, &[(1, 0, Relation::Data), (2, 0, Relation::Data)]);
        let out = rgcn_forward(&l, &h, &g).unwrap();
        assert_eq!(out.row(0), &[4.0, -2.0]);
    }

    #[test]
    fn forward_rejects_shape_mismatch() {
        let l = layer(2, Tensor::identity(2), Tensor::identity(2));
        let h = Tensor::zeros(3, 2);
        assert!(matches!(rgcn_forward(&l, &h, &graph(2, &[])), Err(NnError::Shape(_))));
        let narrow = Tensor::zeros(2, 3);
        assert!(rgcn_forward(&l, &narrow, &graph(2, &[])).is_err());
    }

    #[test]
    fn pooling() {
        let one = Tensor::from_vec(1, 3, vec![1.0, 2.0, 3.0]);
        assert_eq!(pool_mean(&one).unwrap(), one);
        let h = Tensor::from_rows(&[vec![1.0, 5.0], vec![2.0, -1.0], vec![4.5, 0.25]]);
        let pooled = pool_mean(&h).unwrap();
        for j in 0..2 {
            let mut s = 0.0f64;
            for i in 0..3 {
                s += h[(i, j)];
            }
            assert!((pooled[(0, j)] - s / 3.0).abs() < 1e-15);
        }
        assert!(matches!(pool_mean(&Tensor::<f64>::zeros(0, 2)), Err(NnError::EmptyGraph)));
    }

    #[test]
    fn constant_input_normalises_to_zero() {
        let p = NormParams::<f64>::new(4);
        let out = residual_norm(&[0.0; 4], &[3.0; 4], &p).unwrap();
        assert_eq!(out, vec![0.0; 4]);
    }

    #[test]
    fn standardised_input_is_unchanged() {
        let p = NormParams::<f64>::new(4);
        let x = [1.0, -1.0, 1.0, -1.0];
        let out = residual_norm(&x, &[0.0; 4], &p).unwrap();
        for (a, b) in out.iter().zip(x) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn random_vector_has_zero_mean_unit_variance() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..64).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let out = residual_norm(&x, &vec![0.0; 64], &NormParams::new(64)).unwrap();
        let mean = out.iter().sum::<f64>() / 64.0;
        let var = out.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 64.0;
        assert!(mean.abs() < 1e-6);
        assert!((var - 1.0).abs() < 1e-6);
        assert!(residual_norm(&x, &[0.0; 3], &NormParams::new(64)).is_err());
    }

    #[test]
    fn dense_layers() {
        let v = Tensor::from_vec(1, 2, vec![3.0, -4.0]);
        let ident = Dense { weight: Tensor::identity(2), bias: Tensor::zeros(1, 2), activation: Activation::Identity };
        assert_eq!(fcnn_forward(&[ident], &v).unwrap(), v);

        let zero = Dense { weight: Tensor::zeros(2, 3), bias: Tensor::zeros(1, 3), activation: Activation::Identity };
        assert_eq!(fcnn_forward(&[zero], &v).unwrap().data(), &[0.0; 3]);

        // [3, -4] . [[1, 2], [0, 1]] + [0, 1] = [3, 3] -> relu -> [3, 3] . [[1], [-2]] = [-3]
        let l1 = Dense {
            weight: Tensor::from_vec(2, 2, vec![1.0, 2.0, 0.0, 1.0]),
            bias: Tensor::from_vec(1, 2, vec![0.0, 1.0]),
            activation: Activation::Relu,
        };
        let l2 = Dense {
            weight: Tensor::from_vec(2, 1, vec![1.0, -2.0]),
            bias: Tensor::zeros(1, 1),
            activation: Activation::Identity,
        };
        assert_eq!(fcnn_forward(&[l1.clone(), l2.clone()], &v).unwrap().data(), &[-3.0]);
        assert!(fcnn_forward(&[l2, l1], &v).is_err());
    }
}
