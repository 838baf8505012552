use std::fmt::Write;

use super::layers::Activation;
use super::model::{ModelConfig, StaticModel};
use super::tensor::{lit, Scalar};
use super::NnError;

pub const FORMAT_TAG: &str = "irtune-static-model 1";

fn hex<T: Scalar>(x: T) -> String {
    format!("{:016x}", x.to_f64().expect("finite scalar").to_bits())
}

fn unhex<T: Scalar>(s: &str) -> Option<T> {
    u64::from_str_radix(s, 16).ok().map(|b| lit(f64::from_bits(b)))
}

/// Renders the model as a versioned text container: an architecture section
/// followed by one block of base-16 encoded `f64` values per tensor.
pub fn write_model<T: Scalar>(m: &StaticModel<T>) -> String {
    let c = &m.config;
    let mut out = String::new();
    let _ = writeln!(out, "{FORMAT_TAG}");
    let _ = writeln!(out, "[architecture]");
    let _ = writeln!(out, "embedding_dim {}", c.embedding_dim);
    let _ = writeln!(out, "hidden_dim {}", c.hidden_dim);
    let _ = writeln!(out, "num_rgcn_layers {}", c.num_rgcn_layers);
    let _ = writeln!(out, "vector_dim {}", c.vector_dim);
    let _ = writeln!(out, "learning_rate {:?}", c.learning_rate);
    let _ = writeln!(out, "epochs {}", c.epochs);
    let _ = writeln!(out, "batch_size {}", c.batch_size);
    let _ = writeln!(out, "seed {}", c.seed);
    let _ = writeln!(out, "vocab_size {}", m.vocab_size());
    let labels: Vec<String> = m.labels.iter().map(u32::to_string).collect();
    let _ = writeln!(out, "labels {}", labels.join(" "));
    let _ = writeln!(out, "node_features embedding+kind_onehot");
    let _ = writeln!(out, "pooling mean");
    let _ = writeln!(out, "residual mean_input_projection");
    let _ = writeln!(out, "norm layer {}", hex(m.norm.eps));
    for l in &m.rgcn_layers {
        let _ = writeln!(out, "layer rgcn {} {} {} {}", l.d_in(), l.d_out(), l.w_rel.len(), l.activation.name());
    }
    for d in &m.classifier {
        let _ = writeln!(out, "layer dense {} {} {}", d.weight.rows(), d.weight.cols(), d.activation.name());
    }
    let _ = writeln!(out, "[parameters]");
    for (name, t) in m.named_tensors() {
        let _ = writeln!(out, "param {} {} {}", name, t.rows(), t.cols());
        for i in 0..t.rows() {
            let row: Vec<String> = t.row(i).iter().map(|&x| hex(x)).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    let _ = writeln!(out, "[end]");
    out
}

pub fn read_model<T: Scalar>(text: &str) -> Result<StaticModel<T>, NnError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let fail = |line: usize, message: &str| NnError::Format { line, message: message.to_string() };
    match lines.next() {
        Some((_, FORMAT_TAG)) => {}
        Some((n, _)) => return Err(fail(n, "unsupported model format tag")),
        None => return Err(fail(0, "empty model file")),
    }
    match lines.next() {
        Some((_, "[architecture]")) => {}
        other => return Err(fail(other.map_or(0, |o| o.0), "expected [architecture]")),
    }
    let mut cfg = ModelConfig::default();
    let mut vocab_size = 0;
    let mut labels = Vec::new();
    let mut eps = None;
    let mut activations = Vec::new();
    for (n, line) in lines.by_ref() {
        if line == "[parameters]" {
            break;
        }
        let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
        let num = || rest.parse::<usize>().map_err(|_| fail(n, "bad integer"));
        match key {
            "embedding_dim" => cfg.embedding_dim = num()?,
            "hidden_dim" => cfg.hidden_dim = num()?,
            "num_rgcn_layers" => cfg.num_rgcn_layers = num()?,
            "vector_dim" => cfg.vector_dim = num()?,
            "learning_rate" => cfg.learning_rate = rest.parse().map_err(|_| fail(n, "bad learning rate"))?,
            "epochs" => cfg.epochs = num()?,
            "batch_size" => cfg.batch_size = num()?,
            "seed" => cfg.seed = rest.parse().map_err(|_| fail(n, "bad seed"))?,
            "vocab_size" => vocab_size = num()?,
            "labels" => {
                labels = rest
                    .split_whitespace()
                    .map(|s| s.parse::<u32>().map_err(|_| fail(n, "bad label")))
                    .collect::<Result<_, _>>()?
            }
            "norm" => {
                let v = rest.strip_prefix("layer ").and_then(unhex::<T>);
                eps = Some(v.ok_or_else(|| fail(n, "bad norm descriptor"))?);
            }
            "layer" => {
                let act = rest.rsplit(' ').next().and_then(Activation::parse);
                activations.push(act.ok_or_else(|| fail(n, "bad layer activation"))?);
            }
            "node_features" | "pooling" | "residual" => {}
            _ => return Err(fail(n, "unknown architecture key")),
        }
    }
    let mut model = StaticModel::<T>::new(cfg, vocab_size, labels).map_err(|e| fail(0, &e.to_string()))?;
    if let Some(eps) = eps {
        model.norm.eps = eps;
    }
    let layer_count = model.rgcn_layers.len() + model.classifier.len();
    if activations.len() != layer_count {
        return Err(fail(0, "layer list disagrees with the architecture"));
    }
    let (rgcn_acts, dense_acts) = activations.split_at(model.rgcn_layers.len());
    for (l, &a) in model.rgcn_layers.iter_mut().zip(rgcn_acts) {
        l.activation = a;
    }
    for (d, &a) in model.classifier.iter_mut().zip(dense_acts) {
        d.activation = a;
    }

    let names: Vec<String> = model.named_tensors().into_iter().map(|(s, _)| s).collect();
    for (name, t) in names.iter().zip(model.tensors_mut()) {
        let (n, header) = lines.next().ok_or_else(|| fail(0, "truncated parameter section"))?;
        let expected = format!("param {} {} {}", name, t.rows(), t.cols());
        if header != expected {
            return Err(fail(n, &format!("expected `{expected}`")));
        }
        for i in 0..t.rows() {
            let (n, row) = lines.next().ok_or_else(|| fail(0, "truncated parameter block"))?;
            let values: Vec<T> =
                row.split(' ').map(|s| unhex(s).ok_or_else(|| fail(n, "bad hex value"))).collect::<Result<_, _>>()?;
            if values.len() != t.cols() {
                return Err(fail(n, "parameter row width"));
            }
            t.row_mut(i).copy_from_slice(&values);
        }
    }
    match lines.next() {
        Some((_, "[end]")) => Ok(model),
        other => Err(fail(other.map_or(0, |o| o.0), "expected [end]")),
    }
}
