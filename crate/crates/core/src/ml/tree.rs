use std::fmt::Write;

use super::MlError;

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    /// Samples with `x[feature] <= threshold` go left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    /// `class_counts` holds `(label, count)` pairs in ascending label order.
    Leaf { label: u32, class_counts: Vec<(u32, usize)> },
}

/// CART classifier with Gini impurity. Node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub n_features: usize,
    pub nodes: Vec<TreeNode>,
}

/// Gini impurity `1 - Σ p_k²` of a class histogram.
pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

struct Split {
    feature: usize,
    threshold: f64,
    /// Children purity `Σ left²/nl + Σ right²/nr`, held as an exact fraction.
    num: u128,
    den: u128,
}

/// Feature-major samples with class indices, shared by every fit over a subset
/// of rows and columns.
pub(crate) struct Columns<'a> {
    pub cols: Vec<&'a [f64]>,
    pub y: &'a [usize],
    pub classes: &'a [u32],
    /// `orders[f]` lists all samples in ascending order of column `f`.
    pub orders: Vec<Vec<u32>>,
}

impl<'a> Columns<'a> {
    pub fn new(cols: Vec<&'a [f64]>, y: &'a [usize], classes: &'a [u32]) -> Self {
        let orders = cols
            .iter()
            .map(|col| {
                let mut order: Vec<u32> = (0..y.len() as u32).collect();
                order.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]));
                order
            })
            .collect();
        Columns { cols, y, classes, orders }
    }

    /// Fits on the rows with `keep[i]` set, using the listed columns; the tree
    /// refers to them as features `0..features.len()`.
    pub fn fit(&self, features: &[usize], keep: &[bool]) -> DecisionTree {
        let n = keep.iter().filter(|&&k| k).count();
        let mut orders = Vec::with_capacity(features.len() * n);
        for &f in features {
            orders.extend(self.orders[f].iter().copied().filter(|&i| keep[i as usize]));
        }
        let mut fitter = Fitter {
            cols: features.iter().map(|&f| self.cols[f]).collect(),
            y: self.y,
            classes: self.classes,
            nodes: Vec::new(),
            goes_left: vec![false; self.y.len()],
            stride: n,
            orders,
            scratch: vec![0; n],
            hist: vec![0; self.classes.len()],
            left: vec![0; self.classes.len()],
            right: vec![0; self.classes.len()],
        };
        if features.is_empty() {
            let hist = self.histogram(keep);
            return DecisionTree { n_features: 0, nodes: vec![fitter.leaf(&hist)] };
        }
        fitter.grow(0, n);
        DecisionTree { n_features: features.len(), nodes: fitter.nodes }
    }

    fn histogram(&self, keep: &[bool]) -> Vec<u64> {
        let mut h = vec![0; self.classes.len()];
        for (i, _) in keep.iter().enumerate().filter(|(_, &k)| k) {
            h[self.y[i]] += 1;
        }
        h
    }
}

struct Fitter<'a> {
    cols: Vec<&'a [f64]>,
    y: &'a [usize],
    classes: &'a [u32],
    nodes: Vec<TreeNode>,
    goes_left: Vec<bool>,
    /// Feature `f`'s sample order occupies `orders[f * stride..(f + 1) * stride]`;
    /// a node owns the same `start..end` window of every feature.
    stride: usize,
    orders: Vec<u32>,
    scratch: Vec<u32>,
    hist: Vec<u64>,
    left: Vec<u64>,
    right: Vec<u64>,
}

impl Fitter<'_> {
    fn leaf(&self, hist: &[u64]) -> TreeNode {
        // majority; ties go to the lowest label
        let mut best = 0;
        for (k, &c) in hist.iter().enumerate() {
            if c > hist[best] {
                best = k;
            }
        }
        TreeNode::Leaf {
            label: self.classes[best],
            class_counts: hist.iter().enumerate().map(|(k, &c)| (self.classes[k], c as usize)).collect(),
        }
    }

    fn best_split(&mut self, start: usize, end: usize, hist: &[u64]) -> Option<Split> {
        let n = (end - start) as u64;
        // children that are both pure reach this bound and cannot be beaten
        let perfect = n as u128;
        let mut best: Option<Split> = None;
        let mut screen = f64::NEG_INFINITY;
        let (mut left, mut right) = (std::mem::take(&mut self.left), std::mem::take(&mut self.right));
        for f in 0..self.cols.len() {
            let col = self.cols[f];
            let order = &self.orders[f * self.stride + start..f * self.stride + end];
            left.iter_mut().for_each(|c| *c = 0);
            right.copy_from_slice(hist);
            let mut sq_left = 0u64;
            let mut sq_right: u64 = right.iter().map(|c| c * c).sum();
            for p in 0..order.len() - 1 {
                let c = self.y[order[p] as usize];
                sq_left += 2 * left[c] + 1;
                sq_right -= 2 * right[c] - 1;
                left[c] += 1;
                right[c] -= 1;
                let (lo, hi) = (col[order[p] as usize], col[order[p + 1] as usize]);
                if lo == hi {
                    continue;
                }
                let (nl, nr) = ((p + 1) as u64, n - (p + 1) as u64);
                // cheap float screen before the exact comparison
                let approx = sq_left as f64 / nl as f64 + sq_right as f64 / nr as f64;
                if approx < screen {
                    continue;
                }
                let num = sq_left as u128 * nr as u128 + sq_right as u128 * nl as u128;
                let den = nl as u128 * nr as u128;
                let better = match &best {
                    None => true,
                    Some(b) => num * b.den > b.num * den,
                };
                if better {
                    let mid = lo + (hi - lo) / 2.0;
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some(Split { feature: f, threshold, num, den });
                    screen = approx * (1.0 - 1e-9);
                    if num == perfect * den {
                        break;
                    }
                }
            }
            if best.as_ref().is_some_and(|b| b.num == perfect * b.den) {
                break;
            }
        }
        (self.left, self.right) = (left, right);
        best
    }

    fn grow(&mut self, start: usize, end: usize) -> usize {
        self.hist.iter_mut().for_each(|c| *c = 0);
        for &i in &self.orders[start..end] {
            self.hist[self.y[i as usize]] += 1;
        }
        let pure = self.hist.iter().filter(|&&c| c > 0).count() <= 1;
        let slot = self.nodes.len();
        if pure || end - start < 2 {
            self.nodes.push(self.leaf(&self.hist));
            return slot;
        }
        let hist = std::mem::take(&mut self.hist);
        let split = self.best_split(start, end, &hist);
        self.nodes.push(self.leaf(&hist));
        self.hist = hist;
        let Some(split) = split else { return slot };
        let col = self.cols[split.feature];
        for &i in &self.orders[start..end] {
            self.goes_left[i as usize] = col[i as usize] <= split.threshold;
        }
        // stable partition of every feature's window
        let mut mid = start;
        for f in 0..self.cols.len() {
            let window = &mut self.orders[f * self.stride + start..f * self.stride + end];
            let (mut l, mut r) = (0, 0);
            for k in 0..window.len() {
                let i = window[k];
                if self.goes_left[i as usize] {
                    window[l] = i;
                    l += 1;
                } else {
                    self.scratch[r] = i;
                    r += 1;
                }
            }
            window[l..].copy_from_slice(&self.scratch[..r]);
            mid = start + l;
        }
        let left = self.grow(start, mid);
        let right = self.grow(mid, end);
        self.nodes[slot] = TreeNode::Split { feature: split.feature, threshold: split.threshold, left, right };
        slot
    }
}

/// Maps labels to dense class indices; returns the sorted distinct labels.
pub(crate) fn encode_labels(y: &[u32]) -> (Vec<u32>, Vec<usize>) {
    let mut classes = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let yk = y.iter().map(|l| classes.binary_search(l).expect("label present")).collect();
    (classes, yk)
}

/// Fits a tree grown until nodes are pure, hold fewer than 2 samples, or have
/// no feature taking two distinct values. Weighted Gini never exceeds the
/// parent's, so a zero-gain split is still taken, as in the usual library
/// default. Ties between splits go to the lowest feature index, then the
/// lowest threshold.
pub fn fit_tree(x: &[Vec<f64>], y: &[u32]) -> Result<DecisionTree, MlError> {
    if x.is_empty() {
        return Err(MlError::Empty);
    }
    if x.len() != y.len() {
        return Err(MlError::LengthMismatch { samples: x.len(), labels: y.len() });
    }
    let n_features = x[0].len();
    if let Some(row) = x.iter().find(|r| r.len() != n_features) {
        return Err(MlError::Dimension { expected: n_features, got: row.len() });
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(MlError::NonFinite);
    }
    let (classes, yk) = encode_labels(y);
    let cols: Vec<Vec<f64>> = (0..n_features).map(|f| x.iter().map(|r| r[f]).collect()).collect();
    let data = Columns::new(cols.iter().map(|c| c.as_slice()).collect(), &yk, &classes);
    let features: Vec<usize> = (0..n_features).collect();
    Ok(data.fit(&features, &vec![true; x.len()]))
}

pub fn predict_tree(t: &DecisionTree, x: &[f64]) -> Result<u32, MlError> {
    if x.len() != t.n_features {
        return Err(MlError::Dimension { expected: t.n_features, got: x.len() });
    }
    Ok(t.predict(x))
}

impl DecisionTree {
    /// A tree that always answers `label`.
    pub fn constant(n_features: usize, label: u32) -> Self {
        DecisionTree { n_features, nodes: vec![TreeNode::Leaf { label, class_counts: vec![(label, 0)] }] }
    }

    /// Descends without checking the feature count.
    pub fn predict(&self, x: &[f64]) -> u32 {
        self.predict_by(|f| x[f])
    }

    /// Descends reading feature values through `value`.
    pub fn predict_by(&self, value: impl Fn(usize) -> f64) -> u32 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Split { feature, threshold, left, right } => {
                    at = if value(*feature) <= *threshold { *left } else { *right };
                }
                TreeNode::Leaf { label, .. } => return *label,
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &DecisionTree, at: usize) -> usize {
            match &t.nodes[at] {
                TreeNode::Split { left, right, .. } => 1 + walk(t, *left).max(walk(t, *right)),
                TreeNode::Leaf { .. } => 0,
            }
        }
        walk(self, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }

    /// Nested text form:
    ///
    /// ```text
    /// decision-tree 1 features 2
    /// (split 0 4.5
    ///   (leaf 1 1:3)
    ///   (leaf 2 2:4))
    /// ```
    pub fn to_text(&self) -> String {
        fn emit(t: &DecisionTree, at: usize, depth: usize, out: &mut String) {
            let pad = "  ".repeat(depth);
            match &t.nodes[at] {
                TreeNode::Split { feature, threshold, left, right } => {
                    let _ = writeln!(out, "{pad}(split {feature} {threshold:?}");
                    emit(t, *left, depth + 1, out);
                    emit(t, *right, depth + 1, out);
                    let _ = writeln!(out, "{pad})");
                }
                TreeNode::Leaf { label, class_counts } => {
                    let counts: Vec<String> = class_counts.iter().map(|(l, c)| format!("{l}:{c}")).collect();
                    let _ = writeln!(out, "{pad}(leaf {label} {})", counts.join(","));
                }
            }
        }
        let mut out = format!("decision-tree 1 features {}\n", self.n_features);
        emit(self, 0, 0, &mut out);
        out
    }

    pub fn from_text(text: &str) -> Result<Self, MlError> {
        let bad = |m: &str| MlError::Format(m.to_string());
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap_or("").split_whitespace().collect();
        let n_features = match header.as_slice() {
            ["decision-tree", "1", "features", n] => n.parse().map_err(|_| bad("bad feature count"))?,
            _ => return Err(bad("expected `decision-tree 1 features <n>`")),
        };
        let body: String = lines.collect::<Vec<_>>().join(" ");
        let spaced = body.replace('(', " ( ").replace(')', " ) ");
        let mut tokens = spaced.split_whitespace().peekable();
        let mut nodes = Vec::new();

        fn parse<'a>(
            tokens: &mut std::iter::Peekable<impl Iterator<Item = &'a str>>,
            nodes: &mut Vec<TreeNode>,
            n_features: usize,
        ) -> Result<usize, MlError> {
            let bad = |m: &str| MlError::Format(m.to_string());
            if tokens.next() != Some("(") {
                return Err(bad("expected `(`"));
            }
            let slot = nodes.len();
            match tokens.next() {
                Some("leaf") => {
                    let label = tokens.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad("bad leaf label"))?;
                    let mut class_counts = Vec::new();
                    if tokens.peek() != Some(&")") {
                        for pair in tokens.next().unwrap_or("").split(',') {
                            let (l, c) = pair.split_once(':').ok_or_else(|| bad("bad class count"))?;
                            class_counts.push((
                                l.parse().map_err(|_| bad("bad class label"))?,
                                c.parse().map_err(|_| bad("bad count"))?,
                            ));
                        }
                    }
                    nodes.push(TreeNode::Leaf { label, class_counts });
                }
                Some("split") => {
                    let feature: usize =
                        tokens.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad("bad split feature"))?;
                    let threshold: f64 =
                        tokens.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad("bad threshold"))?;
                    if feature >= n_features || !threshold.is_finite() {
                        return Err(bad("split out of range"));
                    }
                    nodes.push(TreeNode::Leaf { label: 0, class_counts: Vec::new() });
                    let left = parse(tokens, nodes, n_features)?;
                    let right = parse(tokens, nodes, n_features)?;
                    nodes[slot] = TreeNode::Split { feature, threshold, left, right };
                }
                _ => return Err(bad("expected `leaf` or `split`")),
            }
            if tokens.next() != Some(")") {
                return Err(bad("expected `)`"));
            }
            Ok(slot)
        }

        parse(&mut tokens, &mut nodes, n_features)?;
        if tokens.next().is_some() {
            return Err(bad("trailing tokens"));
        }
        Ok(DecisionTree { n_features, nodes })
    }
}
