//! Random forest regression built from fully grown CART trees.
//!
//! Every tree sees all training rows. Randomness comes only from the subset
//! of features each tree is allowed to split on, drawn from a ChaCha8 stream
//! keyed by `(seed, tree index)`.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

pub const DEFAULT_TREES: usize = 1000;
pub const DEFAULT_FEATURE_FRACTION: f64 = 1.0 / 3.0;
const PURITY_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfrParams {
    pub n_trees: usize,
    pub feature_fraction: f64,
    pub seed: u64,
    /// Draw a fresh feature subset at every node instead of once per tree.
    pub per_node_subsets: bool,
}

impl Default for RfrParams {
    fn default() -> Self {
        RfrParams {
            n_trees: DEFAULT_TREES,
            feature_fraction: DEFAULT_FEATURE_FRACTION,
            seed: 0,
            per_node_subsets: false,
        }
    }
}

impl RfrParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidParameter("n_trees must be at least 1".into()));
        }
        if !(self.feature_fraction > 0.0 && self.feature_fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "feature_fraction must lie in (0, 1], got {}",
                self.feature_fraction
            )));
        }
        Ok(())
    }

    /// `⌈feature_fraction · p⌉`, at least one.
    pub fn subset_size(&self, p: usize) -> usize {
        ((self.feature_fraction * p as f64).ceil() as usize).clamp(1, p.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub enum Node<T> {
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
    Leaf {
        value: T,
        count: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SplitTree<T> {
    /// Node 0 is the root.
    pub nodes: Vec<Node<T>>,
    pub feature_subset: Vec<usize>,
}

impl<T: Scalar> SplitTree<T> {
    pub fn leaf(value: T, count: usize) -> Self {
        SplitTree {
            nodes: vec![Node::Leaf { value, count }],
            feature_subset: Vec::new(),
        }
    }

    pub fn predict(&self, x: &[T]) -> T {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value, .. } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Index of the leaf that `x` falls into.
    pub fn leaf_index(&self, x: &[T]) -> usize {
        let mut i = 0;
        while let Node::Split {
            feature,
            threshold,
            left,
            right,
        } = &self.nodes[i]
        {
            i = if x[*feature] <= *threshold { *left } else { *right };
        }
        i
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn go<T>(nodes: &[Node<T>], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate<T> {
    pub threshold: T,
    /// `n_L·MSE_L + n_R·MSE_R`.
    pub child_sse: T,
    pub n_left: usize,
}

fn midpoint<T: Scalar>(a: T, b: T) -> T {
    let m = a + (b - a) / T::of(2.0);
    if m < b {
        m
    } else {
        a
    }
}

/// Scans `xs` ascending with aligned `ys` and returns the best split among
/// all gaps between distinct adjacent values. `mean` centers the sums.
fn scan_sorted<T: Scalar>(xs: &[T], ys: &[T], mean: T) -> Option<SplitCandidate<T>> {
    let n = xs.len();
    let (mut total, mut total_sq) = (T::zero(), T::zero());
    for &y in ys {
        let d = y - mean;
        total = total + d;
        total_sq = total_sq + d * d;
    }
    let (mut acc, mut acc_sq) = (T::zero(), T::zero());
    let mut best: Option<SplitCandidate<T>> = None;
    for i in 0..n.saturating_sub(1) {
        let d = ys[i] - mean;
        acc = acc + d;
        acc_sq = acc_sq + d * d;
        if !(xs[i] < xs[i + 1]) {
            continue;
        }
        let nl = T::of_usize(i + 1);
        let nr = T::of_usize(n - i - 1);
        let rest = total - acc;
        let sse_l = (acc_sq - acc * acc / nl).max(T::zero());
        let sse_r = (total_sq - acc_sq - rest * rest / nr).max(T::zero());
        let sse = sse_l + sse_r;
        if best.is_none_or(|b| sse < b.child_sse) {
            best = Some(SplitCandidate {
                threshold: midpoint(xs[i], xs[i + 1]),
                child_sse: sse,
                n_left: i + 1,
            });
        }
    }
    best
}

fn mean_and_sse<T: Scalar>(ys: impl Iterator<Item = T> + Clone) -> (T, T, usize) {
    let mut n = 0;
    let mut s = T::zero();
    for y in ys.clone() {
        s = s + y;
        n += 1;
    }
    let mean = s / T::of_usize(n.max(1));
    let sse = ys.map(|y| (y - mean) * (y - mean)).sum();
    (mean, sse, n)
}

/// Best threshold on one feature column restricted to `rows`, or `None`
/// when the column is constant there.
pub fn best_split<T: Scalar>(column: &[T], y: &[T], rows: &[usize]) -> Option<SplitCandidate<T>> {
    if rows.len() < 2 {
        return None;
    }
    let mut order = rows.to_vec();
    order.sort_by(|&a, &b| column[a].partial_cmp(&column[b]).unwrap().then(a.cmp(&b)));
    let xs: Vec<T> = order.iter().map(|&i| column[i]).collect();
    let ys: Vec<T> = order.iter().map(|&i| y[i]).collect();
    let (mean, _, _) = mean_and_sse(ys.iter().copied());
    scan_sorted(&xs, &ys, mean)
}

fn sorted_order<T: Scalar>(column: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..column.len()).collect();
    order.sort_by(|&a, &b| column[a].partial_cmp(&column[b]).unwrap().then(a.cmp(&b)));
    order
}

struct Grower<'a, T> {
    columns: &'a [Vec<T>],
    y: &'a [T],
    /// Features this tree may use, ascending.
    subset: Vec<usize>,
    /// Per subset feature, row indices sorted by that feature; each node
    /// owns one contiguous range in every array.
    orders: Vec<Vec<usize>>,
    per_node: Option<(usize, ChaCha8Rng)>,
    goes_left: Vec<bool>,
    scratch: Vec<usize>,
    xs: Vec<T>,
    ys: Vec<T>,
    gains: Vec<f64>,
}

impl<'a, T: Scalar> Grower<'a, T> {
    fn grow(mut self) -> (SplitTree<T>, Vec<f64>) {
        let n = self.y.len();
        let mut nodes: Vec<Node<T>> = vec![Node::Leaf {
            value: T::zero(),
            count: 0,
        }];
        let mut stack = vec![(0usize, 0usize, n)];
        while let Some((id, start, end)) = stack.pop() {
            let rows = &self.orders[0][start..end];
            let (mean, sse, count) = mean_and_sse(rows.iter().map(|&i| self.y[i]));
            let variance = sse.to_f64_lossy() / count as f64;
            let split = if count < 2 || variance <= PURITY_VARIANCE {
                None
            } else {
                self.find_split(start, end, mean)
            };
            let Some((k, cand)) = split else {
                nodes[id] = Node::Leaf { value: mean, count };
                continue;
            };
            let feature = self.subset[k];
            self.gains[feature] += (sse - cand.child_sse).to_f64_lossy().max(0.0);
            for &r in &self.orders[k][start..end] {
                self.goes_left[r] = self.columns[feature][r] <= cand.threshold;
            }
            for order in self.orders.iter_mut() {
                stable_partition(&mut order[start..end], &self.goes_left, &mut self.scratch);
            }
            let mid = start + cand.n_left;
            let (left, right) = (nodes.len(), nodes.len() + 1);
            nodes.push(Node::Leaf {
                value: T::zero(),
                count: 0,
            });
            nodes.push(Node::Leaf {
                value: T::zero(),
                count: 0,
            });
            nodes[id] = Node::Split {
                feature,
                threshold: cand.threshold,
                left,
                right,
            };
            stack.push((right, mid, end));
            stack.push((left, start, mid));
        }
        let feature_subset = if self.per_node.is_some() {
            (0..self.columns.len()).collect()
        } else {
            self.subset.clone()
        };
        (SplitTree { nodes, feature_subset }, self.gains)
    }

    fn find_split(&mut self, start: usize, end: usize, mean: T) -> Option<(usize, SplitCandidate<T>)> {
        let candidates: Vec<usize> = match &mut self.per_node {
            None => (0..self.subset.len()).collect(),
            Some((m, rng)) => {
                let mut ks = sample(rng, self.subset.len(), *m).into_vec();
                ks.sort_unstable();
                ks
            }
        };
        let mut best: Option<(usize, SplitCandidate<T>)> = None;
        for k in candidates {
            let f = self.subset[k];
            self.xs.clear();
            self.ys.clear();
            for &r in &self.orders[k][start..end] {
                self.xs.push(self.columns[f][r]);
                self.ys.push(self.y[r]);
            }
            if let Some(c) = scan_sorted(&self.xs, &self.ys, mean) {
                if best.is_none_or(|(_, b)| c.child_sse < b.child_sse) {
                    best = Some((k, c));
                }
            }
        }
        best
    }
}

fn stable_partition(slice: &mut [usize], goes_left: &[bool], scratch: &mut Vec<usize>) {
    scratch.clear();
    let mut w = 0;
    for i in 0..slice.len() {
        let r = slice[i];
        if goes_left[r] {
            slice[w] = r;
            w += 1;
        } else {
            scratch.push(r);
        }
    }
    slice[w..].copy_from_slice(scratch);
}

fn columns_of<T: Scalar>(x: &Matrix<T>) -> Vec<Vec<T>> {
    (0..x.cols()).map(|j| x.column(j)).collect()
}

fn grow_with<T: Scalar>(
    columns: &[Vec<T>],
    global_orders: &[Vec<usize>],
    y: &[T],
    subset: Vec<usize>,
    per_node: Option<(usize, ChaCha8Rng)>,
) -> (SplitTree<T>, Vec<f64>) {
    let n = y.len();
    let orders = subset.iter().map(|&f| global_orders[f].clone()).collect();
    Grower {
        columns,
        y,
        subset,
        orders,
        per_node,
        goes_left: vec![false; n],
        scratch: Vec::with_capacity(n),
        xs: Vec::with_capacity(n),
        ys: Vec::with_capacity(n),
        gains: vec![0.0; columns.len()],
    }
    .grow()
}

fn check_inputs<T: Scalar>(x: &Matrix<T>, y: &[T]) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.rows(),
            right: y.len(),
        });
    }
    if x.rows() == 0 {
        return Err(Error::EmptyDataset { stage: "tree growth" });
    }
    if x.cols() == 0 {
        return Err(Error::InvalidParameter("no feature columns".into()));
    }
    if x.as_slice().iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite training value".into()));
    }
    Ok(())
}

/// Grows one fully grown tree restricted to `feature_subset`.
pub fn grow_tree<T: Scalar>(x: &Matrix<T>, y: &[T], feature_subset: &[usize]) -> Result<SplitTree<T>> {
    check_inputs(x, y)?;
    if feature_subset.iter().any(|&f| f >= x.cols()) {
        return Err(Error::InvalidParameter("feature subset index out of range".into()));
    }
    let mut subset = feature_subset.to_vec();
    subset.sort_unstable();
    subset.dedup();
    let columns = columns_of(x);
    let orders: Vec<Vec<usize>> = columns.iter().map(|c| sorted_order(c)).collect();
    Ok(grow_with(&columns, &orders, y, subset, None).0)
}

/// Random stream for tree `index`.
pub fn tree_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RfrModel<T> {
    pub trees: Vec<SplitTree<T>>,
    /// Normalized total SSE decrease per feature.
    pub importances: Vec<f64>,
    pub params: RfrParams,
    pub n_features: usize,
}

pub fn train_rfr<T: Scalar>(x: &Matrix<T>, y: &[T], params: &RfrParams) -> Result<RfrModel<T>> {
    params.validate()?;
    check_inputs(x, y)?;
    if x.rows() < 2 {
        return Err(Error::TooShort {
            required: 2,
            got: x.rows(),
        });
    }
    let p = x.cols();
    let m = params.subset_size(p);
    let columns = columns_of(x);
    let orders: Vec<Vec<usize>> = columns.par_iter().map(|c| sorted_order(c)).collect();
    let grown: Vec<(SplitTree<T>, Vec<f64>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(params.seed, t);
            if params.per_node_subsets {
                grow_with(&columns, &orders, y, (0..p).collect(), Some((m, rng)))
            } else {
                let mut subset = sample(&mut rng, p, m).into_vec();
                subset.sort_unstable();
                grow_with(&columns, &orders, y, subset, None)
            }
        })
        .collect();
    let mut totals = vec![0.0; p];
    let mut trees = Vec::with_capacity(grown.len());
    for (tree, gains) in grown {
        for (t, g) in totals.iter_mut().zip(&gains) {
            *t += g;
        }
        trees.push(tree);
    }
    let sum: f64 = totals.iter().sum();
    if sum > 0.0 {
        totals.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(RfrModel {
        trees,
        importances: totals,
        params: *params,
        n_features: p,
    })
}

impl<T: Scalar> RfrModel<T> {
    pub fn fit(x: &Matrix<T>, y: &[T], params: &RfrParams) -> Result<Self> {
        train_rfr(x, y, params)
    }

    pub fn predict(&self, x: &[T]) -> Result<T> {
        predict_rfr(self, x)
    }
}

/// Mean of the tree predictions.
pub fn predict_rfr<T: Scalar>(model: &RfrModel<T>, x: &[T]) -> Result<T> {
    if x.len() != model.n_features {
        return Err(Error::ShapeMismatch {
            expected: model.n_features,
            got: x.len(),
        });
    }
    let s: T = model.trees.iter().map(|t| t.predict(x)).sum();
    Ok(s / T::of_usize(model.trees.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImportanceRule {
    /// Keep features whose importance is strictly above `1/p`.
    AboveUniform,
    TopK(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceSelection {
    /// `(feature, importance)` by decreasing importance, ties by index.
    pub ranked: Vec<(usize, f64)>,
    /// Kept feature indices, ascending.
    pub kept: Vec<usize>,
}

pub fn rank_importances(importances: &[f64]) -> Vec<(usize, f64)> {
    let mut ranked: Vec<(usize, f64)> = importances.iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    ranked
}

pub fn select_important(importances: &[f64], rule: ImportanceRule) -> ImportanceSelection {
    let ranked = rank_importances(importances);
    let mut kept: Vec<usize> = match rule {
        ImportanceRule::AboveUniform => {
            let cut = 1.0 / importances.len().max(1) as f64;
            ranked.iter().filter(|(_, v)| *v > cut).map(|(i, _)| *i).collect()
        }
        ImportanceRule::TopK(k) => ranked.iter().take(k).map(|(i, _)| *i).collect(),
    };
    kept.sort_unstable();
    ImportanceSelection { ranked, kept }
}
