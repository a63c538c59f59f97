//! Fully connected regression network: `p → p → 100 → 1`, ReLU on the
//! hidden layers, identity output, trained with Adam on mean squared error.
//!
//! Parameters live in one flat vector. Layer `l` stores its weights as a
//! row-major `fan_in × fan_out` block followed by `fan_out` biases.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::preprocess::{Scaler, TargetScaler};
use crate::scalar::Scalar;

pub const SECOND_HIDDEN_WIDTH: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NnConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
}

impl Default for NnConfig {
    fn default() -> Self {
        NnConfig {
            learning_rate: 1e-3,
            batch_size: 32,
            epochs: 200,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct LayerShape {
    fan_in: usize,
    fan_out: usize,
    offset: usize,
}

impl LayerShape {
    fn weights(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.fan_in * self.fan_out
    }
    fn bias(&self) -> std::ops::Range<usize> {
        let s = self.offset + self.fan_in * self.fan_out;
        s..s + self.fan_out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LayerRepr<T> {
    fan_in: usize,
    fan_out: usize,
    /// Row-major `fan_in × fan_out`.
    weights: Vec<T>,
    bias: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NetworkRepr<T> {
    sizes: Vec<usize>,
    layers: Vec<LayerRepr<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "NetworkRepr<T>",
    into = "NetworkRepr<T>",
    bound = "T: Scalar"
)]
pub struct Network<T> {
    sizes: Vec<usize>,
    shapes: Vec<LayerShape>,
    params: Vec<T>,
}

impl<T: Scalar> From<Network<T>> for NetworkRepr<T> {
    fn from(n: Network<T>) -> Self {
        let layers = n
            .shapes
            .iter()
            .map(|s| LayerRepr {
                fan_in: s.fan_in,
                fan_out: s.fan_out,
                weights: n.params[s.weights()].to_vec(),
                bias: n.params[s.bias()].to_vec(),
            })
            .collect();
        NetworkRepr {
            sizes: n.sizes,
            layers,
        }
    }
}

impl<T: Scalar> TryFrom<NetworkRepr<T>> for Network<T> {
    type Error = Error;

    fn try_from(r: NetworkRepr<T>) -> Result<Self> {
        let mut net = Network::zeros(&r.sizes)?;
        if r.layers.len() != net.shapes.len() {
            return Err(Error::ShapeMismatch {
                expected: net.shapes.len(),
                got: r.layers.len(),
            });
        }
        for (s, l) in net.shapes.clone().iter().zip(&r.layers) {
            if l.weights.len() != s.fan_in * s.fan_out || l.bias.len() != s.fan_out {
                return Err(Error::ShapeMismatch {
                    expected: s.fan_in * s.fan_out + s.fan_out,
                    got: l.weights.len() + l.bias.len(),
                });
            }
            net.params[s.weights()].copy_from_slice(&l.weights);
            net.params[s.bias()].copy_from_slice(&l.bias);
        }
        Ok(net)
    }
}

/// Activations of one forward pass, kept for backpropagation.
struct Pass<T> {
    /// Pre-activations of every layer.
    pre: Vec<Vec<T>>,
    /// Inputs to every layer (index 0 is the network input).
    inputs: Vec<Vec<T>>,
}

impl<T: Scalar> Network<T> {
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) || *sizes.last().unwrap() != 1 {
            return Err(Error::InvalidParameter(format!(
                "bad layer sizes {sizes:?}: need ≥ 2 positive sizes ending in 1"
            )));
        }
        let mut shapes = Vec::new();
        let mut offset = 0;
        for w in sizes.windows(2) {
            shapes.push(LayerShape {
                fan_in: w[0],
                fan_out: w[1],
                offset,
            });
            offset += w[0] * w[1] + w[1];
        }
        Ok(Network {
            sizes: sizes.to_vec(),
            shapes,
            params: vec![T::zero(); offset],
        })
    }

    /// He-scaled normal weights (variance 2 / fan_in), zero biases.
    pub fn init(sizes: &[usize], seed: u64) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in net.shapes.clone() {
            let sd = (2.0 / s.fan_in as f64).sqrt();
            for w in &mut net.params[s.weights()] {
                let z: f64 = StandardNormal.sample(&mut rng);
                *w = T::of(z * sd);
            }
        }
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n_inputs(&self) -> usize {
        self.sizes[0]
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    /// Weights of layer `l` as a row-major `fan_in × fan_out` slice.
    pub fn weights(&self, l: usize) -> &[T] {
        &self.params[self.shapes[l].weights()]
    }

    pub fn weights_mut(&mut self, l: usize) -> &mut [T] {
        let r = self.shapes[l].weights();
        &mut self.params[r]
    }

    pub fn bias(&self, l: usize) -> &[T] {
        &self.params[self.shapes[l].bias()]
    }

    pub fn bias_mut(&mut self, l: usize) -> &mut [T] {
        let r = self.shapes[l].bias();
        &mut self.params[r]
    }

    /// Layer shape `(fan_in, fan_out)`.
    pub fn layer_shape(&self, l: usize) -> (usize, usize) {
        (self.shapes[l].fan_in, self.shapes[l].fan_out)
    }

    pub fn n_layers(&self) -> usize {
        self.shapes.len()
    }

    fn run(&self, x: &[T]) -> Pass<T> {
        let last = self.shapes.len() - 1;
        let mut inputs = vec![x.to_vec()];
        let mut pre = Vec::with_capacity(self.shapes.len());
        for (l, s) in self.shapes.iter().enumerate() {
            let w = &self.params[s.weights()];
            let mut z = self.params[s.bias()].to_vec();
            let input = &inputs[l];
            for (i, &a) in input.iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                let row = &w[i * s.fan_out..(i + 1) * s.fan_out];
                for (zj, &wij) in z.iter_mut().zip(row) {
                    *zj = *zj + a * wij;
                }
            }
            if l < last {
                inputs.push(z.iter().map(|&v| v.max(T::zero())).collect());
            }
            pre.push(z);
        }
        Pass { pre, inputs }
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        if x.len() != self.n_inputs() {
            return Err(Error::ShapeMismatch {
                expected: self.n_inputs(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[T]) -> Result<T> {
        self.check_input(x)?;
        Ok(self.run(x).pre.last().unwrap()[0])
    }

    /// Pre-activations of every layer for input `x`.
    pub fn preactivations(&self, x: &[T]) -> Result<Vec<Vec<T>>> {
        self.check_input(x)?;
        Ok(self.run(x).pre)
    }

    /// Mean squared error over the rows of `x`.
    pub fn mse(&self, x: &Matrix<T>, y: &[T]) -> Result<T> {
        if x.rows() != y.len() {
            return Err(Error::ShapeMismatch {
                expected: x.rows(),
                got: y.len(),
            });
        }
        let mut acc = T::zero();
        for (row, &t) in x.iter_rows().zip(y) {
            let r = self.forward(row)? - t;
            acc = acc + r * r;
        }
        Ok(acc / T::of_usize(y.len().max(1)))
    }

    /// Exact gradient of the batch mean squared error with respect to every
    /// parameter (flat layout), and the batch loss.
    pub fn gradients(&self, x: &Matrix<T>, y: &[T]) -> Result<(Vec<T>, T)> {
        if x.rows() == 0 {
            return Err(Error::EmptyDataset { stage: "gradient batch" });
        }
        if x.rows() != y.len() {
            return Err(Error::ShapeMismatch {
                expected: x.rows(),
                got: y.len(),
            });
        }
        if x.cols() != self.n_inputs() {
            return Err(Error::ShapeMismatch {
                expected: self.n_inputs(),
                got: x.cols(),
            });
        }
        let mut grad = vec![T::zero(); self.params.len()];
        self.accumulate(x, y, (0..x.rows()).collect::<Vec<_>>().as_slice(), &mut grad)
            .map(|loss| (grad, loss))
    }

    fn accumulate(&self, x: &Matrix<T>, y: &[T], rows: &[usize], grad: &mut [T]) -> Result<T> {
        let scale = T::of(2.0) / T::of_usize(rows.len());
        let mut loss = T::zero();
        let last = self.shapes.len() - 1;
        for &r in rows {
            let pass = self.run(x.row(r));
            let residual = pass.pre[last][0] - y[r];
            loss = loss + residual * residual;
            let mut delta = vec![residual * scale];
            for l in (0..self.shapes.len()).rev() {
                let s = self.shapes[l];
                let input = &pass.inputs[l];
                let wr = s.weights();
                let br = s.bias();
                for (j, &d) in delta.iter().enumerate() {
                    grad[br.start + j] = grad[br.start + j] + d;
                }
                for (i, &a) in input.iter().enumerate() {
                    if a == T::zero() {
                        continue;
                    }
                    let g = &mut grad[wr.start + i * s.fan_out..wr.start + (i + 1) * s.fan_out];
                    for (gij, &d) in g.iter_mut().zip(&delta) {
                        *gij = *gij + a * d;
                    }
                }
                if l == 0 {
                    break;
                }
                let w = &self.params[wr];
                let below = &pass.pre[l - 1];
                delta = (0..s.fan_in)
                    .map(|i| {
                        if below[i] <= T::zero() {
                            return T::zero();
                        }
                        let row = &w[i * s.fan_out..(i + 1) * s.fan_out];
                        row.iter().zip(&delta).fold(T::zero(), |acc, (&wij, &d)| acc + wij * d)
                    })
                    .collect();
            }
        }
        Ok(loss / T::of_usize(rows.len()))
    }
}

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    pub t: u64,
    pub m: Vec<T>,
    pub v: Vec<T>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(n: usize, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Adam {
            lr: T::of(lr),
            beta1: T::of(beta1),
            beta2: T::of(beta2),
            eps: T::of(eps),
            t: 0,
            m: vec![T::zero(); n],
            v: vec![T::zero(); n],
        }
    }

    pub fn with_defaults(n: usize) -> Self {
        Self::new(n, 1e-3, 0.9, 0.999, 1e-8)
    }

    pub fn step(&mut self, params: &mut [T], grads: &[T]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::ShapeMismatch {
                expected: self.m.len(),
                got: params.len().min(grads.len()),
            });
        }
        self.t += 1;
        let one = T::one();
        let c1 = one - self.beta1.powi(self.t as i32);
        let c2 = one - self.beta2.powi(self.t as i32);
        for ((p, &g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = self.beta1 * *m + (one - self.beta1) * g;
            *v = self.beta2 * *v + (one - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p = *p - self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// Layer sizes used for `p` inputs.
pub fn architecture(p: usize) -> Vec<usize> {
    vec![p, p, SECOND_HIDDEN_WIDTH, 1]
}

pub fn init_nn<T: Scalar>(p: usize, seed: u64) -> Result<Network<T>> {
    if p == 0 {
        return Err(Error::InvalidParameter("network needs at least one input".into()));
    }
    Network::init(&architecture(p), seed)
}

/// Mini-batch Adam on the given inputs. Returns the network and the
/// full-data training loss after every epoch.
pub fn train_network<T: Scalar>(x: &Matrix<T>, y: &[T], config: &NnConfig) -> Result<(Network<T>, Vec<f64>)> {
    let n = x.rows();
    if y.len() != n {
        return Err(Error::ShapeMismatch { expected: n, got: y.len() });
    }
    if config.batch_size == 0 || config.learning_rate <= 0.0 {
        return Err(Error::InvalidParameter("batch size and learning rate must be positive".into()));
    }
    if n < config.batch_size {
        return Err(Error::TooShort {
            required: config.batch_size,
            got: n,
        });
    }
    let mut net = init_nn::<T>(x.cols(), config.seed)?;
    let mut adam = Adam::new(
        net.n_params(),
        config.learning_rate,
        config.beta1,
        config.beta2,
        config.adam_eps,
    );
    let mut order: Vec<usize> = (0..n).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(1);
    let mut grad = vec![T::zero(); net.n_params()];
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        for batch in order.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = T::zero());
            net.accumulate(x, y, batch, &mut grad)?;
            adam.step(&mut net.params, &grad)?;
        }
        let loss = net.mse(x, y)?.to_f64_lossy();
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        history.push(loss);
    }
    Ok((net, history))
}

/// Network plus the input and target standardization it was trained under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NnModel<T> {
    pub network: Network<T>,
    pub scaler: Scaler<T>,
    pub target: TargetScaler<T>,
    pub config: NnConfig,
    pub loss_history: Vec<f64>,
}

impl<T: Scalar> NnModel<T> {
    pub fn fit(x: &Matrix<T>, y: &[T], config: &NnConfig) -> Result<Self> {
        let scaler = Scaler::fit(x)?;
        let target = TargetScaler::fit(y)?;
        let xs = scaler.transform(x)?;
        let ys: Vec<T> = y.iter().map(|&v| target.forward(v)).collect();
        let (network, loss_history) = train_network(&xs, &ys, config)?;
        Ok(NnModel {
            network,
            scaler,
            target,
            config: *config,
            loss_history,
        })
    }

    pub fn predict(&self, x: &[T]) -> Result<T> {
        let z = self.scaler.transform_row(x)?;
        Ok(self.target.inverse(self.network.forward(&z)?))
    }
}
