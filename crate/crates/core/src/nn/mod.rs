//! Fully-connected scalar regression network with hand-written backprop.
//!
//! Parameters are stored in one flat vector, layer by layer. For a layer with
//! `fan_in` inputs and `fan_out` outputs the block is the `fan_out × fan_in`
//! weight matrix in row-major order, followed by the `fan_out` biases. The
//! output layer is affine; every hidden layer applies the activation.

mod train;

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use train::{train, Architecture, TrainConfig, TrainReport, DEFAULT_EPOCH_GRID};

use crate::codec;
use crate::error::{Error, Result};
use crate::linalg::{dot, gemm_slices, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    #[inline]
    fn slope(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn code(self) -> u32 {
        match self {
            Activation::Tanh => 0,
            Activation::Relu => 1,
        }
    }

    fn from_code(c: u32) -> Option<Self> {
        match c {
            0 => Some(Activation::Tanh),
            1 => Some(Activation::Relu),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            other => Err(Error::Config(format!("unknown activation `{other}`"))),
        }
    }
}

/// Offsets of one layer inside the flat parameter vector.
#[derive(Debug, Clone, Copy)]
struct Layer {
    fan_in: usize,
    fan_out: usize,
    w: usize,
    b: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
    activation: Activation,
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(Error::Config("a network needs an input and an output layer".into()));
    }
    if sizes.contains(&0) {
        return Err(Error::Config("layer sizes must be positive".into()));
    }
    if *sizes.last().unwrap() != 1 {
        return Err(Error::Config("the output layer must have exactly one unit".into()));
    }
    Ok(())
}

pub fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    /// Network with every parameter zero.
    pub fn zeros(sizes: &[usize], activation: Activation) -> Result<Self> {
        check_sizes(sizes)?;
        Ok(Self {
            sizes: sizes.to_vec(),
            params: vec![0.0; param_count(sizes)],
            activation,
        })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(sizes: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init_with(sizes, activation, &mut rng)
    }

    pub(crate) fn init_with(sizes: &[usize], activation: Activation, rng: &mut impl Rng) -> Result<Self> {
        let mut net = Self::zeros(sizes, activation)?;
        for layer in net.layers() {
            let a = (6.0 / (layer.fan_in + layer.fan_out) as f64).sqrt();
            for w in &mut net.params[layer.w..layer.b] {
                *w = a * (2.0 * rng.random::<f64>() - 1.0);
            }
        }
        Ok(net)
    }

    pub fn from_params(sizes: &[usize], activation: Activation, params: Vec<f64>) -> Result<Self> {
        check_sizes(sizes)?;
        let p = param_count(sizes);
        if params.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                actual: params.len(),
            });
        }
        if let Some(i) = params.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: 0, col: i });
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            params,
            activation,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    fn layers(&self) -> Vec<Layer> {
        let mut off = 0;
        self.sizes
            .windows(2)
            .map(|w| {
                let l = Layer {
                    fan_in: w[0],
                    fan_out: w[1],
                    w: off,
                    b: off + w[0] * w[1],
                };
                off = l.b + w[1];
                l
            })
            .collect()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Per-layer pre-activations and outputs for one example.
    fn trace(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let layers = self.layers();
        let last = layers.len() - 1;
        let mut zs = Vec::with_capacity(layers.len());
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(layers.len() + 1);
        acts.push(x.to_vec());
        for (li, l) in layers.iter().enumerate() {
            let input = &acts[li];
            let z: Vec<f64> = (0..l.fan_out)
                .map(|o| {
                    let row = &self.params[l.w + o * l.fan_in..l.w + (o + 1) * l.fan_in];
                    dot(row, input) + self.params[l.b + o]
                })
                .collect();
            let a = if li == last {
                z.clone()
            } else {
                z.iter().map(|&v| self.activation.apply(v)).collect()
            };
            zs.push(z);
            acts.push(a);
        }
        (zs, acts)
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let (_, acts) = self.trace(x);
        Ok(acts.last().unwrap()[0])
    }

    /// Predictions for every row of `x`.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.cols(),
            });
        }
        let (_, acts) = self.batch_forward(x.as_slice(), x.rows());
        Ok(acts.last().unwrap().clone())
    }

    /// Output and its gradient with respect to every parameter.
    pub fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_input(x)?;
        let mut g = vec![0.0; self.n_params()];
        let y = self.gradient_into(x, &mut g);
        Ok((y, g))
    }

    pub fn param_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.value_and_gradient(x)?.1)
    }

    fn gradient_into(&self, x: &[f64], g: &mut [f64]) -> f64 {
        let layers = self.layers();
        let (zs, acts) = self.trace(x);
        // delta holds ∂f/∂z for the current layer
        let mut delta = vec![1.0];
        for li in (0..layers.len()).rev() {
            let l = layers[li];
            let input = &acts[li];
            for (o, &d) in delta.iter().enumerate() {
                let gw = &mut g[l.w + o * l.fan_in..l.w + (o + 1) * l.fan_in];
                for (gi, &ai) in gw.iter_mut().zip(input) {
                    *gi = d * ai;
                }
                g[l.b + o] = d;
            }
            if li > 0 {
                let mut prev = vec![0.0; l.fan_in];
                for (o, &d) in delta.iter().enumerate() {
                    let row = &self.params[l.w + o * l.fan_in..l.w + (o + 1) * l.fan_in];
                    for (p, &w) in prev.iter_mut().zip(row) {
                        *p += d * w;
                    }
                }
                for (j, p) in prev.iter_mut().enumerate() {
                    *p *= self.activation.slope(zs[li - 1][j], acts[li][j]);
                }
                delta = prev;
            }
        }
        acts.last().unwrap()[0]
    }

    /// Gradient rows for every example of `x`, in row order.
    pub fn jacobian_rows<'a>(&'a self, x: &'a Matrix) -> impl Iterator<Item = Result<Vec<f64>>> + 'a {
        x.row_iter().map(move |r| self.param_gradient(r))
    }

    /// Dense `n × p` Jacobian.
    pub fn jacobian(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.cols(),
            });
        }
        let p = self.n_params();
        let mut j = Matrix::zeros(x.rows(), p);
        for (i, r) in x.row_iter().enumerate() {
            self.gradient_into(r, j.row_mut(i));
        }
        Ok(j)
    }

    /// Batched forward pass over `n` row-major examples. Returns the
    /// pre-activations of every layer and the outputs of every layer
    /// (the input batch first).
    fn batch_forward(&self, x: &[f64], n: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let layers = self.layers();
        let last = layers.len() - 1;
        let mut zs = Vec::with_capacity(layers.len());
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(layers.len() + 1);
        acts.push(x.to_vec());
        for (li, l) in layers.iter().enumerate() {
            let bias = &self.params[l.b..l.b + l.fan_out];
            let mut z = Vec::with_capacity(n * l.fan_out);
            for _ in 0..n {
                z.extend_from_slice(bias);
            }
            let w = &self.params[l.w..l.b];
            gemm_slices(n, l.fan_in, l.fan_out, &acts[li], false, w, true, 1.0, &mut z);
            let a = if li == last {
                z.clone()
            } else {
                z.iter().map(|&v| self.activation.apply(v)).collect()
            };
            zs.push(z);
            acts.push(a);
        }
        (zs, acts)
    }

    /// Gradient of `Σ_i c_i·f(x_i)` over a batch, where `upstream` holds the
    /// `c_i`. Written into `g`, overwriting it.
    fn batch_backward(&self, zs: &[Vec<f64>], acts: &[Vec<f64>], upstream: &[f64], g: &mut [f64]) {
        let layers = self.layers();
        let n = upstream.len();
        let mut delta = upstream.to_vec();
        for li in (0..layers.len()).rev() {
            let l = layers[li];
            // ∂/∂W = deltaᵀ · input
            gemm_slices(
                l.fan_out,
                n,
                l.fan_in,
                &delta,
                true,
                &acts[li],
                false,
                0.0,
                &mut g[l.w..l.b],
            );
            let gb = &mut g[l.b..l.b + l.fan_out];
            gb.fill(0.0);
            for row in delta.chunks_exact(l.fan_out) {
                for (b, &d) in gb.iter_mut().zip(row) {
                    *b += d;
                }
            }
            if li > 0 {
                let w = &self.params[l.w..l.b];
                let mut prev = vec![0.0; n * l.fan_in];
                gemm_slices(n, l.fan_out, l.fan_in, &delta, false, w, false, 0.0, &mut prev);
                for ((p, &z), &a) in prev.iter_mut().zip(&zs[li - 1]).zip(&acts[li]) {
                    *p *= self.activation.slope(z, a);
                }
                delta = prev;
            }
        }
    }

    /// Writes the `MLPC` checkpoint.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MLP_MAGIC)?;
        codec::put_u32(w, MLP_VERSION)?;
        codec::put_u32(w, self.activation.code())?;
        codec::put_u32(w, self.sizes.len() as u32)?;
        for &s in &self.sizes {
            codec::put_u64(w, s as u64)?;
        }
        codec::put_f64s(w, &self.params)?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        const CTX: &str = "network checkpoint";
        let version = codec::expect_magic(r, MLP_MAGIC, CTX)?;
        if version != MLP_VERSION {
            return Err(Error::Format {
                context: CTX,
                reason: format!("unsupported version {version}"),
            });
        }
        let code = codec::get_u32(r, CTX)?;
        let activation = Activation::from_code(code).ok_or_else(|| Error::Format {
            context: CTX,
            reason: format!("unknown activation code {code}"),
        })?;
        let n_layers = codec::get_u32(r, CTX)? as usize;
        if n_layers > 1024 {
            return Err(Error::Format {
                context: CTX,
                reason: format!("implausible layer count {n_layers}"),
            });
        }
        let sizes = (0..n_layers)
            .map(|_| codec::get_len(r, CTX))
            .collect::<Result<Vec<_>>>()?;
        check_sizes(&sizes).map_err(|e| Error::Format {
            context: CTX,
            reason: e.to_string(),
        })?;
        let params = codec::get_f64s(r, param_count(&sizes), CTX)?;
        codec::expect_eof(r, CTX)?;
        Self::from_params(&sizes, activation, params)
    }
}

const MLP_MAGIC: &[u8; 4] = b"MLPC";
const MLP_VERSION: u32 = 1;
