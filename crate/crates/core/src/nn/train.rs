use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Activation, Mlp};
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};

pub const DEFAULT_EPOCH_GRID: [usize; 4] = [40, 100, 200, 400];

/// Hidden layer widths and activation; the input width comes from the data.
#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Architecture {
    pub fn new(hidden: &[usize], activation: Activation) -> Self {
        Self {
            hidden: hidden.to_vec(),
            activation,
        }
    }

    pub fn layer_sizes(&self, input_dim: usize) -> Vec<usize> {
        let mut s = Vec::with_capacity(self.hidden.len() + 2);
        s.push(input_dim);
        s.extend_from_slice(&self.hidden);
        s.push(1);
        s
    }
}

impl Default for Architecture {
    fn default() -> Self {
        Self::new(&[50, 50], Activation::Tanh)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// L2 coefficient on every parameter, biases included.
    pub lambda: f64,
    /// Used when `epoch_grid` is `None`.
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub epoch_grid: Option<Vec<usize>>,
    pub validation_fraction: f64,
}

impl TrainConfig {
    /// Defaults for everything except `lambda`, which has to be chosen.
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            epochs: 100,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 0,
            epoch_grid: Some(DEFAULT_EPOCH_GRID.to_vec()),
            validation_fraction: 0.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::Domain {
                what: "lambda",
                value: self.lambda,
            });
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Domain {
                what: "learning rate",
                value: self.learning_rate,
            });
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch size must be at least 1".into()));
        }
        if let Some(grid) = &self.epoch_grid {
            if grid.is_empty() || grid.contains(&0) {
                return Err(Error::Config("epoch grid values must be positive".into()));
            }
            if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
                return Err(Error::Domain {
                    what: "validation fraction",
                    value: self.validation_fraction,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub net: Mlp,
    /// epoch count of the returned network
    pub epochs: usize,
    /// `Σ(f − y)² + λ‖w‖²` on the training data at initialisation
    pub initial_loss: f64,
    /// the same objective after the last epoch
    pub final_loss: f64,
    /// validation MSE per grid value, empty without a grid
    pub validation: Vec<(usize, f64)>,
}

/// Trains a network on `(x, y)`.
///
/// With an epoch grid, a validation part is split off, one run to the
/// largest grid value records the validation MSE at every grid value, and the
/// returned network is retrained from scratch on all rows for the best one.
pub fn train(x: &Matrix, y: &[f64], arch: &Architecture, cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    if x.rows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            actual: y.len(),
        });
    }
    if x.rows() == 0 {
        return Err(Error::Data("no training rows".into()));
    }
    let sizes = arch.layer_sizes(x.cols());
    let all: Vec<usize> = (0..x.rows()).collect();

    let (epochs, validation) = match &cfg.epoch_grid {
        None => (cfg.epochs, Vec::new()),
        Some(grid) => {
            let mut grid = grid.clone();
            grid.sort_unstable();
            grid.dedup();
            let (fit_idx, val_idx) = validation_split(x.rows(), cfg)?;
            let xv = gather(x, &val_idx);
            let yv: Vec<f64> = val_idx.iter().map(|&i| y[i]).collect();
            let mut scores = Vec::with_capacity(grid.len());
            let max = *grid.last().unwrap();
            fit(x, y, &fit_idx, &sizes, arch.activation, cfg, max, |epoch, net| {
                if grid.binary_search(&epoch).is_ok() {
                    let pred = net.predict(&xv)?;
                    let mse = pred.iter().zip(&yv).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / yv.len() as f64;
                    scores.push((epoch, mse));
                }
                Ok(())
            })?;
            // first minimum, so ties prefer fewer epochs
            let best = scores
                .iter()
                .fold(None::<(usize, f64)>, |acc, &(e, s)| match acc {
                    Some((_, bs)) if bs <= s => acc,
                    _ => Some((e, s)),
                })
                .map(|(e, _)| e)
                .unwrap_or(max);
            (best, scores)
        }
    };

    let (net, initial_loss, final_loss) = fit(x, y, &all, &sizes, arch.activation, cfg, epochs, |_, _| Ok(()))?;
    Ok(TrainReport {
        net,
        epochs,
        initial_loss,
        final_loss,
        validation,
    })
}

fn validation_split(n: usize, cfg: &TrainConfig) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::Data("epoch tuning needs at least two training rows".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(2);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let n_val = ((n as f64 * cfg.validation_fraction).round() as usize).clamp(1, n - 1);
    let val = idx.split_off(n - n_val);
    Ok((idx, val))
}

fn gather(x: &Matrix, idx: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(idx.len(), x.cols());
    for (r, &i) in idx.iter().enumerate() {
        out.row_mut(r).copy_from_slice(x.row(i));
    }
    out
}

fn objective(net: &Mlp, x: &Matrix, y: &[f64], lambda: f64) -> Result<f64> {
    let pred = net.predict(x)?;
    let sse: f64 = pred.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sse + lambda * dot(net.params(), net.params()))
}

struct Adam {
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(p: usize, lr: f64) -> Self {
        Self {
            lr,
            m: vec![0.0; p],
            v: vec![0.0; p],
            t: 0,
        }
    }

    fn step(&mut self, w: &mut [f64], g: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for (((wi, &gi), mi), vi) in w.iter_mut().zip(g).zip(&mut self.m).zip(&mut self.v) {
            *mi = Self::B1 * *mi + (1.0 - Self::B1) * gi;
            *vi = Self::B2 * *vi + (1.0 - Self::B2) * gi * gi;
            let mh = *mi / c1;
            let vh = *vi / c2;
            *wi -= self.lr * mh / (vh.sqrt() + Self::EPS);
        }
    }
}

/// Minibatch Adam on `Σ(f − y)² + λ‖w‖²` over the rows `idx`. The penalty is
/// spread over batches in proportion to their size. `on_epoch` runs after
/// every epoch with the 1-based epoch number.
#[allow(clippy::too_many_arguments)]
fn fit(
    x: &Matrix,
    y: &[f64],
    idx: &[usize],
    sizes: &[usize],
    activation: Activation,
    cfg: &TrainConfig,
    epochs: usize,
    mut on_epoch: impl FnMut(usize, &Mlp) -> Result<()>,
) -> Result<(Mlp, f64, f64)> {
    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle_rng.set_stream(1);

    let mut net = Mlp::init_with(sizes, activation, &mut init_rng)?;
    let xs = gather(x, idx);
    let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let n = idx.len();
    let m = x.cols();
    let initial = objective(&net, &xs, &ys, cfg.lambda)?;

    let mut adam = Adam::new(net.n_params(), cfg.learning_rate);
    let mut order: Vec<usize> = (0..n).collect();
    let mut g = vec![0.0; net.n_params()];
    let mut xb = Vec::with_capacity(cfg.batch_size * m);
    let mut up = Vec::with_capacity(cfg.batch_size);
    for epoch in 1..=epochs {
        order.shuffle(&mut shuffle_rng);
        let mut running = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            xb.clear();
            for &i in batch {
                xb.extend_from_slice(xs.row(i));
            }
            let (zs, acts) = net.batch_forward(&xb, batch.len());
            let out = acts.last().unwrap();
            up.clear();
            for (&f, &i) in out.iter().zip(batch) {
                let r = f - ys[i];
                running += r * r;
                up.push(2.0 * r);
            }
            net.batch_backward(&zs, &acts, &up, &mut g);
            let pen = 2.0 * cfg.lambda * batch.len() as f64 / n as f64;
            for (gi, &wi) in g.iter_mut().zip(net.params()) {
                *gi += pen * wi;
            }
            adam.step(&mut net.params, &g);
        }
        if !running.is_finite() || net.params.iter().any(|v| !v.is_finite()) {
            return Err(Error::TrainingDiverged { epoch });
        }
        on_epoch(epoch, &net)?;
    }
    let last = objective(&net, &xs, &ys, cfg.lambda)?;
    if !last.is_finite() {
        return Err(Error::TrainingDiverged { epoch: epochs });
    }
    Ok((net, initial, last))
}
