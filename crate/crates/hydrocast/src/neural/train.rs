//! Training: window pooling, full-batch BPTT and the Adam-style update.
//!
//! Training pools sliding windows (`w` normalized inputs, one target) from
//! every series in the set, so per-series and per-cluster training are the
//! same procedure over different sets. The gradient is exact full-batch
//! backpropagation through time; it is cross-checked against central finite
//! differences in the test suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::ForecastError;
use crate::series::Series;

use super::gru::GruCache;
use super::lstm::LstmCache;
use super::{Cell, CellKind, Normalization, RecurrentModel};

const GRAD_CLIP_NORM: f64 = 5.0;

/// Hyperparameters for [`train`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub hidden_size: usize,
    pub window: usize,
    pub seed: u64,
}

impl TrainConfig {
    /// Defaults for one model per series: tiny data, more epochs.
    pub fn per_series() -> Self {
        Self {
            epochs: 200,
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            hidden_size: 8,
            window: 4,
            seed: 0,
        }
    }

    /// Defaults for one model per cluster: pooled data, fewer epochs.
    pub fn per_cluster() -> Self {
        Self {
            epochs: 50,
            ..Self::per_series()
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    fn check(&self) {
        assert!(self.learning_rate > 0.0, "learning_rate must be positive");
        assert!(
            (0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2),
            "betas must be in [0, 1)"
        );
        assert!(self.window >= 1 && self.hidden_size >= 1);
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::per_series()
    }
}

/// One training example: `window` normalized inputs and the next value.
pub type WindowSample = (Vec<f64>, f64);

/// Pool sliding windows across a series set, in set order.
pub fn pooled_windows(
    series_set: &[&Series],
    window: usize,
    norm: Normalization,
) -> Vec<WindowSample> {
    let mut batch = Vec::new();
    for series in series_set {
        let values: Vec<f64> = series.values().iter().map(|&v| norm.normalize(v)).collect();
        for t in window..values.len() {
            batch.push((values[t - window..t].to_vec(), values[t]));
        }
    }
    batch
}

enum StepCaches {
    Lstm(Vec<LstmCache>),
    Gru(Vec<GruCache>),
}

fn forward_cached(model: &RecurrentModel, window: &[f64]) -> (f64, StepCaches) {
    let hidden = model.hidden_size();
    match &model.cell {
        Cell::Lstm(p) => {
            let mut caches = Vec::with_capacity(window.len());
            let mut h = vec![0.0; hidden];
            let mut s = vec![0.0; hidden];
            for &v in window {
                let cache = p.step_cached(&[v], &h, &s);
                h = cache.h.clone();
                s = cache.s.clone();
                caches.push(cache);
            }
            let pred = model.head_w.iter().zip(&h).map(|(w, hv)| w * hv).sum::<f64>() + model.head_b;
            (pred, StepCaches::Lstm(caches))
        }
        Cell::Gru(p) => {
            let mut caches = Vec::with_capacity(window.len());
            let mut h = vec![0.0; hidden];
            for &v in window {
                let cache = p.step_cached(&[v], &h);
                h = cache.h.clone();
                caches.push(cache);
            }
            let pred = model.head_w.iter().zip(&h).map(|(w, hv)| w * hv).sum::<f64>() + model.head_b;
            (pred, StepCaches::Gru(caches))
        }
    }
}

/// Mean-squared loss of `model` over `batch`.
pub fn batch_loss(model: &RecurrentModel, batch: &[WindowSample]) -> f64 {
    let sum: f64 = batch
        .iter()
        .map(|(window, target)| {
            let pred = model.forward(window).expect("batch windows match the model");
            (pred - target) * (pred - target)
        })
        .sum();
    sum / batch.len() as f64
}

/// Mean-squared loss and its exact BPTT gradient in flat-parameter order.
pub fn batch_gradient(model: &RecurrentModel, batch: &[WindowSample]) -> (f64, Vec<f64>) {
    let hidden = model.hidden_size();
    let n = batch.len() as f64;
    let mut cell_grads = Cell::zeros(model.kind(), model.cell.input_size(), hidden);
    let mut head_w_grad = vec![0.0; hidden];
    let mut head_b_grad = 0.0;
    let mut loss = 0.0;

    for (window, target) in batch {
        let (pred, caches) = forward_cached(model, window);
        let err = pred - target;
        loss += err * err;
        let dpred = 2.0 * err / n;

        let last_h: &[f64] = match &caches {
            StepCaches::Lstm(c) => &c.last().expect("window is non-empty").h,
            StepCaches::Gru(c) => &c.last().expect("window is non-empty").h,
        };
        for ((gw, hv), w) in head_w_grad.iter_mut().zip(last_h).zip(&model.head_w) {
            let _ = w;
            *gw += dpred * hv;
        }
        head_b_grad += dpred;

        let mut dh: Vec<f64> = model.head_w.iter().map(|w| dpred * w).collect();
        match (&model.cell, &caches, &mut cell_grads) {
            (Cell::Lstm(p), StepCaches::Lstm(caches), Cell::Lstm(grads)) => {
                let mut ds = vec![0.0; hidden];
                for cache in caches.iter().rev() {
                    let (dh_prev, ds_prev) = p.backward(cache, &dh, &ds, grads);
                    dh = dh_prev;
                    ds = ds_prev;
                }
            }
            (Cell::Gru(p), StepCaches::Gru(caches), Cell::Gru(grads)) => {
                for cache in caches.iter().rev() {
                    dh = p.backward(cache, &dh, grads);
                }
            }
            _ => unreachable!("cache flavor follows the cell flavor"),
        }
    }

    let mut flat: Vec<f64> = cell_grads.iter().copied().collect();
    flat.extend_from_slice(&head_w_grad);
    flat.push(head_b_grad);
    (loss / n, flat)
}

/// Central difference `(f(x+h) − f(x−h)) / 2h`.
pub fn central_difference(f: impl Fn(f64) -> f64, at: f64, step: f64) -> f64 {
    (f(at + step) - f(at - step)) / (2.0 * step)
}

/// Finite-difference derivative of the batch loss along one flat-parameter
/// coordinate. The verification oracle for [`batch_gradient`].
pub fn numeric_gradient(
    model: &RecurrentModel,
    batch: &[WindowSample],
    coordinate: usize,
    step: f64,
) -> f64 {
    let flat = model.flat_params();
    central_difference(
        |v| {
            let mut perturbed = flat.clone();
            perturbed[coordinate] = v;
            let mut m = model.clone();
            m.set_flat_params(&perturbed);
            batch_loss(&m, batch)
        },
        flat[coordinate],
        step,
    )
}

/// Train one model on the training prefixes in `series_set`.
///
/// Normalization constants come from all values in the set; windows are
/// pooled across the set; gradients are full batch; the update is Adam with
/// bias correction and a global-norm gradient clip. Initialization is
/// uniform in `±1/√H` from `config.seed`, so equal `(data, config)` give
/// bit-identical models.
///
/// # Errors
/// `InsufficientHistory` when any series is no longer than the window,
/// `DivergedLoss` when the loss goes non-finite.
pub fn train(
    series_set: &[&Series],
    kind: CellKind,
    config: &TrainConfig,
) -> Result<RecurrentModel, ForecastError> {
    config.check();
    assert!(!series_set.is_empty(), "series set must be non-empty");
    for series in series_set {
        if series.len() <= config.window {
            return Err(ForecastError::InsufficientHistory {
                needed: config.window + 1,
                got: series.len(),
            });
        }
    }

    let norm = Normalization::fit(
        series_set
            .iter()
            .flat_map(|s| s.observations().iter().map(|&(_, v)| v)),
    );
    let batch = pooled_windows(series_set, config.window, norm);

    let mut model = RecurrentModel {
        cell: Cell::zeros(kind, 1, config.hidden_size),
        head_w: vec![0.0; config.hidden_size],
        head_b: 0.0,
        window: config.window,
        norm,
        seed: config.seed,
        train_log: Vec::with_capacity(config.epochs),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let bound = 1.0 / (config.hidden_size as f64).sqrt();
    let init: Vec<f64> = (0..model.n_params())
        .map(|_| rng.gen_range(-bound..bound))
        .collect();
    model.set_flat_params(&init);

    let n = model.n_params();
    let mut m = vec![0.0; n];
    let mut v = vec![0.0; n];
    for epoch in 0..config.epochs {
        let (loss, mut grad) = batch_gradient(&model, &batch);
        if !loss.is_finite() {
            return Err(ForecastError::DivergedLoss { epoch });
        }
        model.train_log.push(loss);

        let norm2: f64 = grad.iter().map(|g| g * g).sum();
        let grad_norm = norm2.sqrt();
        if grad_norm > GRAD_CLIP_NORM {
            let scale = GRAD_CLIP_NORM / grad_norm;
            for g in grad.iter_mut() {
                *g *= scale;
            }
        }

        let t = (epoch + 1) as i32;
        let bias1 = 1.0 - config.beta1.powi(t);
        let bias2 = 1.0 - config.beta2.powi(t);
        let mut flat = model.flat_params();
        for k in 0..n {
            m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * grad[k];
            v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * grad[k] * grad[k];
            let m_hat = m[k] / bias1;
            let v_hat = v[k] / bias2;
            flat[k] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
        }
        model.set_flat_params(&flat);
    }
    Ok(model)
}
