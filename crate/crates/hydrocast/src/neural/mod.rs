//! LSTM and GRU forecasters.
//!
//! The cells are implemented directly from their gate equations (see
//! [`lstm`] and [`gru`]); around them sits a deliberately small network:
//! one recurrent layer unrolled over a fixed window of normalized values,
//! then a linear head producing the next value. Training is full-batch
//! backpropagation through time with an Adam-style update, seeded and
//! single-threaded, so equal data and config give bit-identical models.
//!
//! Parameters flatten in a documented order (gates `f, i, g, o` for LSTM,
//! `u, r, h` for GRU, matrices row-major, then biases, then the output
//! head); the numeric gradient, the BPTT gradient and the JSON form all
//! share it.

mod gru;
mod lstm;
mod train;

pub use gru::{gru_step, GruParams};
pub use lstm::{lstm_step, LstmParams};
pub use train::{
    batch_gradient, batch_loss, central_difference, numeric_gradient, pooled_windows, train,
    TrainConfig, WindowSample,
};

use serde::{Deserialize, Serialize};

use crate::error::ForecastError;
use crate::series::Series;

/// Row-major matrix just big enough for the cell math.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// `out = A·x`.
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    /// `out += Aᵀ·y`.
    pub fn add_tr_matvec(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (r, &yr) in y.iter().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * yr;
            }
        }
    }

    /// `A += y·xᵀ`.
    pub fn add_outer(&mut self, y: &[f64], x: &[f64]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(x.len(), self.cols);
        for (r, &yr) in y.iter().enumerate() {
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (a, &xv) in row.iter_mut().zip(x) {
                *a += yr * xv;
            }
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Which recurrent cell a model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellKind {
    Lstm,
    Gru,
}

impl CellKind {
    pub fn name(self) -> &'static str {
        match self {
            CellKind::Lstm => "lstm",
            CellKind::Gru => "gru",
        }
    }
}

impl std::fmt::Display for CellKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Trainable parameter count of a bare cell (output head excluded).
///
/// LSTM: `4·(H·input + H² + H)`. GRU: `3·(H·input + H² + H)` — exactly
/// three quarters of the LSTM, for every size.
pub fn param_count(kind: CellKind, input_size: usize, hidden_size: usize) -> usize {
    let per_gate = hidden_size * input_size + hidden_size * hidden_size + hidden_size;
    match kind {
        CellKind::Lstm => 4 * per_gate,
        CellKind::Gru => 3 * per_gate,
    }
}

/// Cell parameters, either flavor.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Lstm(LstmParams),
    Gru(GruParams),
}

impl Cell {
    pub fn kind(&self) -> CellKind {
        match self {
            Cell::Lstm(_) => CellKind::Lstm,
            Cell::Gru(_) => CellKind::Gru,
        }
    }

    pub fn hidden_size(&self) -> usize {
        match self {
            Cell::Lstm(p) => p.hidden_size(),
            Cell::Gru(p) => p.hidden_size(),
        }
    }

    pub fn input_size(&self) -> usize {
        match self {
            Cell::Lstm(p) => p.input_size(),
            Cell::Gru(p) => p.input_size(),
        }
    }

    pub(crate) fn zeros(kind: CellKind, input_size: usize, hidden_size: usize) -> Self {
        match kind {
            CellKind::Lstm => Cell::Lstm(LstmParams::zeros(input_size, hidden_size)),
            CellKind::Gru => Cell::Gru(GruParams::zeros(input_size, hidden_size)),
        }
    }

    pub(crate) fn n_params(&self) -> usize {
        param_count(self.kind(), self.input_size(), self.hidden_size())
    }

    pub(crate) fn iter(&self) -> Box<dyn Iterator<Item = &f64> + '_> {
        match self {
            Cell::Lstm(p) => Box::new(p.iter()),
            Cell::Gru(p) => Box::new(p.iter()),
        }
    }

    pub(crate) fn iter_mut(&mut self) -> Box<dyn Iterator<Item = &mut f64> + '_> {
        match self {
            Cell::Lstm(p) => Box::new(p.iter_mut()),
            Cell::Gru(p) => Box::new(p.iter_mut()),
        }
    }
}

/// Min-max normalization constants learned from the training values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub min: f64,
    pub max: f64,
}

impl Normalization {
    pub fn fit(values: impl Iterator<Item = f64>) -> Self {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for v in values {
            min = min.min(v);
            max = max.max(v);
        }
        Self { min, max }
    }

    /// Map into `[0, 1]`; a degenerate range maps everything to `0.5`.
    pub fn normalize(&self, v: f64) -> f64 {
        if self.max > self.min {
            (v - self.min) / (self.max - self.min)
        } else {
            0.5
        }
    }

    pub fn denormalize(&self, y: f64) -> f64 {
        if self.max > self.min {
            self.min + y * (self.max - self.min)
        } else {
            self.min
        }
    }
}

/// A trained recurrent forecaster: cell, linear output head, window length
/// and the normalization constants of its training set.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentModel {
    pub(crate) cell: Cell,
    pub(crate) head_w: Vec<f64>,
    pub(crate) head_b: f64,
    pub(crate) window: usize,
    pub(crate) norm: Normalization,
    pub(crate) seed: u64,
    pub(crate) train_log: Vec<f64>,
}

impl RecurrentModel {
    pub fn kind(&self) -> CellKind {
        self.cell.kind()
    }

    pub fn hidden_size(&self) -> usize {
        self.cell.hidden_size()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn norm(&self) -> Normalization {
        self.norm
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Full-batch loss per epoch, recorded during training.
    pub fn train_log(&self) -> &[f64] {
        &self.train_log
    }

    /// Cell, head weights and head bias in the documented flat order.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut flat: Vec<f64> = self.cell.iter().copied().collect();
        flat.extend_from_slice(&self.head_w);
        flat.push(self.head_b);
        flat
    }

    pub fn n_params(&self) -> usize {
        self.cell.n_params() + self.head_w.len() + 1
    }

    pub(crate) fn set_flat_params(&mut self, flat: &[f64]) {
        debug_assert_eq!(flat.len(), self.n_params());
        let mut it = flat.iter();
        for p in self.cell.iter_mut() {
            *p = *it.next().expect("flat vector covers the cell");
        }
        for w in self.head_w.iter_mut() {
            *w = *it.next().expect("flat vector covers the head");
        }
        self.head_b = *it.next().expect("flat vector covers the bias");
    }

    /// Unroll the cell over one window of `window()` normalized values from
    /// zero initial state and apply the head.
    ///
    /// # Errors
    /// `ShapeMismatch` when the window length is wrong.
    pub fn forward(&self, window: &[f64]) -> Result<f64, ForecastError> {
        if window.len() != self.window {
            return Err(ForecastError::ShapeMismatch {
                expected: self.window,
                got: window.len(),
            });
        }
        let hidden = self.hidden_size();
        let mut h = vec![0.0; hidden];
        let mut s = vec![0.0; hidden];
        for &v in window {
            let x = [v];
            match &self.cell {
                Cell::Lstm(p) => {
                    let (h_next, s_next) = p.step_unchecked(&x, &h, &s);
                    h = h_next;
                    s = s_next;
                }
                Cell::Gru(p) => h = p.step_unchecked(&x, &h),
            }
        }
        Ok(self.head_w.iter().zip(&h).map(|(w, hv)| w * hv).sum::<f64>() + self.head_b)
    }

    /// Recursive multi-step forecast in cubic meters.
    ///
    /// The last `window()` observations of `history` seed the input window;
    /// each prediction is appended (still normalized) for the next step.
    /// Outputs are denormalized and clipped at 0 m³.
    ///
    /// # Errors
    /// `InsufficientHistory` when the history is shorter than the window.
    pub fn predict(&self, history: &Series, horizon: usize) -> Result<Vec<f64>, ForecastError> {
        if history.len() < self.window {
            return Err(ForecastError::InsufficientHistory {
                needed: self.window,
                got: history.len(),
            });
        }
        let values = history.values();
        let mut window: Vec<f64> = values[values.len() - self.window..]
            .iter()
            .map(|&v| self.norm.normalize(v))
            .collect();
        let mut out = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let pred = self.forward(&window).expect("window length is maintained");
            window.remove(0);
            window.push(pred);
            out.push(self.norm.denormalize(pred).max(0.0));
        }
        Ok(out)
    }

    /// JSON form: kind, sizes, flat weights in documented order, norm
    /// constants and seed.
    pub fn to_json(&self) -> String {
        let cell_weights: Vec<f64> = self.cell.iter().copied().collect();
        let doc = ModelJson {
            kind: self.kind(),
            input_size: self.cell.input_size(),
            hidden_size: self.hidden_size(),
            window: self.window,
            cell_weights,
            head_weights: self.head_w.clone(),
            head_bias: self.head_b,
            norm: self.norm,
            seed: self.seed,
        };
        serde_json::to_string_pretty(&doc).expect("model serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        let doc: ModelJson = serde_json::from_str(json)?;
        let mut cell = Cell::zeros(doc.kind, doc.input_size, doc.hidden_size);
        for (p, v) in cell.iter_mut().zip(&doc.cell_weights) {
            *p = *v;
        }
        Ok(Self {
            cell,
            head_w: doc.head_weights,
            head_b: doc.head_bias,
            window: doc.window,
            norm: doc.norm,
            seed: doc.seed,
            train_log: Vec::new(),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    kind: CellKind,
    input_size: usize,
    hidden_size: usize,
    window: usize,
    cell_weights: Vec<f64>,
    head_weights: Vec<f64>,
    head_bias: f64,
    norm: Normalization,
    seed: u64,
}
