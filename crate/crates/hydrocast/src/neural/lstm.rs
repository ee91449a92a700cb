//! The LSTM cell.
//!
//! Gate computations, with `σ` the logistic function, `φ = tanh` and `⊙`
//! elementwise multiplication:
//!
//! ```text
//! f = σ(W_fx·x + W_fh·h_prev + b_f)        forget gate
//! i = σ(W_ix·x + W_ih·h_prev + b_i)        input gate
//! g = φ(W_gx·x + W_gh·h_prev + b_g)        input node
//! o = σ(W_ox·x + W_oh·h_prev + b_o)        output gate
//! s = g ⊙ i + s_prev ⊙ f                   cell state
//! h = φ(s) ⊙ o                             hidden state
//! ```

use crate::error::ForecastError;

use super::{sigmoid, Mat};

/// Weights and biases of one LSTM cell.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub(crate) w_fx: Mat,
    pub(crate) w_fh: Mat,
    pub(crate) w_ix: Mat,
    pub(crate) w_ih: Mat,
    pub(crate) w_gx: Mat,
    pub(crate) w_gh: Mat,
    pub(crate) w_ox: Mat,
    pub(crate) w_oh: Mat,
    pub(crate) b_f: Vec<f64>,
    pub(crate) b_i: Vec<f64>,
    pub(crate) b_g: Vec<f64>,
    pub(crate) b_o: Vec<f64>,
    input_size: usize,
    hidden_size: usize,
}

impl LstmParams {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        let wx = || Mat::zeros(hidden_size, input_size);
        let wh = || Mat::zeros(hidden_size, hidden_size);
        let b = || vec![0.0; hidden_size];
        Self {
            w_fx: wx(),
            w_fh: wh(),
            w_ix: wx(),
            w_ih: wh(),
            w_gx: wx(),
            w_gh: wh(),
            w_ox: wx(),
            w_oh: wh(),
            b_f: b(),
            b_i: b(),
            b_g: b(),
            b_o: b(),
            input_size,
            hidden_size,
        }
    }

    /// Rebuild from the documented flat order: `W_fx, W_fh, W_ix, W_ih,
    /// W_gx, W_gh, W_ox, W_oh` row-major, then `b_f, b_i, b_g, b_o`.
    pub fn from_flat(input_size: usize, hidden_size: usize, flat: &[f64]) -> Option<Self> {
        let mut params = Self::zeros(input_size, hidden_size);
        if flat.len() != params.iter().count() {
            return None;
        }
        for (p, v) in params.iter_mut().zip(flat) {
            *p = *v;
        }
        Some(params)
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden_size
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = &f64> {
        self.w_fx
            .data
            .iter()
            .chain(self.w_fh.data.iter())
            .chain(self.w_ix.data.iter())
            .chain(self.w_ih.data.iter())
            .chain(self.w_gx.data.iter())
            .chain(self.w_gh.data.iter())
            .chain(self.w_ox.data.iter())
            .chain(self.w_oh.data.iter())
            .chain(self.b_f.iter())
            .chain(self.b_i.iter())
            .chain(self.b_g.iter())
            .chain(self.b_o.iter())
    }

    pub(crate) fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w_fx
            .data
            .iter_mut()
            .chain(self.w_fh.data.iter_mut())
            .chain(self.w_ix.data.iter_mut())
            .chain(self.w_ih.data.iter_mut())
            .chain(self.w_gx.data.iter_mut())
            .chain(self.w_gh.data.iter_mut())
            .chain(self.w_ox.data.iter_mut())
            .chain(self.w_oh.data.iter_mut())
            .chain(self.b_f.iter_mut())
            .chain(self.b_i.iter_mut())
            .chain(self.b_g.iter_mut())
            .chain(self.b_o.iter_mut())
    }

    fn gate(&self, wx: &Mat, wh: &Mat, b: &[f64], x: &[f64], h_prev: &[f64]) -> Vec<f64> {
        let mut from_x = vec![0.0; self.hidden_size];
        wx.matvec(x, &mut from_x);
        let mut from_h = vec![0.0; self.hidden_size];
        wh.matvec(h_prev, &mut from_h);
        from_x
            .iter()
            .zip(&from_h)
            .zip(b)
            .map(|((a, b_), c)| a + b_ + c)
            .collect()
    }

    pub(crate) fn step_cached(&self, x: &[f64], h_prev: &[f64], s_prev: &[f64]) -> LstmCache {
        let f: Vec<f64> = self
            .gate(&self.w_fx, &self.w_fh, &self.b_f, x, h_prev)
            .into_iter()
            .map(sigmoid)
            .collect();
        let i: Vec<f64> = self
            .gate(&self.w_ix, &self.w_ih, &self.b_i, x, h_prev)
            .into_iter()
            .map(sigmoid)
            .collect();
        let g: Vec<f64> = self
            .gate(&self.w_gx, &self.w_gh, &self.b_g, x, h_prev)
            .into_iter()
            .map(f64::tanh)
            .collect();
        let o: Vec<f64> = self
            .gate(&self.w_ox, &self.w_oh, &self.b_o, x, h_prev)
            .into_iter()
            .map(sigmoid)
            .collect();
        // closed bounds: σ and φ saturate to exactly 1.0/-1.0 in f64
        debug_assert!(f
            .iter()
            .chain(&i)
            .chain(&o)
            .all(|&v| !v.is_finite() || (0.0..=1.0).contains(&v)));
        debug_assert!(g.iter().all(|&v| !v.is_finite() || (-1.0..=1.0).contains(&v)));
        let s: Vec<f64> = g
            .iter()
            .zip(&i)
            .zip(s_prev.iter().zip(&f))
            .map(|((gv, iv), (sv, fv))| gv * iv + sv * fv)
            .collect();
        let tanh_s: Vec<f64> = s.iter().map(|&v| v.tanh()).collect();
        let h: Vec<f64> = tanh_s.iter().zip(&o).map(|(t, ov)| t * ov).collect();
        LstmCache {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            s_prev: s_prev.to_vec(),
            f,
            i,
            g,
            o,
            s,
            tanh_s,
            h,
        }
    }

    pub(crate) fn step_unchecked(&self, x: &[f64], h_prev: &[f64], s_prev: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let cache = self.step_cached(x, h_prev, s_prev);
        (cache.h, cache.s)
    }

    /// Backpropagate one step. `dh` and `ds` are the loss gradients flowing
    /// into `h` and `s`; parameter gradients accumulate into `grads` and the
    /// gradients for the previous state come back.
    pub(crate) fn backward(
        &self,
        cache: &LstmCache,
        dh: &[f64],
        ds_in: &[f64],
        grads: &mut LstmParams,
    ) -> (Vec<f64>, Vec<f64>) {
        let hidden = self.hidden_size;
        let mut ds = vec![0.0; hidden];
        let mut d_o = vec![0.0; hidden];
        for k in 0..hidden {
            d_o[k] = dh[k] * cache.tanh_s[k];
            ds[k] = ds_in[k] + dh[k] * cache.o[k] * (1.0 - cache.tanh_s[k] * cache.tanh_s[k]);
        }
        let mut d_f = vec![0.0; hidden];
        let mut d_i = vec![0.0; hidden];
        let mut d_g = vec![0.0; hidden];
        let mut ds_prev = vec![0.0; hidden];
        for k in 0..hidden {
            d_f[k] = ds[k] * cache.s_prev[k];
            d_i[k] = ds[k] * cache.g[k];
            d_g[k] = ds[k] * cache.i[k];
            ds_prev[k] = ds[k] * cache.f[k];
        }
        // pre-activation gradients
        let mut a_f = vec![0.0; hidden];
        let mut a_i = vec![0.0; hidden];
        let mut a_g = vec![0.0; hidden];
        let mut a_o = vec![0.0; hidden];
        for k in 0..hidden {
            a_f[k] = d_f[k] * cache.f[k] * (1.0 - cache.f[k]);
            a_i[k] = d_i[k] * cache.i[k] * (1.0 - cache.i[k]);
            a_g[k] = d_g[k] * (1.0 - cache.g[k] * cache.g[k]);
            a_o[k] = d_o[k] * cache.o[k] * (1.0 - cache.o[k]);
        }

        grads.w_fx.add_outer(&a_f, &cache.x);
        grads.w_fh.add_outer(&a_f, &cache.h_prev);
        grads.w_ix.add_outer(&a_i, &cache.x);
        grads.w_ih.add_outer(&a_i, &cache.h_prev);
        grads.w_gx.add_outer(&a_g, &cache.x);
        grads.w_gh.add_outer(&a_g, &cache.h_prev);
        grads.w_ox.add_outer(&a_o, &cache.x);
        grads.w_oh.add_outer(&a_o, &cache.h_prev);
        for k in 0..hidden {
            grads.b_f[k] += a_f[k];
            grads.b_i[k] += a_i[k];
            grads.b_g[k] += a_g[k];
            grads.b_o[k] += a_o[k];
        }

        let mut dh_prev = vec![0.0; hidden];
        self.w_fh.add_tr_matvec(&a_f, &mut dh_prev);
        self.w_ih.add_tr_matvec(&a_i, &mut dh_prev);
        self.w_gh.add_tr_matvec(&a_g, &mut dh_prev);
        self.w_oh.add_tr_matvec(&a_o, &mut dh_prev);
        (dh_prev, ds_prev)
    }
}

/// Everything the backward pass needs from one forward step.
#[derive(Debug, Clone)]
pub(crate) struct LstmCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub s_prev: Vec<f64>,
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    pub g: Vec<f64>,
    pub o: Vec<f64>,
    pub s: Vec<f64>,
    pub tanh_s: Vec<f64>,
    pub h: Vec<f64>,
}

/// One LSTM step: `(h_prev, s_prev)` and input `x` to `(h, s)`.
///
/// # Errors
/// `ShapeMismatch` when `x` or the state disagree with the parameter
/// shapes, `NonFiniteActivation` when the result is not finite.
pub fn lstm_step(
    params: &LstmParams,
    x: &[f64],
    state: (&[f64], &[f64]),
) -> Result<(Vec<f64>, Vec<f64>), ForecastError> {
    let (h_prev, s_prev) = state;
    if x.len() != params.input_size() {
        return Err(ForecastError::ShapeMismatch {
            expected: params.input_size(),
            got: x.len(),
        });
    }
    for v in [h_prev, s_prev] {
        if v.len() != params.hidden_size() {
            return Err(ForecastError::ShapeMismatch {
                expected: params.hidden_size(),
                got: v.len(),
            });
        }
    }
    let (h, s) = params.step_unchecked(x, h_prev, s_prev);
    if h.iter().chain(&s).any(|v| !v.is_finite()) {
        return Err(ForecastError::NonFiniteActivation);
    }
    Ok((h, s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_parameters_give_zero_state() {
        let params = LstmParams::zeros(2, 3);
        let (h, s) = lstm_step(&params, &[0.7, -0.3], (&[0.0; 3], &[0.0; 3])).unwrap();
        assert_eq!(h, vec![0.0; 3]);
        assert_eq!(s, vec![0.0; 3]);
    }

    #[test]
    fn saturated_forget_gate_preserves_cell_state() {
        // b_f = 50 pins the forget gate at 1; all other weights zero, so
        // g = 0 and the cell state carries over unchanged.
        let mut params = LstmParams::zeros(1, 2);
        params.b_f = vec![50.0, 50.0];
        let s_prev = [0.4, -1.2];
        let (_, s) = lstm_step(&params, &[123.0], (&[0.0; 2], &s_prev)).unwrap();
        for (out, original) in s.iter().zip(&s_prev) {
            assert!((out - original).abs() < 1e-9);
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let params = LstmParams::zeros(2, 3);
        assert!(matches!(
            lstm_step(&params, &[1.0], (&[0.0; 3], &[0.0; 3])),
            Err(ForecastError::ShapeMismatch { expected: 2, got: 1 })
        ));
        assert!(matches!(
            lstm_step(&params, &[1.0, 2.0], (&[0.0; 2], &[0.0; 3])),
            Err(ForecastError::ShapeMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn non_finite_input_is_caught() {
        let mut params = LstmParams::zeros(1, 1);
        params.w_gx.data[0] = 1.0;
        params.w_ox.data[0] = 1.0;
        assert!(matches!(
            lstm_step(&params, &[f64::INFINITY], (&[0.0], &[0.0])),
            Err(ForecastError::NonFiniteActivation)
        ));
    }

    #[test]
    fn from_flat_checks_length() {
        assert!(LstmParams::from_flat(1, 2, &[0.0; 3]).is_none());
        let n = LstmParams::zeros(1, 2).iter().count();
        assert!(LstmParams::from_flat(1, 2, &vec![0.1; n]).is_some());
    }
}
