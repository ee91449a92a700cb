//! The GRU cell.
//!
//! The weight matrices act on the concatenation `(h_prev, x)`:
//!
//! ```text
//! u = σ(W_u·(h_prev, x) + b_u)             update gate
//! r = σ(W_r·(h_prev, x) + b_r)             reset gate
//! ĥ = φ(W_h·(r ⊙ h_prev, x) + b_h)         candidate state
//! h = u ⊙ h_prev + (1 − u) ⊙ ĥ
//! ```
//!
//! One state vector instead of two, three gate blocks instead of four.

use crate::error::ForecastError;

use super::{sigmoid, Mat};

/// Weights and biases of one GRU cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    pub(crate) w_u: Mat,
    pub(crate) w_r: Mat,
    pub(crate) w_h: Mat,
    pub(crate) b_u: Vec<f64>,
    pub(crate) b_r: Vec<f64>,
    pub(crate) b_h: Vec<f64>,
    input_size: usize,
    hidden_size: usize,
}

impl GruParams {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        let w = || Mat::zeros(hidden_size, hidden_size + input_size);
        let b = || vec![0.0; hidden_size];
        Self {
            w_u: w(),
            w_r: w(),
            w_h: w(),
            b_u: b(),
            b_r: b(),
            b_h: b(),
            input_size,
            hidden_size,
        }
    }

    /// Rebuild from the documented flat order: `W_u, W_r, W_h` row-major
    /// over `(h_prev, x)`, then `b_u, b_r, b_h`.
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
        self.w_u
            .data
            .iter()
            .chain(self.w_r.data.iter())
            .chain(self.w_h.data.iter())
            .chain(self.b_u.iter())
            .chain(self.b_r.iter())
            .chain(self.b_h.iter())
    }

    pub(crate) fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w_u
            .data
            .iter_mut()
            .chain(self.w_r.data.iter_mut())
            .chain(self.w_h.data.iter_mut())
            .chain(self.b_u.iter_mut())
            .chain(self.b_r.iter_mut())
            .chain(self.b_h.iter_mut())
    }

    pub(crate) fn step_cached(&self, x: &[f64], h_prev: &[f64]) -> GruCache {
        let hidden = self.hidden_size;
        let mut concat = Vec::with_capacity(hidden + self.input_size);
        concat.extend_from_slice(h_prev);
        concat.extend_from_slice(x);

        let mut u = vec![0.0; hidden];
        self.w_u.matvec(&concat, &mut u);
        for (uv, b) in u.iter_mut().zip(&self.b_u) {
            *uv = sigmoid(*uv + b);
        }
        let mut r = vec![0.0; hidden];
        self.w_r.matvec(&concat, &mut r);
        for (rv, b) in r.iter_mut().zip(&self.b_r) {
            *rv = sigmoid(*rv + b);
        }
        // closed bounds: σ saturates to exactly 0.0/1.0 in f64
        debug_assert!(u
            .iter()
            .chain(&r)
            .all(|&v| !v.is_finite() || (0.0..=1.0).contains(&v)));

        let mut gated = Vec::with_capacity(hidden + self.input_size);
        gated.extend(r.iter().zip(h_prev).map(|(rv, hv)| rv * hv));
        gated.extend_from_slice(x);
        let mut hhat = vec![0.0; hidden];
        self.w_h.matvec(&gated, &mut hhat);
        for (hv, b) in hhat.iter_mut().zip(&self.b_h) {
            *hv = (*hv + b).tanh();
        }
        debug_assert!(hhat.iter().all(|&v| !v.is_finite() || (-1.0..=1.0).contains(&v)));

        let h = u
            .iter()
            .zip(h_prev)
            .zip(&hhat)
            .map(|((uv, hp), hh)| uv * hp + (1.0 - uv) * hh)
            .collect();
        GruCache {
            concat,
            gated,
            h_prev: h_prev.to_vec(),
            u,
            r,
            hhat,
            h,
        }
    }

    pub(crate) fn step_unchecked(&self, x: &[f64], h_prev: &[f64]) -> Vec<f64> {
        self.step_cached(x, h_prev).h
    }

    /// Backpropagate one step; parameter gradients accumulate into `grads`,
    /// the gradient for the previous hidden state comes back.
    pub(crate) fn backward(&self, cache: &GruCache, dh: &[f64], grads: &mut GruParams) -> Vec<f64> {
        let hidden = self.hidden_size;
        let mut d_u = vec![0.0; hidden];
        let mut d_hhat = vec![0.0; hidden];
        let mut dh_prev = vec![0.0; hidden];
        for k in 0..hidden {
            d_u[k] = dh[k] * (cache.h_prev[k] - cache.hhat[k]);
            d_hhat[k] = dh[k] * (1.0 - cache.u[k]);
            dh_prev[k] = dh[k] * cache.u[k];
        }

        let mut a_h = vec![0.0; hidden];
        for k in 0..hidden {
            a_h[k] = d_hhat[k] * (1.0 - cache.hhat[k] * cache.hhat[k]);
        }
        // gradient into the gated concatenation (r ⊙ h_prev, x)
        let mut d_gated = vec![0.0; hidden + self.input_size];
        self.w_h.add_tr_matvec(&a_h, &mut d_gated);
        let mut d_r = vec![0.0; hidden];
        for k in 0..hidden {
            d_r[k] = d_gated[k] * cache.h_prev[k];
            dh_prev[k] += d_gated[k] * cache.r[k];
        }

        let mut a_u = vec![0.0; hidden];
        let mut a_r = vec![0.0; hidden];
        for k in 0..hidden {
            a_u[k] = d_u[k] * cache.u[k] * (1.0 - cache.u[k]);
            a_r[k] = d_r[k] * cache.r[k] * (1.0 - cache.r[k]);
        }

        grads.w_u.add_outer(&a_u, &cache.concat);
        grads.w_r.add_outer(&a_r, &cache.concat);
        grads.w_h.add_outer(&a_h, &cache.gated);
        for k in 0..hidden {
            grads.b_u[k] += a_u[k];
            grads.b_r[k] += a_r[k];
            grads.b_h[k] += a_h[k];
        }

        // the (h_prev, x) concatenation feeds u and r; take the h block
        let mut d_concat = vec![0.0; hidden + self.input_size];
        self.w_u.add_tr_matvec(&a_u, &mut d_concat);
        self.w_r.add_tr_matvec(&a_r, &mut d_concat);
        for k in 0..hidden {
            dh_prev[k] += d_concat[k];
        }
        dh_prev
    }
}

/// Everything the backward pass needs from one forward step.
#[derive(Debug, Clone)]
pub(crate) struct GruCache {
    pub concat: Vec<f64>,
    pub gated: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub u: Vec<f64>,
    pub r: Vec<f64>,
    pub hhat: Vec<f64>,
    pub h: Vec<f64>,
}

/// One GRU step: `h_prev` and input `x` to `h`.
///
/// # Errors
/// `ShapeMismatch` when `x` or `h_prev` disagree with the parameter shapes,
/// `NonFiniteActivation` when the result is not finite.
pub fn gru_step(params: &GruParams, x: &[f64], h_prev: &[f64]) -> Result<Vec<f64>, ForecastError> {
    if x.len() != params.input_size() {
        return Err(ForecastError::ShapeMismatch {
            expected: params.input_size(),
            got: x.len(),
        });
    }
    if h_prev.len() != params.hidden_size() {
        return Err(ForecastError::ShapeMismatch {
            expected: params.hidden_size(),
            got: h_prev.len(),
        });
    }
    let h = params.step_unchecked(x, h_prev);
    if h.iter().any(|v| !v.is_finite()) {
        return Err(ForecastError::NonFiniteActivation);
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_parameters_give_zero_state() {
        // ĥ = tanh(0) = 0 and u = 0.5, so h = 0.5·0 + 0.5·0
        let params = GruParams::zeros(2, 3);
        let h = gru_step(&params, &[1.0, -2.0], &[0.0; 3]).unwrap();
        assert_eq!(h, vec![0.0; 3]);
    }

    #[test]
    fn saturated_update_gate_freezes_the_state() {
        let mut params = GruParams::zeros(1, 2);
        params.b_u = vec![50.0, 50.0];
        let h_prev = [0.3, -0.8];
        let h = gru_step(&params, &[999.0], &h_prev).unwrap();
        for (out, original) in h.iter().zip(&h_prev) {
            assert!((out - original).abs() < 1e-9);
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let params = GruParams::zeros(2, 3);
        assert!(matches!(
            gru_step(&params, &[1.0], &[0.0; 3]),
            Err(ForecastError::ShapeMismatch { expected: 2, got: 1 })
        ));
        assert!(matches!(
            gru_step(&params, &[1.0, 2.0], &[0.0; 4]),
            Err(ForecastError::ShapeMismatch { expected: 3, got: 4 })
        ));
    }

    #[test]
    fn from_flat_checks_length() {
        assert!(GruParams::from_flat(1, 2, &[0.0; 5]).is_none());
        let n = GruParams::zeros(1, 2).iter().count();
        assert!(GruParams::from_flat(1, 2, &vec![0.1; n]).is_some());
    }
}
