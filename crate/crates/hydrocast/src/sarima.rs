//! Seasonal ARIMA fitted by conditional sum of squares.
//!
//! A model of order `(p,d,q)(P,D,Q)_s` is handled in three layers:
//!
//! 1. [`seasonal_difference`] removes seasonality (`D` passes of
//!    `z[i] = y[i] - y[i-s]`) and trend (`d` ordinary passes), keeping the
//!    consumed prefixes so the transform inverts exactly.
//! 2. [`fit_sarima`] expands the multiplicative AR and MA polynomials into
//!    plain lag weights and minimizes the one-step squared residuals with a
//!    derivative-free simplex, every coefficient clamped to ±0.99.
//!    Pre-sample residuals are zero; the intercept is fixed at the mean of
//!    the differenced series rather than being an optimizer dimension.
//! 3. [`sarima_forecast`] iterates the same recursion with future shocks
//!    set to zero and inverts the differencing.
//!
//! Order selection is a grid search by AIC `n·ln(σ̂²) + 2k`,
//! `k = p+q+P+Q+1`.

use serde::{Deserialize, Serialize};

use crate::error::ForecastError;
use crate::optim::NelderMead;
use crate::series::{SeasonPeriod, Series};

const COEF_BOUND: f64 = 0.99;
const SIGMA2_FLOOR: f64 = 1e-12;

/// `(p,d,q)(P,D,Q)_s`. Uppercase orders are the seasonal counterparts,
/// stored as `sp`, `sd`, `sq`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SarimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub sp: usize,
    pub sd: usize,
    pub sq: usize,
    pub s: SeasonPeriod,
}

impl SarimaOrder {
    /// Returns `None` when any order exceeds 2 or `d + D > 2`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        p: usize,
        d: usize,
        q: usize,
        sp: usize,
        sd: usize,
        sq: usize,
        s: SeasonPeriod,
    ) -> Option<Self> {
        let within = [p, d, q, sp, sd, sq].iter().all(|&o| o <= 2);
        (within && d + sd <= 2).then_some(Self {
            p,
            d,
            q,
            sp,
            sd,
            sq,
            s,
        })
    }

    /// Coefficients plus intercept.
    pub fn n_params(&self) -> usize {
        self.p + self.q + self.sp + self.sq + 1
    }

    fn n_coefficients(&self) -> usize {
        self.p + self.q + self.sp + self.sq
    }

    fn max_ar_lag(&self) -> usize {
        combined_max_lag(self.p, self.sp, self.s.get())
    }

    fn max_ma_lag(&self) -> usize {
        combined_max_lag(self.q, self.sq, self.s.get())
    }

    fn key(&self) -> (usize, usize, usize, usize, usize, usize) {
        (self.p, self.d, self.q, self.sp, self.sd, self.sq)
    }
}

fn combined_max_lag(nonseasonal: usize, seasonal: usize, s: usize) -> usize {
    if nonseasonal > 0 && seasonal > 0 {
        nonseasonal + seasonal * s
    } else {
        nonseasonal.max(seasonal * s)
    }
}

impl std::fmt::Display for SarimaOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "({},{},{})({},{},{})_{}",
            self.p,
            self.d,
            self.q,
            self.sp,
            self.sd,
            self.sq,
            self.s.get()
        )
    }
}

/// A fitted model: coefficients on the differenced scale plus fit
/// statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SarimaModel {
    pub order: SarimaOrder,
    /// φ, trend AR coefficients.
    pub ar: Vec<f64>,
    /// θ, trend MA coefficients.
    pub ma: Vec<f64>,
    /// Φ, seasonal AR coefficients.
    pub sar: Vec<f64>,
    /// Θ, seasonal MA coefficients.
    pub sma: Vec<f64>,
    pub intercept: f64,
    pub sigma2: f64,
    pub aic: f64,
}

impl SarimaModel {
    /// JSON dump for debugging.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }
}

/// Prefixes consumed by each differencing pass, in application order,
/// enough to reverse the transform.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferencingContext {
    prefixes: Vec<Vec<f64>>,
}

/// Apply seasonal differencing `big_d` times, then ordinary differencing
/// `d` times. Output length is `input − D·s − d`.
///
/// # Errors
/// `InsufficientHistory` when the input is too short to survive.
pub fn seasonal_difference(
    values: &[f64],
    season: SeasonPeriod,
    big_d: usize,
    d: usize,
) -> Result<(Vec<f64>, DifferencingContext), ForecastError> {
    let s = season.get();
    let consumed = big_d * s + d;
    if values.len() <= consumed {
        return Err(ForecastError::InsufficientHistory {
            needed: consumed + 1,
            got: values.len(),
        });
    }
    let mut current = values.to_vec();
    let mut prefixes = Vec::with_capacity(big_d + d);
    for _ in 0..big_d {
        prefixes.push(current[..s].to_vec());
        current = difference_once(&current, s);
    }
    for _ in 0..d {
        prefixes.push(current[..1].to_vec());
        current = difference_once(&current, 1);
    }
    Ok((current, DifferencingContext { prefixes }))
}

fn difference_once(values: &[f64], lag: usize) -> Vec<f64> {
    (lag..values.len()).map(|i| values[i] - values[i - lag]).collect()
}

/// Reverse [`seasonal_difference`]. `diffed` may be longer than the
/// original differenced series (forecast continuations); the reconstruction
/// extends accordingly.
pub fn invert_difference(diffed: &[f64], ctx: &DifferencingContext) -> Vec<f64> {
    let mut current = diffed.to_vec();
    for prefix in ctx.prefixes.iter().rev() {
        let lag = prefix.len();
        let mut rebuilt = Vec::with_capacity(current.len() + lag);
        rebuilt.extend_from_slice(prefix);
        for (i, &z) in current.iter().enumerate() {
            let base = rebuilt[i];
            rebuilt.push(z + base);
        }
        current = rebuilt;
    }
    current
}

/// Lag weights of the expanded multiplicative polynomials. Index 0 is lag
/// 1, etc.
struct LagWeights {
    ar: Vec<f64>,
    ma: Vec<f64>,
}

fn expand_weights(order: &SarimaOrder, coef: &Coefficients) -> LagWeights {
    let s = order.s.get();
    let mut ar = vec![0.0; order.max_ar_lag()];
    for (i, &phi) in coef.ar.iter().enumerate() {
        ar[i] += phi;
    }
    for (j, &sphi) in coef.sar.iter().enumerate() {
        ar[(j + 1) * s - 1] += sphi;
    }
    // (1 - φB)(1 - ΦB^s) carries the cross term -φΦ B^{i+js}
    for (i, &phi) in coef.ar.iter().enumerate() {
        for (j, &sphi) in coef.sar.iter().enumerate() {
            ar[i + (j + 1) * s] -= phi * sphi;
        }
    }
    let mut ma = vec![0.0; order.max_ma_lag()];
    for (i, &theta) in coef.ma.iter().enumerate() {
        ma[i] += theta;
    }
    for (j, &stheta) in coef.sma.iter().enumerate() {
        ma[(j + 1) * s - 1] += stheta;
    }
    // (1 + θB)(1 + ΘB^s) carries +θΘ B^{i+js}
    for (i, &theta) in coef.ma.iter().enumerate() {
        for (j, &stheta) in coef.sma.iter().enumerate() {
            ma[i + (j + 1) * s] += theta * stheta;
        }
    }
    LagWeights { ar, ma }
}

struct Coefficients {
    ar: Vec<f64>,
    ma: Vec<f64>,
    sar: Vec<f64>,
    sma: Vec<f64>,
}

impl Coefficients {
    fn from_flat(order: &SarimaOrder, flat: &[f64]) -> Self {
        let clamped: Vec<f64> = flat.iter().map(|c| c.clamp(-COEF_BOUND, COEF_BOUND)).collect();
        let (ar, rest) = clamped.split_at(order.p);
        let (ma, rest) = rest.split_at(order.q);
        let (sar, sma) = rest.split_at(order.sp);
        Self {
            ar: ar.to_vec(),
            ma: ma.to_vec(),
            sar: sar.to_vec(),
            sma: sma.to_vec(),
        }
    }
}

/// One-step residuals of the expanded recursion. Residuals before `start`
/// stay zero; `start` is the largest AR lag so every autoregressive term
/// sees actual data.
fn residual_recursion(
    z: &[f64],
    weights: &LagWeights,
    intercept: f64,
    start: usize,
) -> Vec<f64> {
    let mut residuals = vec![0.0; z.len()];
    for t in start..z.len() {
        let mut pred = intercept;
        for (l, &w) in weights.ar.iter().enumerate() {
            let lag = l + 1;
            pred += w * (z[t - lag] - intercept);
        }
        for (l, &w) in weights.ma.iter().enumerate() {
            let lag = l + 1;
            if t >= lag {
                pred += w * residuals[t - lag];
            }
        }
        residuals[t] = z[t] - pred;
    }
    residuals
}

fn css(z: &[f64], weights: &LagWeights, intercept: f64, start: usize) -> f64 {
    residual_recursion(z, weights, intercept, start)[start..]
        .iter()
        .map(|r| r * r)
        .sum()
}

/// Fit a model on the (training prefix) series by conditional sum of
/// squares.
///
/// # Errors
/// `InsufficientHistory` when the differenced series is shorter than
/// `3·(p+q+P+Q+1)` or than the largest AR lag, `NonConvergence` when the
/// simplex exceeds its iteration cap.
pub fn fit_sarima(series: &Series, order: SarimaOrder) -> Result<SarimaModel, ForecastError> {
    fit_on_values(&series.values(), order)
}

fn fit_on_values(values: &[f64], order: SarimaOrder) -> Result<SarimaModel, ForecastError> {
    let (z, _) = seasonal_difference(values, order.s, order.sd, order.d)?;
    let needed = (3 * order.n_params()).max(order.max_ar_lag() + 1);
    if z.len() < needed {
        return Err(ForecastError::InsufficientHistory {
            needed,
            got: z.len(),
        });
    }
    let start = order.max_ar_lag();
    let intercept = z.iter().sum::<f64>() / z.len() as f64;
    let n_coef = order.n_coefficients();

    let best = if n_coef == 0 {
        Vec::new()
    } else {
        let objective = |flat: &[f64]| {
            let coef = Coefficients::from_flat(&order, flat);
            css(&z, &expand_weights(&order, &coef), intercept, start)
        };
        let result = NelderMead::default().minimize(objective, &vec![0.1; n_coef]);
        if !result.converged {
            return Err(ForecastError::NonConvergence {
                iterations: result.iterations,
            });
        }
        result.x
    };

    let coef = Coefficients::from_flat(&order, &best);
    let weights = expand_weights(&order, &coef);
    let n_resid = z.len() - start;
    let sse = css(&z, &weights, intercept, start);
    let sigma2 = (sse / n_resid as f64).max(SIGMA2_FLOOR);
    // n is the differenced length, not the residual count: a larger AR lag
    // must not shrink the sample it is scored on.
    let aic = z.len() as f64 * sigma2.ln() + 2.0 * order.n_params() as f64;

    Ok(SarimaModel {
        order,
        ar: coef.ar,
        ma: coef.ma,
        sar: coef.sar,
        sma: coef.sma,
        intercept,
        sigma2,
        aic,
    })
}

/// The default selection grid: `p,q,P,Q ∈ {0,1}`, `d,D ∈ {0,1}` with
/// `d + D ≤ 1`.
pub fn default_grid(season: SeasonPeriod) -> Vec<SarimaOrder> {
    let mut grid = Vec::new();
    for d in 0..=1 {
        for sd in 0..=1 {
            if d + sd > 1 {
                continue;
            }
            for p in 0..=1 {
                for q in 0..=1 {
                    for sp in 0..=1 {
                        for sq in 0..=1 {
                            grid.push(
                                SarimaOrder::new(p, d, q, sp, sd, sq, season)
                                    .expect("grid orders are within bounds"),
                            );
                        }
                    }
                }
            }
        }
    }
    grid
}

/// Pick the grid order whose fit has minimal AIC. Ties break toward fewer
/// parameters, then lexicographic `(p,d,q,P,D,Q)`.
///
/// # Errors
/// `AllFitsFailed` when no grid point fits.
pub fn select_order(series: &Series, grid: &[SarimaOrder]) -> Result<SarimaOrder, ForecastError> {
    let values = series.values();
    let mut best: Option<(f64, SarimaOrder)> = None;
    for &order in grid {
        let Ok(model) = fit_on_values(&values, order) else {
            continue;
        };
        let better = match &best {
            None => true,
            Some((aic, incumbent)) => {
                (model.aic, order.n_params(), order.key())
                    < (*aic, incumbent.n_params(), incumbent.key())
            }
        };
        if better {
            best = Some((model.aic, order));
        }
    }
    best.map(|(_, order)| order).ok_or(ForecastError::AllFitsFailed)
}

/// Multi-step forecast: the ARMA recursion runs forward on the differenced
/// scale with future shocks zero, then the differencing is inverted.
///
/// `series` must be the history the model was fitted on.
pub fn sarima_forecast(model: &SarimaModel, series: &Series, horizon: usize) -> Vec<f64> {
    if horizon == 0 {
        return Vec::new();
    }
    let order = &model.order;
    let values = series.values();
    let (z, ctx) = seasonal_difference(&values, order.s, order.sd, order.d)
        .expect("model was fitted on this history");
    let coef = Coefficients {
        ar: model.ar.clone(),
        ma: model.ma.clone(),
        sar: model.sar.clone(),
        sma: model.sma.clone(),
    };
    let weights = expand_weights(order, &coef);
    let start = order.max_ar_lag();
    let mut residuals = residual_recursion(&z, &weights, model.intercept, start);

    let mut extended = z;
    for _ in 0..horizon {
        let t = extended.len();
        let mut pred = model.intercept;
        for (l, &w) in weights.ar.iter().enumerate() {
            let lag = l + 1;
            pred += w * (extended[t - lag] - model.intercept);
        }
        for (l, &w) in weights.ma.iter().enumerate() {
            let lag = l + 1;
            pred += w * residuals[t - lag];
        }
        extended.push(pred);
        residuals.push(0.0);
    }
    let rebuilt = invert_difference(&extended, &ctx);
    debug_assert_eq!(rebuilt.len(), values.len() + horizon);
    rebuilt[values.len()..].to_vec()
}
