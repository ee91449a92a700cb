//! Seasonal-mean baseline forecaster.
//!
//! The next value of a season is predicted as the mean of the two previous
//! observations of the same season: `(y[i-s] + y[i-2s]) / 2`. Multi-step
//! forecasts recurse, substituting already-produced forecasts where actuals
//! are not yet available.

use crate::error::ForecastError;
use crate::series::{SeasonPeriod, Series};

/// Forecast `horizon` steps past the end of `series`.
///
/// # Errors
/// `InsufficientHistory` when the series is shorter than `2s`.
pub fn baseline_forecast(
    series: &Series,
    season: SeasonPeriod,
    horizon: usize,
) -> Result<Vec<f64>, ForecastError> {
    let s = season.get();
    if series.len() < 2 * s {
        return Err(ForecastError::InsufficientHistory {
            needed: 2 * s,
            got: series.len(),
        });
    }
    let mut extended = series.values();
    for _ in 0..horizon {
        let i = extended.len();
        extended.push((extended[i - s] + extended[i - 2 * s]) / 2.0);
    }
    Ok(extended.split_off(series.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{RegionId, SeriesId, Timestamp};
    use proptest::prelude::*;

    fn series_of(values: &[f64]) -> Series {
        let mut obs = Vec::new();
        let mut t = Timestamp::new(2013, 1).unwrap();
        for &v in values {
            obs.push((t, v));
            t = t.next_quarter();
        }
        Series::validate(SeriesId::from("s"), RegionId::from("r"), obs).unwrap()
    }

    #[test]
    fn one_step_is_the_seasonal_mean() {
        // y[i-4] = 10 (last value), y[i-8] = 20
        let values = [20.0, 1.0, 2.0, 3.0, 10.0, 4.0, 5.0, 6.0];
        let series = series_of(&values);
        let f = baseline_forecast(&series, SeasonPeriod::QUARTERLY, 1).unwrap();
        assert_eq!(f, vec![15.0]);
    }

    #[test]
    fn equal_seasonal_values_forecast_themselves() {
        let values = [7.0; 8];
        let f = baseline_forecast(&series_of(&values), SeasonPeriod::QUARTERLY, 6).unwrap();
        assert!(f.iter().all(|&v| v == 7.0));
    }

    #[test]
    fn too_short_history_errors() {
        let values = [1.0; 7];
        let err = baseline_forecast(&series_of(&values), SeasonPeriod::QUARTERLY, 1).unwrap_err();
        assert_eq!(
            err,
            ForecastError::InsufficientHistory { needed: 8, got: 7 }
        );
    }

    #[test]
    fn zero_horizon_is_empty() {
        let values = [1.0; 8];
        let f = baseline_forecast(&series_of(&values), SeasonPeriod::QUARTERLY, 0).unwrap();
        assert!(f.is_empty());
    }

    #[test]
    fn multi_step_recurses_on_forecasts() {
        // s = 2 keeps the hand computation short
        let s = SeasonPeriod::new(2).unwrap();
        let series = series_of(&[4.0, 8.0, 2.0, 6.0]);
        let f = baseline_forecast(&series, s, 3).unwrap();
        // step 1: (2 + 4)/2 = 3; step 2: (6 + 8)/2 = 7; step 3: (3 + 2)/2 = 2.5
        assert_eq!(f, vec![3.0, 7.0, 2.5]);
    }

    proptest! {
        // Integer-valued series keep every addition exact, so the shift
        // must be exact too.
        #[test]
        fn shifting_history_shifts_forecasts(
            values in proptest::collection::vec(0.0f64..1000.0, 8..20),
            shift in 1u32..1000,
        ) {
            let rounded: Vec<f64> = values.iter().map(|v| v.round()).collect();
            let shifted: Vec<f64> = rounded.iter().map(|v| v + f64::from(shift)).collect();
            let base = baseline_forecast(&series_of(&rounded), SeasonPeriod::QUARTERLY, 5).unwrap();
            let moved = baseline_forecast(&series_of(&shifted), SeasonPeriod::QUARTERLY, 5).unwrap();
            for (b, m) in base.iter().zip(&moved) {
                prop_assert_eq!(b + f64::from(shift), *m);
            }
        }
    }
}
