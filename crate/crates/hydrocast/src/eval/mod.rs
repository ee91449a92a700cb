//! Evaluation protocol: chronological split, error metrics, metric-density
//! curves and the benchmark driver.

mod benchmark;
mod kde;

pub use benchmark::{
    benchmark, read_report_csv, report_from_rows, write_density_csv, write_report_csv,
    BenchmarkOptions, EvalReport, Method, MetricKind, ReportRow,
};
pub use kde::{kde, DensityCurve, DEFAULT_KDE_GRID};

use crate::error::EvalError;
use crate::series::Series;

pub use crate::cluster::TRAIN_RATIO;

/// A series split chronologically into a training prefix and test suffix.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSeries {
    pub train: Series,
    pub test: Series,
}

/// Split at `floor(ratio · n)`: the prefix trains, the suffix tests, no
/// shuffling.
///
/// # Errors
/// `TooShort` when either side would be empty.
pub fn train_test_split(series: &Series, ratio: f64) -> Result<SplitSeries, EvalError> {
    let n = series.len();
    let train_len = (n as f64 * ratio).floor() as usize;
    if n < 2 || train_len == 0 || train_len >= n {
        return Err(EvalError::TooShort { len: n });
    }
    Ok(SplitSeries {
        train: series.slice(0..train_len).expect("prefix is non-empty"),
        test: series.slice(train_len..n).expect("suffix is non-empty"),
    })
}

/// MAE, MSE and RMSE of one forecast against its actuals.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetricTriple {
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
}

/// Pointwise forecast errors summarized three ways; `rmse = √mse`.
///
/// # Errors
/// `LengthMismatch` or `EmptyInput`.
pub fn metrics(forecast: &[f64], actual: &[f64]) -> Result<MetricTriple, EvalError> {
    if forecast.len() != actual.len() {
        return Err(EvalError::LengthMismatch {
            left: forecast.len(),
            right: actual.len(),
        });
    }
    if forecast.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n = forecast.len() as f64;
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    for (f, a) in forecast.iter().zip(actual) {
        let e = f - a;
        abs_sum += e.abs();
        sq_sum += e * e;
    }
    let mae = abs_sum / n;
    let mse = sq_sum / n;
    Ok(MetricTriple {
        mae,
        mse,
        rmse: mse.sqrt(),
    })
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
    fn eighty_twenty_split_of_28() {
        let series = series_of(&vec![1.0; 28]);
        let split = train_test_split(&series, 0.8).unwrap();
        assert_eq!(split.train.len(), 22);
        assert_eq!(split.test.len(), 6);
    }

    #[test]
    fn eighty_twenty_split_of_10() {
        let series = series_of(&vec![1.0; 10]);
        let split = train_test_split(&series, 0.8).unwrap();
        assert_eq!(split.train.len(), 8);
        assert_eq!(split.test.len(), 2);
    }

    #[test]
    fn single_observation_is_too_short() {
        let series = series_of(&[1.0]);
        assert_eq!(
            train_test_split(&series, 0.8).unwrap_err(),
            EvalError::TooShort { len: 1 }
        );
    }

    #[test]
    fn split_reassembles_to_the_original() {
        let values: Vec<f64> = (0..17).map(|i| i as f64 * 1.5).collect();
        let series = series_of(&values);
        let split = train_test_split(&series, 0.8).unwrap();
        let mut rebuilt = split.train.observations().to_vec();
        rebuilt.extend_from_slice(split.test.observations());
        assert_eq!(rebuilt, series.observations());
    }

    #[test]
    fn metric_values_by_hand() {
        // errors (1, -1)
        let triple = metrics(&[2.0, 1.0], &[1.0, 2.0]).unwrap();
        assert_eq!((triple.mae, triple.mse, triple.rmse), (1.0, 1.0, 1.0));
        // errors (3, 4)
        let triple = metrics(&[3.0, 4.0], &[0.0, 0.0]).unwrap();
        assert_eq!(triple.mae, 3.5);
        assert_eq!(triple.mse, 12.5);
        assert!((triple.rmse - 12.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn perfect_forecast_is_zero_everywhere() {
        let triple = metrics(&[5.0, 6.0], &[5.0, 6.0]).unwrap();
        assert_eq!((triple.mae, triple.mse, triple.rmse), (0.0, 0.0, 0.0));
    }

    #[test]
    fn metric_errors() {
        assert_eq!(
            metrics(&[1.0], &[1.0, 2.0]).unwrap_err(),
            EvalError::LengthMismatch { left: 1, right: 2 }
        );
        assert_eq!(metrics(&[], &[]).unwrap_err(), EvalError::EmptyInput);
    }

    proptest! {
        #[test]
        fn rmse_is_root_mse_and_dominates_mae(
            pair in (1usize..32).prop_flat_map(|n| (
                proptest::collection::vec(-1e3f64..1e3, n),
                proptest::collection::vec(-1e3f64..1e3, n),
            )),
        ) {
            let (forecast, actual) = pair;
            let t = metrics(&forecast, &actual).unwrap();
            prop_assert!((t.rmse - t.mse.sqrt()).abs() < 1e-12);
            prop_assert!(t.rmse >= t.mae - 1e-12);
        }

        // Exact on integer-valued inputs, where every shift is computed
        // without rounding.
        #[test]
        fn metrics_are_translation_invariant(
            pair in (1usize..16).prop_flat_map(|n| (
                proptest::collection::vec(-1000i32..1000, n),
                proptest::collection::vec(-1000i32..1000, n),
            )),
            c in -100_000i32..100_000,
        ) {
            let (forecast, actual) = pair;
            let f: Vec<f64> = forecast.iter().map(|&v| f64::from(v)).collect();
            let a: Vec<f64> = actual.iter().map(|&v| f64::from(v)).collect();
            let f2: Vec<f64> = f.iter().map(|v| v + f64::from(c)).collect();
            let a2: Vec<f64> = a.iter().map(|v| v + f64::from(c)).collect();
            let base = metrics(&f, &a).unwrap();
            let moved = metrics(&f2, &a2).unwrap();
            prop_assert_eq!(base, moved);
        }
    }
}
