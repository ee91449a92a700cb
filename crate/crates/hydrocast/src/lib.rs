//! Benchmark harness for sparse, misaligned, quarterly water-consumption
//! time series.
//!
//! The crate covers the full pipeline:
//!
//! - [`series`]: validated quarterly series, month patterns, aligned groups.
//! - [`dataset`]: CSV ingestion and region/month-pattern grouping.
//! - [`synth`]: seeded synthetic datasets reproducing the structural
//!   challenges of real metering data (aggregated meters, misaligned
//!   timestamps, four observations per year).
//! - [`cluster`]: dual-threshold density clustering (euclidean radius plus
//!   cosine-similarity floor) applied per aligned group.
//! - [`baseline`] and [`sarima`]: the seasonal-mean baseline and a
//!   from-scratch seasonal ARIMA with CSS fitting and AIC order selection.
//! - [`neural`]: LSTM and GRU forecasters trained by full-batch
//!   backpropagation through time, per series or per cluster.
//! - [`eval`]: chronological train/test split, MAE/MSE/RMSE, kernel density
//!   estimation of metric distributions, and the cross-method benchmark
//!   driver.
//!
//! Every stage is a pure function of its inputs and a seed, so whole
//! benchmark runs are reproducible byte for byte.

pub mod baseline;
pub mod cluster;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod neural;
pub mod optim;
pub mod sarima;
pub mod series;
pub mod synth;

pub use error::{ClusterError, DataError, EvalError, ForecastError, SeriesError};
pub use series::{AlignedGroup, MonthPattern, RegionId, SeasonPeriod, Series, SeriesId, Timestamp};

// The book's code blocks double as doc-tests so the guide can never drift
// from the API. `cargo test --doc` compiles and runs every `rust` fence.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            pub struct $name;
        };
    }

    chapter!(DataModel, "../../../book/src/data-model.md");
    chapter!(SyntheticData, "../../../book/src/synthetic-data.md");
    chapter!(Clustering, "../../../book/src/clustering.md");
    chapter!(ClassicalForecasters, "../../../book/src/classical-forecasters.md");
    chapter!(NeuralForecasters, "../../../book/src/neural-forecasters.md");
    chapter!(Evaluation, "../../../book/src/evaluation.md");
}
