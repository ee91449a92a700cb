//! Dataset loading, writing and aligned-group formation.
//!
//! The on-disk format is a UTF-8 CSV with a required header:
//!
//! ```text
//! series_id,region_id,year,month,consumption_m3
//! ```
//!
//! one row per observation. Synthetic datasets are written in the same
//! schema, so every downstream command is format-agnostic.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use crate::error::DataError;
use crate::series::{AlignedGroup, MonthPattern, RegionId, Series, SeriesId, Timestamp};

pub const CSV_HEADER: [&str; 5] = ["series_id", "region_id", "year", "month", "consumption_m3"];

/// Where a dataset came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Loaded,
    Synthetic { seed: u64 },
}

/// A collection of validated series with unique ids.
#[derive(Debug, Clone)]
pub struct Dataset {
    series: Vec<Series>,
    provenance: Provenance,
}

impl Dataset {
    /// Build a dataset, rejecting duplicate series ids.
    pub fn new(mut series: Vec<Series>, provenance: Provenance) -> Result<Self, DataError> {
        series.sort_by(|a, b| a.id().cmp(b.id()));
        for pair in series.windows(2) {
            if pair[0].id() == pair[1].id() {
                return Err(DataError::MalformedRow {
                    line: 0,
                    reason: format!("duplicate series id {}", pair[0].id()),
                });
            }
        }
        Ok(Self { series, provenance })
    }

    pub fn series(&self) -> &[Series] {
        &self.series
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn get(&self, id: &SeriesId) -> Option<&Series> {
        self.series
            .binary_search_by(|s| s.id().cmp(id))
            .ok()
            .map(|i| &self.series[i])
    }
}

/// Parse a dataset from the CSV schema above.
///
/// # Errors
/// `Io` when the file cannot be read, `MalformedRow` for arity/number/header
/// problems, `DuplicateObservation` when one series repeats a timestamp, and
/// `Validation` for series-level invariant violations.
pub fn parse_dataset(path: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let file = std::fs::File::open(path)?;
    parse_dataset_reader(file)
}

/// Same as [`parse_dataset`], from any reader.
pub fn parse_dataset_reader(reader: impl io::Read) -> Result<Dataset, DataError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);

    let headers = csv_reader
        .headers()
        .map_err(|e| malformed(1, format!("cannot read header: {e}")))?;
    if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(malformed(
            1,
            format!("expected header {}", CSV_HEADER.join(",")),
        ));
    }

    // series id -> (region, observations); BTreeMap keeps output order
    // independent of row order.
    let mut pending: BTreeMap<SeriesId, (RegionId, Vec<(Timestamp, f64)>)> = BTreeMap::new();

    for record in csv_reader.records() {
        let record = record.map_err(|e| malformed(0, format!("bad record: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != CSV_HEADER.len() {
            return Err(malformed(
                line,
                format!("expected {} fields, got {}", CSV_HEADER.len(), record.len()),
            ));
        }
        let series_id = SeriesId::new(record[0].to_owned());
        let region_id = RegionId::new(record[1].to_owned());
        let year: i32 = record[2]
            .trim()
            .parse()
            .map_err(|_| malformed(line, format!("bad year {:?}", &record[2])))?;
        let month: u8 = record[3]
            .trim()
            .parse()
            .map_err(|_| malformed(line, format!("bad month {:?}", &record[3])))?;
        let ts = Timestamp::new(year, month)
            .ok_or_else(|| malformed(line, format!("month {month} out of range 1..=12")))?;
        let value: f64 = record[4]
            .trim()
            .parse()
            .map_err(|_| malformed(line, format!("bad consumption {:?}", &record[4])))?;

        let entry = pending
            .entry(series_id.clone())
            .or_insert_with(|| (region_id.clone(), Vec::new()));
        if entry.0 != region_id {
            return Err(malformed(
                line,
                format!(
                    "series {series_id} has conflicting regions {} and {region_id}",
                    entry.0
                ),
            ));
        }
        if entry.1.iter().any(|&(existing, _)| existing == ts) {
            return Err(DataError::DuplicateObservation {
                series_id: series_id.to_string(),
                at: ts,
            });
        }
        entry.1.push((ts, value));
    }

    let mut series = Vec::with_capacity(pending.len());
    for (id, (region, observations)) in pending {
        series.push(Series::validate(id, region, observations)?);
    }
    Dataset::new(series, Provenance::Loaded)
}

fn malformed(line: u64, reason: String) -> DataError {
    DataError::MalformedRow { line, reason }
}

/// Write a dataset in the CSV schema, rows sorted by `(series_id, time)`.
pub fn write_dataset(dataset: &Dataset, writer: impl io::Write) -> Result<(), DataError> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(CSV_HEADER)?;
    for series in dataset.series() {
        for &(ts, value) in series.observations() {
            out.write_record(&[
                series.id().to_string(),
                series.region_id().to_string(),
                ts.year().to_string(),
                ts.month().to_string(),
                value.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

impl From<csv::Error> for DataError {
    fn from(e: csv::Error) -> Self {
        DataError::MalformedRow {
            line: 0,
            reason: e.to_string(),
        }
    }
}

/// Partition a dataset into aligned groups keyed by `(region, month
/// pattern)`.
///
/// Every series lands in exactly one group; singleton groups are retained
/// (they become noise downstream). Groups come out sorted by key, members
/// sorted by series id.
pub fn align_groups(dataset: &Dataset) -> Vec<AlignedGroup> {
    let mut groups: BTreeMap<(RegionId, MonthPattern), Vec<Series>> = BTreeMap::new();
    for series in dataset.series() {
        let key = (series.region_id().clone(), series.month_pattern());
        groups.entry(key).or_default().push(series.clone());
    }
    groups
        .into_iter()
        .map(|((region, pattern), members)| AlignedGroup::new(region, pattern, members))
        .collect()
}
