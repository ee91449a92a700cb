//! Domain types for quarterly consumption series.
//!
//! A [`Series`] is an ordered run of `(Timestamp, value)` observations,
//! exactly one quarter apart, with finite non-negative values in cubic
//! meters. Construction goes through [`Series::validate`], so every
//! `Series` in the system already satisfies the invariants.
//!
//! Timestamps are month-resolved: quarterly meter reads are only ever
//! distinguished by calendar month, never by day.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::SeriesError;

/// Calendar month of one meter read. Ordered by `(year, month)`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct Timestamp {
    year: i32,
    month: u8,
}

impl Timestamp {
    /// Returns `None` unless `month` is in `1..=12`.
    pub fn new(year: i32, month: u8) -> Option<Self> {
        (1..=12).contains(&month).then_some(Self { year, month })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u8 {
        self.month
    }

    /// The timestamp three months later.
    pub fn next_quarter(self) -> Self {
        let m = i32::from(self.month) + 3;
        if m > 12 {
            Self {
                year: self.year + 1,
                month: (m - 12) as u8,
            }
        } else {
            Self {
                year: self.year,
                month: m as u8,
            }
        }
    }

    fn month_index(self) -> i64 {
        i64::from(self.year) * 12 + i64::from(self.month) - 1
    }

    /// Signed number of months from `self` to `other`.
    pub fn months_until(self, other: Timestamp) -> i64 {
        other.month_index() - self.month_index()
    }

    /// Signed number of whole quarters from `self` to `other`, if the gap
    /// is a multiple of three months.
    pub fn quarters_until(self, other: Timestamp) -> Option<i64> {
        let months = self.months_until(other);
        (months % 3 == 0).then_some(months / 3)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

/// Opaque series identifier.
#[derive(
    Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct SeriesId(String);

impl SeriesId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SeriesId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SeriesId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

/// Opaque region identifier (the city a meter belongs to).
#[derive(
    Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct RegionId(String);

impl RegionId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for RegionId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

/// Observations per seasonal cycle; 4 for quarterly data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeasonPeriod(usize);

impl SeasonPeriod {
    pub const QUARTERLY: SeasonPeriod = SeasonPeriod(4);

    /// Returns `None` if `s` is zero.
    pub fn new(s: usize) -> Option<Self> {
        (s >= 1).then_some(Self(s))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl Default for SeasonPeriod {
    fn default() -> Self {
        Self::QUARTERLY
    }
}

/// The sorted set of calendar months a quarterly series is sampled in.
///
/// Two series with equal patterns are time-aligned: over any overlapping
/// span their timestamps coincide exactly. This is the alignment key used
/// when grouping series before clustering.
#[derive(
    Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct MonthPattern {
    months: Vec<u8>,
}

impl MonthPattern {
    pub fn months(&self) -> &[u8] {
        &self.months
    }
}

impl fmt::Display for MonthPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.months.iter().map(|m| m.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// One validated consumption series.
///
/// Invariants (checked by [`Series::validate`]):
/// - at least one observation;
/// - timestamps strictly increasing, consecutive reads exactly one quarter
///   apart;
/// - values finite and non-negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    id: SeriesId,
    region_id: RegionId,
    observations: Vec<(Timestamp, f64)>,
}

impl Series {
    /// Validate raw observations into a `Series`.
    ///
    /// Observations are sorted by timestamp first, so callers may pass them
    /// in any order. Validating an already-valid series returns an equal
    /// series.
    ///
    /// # Errors
    /// `EmptySeries`, `DuplicateTimestamp`, `NonQuarterlyGap`,
    /// `NegativeValue` or `NonFiniteValue`.
    pub fn validate(
        id: SeriesId,
        region_id: RegionId,
        mut observations: Vec<(Timestamp, f64)>,
    ) -> Result<Self, SeriesError> {
        if observations.is_empty() {
            return Err(SeriesError::EmptySeries);
        }
        observations.sort_by_key(|(ts, _)| *ts);
        for window in observations.windows(2) {
            let (prev, next) = (window[0].0, window[1].0);
            match prev.months_until(next) {
                0 => {
                    return Err(SeriesError::DuplicateTimestamp {
                        id: id.to_string(),
                        at: prev,
                    })
                }
                3 => {}
                _ => {
                    return Err(SeriesError::NonQuarterlyGap {
                        id: id.to_string(),
                        prev,
                        next,
                    })
                }
            }
        }
        for &(ts, value) in &observations {
            if !value.is_finite() {
                return Err(SeriesError::NonFiniteValue {
                    id: id.to_string(),
                    at: ts,
                });
            }
            if value < 0.0 {
                return Err(SeriesError::NegativeValue {
                    id: id.to_string(),
                    at: ts,
                    value,
                });
            }
        }
        Ok(Self {
            id,
            region_id,
            observations,
        })
    }

    pub fn id(&self) -> &SeriesId {
        &self.id
    }

    pub fn region_id(&self) -> &RegionId {
        &self.region_id
    }

    pub fn observations(&self) -> &[(Timestamp, f64)] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    /// Always false: validation rejects empty series.
    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn start(&self) -> Timestamp {
        self.observations[0].0
    }

    pub fn end(&self) -> Timestamp {
        self.observations[self.observations.len() - 1].0
    }

    /// Observation values in chronological order.
    pub fn values(&self) -> Vec<f64> {
        self.observations.iter().map(|&(_, v)| v).collect()
    }

    /// Index of the observation at `ts`, if the series covers it.
    pub fn index_of(&self, ts: Timestamp) -> Option<usize> {
        let q = self.start().quarters_until(ts)?;
        (0..self.len() as i64)
            .contains(&q)
            .then_some(q as usize)
    }

    /// The sorted distinct calendar months this series is sampled in.
    pub fn month_pattern(&self) -> MonthPattern {
        let months: BTreeSet<u8> = self.observations.iter().map(|(ts, _)| ts.month()).collect();
        MonthPattern {
            months: months.into_iter().collect(),
        }
    }

    /// A contiguous sub-series over `range` (same id and region).
    ///
    /// Returns `None` when the range is empty or out of bounds. The result
    /// inherits validity from `self`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Option<Series> {
        if range.is_empty() || range.end > self.len() {
            return None;
        }
        Some(Series {
            id: self.id.clone(),
            region_id: self.region_id.clone(),
            observations: self.observations[range].to_vec(),
        })
    }
}

/// Series sharing a region and a month pattern: the unit clustering runs on.
///
/// Members are sorted by series id. Because equal month patterns imply equal
/// timestamps over any overlap, all members are pairwise time-aligned.
#[derive(Debug, Clone)]
pub struct AlignedGroup {
    region_id: RegionId,
    pattern: MonthPattern,
    members: Vec<Series>,
}

impl AlignedGroup {
    /// Build a group from members that must all share `region_id` and
    /// `pattern`. Members are sorted by id.
    pub(crate) fn new(region_id: RegionId, pattern: MonthPattern, mut members: Vec<Series>) -> Self {
        debug_assert!(members
            .iter()
            .all(|s| s.region_id() == &region_id && s.month_pattern() == pattern));
        members.sort_by(|a, b| a.id().cmp(b.id()));
        Self {
            region_id,
            pattern,
            members,
        }
    }

    pub fn region_id(&self) -> &RegionId {
        &self.region_id
    }

    pub fn pattern(&self) -> &MonthPattern {
        &self.pattern
    }

    pub fn members(&self) -> &[Series] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// The timestamp span covered by every member: `(latest start, earliest
    /// end)`. `None` when some pair of members does not overlap.
    pub fn common_span(&self) -> Option<(Timestamp, Timestamp)> {
        let start = self.members.iter().map(|s| s.start()).max()?;
        let end = self.members.iter().map(|s| s.end()).min()?;
        (start <= end).then_some((start, end))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(year: i32, month: u8) -> Timestamp {
        Timestamp::new(year, month).unwrap()
    }

    fn quarterly(id: &str, start: Timestamp, values: &[f64]) -> Series {
        let mut obs = Vec::new();
        let mut t = start;
        for &v in values {
            obs.push((t, v));
            t = t.next_quarter();
        }
        Series::validate(SeriesId::from(id), RegionId::from("R"), obs).unwrap()
    }

    #[test]
    fn timestamp_rejects_bad_month() {
        assert!(Timestamp::new(2013, 0).is_none());
        assert!(Timestamp::new(2013, 13).is_none());
        assert!(Timestamp::new(2013, 12).is_some());
    }

    #[test]
    fn timestamp_order_is_year_then_month() {
        assert!(ts(2013, 12) < ts(2014, 1));
        assert!(ts(2013, 4) > ts(2013, 1));
    }

    #[test]
    fn next_quarter_wraps_year() {
        assert_eq!(ts(2013, 10).next_quarter(), ts(2014, 1));
        assert_eq!(ts(2013, 11).next_quarter(), ts(2014, 2));
        assert_eq!(ts(2013, 1).next_quarter(), ts(2013, 4));
    }

    #[test]
    fn validate_accepts_quarterly_pair() {
        let s = Series::validate(
            SeriesId::from("a"),
            RegionId::from("R"),
            vec![(ts(2013, 1), 30.0), (ts(2013, 4), 25.0)],
        )
        .unwrap();
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn validate_rejects_two_month_gap() {
        let err = Series::validate(
            SeriesId::from("a"),
            RegionId::from("R"),
            vec![(ts(2013, 1), 30.0), (ts(2013, 3), 25.0)],
        )
        .unwrap_err();
        assert!(matches!(err, SeriesError::NonQuarterlyGap { .. }));
    }

    #[test]
    fn validate_rejects_negative_value() {
        let err = Series::validate(
            SeriesId::from("a"),
            RegionId::from("R"),
            vec![(ts(2013, 1), -5.0)],
        )
        .unwrap_err();
        assert!(matches!(err, SeriesError::NegativeValue { .. }));
    }

    #[test]
    fn validate_rejects_empty() {
        let err = Series::validate(SeriesId::from("a"), RegionId::from("R"), vec![]).unwrap_err();
        assert_eq!(err, SeriesError::EmptySeries);
    }

    #[test]
    fn validate_rejects_duplicate_timestamp() {
        let err = Series::validate(
            SeriesId::from("a"),
            RegionId::from("R"),
            vec![(ts(2013, 1), 1.0), (ts(2013, 1), 2.0)],
        )
        .unwrap_err();
        assert!(matches!(err, SeriesError::DuplicateTimestamp { .. }));
    }

    #[test]
    fn validate_rejects_non_finite() {
        let err = Series::validate(
            SeriesId::from("a"),
            RegionId::from("R"),
            vec![(ts(2013, 1), f64::NAN)],
        )
        .unwrap_err();
        assert!(matches!(err, SeriesError::NonFiniteValue { .. }));
    }

    #[test]
    fn validate_sorts_observations() {
        let s = Series::validate(
            SeriesId::from("a"),
            RegionId::from("R"),
            vec![(ts(2013, 4), 25.0), (ts(2013, 1), 30.0)],
        )
        .unwrap();
        assert_eq!(s.start(), ts(2013, 1));
        assert_eq!(s.values(), vec![30.0, 25.0]);
    }

    #[test]
    fn validate_is_idempotent() {
        let s = quarterly("a", ts(2013, 1), &[1.0, 2.0, 3.0, 4.0]);
        let again = Series::validate(
            s.id().clone(),
            s.region_id().clone(),
            s.observations().to_vec(),
        )
        .unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn month_pattern_of_january_start() {
        let s = quarterly("a", ts(2013, 1), &[1.0; 8]);
        assert_eq!(s.month_pattern().months(), &[1, 4, 7, 10]);
    }

    #[test]
    fn month_pattern_of_march_start() {
        let s = quarterly("a", ts(2013, 3), &[1.0; 4]);
        assert_eq!(s.month_pattern().months(), &[3, 6, 9, 12]);
    }

    #[test]
    fn month_pattern_of_single_observation() {
        let s = quarterly("a", ts(2013, 2), &[1.0]);
        assert_eq!(s.month_pattern().months(), &[2]);
    }

    #[test]
    fn month_pattern_invariant_under_cycle_truncation() {
        let s = quarterly("a", ts(2013, 1), &[1.0; 12]);
        let head = s.slice(4..12).unwrap();
        let tail = s.slice(0..8).unwrap();
        assert_eq!(s.month_pattern(), head.month_pattern());
        assert_eq!(s.month_pattern(), tail.month_pattern());
    }

    #[test]
    fn index_of_finds_quarter_offsets() {
        let s = quarterly("a", ts(2013, 1), &[1.0; 8]);
        assert_eq!(s.index_of(ts(2013, 1)), Some(0));
        assert_eq!(s.index_of(ts(2014, 4)), Some(5));
        assert_eq!(s.index_of(ts(2013, 2)), None);
        assert_eq!(s.index_of(ts(2015, 1)), None);
    }

    #[test]
    fn common_span_is_overlap() {
        let a = quarterly("a", ts(2013, 1), &[1.0; 8]);
        let b = quarterly("b", ts(2014, 1), &[1.0; 8]);
        let group = AlignedGroup::new(
            RegionId::from("R"),
            a.month_pattern(),
            vec![b.clone(), a.clone()],
        );
        assert_eq!(group.common_span(), Some((ts(2014, 1), ts(2014, 10))));
        // members are sorted by id regardless of input order
        assert_eq!(group.members()[0].id().as_str(), "a");
    }

    #[test]
    fn aligned_members_share_timestamps_over_overlap() {
        let a = quarterly("a", ts(2013, 1), &[1.0; 10]);
        let b = quarterly("b", ts(2014, 1), &[1.0; 10]);
        let (start, end) = AlignedGroup::new(
            RegionId::from("R"),
            a.month_pattern(),
            vec![a.clone(), b.clone()],
        )
        .common_span()
        .unwrap();
        let ia = a.index_of(start).unwrap();
        let ib = b.index_of(start).unwrap();
        let len = start.quarters_until(end).unwrap() as usize + 1;
        for k in 0..len {
            assert_eq!(a.observations()[ia + k].0, b.observations()[ib + k].0);
        }
    }
}
