//! Dual-threshold density clustering of aligned series.
//!
//! Two series are neighbors only when BOTH proximity predicates hold over
//! the clustering window: euclidean distance at most `eps` (in m³) and
//! cosine similarity at least `cos_threshold`. Clustering is otherwise
//! classical DBSCAN: points with at least `min_pts` neighbors (counting
//! themselves) are core points, clusters grow transitively through core
//! points, non-core points adjacent to a cluster become border points, the
//! rest is noise.
//!
//! The clustering window is the group's common timestamp span truncated to
//! every member's training prefix, so cluster assignment never sees
//! test-period values. Distances are computed on raw m³ values because the
//! `eps` presets are absolute cubic meters.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ClusterError;
use crate::series::{AlignedGroup, SeriesId, Timestamp};

/// Chronological fraction of each series used for training; the rest is the
/// held-out test suffix. Clustering windows use the same split.
pub const TRAIN_RATIO: f64 = 0.8;

/// Thresholds for the dual proximity predicate plus the density minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    /// Least number of series (self included) required to form a cluster.
    pub min_pts: usize,
    /// Euclidean radius in cubic meters.
    pub eps: f64,
    /// Cosine-similarity floor in `[-1, 1]`.
    pub cos_threshold: f64,
}

impl ClusterParams {
    /// Returns `None` when `min_pts`, `eps` or `cos_threshold` is out of
    /// range.
    pub fn new(min_pts: usize, eps: f64, cos_threshold: f64) -> Option<Self> {
        (min_pts >= 1 && eps >= 0.0 && (-1.0..=1.0).contains(&cos_threshold)).then_some(Self {
            min_pts,
            eps,
            cos_threshold,
        })
    }
}

/// The four named parameter presets, ordered from most relaxed to most
/// strict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    D1,
    D2,
    D3,
    D4,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::D1, Preset::D2, Preset::D3, Preset::D4];

    pub fn params(self) -> ClusterParams {
        let (eps, cos_threshold) = match self {
            Preset::D1 => (10.0, 0.80),
            Preset::D2 => (10.0, 0.85),
            Preset::D3 => (10.0, 0.90),
            Preset::D4 => (5.0, 0.90),
        };
        ClusterParams {
            min_pts: 10,
            eps,
            cos_threshold,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::D1 => "D1",
            Preset::D2 => "D2",
            Preset::D3 => "D3",
            Preset::D4 => "D4",
        }
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "D1" => Ok(Preset::D1),
            "D2" => Ok(Preset::D2),
            "D3" => Ok(Preset::D3),
            "D4" => Ok(Preset::D4),
            other => Err(format!("unknown preset {other:?}, expected D1..D4")),
        }
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Cluster membership of one series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClusterLabel {
    Cluster(usize),
    Noise,
}

impl ClusterLabel {
    pub fn is_noise(self) -> bool {
        matches!(self, ClusterLabel::Noise)
    }

    pub fn cluster_id(self) -> Option<usize> {
        match self {
            ClusterLabel::Cluster(id) => Some(id),
            ClusterLabel::Noise => None,
        }
    }
}

/// A labeling of series into clusters and noise.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    labels: BTreeMap<SeriesId, ClusterLabel>,
    n_clusters: usize,
}

impl Clustering {
    pub fn labels(&self) -> &BTreeMap<SeriesId, ClusterLabel> {
        &self.labels
    }

    pub fn label(&self, id: &SeriesId) -> Option<ClusterLabel> {
        self.labels.get(id).copied()
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn noise_count(&self) -> usize {
        self.labels.values().filter(|l| l.is_noise()).count()
    }

    /// `|noise| / total`; 0 over an empty labeling.
    pub fn noise_fraction(&self) -> f64 {
        if self.labels.is_empty() {
            0.0
        } else {
            self.noise_count() as f64 / self.labels.len() as f64
        }
    }

    /// Members of each cluster, keyed by cluster id.
    pub fn members_by_cluster(&self) -> BTreeMap<usize, Vec<SeriesId>> {
        let mut map: BTreeMap<usize, Vec<SeriesId>> = BTreeMap::new();
        for (id, label) in &self.labels {
            if let ClusterLabel::Cluster(c) = label {
                map.entry(*c).or_default().push(id.clone());
            }
        }
        map
    }
}

/// Cosine similarity `(u·v)/(‖u‖‖v‖)`, clamped to `[-1, 1]`.
///
/// # Errors
/// `LengthMismatch` when the vectors differ in length, `ZeroVector` when
/// either vector is all zeros.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64, ClusterError> {
    if u.len() != v.len() {
        return Err(ClusterError::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let norm_sq_u: f64 = u.iter().map(|a| a * a).sum();
    let norm_sq_v: f64 = v.iter().map(|b| b * b).sum();
    if norm_sq_u == 0.0 || norm_sq_v == 0.0 {
        return Err(ClusterError::ZeroVector);
    }
    // one square root over the product keeps the symmetric cases exact
    Ok((dot / (norm_sq_u * norm_sq_v).sqrt()).clamp(-1.0, 1.0))
}

/// Euclidean distance `√Σ(uᵢ−vᵢ)²`.
///
/// # Errors
/// `LengthMismatch` when the vectors differ in length.
pub fn euclidean_distance(u: &[f64], v: &[f64]) -> Result<f64, ClusterError> {
    if u.len() != v.len() {
        return Err(ClusterError::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    Ok(u.iter()
        .zip(v)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Per-member clustering vectors: each member's values over the group's
/// common span, cut off at the earliest training-prefix end among members.
///
/// Returns one (possibly empty) vector per member, in member order.
pub fn clustering_vectors(group: &AlignedGroup, train_ratio: f64) -> Vec<Vec<f64>> {
    let empty = vec![Vec::new(); group.len()];
    let Some((start, end)) = group.common_span() else {
        return empty;
    };
    // earliest end of any member's training prefix
    let mut train_end: Option<Timestamp> = None;
    for s in group.members() {
        let train_len = ((s.len() as f64) * train_ratio).floor() as usize;
        if train_len == 0 {
            return empty;
        }
        let t = s.observations()[train_len - 1].0;
        train_end = Some(train_end.map_or(t, |cur: Timestamp| cur.min(t)));
    }
    let end = end.min(train_end.expect("group is non-empty"));
    let Some(len) = start.quarters_until(end).map(|q| q + 1).filter(|&q| q > 0) else {
        return empty;
    };
    let len = len as usize;
    group
        .members()
        .iter()
        .map(|s| {
            let base = s.index_of(start).expect("common span is covered");
            s.observations()[base..base + len]
                .iter()
                .map(|&(_, v)| v)
                .collect()
        })
        .collect()
}

/// Neighborhood of `vectors[idx]` under the dual predicate, self included.
///
/// # Errors
/// Propagates measure failures (`LengthMismatch`, `ZeroVector`).
pub fn neighbors(
    vectors: &[Vec<f64>],
    idx: usize,
    params: &ClusterParams,
) -> Result<BTreeSet<usize>, ClusterError> {
    let mut out = BTreeSet::new();
    for j in 0..vectors.len() {
        if j == idx {
            out.insert(j);
            continue;
        }
        let dist = euclidean_distance(&vectors[idx], &vectors[j])?;
        let cos = cosine_similarity(&vectors[idx], &vectors[j])?;
        if dist <= params.eps && cos >= params.cos_threshold {
            out.insert(j);
        }
    }
    Ok(out)
}

/// Total version of the dual predicate used inside expansion: a point is
/// always its own neighbor, and pairs with an undefined cosine (all-zero
/// vector) are simply not neighbors.
fn neighbors_total(vectors: &[Vec<f64>], idx: usize, params: &ClusterParams) -> Vec<usize> {
    (0..vectors.len())
        .filter(|&j| {
            if j == idx {
                return true;
            }
            let Ok(dist) = euclidean_distance(&vectors[idx], &vectors[j]) else {
                return false;
            };
            let Ok(cos) = cosine_similarity(&vectors[idx], &vectors[j]) else {
                return false;
            };
            dist <= params.eps && cos >= params.cos_threshold
        })
        .collect()
}

/// Cluster one aligned group.
///
/// Scan order is the group's member order (members are sorted by series
/// id), so the labeling is a deterministic function of the member set.
/// Border points reachable from several clusters keep the smallest cluster
/// id, which is the first one to claim them. Groups smaller than `min_pts`
/// are labeled entirely noise without running expansion.
pub fn dbscan(group: &AlignedGroup, params: &ClusterParams) -> Clustering {
    let vectors = clustering_vectors(group, TRAIN_RATIO);
    let ids: Vec<SeriesId> = group.members().iter().map(|s| s.id().clone()).collect();
    dbscan_on_vectors(&ids, &vectors, params)
}

fn dbscan_on_vectors(ids: &[SeriesId], vectors: &[Vec<f64>], params: &ClusterParams) -> Clustering {
    let n = ids.len();
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut next_cluster = 0;

    let window_empty = vectors.iter().all(|v| v.is_empty());
    if n >= params.min_pts && !window_empty {
        let mut visited = vec![false; n];
        for i in 0..n {
            if visited[i] {
                continue;
            }
            visited[i] = true;
            let seed_neighbors = neighbors_total(vectors, i, params);
            if seed_neighbors.len() < params.min_pts {
                continue; // noise for now; may become a border point later
            }
            let cluster = next_cluster;
            next_cluster += 1;
            labels[i] = Some(cluster);
            let mut queue: VecDeque<usize> = seed_neighbors.into();
            while let Some(j) = queue.pop_front() {
                if labels[j].is_none() {
                    labels[j] = Some(cluster);
                }
                if !visited[j] {
                    visited[j] = true;
                    let reach = neighbors_total(vectors, j, params);
                    if reach.len() >= params.min_pts {
                        queue.extend(reach);
                    }
                }
            }
        }
    }

    let labels = ids
        .iter()
        .cloned()
        .zip(labels.into_iter().map(|l| match l {
            Some(c) => ClusterLabel::Cluster(c),
            None => ClusterLabel::Noise,
        }))
        .collect();
    Clustering {
        labels,
        n_clusters: next_cluster,
    }
}

/// Table-1-shaped totals for one clustering run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterSummary {
    pub n_series: usize,
    pub n_series_clustered: usize,
    pub n_clusters: usize,
    pub noise_fraction: f64,
}

/// Cluster every aligned group and merge the results under globally unique
/// cluster ids.
///
/// Per-group runs are independent; ids are offset in group order so the
/// merged labeling is deterministic.
pub fn cluster_dataset(groups: &[AlignedGroup], params: &ClusterParams) -> (Clustering, ClusterSummary) {
    use rayon::prelude::*;

    let per_group: Vec<Clustering> = groups.par_iter().map(|g| dbscan(g, params)).collect();

    let mut labels = BTreeMap::new();
    let mut offset = 0;
    for clustering in &per_group {
        for (id, label) in clustering.labels() {
            let shifted = match label {
                ClusterLabel::Cluster(c) => ClusterLabel::Cluster(c + offset),
                ClusterLabel::Noise => ClusterLabel::Noise,
            };
            labels.insert(id.clone(), shifted);
        }
        offset += clustering.n_clusters();
    }
    let merged = Clustering {
        labels,
        n_clusters: offset,
    };
    let summary = ClusterSummary {
        n_series: merged.len(),
        n_series_clustered: merged.len() - merged.noise_count(),
        n_clusters: merged.n_clusters(),
        noise_fraction: merged.noise_fraction(),
    };
    (merged, summary)
}

/// One row of the clustering summary CSV.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub preset: String,
    pub params: ClusterParams,
    pub summary: ClusterSummary,
}

/// Write summary rows as
/// `preset,min_pts,eps,cos_threshold,n_series_clustered,n_clusters,noise_pct`.
pub fn write_summary_csv(rows: &[SummaryRow], writer: impl io::Write) -> io::Result<()> {
    let mut out = io::BufWriter::new(writer);
    use io::Write;
    writeln!(
        out,
        "preset,min_pts,eps,cos_threshold,n_series_clustered,n_clusters,noise_pct"
    )?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{:.2}",
            row.preset,
            row.params.min_pts,
            row.params.eps,
            row.params.cos_threshold,
            row.summary.n_series_clustered,
            row.summary.n_clusters,
            row.summary.noise_fraction * 100.0
        )?;
    }
    out.flush()
}

/// Write per-series labels as `series_id,cluster_id`, `-1` for noise.
pub fn write_labels_csv(clustering: &Clustering, writer: impl io::Write) -> io::Result<()> {
    let mut out = io::BufWriter::new(writer);
    use io::Write;
    writeln!(out, "series_id,cluster_id")?;
    for (id, label) in clustering.labels() {
        match label {
            ClusterLabel::Cluster(c) => writeln!(out, "{id},{c}")?,
            ClusterLabel::Noise => writeln!(out, "{id},-1")?,
        }
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{RegionId, Series, Timestamp};
    use proptest::prelude::*;

    fn ts(year: i32, month: u8) -> Timestamp {
        Timestamp::new(year, month).unwrap()
    }

    fn quarterly(id: &str, values: &[f64]) -> Series {
        let mut obs = Vec::new();
        let mut t = ts(2013, 1);
        for &v in values {
            obs.push((t, v));
            t = t.next_quarter();
        }
        Series::validate(SeriesId::from(id), RegionId::from("R"), obs).unwrap()
    }

    fn group_of(values: Vec<Vec<f64>>) -> AlignedGroup {
        let members: Vec<Series> = values
            .iter()
            .enumerate()
            .map(|(i, v)| quarterly(&format!("s{i:03}"), v))
            .collect();
        AlignedGroup::new(RegionId::from("R"), members[0].month_pattern(), members)
    }

    #[test]
    fn cosine_of_equal_vectors_is_one() {
        let v = [1.0, 2.0, 3.0];
        assert_eq!(cosine_similarity(&v, &v).unwrap(), 1.0);
    }

    #[test]
    fn cosine_of_opposed_vectors_is_minus_one() {
        assert_eq!(
            cosine_similarity(&[1.0, 1.0], &[-1.0, -1.0]).unwrap(),
            -1.0
        );
    }

    #[test]
    fn cosine_of_orthogonal_vectors_is_zero() {
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn cosine_hand_value() {
        // (3,4)·(4,3) / (5·5) = 24/25
        let cos = cosine_similarity(&[3.0, 4.0], &[4.0, 3.0]).unwrap();
        assert!((cos - 0.96).abs() < 1e-15);
    }

    #[test]
    fn cosine_errors() {
        assert_eq!(
            cosine_similarity(&[1.0], &[1.0, 2.0]).unwrap_err(),
            ClusterError::LengthMismatch { left: 1, right: 2 }
        );
        assert_eq!(
            cosine_similarity(&[0.0, 0.0], &[1.0, 2.0]).unwrap_err(),
            ClusterError::ZeroVector
        );
    }

    #[test]
    fn euclidean_values() {
        assert_eq!(euclidean_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(
            euclidean_distance(&[0.0, 0.0, 0.0], &[3.0, 4.0, 0.0]).unwrap(),
            5.0
        );
        assert_eq!(euclidean_distance(&[1.0, 1.0], &[4.0, 5.0]).unwrap(), 5.0);
        assert!(euclidean_distance(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn neighbors_vacuous_thresholds_grab_everyone() {
        let vectors = vec![vec![1.0, 2.0], vec![100.0, 1.0], vec![3.0, 50.0]];
        let params = ClusterParams::new(1, f64::INFINITY, -1.0).unwrap();
        let n = neighbors(&vectors, 0, &params).unwrap();
        assert_eq!(n.len(), 3);
    }

    #[test]
    fn neighbors_zero_eps_is_self_only() {
        let vectors = vec![vec![1.0, 2.0], vec![1.5, 2.0], vec![1.0, 2.5]];
        let params = ClusterParams::new(1, 0.0, -1.0).unwrap();
        let n = neighbors(&vectors, 0, &params).unwrap();
        assert_eq!(n.into_iter().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn neighbors_requires_both_predicates() {
        // distance 3, cosine ~0.95 vs thresholds (eps 10, cos 0.9)
        let u = vec![10.0, 0.0];
        let v = vec![10.0, 3.0];
        let cos = cosine_similarity(&u, &v).unwrap();
        let dist = euclidean_distance(&u, &v).unwrap();
        assert!((dist - 3.0).abs() < 1e-12);
        assert!(cos > 0.9 && cos < 0.96);
        let both = ClusterParams::new(1, 10.0, 0.9).unwrap();
        assert!(neighbors(&[u.clone(), v.clone()], 0, &both)
            .unwrap()
            .contains(&1));
        // fails the distance predicate alone
        let tight_eps = ClusterParams::new(1, 2.0, 0.9).unwrap();
        assert!(!neighbors(&[u.clone(), v.clone()], 0, &tight_eps)
            .unwrap()
            .contains(&1));
        // fails the cosine predicate alone
        let tight_cos = ClusterParams::new(1, 10.0, 0.99).unwrap();
        assert!(!neighbors(&[u, v], 0, &tight_cos).unwrap().contains(&1));
    }

    #[test]
    fn dbscan_identical_series_form_one_cluster() {
        let group = group_of(vec![vec![5.0, 6.0, 7.0, 8.0, 5.0]; 12]);
        let clustering = dbscan(&group, &ClusterParams::new(10, 10.0, 0.8).unwrap());
        assert_eq!(clustering.n_clusters(), 1);
        assert_eq!(clustering.noise_fraction(), 0.0);
    }

    #[test]
    fn dbscan_below_min_pts_is_all_noise() {
        let group = group_of(vec![vec![5.0, 6.0, 7.0, 8.0, 5.0]; 5]);
        let clustering = dbscan(&group, &ClusterParams::new(10, 10.0, 0.8).unwrap());
        assert_eq!(clustering.n_clusters(), 0);
        assert_eq!(clustering.noise_fraction(), 1.0);
    }

    #[test]
    fn dbscan_separates_two_blobs() {
        let mut values = Vec::new();
        for i in 0..15 {
            values.push(vec![100.0 + 0.01 * i as f64, 110.0, 105.0, 102.0, 100.0]);
        }
        for i in 0..15 {
            values.push(vec![400.0 + 0.01 * i as f64, 440.0, 420.0, 408.0, 400.0]);
        }
        let group = group_of(values);
        let clustering = dbscan(&group, &ClusterParams::new(10, 10.0, 0.8).unwrap());
        assert_eq!(clustering.n_clusters(), 2);
        assert_eq!(clustering.noise_fraction(), 0.0);
    }

    #[test]
    fn cluster_dataset_empty_input() {
        let (clustering, summary) = cluster_dataset(&[], &Preset::D1.params());
        assert_eq!(clustering.n_clusters(), 0);
        assert_eq!(summary.n_series, 0);
        assert_eq!(summary.noise_fraction, 0.0);
    }

    #[test]
    fn cluster_dataset_offsets_ids_across_groups() {
        let g1 = group_of(vec![vec![5.0; 5]; 12]);
        let members: Vec<Series> = (0..12)
            .map(|i| {
                let mut obs = Vec::new();
                let mut t = ts(2013, 2); // different month pattern
                for &v in &[9.0, 9.0, 9.0, 9.0, 9.0] {
                    obs.push((t, v));
                    t = t.next_quarter();
                }
                Series::validate(
                    SeriesId::new(format!("t{i:03}")),
                    RegionId::from("R"),
                    obs,
                )
                .unwrap()
            })
            .collect();
        let g2 = AlignedGroup::new(RegionId::from("R"), members[0].month_pattern(), members);
        let (clustering, summary) = cluster_dataset(&[g1, g2], &ClusterParams::new(10, 10.0, 0.8).unwrap());
        assert_eq!(clustering.n_clusters(), 2);
        assert_eq!(summary.n_series_clustered, 24);
        let ids: BTreeSet<usize> = clustering
            .labels()
            .values()
            .filter_map(|l| l.cluster_id())
            .collect();
        assert_eq!(ids, BTreeSet::from([0, 1]));
    }

    #[test]
    fn preset_values_match_the_table() {
        let d1 = Preset::D1.params();
        assert_eq!((d1.min_pts, d1.eps, d1.cos_threshold), (10, 10.0, 0.80));
        let d4 = Preset::D4.params();
        assert_eq!((d4.min_pts, d4.eps, d4.cos_threshold), (10, 5.0, 0.90));
        assert_eq!("d3".parse::<Preset>().unwrap(), Preset::D3);
        assert!("D5".parse::<Preset>().is_err());
    }

    #[test]
    fn labels_csv_uses_minus_one_for_noise() {
        let group = group_of(vec![vec![5.0; 5], vec![500.0; 5]]);
        let clustering = dbscan(&group, &ClusterParams::new(2, 1.0, 0.99).unwrap());
        let mut buf = Vec::new();
        write_labels_csv(&clustering, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "series_id,cluster_id\ns000,-1\ns001,-1\n");
    }

    #[test]
    fn determinism_under_permutation() {
        let mut values: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![10.0 + (i % 3) as f64 * 40.0; 5])
            .collect();
        let group = group_of(values.clone());
        let labels = dbscan(&group, &ClusterParams::new(3, 5.0, 0.9).unwrap());
        values.reverse();
        // ids follow the sorted order, not input order, so relabel by value
        let members: Vec<Series> = values
            .iter()
            .enumerate()
            .map(|(i, v)| quarterly(&format!("s{:03}", 19 - i), v))
            .collect();
        let permuted = AlignedGroup::new(RegionId::from("R"), members[0].month_pattern(), members);
        let labels_permuted = dbscan(&permuted, &ClusterParams::new(3, 5.0, 0.9).unwrap());
        assert_eq!(labels, labels_permuted);
    }

    fn vector_pair(max_len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1..max_len).prop_flat_map(|n| {
            (
                proptest::collection::vec(-100.0f64..100.0, n),
                proptest::collection::vec(-100.0f64..100.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn measures_are_symmetric((u, v) in vector_pair(8)) {
            prop_assume!(u.iter().any(|&x| x != 0.0) && v.iter().any(|&x| x != 0.0));
            prop_assert_eq!(
                cosine_similarity(&u, &v).unwrap().to_bits(),
                cosine_similarity(&v, &u).unwrap().to_bits()
            );
            prop_assert_eq!(
                euclidean_distance(&u, &v).unwrap().to_bits(),
                euclidean_distance(&v, &u).unwrap().to_bits()
            );
        }

        #[test]
        fn cosine_ignores_positive_scale(
            (u, v) in vector_pair(8),
            c in 0.001f64..1000.0,
        ) {
            prop_assume!(u.iter().any(|&x| x != 0.0) && v.iter().any(|&x| x != 0.0));
            let scaled: Vec<f64> = u.iter().map(|x| c * x).collect();
            let a = cosine_similarity(&scaled, &v).unwrap();
            let b = cosine_similarity(&u, &v).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn euclidean_scales_linearly(
            (u, v) in vector_pair(8),
            c in 0.001f64..100.0,
        ) {
            let su: Vec<f64> = u.iter().map(|x| c * x).collect();
            let sv: Vec<f64> = v.iter().map(|x| c * x).collect();
            let scaled = euclidean_distance(&su, &sv).unwrap();
            let plain = euclidean_distance(&u, &v).unwrap();
            prop_assert!((scaled - c * plain).abs() <= 1e-9 * (1.0 + scaled.abs()));
        }

        // Shrinking eps or raising the cosine floor never un-noises a point.
        #[test]
        fn noise_is_monotone_in_the_thresholds(
            seeds in proptest::collection::vec(0.0f64..50.0, 12..24),
            eps in 1.0f64..20.0,
            cos in 0.0f64..0.99,
        ) {
            let values: Vec<Vec<f64>> = seeds
                .iter()
                .map(|&b| vec![b, b + 1.0, b * 0.5 + 2.0, b, b + 0.5])
                .collect();
            let group = group_of(values);
            let loose = dbscan(&group, &ClusterParams::new(3, eps, cos).unwrap());
            let tight_eps = dbscan(&group, &ClusterParams::new(3, eps * 0.5, cos).unwrap());
            let tight_cos = dbscan(&group, &ClusterParams::new(3, eps, (cos + 1.0) / 2.0).unwrap());
            prop_assert!(tight_eps.noise_fraction() >= loose.noise_fraction());
            prop_assert!(tight_cos.noise_fraction() >= loose.noise_fraction());
        }
    }
}
