//! Spherical k-means over preference vectors.
//!
//! Inputs are projected onto the unit sphere; the distance between a point and
//! a centroid is `1 - <x, c>`. Seeding follows k-means++ under that distance,
//! centroids are renormalized means, and a cluster that empties is reseeded
//! with the point lying farthest from its own centroid.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preference::PreferenceVector;
use crate::rng::{stage_rng, Stage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub k: usize,
    /// Region name to cluster id in `1..=k`. Ids follow the order in which
    /// clusters first appear in the input.
    pub assignments: BTreeMap<String, usize>,
    /// Unit-length centroid of cluster `id` at index `id - 1`.
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Inertia after every centroid update.
    pub inertia_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMembers {
    pub id: usize,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub k: usize,
    pub seed: u64,
    pub clusters: Vec<ClusterMembers>,
    pub inertia: f64,
}

impl ClusteringResult {
    pub fn members(&self, id: usize) -> Vec<String> {
        self.assignments
            .iter()
            .filter(|(_, c)| **c == id)
            .map(|(r, _)| r.clone())
            .collect()
    }

    pub fn report(&self) -> ClusterReport {
        ClusterReport {
            k: self.k,
            seed: self.seed,
            clusters: (1..=self.k)
                .map(|id| ClusterMembers {
                    id,
                    members: self.members(id),
                })
                .collect(),
            inertia: self.inertia,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `1 - cos(angle)` between two non-zero vectors.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    1.0 - dot(a, b) / (norm(a) * norm(b))
}

fn unit_distance(a: &[f64], b: &[f64]) -> f64 {
    (1.0 - dot(a, b)).max(0.0)
}

fn normalized(v: &[f64]) -> Option<Vec<f64>> {
    let n = norm(v);
    (n > 0.0 && n.is_finite()).then(|| v.iter().map(|x| x / n).collect())
}

fn plus_plus_seeds(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let n = points.len();
    let mut chosen = vec![rng.gen_range(0..n)];
    let mut nearest: Vec<f64> = points
        .iter()
        .map(|p| unit_distance(p, &points[chosen[0]]))
        .collect();
    while chosen.len() < k {
        let weights: Vec<f64> = nearest.iter().map(|d| d * d).collect();
        let total: f64 = weights.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, w) in weights.iter().enumerate() {
                if *w > 0.0 && target < *w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            // guard against rounding landing on a zero-weight tail
            while weights[pick] == 0.0 {
                pick -= 1;
            }
            pick
        } else {
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.gen_range(0..free.len())]
        };
        chosen.push(next);
        for (d, p) in nearest.iter_mut().zip(points) {
            *d = d.min(unit_distance(p, &points[next]));
        }
    }
    chosen
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> Vec<usize> {
    points
        .par_iter()
        .map(|p| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, c) in centroids.iter().enumerate() {
                let d = unit_distance(p, c);
                if d < best_d {
                    best = j;
                    best_d = d;
                }
            }
            best
        })
        .collect()
}

fn repair_empty(points: &[Vec<f64>], centroids: &mut [Vec<f64>], labels: &mut [usize]) {
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let mut donor = None;
        let mut worst = f64::NEG_INFINITY;
        for (i, p) in points.iter().enumerate() {
            if sizes[labels[i]] > 1 {
                let d = unit_distance(p, &centroids[labels[i]]);
                if d > worst {
                    worst = d;
                    donor = Some(i);
                }
            }
        }
        let donor = donor.expect("k <= n guarantees a cluster with two members");
        labels[donor] = empty;
        centroids[empty] = points[donor].clone();
    }
}

fn update(points: &[Vec<f64>], labels: &[usize], centroids: &mut [Vec<f64>]) {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; centroids.len()];
    for (p, &l) in points.iter().zip(labels) {
        for (s, x) in sums[l].iter_mut().zip(p) {
            *s += x;
        }
    }
    for (c, s) in centroids.iter_mut().zip(sums) {
        if let Some(unit) = normalized(&s) {
            *c = unit;
        }
    }
}

fn inertia(points: &[Vec<f64>], labels: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| unit_distance(p, &centroids[l]))
        .sum()
}

fn prepare(vectors: &[PreferenceVector], k: usize) -> Result<Vec<Vec<f64>>> {
    if vectors.is_empty() || k == 0 || k > vectors.len() {
        return Err(Error::InvalidConfig(format!(
            "k must lie in 1..={}, got {k}",
            vectors.len()
        )));
    }
    let dims = &vectors[0].dims;
    let mut names = BTreeSet::new();
    vectors
        .iter()
        .map(|v| {
            if v.dims != *dims {
                return Err(Error::DimensionMismatch(format!(
                    "vector for {} does not share the dimension ordering of {}",
                    v.region, vectors[0].region
                )));
            }
            if !names.insert(v.region.name.as_str()) {
                return Err(Error::InvalidConfig(format!(
                    "region `{}` appears twice",
                    v.region.name
                )));
            }
            normalized(&v.values).ok_or_else(|| Error::ZeroVector(v.region.name.clone()))
        })
        .collect()
}

/// Clusters regions with one seeded run of spherical k-means.
pub fn cluster_regions(
    vectors: &[PreferenceVector],
    k: usize,
    seed: u64,
    max_iter: usize,
) -> Result<ClusteringResult> {
    run(vectors, k, seed, 0, max_iter)
}

/// Best of `restarts` runs by inertia; restart `r` uses its own derived stream.
pub fn cluster_regions_best(
    vectors: &[PreferenceVector],
    k: usize,
    seed: u64,
    restarts: usize,
    max_iter: usize,
) -> Result<ClusteringResult> {
    let mut best: Option<ClusteringResult> = None;
    for r in 0..restarts.max(1) {
        let result = run(vectors, k, seed, r as u64, max_iter)?;
        if best.as_ref().is_none_or(|b| result.inertia < b.inertia) {
            best = Some(result);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn run(
    vectors: &[PreferenceVector],
    k: usize,
    seed: u64,
    restart: u64,
    max_iter: usize,
) -> Result<ClusteringResult> {
    let points = prepare(vectors, k)?;
    let mut rng = stage_rng(seed, Stage::Clustering, restart);
    let mut centroids: Vec<Vec<f64>> = plus_plus_seeds(&points, k, &mut rng)
        .into_iter()
        .map(|i| points[i].clone())
        .collect();

    let mut labels = assign(&points, &centroids);
    repair_empty(&points, &mut centroids, &mut labels);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter.max(1) {
        iterations += 1;
        update(&points, &labels, &mut centroids);
        trace.push(inertia(&points, &labels, &centroids));
        let mut next = assign(&points, &centroids);
        repair_empty(&points, &mut centroids, &mut next);
        if next == labels {
            converged = true;
            break;
        }
        labels = next;
    }
    if !converged {
        update(&points, &labels, &mut centroids);
        trace.push(inertia(&points, &labels, &centroids));
    }

    // relabel by first appearance in input order
    let mut relabel = vec![usize::MAX; k];
    let mut next_id = 0;
    for &l in &labels {
        if relabel[l] == usize::MAX {
            relabel[l] = next_id;
            next_id += 1;
        }
    }
    let mut ordered = vec![Vec::new(); k];
    for (old, c) in centroids.into_iter().enumerate() {
        ordered[relabel[old]] = c;
    }
    let assignments = vectors
        .iter()
        .zip(&labels)
        .map(|(v, &l)| (v.region.name.clone(), relabel[l] + 1))
        .collect();

    Ok(ClusteringResult {
        k,
        assignments,
        centroids: ordered,
        inertia: *trace.last().expect("at least one update"),
        iterations,
        seed,
        inertia_trace: trace,
    })
}

/// Adjusted Rand index between two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must cover the same items");
    let pairs = |n: u64| (n * n.saturating_sub(1) / 2) as f64;
    let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, u64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, u64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&n| pairs(n)).sum();
    let row_sum: f64 = rows.values().map(|&n| pairs(n)).sum();
    let col_sum: f64 = cols.values().map(|&n| pairs(n)).sum();
    let expected = row_sum * col_sum / pairs(a.len() as u64);
    let max = 0.5 * (row_sum + col_sum);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RegionSelector;

    fn vector(name: &str, values: &[f64]) -> PreferenceVector {
        PreferenceVector {
            region: RegionSelector::country(name),
            dims: (0..values.len()).map(|i| format!("d{i}")).collect(),
            values: values.to_vec(),
            skipped: vec![],
        }
    }

    #[test]
    fn orthogonal_axes_split() {
        let vs = vec![
            vector("a", &[1.0, 0.0]),
            vector("b", &[1.0, 0.0]),
            vector("c", &[0.0, 1.0]),
            vector("d", &[0.0, 1.0]),
        ];
        for seed in 0..10 {
            let r = cluster_regions(&vs, 2, seed, 100).unwrap();
            assert_eq!(r.assignments["a"], r.assignments["b"]);
            assert_eq!(r.assignments["c"], r.assignments["d"]);
            assert_ne!(r.assignments["a"], r.assignments["c"]);
            assert!(r.inertia.abs() < 1e-12);
        }
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let vs = vec![
            vector("a", &[1.0, 0.0, 0.0]),
            vector("b", &[0.0, 1.0, 0.0]),
            vector("c", &[0.3, 0.3, 1.0]),
        ];
        let r = cluster_regions(&vs, 3, 1, 100).unwrap();
        let ids: BTreeSet<usize> = r.assignments.values().copied().collect();
        assert_eq!(ids.len(), 3);
        assert!(r.inertia.abs() < 1e-12);
    }

    #[test]
    fn single_cluster_centroid_is_mean_direction() {
        let vs = vec![
            vector("a", &[1.0, 0.0]),
            vector("b", &[0.0, 2.0]),
            vector("c", &[1.0, 1.0]),
        ];
        let r = cluster_regions(&vs, 1, 5, 100).unwrap();
        let units: Vec<Vec<f64>> = vs.iter().map(|v| normalized(&v.values).unwrap()).collect();
        let mean: Vec<f64> = (0..2)
            .map(|d| units.iter().map(|u| u[d]).sum::<f64>())
            .collect();
        let expected = normalized(&mean).unwrap();
        for (c, e) in r.centroids[0].iter().zip(&expected) {
            assert!((c - e).abs() < 1e-12);
        }
    }

    #[test]
    fn errors() {
        let vs = vec![vector("a", &[1.0, 0.0]), vector("b", &[0.0, 0.0])];
        assert!(matches!(cluster_regions(&vs, 1, 0, 10), Err(Error::ZeroVector(r)) if r == "b"));
        let vs = vec![vector("a", &[1.0, 0.0])];
        assert!(cluster_regions(&vs, 2, 0, 10).is_err());
        let vs = vec![vector("a", &[1.0, 0.0]), vector("a", &[0.0, 1.0])];
        assert!(cluster_regions(&vs, 1, 0, 10).is_err());
    }

    #[test]
    fn ari_basics() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[5, 5, 2, 2]), 1.0);
        assert!(adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]) < 0.0);
    }

    #[test]
    fn report_shape() {
        let vs = vec![
            vector("a", &[1.0, 0.0]),
            vector("b", &[0.9, 0.1]),
            vector("c", &[0.0, 1.0]),
        ];
        let r = cluster_regions(&vs, 2, 3, 100).unwrap();
        let report = r.report();
        assert_eq!(report.clusters.len(), 2);
        assert_eq!(
            report.clusters[0].members,
            vec!["a".to_string(), "b".to_string()]
        );
        for c in &r.centroids {
            assert!((norm(c) - 1.0).abs() < 1e-12);
        }
    }
}
