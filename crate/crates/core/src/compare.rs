//! Rank comparison of preference vectors against scalar country indices.
//!
//! For an anchor region, every other region gets two distances: the absolute
//! difference of the index values and the cosine distance of the preference
//! vectors. Spearman's rho between the two lists measures how well the
//! vectors reproduce the index's notion of similarity.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::cluster::cosine_distance;
use crate::error::{Error, Result};
use crate::model::IndexTable;
use crate::preference::PreferenceVector;
use crate::rng::{stage_rng, Stage};

/// Two-sided 99% normal quantile.
pub const Z_99: f64 = 2.576;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spearman {
    pub rho: f64,
    pub p_value: f64,
    pub n: usize,
}

/// 1-based ranks with ties sharing the average of the positions they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman's rho as the Pearson correlation of average ranks, with a
/// two-sided p-value from the t approximation on `n - 2` degrees of freedom.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<Spearman> {
    if a.len() != b.len() {
        return Err(Error::Degenerate(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 3 {
        return Err(Error::Degenerate(format!("need at least 3 pairs, got {n}")));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite input".into()));
    }
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let mean = (n as f64 + 1.0) / 2.0;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        let (dx, dy) = (x - mean, y - mean);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Degenerate("constant input list".into()));
    }
    let rho = (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p_value = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
        (2.0 * dist.sf(t.abs())).min(1.0)
    };
    Ok(Spearman { rho, p_value, n })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankComparison {
    pub anchor_region: String,
    pub index_name: String,
    /// Absolute index difference to the anchor.
    pub d1: BTreeMap<String, f64>,
    /// Cosine distance of preference vectors to the anchor's.
    pub d2: BTreeMap<String, f64>,
    pub rho: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Absolute index differences from `anchor` to every other country in the table.
pub fn index_distances(index: &IndexTable, anchor: &str) -> Result<BTreeMap<String, f64>> {
    let base = index.get(anchor).ok_or_else(|| Error::MissingFromIndex {
        index: index.index_name.clone(),
        missing: vec![anchor.to_string()],
    })?;
    Ok(index
        .entries
        .iter()
        .filter(|(c, _)| c.as_str() != anchor)
        .map(|(c, v)| (c.clone(), (base - v).abs()))
        .collect())
}

fn check_inputs(
    vectors: &BTreeMap<String, PreferenceVector>,
    index: &IndexTable,
    anchor: &str,
) -> Result<()> {
    if !vectors.contains_key(anchor) {
        return Err(Error::InvalidConfig(format!(
            "anchor `{anchor}` has no preference vector"
        )));
    }
    if vectors.len() < 4 {
        return Err(Error::InvalidConfig(format!(
            "need at least 4 regions, got {}",
            vectors.len()
        )));
    }
    let missing: Vec<String> = vectors
        .keys()
        .filter(|r| index.get(r).is_none())
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingFromIndex {
            index: index.index_name.clone(),
            missing,
        });
    }
    let dims = &vectors[anchor].dims;
    for (name, v) in vectors {
        if v.dims != *dims {
            return Err(Error::DimensionMismatch(format!(
                "vector for `{name}` does not share the anchor's dimensions"
            )));
        }
        if v.is_zero() {
            return Err(Error::ZeroVector(name.clone()));
        }
    }
    Ok(())
}

fn vector_distances(
    vectors: &BTreeMap<String, PreferenceVector>,
    anchor: &str,
) -> BTreeMap<String, f64> {
    let base = &vectors[anchor].values;
    vectors
        .iter()
        .filter(|(r, _)| r.as_str() != anchor)
        .map(|(r, v)| (r.clone(), cosine_distance(base, &v.values)))
        .collect()
}

/// Compares the similarity ranking of `anchor` under the index and under the
/// preference vectors. Regions are correlated in name order.
pub fn compare_with_index(
    vectors: &BTreeMap<String, PreferenceVector>,
    index: &IndexTable,
    anchor: &str,
) -> Result<RankComparison> {
    check_inputs(vectors, index, anchor)?;
    let base = index.get(anchor).expect("checked");
    let d1: BTreeMap<String, f64> = vectors
        .keys()
        .filter(|r| r.as_str() != anchor)
        .map(|r| (r.clone(), (base - index.get(r).expect("checked")).abs()))
        .collect();
    let d2 = vector_distances(vectors, anchor);
    let a: Vec<f64> = d1.values().copied().collect();
    let b: Vec<f64> = d2.values().copied().collect();
    let s = spearman(&a, &b)?;
    Ok(RankComparison {
        anchor_region: anchor.to_string(),
        index_name: index.index_name.clone(),
        d1,
        d2,
        rho: s.rho,
        p_value: s.p_value,
        n: s.n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomBaseline {
    pub n_permutations: usize,
    pub rho_samples: Vec<f64>,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

/// Spearman rho against randomly permuted index assignments.
///
/// Each permutation reassigns the index values among the compared regions and
/// correlates the resulting anchor distances with the fixed vector distances.
/// The interval is `mean +/- 2.576 * stderr` of the sampled rho values.
pub fn random_baseline(
    vectors: &BTreeMap<String, PreferenceVector>,
    index: &IndexTable,
    anchor: &str,
    n_permutations: usize,
    seed: u64,
) -> Result<RandomBaseline> {
    if n_permutations < 2 {
        return Err(Error::InvalidConfig(format!(
            "random baseline needs at least 2 permutations, got {n_permutations}"
        )));
    }
    check_inputs(vectors, index, anchor)?;
    let regions: Vec<&String> = vectors.keys().collect();
    let anchor_pos = regions
        .iter()
        .position(|r| r.as_str() == anchor)
        .expect("checked");
    let values: Vec<f64> = regions
        .iter()
        .map(|r| index.get(r).expect("checked"))
        .collect();
    let d2: Vec<f64> = vector_distances(vectors, anchor).into_values().collect();

    let rho_samples = (0..n_permutations)
        .into_par_iter()
        .map(|p| {
            let mut permuted = values.clone();
            permuted.shuffle(&mut stage_rng(seed, Stage::Baseline, p as u64));
            let base = permuted[anchor_pos];
            let d1: Vec<f64> = permuted
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != anchor_pos)
                .map(|(_, v)| (base - v).abs())
                .collect();
            spearman(&d1, &d2).map(|s| s.rho)
        })
        .collect::<Result<Vec<f64>>>()?;

    let n = rho_samples.len() as f64;
    let mean = rho_samples.iter().sum::<f64>() / n;
    let var = rho_samples.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let half = Z_99 * (var / n).sqrt();
    Ok(RandomBaseline {
        n_permutations,
        rho_samples,
        mean,
        ci_low: mean - half,
        ci_high: mean + half,
        seed,
    })
}

/// One line of the correlation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub country: String,
    pub index: String,
    pub rho: f64,
    pub p_value: f64,
    pub baseline_ci_low: f64,
    pub baseline_ci_high: f64,
}

pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record([
            "country",
            "index",
            "rho",
            "p_value",
            "baseline_ci_low",
            "baseline_ci_high",
        ])?;
    }
    w.flush()?;
    Ok(())
}
