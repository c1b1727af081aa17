//! Randomization null model for the cross-gender popularity difference.
//!
//! Two ways to build the reference distribution are supported:
//!
//! * `Generative`: draw `c` synthetic check-ins, each with a uniform gender
//!   and a venue drawn uniformly (with replacement) from the scope's venues,
//!   where `c` is the number of check-ins in the scope.
//! * `GenderShuffle`: permute the gender labels over the scope's check-ins.
//!
//! Each replicate recomputes the difference for the unit(s); the observed
//! value is significant when it falls outside the central `confidence`
//! quantile range of the replicates.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CheckInRecord, Gender, RegionSelector};
use crate::popularity::{AnalysisMode, AnalysisUnit, Scope, UnitCounts};
use crate::rng::{stage_rng, Stage};

/// Redraws allowed for a replicate that came out single-gender.
pub const MAX_REDRAWS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullMethod {
    Generative,
    GenderShuffle,
}

impl std::str::FromStr for NullMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "generative" => Ok(NullMethod::Generative),
            "gender_shuffle" => Ok(NullMethod::GenderShuffle),
            other => Err(Error::InvalidConfig(format!(
                "unknown null-model method `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NullModelConfig {
    pub k: usize,
    pub confidence: f64,
    pub method: NullMethod,
    pub rng_seed: u64,
}

impl Default for NullModelConfig {
    fn default() -> Self {
        NullModelConfig {
            k: 100,
            confidence: 0.99,
            method: NullMethod::Generative,
            rng_seed: 0,
        }
    }
}

impl NullModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidConfig(format!(
                "k must be >= 2, got {}",
                self.k
            )));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "confidence must lie in (0, 1), got {}",
                self.confidence
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Male,
    Female,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullModelResult {
    pub unit: AnalysisUnit,
    pub observed_d: f64,
    pub null_distribution: Vec<f64>,
    pub delta_min: f64,
    pub delta_max: f64,
    pub significant: bool,
    pub direction: Direction,
}

/// The JSON-facing part of a result, without the replicate values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullModelSummary {
    pub unit: AnalysisUnit,
    pub observed_d: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub significant: bool,
    pub direction: Direction,
}

impl NullModelResult {
    pub fn summary(&self) -> NullModelSummary {
        NullModelSummary {
            unit: self.unit.clone(),
            observed_d: self.observed_d,
            delta_min: self.delta_min,
            delta_max: self.delta_max,
            significant: self.significant,
            direction: self.direction,
        }
    }

    /// Replicate values as `replicate,d` CSV, for histogram plotting.
    pub fn write_distribution_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["replicate", "d"])?;
        for (i, d) in self.null_distribution.iter().enumerate() {
            w.write_record([i.to_string(), d.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Empirical quantile of an ascending sample with linear interpolation at
/// position `(n + 1) p`, clamped to the sample extremes.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let n = sorted.len();
    let h = (n as f64 + 1.0) * p;
    if h <= 1.0 {
        return sorted[0];
    }
    if h >= n as f64 {
        return sorted[n - 1];
    }
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    sorted[lo - 1] + frac * (sorted[lo] - sorted[lo - 1])
}

/// Acceptance range of a null sample at the given confidence.
pub fn acceptance_range(null: &[f64], confidence: f64) -> (f64, f64) {
    let mut sorted = null.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = (1.0 - confidence) / 2.0;
    (quantile(&sorted, tail), quantile(&sorted, 1.0 - tail))
}

pub fn classify(observed: f64, delta_min: f64, delta_max: f64) -> (bool, Direction) {
    if observed > delta_max {
        (true, Direction::Male)
    } else if observed < delta_min {
        (true, Direction::Female)
    } else {
        (false, Direction::None)
    }
}

fn draw_replicate(scope: &Scope, config: &NullModelConfig, replicate: usize) -> Result<UnitCounts> {
    let mut rng = stage_rng(config.rng_seed, Stage::NullModel, replicate as u64);
    let n_units = scope.unit_keys.len();
    match config.method {
        NullMethod::Generative => {
            let n_venues = scope.n_venues();
            for _ in 0..=MAX_REDRAWS {
                let mut counts = UnitCounts::zeroed(n_units);
                for _ in 0..scope.genders.len() {
                    let gender = if rng.gen::<bool>() {
                        Gender::Male
                    } else {
                        Gender::Female
                    };
                    let venue = rng.gen_range(0..n_venues);
                    counts.add(scope.unit_of_venue[venue] as usize, gender);
                }
                if counts.has_both_genders() {
                    return Ok(counts);
                }
            }
            Err(Error::DegenerateReplicate {
                replicate,
                retries: MAX_REDRAWS,
            })
        }
        NullMethod::GenderShuffle => {
            let mut genders = scope.genders.clone();
            genders.shuffle(&mut rng);
            let mut counts = UnitCounts::zeroed(n_units);
            for (&g, &v) in genders.iter().zip(&scope.venue_of) {
                counts.add(scope.unit_of_venue[v as usize] as usize, g);
            }
            Ok(counts)
        }
    }
}

fn draw_all(scope: &Scope, config: &NullModelConfig) -> Result<Vec<UnitCounts>> {
    (0..config.k)
        .into_par_iter()
        .map(|i| draw_replicate(scope, config, i))
        .collect()
}

fn assemble(
    unit: AnalysisUnit,
    observed_d: f64,
    null: Vec<f64>,
    confidence: f64,
) -> NullModelResult {
    let (delta_min, delta_max) = acceptance_range(&null, confidence);
    let (significant, direction) = classify(observed_d, delta_min, delta_max);
    NullModelResult {
        unit,
        observed_d,
        null_distribution: null,
        delta_min,
        delta_max,
        significant,
        direction,
    }
}

/// Tests one unit against the null model.
///
/// Replicate `i` draws from a stream seeded by `(rng_seed, i)`, so the result
/// is identical to the corresponding entry of [`run_null_model_batch`] and
/// independent of the number of worker threads.
pub fn run_null_model(
    records: &[CheckInRecord],
    unit: &AnalysisUnit,
    config: &NullModelConfig,
) -> Result<NullModelResult> {
    config.validate()?;
    let scope = Scope::build(
        records,
        unit.mode,
        &unit.scope,
        unit.scope_subcategory.as_deref(),
    )?;
    let observed = scope.observed_counts();
    scope.require_both_genders(&observed)?;
    let index = scope.unit_index(&unit.key)?;

    let null = draw_all(&scope, config)?
        .iter()
        .map(|c| c.difference(index))
        .collect();
    Ok(assemble(
        unit.clone(),
        observed.difference(index),
        null,
        config.confidence,
    ))
}

/// Tests every unit of a scope, sharing the `k` replicates across units.
/// Results are in ascending unit-key order.
pub fn run_null_model_batch(
    records: &[CheckInRecord],
    mode: AnalysisMode,
    region: &RegionSelector,
    scope_subcategory: Option<&str>,
    config: &NullModelConfig,
) -> Result<Vec<NullModelResult>> {
    config.validate()?;
    let scope = Scope::build(records, mode, region, scope_subcategory)?;
    let observed = scope.observed_counts();
    scope.require_both_genders(&observed)?;

    let replicates = draw_all(&scope, config)?;
    Ok(scope
        .unit_keys
        .iter()
        .enumerate()
        .map(|(u, key)| {
            let unit = AnalysisUnit {
                mode,
                key: key.clone(),
                scope: region.clone(),
                scope_subcategory: scope_subcategory.map(str::to_string),
            };
            let null = replicates.iter().map(|c| c.difference(u)).collect();
            assemble(unit, observed.difference(u), null, config.confidence)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sample_quantiles_are_extremes() {
        let sorted = [-0.3, 0.7];
        assert_eq!(quantile(&sorted, 0.005), -0.3);
        assert_eq!(quantile(&sorted, 0.995), 0.7);
        let (lo, hi) = acceptance_range(&[0.7, -0.3], 0.99);
        assert_eq!((lo, hi), (-0.3, 0.7));
    }

    #[test]
    fn quantile_interpolates() {
        let sorted: Vec<f64> = (1..=9).map(f64::from).collect();
        assert_eq!(quantile(&sorted, 0.5), 5.0);
        assert!((quantile(&sorted, 0.25) - 2.5).abs() < 1e-12);
        // k = 100 at 99%: both ends clamp to the sample extremes
        let hundred: Vec<f64> = (0..100).map(f64::from).collect();
        assert_eq!(quantile(&hundred, 0.005), 0.0);
        assert_eq!(quantile(&hundred, 0.995), 99.0);
    }

    #[test]
    fn classify_is_strict() {
        assert_eq!(classify(1.0, -1.0, 1.0), (false, Direction::None));
        assert_eq!(classify(1.1, -1.0, 1.0), (true, Direction::Male));
        assert_eq!(classify(-1.1, -1.0, 1.0), (true, Direction::Female));
    }

    #[test]
    fn config_validation() {
        let bad_k = NullModelConfig {
            k: 1,
            ..NullModelConfig::default()
        };
        assert!(bad_k.validate().is_err());
        let bad_conf = NullModelConfig {
            confidence: 1.0,
            ..NullModelConfig::default()
        };
        assert!(bad_conf.validate().is_err());
        assert_eq!(
            "gender_shuffle".parse::<NullMethod>().unwrap(),
            NullMethod::GenderShuffle
        );
    }
}
