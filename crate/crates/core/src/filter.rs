//! Dataset filtering protocol.
//!
//! Stages run in a fixed order: region, category whitelist, one check-in per
//! (user, venue), minimum check-ins per venue, minimum venues per subcategory,
//! and finally an optional cap on the number of check-ins in the region that
//! keeps whole venues. The subcategory rule is re-checked after the cap so the
//! output always satisfies every threshold.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CheckInRecord, RegionSelector};
use crate::rng::{stage_rng, Stage};

pub const DEFAULT_CATEGORIES: [&str; 5] = ["Arts", "Education", "Food", "Nightlife", "Work"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub min_checkins_per_venue: usize,
    pub dedupe_user_venue: bool,
    pub allowed_categories: BTreeSet<String>,
    pub min_venues_per_subcategory: usize,
    pub max_checkins_per_region: Option<usize>,
    pub rng_seed: u64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_checkins_per_venue: 5,
            dedupe_user_venue: true,
            allowed_categories: DEFAULT_CATEGORIES.iter().map(|s| s.to_string()).collect(),
            min_venues_per_subcategory: 2,
            max_checkins_per_region: None,
            rng_seed: 0,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_checkins_per_venue == 0 {
            return Err(Error::InvalidConfig(
                "min_checkins_per_venue must be >= 1".into(),
            ));
        }
        if self.min_venues_per_subcategory == 0 {
            return Err(Error::InvalidConfig(
                "min_venues_per_subcategory must be >= 1".into(),
            ));
        }
        if self.max_checkins_per_region == Some(0) {
            return Err(Error::InvalidConfig(
                "max_checkins_per_region must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCount {
    pub stage: String,
    pub input: usize,
    pub output: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub region: String,
    pub stages: Vec<StageCount>,
}

impl FilterReport {
    fn record(&mut self, stage: &str, input: usize, output: usize) {
        self.stages.push(StageCount {
            stage: stage.to_string(),
            input,
            output,
        });
    }
}

/// Applies the filtering protocol to `records` for a single region.
///
/// The output keeps the input order of surviving records.
pub fn apply_filters(
    records: &[CheckInRecord],
    region: &RegionSelector,
    config: &FilterConfig,
) -> Result<(Vec<CheckInRecord>, FilterReport)> {
    config.validate()?;
    let mut report = FilterReport {
        region: region.to_string(),
        stages: Vec::new(),
    };

    let mut keep: Vec<usize> = (0..records.len())
        .filter(|&i| region.matches(&records[i]))
        .collect();
    report.record("region", records.len(), keep.len());
    if keep.is_empty() {
        return Err(Error::RegionNotFound(region.to_string()));
    }

    let before = keep.len();
    keep.retain(|&i| config.allowed_categories.contains(&records[i].category));
    report.record("category", before, keep.len());

    let before = keep.len();
    if config.dedupe_user_venue {
        keep = dedupe(records, &keep);
    }
    report.record("dedupe", before, keep.len());

    let before = keep.len();
    venue_threshold(records, &mut keep, config.min_checkins_per_venue);
    report.record("venue_threshold", before, keep.len());

    let before = keep.len();
    subcategory_threshold(records, &mut keep, config.min_venues_per_subcategory);
    report.record("subcategory_threshold", before, keep.len());

    if let Some(cap) = config.max_checkins_per_region {
        let before = keep.len();
        if keep.len() > cap {
            down_sample(records, &mut keep, cap, config.rng_seed);
        }
        report.record("down_sample", before, keep.len());

        let before = keep.len();
        subcategory_threshold(records, &mut keep, config.min_venues_per_subcategory);
        report.record("post_sample_subcategory_threshold", before, keep.len());
    }

    Ok((
        keep.into_iter().map(|i| records[i].clone()).collect(),
        report,
    ))
}

/// Earliest timestamp per (user, venue) wins; untimed records lose to timed
/// ones and ties fall back to input order.
fn dedupe(records: &[CheckInRecord], keep: &[usize]) -> Vec<usize> {
    let mut best: HashMap<(&str, &str), usize> = HashMap::new();
    for &i in keep {
        let r = &records[i];
        let key = (r.user_id.as_str(), r.venue_id.as_str());
        match best.get(&key) {
            Some(&j) => {
                let rank = |k: usize| (records[k].timestamp.is_none(), records[k].timestamp, k);
                if rank(i) < rank(j) {
                    best.insert(key, i);
                }
            }
            None => {
                best.insert(key, i);
            }
        }
    }
    let winners: HashSet<usize> = best.into_values().collect();
    keep.iter()
        .copied()
        .filter(|i| winners.contains(i))
        .collect()
}

fn venue_threshold(records: &[CheckInRecord], keep: &mut Vec<usize>, min: usize) {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for &i in keep.iter() {
        *counts.entry(records[i].venue_id.as_str()).or_default() += 1;
    }
    keep.retain(|&i| counts[records[i].venue_id.as_str()] >= min);
}

fn subcategory_threshold(records: &[CheckInRecord], keep: &mut Vec<usize>, min: usize) {
    let mut venues: HashMap<&str, HashSet<&str>> = HashMap::new();
    for &i in keep.iter() {
        venues
            .entry(records[i].subcategory.as_str())
            .or_default()
            .insert(records[i].venue_id.as_str());
    }
    keep.retain(|&i| venues[records[i].subcategory.as_str()].len() >= min);
}

/// Picks whole venues in seeded random order while they still fit under `cap`.
fn down_sample(records: &[CheckInRecord], keep: &mut Vec<usize>, cap: usize, seed: u64) {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for &i in keep.iter() {
        *counts.entry(records[i].venue_id.as_str()).or_default() += 1;
    }
    let mut order: Vec<(&str, usize)> = counts.into_iter().collect();
    order.shuffle(&mut stage_rng(seed, Stage::DownSample, 0));

    let mut total = 0usize;
    let mut chosen: HashSet<&str> = HashSet::new();
    for (venue, n) in order {
        if total + n <= cap {
            total += n;
            chosen.insert(venue);
        }
        if total == cap {
            break;
        }
    }
    keep.retain(|&i| chosen.contains(records[i].venue_id.as_str()));
}
