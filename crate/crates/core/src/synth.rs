//! Seeded synthetic check-ins with a controllable gender-subcategory dependence.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CheckInRecord, Gender};
use crate::rng::{stage_rng, Stage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSubcategory {
    pub name: String,
    #[serde(default = "default_category")]
    pub category: String,
    pub n_venues: usize,
    #[serde(default = "one")]
    pub base_weight: f64,
    /// `+1` male only, `-1` female only, `0` independent of gender.
    #[serde(default)]
    pub gender_skew: f64,
}

fn default_category() -> String {
    "Food".to_string()
}

fn one() -> f64 {
    1.0
}

impl SynthSubcategory {
    pub fn new(name: impl Into<String>, n_venues: usize) -> Self {
        SynthSubcategory {
            name: name.into(),
            category: default_category(),
            n_venues,
            base_weight: 1.0,
            gender_skew: 0.0,
        }
    }

    pub fn with_skew(mut self, skew: f64) -> Self {
        self.gender_skew = skew;
        self
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.base_weight = weight;
        self
    }

    pub fn with_category(mut self, category: impl Into<String>) -> Self {
        self.category = category.into();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_lat: f64,
    pub max_lat: f64,
    pub min_lon: f64,
    pub max_lon: f64,
}

impl Default for BoundingBox {
    fn default() -> Self {
        BoundingBox {
            min_lat: -1.0,
            max_lat: 1.0,
            min_lon: -1.0,
            max_lon: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_users: usize,
    pub female_fraction: f64,
    pub subcategories: Vec<SynthSubcategory>,
    pub n_checkins: usize,
    pub region_name: String,
    #[serde(default)]
    pub city: Option<String>,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub bbox: BoundingBox,
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ImpossibleSpec(msg));
        if !(0.0..=1.0).contains(&self.female_fraction) {
            return bad(format!(
                "female_fraction {} outside [0, 1]",
                self.female_fraction
            ));
        }
        if self.subcategories.is_empty() {
            return bad("no subcategories".into());
        }
        if self.n_checkins > 0 && self.n_users == 0 {
            return bad("check-ins requested but no users".into());
        }
        let mut names = std::collections::BTreeSet::new();
        for s in &self.subcategories {
            if !names.insert(s.name.as_str()) {
                return bad(format!("subcategory `{}` listed twice", s.name));
            }
            if s.n_venues == 0 {
                return bad(format!("subcategory `{}` has no venues", s.name));
            }
            if !(s.base_weight.is_finite() && s.base_weight >= 0.0) {
                return bad(format!(
                    "subcategory `{}` has weight {}",
                    s.name, s.base_weight
                ));
            }
            if !(-1.0..=1.0).contains(&s.gender_skew) {
                return bad(format!(
                    "subcategory `{}` has skew {}",
                    s.name, s.gender_skew
                ));
            }
        }
        if self
            .subcategories
            .iter()
            .map(|s| s.base_weight)
            .sum::<f64>()
            <= 0.0
        {
            return bad("base weights sum to zero".into());
        }
        let b = &self.bbox;
        if !(b.min_lat <= b.max_lat && b.min_lon <= b.max_lon)
            || b.min_lat < -90.0
            || b.max_lat > 90.0
            || b.min_lon < -180.0
            || b.max_lon > 180.0
        {
            return bad("bounding box is not a valid lat/lon rectangle".into());
        }
        Ok(())
    }

    /// Number of female users produced for this spec.
    pub fn n_female_users(&self) -> usize {
        (self.n_users as f64 * self.female_fraction).round() as usize
    }
}

fn gender_weights(spec: &SynthSpec, gender: Gender) -> Vec<f64> {
    spec.subcategories
        .iter()
        .map(|s| match gender {
            Gender::Male => s.base_weight * (1.0 + s.gender_skew),
            Gender::Female => s.base_weight * (1.0 - s.gender_skew),
        })
        .collect()
}

/// Draws `n_checkins` records: a user (with a fixed gender), then a
/// subcategory by gender-adjusted weight, then a venue of that subcategory.
pub fn generate(spec: &SynthSpec) -> Result<Vec<CheckInRecord>> {
    spec.validate()?;
    let mut rng = stage_rng(spec.rng_seed, Stage::Synth, 0);

    let n_female = spec.n_female_users();
    let mut genders: Vec<Gender> = (0..spec.n_users)
        .map(|i| {
            if i < n_female {
                Gender::Female
            } else {
                Gender::Male
            }
        })
        .collect();
    genders.shuffle(&mut rng);

    let mut pickers = Vec::with_capacity(2);
    for gender in [Gender::Male, Gender::Female] {
        let has_users = genders.contains(&gender);
        let weights = gender_weights(spec, gender);
        if weights.iter().sum::<f64>() <= 0.0 {
            if has_users && spec.n_checkins > 0 {
                return Err(Error::ImpossibleSpec(format!(
                    "{gender} users exist but every subcategory excludes them"
                )));
            }
            pickers.push(None);
        } else {
            pickers.push(Some(WeightedIndex::new(&weights).map_err(|e| {
                Error::ImpossibleSpec(format!("subcategory weights for {gender}: {e}"))
            })?));
        }
    }

    let bbox = spec.bbox;
    let venues: Vec<Vec<(String, f64, f64)>> = spec
        .subcategories
        .iter()
        .enumerate()
        .map(|(si, s)| {
            (0..s.n_venues)
                .map(|vj| {
                    let lat = rng.gen_range(bbox.min_lat..=bbox.max_lat);
                    let lon = rng.gen_range(bbox.min_lon..=bbox.max_lon);
                    (format!("{}-s{si}-v{vj}", spec.region_name), lat, lon)
                })
                .collect()
        })
        .collect();

    let mut out = Vec::with_capacity(spec.n_checkins);
    for _ in 0..spec.n_checkins {
        let user = rng.gen_range(0..spec.n_users);
        let gender = genders[user];
        let slot = match gender {
            Gender::Male => 0,
            Gender::Female => 1,
        };
        let s = pickers[slot]
            .as_ref()
            .expect("validated above")
            .sample(&mut rng);
        let sub = &spec.subcategories[s];
        let (venue_id, latitude, longitude) = &venues[s][rng.gen_range(0..sub.n_venues)];
        out.push(CheckInRecord {
            user_id: format!("{}-u{user}", spec.region_name),
            gender,
            venue_id: venue_id.clone(),
            category: sub.category.clone(),
            subcategory: sub.name.clone(),
            latitude: *latitude,
            longitude: *longitude,
            country: spec.region_name.clone(),
            city: spec.city.clone(),
            timestamp: None,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_spec() -> SynthSpec {
        SynthSpec {
            n_users: 100,
            female_fraction: 0.4,
            subcategories: vec![
                SynthSubcategory::new("Café", 3),
                SynthSubcategory::new("Bar", 2),
            ],
            n_checkins: 500,
            region_name: "Testland".into(),
            city: None,
            rng_seed: 11,
            bbox: BoundingBox::default(),
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(
            generate(&base_spec()).unwrap(),
            generate(&base_spec()).unwrap()
        );
        let mut other = base_spec();
        other.rng_seed = 12;
        assert_ne!(generate(&base_spec()).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn male_only_subcategory() {
        let mut spec = base_spec();
        spec.subcategories[0].gender_skew = 1.0;
        let records = generate(&spec).unwrap();
        assert!(records
            .iter()
            .filter(|r| r.subcategory == "Café")
            .all(|r| r.gender == Gender::Male));
        assert!(records.iter().any(|r| r.subcategory == "Café"));
    }

    #[test]
    fn impossible_specs() {
        let mut spec = base_spec();
        for s in &mut spec.subcategories {
            s.gender_skew = 1.0;
        }
        assert!(matches!(generate(&spec), Err(Error::ImpossibleSpec(_))));

        let mut spec = base_spec();
        spec.subcategories[1].gender_skew = 1.5;
        assert!(generate(&spec).is_err());

        let mut spec = base_spec();
        spec.n_users = 0;
        assert!(generate(&spec).is_err());

        // all-female-excluding spec is fine when there are no female users
        let mut spec = base_spec();
        spec.female_fraction = 0.0;
        for s in &mut spec.subcategories {
            s.gender_skew = 1.0;
        }
        assert!(generate(&spec).is_ok());
    }

    #[test]
    fn user_gender_counts() {
        let spec = base_spec();
        assert_eq!(spec.n_female_users(), 40);
        let records = generate(&spec).unwrap();
        let mut users = std::collections::BTreeMap::new();
        for r in &records {
            users.insert(r.user_id.clone(), r.gender);
        }
        assert!(users.values().filter(|g| **g == Gender::Female).count() <= 40);
    }

    #[test]
    fn spec_from_json() {
        let json = r#"{"n_users":10,"female_fraction":0.5,"n_checkins":20,"region_name":"X",
            "subcategories":[{"name":"Café","n_venues":2},{"name":"Bar","n_venues":2,"gender_skew":-0.5}]}"#;
        let spec: SynthSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.subcategories[0].category, "Food");
        assert_eq!(generate(&spec).unwrap().len(), 20);
    }
}
