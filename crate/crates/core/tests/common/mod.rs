#![allow(dead_code)]

use std::collections::BTreeMap;

use gender_venues::model::{CheckInRecord, Gender, RegionSelector};
use gender_venues::preference::PreferenceVector;

/// Published GII distances from Brazil to the other 14 countries, name order.
pub const BRAZIL_D1: [f64; 14] = [
    0.369, 0.416, 0.324, 0.070, 0.248, 0.084, 0.173, 0.332, 0.362, 0.077, 0.098, 0.225, 0.280,
    0.177,
];

/// Published preference-vector distances from Brazil, same order.
pub const BRAZIL_D2: [f64; 14] = [
    0.754, 0.757, 0.414, 0.556, 0.328, 0.249, 0.563, 0.795, 0.73, 0.324, 0.379, 0.795, 0.601, 0.378,
];

pub fn record(user: &str, gender: Gender, venue: &str, category: &str, sub: &str) -> CheckInRecord {
    CheckInRecord {
        user_id: user.into(),
        gender,
        venue_id: venue.into(),
        category: category.into(),
        subcategory: sub.into(),
        latitude: 0.0,
        longitude: 0.0,
        country: "Testland".into(),
        city: Some("Testville".into()),
        timestamp: None,
    }
}

pub fn vector(name: &str, values: &[f64]) -> PreferenceVector {
    PreferenceVector {
        region: RegionSelector::country(name),
        dims: (0..values.len()).map(|i| format!("d{i}")).collect(),
        values: values.to_vec(),
        skipped: Vec::new(),
    }
}

pub fn by_name(vectors: Vec<PreferenceVector>) -> BTreeMap<String, PreferenceVector> {
    vectors
        .into_iter()
        .map(|v| (v.region.name.clone(), v))
        .collect()
}
