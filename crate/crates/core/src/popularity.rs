//! Per-gender popularity of analysis units and the signed cross-gender
//! popularity difference.
//!
//! For a unit `u` inside a scope, `p_g(u)` is the share of all check-ins made
//! by gender `g` in the scope that fall in `u`. The difference is the signed
//! distance of `(p_male, p_female)` from the diagonal `p_male = p_female`,
//! positive when the unit leans male.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CheckInRecord, Gender, RegionSelector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisMode {
    Subcategory,
    Venue,
    VenueWithinSubcategory,
}

impl AnalysisMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AnalysisMode::Subcategory => "subcategory",
            AnalysisMode::Venue => "venue",
            AnalysisMode::VenueWithinSubcategory => "venue_within_subcategory",
        }
    }
}

impl fmt::Display for AnalysisMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AnalysisMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subcategory" => Ok(AnalysisMode::Subcategory),
            "venue" => Ok(AnalysisMode::Venue),
            "venue_within_subcategory" => Ok(AnalysisMode::VenueWithinSubcategory),
            other => Err(Error::InvalidConfig(format!(
                "unknown analysis mode `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnalysisUnit {
    pub mode: AnalysisMode,
    pub key: String,
    pub scope: RegionSelector,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub scope_subcategory: Option<String>,
}

impl AnalysisUnit {
    pub fn subcategory(scope: RegionSelector, name: impl Into<String>) -> Self {
        AnalysisUnit {
            mode: AnalysisMode::Subcategory,
            key: name.into(),
            scope,
            scope_subcategory: None,
        }
    }

    pub fn venue(scope: RegionSelector, venue_id: impl Into<String>) -> Self {
        AnalysisUnit {
            mode: AnalysisMode::Venue,
            key: venue_id.into(),
            scope,
            scope_subcategory: None,
        }
    }

    pub fn venue_within(
        scope: RegionSelector,
        subcategory: impl Into<String>,
        venue_id: impl Into<String>,
    ) -> Self {
        AnalysisUnit {
            mode: AnalysisMode::VenueWithinSubcategory,
            key: venue_id.into(),
            scope,
            scope_subcategory: Some(subcategory.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopularityPoint {
    pub unit: AnalysisUnit,
    pub p_male: f64,
    pub p_female: f64,
    pub d_s: f64,
    pub n_checkins: u64,
}

/// Signed euclidean distance from `(p_male, p_female)` to the diagonal.
pub fn cross_gender_difference(p_male: f64, p_female: f64) -> f64 {
    (p_male - p_female) / std::f64::consts::SQRT_2
}

/// Check-ins of one scope, indexed for repeated counting.
#[derive(Debug, Clone)]
pub(crate) struct Scope {
    pub label: String,
    pub genders: Vec<Gender>,
    /// Venue index of each check-in.
    pub venue_of: Vec<u32>,
    pub unit_of_venue: Vec<u32>,
    /// Sorted unit keys.
    pub unit_keys: Vec<String>,
}

#[derive(Debug, Clone)]
pub(crate) struct UnitCounts {
    pub male: Vec<u64>,
    pub female: Vec<u64>,
    pub total_male: u64,
    pub total_female: u64,
}

impl UnitCounts {
    pub fn zeroed(n_units: usize) -> Self {
        UnitCounts {
            male: vec![0; n_units],
            female: vec![0; n_units],
            total_male: 0,
            total_female: 0,
        }
    }

    pub fn add(&mut self, unit: usize, gender: Gender) {
        match gender {
            Gender::Male => {
                self.male[unit] += 1;
                self.total_male += 1;
            }
            Gender::Female => {
                self.female[unit] += 1;
                self.total_female += 1;
            }
        }
    }

    pub fn has_both_genders(&self) -> bool {
        self.total_male > 0 && self.total_female > 0
    }

    pub fn shares(&self, unit: usize) -> (f64, f64) {
        (
            self.male[unit] as f64 / self.total_male as f64,
            self.female[unit] as f64 / self.total_female as f64,
        )
    }

    pub fn difference(&self, unit: usize) -> f64 {
        let (m, f) = self.shares(unit);
        cross_gender_difference(m, f)
    }
}

impl Scope {
    pub fn build(
        records: &[CheckInRecord],
        mode: AnalysisMode,
        region: &RegionSelector,
        scope_subcategory: Option<&str>,
    ) -> Result<Scope> {
        match (mode, scope_subcategory) {
            (AnalysisMode::VenueWithinSubcategory, None) => {
                return Err(Error::InvalidConfig(
                    "venue_within_subcategory mode requires a scope subcategory".into(),
                ))
            }
            (AnalysisMode::Subcategory | AnalysisMode::Venue, Some(_)) => {
                return Err(Error::InvalidConfig(format!(
                    "a scope subcategory is only valid in venue_within_subcategory mode, not {mode}"
                )))
            }
            _ => {}
        }

        let in_region: Vec<&CheckInRecord> = records.iter().filter(|r| region.matches(r)).collect();
        if in_region.is_empty() {
            return Err(Error::RegionNotFound(region.to_string()));
        }
        let selected: Vec<&CheckInRecord> = match scope_subcategory {
            Some(sub) => in_region
                .into_iter()
                .filter(|r| r.subcategory == sub)
                .collect(),
            None => in_region,
        };
        if selected.is_empty() {
            return Err(Error::UnknownUnit(
                scope_subcategory.unwrap_or_default().to_string(),
            ));
        }

        let mut venue_unit: BTreeMap<&str, &str> = BTreeMap::new();
        for r in &selected {
            let unit = match mode {
                AnalysisMode::Subcategory => r.subcategory.as_str(),
                AnalysisMode::Venue | AnalysisMode::VenueWithinSubcategory => r.venue_id.as_str(),
            };
            venue_unit.entry(r.venue_id.as_str()).or_insert(unit);
        }
        let unit_keys: Vec<String> = {
            let mut keys: Vec<&str> = venue_unit.values().copied().collect();
            keys.sort_unstable();
            keys.dedup();
            keys.into_iter().map(str::to_string).collect()
        };
        let venue_index: BTreeMap<&str, u32> = venue_unit
            .keys()
            .enumerate()
            .map(|(i, v)| (*v, i as u32))
            .collect();
        let unit_of_venue = venue_unit
            .values()
            .map(|u| unit_keys.binary_search_by(|k| k.as_str().cmp(u)).unwrap() as u32)
            .collect();

        let label = match scope_subcategory {
            Some(sub) => format!("{region}/subcategory={sub}"),
            None => region.to_string(),
        };
        Ok(Scope {
            label,
            genders: selected.iter().map(|r| r.gender).collect(),
            venue_of: selected
                .iter()
                .map(|r| venue_index[r.venue_id.as_str()])
                .collect(),
            unit_of_venue,
            unit_keys,
        })
    }

    pub fn n_venues(&self) -> usize {
        self.unit_of_venue.len()
    }

    pub fn unit_index(&self, key: &str) -> Result<usize> {
        self.unit_keys
            .binary_search_by(|k| k.as_str().cmp(key))
            .map_err(|_| Error::UnknownUnit(key.to_string()))
    }

    pub fn observed_counts(&self) -> UnitCounts {
        let mut counts = UnitCounts::zeroed(self.unit_keys.len());
        for (&g, &v) in self.genders.iter().zip(&self.venue_of) {
            counts.add(self.unit_of_venue[v as usize] as usize, g);
        }
        counts
    }

    pub fn require_both_genders(&self, counts: &UnitCounts) -> Result<()> {
        for (total, gender) in [(counts.total_male, "male"), (counts.total_female, "female")] {
            if total == 0 {
                return Err(Error::MissingGender {
                    scope: self.label.clone(),
                    gender: gender.into(),
                });
            }
        }
        Ok(())
    }
}

fn point(unit: AnalysisUnit, counts: &UnitCounts, index: usize) -> PopularityPoint {
    let (p_male, p_female) = counts.shares(index);
    PopularityPoint {
        unit,
        p_male,
        p_female,
        d_s: cross_gender_difference(p_male, p_female),
        n_checkins: counts.male[index] + counts.female[index],
    }
}

/// Popularity of a single unit within its scope.
pub fn popularity(records: &[CheckInRecord], unit: &AnalysisUnit) -> Result<PopularityPoint> {
    let scope = Scope::build(
        records,
        unit.mode,
        &unit.scope,
        unit.scope_subcategory.as_deref(),
    )?;
    let counts = scope.observed_counts();
    scope.require_both_genders(&counts)?;
    let index = scope.unit_index(&unit.key)?;
    Ok(point(unit.clone(), &counts, index))
}

/// A popularity point together with its max-normalized coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopularityRow {
    pub point: PopularityPoint,
    pub p_male_norm: f64,
    pub p_female_norm: f64,
}

/// Popularity of every unit in the scope, sorted by `|d_s|` descending then key.
///
/// The normalized pair divides both coordinates by the largest share on
/// either axis, which keeps the diagonal in place.
pub fn popularity_table(
    records: &[CheckInRecord],
    mode: AnalysisMode,
    region: &RegionSelector,
    scope_subcategory: Option<&str>,
) -> Result<Vec<PopularityRow>> {
    let scope = Scope::build(records, mode, region, scope_subcategory)?;
    let counts = scope.observed_counts();
    scope.require_both_genders(&counts)?;

    let mut points: Vec<PopularityPoint> = scope
        .unit_keys
        .iter()
        .enumerate()
        .map(|(i, key)| {
            let unit = AnalysisUnit {
                mode,
                key: key.clone(),
                scope: region.clone(),
                scope_subcategory: scope_subcategory.map(str::to_string),
            };
            point(unit, &counts, i)
        })
        .collect();
    points.sort_by(|a, b| {
        b.d_s
            .abs()
            .total_cmp(&a.d_s.abs())
            .then_with(|| a.unit.key.cmp(&b.unit.key))
    });

    let max = points
        .iter()
        .flat_map(|p| [p.p_male, p.p_female])
        .fold(0.0f64, f64::max);
    Ok(points
        .into_iter()
        .map(|point| PopularityRow {
            p_male_norm: point.p_male / max,
            p_female_norm: point.p_female / max,
            point,
        })
        .collect())
}

pub fn write_popularity_csv<W: Write>(rows: &[PopularityRow], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "unit_key",
        "mode",
        "p_male",
        "p_female",
        "p_male_norm",
        "p_female_norm",
        "d_s",
        "n_checkins",
    ])?;
    for row in rows {
        let p = &row.point;
        w.write_record([
            p.unit.key.clone(),
            p.unit.mode.to_string(),
            p.p_male.to_string(),
            p.p_female.to_string(),
            row.p_male_norm.to_string(),
            row.p_female_norm.to_string(),
            p.d_s.to_string(),
            p.n_checkins.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(user: &str, gender: Gender, venue: &str, sub: &str) -> CheckInRecord {
        CheckInRecord {
            user_id: user.into(),
            gender,
            venue_id: venue.into(),
            category: "Food".into(),
            subcategory: sub.into(),
            latitude: 0.0,
            longitude: 0.0,
            country: "Brazil".into(),
            city: None,
            timestamp: None,
        }
    }

    /// 10 female check-ins (5 in Café), 10 male (2 in Café).
    fn cafe_fixture() -> Vec<CheckInRecord> {
        let mut out = Vec::new();
        for i in 0..10 {
            let sub = if i < 5 { "Café" } else { "Bar" };
            out.push(rec(
                &format!("f{i}"),
                Gender::Female,
                &format!("{sub}-1"),
                sub,
            ));
            let sub = if i < 2 { "Café" } else { "Bar" };
            out.push(rec(
                &format!("m{i}"),
                Gender::Male,
                &format!("{sub}-1"),
                sub,
            ));
        }
        out
    }

    #[test]
    fn hand_counted_cafe() {
        let data = cafe_fixture();
        let unit = AnalysisUnit::subcategory(RegionSelector::country("Brazil"), "Café");
        let p = popularity(&data, &unit).unwrap();
        assert_eq!(p.p_female, 0.5);
        assert_eq!(p.p_male, 0.2);
        assert!((p.d_s - (-0.3 / 2f64.sqrt())).abs() < 1e-15);
        assert!((p.d_s + 0.2121).abs() < 1e-4);
        assert_eq!(p.n_checkins, 7);
    }

    #[test]
    fn female_only_unit_is_negative() {
        let mut data = cafe_fixture();
        data.retain(|r| !(r.subcategory == "Café" && r.gender == Gender::Male));
        let unit = AnalysisUnit::subcategory(RegionSelector::country("Brazil"), "Café");
        let p = popularity(&data, &unit).unwrap();
        assert_eq!(p.p_male, 0.0);
        assert_eq!(p.d_s, -p.p_female / 2f64.sqrt());
        assert!(p.d_s < 0.0);
    }

    #[test]
    fn balanced_unit_is_zero() {
        let data = vec![
            rec("a", Gender::Male, "v1", "Café"),
            rec("b", Gender::Female, "v1", "Café"),
            rec("c", Gender::Male, "v2", "Bar"),
            rec("d", Gender::Female, "v2", "Bar"),
        ];
        let unit = AnalysisUnit::subcategory(RegionSelector::country("Brazil"), "Café");
        assert_eq!(popularity(&data, &unit).unwrap().d_s, 0.0);
    }

    #[test]
    fn missing_gender_is_error() {
        let data = vec![rec("a", Gender::Male, "v1", "Café")];
        let unit = AnalysisUnit::subcategory(RegionSelector::country("Brazil"), "Café");
        assert!(matches!(
            popularity(&data, &unit),
            Err(Error::MissingGender { .. })
        ));
    }

    #[test]
    fn unknown_unit_and_mode_checks() {
        let data = cafe_fixture();
        let region = RegionSelector::country("Brazil");
        let unit = AnalysisUnit::subcategory(region.clone(), "Museum");
        assert!(matches!(
            popularity(&data, &unit),
            Err(Error::UnknownUnit(_))
        ));
        assert!(matches!(
            popularity_table(&data, AnalysisMode::VenueWithinSubcategory, &region, None),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            popularity_table(&data, AnalysisMode::Venue, &region, Some("Café")),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn single_unit_table_normalized() {
        let data = vec![
            rec("a", Gender::Male, "v1", "Café"),
            rec("b", Gender::Female, "v2", "Café"),
        ];
        let rows = popularity_table(
            &data,
            AnalysisMode::Subcategory,
            &RegionSelector::country("Brazil"),
            None,
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].p_male_norm.max(rows[0].p_female_norm), 1.0);
    }

    #[test]
    fn ties_sorted_by_key() {
        let data = vec![
            rec("a", Gender::Male, "v1", "Zoo"),
            rec("b", Gender::Female, "v1", "Zoo"),
            rec("c", Gender::Male, "v2", "Art"),
            rec("d", Gender::Female, "v2", "Art"),
        ];
        let rows = popularity_table(
            &data,
            AnalysisMode::Subcategory,
            &RegionSelector::country("Brazil"),
            None,
        )
        .unwrap();
        assert_eq!(rows[0].point.d_s, rows[1].point.d_s);
        assert_eq!(rows[0].point.unit.key, "Art");
        assert_eq!(rows[1].point.unit.key, "Zoo");
    }

    #[test]
    fn venue_within_subcategory_uses_subcategory_denominator() {
        let data = cafe_fixture();
        let rows = popularity_table(
            &data,
            AnalysisMode::VenueWithinSubcategory,
            &RegionSelector::country("Brazil"),
            Some("Café"),
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].point.p_male, 1.0);
        assert_eq!(rows[0].point.p_female, 1.0);
    }

    #[test]
    fn csv_header() {
        let data = cafe_fixture();
        let rows = popularity_table(
            &data,
            AnalysisMode::Subcategory,
            &RegionSelector::country("Brazil"),
            None,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_popularity_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "unit_key,mode,p_male,p_female,p_male_norm,p_female_norm,d_s,n_checkins\n"
        ));
        assert_eq!(text.lines().count(), 3);
    }
}
