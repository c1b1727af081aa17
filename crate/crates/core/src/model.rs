//! Check-in records, venues, region selectors and external index tables,
//! together with the CSV/JSONL readers and writers for them.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column order of the check-in CSV schema.
pub const CHECKIN_COLUMNS: [&str; 10] = [
    "user_id",
    "gender",
    "venue_id",
    "category",
    "subcategory",
    "latitude",
    "longitude",
    "country",
    "city",
    "timestamp",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    /// Case-insensitive match against `male` / `female`; anything else is `None`.
    pub fn parse(raw: &str) -> Option<Gender> {
        let raw = raw.trim();
        if raw.eq_ignore_ascii_case("male") {
            Some(Gender::Male)
        } else if raw.eq_ignore_ascii_case("female") {
            Some(Gender::Female)
        } else {
            None
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }

    pub fn swapped(self) -> Gender {
        match self {
            Gender::Male => Gender::Female,
            Gender::Female => Gender::Male,
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One user-gender-venue observation. Venue attributes are carried on every line.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckInRecord {
    pub user_id: String,
    pub gender: Gender,
    pub venue_id: String,
    pub category: String,
    pub subcategory: String,
    pub latitude: f64,
    pub longitude: f64,
    pub country: String,
    pub city: Option<String>,
    pub timestamp: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Venue {
    pub venue_id: String,
    pub category: String,
    pub subcategory: String,
    pub latitude: f64,
    pub longitude: f64,
    pub country: String,
    pub city: Option<String>,
}

impl From<&CheckInRecord> for Venue {
    fn from(r: &CheckInRecord) -> Self {
        Venue {
            venue_id: r.venue_id.clone(),
            category: r.category.clone(),
            subcategory: r.subcategory.clone(),
            latitude: r.latitude,
            longitude: r.longitude,
            country: r.country.clone(),
            city: r.city.clone(),
        }
    }
}

/// Builds the venue table first-wins; a venue seen with two subcategories is an error.
pub fn derive_venues(records: &[CheckInRecord]) -> Result<BTreeMap<String, Venue>> {
    let mut venues = BTreeMap::new();
    for r in records {
        match venues.entry(r.venue_id.clone()) {
            Entry::Vacant(slot) => {
                slot.insert(Venue::from(r));
            }
            Entry::Occupied(slot) => {
                let first: &Venue = slot.get();
                if first.subcategory != r.subcategory {
                    return Err(Error::VenueConflict {
                        venue_id: r.venue_id.clone(),
                        first: first.subcategory.clone(),
                        second: r.subcategory.clone(),
                    });
                }
            }
        }
    }
    Ok(venues)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Country,
    City,
}

impl FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "country" => Ok(Granularity::Country),
            "city" => Ok(Granularity::City),
            other => Err(Error::InvalidConfig(format!(
                "unknown granularity `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RegionSelector {
    pub granularity: Granularity,
    pub name: String,
}

impl RegionSelector {
    pub fn country(name: impl Into<String>) -> Self {
        RegionSelector {
            granularity: Granularity::Country,
            name: name.into(),
        }
    }

    pub fn city(name: impl Into<String>) -> Self {
        RegionSelector {
            granularity: Granularity::City,
            name: name.into(),
        }
    }

    pub fn matches(&self, record: &CheckInRecord) -> bool {
        match self.granularity {
            Granularity::Country => record.country == self.name,
            Granularity::City => record.city.as_deref() == Some(self.name.as_str()),
        }
    }
}

impl fmt::Display for RegionSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = match self.granularity {
            Granularity::Country => "country",
            Granularity::City => "city",
        };
        write!(f, "{g}={}", self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    Csv,
    Jsonl,
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(InputFormat::Csv),
            "jsonl" => Ok(InputFormat::Jsonl),
            _ => Err(Error::UnknownFormat(s.to_string())),
        }
    }
}

/// Per-reason counts of rejected lines.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub total_lines: usize,
    pub accepted: usize,
    pub rejected_gender: usize,
    pub bad_coordinates: usize,
    pub missing_field: usize,
    pub malformed: usize,
}

impl IngestReport {
    pub fn rejected(&self) -> usize {
        self.rejected_gender + self.bad_coordinates + self.missing_field + self.malformed
    }

    fn tally(&mut self, rejection: Rejection) {
        match rejection {
            Rejection::Gender => self.rejected_gender += 1,
            Rejection::Coordinates => self.bad_coordinates += 1,
            Rejection::MissingField => self.missing_field += 1,
            Rejection::Malformed => self.malformed += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Rejection {
    Gender,
    Coordinates,
    MissingField,
    Malformed,
}

/// Raw field values of one line before validation.
#[derive(Default)]
struct RawLine<'a> {
    user_id: Option<&'a str>,
    gender: Option<&'a str>,
    venue_id: Option<&'a str>,
    category: Option<&'a str>,
    subcategory: Option<&'a str>,
    latitude: Option<RawNumber<'a>>,
    longitude: Option<RawNumber<'a>>,
    country: Option<&'a str>,
    city: Option<&'a str>,
    timestamp: Option<&'a str>,
}

enum RawNumber<'a> {
    Text(&'a str),
    Value(f64),
}

fn required(v: Option<&str>) -> std::result::Result<String, Rejection> {
    match v.map(str::trim) {
        Some(s) if !s.is_empty() => Ok(s.to_string()),
        _ => Err(Rejection::MissingField),
    }
}

fn coordinate(v: Option<RawNumber<'_>>) -> std::result::Result<f64, Rejection> {
    match v {
        None => Err(Rejection::MissingField),
        Some(RawNumber::Value(x)) => Ok(x),
        Some(RawNumber::Text(s)) => {
            let s = s.trim();
            if s.is_empty() {
                return Err(Rejection::MissingField);
            }
            s.parse::<f64>().map_err(|_| Rejection::Malformed)
        }
    }
}

impl RawLine<'_> {
    fn validate(self) -> std::result::Result<CheckInRecord, Rejection> {
        let user_id = required(self.user_id)?;
        let gender_raw = required(self.gender)?;
        let venue_id = required(self.venue_id)?;
        let category = required(self.category)?;
        let subcategory = required(self.subcategory)?;
        let country = required(self.country)?;
        let latitude = coordinate(self.latitude)?;
        let longitude = coordinate(self.longitude)?;

        let gender = Gender::parse(&gender_raw).ok_or(Rejection::Gender)?;
        if !(-90.0..=90.0).contains(&latitude) || !(-180.0..=180.0).contains(&longitude) {
            return Err(Rejection::Coordinates);
        }

        let city = self
            .city
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string);
        let timestamp = match self.timestamp.map(str::trim).filter(|s| !s.is_empty()) {
            None => None,
            Some(ts) => Some(
                DateTime::parse_from_rfc3339(ts)
                    .map_err(|_| Rejection::Malformed)?
                    .with_timezone(&Utc),
            ),
        };

        Ok(CheckInRecord {
            user_id,
            gender,
            venue_id,
            category,
            subcategory,
            latitude,
            longitude,
            country,
            city,
            timestamp,
        })
    }
}

/// Reads check-ins from `source`, keeping every well-formed line.
///
/// Lines are rejected for an undeclared gender, out-of-range coordinates, an
/// empty required field, or an unparseable value. More than half of the lines
/// rejected aborts the ingest. Blank lines are not counted.
pub fn ingest_checkins<R: Read>(
    mut source: R,
    format: InputFormat,
) -> Result<(Vec<CheckInRecord>, IngestReport)> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let text = std::str::from_utf8(&bytes)?;

    let (records, report) = match format {
        InputFormat::Csv => ingest_csv(text)?,
        InputFormat::Jsonl => ingest_jsonl(text),
    };

    if report.rejected() * 2 > report.total_lines {
        return Err(Error::TooManyRejected {
            rejected: report.rejected(),
            total: report.total_lines,
            detail: format!(
                "gender={}, coordinates={}, missing={}, malformed={}",
                report.rejected_gender,
                report.bad_coordinates,
                report.missing_field,
                report.malformed
            ),
        });
    }
    derive_venues(&records)?;
    Ok((records, report))
}

fn ingest_csv(text: &str) -> Result<(Vec<CheckInRecord>, IngestReport)> {
    let mut report = IngestReport::default();
    let mut records = Vec::new();
    if text.trim().is_empty() {
        return Ok((records, report));
    }

    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let mut column = [0usize; 10];
    for (slot, name) in column.iter_mut().zip(CHECKIN_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }

    for row in reader.records() {
        let row = match row {
            Ok(row) => row,
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(_) => {
                report.total_lines += 1;
                report.tally(Rejection::Malformed);
                continue;
            }
        };
        if row.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        report.total_lines += 1;
        if row.len() != headers.len() {
            report.tally(Rejection::Malformed);
            continue;
        }
        let field = |i: usize| row.get(column[i]);
        let raw = RawLine {
            user_id: field(0),
            gender: field(1),
            venue_id: field(2),
            category: field(3),
            subcategory: field(4),
            latitude: field(5).map(RawNumber::Text),
            longitude: field(6).map(RawNumber::Text),
            country: field(7),
            city: field(8),
            timestamp: field(9),
        };
        match raw.validate() {
            Ok(r) => {
                report.accepted += 1;
                records.push(r);
            }
            Err(why) => report.tally(why),
        }
    }
    Ok((records, report))
}

fn ingest_jsonl(text: &str) -> (Vec<CheckInRecord>, IngestReport) {
    let mut report = IngestReport::default();
    let mut records = Vec::new();

    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        report.total_lines += 1;
        let value: serde_json::Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(_) => {
                report.tally(Rejection::Malformed);
                continue;
            }
        };
        let Some(obj) = value.as_object() else {
            report.tally(Rejection::Malformed);
            continue;
        };

        let mut bad_type = false;
        let mut text_of = |key: &str| -> Option<&str> {
            match obj.get(key) {
                None | Some(serde_json::Value::Null) => None,
                Some(serde_json::Value::String(s)) => Some(s.as_str()),
                Some(_) => {
                    bad_type = true;
                    None
                }
            }
        };
        let user_id = text_of("user_id");
        let gender = text_of("gender");
        let venue_id = text_of("venue_id");
        let category = text_of("category");
        let subcategory = text_of("subcategory");
        let country = text_of("country");
        let city = text_of("city");
        let timestamp = text_of("timestamp");
        let mut number_of = |key: &str| -> Option<RawNumber<'_>> {
            match obj.get(key) {
                None | Some(serde_json::Value::Null) => None,
                Some(serde_json::Value::String(s)) => Some(RawNumber::Text(s.as_str())),
                Some(serde_json::Value::Number(n)) => n.as_f64().map(RawNumber::Value),
                Some(_) => {
                    bad_type = true;
                    None
                }
            }
        };
        let latitude = number_of("latitude");
        let longitude = number_of("longitude");
        if bad_type {
            report.tally(Rejection::Malformed);
            continue;
        }

        let raw = RawLine {
            user_id,
            gender,
            venue_id,
            category,
            subcategory,
            latitude,
            longitude,
            country,
            city,
            timestamp,
        };
        match raw.validate() {
            Ok(r) => {
                report.accepted += 1;
                records.push(r);
            }
            Err(why) => report.tally(why),
        }
    }
    (records, report)
}

#[derive(Serialize)]
struct RecordRow<'a> {
    user_id: &'a str,
    gender: &'static str,
    venue_id: &'a str,
    category: &'a str,
    subcategory: &'a str,
    latitude: f64,
    longitude: f64,
    country: &'a str,
    city: Option<&'a str>,
    timestamp: Option<String>,
}

impl<'a> From<&'a CheckInRecord> for RecordRow<'a> {
    fn from(r: &'a CheckInRecord) -> Self {
        RecordRow {
            user_id: &r.user_id,
            gender: r.gender.as_str(),
            venue_id: &r.venue_id,
            category: &r.category,
            subcategory: &r.subcategory,
            latitude: r.latitude,
            longitude: r.longitude,
            country: &r.country,
            city: r.city.as_deref(),
            timestamp: r
                .timestamp
                .map(|t| t.to_rfc3339_opts(SecondsFormat::AutoSi, true)),
        }
    }
}

/// Writes records in the same schema `ingest_checkins` reads.
pub fn write_checkins<W: Write>(
    records: &[CheckInRecord],
    format: InputFormat,
    mut sink: W,
) -> Result<()> {
    match format {
        InputFormat::Csv => {
            let mut writer = csv::Writer::from_writer(sink);
            writer.write_record(CHECKIN_COLUMNS)?;
            for r in records {
                let row = RecordRow::from(r);
                writer.write_record([
                    row.user_id.to_string(),
                    row.gender.to_string(),
                    row.venue_id.to_string(),
                    row.category.to_string(),
                    row.subcategory.to_string(),
                    row.latitude.to_string(),
                    row.longitude.to_string(),
                    row.country.to_string(),
                    row.city.unwrap_or_default().to_string(),
                    row.timestamp.unwrap_or_default(),
                ])?;
            }
            writer.flush()?;
        }
        InputFormat::Jsonl => {
            for r in records {
                serde_json::to_writer(&mut sink, &RecordRow::from(r))?;
                sink.write_all(b"\n")?;
            }
            sink.flush()?;
        }
    }
    Ok(())
}

/// A scalar per-country index such as GII or HDI, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexTable {
    pub index_name: String,
    pub entries: BTreeMap<String, f64>,
}

const BUNDLED_GII: &str = include_str!("../data/gii_2014.csv");
const BUNDLED_HDI: &str = include_str!("../data/hdi_2014.csv");

impl IndexTable {
    /// 2014 Gender Inequality Index for the fifteen study countries.
    pub fn bundled_gii() -> IndexTable {
        ingest_index_table(BUNDLED_GII.as_bytes(), "GII").expect("bundled GII table is valid")
    }

    /// 2014 Human Development Index for the fifteen study countries.
    pub fn bundled_hdi() -> IndexTable {
        ingest_index_table(BUNDLED_HDI.as_bytes(), "HDI").expect("bundled HDI table is valid")
    }

    pub fn get(&self, country: &str) -> Option<f64> {
        self.entries.get(country).copied()
    }
}

/// Parses a two-column `country,value` CSV. A leading `country,value` header is optional.
pub fn ingest_index_table<R: Read>(mut source: R, index_name: &str) -> Result<IndexTable> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let text = std::str::from_utf8(&bytes)?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut entries = BTreeMap::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = i + 1;
        if row.iter().all(str::is_empty) {
            continue;
        }
        if row.len() != 2 {
            return Err(Error::IndexTable {
                line,
                reason: format!("expected 2 columns, found {}", row.len()),
            });
        }
        let (country, raw) = (&row[0], &row[1]);
        if i == 0 && country.eq_ignore_ascii_case("country") && raw.eq_ignore_ascii_case("value") {
            continue;
        }
        if country.is_empty() {
            return Err(Error::IndexTable {
                line,
                reason: "empty country name".into(),
            });
        }
        let value: f64 = raw.parse().map_err(|_| Error::IndexTable {
            line,
            reason: format!("value `{raw}` is not a number"),
        })?;
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::IndexTable {
                line,
                reason: format!("value-out-of-range: {value} for {country}"),
            });
        }
        if entries.insert(country.to_string(), value).is_some() {
            return Err(Error::IndexTable {
                line,
                reason: format!("duplicate country `{country}`"),
            });
        }
    }
    Ok(IndexTable {
        index_name: index_name.to_string(),
        entries,
    })
}
