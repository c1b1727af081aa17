//! Gini coefficient and regional preference vectors.
//!
//! A region's preference vector holds, for each subcategory in a global
//! ordering, the Gini coefficient of the absolute venue-level cross-gender
//! differences measured inside that subcategory. Subcategories the region
//! does not have are zero.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CheckInRecord, Granularity, RegionSelector};
use crate::popularity::{popularity_table, AnalysisMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gini {
    pub value: f64,
    /// Set when every input was zero and the coefficient was defined as 0.
    pub all_zero: bool,
}

/// Gini coefficient of non-negative values:
/// `(n+1)/n - 2 * sum((n+1-i) * x_i) / (n * sum(x))` over ascending `x`.
pub fn gini(values: &[f64]) -> Result<Gini> {
    if values.is_empty() {
        return Err(Error::GiniInput("empty input".into()));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::GiniInput(format!(
            "value {bad} is negative or not finite"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let total: f64 = sorted.iter().sum();
    if total == 0.0 {
        return Ok(Gini {
            value: 0.0,
            all_zero: true,
        });
    }
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| (n - i as f64) * x)
        .sum();
    let value = (n + 1.0) / n - 2.0 * weighted / (n * total);
    Ok(Gini {
        value: value.clamp(0.0, 1.0),
        all_zero: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceVector {
    pub region: RegionSelector,
    pub dims: Vec<String>,
    pub values: Vec<f64>,
    /// Subcategories present in the region whose venue differences were
    /// undefined (one gender absent); their dimension is left at zero.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<String>,
}

impl PreferenceVector {
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    pub fn get(&self, dim: &str) -> Option<f64> {
        self.dims
            .iter()
            .position(|d| d == dim)
            .map(|i| self.values[i])
    }
}

/// Lexicographic union of the subcategories present in `records`.
pub fn global_dims(records: &[CheckInRecord]) -> Vec<String> {
    records
        .iter()
        .map(|r| r.subcategory.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_string)
        .collect()
}

/// Builds the preference vector of `region` from its filtered records.
pub fn build_preference_vector(
    records: &[CheckInRecord],
    region: &RegionSelector,
    global_dims: &[String],
) -> Result<PreferenceVector> {
    let position: BTreeMap<&str, usize> = global_dims
        .iter()
        .enumerate()
        .map(|(i, d)| (d.as_str(), i))
        .collect();
    let present: BTreeSet<&str> = records
        .iter()
        .filter(|r| region.matches(r))
        .map(|r| r.subcategory.as_str())
        .collect();

    let mut values = vec![0.0; global_dims.len()];
    let mut skipped = Vec::new();
    for sub in present {
        let Some(&slot) = position.get(sub) else {
            return Err(Error::DimensionMismatch(format!(
                "subcategory `{sub}` of {region} is not among the global dimensions"
            )));
        };
        let rows = match popularity_table(
            records,
            AnalysisMode::VenueWithinSubcategory,
            region,
            Some(sub),
        ) {
            Ok(rows) => rows,
            Err(Error::MissingGender { .. }) => {
                skipped.push(sub.to_string());
                continue;
            }
            Err(e) => return Err(e),
        };
        let magnitudes: Vec<f64> = rows.iter().map(|r| r.point.d_s.abs()).collect();
        values[slot] = gini(&magnitudes)?.value;
    }

    Ok(PreferenceVector {
        region: region.clone(),
        dims: global_dims.to_vec(),
        values,
        skipped,
    })
}

/// Companion metadata for an emitted vector file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorManifest {
    pub granularity: Granularity,
    pub global_dims: Vec<String>,
    pub regions: Vec<String>,
    #[serde(default)]
    pub provenance: BTreeMap<String, String>,
}

/// One row per region, header `region,<dim...>`.
pub fn write_vectors_csv<W: Write>(vectors: &[PreferenceVector], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let Some(first) = vectors.first() else {
        w.write_record(["region"])?;
        w.flush()?;
        return Ok(());
    };
    let mut header = vec!["region".to_string()];
    header.extend(first.dims.iter().cloned());
    w.write_record(&header)?;
    for v in vectors {
        if v.dims != first.dims {
            return Err(Error::DimensionMismatch(format!(
                "vector for {} uses a different dimension ordering",
                v.region
            )));
        }
        let mut row = vec![v.region.name.clone()];
        row.extend(v.values.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_vectors_csv<R: Read>(
    source: R,
    granularity: Granularity,
) -> Result<Vec<PreferenceVector>> {
    let mut reader = csv::Reader::from_reader(source);
    let header = reader.headers()?.clone();
    if header.get(0) != Some("region") {
        return Err(Error::MissingColumn("region".into()));
    }
    let dims: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row?;
        if row.len() != header.len() {
            return Err(Error::DimensionMismatch(format!(
                "row for `{}` has {} fields, header has {}",
                &row[0],
                row.len(),
                header.len()
            )));
        }
        let values = row
            .iter()
            .skip(1)
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::DimensionMismatch(format!("value `{v}` is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(PreferenceVector {
            region: RegionSelector {
                granularity,
                name: row[0].to_string(),
            },
            dims: dims.clone(),
            values,
            skipped: Vec::new(),
        });
    }
    Ok(out)
}
