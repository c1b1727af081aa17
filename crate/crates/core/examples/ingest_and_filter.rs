//! Ingest a small CSV with a few broken lines, then run the filtering protocol.
//!
//! ```bash
//! cargo run --example ingest_and_filter
//! ```

use gender_venues::filter::{apply_filters, FilterConfig};
use gender_venues::model::{ingest_checkins, write_checkins, InputFormat, RegionSelector};
use gender_venues::synth::{generate, SynthSpec, SynthSubcategory};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SynthSpec {
        n_users: 60,
        female_fraction: 0.5,
        subcategories: vec![
            SynthSubcategory::new("Café", 4),
            SynthSubcategory::new("Bar", 3).with_category("Nightlife"),
            // only one venue: dropped by the two-venue rule
            SynthSubcategory::new("Opera House", 1).with_category("Arts"),
            // outside the default whitelist
            SynthSubcategory::new("Gym", 3).with_category("Outdoors"),
        ],
        n_checkins: 800,
        region_name: "Brazil".into(),
        city: Some("São Paulo".into()),
        rng_seed: 7,
        bbox: Default::default(),
    };
    let mut csv = Vec::new();
    write_checkins(&generate(&spec)?, InputFormat::Csv, &mut csv)?;
    csv.extend_from_slice(b"u1,x,v1,Food,Caf\xc3\xa9,0,0,Brazil,,\n");
    csv.extend_from_slice(b"u2,female,v2,Food,Bar,95.0,0,Brazil,,\n");

    let (records, report) = ingest_checkins(csv.as_slice(), InputFormat::Csv)?;
    println!(
        "ingested {} of {} lines ({} bad gender, {} bad coordinates)",
        report.accepted, report.total_lines, report.rejected_gender, report.bad_coordinates
    );

    let region = RegionSelector::country("Brazil");
    let (kept, filter_report) = apply_filters(&records, &region, &FilterConfig::default())?;
    for stage in &filter_report.stages {
        println!(
            "{:<34} {:>5} -> {:>5}",
            stage.stage, stage.input, stage.output
        );
    }
    assert!(kept
        .iter()
        .all(|r| r.subcategory != "Opera House" && r.subcategory != "Gym"));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
