//! Male and female popularity of each subcategory, plus the venues of one
//! subcategory, sorted by the size of the gender difference.
//!
//! ```bash
//! cargo run --example popularity_table
//! ```

use gender_venues::model::RegionSelector;
use gender_venues::popularity::{popularity_table, write_popularity_csv, AnalysisMode};
use gender_venues::synth::{generate, SynthSpec, SynthSubcategory};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SynthSpec {
        n_users: 400,
        female_fraction: 0.45,
        subcategories: vec![
            SynthSubcategory::new("Café", 6).with_skew(-0.4),
            SynthSubcategory::new("Soccer Stadium", 3)
                .with_skew(0.6)
                .with_category("Arts"),
            SynthSubcategory::new("Restaurant", 8).with_weight(2.0),
            SynthSubcategory::new("University", 4).with_category("Education"),
        ],
        n_checkins: 6000,
        region_name: "Spain".into(),
        city: None,
        rng_seed: 3,
        bbox: Default::default(),
    };
    let records = generate(&spec)?;
    let region = RegionSelector::country("Spain");

    let rows = popularity_table(&records, AnalysisMode::Subcategory, &region, None)?;
    println!(
        "{:<16} {:>8} {:>8} {:>8}",
        "subcategory", "p_male", "p_female", "d"
    );
    for row in &rows {
        let p = &row.point;
        println!(
            "{:<16} {:>8.4} {:>8.4} {:>+8.4}",
            p.unit.key, p.p_male, p.p_female, p.d_s
        );
    }
    // negative differences lean female
    let cafe = rows.iter().find(|r| r.point.unit.key == "Café").unwrap();
    assert!(cafe.point.d_s < 0.0);

    let venues = popularity_table(
        &records,
        AnalysisMode::VenueWithinSubcategory,
        &region,
        Some("Café"),
    )?;
    let mut csv = Vec::new();
    write_popularity_csv(&venues, &mut csv)?;
    print!("\n{}", String::from_utf8(csv)?);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
