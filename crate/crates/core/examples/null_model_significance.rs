//! Which subcategories differ between genders more than chance allows?
//! Runs both null-model methods over the same scope and prints the verdicts.
//!
//! ```bash
//! cargo run --example null_model_significance
//! ```

use gender_venues::model::RegionSelector;
use gender_venues::null_model::{run_null_model_batch, NullMethod, NullModelConfig};
use gender_venues::popularity::AnalysisMode;
use gender_venues::synth::{generate, SynthSpec, SynthSubcategory};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SynthSpec {
        n_users: 500,
        female_fraction: 0.5,
        subcategories: vec![
            SynthSubcategory::new("Nail Salon", 4).with_skew(-0.7),
            SynthSubcategory::new("Pub", 4).with_skew(0.5),
            SynthSubcategory::new("Bakery", 4),
            SynthSubcategory::new("Library", 4),
            SynthSubcategory::new("Museum", 4),
        ],
        n_checkins: 5000,
        region_name: "Japan".into(),
        city: None,
        rng_seed: 21,
        bbox: Default::default(),
    };
    let records = generate(&spec)?;
    let region = RegionSelector::country("Japan");

    for method in [NullMethod::Generative, NullMethod::GenderShuffle] {
        let config = NullModelConfig {
            method,
            rng_seed: 5,
            ..NullModelConfig::default()
        };
        let results =
            run_null_model_batch(&records, AnalysisMode::Subcategory, &region, None, &config)?;
        println!("{method:?}:");
        for r in &results {
            println!(
                "  {:<11} d={:>+8.4}  range=[{:+.4}, {:+.4}]  {:?}",
                r.unit.key, r.observed_d, r.delta_min, r.delta_max, r.direction
            );
        }
        let salon = results.iter().find(|r| r.unit.key == "Nail Salon").unwrap();
        assert!(salon.significant);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
