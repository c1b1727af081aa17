//! How often does the null model catch a planted gender preference?
//!
//! Generates seeded datasets with one skewed subcategory among neutral ones and
//! counts how often it is flagged in the right direction.
//!
//! ```bash
//! cargo run --release --example synthetic_power
//! ```

use gender_venues::model::RegionSelector;
use gender_venues::null_model::{run_null_model, Direction, NullModelConfig};
use gender_venues::popularity::AnalysisUnit;
use gender_venues::synth::{generate, SynthSpec, SynthSubcategory};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let trials = 20;
    let mut caught = 0;
    for trial in 0..trials {
        let mut subcategories: Vec<SynthSubcategory> = (0..8)
            .map(|i| SynthSubcategory::new(format!("Neutral {i}"), 3))
            .collect();
        subcategories.push(SynthSubcategory::new("Planted", 3).with_skew(-0.8));
        let spec = SynthSpec {
            n_users: 200,
            female_fraction: 0.5,
            subcategories,
            n_checkins: 2700,
            region_name: "Testland".into(),
            city: None,
            rng_seed: trial,
            bbox: Default::default(),
        };
        let records = generate(&spec)?;
        let unit = AnalysisUnit::subcategory(RegionSelector::country("Testland"), "Planted");
        let config = NullModelConfig {
            rng_seed: 1000 + trial,
            ..NullModelConfig::default()
        };
        let result = run_null_model(&records, &unit, &config)?;
        if result.significant && result.direction == Direction::Female {
            caught += 1;
        }
    }
    println!("planted preference detected in {caught} of {trials} datasets");
    assert!(caught * 10 >= trials * 9);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
