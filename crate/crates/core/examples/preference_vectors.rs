//! Gini coefficients and per-region preference vectors.
//!
//! Each dimension of a region's vector is the Gini coefficient of the absolute
//! venue-level gender differences inside one subcategory.
//!
//! ```bash
//! cargo run --example preference_vectors
//! ```

use gender_venues::filter::{apply_filters, FilterConfig};
use gender_venues::model::RegionSelector;
use gender_venues::preference::{build_preference_vector, gini, global_dims, write_vectors_csv};
use gender_venues::synth::{generate, SynthSpec, SynthSubcategory};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for values in [
        vec![3.0, 3.0, 3.0],
        vec![0.0, 1.0],
        vec![1.0, 2.0, 3.0],
        vec![0.0, 0.0, 5.0],
    ] {
        println!("gini({values:?}) = {:.4}", gini(&values)?.value);
    }

    let mut records = Vec::new();
    for (seed, country, skew) in [(1, "Germany", 0.0), (2, "Kuwait", 0.6), (3, "Mexico", 0.3)] {
        let spec = SynthSpec {
            n_users: 300,
            female_fraction: 0.5,
            subcategories: vec![
                SynthSubcategory::new("Café", 6).with_skew(-skew),
                SynthSubcategory::new("Bar", 5)
                    .with_skew(skew)
                    .with_category("Nightlife"),
                SynthSubcategory::new("College", 4).with_category("Education"),
            ],
            n_checkins: 3000,
            region_name: country.into(),
            city: None,
            rng_seed: seed,
            bbox: Default::default(),
        };
        let (kept, _) = apply_filters(
            &generate(&spec)?,
            &RegionSelector::country(country),
            &FilterConfig::default(),
        )?;
        records.extend(kept);
    }

    let dims = global_dims(&records);
    let vectors = ["Germany", "Kuwait", "Mexico"]
        .iter()
        .map(|c| build_preference_vector(&records, &RegionSelector::country(*c), &dims))
        .collect::<Result<Vec<_>, _>>()?;
    let mut csv = Vec::new();
    write_vectors_csv(&vectors, &mut csv)?;
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
