//! Spherical k-means over preference vectors.
//!
//! Two groups of regions, each dominated by a different dimension, should come
//! back as two clusters whatever the seed.
//!
//! ```bash
//! cargo run --example cluster_regions
//! ```

use gender_venues::cluster::{adjusted_rand_index, cluster_regions, cluster_regions_best};
use gender_venues::model::RegionSelector;
use gender_venues::preference::PreferenceVector;

fn vector(name: &str, values: [f64; 3]) -> PreferenceVector {
    PreferenceVector {
        region: RegionSelector::country(name),
        dims: vec!["Bar".into(), "Café".into(), "Mosque".into()],
        values: values.to_vec(),
        skipped: Vec::new(),
    }
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let vectors = vec![
        vector("France", [0.61, 0.12, 0.05]),
        vector("Germany", [0.55, 0.09, 0.02]),
        vector("Kuwait", [0.04, 0.10, 0.72]),
        vector("Saudi Arabia", [0.07, 0.15, 0.66]),
        vector("Spain", [0.49, 0.18, 0.08]),
        vector("United Arab Emirates", [0.11, 0.08, 0.58]),
    ];

    let first = cluster_regions(&vectors, 2, 0, 100)?;
    let truth: Vec<usize> = first.assignments.values().copied().collect();
    for seed in 1..10 {
        let other = cluster_regions(&vectors, 2, seed, 100)?;
        let labels: Vec<usize> = other.assignments.values().copied().collect();
        assert_eq!(adjusted_rand_index(&truth, &labels), 1.0);
    }

    let best = cluster_regions_best(&vectors, 2, 0, 5, 100)?;
    for c in best.report().clusters {
        println!("cluster {}: {}", c.id, c.members.join(", "));
    }
    println!(
        "inertia {:.6} after {} iterations",
        best.inertia, best.iterations
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
