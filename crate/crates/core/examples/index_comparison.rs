//! Compares a country's index-based neighbours with its preference-vector
//! neighbours, using the bundled 2014 Gender Inequality Index.
//!
//! The preference-vector distances for Brazil are the published ones, so the
//! rank correlation can be checked by hand.
//!
//! ```bash
//! cargo run --example index_comparison
//! ```

use gender_venues::compare::{index_distances, spearman};
use gender_venues::model::IndexTable;

/// Cosine distances from Brazil's vector to the other 14 countries, in name order.
pub const BRAZIL_VECTOR_DISTANCES: [f64; 14] = [
    0.754, 0.757, 0.414, 0.556, 0.328, 0.249, 0.563, 0.795, 0.73, 0.324, 0.379, 0.795, 0.601, 0.378,
];

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let gii = IndexTable::bundled_gii();
    let d1 = index_distances(&gii, "Brazil")?;
    println!("{:<22} {:>6} {:>6}", "country", "GII", "vector");
    for ((country, d), v) in d1.iter().zip(BRAZIL_VECTOR_DISTANCES) {
        println!("{country:<22} {d:>6.3} {v:>6.3}");
    }
    let a: Vec<f64> = d1.values().copied().collect();
    let s = spearman(&a, &BRAZIL_VECTOR_DISTANCES)?;
    println!(
        "\nrho = {:.3}, p = {:.4} over {} countries",
        s.rho, s.p_value, s.n
    );
    assert!((s.rho - 0.665).abs() < 0.02);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
