//! The command-line pipeline driven in-process: synth, analyze, vectors,
//! cluster and compare, each writing its artifacts and a manifest.
//!
//! ```bash
//! cargo run --example command_line_pipeline
//! ```

use std::fs;

use gender_venues::cli;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let root = dir.path();
    let path = |name: &str| root.join(name).display().to_string();

    // one dataset per country, concatenated into a single input file
    let countries = ["Brazil", "France", "Germany", "Japan", "Kuwait", "Spain"];
    let mut combined = String::new();
    for (i, country) in countries.iter().enumerate() {
        let skew = if i % 2 == 0 { 0.5 } else { -0.5 };
        let spec = serde_json::json!({
            "n_users": 150,
            "female_fraction": 0.5,
            "n_checkins": 2500,
            "region_name": country,
            "subcategories": [
                {"name": "Café", "n_venues": 5, "gender_skew": -skew},
                {"name": "Bar", "n_venues": 5, "category": "Nightlife", "gender_skew": skew},
                {"name": "Museum", "n_venues": 4, "category": "Arts"},
            ],
        });
        fs::write(root.join("spec.json"), serde_json::to_vec(&spec)?)?;
        let out = path(&format!("{country}.csv"));
        let seed = i.to_string();
        let code = cli::run([
            "gender-venues",
            "synth",
            "--spec",
            &path("spec.json"),
            "--out",
            &out,
            "--seed",
            &seed,
        ]);
        assert_eq!(code, 0);
        let text = fs::read_to_string(&out)?;
        let body = if combined.is_empty() {
            &text[..]
        } else {
            text.split_once('\n').unwrap().1
        };
        combined.push_str(body);
    }
    fs::write(root.join("checkins.csv"), combined)?;

    let steps: Vec<Vec<String>> = vec![
        vec![
            "analyze",
            "--input",
            &path("checkins.csv"),
            "--country",
            "Brazil",
            "--out-dir",
            &path("analyze"),
        ],
        vec![
            "vectors",
            "--input",
            &path("checkins.csv"),
            "--out-dir",
            &path("vectors"),
        ],
        vec![
            "cluster",
            "--vectors",
            &path("vectors"),
            "--k",
            "2",
            "--restarts",
            "4",
            "--out-dir",
            &path("cluster"),
        ],
        vec![
            "compare",
            "--vectors",
            &path("vectors"),
            "--bundled",
            "gii",
            "--bundled",
            "hdi",
            "--all-anchors",
            "--permutations",
            "50",
            "--out-dir",
            &path("compare"),
        ],
    ]
    .into_iter()
    .map(|s| s.into_iter().map(String::from).collect())
    .collect();
    for step in steps {
        let code = cli::run(std::iter::once("gender-venues".to_string()).chain(step.clone()));
        assert_eq!(code, 0, "step {:?} failed", step[0]);
    }

    println!(
        "{}",
        fs::read_to_string(root.join("cluster/clusters.json"))?
    );
    let comparison = fs::read_to_string(root.join("compare/comparison.csv"))?;
    for line in comparison.lines().take(5) {
        println!("{line}");
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
