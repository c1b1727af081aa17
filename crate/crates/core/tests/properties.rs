//! Property suites for the numeric core and the data path.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, TimeZone, Utc};
use gender_venues::cluster::{cluster_regions, cosine_distance};
use gender_venues::compare::{average_ranks, compare_with_index, spearman};
use gender_venues::filter::{apply_filters, FilterConfig};
use gender_venues::model::{
    ingest_checkins, write_checkins, CheckInRecord, Gender, IndexTable, InputFormat, RegionSelector,
};
use gender_venues::null_model::{run_null_model, NullMethod, NullModelConfig};
use gender_venues::popularity::{
    cross_gender_difference, popularity_table, AnalysisMode, AnalysisUnit,
};
use gender_venues::preference::gini;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{by_name, vector};

fn lorenz_gini(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let total: f64 = sorted.iter().sum();
    let (mut prev, mut cum, mut area) = (0.0, 0.0, 0.0);
    for x in &sorted {
        cum += x;
        area += (prev + cum / total) / (2.0 * n);
        prev = cum / total;
    }
    1.0 - 2.0 * area
}

fn nonneg_vec() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.0..100.0f64], 1..50)
        .prop_filter("not all zero", |v| v.iter().any(|x| *x > 0.0))
}

proptest! {
    #[test]
    fn gini_matches_lorenz_area(values in nonneg_vec()) {
        let g = gini(&values).unwrap().value;
        prop_assert!((g - lorenz_gini(&values)).abs() <= 1e-9);
        prop_assert!((0.0..=1.0).contains(&g));
    }

    #[test]
    fn gini_scale_and_order_invariant(values in nonneg_vec(), c in 1e-3..1e3f64, rot in 0usize..50) {
        let g = gini(&values).unwrap().value;
        let scaled: Vec<f64> = values.iter().map(|x| x * c).collect();
        prop_assert!((gini(&scaled).unwrap().value - g).abs() <= 1e-12);
        let mut rotated = values.clone();
        rotated.rotate_left(rot % values.len());
        prop_assert_eq!(gini(&rotated).unwrap().value, g);
    }

    #[test]
    fn difference_is_distance_to_diagonal(m in 0.0..=1.0f64, f in 0.0..=1.0f64) {
        let foot = (m + f) / 2.0;
        let distance = ((m - foot).powi(2) + (f - foot).powi(2)).sqrt();
        let d = cross_gender_difference(m, f);
        prop_assert!((d.abs() - distance).abs() <= 1e-12);
        prop_assert_eq!(cross_gender_difference(f, m), -d);
    }

    #[test]
    fn spearman_shortcut_without_ties(pairs in prop::collection::btree_map(-1_000_000i64..1_000_000, -1_000_000i64..1_000_000, 3..40)) {
        let a: Vec<f64> = pairs.keys().map(|k| *k as f64).collect();
        let mut seen = BTreeSet::new();
        let b: Vec<f64> = pairs.values().map(|v| *v as f64).collect();
        prop_assume!(pairs.values().all(|v| seen.insert(*v)));
        let n = a.len() as f64;
        let (ra, rb) = (average_ranks(&a), average_ranks(&b));
        let sum_sq: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y).powi(2)).sum();
        let shortcut = 1.0 - 6.0 * sum_sq / (n * (n * n - 1.0));
        let s = spearman(&a, &b).unwrap();
        prop_assert!((s.rho - shortcut).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&s.p_value));
    }

    #[test]
    fn spearman_ignores_monotone_transforms(
        a in prop::collection::vec(-5.0..5.0f64, 4..30),
        seed in any::<u64>(),
        scale in 0.1..10.0f64,
        shift in -3.0..3.0f64,
    ) {
        let b: Vec<f64> = a.iter().enumerate()
            .map(|(i, x)| (x * 7.0 + (seed.rotate_left(i as u32) % 11) as f64).sin())
            .collect();
        prop_assume!(a.iter().any(|x| *x != a[0]) && b.iter().any(|x| *x != b[0]));
        let base = spearman(&a, &b).unwrap();
        let a2: Vec<f64> = a.iter().map(|x| x.exp() * scale + shift).collect();
        let moved = spearman(&a2, &b).unwrap();
        prop_assert!((moved.rho - base.rho).abs() <= 1e-12);
        let flipped: Vec<f64> = a.iter().map(|x| -x).collect();
        prop_assert!((spearman(&flipped, &b).unwrap().rho + base.rho).abs() <= 1e-12);
        prop_assert!((spearman(&b, &a).unwrap().rho - base.rho).abs() <= 1e-12);
    }
}

fn ident() -> impl Strategy<Value = String> {
    "[A-Za-z][A-Za-z0-9 é,\"-]{0,8}[A-Za-z0-9]".prop_map(|s| s)
}

fn timestamp() -> impl Strategy<Value = Option<DateTime<Utc>>> {
    prop::option::of((0i64..2_000_000_000).prop_map(|s| Utc.timestamp_opt(s, 0).unwrap()))
}

fn arbitrary_record() -> impl Strategy<Value = CheckInRecord> {
    (
        (ident(), any::<bool>(), ident(), ident(), ident()),
        (
            -90.0..=90.0f64,
            -180.0..=180.0f64,
            ident(),
            prop::option::of(ident()),
            timestamp(),
        ),
    )
        .prop_map(
            |((user, male, venue, category, sub), (lat, lon, country, city, ts))| CheckInRecord {
                user_id: user,
                gender: if male { Gender::Male } else { Gender::Female },
                // venue ids carry their subcategory so the venue table stays consistent
                venue_id: format!("{venue}/{sub}"),
                category,
                subcategory: sub,
                latitude: lat,
                longitude: lon,
                country,
                city,
                timestamp: ts,
            },
        )
}

/// Small pools so that venues, users and subcategories collide often.
fn pooled_records(max: usize) -> impl Strategy<Value = Vec<CheckInRecord>> {
    let one = (
        0..12usize,
        any::<bool>(),
        0..10usize,
        0..3usize,
        prop::option::of(0i64..50),
    )
        .prop_map(|(user, male, venue, cat, ts)| {
            let categories = ["Food", "Nightlife", "Outdoors"];
            CheckInRecord {
                user_id: format!("u{user}"),
                gender: if male { Gender::Male } else { Gender::Female },
                venue_id: format!("v{venue}"),
                category: categories[venue % 3].to_string(),
                subcategory: format!("s{}", venue % 4),
                latitude: 0.0,
                longitude: 0.0,
                country: if cat == 2 && venue == 9 {
                    "Elsewhere".into()
                } else {
                    "Testland".into()
                },
                city: None,
                timestamp: ts.map(|s| Utc.timestamp_opt(s, 0).unwrap()),
            }
        });
    prop::collection::vec(one, 0..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ingest_round_trips(records in prop::collection::vec(arbitrary_record(), 0..20)) {
        let mut seen = BTreeMap::new();
        let records: Vec<_> = records.into_iter()
            .filter(|r| seen.insert(r.venue_id.clone(), r.clone()).is_none())
            .collect();
        for format in [InputFormat::Csv, InputFormat::Jsonl] {
            let mut bytes = Vec::new();
            write_checkins(&records, format, &mut bytes).unwrap();
            let (back, report) = ingest_checkins(bytes.as_slice(), format).unwrap();
            prop_assert_eq!(report.rejected(), 0);
            prop_assert_eq!(&back, &records);
            let (again, _) = ingest_checkins(bytes.as_slice(), format).unwrap();
            prop_assert_eq!(again, back);
        }
    }

    #[test]
    fn filter_is_idempotent_and_meets_thresholds(
        records in pooled_records(200),
        min_checkins in 1usize..6,
        min_venues in 1usize..3,
        dedupe in any::<bool>(),
        cap in prop::option::of(5usize..150),
    ) {
        let region = RegionSelector::country("Testland");
        let config = FilterConfig {
            min_checkins_per_venue: min_checkins,
            min_venues_per_subcategory: min_venues,
            dedupe_user_venue: dedupe,
            max_checkins_per_region: cap,
            rng_seed: 3,
            ..FilterConfig::default()
        };
        prop_assume!(records.iter().any(|r| region.matches(r)));
        let (once, report) = apply_filters(&records, &region, &config).unwrap();
        let mut per_venue = BTreeMap::<&str, usize>::new();
        let mut per_sub = BTreeMap::<&str, BTreeSet<&str>>::new();
        let mut pairs = BTreeSet::new();
        for r in &once {
            prop_assert!(region.matches(r));
            prop_assert!(config.allowed_categories.contains(&r.category));
            *per_venue.entry(&r.venue_id).or_default() += 1;
            per_sub.entry(&r.subcategory).or_default().insert(&r.venue_id);
            if dedupe {
                prop_assert!(pairs.insert((&r.user_id, &r.venue_id)));
            }
        }
        prop_assert!(per_venue.values().all(|c| *c >= min_checkins));
        prop_assert!(per_sub.values().all(|v| v.len() >= min_venues));
        if let Some(cap) = cap {
            prop_assert!(once.len() <= cap);
        }
        prop_assert_eq!(report.stages.last().map(|s| s.output).unwrap_or(0), once.len());
        if !once.is_empty() {
            let (twice, _) = apply_filters(&once, &region, &config).unwrap();
            prop_assert_eq!(twice, once);
        }
    }

    #[test]
    fn difference_flips_under_gender_swap(records in pooled_records(150)) {
        let region = RegionSelector::country("Testland");
        let original = popularity_table(&records, AnalysisMode::Venue, &region, None);
        let swapped: Vec<_> = records.iter().cloned()
            .map(|mut r| { r.gender = r.gender.swapped(); r })
            .collect();
        let flipped = popularity_table(&swapped, AnalysisMode::Venue, &region, None);
        match (original, flipped) {
            (Ok(a), Ok(b)) => {
                let a: BTreeMap<_, _> = a.iter().map(|r| (r.point.unit.key.clone(), r.point.d_s)).collect();
                let b: BTreeMap<_, _> = b.iter().map(|r| (r.point.unit.key.clone(), r.point.d_s)).collect();
                prop_assert_eq!(a.len(), b.len());
                for (k, d) in &a {
                    prop_assert!((d + b[k]).abs() <= 1e-15);
                }
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "one side failed: {:?} / {:?}", a.is_ok(), b.is_ok()),
        }
    }
}

fn balanced_records(n: usize, seed: u64) -> Vec<CheckInRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let venue = rng.gen_range(0..6);
            let gender = if rng.gen_bool(0.5) {
                Gender::Male
            } else {
                Gender::Female
            };
            common::record(
                &format!("u{}", i % 37),
                gender,
                &format!("v{venue}"),
                "Food",
                &format!("s{}", venue % 2),
            )
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn null_distribution_centres_on_zero(seed in any::<u64>(), rng_seed in any::<u64>(), shuffle in any::<bool>()) {
        let records: Vec<CheckInRecord> = balanced_records(400, seed);
        let unit = AnalysisUnit::venue(
            RegionSelector::country("Testland"),
            "v0",
        );
        let config = NullModelConfig {
            k: 200,
            method: if shuffle { NullMethod::GenderShuffle } else { NullMethod::Generative },
            rng_seed,
            ..NullModelConfig::default()
        };
        let result = run_null_model(&records, &unit, &config).unwrap();
        let k = result.null_distribution.len() as f64;
        let mean = result.null_distribution.iter().sum::<f64>() / k;
        let sd = (result.null_distribution.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
        prop_assert!(mean.abs() <= 5.0 * sd / k.sqrt() + 1e-3, "mean {} sd {}", mean, sd);
    }

    #[test]
    fn wider_confidence_wider_range(seed in any::<u64>(), lo in 0.5..0.9f64, hi in 0.9..0.999f64) {
        let records = balanced_records(300, seed);
        let unit = AnalysisUnit::subcategory(RegionSelector::country("Testland"), "s0");
        let run = |confidence| run_null_model(&records, &unit, &NullModelConfig {
            confidence,
            rng_seed: seed,
            ..NullModelConfig::default()
        }).unwrap();
        let (narrow, wide) = (run(lo), run(hi));
        prop_assert_eq!(&narrow.null_distribution, &wide.null_distribution);
        prop_assert!(wide.delta_min <= narrow.delta_min);
        prop_assert!(wide.delta_max >= narrow.delta_max);
        if narrow.observed_d >= narrow.delta_min && narrow.observed_d <= narrow.delta_max {
            prop_assert!(!wide.significant);
        }
    }
}

fn positive_vectors(n: usize, dims: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(
        prop::collection::vec(0.0..1.0f64, dims)
            .prop_filter("non-zero", |v| v.iter().any(|x| *x > 1e-3)),
        n,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn clustering_ignores_scale_and_inertia_never_rises(
        rows in positive_vectors(12, 4),
        scales in prop::collection::vec(0.01..100.0f64, 12),
        k in 1usize..5,
        seed in any::<u64>(),
    ) {
        let vectors: Vec<_> = rows.iter().enumerate().map(|(i, v)| vector(&format!("r{i:02}"), v)).collect();
        let scaled: Vec<_> = rows.iter().zip(&scales).enumerate()
            .map(|(i, (v, c))| vector(&format!("r{i:02}"), &v.iter().map(|x| x * c).collect::<Vec<_>>()))
            .collect();
        let a = cluster_regions(&vectors, k, seed, 100).unwrap();
        let b = cluster_regions(&scaled, k, seed, 100).unwrap();
        prop_assert_eq!(&a.assignments, &b.assignments);
        for w in a.inertia_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "trace {:?}", a.inertia_trace);
        }
        let members: BTreeSet<usize> = a.assignments.values().copied().collect();
        prop_assert_eq!(members, (1..=k).collect::<BTreeSet<_>>());
    }

    #[test]
    fn comparison_invariant_under_affine_index_and_vector_scale(
        rows in positive_vectors(15, 5),
        a in 0.1..5.0f64,
        b in -1.0..1.0f64,
        c in 0.1..10.0f64,
    ) {
        let gii = IndexTable::bundled_gii();
        let names: Vec<String> = gii.entries.keys().cloned().collect();
        let vectors = by_name(names.iter().zip(&rows).map(|(n, v)| vector(n, v)).collect());
        let scaled = by_name(names.iter().zip(&rows)
            .map(|(n, v)| vector(n, &v.iter().map(|x| x * c).collect::<Vec<_>>()))
            .collect());
        let shifted = IndexTable {
            index_name: "shifted".into(),
            entries: gii.entries.iter().map(|(k, v)| (k.clone(), a * v + b)).collect(),
        };
        let base = compare_with_index(&vectors, &gii, "Brazil");
        let moved = compare_with_index(&scaled, &shifted, "Brazil");
        match (base, moved) {
            (Ok(x), Ok(y)) => {
                prop_assert!((x.rho - y.rho).abs() <= 1e-9, "{} vs {}", x.rho, y.rho);
                for (k, d) in &x.d2 {
                    prop_assert!((d - y.d2[k]).abs() <= 1e-12);
                    prop_assert!((cosine_distance(&vectors[k].values, &vectors["Brazil"].values) - d).abs() <= 1e-12);
                }
            }
            (Err(_), Err(_)) => {}
            (x, y) => prop_assert!(false, "{:?} / {:?}", x.err(), y.err()),
        }
    }
}
