//! The `gender-venues` command line.
//!
//! Every setting can come from a flag or from a JSON file passed with
//! `--config`; flags win. Exit codes: 0 success, 1 runtime or domain error,
//! 2 usage error.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::cluster::cluster_regions_best;
use crate::compare::{compare_with_index, random_baseline, write_comparison_csv, ComparisonRow};
use crate::emit::{file_stem, sha256_hex, to_json_bytes, ArtifactSink, RunManifest};
use crate::error::Error;
use crate::filter::{apply_filters, FilterConfig, FilterReport};
use crate::model::{
    ingest_checkins, ingest_index_table, write_checkins, CheckInRecord, Granularity, IndexTable,
    InputFormat, RegionSelector,
};
use crate::null_model::{run_null_model_batch, NullMethod, NullModelConfig, NullModelSummary};
use crate::popularity::{popularity_table, write_popularity_csv, AnalysisMode};
use crate::preference::{
    build_preference_vector, global_dims, read_vectors_csv, write_vectors_csv, PreferenceVector,
    VectorManifest,
};
use crate::synth::{generate, SynthSpec};

/// Environment variable consulted for the default output directory.
pub const OUT_DIR_ENV: &str = "GENDER_VENUES_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "gender-venues",
    version,
    about = "Cross-gender venue preference analysis"
)]
pub struct Cli {
    /// JSON file with default settings; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads for parallel stages (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a check-in file and print the ingest report.
    IngestCheck(IngestArgs),
    /// Popularity table and null-model significance for one region.
    Analyze(AnalyzeArgs),
    /// Build preference vectors for a set of regions.
    Vectors(VectorsArgs),
    /// Cluster regions by their preference vectors.
    Cluster(ClusterArgs),
    /// Compare preference vectors against scalar indices.
    Compare(CompareArgs),
    /// Generate a synthetic check-in dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// csv or jsonl; defaults to the file extension.
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Args, Default)]
pub struct FilterFlags {
    #[arg(long)]
    pub min_checkins_per_venue: Option<usize>,
    #[arg(long)]
    pub min_venues_per_subcategory: Option<usize>,
    /// Keep repeated check-ins by the same user at the same venue.
    #[arg(long)]
    pub no_dedupe: bool,
    /// Comma-separated category whitelist.
    #[arg(long, value_delimiter = ',')]
    pub categories: Option<Vec<String>>,
    #[arg(long)]
    pub max_checkins_per_region: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, conflicts_with = "city", required_unless_present = "city")]
    pub country: Option<String>,
    #[arg(long)]
    pub city: Option<String>,
    /// subcategory, venue or venue_within_subcategory.
    #[arg(long)]
    pub mode: Option<String>,
    /// Scope subcategory for venue_within_subcategory mode.
    #[arg(long)]
    pub subcategory: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Null-model replicates.
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub confidence: Option<f64>,
    /// generative or gender_shuffle.
    #[arg(long)]
    pub method: Option<String>,
    #[command(flatten)]
    pub filter: FilterFlags,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VectorsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// country or city.
    #[arg(long)]
    pub granularity: Option<String>,
    /// Comma-separated region names; defaults to every region in the input.
    #[arg(long, value_delimiter = ',')]
    pub regions: Option<Vec<String>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub filter: FilterFlags,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Directory written by `vectors`, or a vectors CSV file.
    #[arg(long)]
    pub vectors: PathBuf,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Independent runs; the lowest-inertia one is kept.
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub vectors: PathBuf,
    /// Index table CSV (country,value); repeatable. The file stem names the index.
    #[arg(long)]
    pub index: Vec<PathBuf>,
    /// Use a bundled 2014 table: gii or hdi. Repeatable.
    #[arg(long)]
    pub bundled: Vec<String>,
    #[arg(long, conflicts_with = "all_anchors")]
    pub anchor: Vec<String>,
    #[arg(long)]
    pub all_anchors: bool,
    #[arg(long)]
    pub permutations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub format: Option<String>,
    /// Overrides the seed in the spec file.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Settings accepted from `--config`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub format: Option<String>,
    pub out_dir: Option<PathBuf>,
    pub mode: Option<String>,
    pub subcategory: Option<String>,
    pub replicates: Option<usize>,
    pub confidence: Option<f64>,
    pub method: Option<String>,
    pub granularity: Option<String>,
    pub min_checkins_per_venue: Option<usize>,
    pub min_venues_per_subcategory: Option<usize>,
    pub dedupe_user_venue: Option<bool>,
    pub categories: Option<Vec<String>>,
    pub max_checkins_per_region: Option<usize>,
    pub k: Option<usize>,
    pub restarts: Option<usize>,
    pub max_iter: Option<usize>,
    pub permutations: Option<usize>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(e.into())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}\n\nRun with --help for usage.");
            2
        }
        Err(CliError::Run(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn execute(cli: Cli) -> CliResult<()> {
    let config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    let threads = cli.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} worker threads: {e}")))?;
    pool.install(|| match cli.command {
        Command::IngestCheck(args) => cmd_ingest_check(&args, &config),
        Command::Analyze(args) => cmd_analyze(&args, &config),
        Command::Vectors(args) => cmd_vectors(&args, &config),
        Command::Cluster(args) => cmd_cluster(&args, &config),
        Command::Compare(args) => cmd_compare(&args, &config),
        Command::Synth(args) => cmd_synth(&args, &config),
    })
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_flag<T: std::str::FromStr<Err = Error>>(value: Option<&str>, default: T) -> CliResult<T> {
    match value {
        Some(v) => v.parse().map_err(|e: Error| usage(e.to_string())),
        None => Ok(default),
    }
}

fn resolve_format(path: &Path, flag: Option<&str>, config: &FileConfig) -> CliResult<InputFormat> {
    if let Some(f) = flag.or(config.format.as_deref()) {
        return f.parse().map_err(|e: Error| usage(e.to_string()));
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("jsonl") => Ok(InputFormat::Jsonl),
        _ => Ok(InputFormat::Csv),
    }
}

fn resolve_out_dir(flag: Option<&Path>, config: &FileConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.out_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn resolve_filter(flags: &FilterFlags, config: &FileConfig, seed: u64) -> FilterConfig {
    let defaults = FilterConfig::default();
    FilterConfig {
        min_checkins_per_venue: flags
            .min_checkins_per_venue
            .or(config.min_checkins_per_venue)
            .unwrap_or(defaults.min_checkins_per_venue),
        dedupe_user_venue: if flags.no_dedupe {
            false
        } else {
            config
                .dedupe_user_venue
                .unwrap_or(defaults.dedupe_user_venue)
        },
        allowed_categories: flags
            .categories
            .clone()
            .or_else(|| config.categories.clone())
            .map(|c| {
                c.into_iter()
                    .map(|s| s.trim().to_string())
                    .collect::<BTreeSet<_>>()
            })
            .unwrap_or(defaults.allowed_categories),
        min_venues_per_subcategory: flags
            .min_venues_per_subcategory
            .or(config.min_venues_per_subcategory)
            .unwrap_or(defaults.min_venues_per_subcategory),
        max_checkins_per_region: flags
            .max_checkins_per_region
            .or(config.max_checkins_per_region),
        rng_seed: seed,
    }
}

struct LoadedInput {
    records: Vec<CheckInRecord>,
    digest: String,
    format: InputFormat,
}

fn load_input(args: &InputArgs, config: &FileConfig) -> CliResult<LoadedInput> {
    let format = resolve_format(&args.input, args.format.as_deref(), config)?;
    let bytes = fs::read(&args.input).map_err(|e| {
        CliError::Run(Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", args.input.display()),
        )))
    })?;
    let (records, _) = ingest_checkins(bytes.as_slice(), format)?;
    Ok(LoadedInput {
        records,
        digest: sha256_hex(&bytes),
        format,
    })
}

fn timestamp() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn finish(
    mut sink: ArtifactSink,
    command: &str,
    config: serde_json::Value,
    input_digests: BTreeMap<String, String>,
    seeds: BTreeMap<String, u64>,
    started_at: String,
) -> CliResult<()> {
    let mut artifacts = sink.artifacts().to_vec();
    artifacts.push("manifest.json".into());
    let manifest = RunManifest {
        command: command.into(),
        config,
        input_digests,
        seeds,
        artifacts,
        started_at,
        finished_at: timestamp(),
    };
    let path = sink.put_json("manifest.json", &manifest)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_ingest_check(args: &IngestArgs, config: &FileConfig) -> CliResult<()> {
    let format = resolve_format(&args.input.input, args.input.format.as_deref(), config)?;
    let file = fs::File::open(&args.input.input)?;
    let (records, report) = ingest_checkins(file, format)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).map_err(Error::from)?
    );
    let venues = crate::model::derive_venues(&records)?;
    eprintln!("{} records, {} venues", records.len(), venues.len());
    Ok(())
}

#[derive(Serialize)]
struct AnalyzeSnapshot<'a> {
    region: &'a RegionSelector,
    mode: AnalysisMode,
    subcategory: Option<&'a str>,
    filter: &'a FilterConfig,
    null_model: &'a NullModelConfig,
    format: InputFormat,
}

fn cmd_analyze(args: &AnalyzeArgs, config: &FileConfig) -> CliResult<()> {
    let started_at = timestamp();
    let region = match (&args.country, &args.city) {
        (Some(c), None) => RegionSelector::country(c),
        (None, Some(c)) => RegionSelector::city(c),
        _ => return Err(usage("exactly one of --country or --city is required")),
    };
    let mode = parse_flag(
        args.mode.as_deref().or(config.mode.as_deref()),
        AnalysisMode::Subcategory,
    )?;
    let subcategory = args
        .subcategory
        .clone()
        .or_else(|| config.subcategory.clone());
    match (mode, &subcategory) {
        (AnalysisMode::VenueWithinSubcategory, None) => {
            return Err(usage("--mode venue_within_subcategory needs --subcategory"))
        }
        (AnalysisMode::Subcategory | AnalysisMode::Venue, Some(_)) => {
            return Err(usage(
                "--subcategory is only valid with --mode venue_within_subcategory",
            ))
        }
        _ => {}
    }
    let seed = args.seed.or(config.seed).unwrap_or(0);
    let null_config = NullModelConfig {
        k: args.replicates.or(config.replicates).unwrap_or(100),
        confidence: args.confidence.or(config.confidence).unwrap_or(0.99),
        method: parse_flag(
            args.method.as_deref().or(config.method.as_deref()),
            NullMethod::Generative,
        )?,
        rng_seed: seed,
    };
    null_config.validate().map_err(|e| usage(e.to_string()))?;
    let filter_config = resolve_filter(&args.filter, config, seed);
    filter_config.validate().map_err(|e| usage(e.to_string()))?;

    let input = load_input(&args.input, config)?;
    let (filtered, report) = apply_filters(&input.records, &region, &filter_config)?;
    let table = popularity_table(&filtered, mode, &region, subcategory.as_deref())?;
    let results = run_null_model_batch(
        &filtered,
        mode,
        &region,
        subcategory.as_deref(),
        &null_config,
    )?;

    let mut sink = ArtifactSink::new(resolve_out_dir(args.out_dir.as_deref(), config));
    sink.put_json("filter_report.json", &report)?;
    let mut csv = Vec::new();
    write_popularity_csv(&table, &mut csv)?;
    sink.put("popularity.csv", &csv)?;

    // significance follows the popularity table order
    let by_key: BTreeMap<&str, usize> = results
        .iter()
        .enumerate()
        .map(|(i, r)| (r.unit.key.as_str(), i))
        .collect();
    let summaries: Vec<NullModelSummary> = table
        .iter()
        .map(|row| results[by_key[row.point.unit.key.as_str()]].summary())
        .collect();
    sink.put_json("significance.json", &summaries)?;
    for (rank, row) in table.iter().enumerate() {
        let result = &results[by_key[row.point.unit.key.as_str()]];
        let mut hist = Vec::new();
        result.write_distribution_csv(&mut hist)?;
        sink.put(
            &format!("null/{rank:04}_{}.csv", file_stem(&result.unit.key)),
            &hist,
        )?;
    }

    let snapshot = AnalyzeSnapshot {
        region: &region,
        mode,
        subcategory: subcategory.as_deref(),
        filter: &filter_config,
        null_model: &null_config,
        format: input.format,
    };
    let significant = summaries.iter().filter(|s| s.significant).count();
    eprintln!(
        "{}: {} units, {} significant at {}",
        region,
        summaries.len(),
        significant,
        null_config.confidence
    );
    finish(
        sink,
        "analyze",
        serde_json::to_value(&snapshot).map_err(Error::from)?,
        BTreeMap::from([(args.input.input.display().to_string(), input.digest)]),
        BTreeMap::from([
            ("down_sample".to_string(), seed),
            ("null_model".to_string(), seed),
        ]),
        started_at,
    )
}

#[derive(Serialize)]
struct VectorsSnapshot<'a> {
    granularity: Granularity,
    regions: &'a [String],
    filter: &'a FilterConfig,
    format: InputFormat,
}

fn cmd_vectors(args: &VectorsArgs, config: &FileConfig) -> CliResult<()> {
    let started_at = timestamp();
    let granularity = parse_flag(
        args.granularity
            .as_deref()
            .or(config.granularity.as_deref()),
        Granularity::Country,
    )?;
    let seed = args.seed.or(config.seed).unwrap_or(0);
    let filter_config = resolve_filter(&args.filter, config, seed);
    filter_config.validate().map_err(|e| usage(e.to_string()))?;
    let input = load_input(&args.input, config)?;

    let regions: Vec<String> = match &args.regions {
        Some(list) => list.iter().map(|s| s.trim().to_string()).collect(),
        None => input
            .records
            .iter()
            .filter_map(|r| match granularity {
                Granularity::Country => Some(r.country.clone()),
                Granularity::City => r.city.clone(),
            })
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };
    if regions.is_empty() {
        return Err(CliError::Run(Error::InvalidConfig(
            "no regions to build vectors for".into(),
        )));
    }

    let mut filtered_all = Vec::new();
    let mut reports: Vec<FilterReport> = Vec::new();
    let mut selectors = Vec::new();
    for name in &regions {
        let selector = RegionSelector {
            granularity,
            name: name.clone(),
        };
        let (filtered, report) = apply_filters(&input.records, &selector, &filter_config)?;
        filtered_all.extend(filtered);
        reports.push(report);
        selectors.push(selector);
    }
    let dims = global_dims(&filtered_all);
    let vectors = selectors
        .iter()
        .map(|s| build_preference_vector(&filtered_all, s, &dims))
        .collect::<crate::Result<Vec<PreferenceVector>>>()?;

    let mut sink = ArtifactSink::new(resolve_out_dir(args.out_dir.as_deref(), config));
    let mut csv = Vec::new();
    write_vectors_csv(&vectors, &mut csv)?;
    sink.put("vectors.csv", &csv)?;
    let manifest = VectorManifest {
        granularity,
        global_dims: dims,
        regions: regions.clone(),
        provenance: BTreeMap::from([
            ("input".to_string(), args.input.input.display().to_string()),
            ("input_sha256".to_string(), input.digest.clone()),
            (
                "filter".to_string(),
                serde_json::to_string(&filter_config).map_err(Error::from)?,
            ),
        ]),
    };
    sink.put_json("vectors_manifest.json", &manifest)?;
    sink.put_json("filter_reports.json", &reports)?;
    for v in vectors.iter().filter(|v| v.is_zero()) {
        eprintln!("warning: {} has an all-zero preference vector", v.region);
    }

    let snapshot = VectorsSnapshot {
        granularity,
        regions: &regions,
        filter: &filter_config,
        format: input.format,
    };
    finish(
        sink,
        "vectors",
        serde_json::to_value(&snapshot).map_err(Error::from)?,
        BTreeMap::from([(args.input.input.display().to_string(), input.digest)]),
        BTreeMap::from([("down_sample".to_string(), seed)]),
        started_at,
    )
}

struct LoadedVectors {
    vectors: Vec<PreferenceVector>,
    digests: BTreeMap<String, String>,
}

/// Reads `vectors.csv` (and its manifest, when present) from a directory or file.
fn load_vectors(path: &Path) -> CliResult<LoadedVectors> {
    let (csv_path, manifest_path) = if path.is_dir() {
        (
            path.join("vectors.csv"),
            Some(path.join("vectors_manifest.json")),
        )
    } else {
        (
            path.to_path_buf(),
            path.parent().map(|p| p.join("vectors_manifest.json")),
        )
    };
    let bytes = fs::read(&csv_path).map_err(|e| {
        CliError::Run(Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", csv_path.display()),
        )))
    })?;
    let mut digests = BTreeMap::from([(csv_path.display().to_string(), sha256_hex(&bytes))]);
    let mut granularity = Granularity::Country;
    let mut expected_dims = None;
    if let Some(mp) = manifest_path.filter(|p| p.is_file()) {
        let mbytes = fs::read(&mp)?;
        let manifest: VectorManifest = serde_json::from_slice(&mbytes).map_err(Error::from)?;
        granularity = manifest.granularity;
        expected_dims = Some(manifest.global_dims);
        digests.insert(mp.display().to_string(), sha256_hex(&mbytes));
    }
    let vectors = read_vectors_csv(bytes.as_slice(), granularity)?;
    if let (Some(dims), Some(first)) = (expected_dims, vectors.first()) {
        if first.dims != dims {
            return Err(CliError::Run(Error::DimensionMismatch(
                "vectors.csv header disagrees with vectors_manifest.json".into(),
            )));
        }
    }
    Ok(LoadedVectors { vectors, digests })
}

fn cmd_cluster(args: &ClusterArgs, config: &FileConfig) -> CliResult<()> {
    let started_at = timestamp();
    let k = args
        .k
        .or(config.k)
        .ok_or_else(|| usage("--k is required"))?;
    let seed = args.seed.or(config.seed).unwrap_or(0);
    let restarts = args.restarts.or(config.restarts).unwrap_or(1);
    let max_iter = args.max_iter.or(config.max_iter).unwrap_or(100);
    let loaded = load_vectors(&args.vectors)?;
    let result = cluster_regions_best(&loaded.vectors, k, seed, restarts, max_iter)?;

    let mut sink = ArtifactSink::new(resolve_out_dir(args.out_dir.as_deref(), config));
    sink.put_json("clusters.json", &result.report())?;
    for c in result.report().clusters {
        eprintln!("cluster {}: {}", c.id, c.members.join(", "));
    }
    finish(
        sink,
        "cluster",
        serde_json::json!({ "k": k, "restarts": restarts, "max_iter": max_iter }),
        loaded.digests,
        BTreeMap::from([("clustering".to_string(), seed)]),
        started_at,
    )
}

fn cmd_compare(args: &CompareArgs, config: &FileConfig) -> CliResult<()> {
    let started_at = timestamp();
    let seed = args.seed.or(config.seed).unwrap_or(0);
    let permutations = args.permutations.or(config.permutations).unwrap_or(100);
    if args.index.is_empty() && args.bundled.is_empty() {
        return Err(usage("give at least one --index file or --bundled table"));
    }
    if args.anchor.is_empty() && !args.all_anchors {
        return Err(usage("give --anchor or --all-anchors"));
    }

    let loaded = load_vectors(&args.vectors)?;
    let mut digests = loaded.digests;
    let mut indices = Vec::new();
    for name in &args.bundled {
        match name.to_ascii_lowercase().as_str() {
            "gii" => indices.push(IndexTable::bundled_gii()),
            "hdi" => indices.push(IndexTable::bundled_hdi()),
            other => return Err(usage(format!("unknown bundled index `{other}`"))),
        }
    }
    for path in &args.index {
        let bytes = fs::read(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "index".into());
        indices.push(ingest_index_table(bytes.as_slice(), &name)?);
        digests.insert(path.display().to_string(), sha256_hex(&bytes));
    }

    let vectors: BTreeMap<String, PreferenceVector> = loaded
        .vectors
        .into_iter()
        .map(|v| (v.region.name.clone(), v))
        .collect();
    let anchors: Vec<String> = if args.all_anchors {
        vectors.keys().cloned().collect()
    } else {
        args.anchor.clone()
    };

    let mut rows = Vec::new();
    let mut details = Vec::new();
    for anchor in &anchors {
        for index in &indices {
            let comparison = compare_with_index(&vectors, index, anchor)?;
            let baseline = random_baseline(&vectors, index, anchor, permutations, seed)?;
            rows.push(ComparisonRow {
                country: anchor.clone(),
                index: index.index_name.clone(),
                rho: comparison.rho,
                p_value: comparison.p_value,
                baseline_ci_low: baseline.ci_low,
                baseline_ci_high: baseline.ci_high,
            });
            details.push(serde_json::json!({
                "comparison": comparison,
                "baseline": baseline,
            }));
        }
    }

    let mut sink = ArtifactSink::new(resolve_out_dir(args.out_dir.as_deref(), config));
    let mut csv = Vec::new();
    write_comparison_csv(&rows, &mut csv)?;
    sink.put("comparison.csv", &csv)?;
    sink.put_json("comparison_details.json", &details)?;
    finish(
        sink,
        "compare",
        serde_json::json!({
            "indices": indices.iter().map(|i| i.index_name.clone()).collect::<Vec<_>>(),
            "anchors": anchors,
            "permutations": permutations,
        }),
        digests,
        BTreeMap::from([("baseline".to_string(), seed)]),
        started_at,
    )
}

fn cmd_synth(args: &SynthArgs, config: &FileConfig) -> CliResult<()> {
    let started_at = timestamp();
    let spec_bytes = fs::read(&args.spec)?;
    let mut spec: SynthSpec = serde_json::from_slice(&spec_bytes)
        .map_err(|e| usage(format!("invalid spec {}: {e}", args.spec.display())))?;
    if let Some(seed) = args.seed.or(config.seed) {
        spec.rng_seed = seed;
    }
    let format = resolve_format(&args.out, args.format.as_deref(), config)?;
    let records = generate(&spec)?;
    let mut data = Vec::new();
    write_checkins(&records, format, &mut data)?;

    let out_name = args
        .out
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .ok_or_else(|| usage("--out must name a file"))?;
    let parent = args
        .out
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let mut sink = ArtifactSink::new(&parent);
    sink.put(&out_name, &data)?;
    eprintln!(
        "{} check-ins written to {}",
        records.len(),
        args.out.display()
    );

    let manifest = RunManifest {
        command: "synth".into(),
        config: serde_json::to_value(&spec).map_err(Error::from)?,
        input_digests: BTreeMap::from([(args.spec.display().to_string(), sha256_hex(&spec_bytes))]),
        seeds: BTreeMap::from([("synth".to_string(), spec.rng_seed)]),
        artifacts: vec![out_name.clone(), format!("{out_name}.manifest.json")],
        started_at,
        finished_at: timestamp(),
    };
    sink.put(
        &format!("{out_name}.manifest.json"),
        &to_json_bytes(&manifest)?,
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config() {
        let config = FileConfig {
            min_checkins_per_venue: Some(3),
            categories: Some(vec!["Food".into()]),
            dedupe_user_venue: Some(false),
            ..FileConfig::default()
        };
        let flags = FilterFlags {
            min_checkins_per_venue: Some(7),
            ..FilterFlags::default()
        };
        let f = resolve_filter(&flags, &config, 9);
        assert_eq!(f.min_checkins_per_venue, 7);
        assert_eq!(f.allowed_categories.len(), 1);
        assert!(!f.dedupe_user_venue);
        assert_eq!(f.rng_seed, 9);
        assert_eq!(f.min_venues_per_subcategory, 2);
    }

    #[test]
    fn format_from_extension() {
        let config = FileConfig::default();
        assert_eq!(
            resolve_format(Path::new("a.jsonl"), None, &config).unwrap(),
            InputFormat::Jsonl
        );
        assert_eq!(
            resolve_format(Path::new("a.jsonl"), Some("csv"), &config).unwrap(),
            InputFormat::Csv
        );
        assert!(resolve_format(Path::new("a"), Some("xml"), &config).is_err());
    }

    #[test]
    fn missing_input_is_usage_error() {
        assert_eq!(run(["gender-venues", "analyze", "--country", "Brazil"]), 2);
        assert_eq!(run(["gender-venues", "--help"]), 0);
    }
}
