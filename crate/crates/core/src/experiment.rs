//! Experiment configuration, the end-to-end runner, and result emission.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::aggregator::{Aggregator, AggregatorKind, Capacity};
use crate::baselines::{CnHash, UniformSample};
use crate::error::{Error, Result};
use crate::io::{load_stream, DatasetStats, EdgeStreamFile, LoadedStream};
use crate::metrics::RankedSimilarity;
use crate::oracle::ExactProjection;
use crate::sampler::{EdgeReservoir, SamplerMode, UpdateSink};
use crate::table::SimilarityTable;
use crate::types::{EdgeKey, PairKey, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    SimAdapt,
    SimFixed,
    SimUnif,
    Simple,
    CnHash,
}

impl Method {
    pub fn sampler_mode(self) -> Option<SamplerMode> {
        match self {
            Method::SimAdapt => Some(SamplerMode::Adaptive),
            Method::SimFixed => Some(SamplerMode::Fixed),
            Method::SimUnif => Some(SamplerMode::Unit),
            Method::Simple | Method::CnHash => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::SimAdapt => "SimAdapt",
            Method::SimFixed => "SimFixed",
            Method::SimUnif => "SimUnif",
            Method::Simple => "simple",
            Method::CnHash => "CnHash",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "simadapt" | "adaptive" => Ok(Method::SimAdapt),
            "simfixed" | "fixed" => Ok(Method::SimFixed),
            "simunif" | "unif" | "unit" => Ok(Method::SimUnif),
            "simple" | "uniform" => Ok(Method::Simple),
            "cnhash" => Ok(Method::CnHash),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }
}

/// Size of the edge reservoir.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeBudget {
    /// Fraction of the stream length, in (0, 1].
    Fraction(f64),
    Absolute(usize),
}

/// Size of the aggregation reservoir.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggBudget {
    /// Fraction of the exact pair count of the evaluated side; needs the oracle.
    Fraction(f64),
    Absolute(usize),
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopK {
    Rank(u32),
    /// Deepest actual rank less `max_rank_margin`.
    Max,
}

impl std::str::FromStr for TopK {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("max") {
            return Ok(TopK::Max);
        }
        match s.parse::<u32>() {
            Ok(k) if k > 0 => Ok(TopK::Rank(k)),
            _ => Err(Error::Config(format!("top-k must be a positive integer or 'max', got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    pub mode: Method,
    pub edge_budget: EdgeBudget,
    pub agg_budget: AggBudget,
    #[serde(default = "default_filter")]
    pub filter_threshold: u64,
    pub top_k: Vec<TopK>,
    pub seed: u64,
    #[serde(default = "default_reps")]
    pub repetitions: u32,
    /// Projection that is aggregated and scored.
    #[serde(default = "default_side")]
    pub side: Side,
    /// Maximum number of exact pairs the oracle may hold.
    #[serde(default)]
    pub oracle_budget: Option<usize>,
    /// Query the aggregate every this many arrivals as well as at the end.
    #[serde(default)]
    pub snapshot_every: Option<u64>,
    #[serde(default = "default_margin")]
    pub max_rank_margin: u32,
    /// Sketch size for `CnHash`; derived from the edge budget when absent.
    #[serde(default)]
    pub cnhash_l: Option<usize>,
}

fn default_filter() -> u64 {
    10
}
fn default_reps() -> u32 {
    1
}
fn default_side() -> Side {
    Side::U
}
fn default_margin() -> u32 {
    6
}

impl ExperimentConfig {
    pub fn new(dataset: impl Into<PathBuf>, mode: Method) -> Self {
        ExperimentConfig {
            dataset: dataset.into(),
            mode,
            edge_budget: EdgeBudget::Fraction(0.1),
            agg_budget: AggBudget::Fraction(0.1),
            filter_threshold: default_filter(),
            top_k: vec![TopK::Rank(100), TopK::Max],
            seed: 1,
            repetitions: 1,
            side: Side::U,
            oracle_budget: None,
            snapshot_every: None,
            max_rank_margin: default_margin(),
            cnhash_l: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let EdgeBudget::Fraction(f) = self.edge_budget {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!("f_m must be in (0, 1], got {f}")));
            }
        }
        if let EdgeBudget::Absolute(0) = self.edge_budget {
            return Err(Error::Config("m must be >= 1".into()));
        }
        if let AggBudget::Fraction(f) = self.agg_budget {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!("f_n must be in (0, 1], got {f}")));
            }
        }
        if let AggBudget::Absolute(0) = self.agg_budget {
            return Err(Error::Config("n must be >= 1".into()));
        }
        if self.top_k.is_empty() {
            return Err(Error::Config("at least one top-k value is required".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be >= 1".into()));
        }
        if self.snapshot_every == Some(0) {
            return Err(Error::Config("snapshot interval must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub k: u32,
    pub wre: Option<f64>,
    pub one_minus_cor: Option<f64>,
    pub wre_unfiltered: Option<f64>,
    pub one_minus_cor_unfiltered: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: u64,
    pub edge_sample: usize,
    pub aggregate: usize,
    pub z_star: f64,
    pub metrics: Vec<MetricRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub dataset: String,
    pub mode: Method,
    /// Effective edge sampling fraction `m / |K|`.
    pub f_m: f64,
    /// Effective aggregation fraction `n / |K_side|`; 1 for exact aggregation.
    pub f_n: Option<f64>,
    pub filter: u64,
    pub seed: u64,
    pub m: usize,
    pub n: Option<usize>,
    pub metrics: Vec<MetricRow>,
    pub runtime_ms: u64,
    pub peak_edge_sample: usize,
    pub peak_aggregate: usize,
    pub updates_emitted: u64,
    pub estimates: usize,
    pub estimates_after_filter: usize,
    pub z_star: f64,
    pub duplicates_dropped: u64,
    pub oracle_overflow: bool,
    pub metrics_available: bool,
    pub max_actual_rank: Option<u32>,
    pub file_reads: u32,
    pub stats: DatasetStats,
    pub snapshots: Vec<Snapshot>,
    pub config: ExperimentConfig,
}

impl ResultRecord {
    pub fn metric(&self, k: u32) -> Option<&MetricRow> {
        self.metrics.iter().find(|r| r.k == k)
    }

    /// Copy with the runtime zeroed, for determinism comparisons.
    pub fn without_runtime(&self) -> ResultRecord {
        let mut r = self.clone();
        r.runtime_ms = 0;
        r
    }
}

/// A loaded stream plus its exact projection on the evaluated side.
pub struct Prepared {
    pub name: String,
    pub stream: LoadedStream,
    pub oracle: Option<ExactProjection>,
    pub oracle_overflow: bool,
    pub file_reads: u32,
}

impl Prepared {
    pub fn from_stream(name: impl Into<String>, stream: LoadedStream, side: Side, oracle_budget: Option<usize>) -> Self {
        let (oracle, overflow) = build_oracle(&stream.edges, side, oracle_budget, stream.edges.len());
        Prepared {
            name: name.into(),
            stream,
            oracle,
            oracle_overflow: overflow,
            file_reads: 0,
        }
    }

    pub fn load(cfg: &ExperimentConfig) -> Result<Self> {
        let stream = load_stream(&EdgeStreamFile::new(&cfg.dataset))?;
        let mut p = Prepared::from_stream(dataset_name(&cfg.dataset), stream, cfg.side, cfg.oracle_budget);
        p.file_reads = 1;
        Ok(p)
    }
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn build_oracle(edges: &[EdgeKey], side: Side, budget: Option<usize>, upto: usize) -> (Option<ExactProjection>, bool) {
    let mut o = ExactProjection::with_sides(&[side]);
    if let Some(b) = budget {
        o = o.with_budget(b);
    }
    for &e in &edges[..upto] {
        match o.oracle_process(e) {
            Ok(()) => {}
            Err(Error::OracleOverflow { .. }) => return (None, true),
            Err(_) => unreachable!("loader removes duplicates"),
        }
    }
    (Some(o), false)
}

/// Loads the dataset once and runs every repetition on it.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    let prepared = Prepared::load(cfg)?;
    run_prepared(cfg, &prepared)
}

/// Runs every repetition of `cfg` against an already prepared stream.
/// Repetition `r` uses seed `cfg.seed + r`.
pub fn run_prepared(cfg: &ExperimentConfig, prepared: &Prepared) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    (0..cfg.repetitions as u64)
        .map(|r| run_once(cfg, prepared, cfg.seed.wrapping_add(r)))
        .collect()
}

struct SideSink<'a, A> {
    side: Side,
    agg: &'a mut A,
    emitted: u64,
}

impl<A: UpdateSink> UpdateSink for SideSink<'_, A> {
    fn emit(&mut self, key: PairKey, value: f64) {
        if key.side == self.side {
            self.emitted += 1;
            self.agg.emit(key, value);
        }
    }
}

/// Seed of the second stage, derived from the run seed so that the two
/// stages draw independent random numbers.
pub fn aggregator_seed(seed: u64) -> u64 {
    crate::hash::mix64(seed ^ 0xA66_A66A_66A6)
}

/// One repetition with an explicit seed.
pub fn run_once(cfg: &ExperimentConfig, prepared: &Prepared, seed: u64) -> Result<ResultRecord> {
    let start = Instant::now();
    let edges = &prepared.stream.edges;
    let total = edges.len();
    let m = match cfg.edge_budget {
        EdgeBudget::Fraction(f) => ((f * total as f64).ceil() as usize).max(1),
        EdgeBudget::Absolute(m) => m,
    };
    let side_pairs = prepared.oracle.as_ref().map(|o| o.pair_count(cfg.side));
    let n = match cfg.agg_budget {
        AggBudget::Unbounded => None,
        AggBudget::Absolute(n) => Some(n),
        AggBudget::Fraction(f) => {
            let pairs = side_pairs.ok_or_else(|| {
                Error::Config("a fractional aggregation budget needs the oracle; give n absolutely".into())
            })?;
            Some(((f * pairs as f64).ceil() as usize).max(1))
        }
    };
    let f_n = match (n, side_pairs) {
        (None, _) => Some(1.0),
        (Some(n), Some(p)) if p > 0 => Some(n as f64 / p as f64),
        _ => None,
    };
    let agg_seed = aggregator_seed(seed);

    let mut snapshots = Vec::new();
    let mut peak_edge_sample = 0;
    let mut peak_aggregate = 0;
    let mut updates_emitted = 0;
    let mut z_star = 0.0;
    let table: SimilarityTable = match cfg.mode {
        Method::SimAdapt | Method::SimFixed | Method::SimUnif => {
            let mode = cfg.mode.sampler_mode().expect("sampler method");
            let mut sampler = EdgeReservoir::new(m, mode, seed)?.without_duplicate_tracking();
            let capacity = n.map_or(Capacity::Unbounded, Capacity::Bounded);
            let mut agg = AggregatorKind::initialize(capacity, agg_seed)?;
            let mut live_oracle = cfg.snapshot_every.map(|_| {
                let mut o = ExactProjection::with_sides(&[cfg.side]);
                if let Some(b) = cfg.oracle_budget {
                    o = o.with_budget(b);
                }
                o
            });
            for (i, &e) in edges.iter().enumerate() {
                let mut sink = SideSink {
                    side: cfg.side,
                    agg: &mut agg,
                    emitted: 0,
                };
                sampler.process_edge_into(e, &mut sink)?;
                updates_emitted += sink.emitted;
                peak_edge_sample = peak_edge_sample.max(sampler.len());
                peak_aggregate = peak_aggregate.max(agg.len());
                if let (Some(every), Some(o)) = (cfg.snapshot_every, live_oracle.as_mut()) {
                    if !o.overflowed() {
                        let _ = o.oracle_process(e);
                    }
                    let t = i as u64 + 1;
                    if t.is_multiple_of(every) && (t as usize) < total {
                        let table = agg.query();
                        let metrics = if o.overflowed() {
                            Vec::new()
                        } else {
                            evaluate(o, cfg, &table).0
                        };
                        snapshots.push(Snapshot {
                            t,
                            edge_sample: sampler.len(),
                            aggregate: agg.len(),
                            z_star: sampler.z_star(),
                            metrics,
                        });
                    }
                }
            }
            z_star = sampler.z_star();
            agg.query()
        }
        Method::Simple => {
            let mut sample = UniformSample::new(m, seed);
            for &e in edges {
                sample.simple_process(e);
                peak_edge_sample = peak_edge_sample.max(sample.len());
            }
            let t = sample.table(cfg.side);
            peak_aggregate = t.len();
            t
        }
        Method::CnHash => {
            let stats = &prepared.stream.stats;
            let limit = cfg
                .cnhash_l
                .unwrap_or_else(|| ((m as f64 / stats.nodes().max(1) as f64).floor() as usize).max(1));
            let mut sketches = CnHash::new(limit, seed);
            for &e in edges {
                sketches.cnhash_process(e);
            }
            peak_edge_sample = sketches.stored_entries();
            let t = match &prepared.oracle {
                Some(o) => sketches.table_for_pairs(top_pairs(o, cfg.side, n)),
                None => sketches.candidate_table(cfg.side, n.unwrap_or(usize::MAX)),
            };
            peak_aggregate = t.len();
            t
        }
    };

    let filtered = table.filter_by_count(cfg.filter_threshold);
    let (metrics, max_actual_rank) = match &prepared.oracle {
        Some(o) => {
            let (rows, max_rank) = evaluate(o, cfg, &table);
            (rows, Some(max_rank))
        }
        None => (Vec::new(), None),
    };

    Ok(ResultRecord {
        dataset: prepared.name.clone(),
        mode: cfg.mode,
        f_m: if total == 0 { 0.0 } else { (m as f64 / total as f64).min(1.0) },
        f_n,
        filter: cfg.filter_threshold,
        seed,
        m,
        n,
        metrics,
        runtime_ms: start.elapsed().as_millis() as u64,
        peak_edge_sample,
        peak_aggregate,
        updates_emitted,
        estimates: table.side(cfg.side).len(),
        estimates_after_filter: filtered.side(cfg.side).len(),
        z_star,
        duplicates_dropped: prepared.stream.stats.duplicates,
        oracle_overflow: prepared.oracle_overflow,
        metrics_available: prepared.oracle.is_some(),
        max_actual_rank,
        file_reads: prepared.file_reads,
        stats: prepared.stream.stats,
        snapshots,
        config: cfg.clone(),
    })
}

/// The `n` pairs of highest exact similarity on `side` (all when `n` is None),
/// ties broken by key.
fn top_pairs(o: &ExactProjection, side: Side, n: Option<usize>) -> Vec<PairKey> {
    let mut all: Vec<(PairKey, u32)> = o.pairs(side).collect();
    if let Some(n) = n {
        if n < all.len() {
            all.select_nth_unstable_by(n, |a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            all.truncate(n);
        }
    }
    all.into_iter().map(|(k, _)| k).collect()
}

/// Resolves the configured top-k list against the oracle's deepest rank.
pub fn resolve_top_k(top_k: &[TopK], max_actual_rank: u32, margin: u32) -> Vec<u32> {
    let mut ks: Vec<u32> = top_k
        .iter()
        .map(|k| match *k {
            TopK::Rank(k) => k,
            TopK::Max => max_actual_rank.saturating_sub(margin).max(1),
        })
        .collect();
    ks.sort_unstable();
    ks.dedup();
    ks
}

fn evaluate(o: &ExactProjection, cfg: &ExperimentConfig, table: &SimilarityTable) -> (Vec<MetricRow>, u32) {
    let side = cfg.side;
    let max_actual_rank = o.distinct_values(side) as u32;
    let ks = resolve_top_k(&cfg.top_k, max_actual_rank, cfg.max_rank_margin);
    let deepest = ks.iter().copied().max().unwrap_or(1);
    let actual = || o.pairs(side).map(|(k, c)| (k, c as u64));
    let filtered = table.filter_by_count(cfg.filter_threshold);
    let ranked_f = RankedSimilarity::build(actual(), &filtered, side, Some(deepest));
    let ranked_u = RankedSimilarity::build(actual(), table, side, Some(deepest));
    let rows = ks
        .iter()
        .map(|&k| MetricRow {
            k,
            wre: ranked_f.weighted_relative_error(k).ok(),
            one_minus_cor: ranked_f.top_k_correlation(k).ok().map(|c| 1.0 - c),
            wre_unfiltered: ranked_u.weighted_relative_error(k).ok(),
            one_minus_cor_unfiltered: ranked_u.top_k_correlation(k).ok().map(|c| 1.0 - c),
        })
        .collect();
    (rows, max_actual_rank)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown format {other:?}"))),
        }
    }
}

pub const CSV_COLUMNS: [&str; 10] = [
    "dataset",
    "mode",
    "f_m",
    "f_n",
    "filter",
    "k",
    "wre",
    "one_minus_cor",
    "seed",
    "runtime_ms",
];

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes records as CSV (one row per record and k, sorted by mode, k, seed)
/// or as a JSON array (records sorted by mode, seed).
pub fn emit_results<W: Write>(records: &[ResultRecord], format: OutputFormat, mut out: W) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Config("no records to emit".into()));
    }
    match format {
        OutputFormat::Csv => {
            let mut rows: Vec<(&ResultRecord, &MetricRow)> =
                records.iter().flat_map(|r| r.metrics.iter().map(move |m| (r, m))).collect();
            rows.sort_by_key(|(r, m)| (r.mode, m.k, r.seed));
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(CSV_COLUMNS)?;
            for (r, m) in rows {
                w.write_record([
                    r.dataset.clone(),
                    r.mode.name().to_string(),
                    r.f_m.to_string(),
                    opt(r.f_n),
                    r.filter.to_string(),
                    m.k.to_string(),
                    opt(m.wre),
                    opt(m.one_minus_cor),
                    r.seed.to_string(),
                    r.runtime_ms.to_string(),
                ])?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            let mut sorted: Vec<&ResultRecord> = records.iter().collect();
            sorted.sort_by_key(|r| (r.mode, r.seed));
            serde_json::to_writer_pretty(&mut out, &sorted)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

pub fn emit_results_to_path(records: &[ResultRecord], format: OutputFormat, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    emit_results(records, format, std::io::BufWriter::new(f))
}

pub const SCATTER_COLUMNS: [&str; 5] = ["key", "actual_weight", "estimated_weight", "actual_rank", "estimated_rank"];

/// Outcome of [`emit_rank_scatter`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScatterSummary {
    pub rows: usize,
    /// `k` exceeded the deepest actual rank and was lowered to it.
    pub truncated: bool,
    pub k: u32,
}

/// Writes `(key, actual, estimate, actual rank, estimated rank)` for every pair
/// of actual rank at most `k`.
pub fn emit_rank_scatter<W: Write>(
    table: &SimilarityTable,
    oracle: &ExactProjection,
    side: Side,
    k: u32,
    out: W,
) -> Result<ScatterSummary> {
    let ranked = RankedSimilarity::build(oracle.pairs(side).map(|(p, c)| (p, c as u64)), table, side, Some(k));
    let truncated = k > ranked.max_actual_rank && !table.side(side).is_empty();
    let k = k.min(ranked.max_actual_rank.max(1));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCATTER_COLUMNS)?;
    let mut rows = 0;
    if !table.side(side).is_empty() {
        for p in ranked.top_k(k) {
            w.write_record([
                format!("{}-{}", p.key.a, p.key.b),
                p.actual.to_string(),
                p.estimate.to_string(),
                p.actual_rank.to_string(),
                p.estimated_rank.to_string(),
            ])?;
            rows += 1;
        }
    }
    w.flush()?;
    Ok(ScatterSummary { rows, truncated, k })
}
