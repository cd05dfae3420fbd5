//! Retrieval quality (Recall@N under a metric radius) and selection-latency
//! scaling benchmarks, plus report emission.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{argmin, by_distance_then_index, EmbeddingStore, EmbeddingVector};
use crate::error::{Error, Result};
use crate::format::EmbeddingFile;
use crate::map::TopologicalMap;
use crate::sim::{EpisodeRecord, SummaryRow};
use crate::subgoal::{
    pairwise_select, synthetic_work, PairwiseScorerStub, TemporalDistance, DEFAULT_PAIRWISE_THRESHOLD,
};

pub const DEFAULT_POSITIVE_RADIUS: f64 = 25.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalDataset {
    pub queries: EmbeddingStore,
    pub query_positions: Vec<[f64; 2]>,
    pub database: EmbeddingStore,
    pub database_positions: Vec<[f64; 2]>,
    /// Meters.
    pub positive_radius: f64,
}

impl RetrievalDataset {
    pub fn new(
        queries: EmbeddingStore,
        query_positions: Vec<[f64; 2]>,
        database: EmbeddingStore,
        database_positions: Vec<[f64; 2]>,
        positive_radius: f64,
    ) -> Result<Self> {
        if queries.is_empty() || database.is_empty() {
            return Err(Error::EmptyStore);
        }
        if queries.dim() != database.dim() {
            return Err(Error::DimensionMismatch {
                expected: database.dim(),
                actual: queries.dim(),
            });
        }
        for (store, pos) in [(&queries, &query_positions), (&database, &database_positions)] {
            if store.len() != pos.len() {
                return Err(Error::LengthMismatch {
                    expected: store.len(),
                    actual: pos.len(),
                });
            }
        }
        if !(positive_radius.is_finite() && positive_radius > 0.0) {
            return Err(Error::InvalidParameter("positive radius must be > 0".into()));
        }
        Ok(Self {
            queries,
            query_positions,
            database,
            database_positions,
            positive_radius,
        })
    }

    /// Both files need a sidecar with a position on every row.
    pub fn from_files(queries: EmbeddingFile, database: EmbeddingFile, radius: f64) -> Result<Self> {
        let qp = queries.positions()?;
        let dp = database.positions()?;
        Self::new(queries.store, qp, database.store, dp, radius)
    }

    fn is_positive(&self, query: usize, row: usize) -> bool {
        let [qx, qy] = self.query_positions[query];
        let [dx, dy] = self.database_positions[row];
        (qx - dx).hypot(qy - dy) <= self.positive_radius
    }
}

/// How database rows are ranked for a query.
#[derive(Debug, Clone)]
pub enum RetrievalMethod<D = crate::subgoal::ScaledL2> {
    EmbeddingNn,
    /// Rank by the surrogate temporal distance, smallest first.
    PairwiseStub(PairwiseScorerStub<D>),
}

fn top_n<D: TemporalDistance>(
    ds: &RetrievalDataset,
    query: &EmbeddingVector,
    n: usize,
    method: &RetrievalMethod<D>,
) -> Result<Vec<usize>> {
    match method {
        RetrievalMethod::EmbeddingNn => Ok(ds
            .database
            .nn_search(query, n)?
            .into_iter()
            .map(|(i, _)| i)
            .collect()),
        RetrievalMethod::PairwiseStub(stub) => {
            let mut scored: Vec<(usize, f64)> = ds
                .database
                .iter()
                .enumerate()
                .map(|(i, row)| (i, stub.score(query, row)))
                .collect();
            scored.sort_unstable_by(by_distance_then_index);
            Ok(scored.into_iter().take(n).map(|(i, _)| i).collect())
        }
    }
}

/// Fraction of queries with at least one database row within the positive
/// radius among their top `n` retrievals.
pub fn recall_at_n<D: TemporalDistance + Sync>(
    ds: &RetrievalDataset,
    n: usize,
    method: &RetrievalMethod<D>,
) -> Result<f64> {
    Ok(recall_curve(ds, &[n], method)?[0])
}

/// Recall at each `n`, ranking every query once.
pub fn recall_curve<D: TemporalDistance + Sync>(
    ds: &RetrievalDataset,
    ns: &[usize],
    method: &RetrievalMethod<D>,
) -> Result<Vec<f64>> {
    let db = ds.database.len();
    if let Some(&bad) = ns.iter().find(|&&n| n == 0 || n > db) {
        return Err(Error::KOutOfRange { k: bad, count: db });
    }
    let deepest = ns.iter().copied().max().unwrap_or(1);
    // Rank of the first positive per query, if any within `deepest`.
    let first_hit: Vec<Option<usize>> = (0..ds.queries.len())
        .into_par_iter()
        .map(|q| {
            let ranked = top_n(ds, ds.queries.get(q).expect("index in range"), deepest, method)?;
            Ok(ranked.iter().position(|&row| ds.is_positive(q, row)))
        })
        .collect::<Result<_>>()?;
    let total = ds.queries.len() as f64;
    Ok(ns
        .iter()
        .map(|&n| first_hit.iter().filter(|h| matches!(h, Some(r) if *r < n)).count() as f64 / total)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallReport {
    pub method: String,
    pub positive_radius: f64,
    pub queries: usize,
    pub database: usize,
    pub n: Vec<usize>,
    pub recall: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodTiming {
    pub method: String,
    /// Median latency per candidate count, nanoseconds.
    pub median_ns: Vec<u64>,
    pub slope_ns_per_candidate: f64,
    pub intercept_ns: f64,
    pub r_squared: f64,
    /// Largest over smallest median.
    pub max_min_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub candidate_counts: Vec<usize>,
    pub embedding_dim: usize,
    pub per_pair_flops: u64,
    pub repetitions: usize,
    pub embedding: MethodTiming,
    pub pairwise: MethodTiming,
    /// Pair evaluations the pairwise method made at each candidate count.
    pub pair_evaluations: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    LineFit {
        slope,
        intercept,
        r_squared,
    }
}

fn median(mut samples: Vec<u64>) -> u64 {
    samples.sort_unstable();
    let mid = samples.len() / 2;
    if samples.len() % 2 == 1 {
        samples[mid]
    } else {
        (samples[mid - 1] + samples[mid]) / 2
    }
}

fn time_ns(f: impl FnOnce()) -> u64 {
    let t = Instant::now();
    f();
    t.elapsed().as_nanos() as u64
}

fn summarize(method: &str, counts: &[usize], medians: Vec<u64>) -> Result<MethodTiming> {
    if medians.iter().all(|&m| m == 0) {
        return Err(Error::TimerResolution);
    }
    let xs: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let ys: Vec<f64> = medians.iter().map(|&m| m as f64).collect();
    let fit = fit_line(&xs, &ys);
    let max = *medians.iter().max().expect("non-empty");
    let min = *medians.iter().min().expect("non-empty");
    Ok(MethodTiming {
        method: method.to_string(),
        median_ns: medians,
        slope_ns_per_candidate: fit.slope,
        intercept_ns: fit.intercept,
        r_squared: fit.r_squared,
        max_min_ratio: if min == 0 { f64::INFINITY } else { max as f64 / min as f64 },
    })
}

/// Embedding-based selection over `candidates`: one observation encoding
/// (a single synthetic forward pass) followed by distance lookups against
/// precomputed node descriptors.
pub fn embedding_select(
    observation: &EmbeddingVector,
    candidates: &[usize],
    map: &TopologicalMap,
    encode_flops: u64,
) -> Result<usize> {
    std::hint::black_box(synthetic_work(encode_flops));
    let distances = map.store().distances_to(observation, candidates)?;
    argmin(&distances)
        .map(|i| candidates[i])
        .ok_or(Error::EmptyCandidates)
}

/// Median selection latency of both methods at each candidate count.
///
/// Runs on the calling thread; repetitions are sequential. The embedding
/// method's encoder and each pairwise evaluation cost the same
/// `per_pair_flops`, so the comparison isolates how cost scales with the
/// number of candidates.
pub fn runtime_scaling_bench(
    candidate_counts: &[usize],
    embedding_dim: usize,
    per_pair_flops: u64,
    repetitions: usize,
) -> Result<BenchReport> {
    runtime_scaling_bench_with_threshold(
        candidate_counts,
        embedding_dim,
        per_pair_flops,
        repetitions,
        DEFAULT_PAIRWISE_THRESHOLD,
    )
}

/// [`runtime_scaling_bench`] with an explicit pairwise `delta_t` threshold.
pub fn runtime_scaling_bench_with_threshold(
    candidate_counts: &[usize],
    embedding_dim: usize,
    per_pair_flops: u64,
    repetitions: usize,
    threshold: f64,
) -> Result<BenchReport> {
    if !threshold.is_finite() {
        return Err(Error::InvalidParameter("pairwise threshold must be finite".into()));
    }
    if candidate_counts.len() < 3 {
        return Err(Error::InvalidParameter("need at least 3 candidate counts".into()));
    }
    if candidate_counts[0] == 0 || candidate_counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "candidate counts must be positive and strictly ascending".into(),
        ));
    }
    if repetitions < 5 {
        return Err(Error::InvalidParameter("need at least 5 repetitions".into()));
    }
    if embedding_dim == 0 {
        return Err(Error::ZeroDimension);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let random_vec = |rng: &mut ChaCha8Rng| {
        EmbeddingVector::new((0..embedding_dim).map(|_| rng.random_range(-1.0f32..1.0)).collect())
    };
    let largest = *candidate_counts.last().expect("checked length");
    let nodes = (0..largest.max(2))
        .map(|_| random_vec(&mut rng))
        .collect::<Result<Vec<_>>>()?;
    let map = TopologicalMap::from_embeddings(nodes)?;
    let observation = random_vec(&mut rng)?;
    let stub = PairwiseScorerStub {
        per_pair_flops,
        ..PairwiseScorerStub::default()
    };

    let mut embed_medians = Vec::new();
    let mut pair_medians = Vec::new();
    let mut pair_evaluations = Vec::new();
    for &n in candidate_counts {
        let candidates: Vec<usize> = (0..n).collect();
        // warm-up
        embedding_select(&observation, &candidates, &map, per_pair_flops)?;
        let evals = pairwise_select(&observation, &candidates, &map, &stub, threshold)?.evaluations;
        pair_evaluations.push(evals);

        let mut embed = Vec::with_capacity(repetitions);
        let mut pair = Vec::with_capacity(repetitions);
        for _ in 0..repetitions {
            let mut result = Ok(0);
            embed.push(time_ns(|| {
                result = embedding_select(&observation, &candidates, &map, per_pair_flops)
            }));
            result?;
            let mut result = Ok(0);
            pair.push(time_ns(|| {
                result = pairwise_select(&observation, &candidates, &map, &stub, threshold).map(|s| s.node)
            }));
            result?;
        }
        embed_medians.push(median(embed));
        pair_medians.push(median(pair));
    }

    Ok(BenchReport {
        candidate_counts: candidate_counts.to_vec(),
        embedding_dim,
        per_pair_flops,
        repetitions,
        embedding: summarize("embedding_nn", candidate_counts, embed_medians)?,
        pairwise: summarize("pairwise_stub", candidate_counts, pair_medians)?,
        pair_evaluations,
        config_hash: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::InvalidParameter(format!("unknown format '{other}'"))),
        }
    }
}

impl ReportFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        }
    }
}

/// Something that can be written as a JSON document or a CSV table.
pub trait Report {
    fn is_empty(&self) -> bool;
    fn to_json(&self) -> Result<String>;
    fn to_csv(&self) -> Result<String>;
}

fn pretty_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::json("<report>", e))?;
    s.push('\n');
    Ok(s)
}

fn csv_string(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io("<csv>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub const SUMMARY_CSV_HEADER: [&str; 4] = ["selector", "scenario", "episodes", "success_rate"];
pub const BENCH_CSV_HEADER: [&str; 4] = ["method", "candidates", "median_ns", "pair_evaluations"];
pub const RECALL_CSV_HEADER: [&str; 3] = ["method", "n", "recall"];

impl Report for [SummaryRow] {
    fn is_empty(&self) -> bool {
        self.is_empty()
    }

    fn to_json(&self) -> Result<String> {
        pretty_json(self)
    }

    fn to_csv(&self) -> Result<String> {
        csv_string(
            &SUMMARY_CSV_HEADER,
            self.iter()
                .map(|r| {
                    vec![
                        r.selector.to_string(),
                        r.scenario.clone(),
                        r.episodes.to_string(),
                        r.success_rate.to_string(),
                    ]
                })
                .collect(),
        )
    }
}

impl Report for BenchReport {
    fn is_empty(&self) -> bool {
        self.candidate_counts.is_empty()
    }

    fn to_json(&self) -> Result<String> {
        pretty_json(self)
    }

    fn to_csv(&self) -> Result<String> {
        let mut rows = Vec::new();
        for timing in [&self.embedding, &self.pairwise] {
            for (i, &n) in self.candidate_counts.iter().enumerate() {
                let evals = if timing.method == self.pairwise.method {
                    self.pair_evaluations[i]
                } else {
                    0
                };
                rows.push(vec![
                    timing.method.clone(),
                    n.to_string(),
                    timing.median_ns[i].to_string(),
                    evals.to_string(),
                ]);
            }
        }
        csv_string(&BENCH_CSV_HEADER, rows)
    }
}

impl Report for RecallReport {
    fn is_empty(&self) -> bool {
        self.n.is_empty()
    }

    fn to_json(&self) -> Result<String> {
        pretty_json(self)
    }

    fn to_csv(&self) -> Result<String> {
        csv_string(
            &RECALL_CSV_HEADER,
            self.n
                .iter()
                .zip(&self.recall)
                .map(|(n, r)| vec![self.method.clone(), n.to_string(), r.to_string()])
                .collect(),
        )
    }
}

/// Writes `report` to `path`. Empty reports are refused and leave no file.
pub fn emit_report<R: Report + ?Sized>(report: &R, path: &Path, format: ReportFormat) -> Result<()> {
    if report.is_empty() {
        return Err(Error::EmptyReport("report has no rows"));
    }
    let text = match format {
        ReportFormat::Json => report.to_json()?,
        ReportFormat::Csv => report.to_csv()?,
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// One JSON object per line, in the given order.
pub fn write_records_jsonl(records: &[EpisodeRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyReport("no episode records"));
    }
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).map_err(|e| Error::json(path, e))?);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localization::Selector;

    fn ev(v: &[f32]) -> EmbeddingVector {
        EmbeddingVector::new(v.to_vec()).unwrap()
    }

    fn store(rows: &[&[f32]]) -> EmbeddingStore {
        EmbeddingStore::from_vectors(rows.iter().map(|r| ev(r)).collect()).unwrap()
    }

    fn nn() -> RetrievalMethod {
        RetrievalMethod::EmbeddingNn
    }

    #[test]
    fn exact_duplicate_is_a_hit() {
        let ds = RetrievalDataset::new(
            store(&[&[1.0, 0.0]]),
            vec![[10.0, 10.0]],
            store(&[&[0.0, 1.0], &[1.0, 0.0]]),
            vec![[500.0, 0.0], [10.0, 10.0]],
            25.0,
        )
        .unwrap();
        assert_eq!(recall_at_n(&ds, 1, &nn()).unwrap(), 1.0);
    }

    #[test]
    fn query_without_positive_never_hits() {
        let ds = RetrievalDataset::new(
            store(&[&[1.0, 0.0], &[0.0, 1.0]]),
            vec![[0.0, 0.0], [1000.0, 1000.0]],
            store(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]),
            vec![[0.0, 0.0], [5.0, 0.0], [0.0, 24.9]],
            25.0,
        )
        .unwrap();
        for n in 1..=3 {
            assert_eq!(recall_at_n(&ds, n, &nn()).unwrap(), 0.5);
        }
    }

    #[test]
    fn radius_is_inclusive_planar() {
        let ds = RetrievalDataset::new(
            store(&[&[1.0]]),
            vec![[0.0, 0.0]],
            store(&[&[1.0]]),
            vec![[15.0, 20.0]],
            25.0,
        )
        .unwrap();
        assert_eq!(recall_at_n(&ds, 1, &nn()).unwrap(), 1.0);
    }

    #[test]
    fn recall_errors() {
        let ds = RetrievalDataset::new(
            store(&[&[1.0]]),
            vec![[0.0, 0.0]],
            store(&[&[1.0], &[2.0]]),
            vec![[0.0, 0.0], [1.0, 1.0]],
            25.0,
        )
        .unwrap();
        assert!(matches!(recall_at_n(&ds, 3, &nn()), Err(Error::KOutOfRange { .. })));
        assert!(recall_at_n(&ds, 0, &nn()).is_err());
        assert!(RetrievalDataset::new(store(&[&[1.0]]), vec![], store(&[&[1.0]]), vec![[0.0, 0.0]], 25.0).is_err());
        assert!(RetrievalDataset::new(store(&[&[1.0]]), vec![[0.0, 0.0]], store(&[&[1.0]]), vec![[0.0, 0.0]], 0.0).is_err());

        let missing = EmbeddingFile::new(store(&[&[1.0]]), vec![Default::default()]).unwrap();
        assert!(matches!(
            RetrievalDataset::from_files(missing.clone(), missing, 25.0),
            Err(Error::MissingPosition(0))
        ));
    }

    #[test]
    fn pairwise_ranking_uses_surrogate() {
        let ds = RetrievalDataset::new(
            store(&[&[0.0]]),
            vec![[0.0, 0.0]],
            store(&[&[5.0], &[1.0], &[3.0]]),
            vec![[0.0, 0.0], [100.0, 0.0], [200.0, 0.0]],
            25.0,
        )
        .unwrap();
        // Surrogate inverts the embedding ranking: row 0 is scored best.
        let stub = PairwiseScorerStub::new(0, |_: &EmbeddingVector, c: &EmbeddingVector| -(c[0] as f64));
        let method = RetrievalMethod::PairwiseStub(stub);
        assert_eq!(recall_at_n(&ds, 1, &method).unwrap(), 1.0);
        assert_eq!(recall_at_n(&ds, 1, &nn()).unwrap(), 0.0);
        assert_eq!(recall_at_n(&ds, 3, &nn()).unwrap(), 1.0);
    }

    #[test]
    fn line_fit() {
        let f = fit_line(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]);
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fit_line(&[1.0, 2.0], &[4.0, 4.0]).r_squared, 1.0);
    }

    #[test]
    fn bench_validates_inputs() {
        assert!(runtime_scaling_bench(&[5, 21], 8, 10, 5).is_err());
        assert!(runtime_scaling_bench(&[5, 5, 21], 8, 10, 5).is_err());
        assert!(runtime_scaling_bench(&[5, 21, 101], 8, 10, 4).is_err());
    }

    #[test]
    fn bench_counts_pairs_exactly() {
        let r = runtime_scaling_bench(&[5, 21, 101], 16, 2_000, 5).unwrap();
        assert_eq!(r.pair_evaluations, vec![5, 21, 101]);
        assert_eq!(r.embedding.median_ns.len(), 3);
    }

    #[test]
    fn emit_summary_csv_and_refuse_empty() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![SummaryRow {
            selector: Selector::Bayes,
            scenario: "bursty".into(),
            episodes: 100,
            success_rate: 0.87,
        }];
        let path = dir.path().join("summary.csv");
        emit_report(rows.as_slice(), &path, ReportFormat::Csv).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "selector,scenario,episodes,success_rate\nbayes,bursty,100,0.87\n");

        let empty = dir.path().join("empty.csv");
        let none: Vec<SummaryRow> = vec![];
        assert!(matches!(
            emit_report(none.as_slice(), &empty, ReportFormat::Csv),
            Err(Error::EmptyReport(_))
        ));
        assert!(!empty.exists());
        assert!(write_records_jsonl(&[], &empty).is_err());
        assert!(!empty.exists());
    }

    #[test]
    fn emit_bench_json_round_trip_and_stable() {
        let dir = tempfile::tempdir().unwrap();
        let timing = |m: &str| MethodTiming {
            method: m.into(),
            median_ns: vec![10, 20, 30],
            slope_ns_per_candidate: 0.5,
            intercept_ns: 7.25,
            r_squared: 0.999,
            max_min_ratio: 3.0,
        };
        let report = BenchReport {
            candidate_counts: vec![5, 21, 101],
            embedding_dim: 512,
            per_pair_flops: 2_000_000,
            repetitions: 5,
            embedding: timing("embedding_nn"),
            pairwise: timing("pairwise_stub"),
            pair_evaluations: vec![5, 21, 101],
            config_hash: Some("abc".into()),
        };
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        emit_report(&report, &a, ReportFormat::Json).unwrap();
        emit_report(&report, &b, ReportFormat::Json).unwrap();
        let text = fs::read(&a).unwrap();
        assert_eq!(text, fs::read(&b).unwrap());
        let back: BenchReport = serde_json::from_slice(&text).unwrap();
        assert_eq!(back, report);

        let c = dir.path().join("c.csv");
        emit_report(&report, &c, ReportFormat::Csv).unwrap();
        let csv = fs::read_to_string(&c).unwrap();
        assert!(csv.starts_with("method,candidates,median_ns,pair_evaluations\n"));
        assert!(csv.contains("pairwise_stub,101,30,101\n"));
    }
}
