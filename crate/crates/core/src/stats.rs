//! Hierarchical bootstrap on the ratio of means, kill decisions and the
//! mutation score.
//!
//! # Resampling
//!
//! One replicate draws `k` forks with replacement from the `k` forks of a
//! sample, then, inside every drawn fork, as many iterations with
//! replacement as that fork has. The replicate statistic is the mean of the
//! per-fork means, so unbalanced forks weigh equally.
//!
//! # Random streams
//!
//! Replicate `b` of a comparison on benchmark `id` uses a ChaCha8 generator
//! keyed with `SHA-256(seed as u64 LE ‖ id)` and positioned on stream `b`.
//! Within a replicate the treatment is resampled first, then the baseline.
//! Indices are drawn with `random_range` over `u32`. Replicates are computed
//! in parallel and collected by index, so results do not depend on the
//! thread count.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bench_ingest::{BenchSample, IngestError, Metric, MetricKind, Polarity};

/// Smallest replicate count accepted for reported results.
pub const MIN_ITERATIONS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapConfig {
    /// Replicate count `B`.
    pub iterations: usize,
    pub confidence: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            iterations: 10_000,
            confidence: 0.95,
            seed: 42,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<(), StatsError> {
        if self.iterations < MIN_ITERATIONS {
            return Err(StatsError::Config(format!(
                "bootstrap iterations must be >= {MIN_ITERATIONS}, got {}",
                self.iterations
            )));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(StatsError::Config(format!(
                "confidence must lie in (0, 1), got {}",
                self.confidence
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("{0}")]
    Config(String),
    #[error("cannot compare {bench} across metrics {baseline} and {treatment}")]
    MetricMismatch {
        bench: String,
        baseline: MetricKind,
        treatment: MetricKind,
    },
    #[error("cannot compare {bench} across units {baseline} and {treatment}")]
    UnitMismatch {
        bench: String,
        baseline: String,
        treatment: String,
    },
    #[error("cannot compare different benchmarks {baseline} and {treatment}")]
    BenchMismatch { baseline: String, treatment: String },
    #[error(transparent)]
    Sample(#[from] IngestError),
    #[error("no valid mutants")]
    EmptyCampaign,
    #[error("comparison for {0} which is not a valid mutant")]
    UnknownMutant(String),
}

/// Outcome of comparing a treatment against a baseline on one benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub bench_id: String,
    pub baseline_label: String,
    pub treatment_label: String,
    pub metric: MetricKind,
    /// Mean of the treatment over mean of the baseline, on the data.
    #[serde(serialize_with = "float17")]
    pub ratio_point: f64,
    #[serde(serialize_with = "float17")]
    pub ci_low: f64,
    #[serde(serialize_with = "float17")]
    pub ci_high: f64,
    /// The interval excludes 1.
    pub significant: bool,
    /// The treatment is significantly worse under the metric's polarity.
    pub killed: bool,
    #[serde(serialize_with = "float17")]
    pub percent_change: f64,
    #[serde(serialize_with = "float17")]
    pub percent_halfwidth: f64,
}

impl Comparison {
    /// Significantly better under the metric's polarity; the verdict a
    /// performance fix is expected to earn.
    pub fn improved(&self) -> bool {
        match self.metric.polarity {
            Polarity::LowerIsBetter => self.ci_high < 1.0,
            Polarity::HigherIsBetter => self.ci_low > 1.0,
        }
    }

    /// `"5.5% ± 2.5% faster"`: the relative change with the interval's
    /// half-width, one decimal each, and its direction.
    pub fn effect_phrase(&self) -> String {
        format!(
            "{:.1}% ± {:.1}% {}",
            self.percent_change,
            self.percent_halfwidth,
            direction(self.metric.value, self.ratio_point)
        )
    }
}

fn direction(metric: Metric, ratio: f64) -> &'static str {
    use std::cmp::Ordering::*;
    match (metric, ratio.total_cmp(&1.0)) {
        (_, Equal) => "unchanged",
        (Metric::ExecutionTime, Greater) | (Metric::Throughput, Less) => "slower",
        (Metric::ExecutionTime, Less) | (Metric::Throughput, Greater) => "faster",
        (Metric::MemoryUsage, Greater) => "larger",
        (Metric::MemoryUsage, Less) => "smaller",
    }
}

/// 17 significant digits: enough to round-trip any `f64`.
pub fn format_float17(v: f64) -> String {
    format!("{v:.16e}")
}

fn float17<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    let raw = serde_json::value::RawValue::from_string(format_float17(*v))
        .map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

/// Mean anchored at the first element: exact for constant input, and no
/// worse than a plain sum otherwise.
fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len() as f64;
    let mut values = values.peekable();
    let anchor = *values.peek().expect("non-empty");
    anchor + values.map(|v| v - anchor).sum::<f64>() / n
}

/// Mean of all measurements in the sample.
pub fn pooled_mean(sample: &BenchSample) -> f64 {
    let all: Vec<f64> = sample.forks.iter().flatten().copied().collect();
    mean(all.into_iter())
}

/// One hierarchical resample of `sample`: forks with replacement, then
/// iterations with replacement within each drawn fork; returns the mean of
/// the per-fork means.
pub fn hierarchical_resample<R: RngExt + ?Sized>(sample: &BenchSample, rng: &mut R) -> f64 {
    let k = sample.forks.len() as u32;
    let fork_means = (0..k).map(|_| {
        let fork = &sample.forks[rng.random_range(0..k) as usize];
        let n = fork.len() as u32;
        let draws: Vec<f64> = (0..n)
            .map(|_| fork[rng.random_range(0..n) as usize])
            .collect();
        mean(draws.into_iter())
    });
    let fork_means: Vec<f64> = fork_means.collect();
    mean(fork_means.into_iter())
}

/// Generator for replicate `b` of benchmark `bench_id`.
pub fn replicate_rng(seed: u64, bench_id: &str, b: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(bench_id.as_bytes());
    let mut rng = ChaCha8Rng::from_seed(h.finalize().into());
    rng.set_stream(b);
    rng
}

/// `count` resampled means of a single sample, replicate `b` drawn from
/// stream `b` of the `(seed, bench_id)` key.
pub fn resample_means(sample: &BenchSample, seed: u64, count: usize) -> Vec<f64> {
    (0..count as u64)
        .into_par_iter()
        .map(|b| hierarchical_resample(sample, &mut replicate_rng(seed, &sample.bench_id, b)))
        .collect()
}

/// The bootstrap distribution of the ratio of means, in replicate order.
pub fn bootstrap_ratios(
    baseline: &BenchSample,
    treatment: &BenchSample,
    iterations: usize,
    seed: u64,
) -> Vec<f64> {
    (0..iterations as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = replicate_rng(seed, &baseline.bench_id, b);
            let t = hierarchical_resample(treatment, &mut rng);
            let base = hierarchical_resample(baseline, &mut rng);
            t / base
        })
        .collect()
}

/// Linear-interpolation percentile (Hyndman–Fan type 7) of sorted data.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    if frac == 0.0 || sorted[lo] == sorted[hi] {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

fn check_pair(baseline: &BenchSample, treatment: &BenchSample) -> Result<(), StatsError> {
    baseline.validate()?;
    treatment.validate()?;
    if baseline.bench_id != treatment.bench_id {
        return Err(StatsError::BenchMismatch {
            baseline: baseline.bench_id.clone(),
            treatment: treatment.bench_id.clone(),
        });
    }
    if baseline.metric != treatment.metric {
        return Err(StatsError::MetricMismatch {
            bench: baseline.bench_id.clone(),
            baseline: baseline.metric,
            treatment: treatment.metric,
        });
    }
    if baseline.unit != treatment.unit {
        return Err(StatsError::UnitMismatch {
            bench: baseline.bench_id.clone(),
            baseline: baseline.unit.clone(),
            treatment: treatment.unit.clone(),
        });
    }
    Ok(())
}

/// Percentile bootstrap CI of the ratio of means and the kill verdict.
pub fn compare(
    baseline: &BenchSample,
    treatment: &BenchSample,
    cfg: &BootstrapConfig,
) -> Result<Comparison, StatsError> {
    cfg.validate()?;
    check_pair(baseline, treatment)?;
    let mut ratios = bootstrap_ratios(baseline, treatment, cfg.iterations, cfg.seed);
    ratios.sort_by(f64::total_cmp);
    let alpha = 1.0 - cfg.confidence;
    let ci_low = percentile(&ratios, alpha / 2.0);
    let ci_high = percentile(&ratios, 1.0 - alpha / 2.0);
    let ratio_point = pooled_mean(treatment) / pooled_mean(baseline);
    let significant = !(ci_low <= 1.0 && 1.0 <= ci_high);
    let killed = match baseline.metric.polarity {
        Polarity::LowerIsBetter => ci_low > 1.0,
        Polarity::HigherIsBetter => ci_high < 1.0,
    };
    Ok(Comparison {
        bench_id: baseline.bench_id.clone(),
        baseline_label: baseline.version_label.clone(),
        treatment_label: treatment.version_label.clone(),
        metric: baseline.metric,
        ratio_point,
        ci_low,
        ci_high,
        significant,
        killed,
        percent_change: (ratio_point - 1.0).abs() * 100.0,
        percent_halfwidth: (ci_high - ci_low) / 2.0 * 100.0,
    })
}

/// Pre-fix versus post-fix: the same machinery with the pre-fix version as
/// baseline. The fix is confirmed when [`Comparison::improved`] holds.
pub fn test_fix_effectiveness(
    prefix: &BenchSample,
    postfix: &BenchSample,
    cfg: &BootstrapConfig,
) -> Result<Comparison, StatsError> {
    compare(prefix, postfix, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationScore {
    pub killed_count: usize,
    pub total_valid: usize,
    pub score: f64,
}

/// Fraction of valid mutants killed by at least one benchmark. Mutants
/// without any comparison count as survivors.
pub fn mutation_score(
    comparisons: &[Comparison],
    valid_mutants: &[String],
) -> Result<MutationScore, StatsError> {
    let valid: BTreeSet<&str> = valid_mutants.iter().map(String::as_str).collect();
    if valid.is_empty() {
        return Err(StatsError::EmptyCampaign);
    }
    let mut killed: BTreeMap<&str, bool> = BTreeMap::new();
    for c in comparisons {
        let id = c.treatment_label.as_str();
        if !valid.contains(id) {
            return Err(StatsError::UnknownMutant(id.to_string()));
        }
        *killed.entry(id).or_default() |= c.killed;
    }
    let killed_count = killed.values().filter(|k| **k).count();
    Ok(MutationScore {
        killed_count,
        total_valid: valid.len(),
        score: killed_count as f64 / valid.len() as f64,
    })
}

/// Column order of [`comparisons_csv`].
pub const COMPARISON_COLUMNS: [&str; 11] = [
    "bench_id",
    "baseline_label",
    "treatment_label",
    "metric",
    "ratio_point",
    "ci_low",
    "ci_high",
    "significant",
    "killed",
    "percent_change",
    "percent_halfwidth",
];

pub fn comparisons_csv(rows: &[Comparison]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COMPARISON_COLUMNS).expect("in-memory write");
    for c in rows {
        w.write_record([
            c.bench_id.clone(),
            c.baseline_label.clone(),
            c.treatment_label.clone(),
            c.metric.to_string(),
            format_float17(c.ratio_point),
            format_float17(c.ci_low),
            format_float17(c.ci_high),
            c.significant.to_string(),
            c.killed.to_string(),
            format_float17(c.percent_change),
            format_float17(c.percent_halfwidth),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn comparisons_json(rows: &[Comparison]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("comparisons serialize");
    s.push('\n');
    s
}

/// Plain-text verdict for one comparison, as printed by the CLI.
pub fn describe(c: &Comparison) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "benchmark: {}", c.bench_id);
    let _ = writeln!(s, "baseline:  {}", c.baseline_label);
    let _ = writeln!(s, "treatment: {}", c.treatment_label);
    let _ = writeln!(s, "ratio:     {}", c.ratio_point);
    let _ = writeln!(s, "ci:        [{}, {}]", c.ci_low, c.ci_high);
    let _ = writeln!(s, "effect:    {}", c.effect_phrase());
    let verdict = if c.killed {
        "killed (significantly worse)"
    } else if c.improved() {
        "improved (significantly better)"
    } else {
        "no significant difference"
    };
    let _ = writeln!(s, "verdict:   {verdict}");
    s
}
