//! Benchmark runner invocation and ingestion of fork × iteration
//! measurements from JMH JSON or a flat CSV.

use std::collections::{BTreeMap, HashMap};
use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::process::{self, CommandSpec, SpawnError};

/// Header of the CSV format, exactly.
pub const CSV_HEADER: [&str; 5] = ["bench_id", "fork", "iteration", "value", "unit"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    ExecutionTime,
    MemoryUsage,
    Throughput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    LowerIsBetter,
    HigherIsBetter,
}

/// A metric together with the direction in which it improves. The polarity
/// is implied by the metric; deserialization rejects inconsistent pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawMetricKind")]
pub struct MetricKind {
    pub value: Metric,
    pub polarity: Polarity,
}

#[derive(Deserialize)]
struct RawMetricKind {
    value: Metric,
    polarity: Polarity,
}

impl TryFrom<RawMetricKind> for MetricKind {
    type Error = String;

    fn try_from(r: RawMetricKind) -> Result<MetricKind, String> {
        let kind = MetricKind::of(r.value);
        if kind.polarity != r.polarity {
            return Err(format!(
                "{:?} cannot have polarity {:?}",
                r.value, r.polarity
            ));
        }
        Ok(kind)
    }
}

impl MetricKind {
    pub const EXECUTION_TIME: MetricKind = MetricKind::of(Metric::ExecutionTime);
    pub const MEMORY_USAGE: MetricKind = MetricKind::of(Metric::MemoryUsage);
    pub const THROUGHPUT: MetricKind = MetricKind::of(Metric::Throughput);

    pub const fn of(value: Metric) -> MetricKind {
        let polarity = match value {
            Metric::ExecutionTime | Metric::MemoryUsage => Polarity::LowerIsBetter,
            Metric::Throughput => Polarity::HigherIsBetter,
        };
        MetricKind { value, polarity }
    }

    /// Infers the metric from a unit string: `ops/<t>` is throughput,
    /// `<t>/op` (or a bare time unit) execution time, and byte units memory.
    pub fn from_unit(unit: &str) -> Result<MetricKind, IngestError> {
        const TIME: [&str; 5] = ["s", "ms", "us", "µs", "ns"];
        const MEMORY: [&str; 7] = ["B", "KB", "MB", "GB", "bytes", "B/op", "bytes/op"];
        let u = unit.trim();
        if u.strip_prefix("ops/")
            .is_some_and(|t| TIME.contains(&t) || t == "min")
        {
            return Ok(MetricKind::THROUGHPUT);
        }
        if TIME.contains(&u.strip_suffix("/op").unwrap_or(u)) {
            return Ok(MetricKind::EXECUTION_TIME);
        }
        if MEMORY.contains(&u) {
            return Ok(MetricKind::MEMORY_USAGE);
        }
        Err(IngestError::Unit(unit.to_string()))
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&self.value, f)
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("unknown unit {0:?}")]
    Unit(String),
    #[error("non-finite measurement in {0}")]
    NonFiniteValue(String),
    #[error("non-positive measurement {value} in {bench_id}")]
    NonPositiveValue { bench_id: String, value: f64 },
}

/// Measurements of one benchmark on one program version: `forks[f][i]` is
/// iteration `i` of fork `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSample {
    pub bench_id: String,
    pub version_label: String,
    pub metric: MetricKind,
    pub forks: Vec<Vec<f64>>,
    pub unit: String,
}

impl BenchSample {
    /// Checks the shape and values: at least one fork, no empty fork, every
    /// measurement finite and positive, and a unit that matches the metric.
    pub fn new(
        bench_id: impl Into<String>,
        version_label: impl Into<String>,
        unit: impl Into<String>,
        forks: Vec<Vec<f64>>,
    ) -> Result<BenchSample, IngestError> {
        let unit = unit.into();
        let sample = BenchSample {
            bench_id: bench_id.into(),
            version_label: version_label.into(),
            metric: MetricKind::from_unit(&unit)?,
            forks,
            unit,
        };
        sample.validate()?;
        Ok(sample)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.forks.is_empty() {
            return Err(IngestError::Schema(format!("{}: no forks", self.bench_id)));
        }
        if let Some(f) = self.forks.iter().position(Vec::is_empty) {
            return Err(IngestError::Schema(format!(
                "{}: fork {f} has no iterations",
                self.bench_id
            )));
        }
        if MetricKind::from_unit(&self.unit)? != self.metric {
            return Err(IngestError::Schema(format!(
                "{}: unit {} is not a {} unit",
                self.bench_id, self.unit, self.metric
            )));
        }
        for &v in self.forks.iter().flatten() {
            if !v.is_finite() {
                return Err(IngestError::NonFiniteValue(self.bench_id.clone()));
            }
            if v <= 0.0 {
                return Err(IngestError::NonPositiveValue {
                    bench_id: self.bench_id.clone(),
                    value: v,
                });
            }
        }
        Ok(())
    }

    pub fn measurement_count(&self) -> usize {
        self.forks.iter().map(Vec::len).sum()
    }

    /// Arithmetic mean over all measurements.
    pub fn mean(&self) -> f64 {
        let (sum, n) = self
            .forks
            .iter()
            .flatten()
            .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        sum / n as f64
    }

    /// Same measurements multiplied by `k`.
    pub fn scaled(&self, k: f64) -> BenchSample {
        BenchSample {
            forks: self
                .forks
                .iter()
                .map(|f| f.iter().map(|v| v * k).collect())
                .collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResultFormat {
    #[default]
    JmhJson,
    Csv,
}

impl FromStr for ResultFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<ResultFormat, String> {
        match s {
            "jmh_json" | "jmh" | "json" => Ok(ResultFormat::JmhJson),
            "csv" => Ok(ResultFormat::Csv),
            _ => Err(format!(
                "unknown result format {s:?} (expected jmh_json or csv)"
            )),
        }
    }
}

pub fn parse_results(
    format: ResultFormat,
    path: &Path,
    version_label: &str,
) -> Result<Vec<BenchSample>, IngestError> {
    match format {
        ResultFormat::JmhJson => parse_jmh_json(path, version_label),
        ResultFormat::Csv => parse_csv(path, version_label),
    }
}

fn read(path: &Path) -> Result<String, IngestError> {
    fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_jmh_json(path: &Path, version_label: &str) -> Result<Vec<BenchSample>, IngestError> {
    parse_jmh_str(&read(path)?, version_label)
}

/// Parses a JMH result array. Benchmark parameters, when present, become
/// part of the id: `pkg.Bench.method?n=10&mode=fast` (keys sorted).
pub fn parse_jmh_str(text: &str, version_label: &str) -> Result<Vec<BenchSample>, IngestError> {
    let schema = |m: String| IngestError::Schema(m);
    let root: Value = serde_json::from_str(text).map_err(|e| schema(e.to_string()))?;
    let entries = root
        .as_array()
        .ok_or_else(|| schema("top level is not an array".into()))?;
    let mut seen = HashMap::new();
    let mut out = Vec::with_capacity(entries.len());
    for (i, entry) in entries.iter().enumerate() {
        let name = entry
            .get("benchmark")
            .and_then(Value::as_str)
            .ok_or_else(|| schema(format!("entry {i}: missing benchmark")))?;
        let bench_id = match entry.get("params").and_then(Value::as_object) {
            Some(params) if !params.is_empty() => {
                let sorted: BTreeMap<&String, String> = params
                    .iter()
                    .map(|(k, v)| (k, v.as_str().map_or_else(|| v.to_string(), str::to_string)))
                    .collect();
                let q: Vec<String> = sorted.iter().map(|(k, v)| format!("{k}={v}")).collect();
                format!("{name}?{}", q.join("&"))
            }
            _ => name.to_string(),
        };
        if let Some(prev) = seen.insert(bench_id.clone(), i) {
            return Err(schema(format!(
                "entries {prev} and {i} both describe {bench_id}"
            )));
        }
        let metric = entry
            .get("primaryMetric")
            .ok_or_else(|| schema(format!("{bench_id}: missing primaryMetric")))?;
        let unit = metric
            .get("scoreUnit")
            .and_then(Value::as_str)
            .ok_or_else(|| schema(format!("{bench_id}: missing primaryMetric.scoreUnit")))?;
        let raw = metric
            .get("rawData")
            .and_then(Value::as_array)
            .ok_or_else(|| schema(format!("{bench_id}: missing primaryMetric.rawData")))?;
        let forks = raw
            .iter()
            .map(|fork| {
                fork.as_array()
                    .ok_or_else(|| schema(format!("{bench_id}: rawData fork is not an array")))?
                    .iter()
                    .map(|v| jmh_number(v, &bench_id))
                    .collect::<Result<Vec<f64>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push(BenchSample::new(bench_id, version_label, unit, forks)?);
    }
    Ok(out)
}

/// JMH writes non-finite scores as strings.
fn jmh_number(v: &Value, bench_id: &str) -> Result<f64, IngestError> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| IngestError::Schema(format!("{bench_id}: bad number {n}"))),
        Value::String(s) if matches!(s.as_str(), "NaN" | "Infinity" | "-Infinity") => {
            Err(IngestError::NonFiniteValue(bench_id.to_string()))
        }
        other => Err(IngestError::Schema(format!(
            "{bench_id}: {other} is not a number"
        ))),
    }
}

pub fn parse_csv(path: &Path, version_label: &str) -> Result<Vec<BenchSample>, IngestError> {
    parse_csv_str(&read(path)?, version_label)
}

/// Parses `bench_id,fork,iteration,value,unit` rows. Samples come out in
/// order of first appearance; forks and iterations are ordered by their
/// index columns.
pub fn parse_csv_str(text: &str, version_label: &str) -> Result<Vec<BenchSample>, IngestError> {
    let schema = |m: String| IngestError::Schema(m);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::None)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| schema(e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(schema(format!(
            "header must be {}, found {}",
            CSV_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }

    struct Acc {
        unit: String,
        forks: BTreeMap<u64, BTreeMap<u64, f64>>,
    }
    let mut order: Vec<String> = Vec::new();
    let mut benches: HashMap<String, Acc> = HashMap::new();
    for (row, rec) in reader.records().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| schema(e.to_string()))?;
        let field = |i: usize| rec.get(i).unwrap_or_default();
        let bench_id = field(0).to_string();
        if bench_id.is_empty() {
            return Err(schema(format!("line {line}: empty bench_id")));
        }
        let index = |i: usize| -> Result<u64, IngestError> {
            field(i).parse().map_err(|_| {
                schema(format!(
                    "line {line}: {} {:?} is not an index",
                    CSV_HEADER[i],
                    field(i)
                ))
            })
        };
        let (fork, iteration) = (index(1)?, index(2)?);
        let value: f64 = field(3)
            .parse()
            .map_err(|_| schema(format!("line {line}: value {:?} is not a number", field(3))))?;
        if !value.is_finite() {
            return Err(IngestError::NonFiniteValue(format!(
                "{bench_id} (line {line})"
            )));
        }
        let unit = field(4);
        let acc = benches.entry(bench_id.clone()).or_insert_with(|| {
            order.push(bench_id.clone());
            Acc {
                unit: unit.to_string(),
                forks: BTreeMap::new(),
            }
        });
        if acc.unit != unit {
            return Err(schema(format!(
                "line {line}: {bench_id} mixes units {} and {unit}",
                acc.unit
            )));
        }
        if acc
            .forks
            .entry(fork)
            .or_default()
            .insert(iteration, value)
            .is_some()
        {
            return Err(schema(format!(
                "line {line}: duplicate ({bench_id}, {fork}, {iteration})"
            )));
        }
    }
    order
        .into_iter()
        .map(|id| {
            let acc = benches.remove(&id).expect("recorded");
            let forks = acc
                .forks
                .into_values()
                .map(|it| it.into_values().collect())
                .collect();
            BenchSample::new(id, version_label, acc.unit, forks)
        })
        .collect()
}

/// Renders samples in the CSV format, forks and iterations numbered from 0.
/// Values use the shortest representation that round-trips.
pub fn write_csv(samples: &[BenchSample]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for s in samples {
        for (f, fork) in s.forks.iter().enumerate() {
            for (i, v) in fork.iter().enumerate() {
                w.write_record([
                    s.bench_id.as_str(),
                    &f.to_string(),
                    &i.to_string(),
                    &v.to_string(),
                    &s.unit,
                ])
                .expect("in-memory write");
            }
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Spawn(#[from] SpawnError),
    #[error("benchmark runner exited with {status}: {stderr}")]
    RunnerFailed { status: String, stderr: String },
    #[error("benchmark runner timed out after {0:?}")]
    Timeout(Duration),
    #[error("benchmark runner produced no result at {0}")]
    MissingResult(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// One runner process per host at a time.
static RUNNER_LOCK: Mutex<()> = Mutex::new(());

/// Labels passed to the runner through the environment.
#[derive(Debug, Clone, Default)]
pub struct RunLabels<'a> {
    pub version_label: &'a str,
    pub env_label: Option<&'a str>,
}

/// Runs the benchmark command in `workspace` and returns the result file.
/// `result_path` is relative to the workspace unless absolute; a stale
/// file there is removed first so only fresh output counts. The runner sees
/// `PERFMUT_VERSION_LABEL`, `PERFMUT_ENV_LABEL` and `PERFMUT_RESULT_PATH`.
/// Calls are serialized process-wide.
pub fn run_benchmarks(
    workspace: &Path,
    runner_cmd: &CommandSpec,
    result_path: &Path,
    timeout: Duration,
    labels: &RunLabels<'_>,
) -> Result<PathBuf, RunError> {
    let result = workspace.join(result_path);
    let io = |source| RunError::Io {
        path: result.clone(),
        source,
    };
    match fs::remove_file(&result) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => return Err(io(e)),
        _ => {}
    }
    let env: Vec<(&str, OsString)> = vec![
        ("PERFMUT_VERSION_LABEL", labels.version_label.into()),
        ("PERFMUT_ENV_LABEL", labels.env_label.unwrap_or("").into()),
        ("PERFMUT_RESULT_PATH", result.clone().into_os_string()),
    ];
    let outcome = {
        let _guard = RUNNER_LOCK.lock().unwrap_or_else(|p| p.into_inner());
        tracing::info!(label = labels.version_label, "running benchmarks");
        process::run(runner_cmd, workspace, &env, timeout)?
    };
    match outcome.status {
        None => return Err(RunError::Timeout(timeout)),
        Some(s) if !s.success() => {
            return Err(RunError::RunnerFailed {
                status: s.to_string(),
                stderr: process::excerpt(&outcome.stderr, 4096),
            })
        }
        Some(_) => {}
    }
    match fs::metadata(&result) {
        Ok(m) if m.len() > 0 => Ok(result),
        _ => Err(RunError::MissingResult(result)),
    }
}
