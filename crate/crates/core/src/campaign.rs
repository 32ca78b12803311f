//! End-to-end campaign steps over a [`CampaignConfig`]: site discovery,
//! mutant generation and validation, benchmark runs and analysis.
//!
//! State lives under the configured state directory:
//!
//! ```text
//! manifest.jsonl          one mutant per line
//! validation.jsonl        build/test outcome per validated mutant
//! workspaces/<label>/     project copies (baseline and valid mutants)
//! results/<label>/<run>/  one directory per benchmark run
//! reports/                report.{json,md,csv}, comparisons.{json,csv}
//! ```

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench_ingest::{self, BenchSample, IngestError, ResultFormat, RunError, RunLabels};
use crate::config::{CampaignConfig, ConfigError};
use crate::mutagen::{self, MutagenError, Mutant, MutantStatus, ValidationResult};
use crate::operators::OperatorId;
use crate::reporting::{
    self, CampaignReport, ReportError, ReportFormat, ReportMetadata, YieldCounts,
};
use crate::source_model::{self, CoverageError, CoverageMap, MutationSite, SourceError};
use crate::stats::{self, BootstrapConfig, Comparison, StatsError};

pub const BASELINE_LABEL: &str = "baseline";
const RUN_DIR_FORMAT: &str = "%Y%m%dT%H%M%S%.6fZ";

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("coverage: {0}")]
    Coverage(#[from] CoverageError),
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error("the unmodified project does not pass validation:\n{}", .0.log_excerpt)]
    BaselineInvalid(ValidationResult),
    #[error(transparent)]
    Mutagen(#[from] MutagenError),
    #[error("mutant {mutant_id} is {status} and cannot be benchmarked")]
    NotBenchmarkable {
        mutant_id: String,
        status: MutantStatus,
    },
    #[error("unknown mutant {0}")]
    UnknownMutant(String),
    #[error(transparent)]
    Runner(#[from] RunError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{0}")]
    MissingState(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CampaignError {
    /// Process exit code: 1 usage, 2 configuration, 3 build/test, 4 runner,
    /// 5 analysis.
    pub fn exit_code(&self) -> i32 {
        match self {
            CampaignError::UnknownMutant(_) => 1,
            CampaignError::Config(_) | CampaignError::Coverage(_) => 2,
            CampaignError::Source(_)
            | CampaignError::BaselineInvalid(_)
            | CampaignError::Mutagen(_)
            | CampaignError::NotBenchmarkable { .. } => 3,
            CampaignError::Runner(_) => 4,
            CampaignError::Ingest(_)
            | CampaignError::Stats(_)
            | CampaignError::Report(_)
            | CampaignError::MissingState(_)
            | CampaignError::Io { .. } => 5,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CampaignError + '_ {
    move |source| CampaignError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub struct Campaign {
    pub cfg: CampaignConfig,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SiteListing {
    pub sites: Vec<MutationSite>,
    /// Files skipped because they could not be parsed.
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MutateSummary {
    pub mutants: Vec<Mutant>,
    pub results: Vec<ValidationResult>,
    #[serde(rename = "yield")]
    pub yield_counts: std::collections::BTreeMap<OperatorId, YieldCounts>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BenchTarget {
    Baseline,
    Mutant(String),
    AllValid,
}

impl std::str::FromStr for BenchTarget {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<BenchTarget, Self::Err> {
        Ok(match s {
            "baseline" => BenchTarget::Baseline,
            "all-valid" => BenchTarget::AllValid,
            id => BenchTarget::Mutant(id.to_string()),
        })
    }
}

/// Metadata written next to each stored result file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub version_label: String,
    pub env_label: String,
    pub format: ResultFormat,
    pub command: String,
    pub started_at: String,
    pub finished_at: String,
    /// Fork and iteration counts found per benchmark, as configured in the
    /// user's runner.
    pub shapes: Vec<BenchShape>,
    #[serde(skip)]
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchShape {
    pub bench_id: String,
    pub forks: usize,
    pub iterations: Vec<usize>,
}

pub struct Analysis {
    pub report: CampaignReport,
    pub comparisons: Vec<Comparison>,
    pub reports_dir: PathBuf,
}

impl Campaign {
    pub fn new(cfg: CampaignConfig) -> Campaign {
        Campaign { cfg }
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.cfg.state_dir.join("manifest.jsonl")
    }

    pub fn validation_path(&self) -> PathBuf {
        self.cfg.state_dir.join("validation.jsonl")
    }

    pub fn workspaces_dir(&self) -> PathBuf {
        self.cfg.state_dir.join("workspaces")
    }

    pub fn results_dir(&self) -> PathBuf {
        self.cfg.state_dir.join("results")
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.cfg.state_dir.join("reports")
    }

    /// `.java` files under the configured source directories, relative to
    /// the project root, sorted. The state directory and version-control
    /// directories are skipped.
    pub fn source_files(&self) -> Result<Vec<PathBuf>, CampaignError> {
        let root = &self.cfg.project_root;
        let mut files = Vec::new();
        for src in &self.cfg.sources {
            let walker = walkdir::WalkDir::new(root.join(src))
                .sort_by_file_name()
                .into_iter()
                .filter_entry(|e| {
                    e.path() != self.cfg.state_dir
                        && !(e.file_type().is_dir()
                            && mutagen::SKIPPED_DIRS.iter().any(|d| e.file_name() == *d))
                });
            for entry in walker {
                let entry = entry.map_err(|e| CampaignError::Io {
                    path: e.path().unwrap_or(root).to_path_buf(),
                    source: e.into(),
                })?;
                if entry.file_type().is_file()
                    && source_model::Language::from_path(entry.path()).is_some()
                {
                    let rel = entry.path().strip_prefix(root).expect("under root");
                    files.push(rel.to_path_buf());
                }
            }
        }
        files.sort();
        files.dedup();
        Ok(files)
    }

    fn coverage(&self) -> Result<Option<CoverageMap>, CampaignError> {
        Ok(match &self.cfg.coverage_path {
            Some(p) => Some(CoverageMap::load(p)?),
            None => None,
        })
    }

    pub fn sites(&self) -> Result<SiteListing, CampaignError> {
        let coverage = self.coverage()?;
        let mut out = SiteListing::default();
        for rel in self.source_files()? {
            match source_model::parse_unit_at(&self.cfg.project_root, &rel) {
                Ok(unit) => {
                    for span in unit.orphan_errors() {
                        out.warnings.push(format!(
                            "{}: syntax error at {span} outside any method",
                            unit.path_str()
                        ));
                    }
                    for m in unit.methods().iter().filter(|m| !m.usable) {
                        out.warnings.push(format!(
                            "{}: skipping {} (syntax errors)",
                            unit.path_str(),
                            m.signature
                        ));
                    }
                    out.sites.extend(source_model::discover_sites(
                        &unit,
                        &self.cfg.operators,
                        coverage.as_ref(),
                        &self.cfg.operator_config,
                    ));
                }
                Err(e @ (SourceError::FatalParse { .. } | SourceError::Encoding { .. })) => {
                    out.warnings.push(format!("skipping {e}"));
                }
                Err(e) => return Err(e.into()),
            }
        }
        Ok(out)
    }

    /// Generates every mutant, checks the pristine project first, validates
    /// the mutants and writes the manifest.
    pub fn mutate(&self) -> Result<MutateSummary, CampaignError> {
        let root = &self.cfg.project_root;
        let listing = self.sites()?;
        for w in &listing.warnings {
            tracing::warn!("{w}");
        }
        let mut mutants =
            mutagen::generate_mutants(root, &listing.sites, &self.cfg.operator_config)?;
        let cmds = self.cfg.validation_commands();

        let baseline_ws = self.workspaces_dir().join(BASELINE_LABEL);
        mutagen::copy_project(root, &baseline_ws)?;
        let baseline =
            mutagen::validate(BASELINE_LABEL, &baseline_ws, &cmds).map_err(MutagenError::from)?;
        if baseline.status() != MutantStatus::Valid {
            return Err(CampaignError::BaselineInvalid(baseline));
        }

        let results = mutagen::validate_all(
            root,
            &mut mutants,
            &self.workspaces_dir(),
            &cmds,
            self.cfg.workers,
        )?;
        mutagen::persist_campaign(&mutants, &results, &self.manifest_path())?;
        let mut log = Vec::new();
        for r in &results {
            serde_json::to_writer(&mut log, r).expect("result serializes");
            log.push(b'\n');
        }
        mutagen::write_atomic(&self.validation_path(), &log)?;
        Ok(MutateSummary {
            yield_counts: reporting::yield_by_operator(&mutants),
            mutants,
            results,
        })
    }

    pub fn load_manifest(&self) -> Result<Vec<Mutant>, CampaignError> {
        let path = self.manifest_path();
        if !path.exists() {
            return Err(CampaignError::MissingState(format!(
                "no manifest at {}; run `perfmut mutate` first",
                path.display()
            )));
        }
        Ok(mutagen::load_manifest(&path)?)
    }

    /// Runs benchmarks for the target; each run is stored in a new
    /// timestamped directory. Mutants run one after another in manifest
    /// order, and only valid ones are accepted.
    pub fn bench(&self, target: &BenchTarget) -> Result<Vec<RunRecord>, CampaignError> {
        match target {
            BenchTarget::Baseline => {
                let ws = self.workspaces_dir().join(BASELINE_LABEL);
                mutagen::copy_project(&self.cfg.project_root, &ws)?;
                Ok(vec![self.bench_workspace(&ws, BASELINE_LABEL)?])
            }
            BenchTarget::Mutant(id) => {
                let mut mutants = self.load_manifest()?;
                let idx = mutants
                    .iter()
                    .position(|m| &m.mutant_id == id)
                    .ok_or_else(|| CampaignError::UnknownMutant(id.clone()))?;
                let run = self.bench_mutant(&mut mutants, idx)?;
                Ok(vec![run])
            }
            BenchTarget::AllValid => {
                let mut mutants = self.load_manifest()?;
                let mut runs = Vec::new();
                for idx in 0..mutants.len() {
                    if mutants[idx].status.is_valid() {
                        runs.push(self.bench_mutant(&mut mutants, idx)?);
                    }
                }
                Ok(runs)
            }
        }
    }

    fn bench_mutant(&self, mutants: &mut [Mutant], idx: usize) -> Result<RunRecord, CampaignError> {
        let m = &mutants[idx];
        if !m.status.is_valid() {
            return Err(CampaignError::NotBenchmarkable {
                mutant_id: m.mutant_id.clone(),
                status: m.status,
            });
        }
        let ws = self.workspaces_dir().join(&m.mutant_id);
        if !ws.is_dir() {
            mutagen::materialize(&self.cfg.project_root, m, &ws)?;
        }
        let run = self.bench_workspace(&ws, &m.mutant_id.clone())?;
        if mutants[idx].status == MutantStatus::Valid {
            mutants[idx].advance(MutantStatus::Benchmarked)?;
            mutagen::persist_campaign(mutants, &[], &self.manifest_path())?;
        }
        Ok(run)
    }

    fn bench_workspace(&self, ws: &Path, label: &str) -> Result<RunRecord, CampaignError> {
        let started = Utc::now();
        let result = bench_ingest::run_benchmarks(
            ws,
            &self.cfg.bench_cmd,
            &self.cfg.result_path_for(label),
            self.cfg.bench_timeout,
            &RunLabels {
                version_label: label,
                env_label: Some(&self.cfg.env_label),
            },
        )?;
        let finished = Utc::now();
        let samples = bench_ingest::parse_results(self.cfg.result_format, &result, label)?;

        let label_dir = self.results_dir().join(label);
        let mut dir = label_dir.join(started.format(RUN_DIR_FORMAT).to_string());
        let mut n = 1;
        while dir.exists() {
            dir = label_dir.join(format!("{}-{n}", started.format(RUN_DIR_FORMAT)));
            n += 1;
        }
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let stored = dir.join(result_file_name(self.cfg.result_format));
        fs::copy(&result, &stored).map_err(io_err(&stored))?;
        let record = RunRecord {
            version_label: label.to_string(),
            env_label: self.cfg.env_label.clone(),
            format: self.cfg.result_format,
            command: self.cfg.bench_cmd.to_string(),
            started_at: started.to_rfc3339(),
            finished_at: finished.to_rfc3339(),
            shapes: samples
                .iter()
                .map(|s| BenchShape {
                    bench_id: s.bench_id.clone(),
                    forks: s.forks.len(),
                    iterations: s.forks.iter().map(Vec::len).collect(),
                })
                .collect(),
            dir: dir.clone(),
        };
        let meta = serde_json::to_vec_pretty(&record).expect("record serializes");
        mutagen::write_atomic(&dir.join("run.json"), &meta)?;
        Ok(record)
    }

    /// Latest stored run for `label`, if any.
    pub fn latest_run(&self, label: &str) -> Result<Option<RunRecord>, CampaignError> {
        let dir = self.results_dir().join(label);
        if !dir.is_dir() {
            return Ok(None);
        }
        let mut runs: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(io_err(&dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join("run.json").is_file())
            .collect();
        runs.sort();
        let Some(last) = runs.pop() else {
            return Ok(None);
        };
        let meta = last.join("run.json");
        let text = fs::read_to_string(&meta).map_err(io_err(&meta))?;
        let mut record: RunRecord = serde_json::from_str(&text).map_err(|e| CampaignError::Io {
            path: meta.clone(),
            source: e.into(),
        })?;
        record.dir = last;
        Ok(Some(record))
    }

    fn load_run(&self, run: &RunRecord) -> Result<Vec<BenchSample>, CampaignError> {
        let file = run.dir.join(result_file_name(run.format));
        Ok(bench_ingest::parse_results(
            run.format,
            &file,
            &run.version_label,
        )?)
    }

    /// Compares the latest run of every valid mutant with the latest
    /// baseline run on each shared benchmark, and writes the reports.
    pub fn analyze(&self) -> Result<Analysis, CampaignError> {
        let mutants = self.load_manifest()?;
        let baseline_run = self.latest_run(BASELINE_LABEL)?.ok_or_else(|| {
            CampaignError::MissingState(
                "no baseline results; run `perfmut bench baseline` first".into(),
            )
        })?;
        let baseline: HashMap<String, BenchSample> = self
            .load_run(&baseline_run)?
            .into_iter()
            .map(|s| (s.bench_id.clone(), s))
            .collect();

        let mut newest = baseline_run.dir.clone();
        let mut comparisons = Vec::new();
        let mut notes = Vec::new();
        for m in mutants.iter().filter(|m| m.status.is_valid()) {
            let Some(run) = self.latest_run(&m.mutant_id)? else {
                continue;
            };
            if run.dir.file_name() > newest.file_name() {
                newest = run.dir.clone();
            }
            let mut samples = self.load_run(&run)?;
            samples.sort_by(|a, b| a.bench_id.cmp(&b.bench_id));
            for t in samples {
                match baseline.get(&t.bench_id) {
                    Some(b) => comparisons.push(stats::compare(b, &t, &self.cfg.bootstrap)?),
                    None => notes.push(format!(
                        "{}: benchmark {} has no baseline measurements and was not compared.",
                        m.mutant_id, t.bench_id
                    )),
                }
            }
        }

        let created_at = report_timestamp(newest.file_name().and_then(|n| n.to_str()));
        let metadata = ReportMetadata {
            config_hash: self.cfg.hash.clone(),
            created_at,
            env_label: self.cfg.env_label.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            bootstrap: self.cfg.bootstrap,
        };
        let report = CampaignReport::build(metadata, &mutants, &comparisons, notes)?;

        let dir = self.reports_dir();
        for format in [
            ReportFormat::Json,
            ReportFormat::Markdown,
            ReportFormat::Csv,
        ] {
            let path = dir.join(format!("report.{}", format.extension()));
            mutagen::write_atomic(&path, &reporting::render_report(&report, format))?;
        }
        mutagen::write_atomic(
            &dir.join("comparisons.json"),
            stats::comparisons_json(&comparisons).as_bytes(),
        )?;
        mutagen::write_atomic(
            &dir.join("comparisons.csv"),
            stats::comparisons_csv(&comparisons).as_bytes(),
        )?;
        Ok(Analysis {
            report,
            comparisons,
            reports_dir: dir,
        })
    }

    pub fn load_report(&self) -> Result<CampaignReport, CampaignError> {
        let path = self.reports_dir().join("report.json");
        if !path.exists() {
            return Err(CampaignError::MissingState(format!(
                "no report at {}; run `perfmut analyze` first",
                path.display()
            )));
        }
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        serde_json::from_str(&text).map_err(|e| CampaignError::Io {
            path,
            source: e.into(),
        })
    }
}

fn result_file_name(format: ResultFormat) -> &'static str {
    match format {
        ResultFormat::JmhJson => "results.json",
        ResultFormat::Csv => "results.csv",
    }
}

/// `SOURCE_DATE_EPOCH` when set; otherwise the time of the newest run the
/// report is computed from, so re-analysing unchanged results reproduces the
/// same report.
fn report_timestamp(newest_run_dir: Option<&str>) -> String {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|secs| DateTime::from_timestamp(secs, 0))
    {
        return t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    }
    newest_run_dir
        .map(|n| n.split('-').next().unwrap_or(n))
        .and_then(|n| NaiveDateTime::parse_from_str(n, RUN_DIR_FORMAT).ok())
        .map(|t| {
            t.and_utc()
                .to_rfc3339_opts(chrono::SecondsFormat::Micros, true)
        })
        .unwrap_or_default()
}

/// Guesses the result format from the file extension.
pub fn format_for_path(path: &Path) -> ResultFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("csv") => ResultFormat::Csv,
        _ => ResultFormat::JmhJson,
    }
}

/// Two result files compared benchmark by benchmark; benchmarks present in
/// only one file are skipped. Results are ordered by benchmark id.
pub fn compare_files(
    baseline: (&Path, ResultFormat, &str),
    treatment: (&Path, ResultFormat, &str),
    cfg: &BootstrapConfig,
) -> Result<Vec<Comparison>, CampaignError> {
    let base = bench_ingest::parse_results(baseline.1, baseline.0, baseline.2)?;
    let mut treat = bench_ingest::parse_results(treatment.1, treatment.0, treatment.2)?;
    treat.sort_by(|a, b| a.bench_id.cmp(&b.bench_id));
    let base: HashMap<&str, &BenchSample> = base.iter().map(|s| (s.bench_id.as_str(), s)).collect();
    let mut out = Vec::new();
    for t in &treat {
        if let Some(b) = base.get(t.bench_id.as_str()) {
            out.push(stats::compare(b, t, cfg)?);
        }
    }
    if out.is_empty() {
        return Err(CampaignError::MissingState(
            "the two result files share no benchmark".into(),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let cases: [(CampaignError, i32); 4] = [
            (CampaignError::UnknownMutant("x".into()), 1),
            (CampaignError::MissingState("x".into()), 5),
            (
                CampaignError::Runner(RunError::Timeout(std::time::Duration::ZERO)),
                4,
            ),
            (
                CampaignError::NotBenchmarkable {
                    mutant_id: "x".into(),
                    status: MutantStatus::CompileFailed,
                },
                3,
            ),
        ];
        for (e, code) in cases {
            assert_eq!(e.exit_code(), code, "{e}");
        }
    }

    #[test]
    fn timestamps() {
        // env-independent branch only; SOURCE_DATE_EPOCH is covered by the CLI tests
        if std::env::var_os("SOURCE_DATE_EPOCH").is_none() {
            assert_eq!(
                report_timestamp(Some("20260102T030405.000006Z")),
                "2026-01-02T03:04:05.000006Z"
            );
            assert_eq!(
                report_timestamp(Some("20260102T030405.000006Z-2")),
                "2026-01-02T03:04:05.000006Z"
            );
        }
    }

    #[test]
    fn targets() {
        assert_eq!(
            "baseline".parse::<BenchTarget>().unwrap(),
            BenchTarget::Baseline
        );
        assert_eq!(
            "all-valid".parse::<BenchTarget>().unwrap(),
            BenchTarget::AllValid
        );
        assert_eq!(
            "RCL-ab-0".parse::<BenchTarget>().unwrap(),
            BenchTarget::Mutant("RCL-ab-0".into())
        );
    }
}
