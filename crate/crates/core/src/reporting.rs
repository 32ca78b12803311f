//! Campaign reports: mutation score, kill rates per operator and injection
//! context, generation yield and per-mutant effects, rendered as JSON, CSV
//! or Markdown.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mutagen::{Mutant, MutantStatus};
use crate::operators::OperatorId;
use crate::source_model::ContextClass;
use crate::stats::{self, BootstrapConfig, Comparison, MutationScore, StatsError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("comparison for {0} has no mutant in the manifest")]
    Join(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Which slice of the campaign a stratum covers. `None` on a side means
/// "all".
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StratumKey {
    pub operator: Option<OperatorId>,
    pub context: Option<ContextClass>,
}

impl StratumKey {
    fn rank(&self) -> u8 {
        match (self.operator, self.context) {
            (Some(_), Some(_)) => 0,
            (Some(_), None) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioStats {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumSummary {
    pub key: StratumKey,
    /// Distinct mutants with at least one comparison.
    pub n_mutants: usize,
    /// Mutants killed by at least one benchmark.
    pub n_killed: usize,
    pub kill_rate: f64,
    /// Over the ratio points of every comparison in the stratum.
    pub ratio_points: RatioStats,
}

/// Joint (operator, context) strata, then per-operator marginals, then
/// per-context marginals; each group ordered by its key.
pub fn summarize_by_context(
    comparisons: &[Comparison],
    mutants: &[Mutant],
) -> Result<Vec<StratumSummary>, ReportError> {
    let by_id: HashMap<&str, &Mutant> = mutants.iter().map(|m| (m.mutant_id.as_str(), m)).collect();

    #[derive(Default)]
    struct Acc<'a> {
        killed: BTreeMap<&'a str, bool>,
        ratios: Vec<f64>,
    }
    let mut strata: BTreeMap<(u8, StratumKey), Acc> = BTreeMap::new();
    for c in comparisons {
        let m = by_id
            .get(c.treatment_label.as_str())
            .ok_or_else(|| ReportError::Join(c.treatment_label.clone()))?;
        let keys = [
            StratumKey {
                operator: Some(m.operator),
                context: Some(m.context),
            },
            StratumKey {
                operator: Some(m.operator),
                context: None,
            },
            StratumKey {
                operator: None,
                context: Some(m.context),
            },
        ];
        for key in keys {
            let acc = strata.entry((key.rank(), key)).or_default();
            *acc.killed.entry(m.mutant_id.as_str()).or_default() |= c.killed;
            acc.ratios.push(c.ratio_point);
        }
    }
    Ok(strata
        .into_iter()
        .map(|((_, key), mut acc)| {
            acc.ratios.sort_by(f64::total_cmp);
            let n_mutants = acc.killed.len();
            let n_killed = acc.killed.values().filter(|k| **k).count();
            StratumSummary {
                key,
                n_mutants,
                n_killed,
                kill_rate: n_killed as f64 / n_mutants as f64,
                ratio_points: RatioStats {
                    min: acc.ratios[0],
                    median: stats::percentile(&acc.ratios, 0.5),
                    max: acc.ratios[acc.ratios.len() - 1],
                },
            }
        })
        .collect())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct YieldCounts {
    /// Every mutant generated, whatever became of it.
    pub generated: usize,
    pub compile_failed: usize,
    pub test_failed: usize,
    /// Valid, including those already benchmarked.
    pub valid: usize,
}

pub fn yield_by_operator(mutants: &[Mutant]) -> BTreeMap<OperatorId, YieldCounts> {
    let mut out: BTreeMap<OperatorId, YieldCounts> = BTreeMap::new();
    for m in mutants {
        let y = out.entry(m.operator).or_default();
        y.generated += 1;
        match m.status {
            MutantStatus::CompileFailed => y.compile_failed += 1,
            MutantStatus::TestFailed => y.test_failed += 1,
            MutantStatus::Valid | MutantStatus::Benchmarked => y.valid += 1,
            MutantStatus::Generated => {}
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    /// SHA-256 of the configuration file.
    pub config_hash: String,
    /// RFC 3339.
    pub created_at: String,
    pub env_label: String,
    pub tool_version: String,
    pub bootstrap: BootstrapConfig,
}

/// One comparison joined with its mutant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutantRow {
    pub mutant_id: String,
    pub operator: OperatorId,
    pub context: ContextClass,
    pub site_id: String,
    pub file: String,
    pub comparison: Comparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub schema_version: u32,
    pub metadata: ReportMetadata,
    pub mutation_score: MutationScore,
    pub strata: Vec<StratumSummary>,
    pub per_mutant: Vec<MutantRow>,
    #[serde(rename = "yield")]
    pub yield_counts: BTreeMap<OperatorId, YieldCounts>,
    pub notes: Vec<String>,
}

impl CampaignReport {
    /// Joins comparisons to the manifest. Rows follow manifest order, then
    /// benchmark id.
    pub fn build(
        metadata: ReportMetadata,
        mutants: &[Mutant],
        comparisons: &[Comparison],
        mut notes: Vec<String>,
    ) -> Result<CampaignReport, ReportError> {
        let valid: Vec<String> = mutants
            .iter()
            .filter(|m| m.status.is_valid())
            .map(|m| m.mutant_id.clone())
            .collect();
        let mutation_score = stats::mutation_score(comparisons, &valid)?;
        let strata = summarize_by_context(comparisons, mutants)?;

        let mut by_mutant: HashMap<&str, Vec<&Comparison>> = HashMap::new();
        for c in comparisons {
            by_mutant
                .entry(c.treatment_label.as_str())
                .or_default()
                .push(c);
        }
        let mut per_mutant = Vec::with_capacity(comparisons.len());
        for m in mutants {
            let Some(mut rows) = by_mutant.remove(m.mutant_id.as_str()) else {
                continue;
            };
            rows.sort_by(|a, b| a.bench_id.cmp(&b.bench_id));
            per_mutant.extend(rows.into_iter().map(|c| MutantRow {
                mutant_id: m.mutant_id.clone(),
                operator: m.operator,
                context: m.context,
                site_id: m.site_id.clone(),
                file: m.file.clone(),
                comparison: c.clone(),
            }));
        }

        let compared: BTreeSet<&str> = per_mutant.iter().map(|r| r.mutant_id.as_str()).collect();
        let unmeasured = valid
            .iter()
            .filter(|v| !compared.contains(v.as_str()))
            .count();
        if unmeasured > 0 {
            notes.push(format!(
                "{unmeasured} valid mutant(s) have no benchmark comparison and count as survivors."
            ));
        }
        notes.push(
            "Kill decisions are per benchmark at the stated confidence; no multiple-comparison correction is applied."
                .into(),
        );

        Ok(CampaignReport {
            schema_version: SCHEMA_VERSION,
            metadata,
            mutation_score,
            strata,
            per_mutant,
            yield_counts: yield_by_operator(mutants),
            notes,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "md",
        }
    }
}

/// Deterministic rendering; no clock or randomness involved.
pub fn render_report(report: &CampaignReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s.into_bytes()
        }
        ReportFormat::Csv => render_csv(report).into_bytes(),
        ReportFormat::Markdown => render_markdown(report).into_bytes(),
    }
}

fn render_csv(report: &CampaignReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["mutant_id", "operator", "context", "site_id", "file"];
    header.extend(stats::COMPARISON_COLUMNS);
    w.write_record(&header).expect("in-memory write");
    let f = stats::format_float17;
    for r in &report.per_mutant {
        let c = &r.comparison;
        w.write_record([
            r.mutant_id.clone(),
            r.operator.to_string(),
            r.context.to_string(),
            r.site_id.clone(),
            r.file.clone(),
            c.bench_id.clone(),
            c.baseline_label.clone(),
            c.treatment_label.clone(),
            c.metric.to_string(),
            f(c.ratio_point),
            f(c.ci_low),
            f(c.ci_high),
            c.significant.to_string(),
            c.killed.to_string(),
            f(c.percent_change),
            f(c.percent_halfwidth),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn render_markdown(r: &CampaignReport) -> String {
    let mut s = String::new();
    let m = &r.metadata;
    let b = &m.bootstrap;
    let _ = writeln!(s, "# Performance mutation report\n");
    let _ = writeln!(s, "- Schema version: {}", r.schema_version);
    let _ = writeln!(s, "- Created: {}", m.created_at);
    let _ = writeln!(s, "- Tool version: {}", m.tool_version);
    let env = if m.env_label.is_empty() {
        "(none)"
    } else {
        &m.env_label
    };
    let _ = writeln!(s, "- Environment: {env}");
    let _ = writeln!(s, "- Config hash: `{}`", m.config_hash);
    let _ = writeln!(
        s,
        "- Bootstrap: B = {}, confidence = {}, seed = {}",
        b.iterations, b.confidence, b.seed
    );

    let ms = &r.mutation_score;
    let _ = writeln!(s, "\n## Mutation score\n");
    let _ = writeln!(
        s,
        "**{:.3}** ({} of {} valid mutants killed)",
        ms.score, ms.killed_count, ms.total_valid
    );

    let _ = writeln!(s, "\n## Generation yield\n");
    let _ = writeln!(
        s,
        "| Operator | Generated | Compile failed | Test failed | Valid |"
    );
    let _ = writeln!(s, "|---|---:|---:|---:|---:|");
    for (op, y) in &r.yield_counts {
        let _ = writeln!(
            s,
            "| {op} | {} | {} | {} | {} |",
            y.generated, y.compile_failed, y.test_failed, y.valid
        );
    }

    let _ = writeln!(s, "\n## Kill rate by operator and context\n");
    if r.strata.is_empty() {
        let _ = writeln!(s, "No comparisons.");
    } else {
        let _ = writeln!(
            s,
            "| Operator | Context | n | Killed | Kill rate | Ratio min | Ratio median | Ratio max |"
        );
        let _ = writeln!(s, "|---|---|---:|---:|---:|---:|---:|---:|");
        for st in &r.strata {
            let op = st.key.operator.map_or("all".to_string(), |o| o.to_string());
            let cx = st.key.context.map_or("all".to_string(), |c| c.to_string());
            let rp = &st.ratio_points;
            let _ = writeln!(
                s,
                "| {op} | {cx} | {} | {} | {:.3} | {:.4} | {:.4} | {:.4} |",
                st.n_mutants, st.n_killed, st.kill_rate, rp.min, rp.median, rp.max
            );
        }
    }

    let _ = writeln!(s, "\n## Per-mutant results\n");
    if r.per_mutant.is_empty() {
        let _ = writeln!(s, "No comparisons.");
    } else {
        let conf = b.confidence * 100.0;
        let _ = writeln!(
            s,
            "| Mutant | Operator | Context | Benchmark | Ratio | {conf}% CI | Effect | Killed |"
        );
        let _ = writeln!(s, "|---|---|---|---|---:|---|---|---|");
        for row in &r.per_mutant {
            let c = &row.comparison;
            let _ = writeln!(
                s,
                "| `{}` | {} | {} | `{}` | {:.4} | [{:.4}, {:.4}] | {} | {} |",
                row.mutant_id,
                row.operator,
                row.context,
                c.bench_id,
                c.ratio_point,
                c.ci_low,
                c.ci_high,
                c.effect_phrase(),
                yes_no(c.killed)
            );
        }
    }

    if !r.notes.is_empty() {
        let _ = writeln!(s, "\n## Notes\n");
        for n in &r.notes {
            let _ = writeln!(s, "- {n}");
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench_ingest::MetricKind;
    use crate::source_model::{context_for, Span};

    fn mutant(id: &str, op: OperatorId, status: MutantStatus) -> Mutant {
        Mutant {
            mutant_id: id.into(),
            operator: op,
            site_id: id.trim_end_matches("-0").into(),
            file: "src/A.java".into(),
            span: Span::new(0, 1),
            context: context_for(op),
            variant: 0,
            status,
            patch: String::new(),
        }
    }

    fn cmp(mutant: &str, bench: &str, ratio: f64, killed: bool) -> Comparison {
        Comparison {
            bench_id: bench.into(),
            baseline_label: "baseline".into(),
            treatment_label: mutant.into(),
            metric: MetricKind::EXECUTION_TIME,
            ratio_point: ratio,
            ci_low: ratio - 0.01,
            ci_high: ratio + 0.01,
            significant: killed,
            killed,
            percent_change: (ratio - 1.0f64).abs() * 100.0,
            percent_halfwidth: 1.0,
        }
    }

    fn meta() -> ReportMetadata {
        ReportMetadata {
            config_hash: "abc".into(),
            created_at: "1970-01-01T00:00:00Z".into(),
            env_label: "lab".into(),
            tool_version: "0".into(),
            bootstrap: BootstrapConfig::default(),
        }
    }

    #[test]
    fn single_killed_mutant() {
        let ms = [mutant("RCL-1-0", OperatorId::Rcl, MutantStatus::Valid)];
        let st = summarize_by_context(&[cmp("RCL-1-0", "b", 1.5, true)], &ms).unwrap();
        let joint: Vec<_> = st.iter().filter(|s| s.key.rank() == 0).collect();
        assert_eq!(joint.len(), 1);
        assert_eq!(
            (joint[0].n_mutants, joint[0].n_killed, joint[0].kill_rate),
            (1, 1, 1.0)
        );
        assert_eq!(st.len(), 3);
    }

    #[test]
    fn empty_and_orphans() {
        assert!(summarize_by_context(&[], &[]).unwrap().is_empty());
        assert!(matches!(
            summarize_by_context(&[cmp("X-0", "b", 1.0, false)], &[]),
            Err(ReportError::Join(_))
        ));
    }

    /// Two operators in two contexts; hand-computed expectations.
    #[test]
    fn two_by_two() {
        let ms = [
            mutant("RCL-a-0", OperatorId::Rcl, MutantStatus::Valid),
            mutant("RCL-b-0", OperatorId::Rcl, MutantStatus::Valid),
            mutant("EFL-c-0", OperatorId::Efl, MutantStatus::Valid),
            mutant("SOC-d-0", OperatorId::Soc, MutantStatus::Valid),
            mutant("SOC-e-0", OperatorId::Soc, MutantStatus::Valid),
        ];
        let cs = [
            cmp("RCL-a-0", "b1", 2.0, true),
            cmp("RCL-a-0", "b2", 1.0, false),
            cmp("RCL-b-0", "b1", 1.0, false),
            cmp("EFL-c-0", "b1", 1.2, true),
            cmp("SOC-d-0", "b1", 1.1, true),
            cmp("SOC-e-0", "b1", 0.9, false),
        ];
        let st = summarize_by_context(&cs, &ms).unwrap();
        let rows: Vec<(String, String, usize, usize, f64, f64)> = st
            .iter()
            .map(|s| {
                (
                    s.key.operator.map_or("*".into(), |o| o.to_string()),
                    s.key.context.map_or("*".into(), |c| c.to_string()),
                    s.n_mutants,
                    s.n_killed,
                    s.kill_rate,
                    s.ratio_points.median,
                )
            })
            .collect();
        let expected = [
            ("RCL", "LoopHeader", 2, 1, 0.5, 1.0),
            ("SOC", "ConditionExpr", 2, 1, 0.5, 1.0),
            ("EFL", "LoopHeader", 1, 1, 1.0, 1.2),
            ("RCL", "*", 2, 1, 0.5, 1.0),
            ("SOC", "*", 2, 1, 0.5, 1.0),
            ("EFL", "*", 1, 1, 1.0, 1.2),
            ("*", "LoopHeader", 3, 2, 2.0 / 3.0, 1.1),
            ("*", "ConditionExpr", 2, 1, 0.5, 1.0),
        ];
        let expected: Vec<_> = expected
            .iter()
            .map(|(o, c, n, k, r, m)| (o.to_string(), c.to_string(), *n, *k, *r, *m))
            .collect();
        assert_eq!(rows, expected);

        // joint strata reconcile with the distinct compared mutants
        let joint: usize = st
            .iter()
            .filter(|s| s.key.rank() == 0)
            .map(|s| s.n_mutants)
            .sum();
        assert_eq!(joint, 5);
    }

    #[test]
    fn renders() {
        let ms = [
            mutant("RCL-a-0", OperatorId::Rcl, MutantStatus::Valid),
            mutant("STS-b-0", OperatorId::Sts, MutantStatus::CompileFailed),
            mutant("URV-c-0", OperatorId::Urv, MutantStatus::TestFailed),
            mutant("SOC-d-0", OperatorId::Soc, MutantStatus::Valid),
        ];
        let cs = [
            cmp("SOC-d-0", "b2", 0.945, false),
            cmp("RCL-a-0", "b1", 2.0, true),
            cmp("RCL-a-0", "b0", 1.0, false),
        ];
        let r = CampaignReport::build(meta(), &ms, &cs, vec![]).unwrap();
        assert_eq!(r.mutation_score.score, 0.5);
        let ids: Vec<(&str, &str)> = r
            .per_mutant
            .iter()
            .map(|row| (row.mutant_id.as_str(), row.comparison.bench_id.as_str()))
            .collect();
        assert_eq!(
            ids,
            [("RCL-a-0", "b0"), ("RCL-a-0", "b1"), ("SOC-d-0", "b2")]
        );
        assert_eq!(r.yield_counts[&OperatorId::Sts].compile_failed, 1);
        assert_eq!(r.yield_counts[&OperatorId::Urv].test_failed, 1);

        let json = render_report(&r, ReportFormat::Json);
        let back: CampaignReport = serde_json::from_slice(&json).unwrap();
        assert_eq!(back, r);
        let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
        assert_eq!(v["schema_version"], 1);

        let csv = String::from_utf8(render_report(&r, ReportFormat::Csv)).unwrap();
        assert_eq!(csv.lines().count(), 1 + cs.len());

        let md = String::from_utf8(render_report(&r, ReportFormat::Markdown)).unwrap();
        assert!(md.contains("| `SOC-d-0` | SOC | ConditionExpr | `b2` | 0.9450 | [0.9350, 0.9550] | 5.5% ± 1.0% faster | no |"), "{md}");
        assert_eq!(
            md,
            String::from_utf8(render_report(&r, ReportFormat::Markdown)).unwrap()
        );
    }

    #[test]
    fn unmeasured_valid_mutants_are_noted() {
        let ms = [mutant("RCL-a-0", OperatorId::Rcl, MutantStatus::Valid)];
        let r = CampaignReport::build(meta(), &ms, &[], vec![]).unwrap();
        assert_eq!(r.mutation_score.score, 0.0);
        assert!(r.notes[0].starts_with("1 valid mutant"));
        let md = String::from_utf8(render_report(&r, ReportFormat::Markdown)).unwrap();
        assert!(md.contains("No comparisons."));
    }
}
