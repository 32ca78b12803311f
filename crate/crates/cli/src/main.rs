//! `perfmut`: performance mutation campaigns from the command line.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use perfmut_core::bench_ingest::ResultFormat;
use perfmut_core::campaign::{self, BenchTarget, Campaign, CampaignError};
use perfmut_core::config::{CampaignConfig, ConfigError};
use perfmut_core::reporting::{self, ReportFormat};
use perfmut_core::stats::{self, BootstrapConfig};

const DEFAULT_CONFIG: &str = "perfmut.toml";

#[derive(Parser, Debug)]
#[command(
    name = "perfmut",
    version,
    about = "Performance mutation testing for Java projects"
)]
struct Cli {
    /// Campaign configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    /// Bootstrap seed; overrides the configuration.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Log progress to stderr (repeat for more detail).
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List mutation sites.
    Sites,
    /// Generate and validate mutants, then write the manifest.
    Mutate,
    /// Run benchmarks for `baseline`, one mutant id, or `all-valid`.
    Bench { target: String },
    /// Compare every benchmarked mutant with the baseline and write reports.
    Analyze,
    /// Compare two result files.
    Compare {
        baseline: PathBuf,
        treatment: PathBuf,
        /// Result format of both files; guessed from the extension by default.
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        #[arg(long, default_value = "baseline")]
        baseline_label: String,
        #[arg(long, default_value = "treatment")]
        treatment_label: String,
        /// Bootstrap replicates (at least 1000).
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        confidence: Option<f64>,
    },
    /// Print the last analysis report.
    Report {
        #[arg(long, value_enum, default_value = "markdown")]
        format: ReportArg,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    JmhJson,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReportArg {
    Markdown,
    Json,
    Csv,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<CampaignError> for Failure {
    fn from(e: CampaignError) -> Failure {
        Failure {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Failure {
        Failure {
            code: 2,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => tracing::Level::WARN,
        1 => tracing::Level::INFO,
        _ => tracing::Level::DEBUG,
    };
    tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .with_target(false)
        .init();

    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("perfmut: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(cli: &Cli) -> Result<CampaignConfig, Failure> {
    let path = cli
        .config
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_CONFIG));
    let mut cfg = CampaignConfig::load(&path)?;
    if let Some(seed) = cli.seed {
        cfg.bootstrap.seed = seed;
    }
    Ok(cfg)
}

fn out(text: impl AsRef<[u8]>) -> Result<(), Failure> {
    let mut stdout = std::io::stdout().lock();
    stdout
        .write_all(text.as_ref())
        .and_then(|_| stdout.flush())
        .map_err(|e| Failure {
            code: 5,
            message: format!("cannot write output: {e}"),
        })
}

fn json<T: serde::Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Sites => cmd_sites(cli),
        Command::Mutate => cmd_mutate(cli),
        Command::Bench { target } => cmd_bench(cli, target),
        Command::Analyze => cmd_analyze(cli),
        Command::Compare {
            baseline,
            treatment,
            format,
            baseline_label,
            treatment_label,
            iterations,
            confidence,
        } => {
            let mut boot = compare_bootstrap(cli)?;
            if let Some(b) = iterations {
                boot.iterations = *b;
            }
            if let Some(c) = confidence {
                boot.confidence = *c;
            }
            boot.validate().map_err(|e| usage(e.to_string()))?;
            let fmt = |p: &Path| match format {
                Some(FormatArg::JmhJson) => ResultFormat::JmhJson,
                Some(FormatArg::Csv) => ResultFormat::Csv,
                None => campaign::format_for_path(p),
            };
            let rows = campaign::compare_files(
                (baseline, fmt(baseline), baseline_label),
                (treatment, fmt(treatment), treatment_label),
                &boot,
            )?;
            if cli.json {
                out(stats::comparisons_json(&rows))
            } else {
                let text: Vec<String> = rows.iter().map(stats::describe).collect();
                out(text.join("\n"))
            }
        }
        Command::Report { format } => {
            let campaign = Campaign::new(load_config(cli)?);
            let report = campaign.load_report()?;
            let format = match (cli.json, format) {
                (true, _) | (_, ReportArg::Json) => ReportFormat::Json,
                (_, ReportArg::Markdown) => ReportFormat::Markdown,
                (_, ReportArg::Csv) => ReportFormat::Csv,
            };
            out(reporting::render_report(&report, format))
        }
    }
}

/// The configuration's bootstrap settings when a configuration is available;
/// an explicitly named but unreadable file is still an error.
fn compare_bootstrap(cli: &Cli) -> Result<BootstrapConfig, Failure> {
    if cli.config.is_some() || Path::new(DEFAULT_CONFIG).exists() {
        return Ok(load_config(cli)?.bootstrap);
    }
    let mut boot = BootstrapConfig::default();
    if let Some(seed) = cli.seed {
        boot.seed = seed;
    }
    Ok(boot)
}

fn cmd_sites(cli: &Cli) -> Result<(), Failure> {
    let campaign = Campaign::new(load_config(cli)?);
    let listing = campaign.sites()?;
    for w in &listing.warnings {
        tracing::warn!("{w}");
    }
    if cli.json {
        return out(json(&listing));
    }
    let mut s = String::new();
    for site in &listing.sites {
        s.push_str(&format!(
            "{}\t{}\t{}\t{}:{}\t{}\n",
            site.site_id, site.operator, site.context, site.file, site.span, site.enclosing_method
        ));
    }
    s.push_str(&format!("{} site(s)\n", listing.sites.len()));
    out(s)
}

fn cmd_mutate(cli: &Cli) -> Result<(), Failure> {
    let campaign = Campaign::new(load_config(cli)?);
    let summary = campaign.mutate()?;
    if cli.json {
        return out(json(&summary.yield_counts));
    }
    let mut s = String::from("operator\tgenerated\tcompile_failed\ttest_failed\tvalid\n");
    for (op, y) in &summary.yield_counts {
        s.push_str(&format!(
            "{op}\t{}\t{}\t{}\t{}\n",
            y.generated, y.compile_failed, y.test_failed, y.valid
        ));
    }
    s.push_str(&format!(
        "manifest: {}\n",
        campaign.manifest_path().display()
    ));
    out(s)
}

fn cmd_bench(cli: &Cli, target: &str) -> Result<(), Failure> {
    let campaign = Campaign::new(load_config(cli)?);
    let target: BenchTarget = target.parse().expect("infallible");
    let runs = campaign.bench(&target)?;
    if cli.json {
        let dirs: Vec<serde_json::Value> = runs
            .iter()
            .map(|r| serde_json::json!({"version_label": r.version_label, "dir": r.dir, "record": r}))
            .collect();
        return out(json(&dirs));
    }
    let mut s = String::new();
    for r in &runs {
        s.push_str(&format!("{}\t{}\n", r.version_label, r.dir.display()));
    }
    out(s)
}

fn cmd_analyze(cli: &Cli) -> Result<(), Failure> {
    let campaign = Campaign::new(load_config(cli)?);
    let analysis = campaign.analyze()?;
    if cli.json {
        return out(reporting::render_report(
            &analysis.report,
            ReportFormat::Json,
        ));
    }
    let ms = &analysis.report.mutation_score;
    out(format!(
        "mutation score: {:.3} ({} of {} valid mutants killed)\ncomparisons: {}\nreports: {}\n",
        ms.score,
        ms.killed_count,
        ms.total_valid,
        analysis.comparisons.len(),
        analysis.reports_dir.display()
    ))
}
