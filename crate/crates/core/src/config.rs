//! Campaign configuration file (TOML).
//!
//! ```toml
//! env_label = "lab-a"
//! workers = 4
//! operators = ["RCL", "SOC"]        # default: all ten
//! coverage_path = "coverage.json"   # optional
//! state_dir = ".perfmut"            # default
//!
//! [project]
//! root = "."
//! sources = ["src/main/java"]       # default: the whole root
//! package_prefix = "com.acme"       # HWO: calls outside it are third-party
//!
//! [commands]
//! build = "mvn -q compile"
//! test = "mvn -q test"
//! bench = "sh run-jmh.sh"
//! build_timeout_s = 600
//! test_timeout_s = 1800
//! bench_timeout_s = 7200
//!
//! [results]
//! format = "jmh_json"               # or "csv"
//! path = "target/jmh-{label}.json"  # relative to the workspace
//!
//! [bootstrap]
//! iterations = 10000
//! confidence = 0.95
//! seed = 42
//!
//! [hwo]
//! heavyweight_patterns = ["java.io.*", "*Socket.*"]
//!
//! [operator_config]                 # remaining operator knobs
//! hwo_delay_micros = 100
//! ```
//!
//! `project.package_prefix` and `hwo.heavyweight_patterns` are the same
//! settings as `operator_config.project_package_prefix` and
//! `operator_config.heavyweight_patterns`; giving both spellings with
//! different values is an error.
//!
//! Relative paths resolve against the directory holding the file.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bench_ingest::ResultFormat;
use crate::mutagen::ValidationCommands;
use crate::operators::{OperatorConfig, OperatorId};
use crate::process::CommandSpec;
use crate::stats::BootstrapConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    env_label: String,
    #[serde(default = "one")]
    workers: usize,
    #[serde(default = "all_operators")]
    operators: Vec<OperatorId>,
    coverage_path: Option<PathBuf>,
    #[serde(default = "default_state_dir")]
    state_dir: PathBuf,
    project: RawProject,
    commands: RawCommands,
    #[serde(default)]
    results: RawResults,
    #[serde(default)]
    bootstrap: BootstrapConfig,
    #[serde(default)]
    hwo: RawHwo,
    #[serde(default)]
    operator_config: OperatorConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHwo {
    heavyweight_patterns: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProject {
    #[serde(default = "dot")]
    root: PathBuf,
    #[serde(default = "dots")]
    sources: Vec<PathBuf>,
    package_prefix: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCommands {
    build: CommandSpec,
    test: CommandSpec,
    bench: CommandSpec,
    #[serde(default = "build_timeout")]
    build_timeout_s: u64,
    #[serde(default = "test_timeout")]
    test_timeout_s: u64,
    #[serde(default = "bench_timeout")]
    bench_timeout_s: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawResults {
    #[serde(default)]
    format: ResultFormat,
    #[serde(default = "default_result_path")]
    path: String,
}

impl Default for RawResults {
    fn default() -> Self {
        RawResults {
            format: ResultFormat::default(),
            path: default_result_path(),
        }
    }
}

fn one() -> usize {
    1
}
fn all_operators() -> Vec<OperatorId> {
    OperatorId::ALL.to_vec()
}
fn default_state_dir() -> PathBuf {
    PathBuf::from(".perfmut")
}
fn dot() -> PathBuf {
    PathBuf::from(".")
}
fn dots() -> Vec<PathBuf> {
    vec![dot()]
}
fn build_timeout() -> u64 {
    ValidationCommands::DEFAULT_BUILD_TIMEOUT.as_secs()
}
fn test_timeout() -> u64 {
    ValidationCommands::DEFAULT_TEST_TIMEOUT.as_secs()
}
fn bench_timeout() -> u64 {
    7200
}
fn default_result_path() -> String {
    "jmh-result.json".into()
}

/// A loaded and checked campaign configuration with absolute paths.
#[derive(Debug, Clone)]
pub struct CampaignConfig {
    /// The file it was read from.
    pub path: PathBuf,
    /// SHA-256 of the file's bytes.
    pub hash: String,
    pub project_root: PathBuf,
    /// Directories under the root whose `.java` files are mutated.
    pub sources: Vec<PathBuf>,
    pub build_cmd: CommandSpec,
    pub test_cmd: CommandSpec,
    pub bench_cmd: CommandSpec,
    pub build_timeout: Duration,
    pub test_timeout: Duration,
    pub bench_timeout: Duration,
    pub result_format: ResultFormat,
    /// Relative to a workspace; `{label}` expands to the version label.
    pub result_path: String,
    pub coverage_path: Option<PathBuf>,
    pub operators: Vec<OperatorId>,
    pub operator_config: OperatorConfig,
    pub bootstrap: BootstrapConfig,
    pub env_label: String,
    pub workers: usize,
    pub state_dir: PathBuf,
}

impl CampaignConfig {
    pub fn load(path: &Path) -> Result<CampaignConfig, ConfigError> {
        let bytes = std::fs::read(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let text = String::from_utf8(bytes).map_err(|_| ConfigError::Invalid {
            path: path.to_path_buf(),
            message: "not valid UTF-8".into(),
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        CampaignConfig::from_toml(&text, path, &base)
    }

    /// Parses `text` as if read from `path`, resolving relative paths
    /// against `base`.
    pub fn from_toml(text: &str, path: &Path, base: &Path) -> Result<CampaignConfig, ConfigError> {
        let invalid = |message: String| ConfigError::Invalid {
            path: path.to_path_buf(),
            message,
        };
        let raw: RawConfig = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        let abs = |p: &Path| -> PathBuf {
            let joined = if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            };
            std::path::absolute(&joined).unwrap_or(joined)
        };

        let project_root = abs(&raw.project.root);
        if !project_root.is_dir() {
            return Err(invalid(format!(
                "project root {} is not a directory",
                project_root.display()
            )));
        }
        let mut sources = Vec::new();
        for s in &raw.project.sources {
            if s.is_absolute() {
                return Err(invalid(format!(
                    "source dir {} must be relative to the root",
                    s.display()
                )));
            }
            if !project_root.join(s).is_dir() {
                return Err(invalid(format!(
                    "source dir {} does not exist",
                    project_root.join(s).display()
                )));
            }
            sources.push(s.clone());
        }
        let coverage_path = raw.coverage_path.as_deref().map(abs);
        if let Some(c) = &coverage_path {
            if !c.is_file() {
                return Err(invalid(format!(
                    "coverage file {} does not exist",
                    c.display()
                )));
            }
        }
        if raw.operators.is_empty() {
            return Err(invalid("operator list is empty".into()));
        }
        if raw.workers == 0 {
            return Err(invalid("workers must be >= 1".into()));
        }
        if raw.results.path.trim().is_empty() {
            return Err(invalid("results.path is empty".into()));
        }
        raw.bootstrap
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        let mut operator_config = raw.operator_config;
        if let Some(prefix) = raw.project.package_prefix {
            match &operator_config.project_package_prefix {
                Some(other) if *other != prefix => {
                    return Err(invalid(format!(
                        "project.package_prefix {prefix:?} conflicts with \
                         operator_config.project_package_prefix {other:?}"
                    )))
                }
                _ => operator_config.project_package_prefix = Some(prefix),
            }
        }
        if let Some(patterns) = raw.hwo.heavyweight_patterns {
            let current = &operator_config.heavyweight_patterns;
            if *current != OperatorConfig::default().heavyweight_patterns && *current != patterns {
                return Err(invalid(
                    "hwo.heavyweight_patterns conflicts with operator_config.heavyweight_patterns"
                        .into(),
                ));
            }
            operator_config.heavyweight_patterns = patterns;
        }
        operator_config.validate().map_err(invalid)?;
        if operator_config.project_package_prefix.as_deref() == Some("") {
            operator_config.project_package_prefix = None;
        }
        let mut operators = raw.operators;
        operators.sort();
        operators.dedup();

        Ok(CampaignConfig {
            path: path.to_path_buf(),
            hash: hex::encode(Sha256::digest(text.as_bytes())),
            project_root,
            sources,
            build_cmd: raw.commands.build,
            test_cmd: raw.commands.test,
            bench_cmd: raw.commands.bench,
            build_timeout: Duration::from_secs(raw.commands.build_timeout_s),
            test_timeout: Duration::from_secs(raw.commands.test_timeout_s),
            bench_timeout: Duration::from_secs(raw.commands.bench_timeout_s),
            result_format: raw.results.format,
            result_path: raw.results.path,
            coverage_path,
            operators,
            operator_config,
            bootstrap: raw.bootstrap,
            env_label: raw.env_label,
            workers: raw.workers,
            state_dir: abs(&raw.state_dir),
        })
    }

    pub fn validation_commands(&self) -> ValidationCommands {
        ValidationCommands {
            build: self.build_cmd.clone(),
            test: self.test_cmd.clone(),
            build_timeout: self.build_timeout,
            test_timeout: self.test_timeout,
        }
    }

    pub fn result_path_for(&self, label: &str) -> PathBuf {
        PathBuf::from(self.result_path.replace("{label}", label))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[project]\nroot = \".\"\n[commands]\nbuild = \"true\"\ntest = \"true\"\nbench = \"true\"\n";

    fn load(text: &str) -> Result<CampaignConfig, ConfigError> {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("perfmut.toml");
        std::fs::write(&p, text).unwrap();
        let r = CampaignConfig::load(&p);
        drop(dir);
        r
    }

    #[test]
    fn defaults() {
        let c = load(MINIMAL).unwrap();
        assert_eq!(c.operators, OperatorId::ALL);
        assert_eq!(c.workers, 1);
        assert_eq!(c.bootstrap, BootstrapConfig::default());
        assert_eq!(c.build_timeout, Duration::from_secs(600));
        assert_eq!(c.test_timeout, Duration::from_secs(1800));
        assert_eq!(c.result_format, ResultFormat::JmhJson);
        assert!(c.state_dir.ends_with(".perfmut"));
        assert!(c.project_root.is_absolute());
        assert_eq!(c.hash.len(), 64);
    }

    #[test]
    fn overrides() {
        let text = format!(
            "env_label = \"lab\"\nworkers = 3\noperators = [\"SOC\", \"RCL\", \"SOC\"]\n{MINIMAL}\
             [results]\nformat = \"csv\"\npath = \"out/{{label}}.csv\"\n\
             [bootstrap]\niterations = 2000\nseed = 7\n\
             [operator_config]\nhwo_delay_micros = 5\n"
        );
        let c = load(&text).unwrap();
        assert_eq!(c.operators, [OperatorId::Rcl, OperatorId::Soc]);
        assert_eq!((c.workers, c.env_label.as_str()), (3, "lab"));
        assert_eq!(c.result_path_for("m-1"), PathBuf::from("out/m-1.csv"));
        assert_eq!(
            (
                c.bootstrap.iterations,
                c.bootstrap.seed,
                c.bootstrap.confidence
            ),
            (2000, 7, 0.95)
        );
        assert_eq!(c.operator_config.hwo_delay_micros, 5);
    }

    #[test]
    fn named_operator_keys() {
        let text = MINIMAL.replace(
            "root = \".\"",
            "root = \".\"\npackage_prefix = \"com.acme\"",
        ) + "[hwo]\nheavyweight_patterns = [\"*Client.*\"]\n";
        let c = load(&text).unwrap();
        assert_eq!(
            c.operator_config.project_package_prefix.as_deref(),
            Some("com.acme")
        );
        assert_eq!(c.operator_config.heavyweight_patterns, ["*Client.*"]);

        let same = format!("{text}[operator_config]\nproject_package_prefix = \"com.acme\"\n");
        assert!(load(&same).is_ok());
        let clash = format!("{text}[operator_config]\nproject_package_prefix = \"org.other\"\n");
        assert!(matches!(load(&clash), Err(ConfigError::Invalid { .. })));
    }

    #[test]
    fn rejects() {
        let missing = Path::new("/nonexistent/perfmut.toml");
        assert!(matches!(
            CampaignConfig::load(missing),
            Err(ConfigError::Read { .. })
        ));
        for bad in [
            format!("operators = []\n{MINIMAL}"),
            format!("workers = 0\n{MINIMAL}"),
            format!("bogus = 1\n{MINIMAL}"),
            format!("coverage_path = \"nope.json\"\n{MINIMAL}"),
            format!("{MINIMAL}[bootstrap]\niterations = 10\n"),
            format!("operators = [\"XYZ\"]\n{MINIMAL}"),
            MINIMAL.replace("root = \".\"", "root = \"missing\""),
            MINIMAL.replace("bench = \"true\"\n", ""),
        ] {
            assert!(
                matches!(load(&bad), Err(ConfigError::Invalid { .. })),
                "{bad}"
            );
        }
    }
}
