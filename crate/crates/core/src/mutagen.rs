//! Mutants as patches against the pristine project, their isolated
//! workspaces, the compile/test validation pipeline and the campaign
//! manifest.

use std::collections::{BTreeMap, HashMap};
use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::operators::{self, OperatorConfig, OperatorError, OperatorId, HWO_HELPER_CLASS};
use crate::process::{self, CommandSpec, SpawnError};
use crate::source_model::{self, ContextClass, MutationSite, SourceError, SourceUnit, Span};

/// Directory names never copied into a workspace.
pub const SKIPPED_DIRS: [&str; 2] = [".git", ".perfmut"];

/// Bytes of build/test output kept in a [`ValidationResult`].
pub const LOG_EXCERPT_BYTES: usize = 4096;

#[derive(Debug, Error)]
pub enum MutagenError {
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("patch for {mutant_id} does not apply to {file}: {reason}")]
    PatchConflict {
        mutant_id: String,
        file: String,
        reason: String,
    },
    #[error("malformed patch for {mutant_id}: {reason}")]
    BadPatch { mutant_id: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Spawn(#[from] SpawnError),
    #[error("{path}:{line}: {source}")]
    Manifest {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("{mutant_id}: illegal status change {from} -> {to}")]
    Status {
        mutant_id: String,
        from: MutantStatus,
        to: MutantStatus,
    },
    #[error("cannot build a thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> MutagenError + '_ {
    move |source| MutagenError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MutantStatus {
    Generated,
    CompileFailed,
    TestFailed,
    Valid,
    Benchmarked,
}

impl MutantStatus {
    /// Forward-only lattice: Generated → {CompileFailed | TestFailed | Valid}
    /// → Benchmarked, where only Valid moves on.
    pub fn can_advance_to(self, next: MutantStatus) -> bool {
        use MutantStatus::*;
        matches!(
            (self, next),
            (Generated, CompileFailed | TestFailed | Valid) | (Valid, Benchmarked)
        )
    }

    /// Valid or already benchmarked: eligible for benchmarking and counted
    /// by the mutation score.
    pub fn is_valid(self) -> bool {
        matches!(self, MutantStatus::Valid | MutantStatus::Benchmarked)
    }
}

impl fmt::Display for MutantStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One variant of one operator at one site, stored as a unified diff against
/// the pristine project. Field order is the manifest's column order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mutant {
    /// `{site_id}-{variant}`.
    pub mutant_id: String,
    pub operator: OperatorId,
    pub site_id: String,
    pub file: String,
    pub span: Span,
    pub context: ContextClass,
    pub variant: usize,
    pub status: MutantStatus,
    pub patch: String,
}

impl Mutant {
    pub fn advance(&mut self, next: MutantStatus) -> Result<(), MutagenError> {
        if !self.status.can_advance_to(next) {
            return Err(MutagenError::Status {
                mutant_id: self.mutant_id.clone(),
                from: self.status,
                to: next,
            });
        }
        self.status = next;
        Ok(())
    }
}

pub fn mutant_id(site_id: &str, variant: usize) -> String {
    format!("{site_id}-{variant}")
}

/// Path of the HWO delay helper for a mutated file: same directory, hence
/// same package.
pub fn hwo_helper_path(file: &str) -> String {
    match file.rsplit_once('/') {
        Some((dir, _)) => format!("{dir}/{HWO_HELPER_CLASS}.java"),
        None => format!("{HWO_HELPER_CLASS}.java"),
    }
}

fn file_patch(original_name: &str, modified_name: &str, original: &str, modified: &str) -> String {
    diffy::DiffOptions::new()
        .set_original_filename(original_name.to_string())
        .set_modified_filename(modified_name.to_string())
        .create_patch(original, modified)
        .to_string()
}

/// All mutants for `sites`, in site order then variant order. Files are
/// read from `root`.
pub fn generate_mutants(
    root: &Path,
    sites: &[MutationSite],
    cfg: &OperatorConfig,
) -> Result<Vec<Mutant>, MutagenError> {
    let mut units: HashMap<&str, SourceUnit> = HashMap::new();
    let mut out = Vec::new();
    for site in sites {
        if !units.contains_key(site.file.as_str()) {
            let unit = source_model::parse_unit_at(root, Path::new(&site.file))?;
            units.insert(&site.file, unit);
        }
        let unit = &units[site.file.as_str()];
        out.extend(mutants_for_site(root, unit, site, cfg)?);
    }
    Ok(out)
}

/// Mutants for one site of an already parsed unit.
pub fn mutants_for_site(
    root: &Path,
    unit: &SourceUnit,
    site: &MutationSite,
    cfg: &OperatorConfig,
) -> Result<Vec<Mutant>, MutagenError> {
    let variants = operators::apply(unit, site, cfg)?;
    let mut out = Vec::with_capacity(variants.len());
    for (variant, edits) in variants.iter().enumerate() {
        let mutated = operators::apply_edits(unit.text(), edits).map_err(OperatorError::from)?;
        let mut patch = file_patch(&site.file, &site.file, unit.text(), &mutated);
        let mutant_id = mutant_id(&site.site_id, variant);
        if site.operator == OperatorId::Hwo {
            let helper = hwo_helper_path(&site.file);
            if root.join(&helper).exists() {
                return Err(MutagenError::PatchConflict {
                    mutant_id,
                    file: helper,
                    reason: "helper file already exists in the project".into(),
                });
            }
            let source = operators::hwo_helper_source(unit.package());
            patch.push_str(&file_patch("/dev/null", &helper, "", &source));
        }
        out.push(Mutant {
            mutant_id,
            operator: site.operator,
            site_id: site.site_id.clone(),
            file: site.file.clone(),
            span: site.span,
            context: site.context,
            variant,
            status: MutantStatus::Generated,
            patch,
        });
    }
    Ok(out)
}

/// Splits a multi-file unified diff into per-file sections, using the hunk
/// line counts so that content lines starting with `---` are never taken
/// for headers.
fn split_patch(patch: &str) -> Result<Vec<&str>, String> {
    let mut sections = Vec::new();
    let mut start: Option<usize> = None;
    let mut pending = (0usize, 0usize);
    let mut offset = 0;
    for line in patch.split_inclusive('\n') {
        let here = offset;
        offset += line.len();
        if pending != (0, 0) {
            match line.as_bytes().first() {
                Some(b' ') => pending = (pending.0.saturating_sub(1), pending.1.saturating_sub(1)),
                Some(b'-') => pending.0 = pending.0.saturating_sub(1),
                Some(b'+') => pending.1 = pending.1.saturating_sub(1),
                Some(b'\\') => {}
                // diffy writes empty context lines without the leading space
                Some(b'\n') => pending = (pending.0.saturating_sub(1), pending.1.saturating_sub(1)),
                _ => return Err(format!("unexpected line in hunk: {line:?}")),
            }
            continue;
        }
        if line.starts_with("--- ") {
            if let Some(s) = start {
                sections.push(&patch[s..here]);
            }
            start = Some(here);
        } else if let Some(header) = line.strip_prefix("@@ ") {
            pending = hunk_counts(header).ok_or_else(|| format!("bad hunk header {line:?}"))?;
        } else if line.starts_with('\\') || line.starts_with("+++ ") {
        } else {
            return Err(format!("unexpected line {line:?}"));
        }
    }
    if pending != (0, 0) {
        return Err("truncated hunk".into());
    }
    if let Some(s) = start {
        sections.push(&patch[s..]);
    }
    Ok(sections)
}

fn hunk_counts(header: &str) -> Option<(usize, usize)> {
    let mut parts = header.split_whitespace();
    let count = |r: &str| -> Option<usize> {
        match r.split_once(',') {
            Some((_, n)) => n.parse().ok(),
            None => Some(1),
        }
    };
    let old = count(parts.next()?.strip_prefix('-')?)?;
    let new = count(parts.next()?.strip_prefix('+')?)?;
    Some((old, new))
}

/// Contents of every file the mutant touches, after patching the files
/// under `baseline_dir`. Keys are project-relative paths.
pub fn patched_files(
    baseline_dir: &Path,
    mutant: &Mutant,
) -> Result<BTreeMap<String, String>, MutagenError> {
    let bad = |reason: String| MutagenError::BadPatch {
        mutant_id: mutant.mutant_id.clone(),
        reason,
    };
    let mut out = BTreeMap::new();
    for section in split_patch(&mutant.patch).map_err(bad)? {
        let patch = diffy::Patch::from_str(section).map_err(|e| bad(e.to_string()))?;
        let original = patch.original().map(|s| s.to_string());
        let target = patch
            .modified()
            .map(|s| s.to_string())
            .ok_or_else(|| bad("missing +++ header".into()))?;
        check_relative(&target).map_err(bad)?;
        let conflict = |reason: String| MutagenError::PatchConflict {
            mutant_id: mutant.mutant_id.clone(),
            file: target.clone(),
            reason,
        };
        let path = baseline_dir.join(&target);
        let base = if original.as_deref() == Some("/dev/null") {
            if path.exists() {
                return Err(conflict("file to be created already exists".into()));
            }
            String::new()
        } else {
            fs::read_to_string(&path).map_err(|e| conflict(e.to_string()))?
        };
        let patched = diffy::apply(&base, &patch).map_err(|e| conflict(e.to_string()))?;
        out.insert(target, patched);
    }
    Ok(out)
}

fn check_relative(path: &str) -> Result<(), String> {
    let p = Path::new(path);
    if p.is_absolute()
        || p.components()
            .any(|c| matches!(c, std::path::Component::ParentDir))
    {
        return Err(format!("patch path {path:?} escapes the project"));
    }
    Ok(())
}

/// Copies `baseline_dir` to `workspace` (replacing anything there) and
/// applies the mutant's patch. Version-control and tool state directories,
/// and the directory holding `workspace` when it lies inside the baseline,
/// are not copied.
pub fn materialize(
    baseline_dir: &Path,
    mutant: &Mutant,
    workspace: &Path,
) -> Result<PathBuf, MutagenError> {
    // patch first so a conflict leaves no half-built workspace behind
    let files = patched_files(baseline_dir, mutant)?;
    copy_project(baseline_dir, workspace)?;
    for (rel, text) in files {
        let path = workspace.join(&rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        fs::write(&path, text).map_err(io_err(&path))?;
    }
    Ok(workspace.to_path_buf())
}

/// Replaces `dst` with a copy of the project at `src`.
pub fn copy_project(src: &Path, dst: &Path) -> Result<(), MutagenError> {
    if dst.exists() {
        fs::remove_dir_all(dst).map_err(io_err(dst))?;
    }
    fs::create_dir_all(dst).map_err(io_err(dst))?;
    let src_abs = fs::canonicalize(src).map_err(io_err(src))?;
    let dst_abs = fs::canonicalize(dst).map_err(io_err(dst))?;
    // ancestors of the destination that sit inside the source
    let nested: Vec<PathBuf> = dst_abs
        .ancestors()
        .filter(|a| a.starts_with(&src_abs) && *a != src_abs)
        .map(Path::to_path_buf)
        .collect();

    let walker = walkdir::WalkDir::new(&src_abs)
        .follow_links(false)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| {
            let skipped_name = e.depth() == 1
                && e.file_type().is_dir()
                && SKIPPED_DIRS.iter().any(|d| e.file_name() == *d);
            !skipped_name && !nested.iter().any(|n| n == e.path())
        });
    for entry in walker {
        let entry = entry.map_err(|e| MutagenError::Io {
            path: e.path().unwrap_or(src).to_path_buf(),
            source: e.into(),
        })?;
        let rel = entry
            .path()
            .strip_prefix(&src_abs)
            .expect("walk stays under root");
        if rel.as_os_str().is_empty() {
            continue;
        }
        let target = dst_abs.join(rel);
        let ft = entry.file_type();
        if ft.is_dir() {
            fs::create_dir_all(&target).map_err(io_err(&target))?;
        } else if ft.is_symlink() {
            let link = fs::read_link(entry.path()).map_err(io_err(entry.path()))?;
            symlink(&link, &target).map_err(io_err(&target))?;
        } else {
            fs::copy(entry.path(), &target).map_err(io_err(&target))?;
        }
    }
    Ok(())
}

#[cfg(unix)]
fn symlink(link: &Path, at: &Path) -> std::io::Result<()> {
    std::os::unix::fs::symlink(link, at)
}

#[cfg(not(unix))]
fn symlink(link: &Path, at: &Path) -> std::io::Result<()> {
    fs::copy(link, at).map(|_| ())
}

/// Build and test commands with their timeouts.
#[derive(Debug, Clone)]
pub struct ValidationCommands {
    pub build: CommandSpec,
    pub test: CommandSpec,
    pub build_timeout: Duration,
    pub test_timeout: Duration,
}

impl ValidationCommands {
    pub const DEFAULT_BUILD_TIMEOUT: Duration = Duration::from_secs(600);
    pub const DEFAULT_TEST_TIMEOUT: Duration = Duration::from_secs(1800);

    pub fn new(build: CommandSpec, test: CommandSpec) -> ValidationCommands {
        ValidationCommands {
            build,
            test,
            build_timeout: Self::DEFAULT_BUILD_TIMEOUT,
            test_timeout: Self::DEFAULT_TEST_TIMEOUT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationResult {
    pub mutant_id: String,
    pub compiled: bool,
    /// Only present when the build succeeded.
    pub tests_passed: Option<bool>,
    /// The failing phase was killed after its timeout.
    pub timed_out: bool,
    pub log_excerpt: String,
}

impl ValidationResult {
    pub fn status(&self) -> MutantStatus {
        match (self.compiled, self.tests_passed) {
            (false, _) => MutantStatus::CompileFailed,
            (true, Some(true)) => MutantStatus::Valid,
            (true, _) => MutantStatus::TestFailed,
        }
    }
}

/// Runs the build, then the tests if the build succeeded. A timeout fails the
/// phase it happened in.
pub fn validate(
    mutant_id: &str,
    workspace: &Path,
    cmds: &ValidationCommands,
) -> Result<ValidationResult, SpawnError> {
    let env: [(&str, OsString); 1] = [("PERFMUT_MUTANT_ID", mutant_id.into())];
    let build = process::run(&cmds.build, workspace, &env, cmds.build_timeout)?;
    let mut log = phase_log("build", &build, cmds.build_timeout);
    let mut result = ValidationResult {
        mutant_id: mutant_id.to_string(),
        compiled: build.success(),
        tests_passed: None,
        timed_out: build.timed_out(),
        log_excerpt: String::new(),
    };
    if result.compiled {
        let test = process::run(&cmds.test, workspace, &env, cmds.test_timeout)?;
        log.push_str(&phase_log("test", &test, cmds.test_timeout));
        result.tests_passed = Some(test.success());
        result.timed_out = test.timed_out();
    }
    result.log_excerpt = process::excerpt(&log, LOG_EXCERPT_BYTES);
    Ok(result)
}

fn phase_log(phase: &str, o: &process::Outcome, timeout: Duration) -> String {
    let status = match o.status {
        Some(s) => s.to_string(),
        None => format!("timed out after {}s", timeout.as_secs_f64()),
    };
    format!("== {phase}: {status}\n{}{}", o.stdout, o.stderr)
}

/// Materializes and validates every `Generated` mutant with at most
/// `workers` in flight, and records the resulting statuses. Workspaces live
/// under `workspace_root/<mutant_id>`; those of invalid mutants are removed.
/// Results come back in input order.
pub fn validate_all(
    baseline_dir: &Path,
    mutants: &mut [Mutant],
    workspace_root: &Path,
    cmds: &ValidationCommands,
    workers: usize,
) -> Result<Vec<ValidationResult>, MutagenError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()?;
    let results: Vec<Option<ValidationResult>> = pool.install(|| {
        mutants
            .par_iter()
            .map(|m| {
                if m.status != MutantStatus::Generated {
                    return Ok(None);
                }
                let ws = workspace_root.join(&m.mutant_id);
                materialize(baseline_dir, m, &ws)?;
                let r = validate(&m.mutant_id, &ws, cmds)?;
                tracing::info!(mutant = %m.mutant_id, status = %r.status(), "validated");
                if !r.status().is_valid() {
                    fs::remove_dir_all(&ws).map_err(io_err(&ws))?;
                }
                Ok(Some(r))
            })
            .collect::<Result<_, MutagenError>>()
    })?;
    let mut out = Vec::new();
    for (m, r) in mutants.iter_mut().zip(results) {
        if let Some(r) = r {
            m.advance(r.status())?;
            out.push(r);
        }
    }
    Ok(out)
}

/// Writes the manifest: one JSON object per line, in the given order, after
/// folding `results` into the statuses of still-`Generated` mutants. The
/// file is replaced atomically.
pub fn persist_campaign(
    mutants: &[Mutant],
    results: &[ValidationResult],
    out: &Path,
) -> Result<(), MutagenError> {
    let by_id: HashMap<&str, &ValidationResult> =
        results.iter().map(|r| (r.mutant_id.as_str(), r)).collect();
    let mut buf = Vec::new();
    for m in mutants {
        let mut m = m.clone();
        if let Some(r) = by_id.get(m.mutant_id.as_str()) {
            if m.status == MutantStatus::Generated {
                m.advance(r.status())?;
            }
        }
        serde_json::to_writer(&mut buf, &m).expect("mutant serializes");
        buf.push(b'\n');
    }
    write_atomic(out, &buf)
}

/// Reads a manifest written by [`persist_campaign`].
pub fn load_manifest(path: &Path) -> Result<Vec<Mutant>, MutagenError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|source| MutagenError::Manifest {
                path: path.to_path_buf(),
                line: i + 1,
                source,
            })
        })
        .collect()
}

/// Write-then-rename in the destination directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), MutagenError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| MutagenError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source_model::discover_sites;

    const LOOP: &str = "package p;\n\nclass A {\n    int f(int[] a, int n) {\n        int s = 0;\n        for (int i = 0; i < n && i < a.length; i++) {\n            s += a[i];\n        }\n        return s;\n    }\n}\n";

    fn project(files: &[(&str, &str)]) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        for (rel, text) in files {
            let p = dir.path().join(rel);
            fs::create_dir_all(p.parent().unwrap()).unwrap();
            fs::write(p, text).unwrap();
        }
        dir
    }

    fn mutants(root: &Path, file: &str, ops: &[OperatorId]) -> Vec<Mutant> {
        let unit = source_model::parse_unit_at(root, Path::new(file)).unwrap();
        let cfg = OperatorConfig::default();
        let sites = discover_sites(&unit, ops, None, &cfg);
        generate_mutants(root, &sites, &cfg).unwrap()
    }

    fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
        walkdir::WalkDir::new(dir)
            .into_iter()
            .map(Result::unwrap)
            .filter(|e| e.file_type().is_file())
            .map(|e| {
                let rel = e
                    .path()
                    .strip_prefix(dir)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                (rel, fs::read(e.path()).unwrap())
            })
            .collect()
    }

    #[test]
    fn status_lattice_is_forward_only() {
        use MutantStatus::*;
        let all = [Generated, CompileFailed, TestFailed, Valid, Benchmarked];
        let allowed: Vec<_> = all
            .iter()
            .flat_map(|a| all.iter().map(move |b| (*a, *b)))
            .filter(|(a, b)| a.can_advance_to(*b))
            .collect();
        assert_eq!(
            allowed,
            [
                (Generated, CompileFailed),
                (Generated, TestFailed),
                (Generated, Valid),
                (Valid, Benchmarked)
            ]
        );
    }

    #[test]
    fn rcl_workspace_differs_in_the_loop_header_only() {
        let dir = project(&[("src/p/A.java", LOOP), ("README", "x\n")]);
        let ms = mutants(dir.path(), "src/p/A.java", &[OperatorId::Rcl]);
        assert_eq!(ms.len(), 2);
        let ws = tempfile::tempdir().unwrap();
        let out = materialize(dir.path(), &ms[0], &ws.path().join("m")).unwrap();
        let (base, mutated) = (tree(dir.path()), tree(&out));
        assert_eq!(
            base.keys().collect::<Vec<_>>(),
            mutated.keys().collect::<Vec<_>>()
        );
        let old = String::from_utf8(base["src/p/A.java"].clone()).unwrap();
        let new = String::from_utf8(mutated["src/p/A.java"].clone()).unwrap();
        let changed: Vec<(&str, &str)> = old
            .lines()
            .zip(new.lines())
            .filter(|(a, b)| a != b)
            .collect();
        assert_eq!(
            changed,
            [(
                "        for (int i = 0; i < n && i < a.length; i++) {",
                "        for (int i = 0; i < a.length; i++) {"
            )]
        );
        assert_eq!(base["README"], mutated["README"]);
    }

    #[test]
    fn empty_patch_copies_verbatim() {
        let dir = project(&[("a/B.java", "class B {}\n"), ("data.bin", "\u{1}\u{2}")]);
        let m = Mutant {
            mutant_id: "X-0".into(),
            operator: OperatorId::Rcl,
            site_id: "X".into(),
            file: "a/B.java".into(),
            span: Span::new(0, 0),
            context: ContextClass::LoopHeader,
            variant: 0,
            status: MutantStatus::Generated,
            patch: String::new(),
        };
        let ws = tempfile::tempdir().unwrap();
        let out = materialize(dir.path(), &m, &ws.path().join("w")).unwrap();
        assert_eq!(tree(dir.path()), tree(&out));
    }

    #[test]
    fn drifted_baseline_conflicts() {
        let dir = project(&[("src/p/A.java", LOOP)]);
        let ms = mutants(dir.path(), "src/p/A.java", &[OperatorId::Rcl]);
        fs::write(
            dir.path().join("src/p/A.java"),
            LOOP.replace("i < n && i < a.length", "i < n"),
        )
        .unwrap();
        let ws = tempfile::tempdir().unwrap();
        let err = materialize(dir.path(), &ms[0], &ws.path().join("m")).unwrap_err();
        assert!(matches!(err, MutagenError::PatchConflict { .. }), "{err}");
        assert!(!ws.path().join("m").exists());
    }

    #[test]
    fn hwo_patch_adds_the_helper() {
        let src = "package p;\nimport java.io.File;\nclass A {\n    void f(File x) {\n        x.delete();\n    }\n}\n";
        let dir = project(&[("src/p/A.java", src)]);
        let ms = mutants(dir.path(), "src/p/A.java", &[OperatorId::Hwo]);
        assert_eq!(ms.len(), 1);
        let files = patched_files(dir.path(), &ms[0]).unwrap();
        assert_eq!(
            files.keys().collect::<Vec<_>>(),
            ["src/p/A.java", "src/p/PerfMutDelay.java"]
        );
        assert_eq!(
            files["src/p/PerfMutDelay.java"],
            operators::hwo_helper_source(Some("p"))
        );
        assert!(files["src/p/A.java"].contains("PerfMutDelay.sleepMicros(100);"));
    }

    #[test]
    fn patch_lines_that_look_like_headers() {
        let old = "a\n-- x\nb\n";
        let new = "a\n++ y\nb\n";
        let mut patch = file_patch("f", "f", old, new);
        patch.push_str(&file_patch("/dev/null", "g", "", "--- z\n"));
        let sections = split_patch(&patch).unwrap();
        assert_eq!(sections.len(), 2, "{patch}");
        assert!(sections[1].starts_with("--- /dev/null"));
    }

    #[test]
    fn workspace_nested_in_baseline_is_not_copied_into_itself() {
        let dir = project(&[("A.java", "class A {}\n"), (".git/HEAD", "x")]);
        let ws = dir.path().join(".state/workspaces/m");
        copy_project(dir.path(), &ws).unwrap();
        let files = tree(&ws);
        assert_eq!(files.keys().collect::<Vec<_>>(), ["A.java"]);
    }

    #[test]
    fn isolation_between_workspaces() {
        let dir = project(&[("src/p/A.java", LOOP)]);
        let ms = mutants(dir.path(), "src/p/A.java", &[OperatorId::Rcl]);
        let ws = tempfile::tempdir().unwrap();
        let a = materialize(dir.path(), &ms[0], &ws.path().join("a")).unwrap();
        let before_a = tree(&a);
        let base = tree(dir.path());
        materialize(dir.path(), &ms[1], &ws.path().join("b")).unwrap();
        assert_eq!(tree(&a), before_a);
        assert_eq!(tree(dir.path()), base);
    }

    fn cmds(build: &str, test: &str) -> ValidationCommands {
        ValidationCommands::new(build.parse().unwrap(), test.parse().unwrap())
    }

    #[test]
    fn validation_outcomes() {
        let dir = tempfile::tempdir().unwrap();
        let ok = validate("m", dir.path(), &cmds("true", "true")).unwrap();
        assert_eq!(
            (ok.compiled, ok.tests_passed, ok.status()),
            (true, Some(true), MutantStatus::Valid)
        );
        let cf = validate(
            "m",
            dir.path(),
            &cmds("sh -c 'echo boom >&2; exit 1'", "true"),
        )
        .unwrap();
        assert_eq!(
            (cf.compiled, cf.tests_passed, cf.status()),
            (false, None, MutantStatus::CompileFailed)
        );
        assert!(cf.log_excerpt.contains("boom"));
        let tf = validate("m", dir.path(), &cmds("true", "false")).unwrap();
        assert_eq!(tf.status(), MutantStatus::TestFailed);

        let mut slow = cmds("true", "sleep 5");
        slow.test_timeout = Duration::from_millis(100);
        let to = validate("m", dir.path(), &slow).unwrap();
        assert_eq!(
            (to.status(), to.timed_out),
            (MutantStatus::TestFailed, true)
        );

        assert!(validate("m", dir.path(), &cmds("no-such-binary-xyz", "true")).is_err());
    }

    #[test]
    fn manifest_round_trip_and_determinism() {
        let dir = project(&[("src/p/A.java", LOOP)]);
        let mut ms = mutants(dir.path(), "src/p/A.java", &OperatorId::ALL);
        assert!(ms.len() >= 5);
        ms.truncate(5);
        let statuses = [
            MutantStatus::Valid,
            MutantStatus::Valid,
            MutantStatus::Valid,
            MutantStatus::CompileFailed,
            MutantStatus::TestFailed,
        ];
        let results: Vec<ValidationResult> = ms
            .iter()
            .zip(statuses)
            .map(|(m, s)| ValidationResult {
                mutant_id: m.mutant_id.clone(),
                compiled: s != MutantStatus::CompileFailed,
                tests_passed: (s != MutantStatus::CompileFailed)
                    .then_some(s == MutantStatus::Valid),
                timed_out: false,
                log_excerpt: String::new(),
            })
            .collect();
        let out = tempfile::tempdir().unwrap();
        let path = out.path().join("manifest.jsonl");
        persist_campaign(&ms, &results, &path).unwrap();
        let first = fs::read(&path).unwrap();
        assert_eq!(first.iter().filter(|b| **b == b'\n').count(), 5);
        let loaded = load_manifest(&path).unwrap();
        assert_eq!(
            loaded.iter().map(|m| m.status).collect::<Vec<_>>(),
            statuses
        );

        persist_campaign(&loaded, &[], &path).unwrap();
        assert_eq!(fs::read(&path).unwrap(), first);
        persist_campaign(&ms, &results, &path).unwrap();
        assert_eq!(fs::read(&path).unwrap(), first);

        let line: serde_json::Value =
            serde_json::from_slice(first.split(|b| *b == b'\n').next().unwrap()).unwrap();
        let keys: Vec<&String> = line.as_object().unwrap().keys().collect();
        let mut expected = [
            "mutant_id",
            "operator",
            "site_id",
            "file",
            "span",
            "context",
            "variant",
            "status",
            "patch",
        ];
        expected.sort();
        assert_eq!(keys, expected);
    }

    #[test]
    fn empty_manifest() {
        let out = tempfile::tempdir().unwrap();
        let path = out.path().join("m.jsonl");
        persist_campaign(&[], &[], &path).unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"");
        assert!(load_manifest(&path).unwrap().is_empty());
    }

    #[test]
    fn parallel_validation_keeps_order() {
        let dir = project(&[("src/p/A.java", LOOP)]);
        let mut ms = mutants(dir.path(), "src/p/A.java", &OperatorId::ALL);
        let ws = tempfile::tempdir().unwrap();
        // fails the build for RCL mutants only
        let c = cmds(
            "sh -c 'case $PERFMUT_MUTANT_ID in RCL*) exit 1;; esac'",
            "true",
        );
        let results = validate_all(dir.path(), &mut ms, ws.path(), &c, 4).unwrap();
        assert_eq!(results.len(), ms.len());
        for (m, r) in ms.iter().zip(&results) {
            assert_eq!(m.mutant_id, r.mutant_id);
            let expected = if m.operator == OperatorId::Rcl {
                MutantStatus::CompileFailed
            } else {
                MutantStatus::Valid
            };
            assert_eq!(m.status, expected);
            assert_eq!(ws.path().join(&m.mutant_id).exists(), expected.is_valid());
        }
    }
}
