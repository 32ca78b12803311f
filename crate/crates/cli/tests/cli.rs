use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn perfmut(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perfmut"))
        .args(args)
        .current_dir(cwd)
        .env("SOURCE_DATE_EPOCH", "0")
        .output()
        .expect("spawn perfmut")
}

fn here() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn core_tests() -> PathBuf {
    here().join("../core/tests")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn copy_dir(src: &Path, dst: &Path) {
    for entry in std::fs::read_dir(src).unwrap() {
        let entry = entry.unwrap();
        let to = dst.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            std::fs::create_dir_all(&to).unwrap();
            copy_dir(&entry.path(), &to);
        } else {
            std::fs::copy(entry.path(), &to).unwrap();
        }
    }
}

#[test]
fn sites_listing_matches_the_corpus_golden() {
    let corpus = core_tests().join("fixtures/corpus");
    let o = perfmut(&["sites"], &corpus);
    assert!(o.status.success(), "{}", stderr(&o));
    let golden = std::fs::read_to_string(core_tests().join("golden/corpus_sites.tsv")).unwrap();
    let n = golden.lines().count();
    assert_eq!(stdout(&o), format!("{golden}{n} site(s)\n"));
}

#[test]
fn sites_json_is_parseable() {
    let cfg = core_tests().join("fixtures/corpus/perfmut.toml");
    let o = perfmut(
        &["--json", "sites", "--config", cfg.to_str().unwrap()],
        &here(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["sites"].as_array().unwrap().len(), 27);
    assert_eq!(v["sites"][0]["operator"], "PTW");
}

#[test]
fn compare_zero_variance_doubling() {
    let fx = here().join("tests/fixtures");
    let o = perfmut(&["compare", "const_base.json", "const_double.json"], &fx);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("ratio:     2\n"), "{text}");
    assert!(text.contains("ci:        [2, 2]"), "{text}");
    assert!(text.contains("killed"), "{text}");

    let o = perfmut(
        &["compare", "--json", "const_base.json", "const_double.json"],
        &fx,
    );
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v[0]["ratio_point"].as_f64(), Some(2.0));
    assert_eq!(v[0]["killed"], true);
}

#[test]
fn compare_rejects_too_few_iterations() {
    let fx = here().join("tests/fixtures");
    let o = perfmut(
        &[
            "compare",
            "--iterations",
            "10",
            "const_base.json",
            "const_double.json",
        ],
        &fx,
    );
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn missing_config_is_a_configuration_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = perfmut(&["sites", "--config", "nope.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope.toml"), "{}", stderr(&o));
}

#[test]
fn bad_arguments_are_usage_errors() {
    let o = perfmut(&["frobnicate"], &here());
    assert_eq!(o.status.code(), Some(1));
    let o = perfmut(&["compare", "only-one.json"], &here());
    assert_eq!(o.status.code(), Some(1));
    let o = perfmut(&["--help"], &here());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("Usage"));
}

#[test]
fn analysis_needs_a_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    copy_dir(&core_tests().join("fixtures/project"), tmp.path());
    let o = perfmut(&["analyze"], tmp.path());
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
    let o = perfmut(&["report"], tmp.path());
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
}

#[test]
fn full_campaign_with_seed_override() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    copy_dir(&core_tests().join("fixtures/project"), dir);

    let o = perfmut(&["mutate"], dir);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = stdout(&o);
    assert!(table.starts_with("operator\tgenerated\tcompile_failed\ttest_failed\tvalid\n"));
    assert!(table.contains("STS\t1\t1\t0\t0\n"), "{table}");
    assert!(table.contains("URV\t1\t0\t1\t0\n"), "{table}");

    // an invalid mutant is refused with the build/test exit code
    let manifest = std::fs::read_to_string(dir.join(".perfmut/manifest.jsonl")).unwrap();
    let sts: serde_json::Value = manifest
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .find(|m| m["operator"] == "STS")
        .unwrap();
    let o = perfmut(&["bench", sts["mutant_id"].as_str().unwrap()], dir);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = perfmut(&["bench", "RCL-0000000000000000-0"], dir);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));

    for target in ["baseline", "all-valid"] {
        let o = perfmut(&["bench", target], dir);
        assert!(o.status.success(), "{target}: {}", stderr(&o));
    }
    let o = perfmut(&["--seed", "7", "analyze"], dir);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("mutation score: 0.600 (3 of 5 valid mutants killed)\n"));

    let o = perfmut(&["report", "--format", "json"], dir);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["metadata"]["bootstrap"]["seed"], 7);
    assert_eq!(report["metadata"]["created_at"], "1970-01-01T00:00:00Z");
    let o = perfmut(&["report"], dir);
    assert!(stdout(&o).contains("seed = 7"));
}
