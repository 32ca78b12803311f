//! Helpers shared by the integration tests: fixture paths, golden files,
//! seeded test data and independent statistical oracles.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use perfmut_core::bench_ingest::BenchSample;
use rand::{RngExt, SeedableRng};
use rand_chacha::{ChaCha20Rng, ChaCha8Rng};

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

pub fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

/// Compares `actual` with the golden file, or rewrites the file when
/// `PERFMUT_BLESS` is set.
pub fn check_golden(name: &str, actual: &str) -> Result<(), String> {
    let path = golden_path(name);
    if std::env::var_os("PERFMUT_BLESS").is_some() {
        std::fs::write(&path, actual).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let expected = std::fs::read_to_string(&path)
        .map_err(|e| format!("{}: {e} (set PERFMUT_BLESS=1 to create)", path.display()))?;
    if expected == actual {
        return Ok(());
    }
    let (line, (e, a)) = expected
        .lines()
        .zip(actual.lines())
        .enumerate()
        .find(|(_, (e, a))| e != a)
        .unwrap_or((
            expected.lines().count().min(actual.lines().count()),
            ("<end>", "<end>"),
        ));
    Err(format!(
        "{} differs at line {}:\n  expected: {e}\n  actual:   {a}",
        path.display(),
        line + 1
    ))
}

/// Copy of a fixture project in a fresh temporary directory.
pub fn project_copy(rel: &str) -> (tempfile::TempDir, PathBuf) {
    let tmp = tempfile::tempdir().expect("tempdir");
    let dst = tmp.path().join("project");
    perfmut_core::mutagen::copy_project(&fixture(rel), &dst).expect("copy fixture");
    (tmp, dst)
}

/// Standard normal deviates by Box–Muller over ChaCha8 seeded with
/// `seed_from_u64(seed)`; each pair of uniforms `u1 ∈ (0,1]`, `u2 ∈ [0,1)`
/// yields `sqrt(-2 ln u1) cos(2π u2)`.
pub struct Normal {
    rng: ChaCha8Rng,
}

impl Normal {
    pub fn new(seed: u64) -> Normal {
        Normal {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn next(&mut self) -> f64 {
        let u1 = 1.0 - self.rng.random::<f64>();
        let u2 = self.rng.random::<f64>();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// `forks × iters` draws of `exp(mu + sigma·Z)` times `scale`.
pub fn lognormal_sample(
    normal: &mut Normal,
    label: &str,
    mu: f64,
    sigma: f64,
    forks: usize,
    iters: usize,
    scale: f64,
) -> BenchSample {
    let data = (0..forks)
        .map(|_| {
            (0..iters)
                .map(|_| (mu + sigma * normal.next()).exp() * scale)
                .collect()
        })
        .collect();
    BenchSample::new("bench.Lognormal.run", label, "ns/op", data).expect("valid sample")
}

/// Exact mean and variance of the hierarchical resample mean for a
/// 2-fork × 2-iteration sample, by enumerating every equally likely ordered
/// draw: two fork picks, then two iteration picks inside each.
pub fn exact_2x2_moments(forks: &[[f64; 2]; 2]) -> (f64, f64) {
    let mut outcomes = Vec::new();
    for f1 in 0..2 {
        for f2 in 0..2 {
            for a in 0..4 {
                for b in 0..4 {
                    let m1 = (forks[f1][a & 1] + forks[f1][a >> 1]) / 2.0;
                    let m2 = (forks[f2][b & 1] + forks[f2][b >> 1]) / 2.0;
                    outcomes.push((m1 + m2) / 2.0);
                }
            }
        }
    }
    let n = outcomes.len() as f64;
    let mean = outcomes.iter().sum::<f64>() / n;
    let var = outcomes.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// A separately written bootstrap: ChaCha20 instead of ChaCha8, one
/// sequential stream, nearest-rank percentiles.
pub fn oracle_ratio_ci(
    base: &BenchSample,
    treat: &BenchSample,
    iterations: usize,
    confidence: f64,
    seed: u64,
) -> (f64, f64) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut resample = |s: &BenchSample| -> f64 {
        let k = s.forks.len();
        let mut total = 0.0;
        for _ in 0..k {
            let fork = &s.forks[rng.random_range(0..k)];
            let n = fork.len();
            let mut acc = 0.0;
            for _ in 0..n {
                acc += fork[rng.random_range(0..n)];
            }
            total += acc / n as f64;
        }
        total / k as f64
    };
    let mut ratios: Vec<f64> = (0..iterations)
        .map(|_| resample(treat) / resample(base))
        .collect();
    ratios.sort_by(f64::total_cmp);
    let alpha = 1.0 - confidence;
    let rank = |p: f64| ratios[((p * iterations as f64).ceil() as usize).clamp(1, iterations) - 1];
    (rank(alpha / 2.0), rank(1.0 - alpha / 2.0))
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}
