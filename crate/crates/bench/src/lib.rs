//! Criterion benchmarks for perfmut; see `benches/`.
