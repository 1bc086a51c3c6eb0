//! Criterion benchmarks for agency-core live under `benches/`.
