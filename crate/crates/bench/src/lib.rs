//! Criterion benchmarks for qoems-core; see `benches/`.
