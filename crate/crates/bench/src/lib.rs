//! Criterion benchmarks for `extinction-core` live in `benches/`.
