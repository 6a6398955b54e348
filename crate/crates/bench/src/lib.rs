//! Criterion benchmarks for the hot paths of `hidden-sir-core`; see `benches/`.
