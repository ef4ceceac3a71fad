//! Criterion benchmarks for `qmetro-core`; see `benches/`.
