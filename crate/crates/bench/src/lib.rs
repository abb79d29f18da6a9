//! Criterion benchmarks for `rfs-core`; see `benches/`.
