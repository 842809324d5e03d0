//! Criterion benchmarks for rno-core live in `benches/`.
