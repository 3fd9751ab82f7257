//! Criterion benchmarks for the dops-core kernels; see `benches/kernels.rs`.
