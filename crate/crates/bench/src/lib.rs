//! Benchmark host crate. See `benches/kernels.rs`; there is no library code.
