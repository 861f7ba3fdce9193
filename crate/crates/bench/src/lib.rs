//! Benchmark-only crate. See `benches/hot_paths.rs`.
