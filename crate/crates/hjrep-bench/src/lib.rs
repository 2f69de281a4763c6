//! Benchmark-only crate; the targets live in `benches/primitives.rs`.
//! Run with `cargo bench -p hjrep-bench`.
