//! Benchmark-only crate; see `benches/`.

pub use ou_pairs_core;
