//! Criterion benchmarks for lsikit; run with `cargo bench -p lsikit-bench`.
