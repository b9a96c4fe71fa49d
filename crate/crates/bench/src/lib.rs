//! Criterion benchmarks for `graphenergy`; see `benches/operators.rs`.
//! Run with `cargo bench -p graphenergy-bench`.
