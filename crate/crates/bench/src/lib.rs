//! Benchmarks for the flow, cylinder, eigensolver and torus estimate code.
//! Run with `cargo bench -p escs-bench`.
