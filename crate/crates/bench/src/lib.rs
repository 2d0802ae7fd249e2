//! Microbenchmarks live under benches/; run with `cargo bench -p rinst-bench`.
