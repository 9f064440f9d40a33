//! Benchmark-only crate; see `benches/simulator.rs` for the measured
//! workloads. The library target exists solely to anchor the package.
