//! Criterion benchmarks for the simulator, live under `benches/`.
