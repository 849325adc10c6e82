//! Criterion benchmarks for the right-hand sides and the integrator live in `benches/`.
