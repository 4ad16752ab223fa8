//! Criterion benchmarks for closed-form evaluation, integration and fitting; see `benches/`.
