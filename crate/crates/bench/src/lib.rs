//! Criterion benchmarks for the splitscan learners; see `benches/`.
