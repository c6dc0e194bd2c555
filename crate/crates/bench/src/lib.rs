//! Fixtures shared by the benchmarks.

use hmgibbs::{expand_example, ExampleId, FactorSystem, PointSpec};

pub fn system(id: ExampleId) -> FactorSystem {
    expand_example(id, None)
        .expect("built-in example")
        .factor_system()
        .expect("valid example")
}

/// `(01)^k 0^∞` on a two-letter factor.
pub fn long_point(fs: &FactorSystem, k: usize) -> PointSpec {
    PointSpec::new(fs, [0, 1].repeat(k), vec![0]).expect("admissible on the full two-shift")
}

/// Deterministic factor word of length `n` on the full two-shift.
pub fn word(n: usize) -> Vec<usize> {
    (0..n).map(|i| (i * i + i / 3) % 2).collect()
}
