//! Fixtures shared by the benchmarks.

use conflictbn::circuits::{
    build_adder, double_error_scenario, single_error_scenario, Adder, AdderSpec,
};
use conflictbn::Observation;

/// An `n`-bit zero-input adder whose only wrong output is bit `k`.
pub fn single_error(n: usize, k: usize) -> (Adder, Observation) {
    let adder = build_adder(&AdderSpec::new(n)).expect("valid adder size");
    let obs = single_error_scenario(&adder, k).expect("bit in range");
    (adder, obs)
}

/// An `n`-bit zero-input adder with wrong outputs at bits `k1` and `k2`.
pub fn double_error(n: usize, k1: usize, k2: usize) -> (Adder, Observation) {
    let adder = build_adder(&AdderSpec::new(n)).expect("valid adder size");
    let obs = double_error_scenario(&adder, k1, k2).expect("bits in range");
    (adder, obs)
}
