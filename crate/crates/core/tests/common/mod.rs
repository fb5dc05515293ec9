//! Helpers shared by the oracle and acceptance suites.
#![allow(dead_code)]

use pathgauge_core::graph::{Architecture, Parameters};
use pathgauge_core::paths::{self, PathLifting};

/// Relative error with `max(|a|, |b|)` in the denominator; exact matches
/// (including both zero) count as zero error.
pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs())
}

pub fn max_rel_err(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    xs.iter()
        .zip(ys)
        .map(|(&a, &b)| rel_err(a, b))
        .fold(0.0, f64::max)
}

pub fn assert_all_close(xs: &[f64], ys: &[f64], tol: f64, what: &str) {
    let err = max_rel_err(xs, ys);
    assert!(err <= tol, "{what}: max relative error {err:.3e} > {tol:.0e}");
}

/// Flat q-norm of the full lifting vector.
pub fn flat_norm(lifting: &PathLifting, q: f64) -> f64 {
    lifting
        .values()
        .iter()
        .map(|v| v.abs().powf(q))
        .sum::<f64>()
        .powf(1.0 / q)
}

pub fn lifting_l1(arch: &Architecture, params: &Parameters, cap: u64) -> f64 {
    paths::path_lifting(arch, params, cap)
        .unwrap()
        .values()
        .iter()
        .map(|v| v.abs())
        .sum()
}

/// Scales the model's outputs by `s`: multiplies every output neuron's
/// incoming weights and bias by `s`. Scales realize and every lifting entry
/// by exactly `s`.
pub fn scale_outputs(arch: &Architecture, params: &Parameters, s: f64) -> Parameters {
    let mut weights: Vec<f64> = params.weights().to_vec();
    let mut biases: Vec<f64> = params.biases().to_vec();
    for &v in arch.outputs() {
        for (_, e) in arch.incoming(v) {
            weights[e] *= s;
        }
        biases[v] *= s;
    }
    Parameters::from_values(arch, weights, biases).expect("same shape")
}

/// Copy of `params` with every pooling neuron's bias forced to zero, the
/// precondition of bias absorption and of the bound constants.
pub fn zero_pool_biases(arch: &Architecture, params: &Parameters) -> Parameters {
    let weights = params.weights().to_vec();
    let mut biases = params.biases().to_vec();
    for v in 0..arch.neuron_count() {
        if arch.activation(v).is_pool() {
            biases[v] = 0.0;
        }
    }
    Parameters::from_values(arch, weights, biases).expect("same shape")
}

/// Sorted absolute lifting values, for order-insensitive comparison.
pub fn lifting_multiset(arch: &Architecture, params: &Parameters, cap: u64) -> Vec<f64> {
    let mut values: Vec<f64> = paths::path_lifting(arch, params, cap)
        .unwrap()
        .values()
        .to_vec();
    values.sort_by(f64::total_cmp);
    values
}
