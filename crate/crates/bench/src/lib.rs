//! Shared network builders for the benchmark targets.

use pathgauge_core::graph::{Architecture, NetworkBuilder, Parameters};
use pathgauge_core::sampler::SplitMix64;

/// Fully-connected layered ReLU network with the given layer widths
/// (first = inputs, last = identity outputs), weights and biases uniform
/// in [-1, 1].
pub fn layered(widths: &[usize], seed: u64) -> (Architecture, Parameters) {
    assert!(widths.len() >= 2);
    let mut rng = SplitMix64::new(seed);
    let id = |layer: usize, pos: usize| format!("l{layer:02}n{pos:03}");
    let mut builder = NetworkBuilder::new().name("layered-bench");
    for (layer, &width) in widths.iter().enumerate() {
        for pos in 0..width {
            builder = if layer == 0 {
                builder.input(id(layer, pos))
            } else if layer + 1 == widths.len() {
                builder.identity(id(layer, pos))
            } else {
                builder.relu(id(layer, pos))
            };
            if layer > 0 {
                builder = builder.bias(id(layer, pos), rng.uniform(-1.0, 1.0));
            }
        }
    }
    for layer in 1..widths.len() {
        for to in 0..widths[layer] {
            for from in 0..widths[layer - 1] {
                builder = builder.edge(
                    id(layer - 1, from),
                    id(layer, to),
                    rng.uniform(-1.0, 1.0),
                );
            }
        }
    }
    builder.build().expect("layered bench network is well formed")
}
