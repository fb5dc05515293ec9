//! Deterministic random generation of valid networks.
//!
//! The oracle and invariance suites run the fast formulas against
//! brute-force references over thousands of random DAGs. Reproducibility
//! matters more than statistical quality there, so sampling is built on a
//! fixed 64-bit mixing generator rather than an external RNG: the same seed
//! yields the same network on every platform and run.

use std::collections::BTreeMap;

use crate::graph::{Activation, Architecture, NetworkBuilder, NeuronId, Parameters};

/// SplitMix64 pseudo-random generator.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform in `0..n` (`n > 0`).
    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }
}

/// Shape of the sampled networks.
#[derive(Clone, Debug)]
pub struct NetConfig {
    pub max_neurons: usize,
    pub max_inputs: usize,
    pub max_outputs: usize,
    /// Admissible pooling orders; empty disables pooling neurons.
    pub pool_orders: Vec<usize>,
    pub edge_density: f64,
    pub weight_range: (f64, f64),
    /// Bias range for non-input neurons; `None` keeps every bias at zero.
    pub bias_range: Option<(f64, f64)>,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            max_neurons: 12,
            max_inputs: 3,
            max_outputs: 2,
            pool_orders: vec![1, 2],
            edge_density: 0.45,
            weight_range: (-2.0, 2.0),
            bias_range: Some((-2.0, 2.0)),
        }
    }
}

impl NetConfig {
    pub fn bias_free(mut self) -> Self {
        self.bias_range = None;
        self
    }

    pub fn pool_free(mut self) -> Self {
        self.pool_orders.clear();
        self
    }
}

/// Samples a valid network: acyclic by construction, declared inputs are
/// exactly the sources, sinks are identity outputs, every pooling order fits
/// its kernel. Weights and biases are uniform in the configured ranges.
pub fn sample_network(rng: &mut SplitMix64, cfg: &NetConfig) -> (Architecture, Parameters) {
    let n_in = 1 + rng.below(cfg.max_inputs);
    let n_out = 1 + rng.below(cfg.max_outputs);
    let remaining = cfg.max_neurons.saturating_sub(n_in + n_out);
    let n_hidden = rng.below(remaining + 1);
    let total = n_in + n_hidden + n_out;

    // Positions 0..n_in are inputs, the last n_out are outputs; edges only
    // go forward in position, so the graph is a DAG by construction.
    let id_of = |pos: usize| -> String {
        if pos < n_in {
            format!("in{pos:02}")
        } else if pos < n_in + n_hidden {
            format!("mid{pos:02}")
        } else {
            format!("out{pos:02}")
        }
    };

    let mut edges: Vec<(usize, usize)> = Vec::new();
    for v in n_in..total {
        for u in 0..v {
            if u >= n_in + n_hidden {
                continue; // outputs have no successors
            }
            if rng.chance(cfg.edge_density) {
                edges.push((u, v));
            }
        }
        if !edges.iter().any(|&(_, t)| t == v) {
            // Every non-input needs an antecedent.
            let limit = v.min(n_in + n_hidden);
            edges.push((rng.below(limit), v));
        }
    }
    // Every non-output needs a successor.
    for u in 0..n_in + n_hidden {
        if !edges.iter().any(|&(f, _)| f == u) {
            let lo = (u + 1).max(n_in);
            let v = lo + rng.below(total - lo);
            edges.push((u, v));
        }
    }

    let mut kernel = vec![0usize; total];
    for &(_, v) in &edges {
        kernel[v] += 1;
    }

    let mut builder = NetworkBuilder::new();
    for pos in 0..total {
        let activation = if pos < n_in {
            Activation::Input
        } else if pos >= n_in + n_hidden {
            Activation::Identity
        } else {
            let fitting: Vec<usize> = cfg
                .pool_orders
                .iter()
                .copied()
                .filter(|&k| k >= 1 && k <= kernel[pos])
                .collect();
            let roll = rng.next_f64();
            if roll < 0.25 && !fitting.is_empty() {
                Activation::KPool(fitting[rng.below(fitting.len())])
            } else if roll < 0.5 {
                Activation::Identity
            } else {
                Activation::Relu
            }
        };
        builder = builder.neuron(id_of(pos), activation);
    }
    let (lo, hi) = cfg.weight_range;
    for &(u, v) in &edges {
        builder = builder.edge(id_of(u), id_of(v), rng.uniform(lo, hi));
    }
    if let Some((blo, bhi)) = cfg.bias_range {
        for pos in n_in..total {
            builder = builder.bias(id_of(pos), rng.uniform(blo, bhi));
        }
    }
    builder.build().expect("sampled network is well formed")
}

/// Uniform input vector in `[lo, hi)^d`.
pub fn sample_input(rng: &mut SplitMix64, d: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..d).map(|_| rng.uniform(lo, hi)).collect()
}

/// Renames every neuron through a random bijection, preserving structure,
/// weights and biases. Returns the relabeled network and the old-to-new id
/// mapping. Note that input and output coordinate orders follow id order,
/// so they are permuted accordingly.
pub fn relabel_network(
    rng: &mut SplitMix64,
    arch: &Architecture,
    params: &Parameters,
) -> (Architecture, Parameters, BTreeMap<NeuronId, NeuronId>) {
    let n = arch.neuron_count();
    let mut slots: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        slots.swap(i, rng.below(i + 1));
    }
    let mapping: BTreeMap<NeuronId, NeuronId> = (0..n)
        .map(|v| (arch.id(v).clone(), NeuronId::new(format!("r{:03}", slots[v]))))
        .collect();

    let mut builder = NetworkBuilder::new();
    for v in 0..n {
        builder = builder.neuron(mapping[arch.id(v)].clone(), arch.activation(v));
    }
    for (e, &(f, t)) in arch.edges().iter().enumerate() {
        builder = builder.edge(
            mapping[arch.id(f)].clone(),
            mapping[arch.id(t)].clone(),
            params.weight(e),
        );
    }
    for v in 0..n {
        if !arch.is_input(v) && params.bias(v) != 0.0 {
            builder = builder.bias(mapping[arch.id(v)].clone(), params.bias(v));
        }
    }
    let (new_arch, new_params) = builder.build().expect("relabeling preserves well-formedness");
    (new_arch, new_params, mapping)
}
