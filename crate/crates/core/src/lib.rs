//! Path-lifting toolkit for DAG ReLU networks.
//!
//! This crate models ReLU networks as arbitrary DAGs of neurons (with
//! biases, skip connections and k-max-pooling) and computes, with
//! brute-force oracles backing every fast formula:
//!
//! - exact forward evaluation with per-edge activation traces ([`forward`]);
//! - path enumeration, the path-lifting vector and the path-activation
//!   matrix ([`paths`]);
//! - mixed path-norms via a single rewritten forward pass, the DAG
//!   operator-norm product and certified Lipschitz bounds ([`norms`]);
//! - rescaling symmetries and the q-normalization of parameters
//!   ([`rescale`]);
//! - function-preserving graph rewrites: bias absorption, identity-neuron
//!   elimination, pooling constructors ([`transforms`]);
//! - generalization and margin bound constants assembled from architecture
//!   metadata and dataset statistics ([`bounds`]).
//!
//! Networks and datasets round-trip through the text formats in [`io`].

pub mod bounds;
pub mod error;
pub mod fixtures;
pub mod forward;
pub mod graph;
pub mod io;
pub mod norms;
pub mod paths;
pub mod rescale;
pub mod runtime;
pub mod sampler;
pub mod transforms;

pub use error::{Error, Result};
pub use graph::{
    Activation, Architecture, NetworkBuilder, Neuron, NeuronId, NeuronIdx, Parameters, PoolStats,
    ValidationReport, Violation,
};
