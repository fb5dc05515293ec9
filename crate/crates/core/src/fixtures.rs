//! Small reference networks used across test suites and documentation.

use crate::graph::{Architecture, NetworkBuilder, Parameters};

/// Diamond network `D1`: one input `u`, ReLU neurons `h1`/`h2`, identity
/// output `o`, with weights `u->h1 = 2`, `u->h2 = -3`, `h1->o = 1`,
/// `h2->o = 1` and bias `0.5` on `h1`.
pub fn diamond() -> (Architecture, Parameters) {
    NetworkBuilder::new()
        .name("d1")
        .input("u")
        .relu("h1")
        .relu("h2")
        .identity("o")
        .edge("u", "h1", 2.0)
        .edge("u", "h2", -3.0)
        .edge("h1", "o", 1.0)
        .edge("h2", "o", 1.0)
        .bias("h1", 0.5)
        .build()
        .expect("diamond fixture is well formed")
}

/// Max-pooling network `M1`: inputs `u1`/`u2` feeding a classical max-pool
/// neuron `v` (1-max-pool, unit weights, zero bias) wired to identity output
/// `o`. The forward pass on an all-ones input yields 1 while the L1
/// path-norm is 2, which is why path-norm computation must rewrite pooling
/// neurons to identity first.
pub fn pool_counterexample() -> (Architecture, Parameters) {
    NetworkBuilder::new()
        .name("m1")
        .input("u1")
        .input("u2")
        .kpool("v", 1)
        .identity("o")
        .edge("u1", "v", 1.0)
        .edge("u2", "v", 1.0)
        .edge("v", "o", 1.0)
        .build()
        .expect("pool counterexample fixture is well formed")
}
