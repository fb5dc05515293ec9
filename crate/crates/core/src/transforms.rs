//! Function- and path-norm-preserving graph rewrites.
//!
//! - [`pool_to_identity`]: replaces every pooling activation by identity
//!   (the rewrite behind the single-forward-pass path-norm formula);
//! - [`absorb_biases`]: moves biases onto edges from a fresh constant-one
//!   input neuron;
//! - [`eliminate_identity_neurons`]: contracts hidden identity neurons into
//!   products on bypassing edges;
//! - [`make_max_pool`] / [`make_avg_pool`]: canonical encodings of classical
//!   max- and average-pooling.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{Activation, Architecture, NetworkBuilder, Neuron, NeuronId, Parameters};

/// Returns the same DAG with every `kpool` activation replaced by
/// `identity`. Paths and lifting values are untouched (they only depend on
/// the DAG), only forward semantics change.
pub fn pool_to_identity(arch: &Architecture) -> Architecture {
    arch.with_activations(|_, a| match a {
        Activation::KPool(_) => Activation::Identity,
        other => other,
    })
}

/// Result of [`absorb_biases`]: the rewritten network plus how to feed it.
#[derive(Clone, Debug)]
pub struct BiasAbsorption {
    pub architecture: Architecture,
    pub parameters: Parameters,
    /// Id of the constant-one input neuron, if one was added.
    pub bias_input: Option<NeuronId>,
    /// Position of that neuron in the new ascending input order.
    pub bias_position: Option<usize>,
}

impl BiasAbsorption {
    /// Inserts the constant 1 into `x` at the bias input's position, turning
    /// an input of the original network into one of the rewritten network.
    pub fn augment(&self, x: &[f64]) -> Vec<f64> {
        match self.bias_position {
            None => x.to_vec(),
            Some(pos) => {
                let mut out = Vec::with_capacity(x.len() + 1);
                out.extend_from_slice(&x[..pos]);
                out.push(1.0);
                out.extend_from_slice(&x[pos..]);
                out
            }
        }
    }
}

fn fresh_bias_id(arch: &Architecture) -> NeuronId {
    if arch.index_of("v_bias").is_none() {
        return NeuronId::new("v_bias");
    }
    let mut i = 0usize;
    loop {
        let candidate = format!("v_bias_{i}");
        if arch.index_of(&candidate).is_none() {
            return NeuronId::new(candidate);
        }
        i += 1;
    }
}

/// Moves every nonzero bias of a non-pooling neuron onto an edge from a new
/// constant-one input neuron, zeroing the bias. Evaluating the result on
/// `augment(x)` equals evaluating the original on `x`, and the L1 path-norm
/// is preserved.
///
/// Pooling neurons must have null biases (their bias cannot be absorbed
/// without changing the order statistics). A bias-free network is returned
/// unchanged unless `force` is set, in which case the bias input is wired to
/// every eligible neuron with (possibly zero) weight `b_v`, keeping the
/// input dimension uniformly `d_in + 1`.
pub fn absorb_biases(
    arch: &Architecture,
    params: &Parameters,
    force: bool,
) -> Result<BiasAbsorption> {
    params.check_binding(arch)?;
    for v in 0..arch.neuron_count() {
        if arch.activation(v).is_pool() && params.bias(v) != 0.0 {
            return Err(Error::PoolBiasNonZero(arch.id(v).to_string()));
        }
    }
    let carries: Vec<usize> = (0..arch.neuron_count())
        .filter(|&v| {
            !arch.is_input(v)
                && !arch.activation(v).is_pool()
                && (force || params.bias(v) != 0.0)
        })
        .collect();
    if carries.is_empty() {
        return Ok(BiasAbsorption {
            architecture: arch.clone(),
            parameters: params.clone(),
            bias_input: None,
            bias_position: None,
        });
    }

    let bias_id = fresh_bias_id(arch);
    let mut neurons: Vec<Neuron> = arch.neurons().to_vec();
    neurons.push(Neuron {
        id: bias_id.clone(),
        activation: Activation::Input,
    });
    let mut edges: Vec<(NeuronId, NeuronId, f64)> = arch
        .edges()
        .iter()
        .enumerate()
        .map(|(e, &(f, t))| (arch.id(f).clone(), arch.id(t).clone(), params.weight(e)))
        .collect();
    for &v in &carries {
        edges.push((bias_id.clone(), arch.id(v).clone(), params.bias(v)));
    }

    let mut builder = NetworkBuilder::new();
    if let Some(name) = arch.name() {
        builder = builder.name(name);
    }
    for n in neurons {
        builder = builder.neuron(n.id, n.activation);
    }
    for (f, t, w) in edges {
        builder = builder.edge(f, t, w);
    }
    for v in 0..arch.neuron_count() {
        if !arch.is_input(v) && !carries.contains(&v) && params.bias(v) != 0.0 {
            builder = builder.bias(arch.id(v).clone(), params.bias(v));
        }
    }
    let (new_arch, new_params) = builder.build()?;
    let bias_idx = new_arch
        .index_of(bias_id.as_str())
        .expect("bias input exists");
    let bias_position = new_arch.input_position(bias_idx);
    Ok(BiasAbsorption {
        architecture: new_arch,
        parameters: new_params,
        bias_input: Some(bias_id),
        bias_position,
    })
}

/// Removes hidden identity neurons, adding the weight product
/// `w(u,v) * w(v,w)` to the bypass edge `u -> w` for each antecedent/
/// successor pair (summing into an already existing edge). The realized
/// function is always preserved and the depth cannot increase. The L1
/// path-norm is preserved whenever no bypass edge merges with an existing
/// one; a merge adds weights of possibly opposite signs and can only
/// shrink it.
///
/// An identity neuron with a pooling successor is left in place: the pool
/// ranks one pre-activation per incoming edge, so contracting the neuron
/// would change which values are ranked. Hidden identity neurons to be
/// removed must be bias-free: run [`absorb_biases`] first if they are not.
pub fn eliminate_identity_neurons(
    arch: &Architecture,
    params: &Parameters,
) -> Result<(Architecture, Parameters)> {
    params.check_binding(arch)?;
    let order = arch.topological_order()?;
    // Elimination never adds edges into pooling neurons, so this set is
    // stable throughout the rewrite.
    let feeds_pool = |v: usize| {
        arch.successors(v)
            .iter()
            .any(|&w| arch.activation(w).is_pool())
    };
    let doomed: Vec<usize> = order
        .iter()
        .rev()
        .copied()
        .filter(|&v| {
            arch.is_hidden(v) && arch.activation(v) == Activation::Identity && !feeds_pool(v)
        })
        .collect();
    for &v in &doomed {
        if params.bias(v) != 0.0 {
            return Err(Error::BiasedIdentityNeuron(arch.id(v).to_string()));
        }
    }
    if doomed.is_empty() {
        return Ok((arch.clone(), params.clone()));
    }

    let mut weights: BTreeMap<(NeuronId, NeuronId), f64> = arch
        .edges()
        .iter()
        .enumerate()
        .map(|(e, &(f, t))| ((arch.id(f).clone(), arch.id(t).clone()), params.weight(e)))
        .collect();
    let mut removed = vec![false; arch.neuron_count()];

    // Reverse topological order: a removed neuron's successors have already
    // been contracted, so bypass edges never point at removed neurons.
    for &v in &doomed {
        let vid = arch.id(v).clone();
        let ants: Vec<NeuronId> = weights
            .keys()
            .filter(|(_, t)| *t == vid)
            .map(|(f, _)| f.clone())
            .collect();
        let sucs: Vec<(NeuronId, f64)> = weights
            .iter()
            .filter(|((f, _), _)| *f == vid)
            .map(|((_, t), w)| (t.clone(), *w))
            .collect();
        for u in &ants {
            let w_uv = weights
                .remove(&(u.clone(), vid.clone()))
                .expect("incoming edge present");
            for (t, w_vt) in &sucs {
                *weights.entry((u.clone(), t.clone())).or_insert(0.0) += w_uv * w_vt;
            }
        }
        for (t, _) in &sucs {
            weights.remove(&(vid.clone(), t.clone()));
        }
        removed[v] = true;
    }

    let mut builder = NetworkBuilder::new();
    if let Some(name) = arch.name() {
        builder = builder.name(name);
    }
    for (v, n) in arch.neurons().iter().enumerate() {
        if !removed[v] {
            builder = builder.neuron(n.id.clone(), n.activation);
        }
    }
    for ((f, t), w) in &weights {
        builder = builder.edge(f.clone(), t.clone(), *w);
    }
    for v in 0..arch.neuron_count() {
        if !removed[v] && !arch.is_input(v) && params.bias(v) != 0.0 {
            builder = builder.bias(arch.id(v).clone(), params.bias(v));
        }
    }
    builder.build()
}

/// Canonical encoding of one pooling neuron: activation plus incoming
/// weights and bias, ready to splice into a [`NetworkBuilder`].
#[derive(Clone, Debug, PartialEq)]
pub struct NeuronFragment {
    pub activation: Activation,
    /// `(antecedent id, edge weight)` pairs.
    pub incoming: Vec<(NeuronId, f64)>,
    pub bias: f64,
}

impl NeuronFragment {
    /// Attaches the fragment to `builder` as a neuron named `id`.
    pub fn attach(&self, mut builder: NetworkBuilder, id: impl Into<NeuronId>) -> NetworkBuilder {
        let id = id.into();
        builder = builder.neuron(id.clone(), self.activation);
        for (ant, w) in &self.incoming {
            builder = builder.edge(ant.clone(), id.clone(), *w);
        }
        if self.bias != 0.0 {
            builder = builder.bias(id, self.bias);
        }
        builder
    }

    /// Evaluates the fragment's neuron on its antecedents' values, in the
    /// order of `incoming`.
    pub fn evaluate(&self, antecedent_values: &[f64]) -> f64 {
        assert_eq!(antecedent_values.len(), self.incoming.len());
        match self.activation {
            Activation::Input => panic!("fragments describe non-input neurons"),
            Activation::Identity | Activation::Relu => {
                let s = self.bias
                    + self
                        .incoming
                        .iter()
                        .zip(antecedent_values)
                        .map(|((_, w), x)| w * x)
                        .sum::<f64>();
                if self.activation == Activation::Relu && s <= 0.0 {
                    0.0
                } else {
                    s
                }
            }
            Activation::KPool(k) => {
                let mut pre: Vec<f64> = self
                    .incoming
                    .iter()
                    .zip(antecedent_values)
                    .map(|((_, w), x)| self.bias + w * x)
                    .collect();
                pre.sort_unstable_by(|a, b| b.total_cmp(a));
                pre[k - 1]
            }
        }
    }
}

/// Classical k-th-order max-pooling over `ant_ids`: a `kpool(k)` neuron
/// with unit weights and zero bias. `k = 1` is plain max-pooling.
pub fn make_max_pool(ant_ids: &[NeuronId], k: usize) -> Result<NeuronFragment> {
    if ant_ids.is_empty() {
        return Err(Error::EmptyKernel);
    }
    if k == 0 || k > ant_ids.len() {
        return Err(Error::KernelOrderOutOfRange {
            k,
            kernel: ant_ids.len(),
        });
    }
    Ok(NeuronFragment {
        activation: Activation::KPool(k),
        incoming: ant_ids.iter().map(|id| (id.clone(), 1.0)).collect(),
        bias: 0.0,
    })
}

/// Classical average-pooling over `ant_ids`: an identity neuron with
/// weights `1/|ant|` and zero bias.
pub fn make_avg_pool(ant_ids: &[NeuronId]) -> Result<NeuronFragment> {
    if ant_ids.is_empty() {
        return Err(Error::EmptyKernel);
    }
    let w = 1.0 / ant_ids.len() as f64;
    Ok(NeuronFragment {
        activation: Activation::Identity,
        incoming: ant_ids.iter().map(|id| (id.clone(), w)).collect(),
        bias: 0.0,
    })
}
