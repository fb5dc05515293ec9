//! DAG network data model and structural queries.
//!
//! A network is a directed acyclic graph of neurons. Input neurons are the
//! neurons without antecedents, output neurons the ones without successors.
//! Hidden neurons carry one of the activations `relu`, `identity` or
//! `kpool(k)` (the k-th order statistic of the incoming pre-activations);
//! output neurons are always `identity`.
//!
//! All orderings in this crate derive from the byte-wise lexicographic order
//! on neuron ids: antecedent lists, input/output vectors, summation order and
//! k-max-pool tie-breaking all follow it, which makes every computation
//! deterministic.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of a neuron.
///
/// Ids order byte-wise (the `Ord` of the underlying string); this order is
/// the one used for k-max-pool tie-breaking and for fixing summation order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NeuronId(String);

impl NeuronId {
    pub fn new(id: impl Into<String>) -> Self {
        NeuronId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NeuronId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NeuronId {
    fn from(s: &str) -> Self {
        NeuronId(s.to_owned())
    }
}

impl From<String> for NeuronId {
    fn from(s: String) -> Self {
        NeuronId(s)
    }
}

/// Activation attribute of a neuron.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Activation {
    /// Input neuron: reads one coordinate of the input vector.
    Input,
    /// `relu(x) = max(x, 0)` of the bias-shifted weighted sum.
    Relu,
    /// Identity of the bias-shifted weighted sum.
    Identity,
    /// k-th largest of the per-edge pre-activations `b_v + u * w(u,v)`.
    KPool(usize),
}

impl Activation {
    pub fn is_pool(self) -> bool {
        matches!(self, Activation::KPool(_))
    }
}

/// A neuron record: id plus activation attribute.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Neuron {
    pub id: NeuronId,
    pub activation: Activation,
}

/// Index of a neuron in the id-sorted neuron list of an [`Architecture`].
pub type NeuronIdx = usize;
/// Index of an edge in the sorted edge list of an [`Architecture`].
pub type EdgeIdx = usize;

/// Immutable DAG network architecture.
///
/// Neurons are stored sorted by id, so neuron indices compare the same way
/// ids do. Edges are stored sorted by `(from, to)`. The structure is frozen
/// after construction; all queries are pure.
#[derive(Clone, Debug)]
pub struct Architecture {
    name: Option<String>,
    neurons: Vec<Neuron>,
    edges: Vec<(NeuronIdx, NeuronIdx)>,
    antecedents: Vec<Vec<NeuronIdx>>,
    successors: Vec<Vec<NeuronIdx>>,
    incoming_edges: Vec<Vec<EdgeIdx>>,
    outgoing_edges: Vec<Vec<EdgeIdx>>,
    edge_lookup: HashMap<(NeuronIdx, NeuronIdx), EdgeIdx>,
    inputs: Vec<NeuronIdx>,
    outputs: Vec<NeuronIdx>,
}

impl Architecture {
    /// Builds an architecture from neuron records and edges.
    ///
    /// Rejects duplicate neuron ids, unknown edge endpoints and parallel
    /// edges (the edge relation is a set of ordered pairs). Semantic
    /// invariants such as acyclicity are checked by [`validate`], not here,
    /// so that malformed graphs can still be inspected and reported on.
    pub fn new(
        mut neurons: Vec<Neuron>,
        edges: Vec<(NeuronId, NeuronId)>,
        name: Option<String>,
    ) -> Result<Self> {
        neurons.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in neurons.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::DuplicateNeuron(pair[0].id.to_string()));
            }
        }
        let index: HashMap<&str, NeuronIdx> = neurons
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.as_str(), i))
            .collect();

        let mut idx_edges = Vec::with_capacity(edges.len());
        for (from, to) in &edges {
            let f = *index
                .get(from.as_str())
                .ok_or_else(|| Error::UnknownEndpoint(from.to_string()))?;
            let t = *index
                .get(to.as_str())
                .ok_or_else(|| Error::UnknownEndpoint(to.to_string()))?;
            idx_edges.push((f, t));
        }
        idx_edges.sort_unstable();
        for pair in idx_edges.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::ParallelEdge {
                    from: neurons[pair[0].0].id.to_string(),
                    to: neurons[pair[0].1].id.to_string(),
                });
            }
        }

        let n = neurons.len();
        let mut antecedents = vec![Vec::new(); n];
        let mut successors = vec![Vec::new(); n];
        let mut incoming_edges = vec![Vec::new(); n];
        let mut outgoing_edges = vec![Vec::new(); n];
        let mut edge_lookup = HashMap::with_capacity(idx_edges.len());
        for (e, &(f, t)) in idx_edges.iter().enumerate() {
            antecedents[t].push(f);
            successors[f].push(t);
            incoming_edges[t].push(e);
            outgoing_edges[f].push(e);
            edge_lookup.insert((f, t), e);
        }
        // Edge list is sorted by (from, to), so successor lists are already
        // ascending; antecedent lists need an explicit sort.
        for v in 0..n {
            let mut order: Vec<usize> = (0..antecedents[v].len()).collect();
            order.sort_by_key(|&i| antecedents[v][i]);
            antecedents[v] = order.iter().map(|&i| antecedents[v][i]).collect();
            incoming_edges[v] = order.iter().map(|&i| incoming_edges[v][i]).collect();
        }

        let inputs = (0..n).filter(|&v| antecedents[v].is_empty()).collect();
        let outputs = (0..n).filter(|&v| successors[v].is_empty()).collect();

        Ok(Architecture {
            name,
            neurons,
            edges: idx_edges,
            antecedents,
            successors,
            incoming_edges,
            outgoing_edges,
            edge_lookup,
            inputs,
            outputs,
        })
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn neuron_count(&self) -> usize {
        self.neurons.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neurons(&self) -> &[Neuron] {
        &self.neurons
    }

    pub fn neuron(&self, v: NeuronIdx) -> &Neuron {
        &self.neurons[v]
    }

    pub fn id(&self, v: NeuronIdx) -> &NeuronId {
        &self.neurons[v].id
    }

    pub fn activation(&self, v: NeuronIdx) -> Activation {
        self.neurons[v].activation
    }

    /// Index of the neuron with the given id, if any.
    pub fn index_of(&self, id: &str) -> Option<NeuronIdx> {
        self.neurons
            .binary_search_by(|n| n.id.as_str().cmp(id))
            .ok()
    }

    /// Edges as index pairs, sorted by `(from, to)`.
    pub fn edges(&self) -> &[(NeuronIdx, NeuronIdx)] {
        &self.edges
    }

    pub fn edge_endpoints(&self, e: EdgeIdx) -> (NeuronIdx, NeuronIdx) {
        self.edges[e]
    }

    pub fn edge_between(&self, from: NeuronIdx, to: NeuronIdx) -> Option<EdgeIdx> {
        self.edge_lookup.get(&(from, to)).copied()
    }

    /// Antecedents of `v` in ascending id order.
    pub fn antecedents(&self, v: NeuronIdx) -> &[NeuronIdx] {
        &self.antecedents[v]
    }

    /// Successors of `v` in ascending id order.
    pub fn successors(&self, v: NeuronIdx) -> &[NeuronIdx] {
        &self.successors[v]
    }

    /// Incoming `(antecedent, edge)` pairs of `v` in ascending antecedent order.
    pub fn incoming(&self, v: NeuronIdx) -> impl Iterator<Item = (NeuronIdx, EdgeIdx)> + '_ {
        self.antecedents[v]
            .iter()
            .copied()
            .zip(self.incoming_edges[v].iter().copied())
    }

    /// Outgoing edge indices of `v`.
    pub fn outgoing_edges(&self, v: NeuronIdx) -> &[EdgeIdx] {
        &self.outgoing_edges[v]
    }

    /// Input neurons (no antecedents) in ascending id order.
    pub fn inputs(&self) -> &[NeuronIdx] {
        &self.inputs
    }

    /// Output neurons (no successors) in ascending id order.
    pub fn outputs(&self) -> &[NeuronIdx] {
        &self.outputs
    }

    pub fn d_in(&self) -> usize {
        self.inputs.len()
    }

    pub fn d_out(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_input(&self, v: NeuronIdx) -> bool {
        self.antecedents[v].is_empty()
    }

    pub fn is_output(&self, v: NeuronIdx) -> bool {
        self.successors[v].is_empty()
    }

    pub fn is_hidden(&self, v: NeuronIdx) -> bool {
        !self.is_input(v) && !self.is_output(v)
    }

    /// Position of input neuron `v` in the ascending input list.
    pub fn input_position(&self, v: NeuronIdx) -> Option<usize> {
        self.inputs.binary_search(&v).ok()
    }

    /// Returns a copy with activations rewritten by `f`. The DAG is unchanged.
    pub fn with_activations(&self, f: impl Fn(NeuronIdx, Activation) -> Activation) -> Self {
        let mut out = self.clone();
        for (v, neuron) in out.neurons.iter_mut().enumerate() {
            neuron.activation = f(v, neuron.activation);
        }
        out
    }

    /// Topological order of the neurons, ties broken by ascending id.
    ///
    /// The result is a permutation of all neuron indices such that for every
    /// edge `u -> v`, `u` precedes `v`. Deterministic: repeated calls return
    /// the identical list.
    pub fn topological_order(&self) -> Result<Vec<NeuronIdx>> {
        let n = self.neuron_count();
        let mut in_degree: Vec<usize> = (0..n).map(|v| self.antecedents[v].len()).collect();
        let mut ready: BinaryHeap<Reverse<NeuronIdx>> = (0..n)
            .filter(|&v| in_degree[v] == 0)
            .map(Reverse)
            .collect();
        let mut order = Vec::with_capacity(n);
        while let Some(Reverse(v)) = ready.pop() {
            order.push(v);
            for &s in &self.successors[v] {
                in_degree[s] -= 1;
                if in_degree[s] == 0 {
                    ready.push(Reverse(s));
                }
            }
        }
        if order.len() == n {
            Ok(order)
        } else {
            Err(Error::CyclicGraph)
        }
    }

    /// Topological order as neuron ids.
    pub fn topological_ids(&self) -> Result<Vec<NeuronId>> {
        Ok(self
            .topological_order()?
            .iter()
            .map(|&v| self.neurons[v].id.clone())
            .collect())
    }

    /// Longest path length (edge count) from any input to each neuron.
    pub fn depths_from_input(&self) -> Result<Vec<usize>> {
        let order = self.topological_order()?;
        let mut depth = vec![0usize; self.neuron_count()];
        for &v in &order {
            for &u in &self.antecedents[v] {
                depth[v] = depth[v].max(depth[u] + 1);
            }
        }
        Ok(depth)
    }

    /// Depth of the network: the maximal length of a path from an input to
    /// an output.
    pub fn depth(&self) -> Result<usize> {
        let depths = self.depths_from_input()?;
        Ok(self
            .outputs
            .iter()
            .map(|&v| depths[v])
            .max()
            .unwrap_or(0))
    }

    /// Pooling statistics of the network; see [`PoolStats`].
    pub fn pool_stats(&self) -> Result<PoolStats> {
        let depths = self.depths_from_input()?;
        let mut orders: Vec<usize> = Vec::new();
        let mut max_kernel = 0usize;
        let mut pool_depths: Vec<usize> = Vec::new();
        for v in 0..self.neuron_count() {
            if let Activation::KPool(k) = self.neurons[v].activation {
                if !orders.contains(&k) {
                    orders.push(k);
                }
                max_kernel = max_kernel.max(self.antecedents[v].len());
                if !pool_depths.contains(&depths[v]) {
                    pool_depths.push(depths[v]);
                }
            }
        }
        let distinct_orders = orders.len();
        // Convention: a pool-free network has kernel size 1.
        let max_kernel = if distinct_orders == 0 { 1 } else { max_kernel };
        let pools_layered = self.pools_layered(&depths, &pool_depths);
        Ok(PoolStats {
            distinct_orders,
            max_kernel,
            pool_layer_count: pool_depths.len(),
            pools_layered,
        })
    }

    /// Whether the pooling neurons form whole layers with nothing skipping
    /// over them: at each depth that contains a pooling neuron, every hidden
    /// neuron is a pooling neuron, and no edge jumps from before that depth
    /// to after it.
    fn pools_layered(&self, depths: &[usize], pool_depths: &[usize]) -> bool {
        for &d in pool_depths {
            for v in 0..self.neuron_count() {
                if depths[v] == d && self.is_hidden(v) && !self.neurons[v].activation.is_pool() {
                    return false;
                }
            }
            for &(u, v) in &self.edges {
                if depths[u] < d && depths[v] > d {
                    return false;
                }
            }
        }
        true
    }

    /// Largest subgraph with `v` as single output: keeps exactly the neurons
    /// with a directed path to `v` (including `v` itself) and the edges
    /// among them. Activations are preserved, so the result is primarily
    /// meant for path and lifting computations, where the kept neuron keeps
    /// behaving as in the original network.
    pub fn subgraph_to(&self, id: &str) -> Result<Architecture> {
        let target = self
            .index_of(id)
            .ok_or_else(|| Error::UnknownNeuron(id.to_owned()))?;
        let mut keep = vec![false; self.neuron_count()];
        keep[target] = true;
        let mut stack = vec![target];
        while let Some(v) = stack.pop() {
            for &u in &self.antecedents[v] {
                if !keep[u] {
                    keep[u] = true;
                    stack.push(u);
                }
            }
        }
        let neurons: Vec<Neuron> = (0..self.neuron_count())
            .filter(|&v| keep[v])
            .map(|v| self.neurons[v].clone())
            .collect();
        let edges: Vec<(NeuronId, NeuronId)> = self
            .edges
            .iter()
            .filter(|&&(f, t)| keep[f] && keep[t])
            .map(|&(f, t)| (self.neurons[f].id.clone(), self.neurons[t].id.clone()))
            .collect();
        Architecture::new(neurons, edges, self.name.clone())
    }
}

/// Pooling statistics used by the generalization-bound constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PoolStats {
    /// Number of distinct pooling orders `k` present in the network (`P`).
    pub distinct_orders: usize,
    /// Maximal kernel size over pooling neurons (`K`); 1 when there are none.
    pub max_kernel: usize,
    /// Number of distinct longest-path depths containing a pooling neuron (`M`).
    pub pool_layer_count: usize,
    /// Whether pooling neurons form whole layers with no edge skipping over
    /// them; precondition for the sharpened bound constant.
    pub pools_layered: bool,
}

/// Edge weights and per-neuron biases bound to one [`Architecture`].
///
/// Weights align with the architecture's edge list, biases with its neuron
/// list; input neurons have no bias and their slot is pinned to zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameters {
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl Parameters {
    /// All-zero parameters for `arch`.
    pub fn zeros(arch: &Architecture) -> Self {
        Parameters {
            weights: vec![0.0; arch.edge_count()],
            biases: vec![0.0; arch.neuron_count()],
        }
    }

    /// Builds parameters from vectors aligned with the architecture's edge
    /// and neuron lists. Input-neuron bias slots must be zero.
    pub fn from_values(arch: &Architecture, weights: Vec<f64>, biases: Vec<f64>) -> Result<Self> {
        let params = Parameters { weights, biases };
        params.check_binding(arch)?;
        for &v in arch.inputs() {
            if params.biases[v] != 0.0 {
                return Err(Error::ParameterBinding(format!(
                    "input neuron `{}` cannot carry a bias",
                    arch.id(v)
                )));
            }
        }
        Ok(params)
    }

    /// Builds parameters from id-keyed maps.
    ///
    /// Every edge of `arch` must have a weight and every weight key must be
    /// an edge. Bias keys must name non-input neurons; missing biases
    /// default to zero.
    pub fn from_maps(
        arch: &Architecture,
        weights: &HashMap<(String, String), f64>,
        biases: &HashMap<String, f64>,
    ) -> Result<Self> {
        if weights.len() != arch.edge_count() {
            return Err(Error::ParameterBinding(format!(
                "expected {} edge weights, got {}",
                arch.edge_count(),
                weights.len()
            )));
        }
        let mut params = Parameters::zeros(arch);
        for ((from, to), w) in weights {
            let f = arch
                .index_of(from)
                .ok_or_else(|| Error::UnknownEndpoint(from.clone()))?;
            let t = arch
                .index_of(to)
                .ok_or_else(|| Error::UnknownEndpoint(to.clone()))?;
            let e = arch.edge_between(f, t).ok_or_else(|| {
                Error::ParameterBinding(format!("`{from}` -> `{to}` is not an edge"))
            })?;
            params.weights[e] = *w;
        }
        for (id, b) in biases {
            let v = arch
                .index_of(id)
                .ok_or_else(|| Error::UnknownNeuron(id.clone()))?;
            if arch.is_input(v) {
                return Err(Error::ParameterBinding(format!(
                    "input neuron `{id}` cannot carry a bias"
                )));
            }
            params.biases[v] = *b;
        }
        Ok(params)
    }

    /// Checks that these parameters are shaped for `arch`.
    pub fn check_binding(&self, arch: &Architecture) -> Result<()> {
        if self.weights.len() != arch.edge_count() || self.biases.len() != arch.neuron_count() {
            return Err(Error::ParameterBinding(format!(
                "have {} weights / {} biases, architecture has {} edges / {} neurons",
                self.weights.len(),
                self.biases.len(),
                arch.edge_count(),
                arch.neuron_count()
            )));
        }
        Ok(())
    }

    pub fn weight(&self, e: EdgeIdx) -> f64 {
        self.weights[e]
    }

    pub fn bias(&self, v: NeuronIdx) -> f64 {
        self.biases[v]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub(crate) fn set_weight(&mut self, e: EdgeIdx, w: f64) {
        self.weights[e] = w;
    }

    pub(crate) fn set_bias(&mut self, v: NeuronIdx, b: f64) {
        self.biases[v] = b;
    }


    /// Restricts parameters bound to `original` onto a subgraph of it
    /// (matched by neuron ids), e.g. one produced by
    /// [`Architecture::subgraph_to`].
    pub fn restricted_to(&self, original: &Architecture, sub: &Architecture) -> Result<Parameters> {
        self.check_binding(original)?;
        let mut out = Parameters::zeros(sub);
        for (e, &(f, t)) in sub.edges().iter().enumerate() {
            let of = original
                .index_of(sub.id(f).as_str())
                .ok_or_else(|| Error::UnknownNeuron(sub.id(f).to_string()))?;
            let ot = original
                .index_of(sub.id(t).as_str())
                .ok_or_else(|| Error::UnknownNeuron(sub.id(t).to_string()))?;
            let oe = original.edge_between(of, ot).ok_or_else(|| {
                Error::ParameterBinding(format!(
                    "`{}` -> `{}` is not an edge of the original network",
                    sub.id(f),
                    sub.id(t)
                ))
            })?;
            out.weights[e] = self.weights[oe];
        }
        for v in 0..sub.neuron_count() {
            if !sub.is_input(v) {
                let ov = original
                    .index_of(sub.id(v).as_str())
                    .ok_or_else(|| Error::UnknownNeuron(sub.id(v).to_string()))?;
                out.biases[v] = self.biases[ov];
            }
        }
        Ok(out)
    }

    /// Applies `f` to every weight and every (non-input) bias.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Parameters {
            weights: self.weights.iter().map(|&w| f(w)).collect(),
            biases: self.biases.iter().map(|&b| f(b)).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.weights.iter().chain(self.biases.iter()).all(|x| x.is_finite())
    }
}

/// A single broken invariant found by [`validate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Stable identifier of the violated rule.
    pub rule: &'static str,
    /// Neuron or edge the violation is attached to.
    pub subject: String,
    pub message: String,
}

/// Outcome of [`validate`]: `ok` holds exactly when `violations` is empty.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        ValidationReport {
            ok: violations.is_empty(),
            violations,
        }
    }
}

/// Checks every architecture (and optionally parameter) invariant and
/// reports the violations as data. Violations are findings, not failures.
pub fn validate(arch: &Architecture, params: Option<&Parameters>) -> ValidationReport {
    let mut violations = Vec::new();

    if arch.topological_order().is_err() {
        violations.push(Violation {
            rule: "acyclic",
            subject: arch.name().unwrap_or("<network>").to_owned(),
            message: "edge relation contains a cycle".to_owned(),
        });
    }

    for v in 0..arch.neuron_count() {
        let neuron = arch.neuron(v);
        let declared_input = neuron.activation == Activation::Input;
        let structural_input = arch.is_input(v);
        if declared_input && !structural_input {
            violations.push(Violation {
                rule: "input-antecedents",
                subject: neuron.id.to_string(),
                message: "input neuron has antecedents".to_owned(),
            });
        }
        if structural_input && !declared_input {
            violations.push(Violation {
                rule: "undeclared-input",
                subject: neuron.id.to_string(),
                message: "neuron without antecedents must be declared `input`".to_owned(),
            });
        }
        if arch.is_output(v) && !declared_input && neuron.activation != Activation::Identity {
            violations.push(Violation {
                rule: "output-activation",
                subject: neuron.id.to_string(),
                message: "output neuron (no successors) must carry activation `identity`"
                    .to_owned(),
            });
        }
        if structural_input && arch.is_output(v) {
            violations.push(Violation {
                rule: "inputs-outputs-disjoint",
                subject: neuron.id.to_string(),
                message: "neuron is both an input and an output".to_owned(),
            });
        }
        if let Activation::KPool(k) = neuron.activation {
            let kernel = arch.antecedents(v).len();
            if k == 0 || k > kernel {
                violations.push(Violation {
                    rule: "pool-kernel",
                    subject: neuron.id.to_string(),
                    message: format!("k = {k} must satisfy 1 <= k <= kernel size {kernel}"),
                });
            }
        }
    }

    if let Some(params) = params {
        if let Err(err) = params.check_binding(arch) {
            violations.push(Violation {
                rule: "parameter-binding",
                subject: arch.name().unwrap_or("<network>").to_owned(),
                message: err.to_string(),
            });
        } else {
            for (e, &w) in params.weights().iter().enumerate() {
                if !w.is_finite() {
                    let (f, t) = arch.edge_endpoints(e);
                    violations.push(Violation {
                        rule: "finite-values",
                        subject: format!("{} -> {}", arch.id(f), arch.id(t)),
                        message: format!("weight {w} is not finite"),
                    });
                }
            }
            for v in 0..arch.neuron_count() {
                let b = params.bias(v);
                if !b.is_finite() {
                    violations.push(Violation {
                        rule: "finite-values",
                        subject: arch.id(v).to_string(),
                        message: format!("bias {b} is not finite"),
                    });
                }
            }
        }
    }

    ValidationReport::from_violations(violations)
}

/// Incremental constructor for an architecture plus bound parameters.
#[derive(Clone, Debug, Default)]
pub struct NetworkBuilder {
    name: Option<String>,
    neurons: Vec<Neuron>,
    edges: Vec<(NeuronId, NeuronId, f64)>,
    biases: Vec<(NeuronId, f64)>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn neuron(mut self, id: impl Into<NeuronId>, activation: Activation) -> Self {
        self.neurons.push(Neuron {
            id: id.into(),
            activation,
        });
        self
    }

    pub fn input(self, id: impl Into<NeuronId>) -> Self {
        self.neuron(id, Activation::Input)
    }

    pub fn relu(self, id: impl Into<NeuronId>) -> Self {
        self.neuron(id, Activation::Relu)
    }

    pub fn identity(self, id: impl Into<NeuronId>) -> Self {
        self.neuron(id, Activation::Identity)
    }

    pub fn kpool(self, id: impl Into<NeuronId>, k: usize) -> Self {
        self.neuron(id, Activation::KPool(k))
    }

    pub fn edge(mut self, from: impl Into<NeuronId>, to: impl Into<NeuronId>, weight: f64) -> Self {
        self.edges.push((from.into(), to.into(), weight));
        self
    }

    pub fn bias(mut self, id: impl Into<NeuronId>, b: f64) -> Self {
        self.biases.push((id.into(), b));
        self
    }

    /// Builds the architecture and its parameters. Unset weights do not
    /// exist (every edge carries its declared weight); unset biases are zero.
    pub fn build(self) -> Result<(Architecture, Parameters)> {
        let edge_ids: Vec<(NeuronId, NeuronId)> = self
            .edges
            .iter()
            .map(|(f, t, _)| (f.clone(), t.clone()))
            .collect();
        let arch = Architecture::new(self.neurons, edge_ids, self.name)?;
        let mut params = Parameters::zeros(&arch);
        for (from, to, w) in &self.edges {
            let f = arch.index_of(from.as_str()).expect("edge endpoint exists");
            let t = arch.index_of(to.as_str()).expect("edge endpoint exists");
            let e = arch.edge_between(f, t).expect("edge exists");
            params.set_weight(e, *w);
        }
        for (id, b) in &self.biases {
            let v = arch
                .index_of(id.as_str())
                .ok_or_else(|| Error::UnknownNeuron(id.to_string()))?;
            if arch.is_input(v) {
                return Err(Error::ParameterBinding(format!(
                    "input neuron `{id}` cannot carry a bias"
                )));
            }
            params.set_bias(v, *b);
        }
        Ok((arch, params))
    }
}
