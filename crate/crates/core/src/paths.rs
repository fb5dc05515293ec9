//! Path enumeration, path-lifting and path-activations.
//!
//! This module is the brute-force ground truth of the crate: it materializes
//! the full set of paths ending at output neurons, the lifting vector
//! indexed by those paths, and the {0,1} path-activation matrix, and it
//! reconstructs the forward pass from them. Path counts explode with
//! network size, so every operation takes an explicit budget; the fast
//! routes in [`crate::norms`] are the production path.
//!
//! Canonical path order: by end-neuron id, then by length, then
//! lexicographically on the neuron-id sequence. Lifting vectors produced
//! for the same architecture are therefore comparable entry by entry.

use crate::error::{Error, Result};
use crate::forward;
use crate::graph::{Architecture, NeuronIdx, Parameters};

/// Default enumeration budget.
pub const DEFAULT_PATH_CAP: u64 = 1_000_000;

/// A directed path: a non-empty neuron sequence following edges.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Path {
    neurons: Vec<NeuronIdx>,
}

impl Path {
    /// Builds a path from a sequence of neuron ids, checking that each
    /// consecutive pair is an edge.
    pub fn from_ids(arch: &Architecture, ids: &[&str]) -> Result<Path> {
        assert!(!ids.is_empty(), "a path has at least one neuron");
        let mut neurons = Vec::with_capacity(ids.len());
        for id in ids {
            neurons.push(
                arch.index_of(id)
                    .ok_or_else(|| Error::UnknownNeuron((*id).to_owned()))?,
            );
        }
        for w in neurons.windows(2) {
            if arch.edge_between(w[0], w[1]).is_none() {
                return Err(Error::InvalidPath {
                    from: arch.id(w[0]).to_string(),
                    to: arch.id(w[1]).to_string(),
                });
            }
        }
        Ok(Path { neurons })
    }

    pub(crate) fn from_indices(neurons: Vec<NeuronIdx>) -> Path {
        Path { neurons }
    }

    /// Neuron indices along the path.
    pub fn neurons(&self) -> &[NeuronIdx] {
        &self.neurons
    }

    /// Number of edges (one less than the number of neurons).
    pub fn length(&self) -> usize {
        self.neurons.len() - 1
    }

    pub fn start(&self) -> NeuronIdx {
        self.neurons[0]
    }

    pub fn end(&self) -> NeuronIdx {
        *self.neurons.last().expect("path is non-empty")
    }

    /// Ids along the path, for display and tests.
    pub fn ids<'a>(&self, arch: &'a Architecture) -> Vec<&'a str> {
        self.neurons.iter().map(|&v| arch.id(v).as_str()).collect()
    }
}

fn path_counts_per_neuron(arch: &Architecture) -> Result<Vec<u128>> {
    let order = arch.topological_order()?;
    let mut per_neuron = vec![0u128; arch.neuron_count()];
    for &v in &order {
        let mut c: u128 = 1;
        for &u in arch.antecedents(v) {
            c = c.saturating_add(per_neuron[u]);
        }
        per_neuron[v] = c;
    }
    Ok(per_neuron)
}

/// Number of paths ending at an output neuron, by the recurrence
/// `paths(v) = 1 + sum over antecedents of paths(u)` summed over outputs.
/// Saturates at `u128::MAX`.
pub fn path_count(arch: &Architecture) -> Result<u128> {
    let per_neuron = path_counts_per_neuron(arch)?;
    Ok(arch
        .outputs()
        .iter()
        .fold(0u128, |acc, &v| acc.saturating_add(per_neuron[v])))
}

fn check_budget(arch: &Architecture, cap: u64) -> Result<()> {
    let count = path_count(arch)?;
    if count > cap as u128 {
        return Err(Error::PathBudgetExceeded { count, cap });
    }
    Ok(())
}

/// Every suffix of a reverse walk ending at `end` is itself a path ending
/// at `end`; collect them all.
fn collect_paths_ending_at(arch: &Architecture, end: NeuronIdx, out: &mut Vec<Vec<NeuronIdx>>) {
    let mut chain_rev = vec![end];
    descend(arch, end, &mut chain_rev, out);
}

fn descend(
    arch: &Architecture,
    v: NeuronIdx,
    chain_rev: &mut Vec<NeuronIdx>,
    out: &mut Vec<Vec<NeuronIdx>>,
) {
    out.push(chain_rev.iter().rev().copied().collect());
    for &u in arch.antecedents(v) {
        chain_rev.push(u);
        descend(arch, u, chain_rev, out);
        chain_rev.pop();
    }
}

/// Enumerates all paths ending at an output neuron, in canonical order.
/// Includes the length-0 path `p = v` for every output `v`.
pub fn enumerate_paths(arch: &Architecture, cap: u64) -> Result<Vec<Path>> {
    check_budget(arch, cap)?;
    let mut all = Vec::new();
    for &o in arch.outputs() {
        let mut group: Vec<Vec<NeuronIdx>> = Vec::new();
        collect_paths_ending_at(arch, o, &mut group);
        group.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        all.extend(group.into_iter().map(Path::from_indices));
    }
    Ok(all)
}

/// Enumerates the paths ending at one given neuron (not necessarily an
/// output), in canonical order.
pub fn enumerate_paths_ending_at(
    arch: &Architecture,
    v: NeuronIdx,
    cap: u64,
) -> Result<Vec<Path>> {
    let count = path_counts_per_neuron(arch)?[v];
    if count > cap as u128 {
        return Err(Error::PathBudgetExceeded { count, cap });
    }
    let mut group: Vec<Vec<NeuronIdx>> = Vec::new();
    collect_paths_ending_at(arch, v, &mut group);
    group.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(group.into_iter().map(Path::from_indices).collect())
}

/// The path-lifting: one value per path in canonical order, grouped by
/// end (output) neuron.
#[derive(Clone, Debug)]
pub struct PathLifting {
    paths: Vec<Path>,
    values: Vec<f64>,
    /// `(output neuron, range of path indices ending there)`, ascending.
    output_ranges: Vec<(NeuronIdx, std::ops::Range<usize>)>,
}

impl PathLifting {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates `(output neuron, lifting slice for paths ending there)`.
    pub fn per_output(&self) -> impl Iterator<Item = (NeuronIdx, &[f64])> {
        self.output_ranges
            .iter()
            .map(move |(v, r)| (*v, &self.values[r.clone()]))
    }
}

/// Lifting value of one path: the product of its edge weights, prefixed by
/// the start neuron's bias when the path does not start at an input. An
/// empty product is 1.
fn lifting_value(arch: &Architecture, params: &Parameters, p: &Path) -> f64 {
    let start = p.start();
    let mut acc = if arch.is_input(start) {
        1.0
    } else {
        params.bias(start)
    };
    for w in p.neurons().windows(2) {
        let e = arch.edge_between(w[0], w[1]).expect("path follows edges");
        acc *= params.weight(e);
    }
    acc
}

/// Computes the path-lifting vector of `params`.
pub fn path_lifting(arch: &Architecture, params: &Parameters, cap: u64) -> Result<PathLifting> {
    params.check_binding(arch)?;
    let paths = enumerate_paths(arch, cap)?;
    let values: Vec<f64> = paths.iter().map(|p| lifting_value(arch, params, p)).collect();
    let mut output_ranges = Vec::new();
    let mut i = 0;
    while i < paths.len() {
        let end = paths[i].end();
        let from = i;
        while i < paths.len() && paths[i].end() == end {
            i += 1;
        }
        output_ranges.push((end, from..i));
    }
    Ok(PathLifting {
        paths,
        values,
        output_ranges,
    })
}

/// The {0,1} path-activation matrix for one `(params, x)` pair.
///
/// Rows are indexed like [`PathLifting`]; columns by the input neurons in
/// ascending id order followed by one bias column. Each row has at most one
/// potentially-nonzero column, determined by the path's start neuron: its
/// input column when the path starts at an input, the bias column otherwise.
#[derive(Clone, Debug)]
pub struct PathActivationMatrix {
    input_columns: Vec<NeuronIdx>,
    activations: Vec<bool>,
    start_columns: Vec<usize>,
}

impl PathActivationMatrix {
    /// Number of rows (paths).
    pub fn n_rows(&self) -> usize {
        self.activations.len()
    }

    /// Number of columns: `d_in + 1` (inputs plus the bias column).
    pub fn n_columns(&self) -> usize {
        self.input_columns.len() + 1
    }

    /// Index of the bias column.
    pub fn bias_column(&self) -> usize {
        self.input_columns.len()
    }

    /// Input neuron behind each non-bias column.
    pub fn input_columns(&self) -> &[NeuronIdx] {
        &self.input_columns
    }

    /// Activation of path `row` (the product of its edge activations and
    /// the start neuron's activation).
    pub fn path_activation(&self, row: usize) -> bool {
        self.activations[row]
    }

    /// Column holding the (only possible) nonzero entry of `row`.
    pub fn start_column(&self, row: usize) -> usize {
        self.start_columns[row]
    }

    /// Matrix entry as 0/1.
    pub fn entry(&self, row: usize, col: usize) -> u8 {
        u8::from(self.start_columns[row] == col && self.activations[row])
    }

    /// Dense copy, for small graphs and tests.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        (0..self.n_rows())
            .map(|r| (0..self.n_columns()).map(|c| self.entry(r, c)).collect())
            .collect()
    }
}

/// Computes the path-activation matrix of `(params, x)`.
pub fn path_activations(
    arch: &Architecture,
    params: &Parameters,
    x: &[f64],
    cap: u64,
) -> Result<PathActivationMatrix> {
    let paths = enumerate_paths(arch, cap)?;
    let trace = forward::trace(arch, params, x)?;
    let activations: Vec<bool> = paths
        .iter()
        .map(|p| path_activation(arch, &trace, p))
        .collect();
    let start_columns: Vec<usize> = paths
        .iter()
        .map(|p| {
            arch.input_position(p.start())
                .unwrap_or_else(|| arch.d_in())
        })
        .collect();
    Ok(PathActivationMatrix {
        input_columns: arch.inputs().to_vec(),
        activations,
        start_columns,
    })
}

fn path_activation(arch: &Architecture, trace: &forward::EvaluationTrace, p: &Path) -> bool {
    if !trace.neuron_activations[p.start()] {
        return false;
    }
    p.neurons().windows(2).all(|w| {
        let e = arch.edge_between(w[0], w[1]).expect("path follows edges");
        trace.edge_activations[e]
    })
}

/// Reconstructs the forward pass from the lifting and the activations:
/// output `v` is the sum over paths ending at `v` of
/// `lifting * activation * x[start]` (with `x[start] = 1` for paths that do
/// not start at an input). Agrees with [`forward::realize`].
pub fn forward_via_lifting(
    arch: &Architecture,
    params: &Parameters,
    x: &[f64],
    cap: u64,
) -> Result<Vec<f64>> {
    let lifting = path_lifting(arch, params, cap)?;
    let trace = forward::trace(arch, params, x)?;
    let mut out = Vec::with_capacity(arch.d_out());
    for (_, range) in &lifting.output_ranges {
        let mut acc = 0.0;
        for i in range.clone() {
            let p = &lifting.paths[i];
            if !path_activation(arch, &trace, p) {
                continue;
            }
            let coord = match arch.input_position(p.start()) {
                Some(pos) => x[pos],
                None => 1.0,
            };
            acc += lifting.values[i] * coord;
        }
        out.push(acc);
    }
    Ok(out)
}
