//! Exact forward evaluation of a parameterized network.
//!
//! A neuron with activation `relu` or `identity` computes
//! `rho(b_v + sum_u u * w(u,v))` over its antecedents in ascending id order.
//! A `kpool(k)` neuron computes the k-th largest of the per-edge
//! pre-activations `b_v + u * w(u,v)`. Besides plain evaluation, [`trace`]
//! records the edge and neuron activation indicators that drive the
//! path-activation matrix.

use crate::error::{Error, Result};
use crate::graph::{Activation, Architecture, NeuronIdx, Parameters};
use crate::runtime;

/// Per-neuron values plus edge/neuron activation indicators for one input.
#[derive(Clone, Debug)]
pub struct EvaluationTrace {
    /// Value of each neuron, indexed like the architecture's neuron list.
    pub values: Vec<f64>,
    /// Activation of each edge, indexed like the architecture's edge list.
    /// All incoming edges of an identity neuron are active; incoming edges
    /// of a ReLU neuron are active iff the neuron value is strictly
    /// positive; exactly one incoming edge of a pooling neuron is active:
    /// the one from the smallest-id antecedent whose pre-activation attains
    /// the pooled value.
    pub edge_activations: Vec<bool>,
    /// Activation of each neuron: always active except ReLU neurons, which
    /// are active iff their value is strictly positive.
    pub neuron_activations: Vec<bool>,
}

impl EvaluationTrace {
    /// Value of the neuron with the given id.
    pub fn value_of(&self, arch: &Architecture, id: &str) -> Option<f64> {
        arch.index_of(id).map(|v| self.values[v])
    }

    /// Output values in ascending output-neuron id order.
    pub fn outputs(&self, arch: &Architecture) -> Vec<f64> {
        arch.outputs().iter().map(|&v| self.values[v]).collect()
    }
}

fn check_input(arch: &Architecture, x: &[f64]) -> Result<()> {
    if x.len() != arch.d_in() {
        return Err(Error::DimensionMismatch {
            expected: arch.d_in(),
            got: x.len(),
        });
    }
    Ok(())
}

/// k-th largest entry of `buf` (1-based k). Sorts descending; ties keep
/// multiset semantics, so e.g. the 2nd largest of (5, 1, 5) is 5.
fn kth_largest(buf: &mut [f64], k: usize) -> f64 {
    buf.sort_unstable_by(|a, b| b.total_cmp(a));
    buf[k - 1]
}

fn eval_values(
    arch: &Architecture,
    params: &Parameters,
    x: &[f64],
    order: &[NeuronIdx],
    scratch: &mut Vec<f64>,
) -> Vec<f64> {
    let mut values = vec![0.0; arch.neuron_count()];
    for (pos, &v) in arch.inputs().iter().enumerate() {
        values[v] = x[pos];
    }
    for &v in order {
        match arch.activation(v) {
            Activation::Input => {}
            Activation::Relu | Activation::Identity => {
                let mut s = params.bias(v);
                for (u, e) in arch.incoming(v) {
                    s += values[u] * params.weight(e);
                }
                values[v] = if arch.activation(v) == Activation::Relu && s <= 0.0 {
                    0.0
                } else {
                    s
                };
            }
            Activation::KPool(k) => {
                scratch.clear();
                let b = params.bias(v);
                for (u, e) in arch.incoming(v) {
                    scratch.push(b + values[u] * params.weight(e));
                }
                values[v] = kth_largest(scratch, k);
            }
        }
    }
    values
}

/// Evaluates the network on one input vector; outputs are ordered by
/// ascending output-neuron id.
pub fn realize(arch: &Architecture, params: &Parameters, x: &[f64]) -> Result<Vec<f64>> {
    params.check_binding(arch)?;
    check_input(arch, x)?;
    let order = arch.topological_order()?;
    let mut scratch = Vec::new();
    let values = eval_values(arch, params, x, &order, &mut scratch);
    Ok(arch.outputs().iter().map(|&v| values[v]).collect())
}

/// Evaluates the network and records neuron values together with the edge
/// and neuron activation indicators.
pub fn trace(arch: &Architecture, params: &Parameters, x: &[f64]) -> Result<EvaluationTrace> {
    params.check_binding(arch)?;
    check_input(arch, x)?;
    let order = arch.topological_order()?;

    let mut values = vec![0.0; arch.neuron_count()];
    let mut edge_activations = vec![false; arch.edge_count()];
    let mut neuron_activations = vec![true; arch.neuron_count()];
    let mut pre = Vec::new();
    let mut sorted = Vec::new();

    for (pos, &v) in arch.inputs().iter().enumerate() {
        values[v] = x[pos];
    }
    for &v in &order {
        match arch.activation(v) {
            Activation::Input => {}
            Activation::Identity => {
                let mut s = params.bias(v);
                for (u, e) in arch.incoming(v) {
                    s += values[u] * params.weight(e);
                    edge_activations[e] = true;
                }
                values[v] = s;
            }
            Activation::Relu => {
                let mut s = params.bias(v);
                for (u, e) in arch.incoming(v) {
                    s += values[u] * params.weight(e);
                }
                let active = s > 0.0;
                values[v] = if active { s } else { 0.0 };
                neuron_activations[v] = active;
                for (_, e) in arch.incoming(v) {
                    edge_activations[e] = active;
                }
            }
            Activation::KPool(k) => {
                pre.clear();
                let b = params.bias(v);
                for (u, e) in arch.incoming(v) {
                    pre.push((b + values[u] * params.weight(e), e));
                }
                sorted.clear();
                sorted.extend(pre.iter().map(|&(p, _)| p));
                let pooled = kth_largest(&mut sorted, k);
                values[v] = pooled;
                // Antecedents are scanned in ascending id order, so the
                // first pre-activation equal to the pooled value wins.
                let winner = pre
                    .iter()
                    .find(|&&(p, _)| p == pooled)
                    .map(|&(_, e)| e)
                    .expect("pooled value is one of the pre-activations");
                edge_activations[winner] = true;
            }
        }
    }

    Ok(EvaluationTrace {
        values,
        edge_activations,
        neuron_activations,
    })
}

/// Evaluates the network on every row of `rows`; row order is preserved and
/// results are bit-identical to a serial evaluation regardless of thread
/// count (rows are independent).
pub fn batch_realize(
    arch: &Architecture,
    params: &Parameters,
    rows: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    params.check_binding(arch)?;
    for row in rows {
        check_input(arch, row)?;
    }
    let order = arch.topological_order()?;
    let threads = runtime::thread_cap().max(1).min(rows.len().max(1));
    if threads <= 1 || rows.len() < 32 {
        let mut scratch = Vec::new();
        return Ok(rows
            .iter()
            .map(|row| {
                let values = eval_values(arch, params, row, &order, &mut scratch);
                arch.outputs().iter().map(|&v| values[v]).collect()
            })
            .collect());
    }

    let mut out: Vec<Vec<f64>> = vec![Vec::new(); rows.len()];
    let chunk = rows.len().div_ceil(threads);
    std::thread::scope(|scope| {
        for (row_chunk, out_chunk) in rows.chunks(chunk).zip(out.chunks_mut(chunk)) {
            let order = &order;
            scope.spawn(move || {
                let mut scratch = Vec::new();
                for (row, slot) in row_chunk.iter().zip(out_chunk.iter_mut()) {
                    let values = eval_values(arch, params, row, order, &mut scratch);
                    *slot = arch.outputs().iter().map(|&v| values[v]).collect();
                }
            });
        }
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::{NetworkBuilder, Parameters};

    #[test]
    fn diamond_forward() {
        let (arch, params) = fixtures::diamond();
        let y = realize(&arch, &params, &[1.0]).unwrap();
        assert_eq!(y, vec![2.5]);
    }

    #[test]
    fn pool_counterexample_forward() {
        let (arch, params) = fixtures::pool_counterexample();
        assert_eq!(realize(&arch, &params, &[1.0, 1.0]).unwrap(), vec![1.0]);
        assert_eq!(realize(&arch, &params, &[2.0, 7.0]).unwrap(), vec![7.0]);
    }

    #[test]
    fn zero_parameters_give_zero_output() {
        let (arch, _) = fixtures::diamond();
        let zeros = Parameters::zeros(&arch);
        assert_eq!(realize(&arch, &zeros, &[3.7]).unwrap(), vec![0.0]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let (arch, params) = fixtures::diamond();
        assert!(matches!(
            realize(&arch, &params, &[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn pool_tie_breaks_on_smallest_id() {
        // kpool(2) over pre-activations (3, 5, 3) from antecedents a, b, c:
        // the 2nd largest is 3, attained first by `a`.
        let (arch, params) = NetworkBuilder::new()
            .input("a")
            .input("b")
            .input("c")
            .kpool("p", 2)
            .identity("z")
            .edge("a", "p", 1.0)
            .edge("b", "p", 1.0)
            .edge("c", "p", 1.0)
            .edge("p", "z", 1.0)
            .build()
            .unwrap();
        let t = trace(&arch, &params, &[3.0, 5.0, 3.0]).unwrap();
        assert_eq!(t.value_of(&arch, "p"), Some(3.0));
        let p = arch.index_of("p").unwrap();
        let a = arch.index_of("a").unwrap();
        let b = arch.index_of("b").unwrap();
        let c = arch.index_of("c").unwrap();
        assert!(t.edge_activations[arch.edge_between(a, p).unwrap()]);
        assert!(!t.edge_activations[arch.edge_between(b, p).unwrap()]);
        assert!(!t.edge_activations[arch.edge_between(c, p).unwrap()]);
        // Exactly one active incoming edge on a pooling neuron.
        let active: usize = arch
            .incoming(p)
            .filter(|&(_, e)| t.edge_activations[e])
            .count();
        assert_eq!(active, 1);
    }

    #[test]
    fn relu_trace_indicators() {
        let (arch, params) = fixtures::diamond();
        let t = trace(&arch, &params, &[1.0]).unwrap();
        let h1 = arch.index_of("h1").unwrap();
        let h2 = arch.index_of("h2").unwrap();
        let o = arch.index_of("o").unwrap();
        let u = arch.index_of("u").unwrap();
        assert!(t.neuron_activations[h1]);
        assert!(!t.neuron_activations[h2], "negative pre-activation");
        assert!(t.neuron_activations[o], "identity neurons are always active");
        assert!(!t.edge_activations[arch.edge_between(u, h2).unwrap()]);
        assert!(t.edge_activations[arch.edge_between(h2, o).unwrap()]);
        assert_eq!(t.outputs(&arch), vec![2.5]);
    }

    #[test]
    fn relu_at_exactly_zero_is_inactive() {
        let (arch, params) = NetworkBuilder::new()
            .input("u")
            .relu("h")
            .identity("o")
            .edge("u", "h", 1.0)
            .edge("h", "o", 1.0)
            .build()
            .unwrap();
        let t = trace(&arch, &params, &[0.0]).unwrap();
        let h = arch.index_of("h").unwrap();
        assert_eq!(t.values[h], 0.0);
        assert!(!t.neuron_activations[h]);
    }

    #[test]
    fn batch_matches_serial_and_preserves_rows() {
        let (arch, params) = fixtures::diamond();
        let rows = vec![vec![1.0], vec![0.0]];
        let out = batch_realize(&arch, &params, &rows).unwrap();
        assert_eq!(out, vec![vec![2.5], vec![0.5]]);

        let (m1, m1_params) = fixtures::pool_counterexample();
        let out = batch_realize(&m1, &m1_params, &[vec![2.0, 7.0]]).unwrap();
        assert_eq!(out, vec![vec![7.0]]);

        let empty: Vec<Vec<f64>> = Vec::new();
        assert_eq!(batch_realize(&arch, &params, &empty).unwrap().len(), 0);
    }

    #[test]
    fn batch_is_bit_identical_across_thread_counts() {
        let (arch, params) = fixtures::diamond();
        let rows: Vec<Vec<f64>> = (0..200).map(|i| vec![i as f64 * 0.37 - 31.0]).collect();
        let serial = std::env::var("PATHGAUGE_THREADS");
        std::env::set_var("PATHGAUGE_THREADS", "1");
        let a = batch_realize(&arch, &params, &rows).unwrap();
        std::env::set_var("PATHGAUGE_THREADS", "4");
        let b = batch_realize(&arch, &params, &rows).unwrap();
        match serial {
            Ok(v) => std::env::set_var("PATHGAUGE_THREADS", v),
            Err(_) => std::env::remove_var("PATHGAUGE_THREADS"),
        }
        let bits = |m: &Vec<Vec<f64>>| -> Vec<u64> {
            m.iter().flatten().map(|x| x.to_bits()).collect()
        };
        assert_eq!(bits(&a), bits(&b));
    }
}
