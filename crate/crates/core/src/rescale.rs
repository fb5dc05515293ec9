//! Rescaling symmetries and q-normalization of parameters.
//!
//! Every activation in the model is positively homogeneous, so multiplying a
//! hidden neuron's incoming weights and bias by `lambda > 0` while dividing
//! its outgoing weights by `lambda` leaves the realized function and the
//! path-lifting unchanged. [`normalize`] exploits this to rescale arbitrary
//! parameters into a canonical representative where every live hidden
//! neuron's incoming-weights-plus-bias q-norm is exactly 1 (dead neurons get
//! zero outgoing weights instead).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{Architecture, NeuronId, NeuronIdx, Parameters};

const TOL: f64 = 1e-9;

/// Result of [`normalize`].
#[derive(Clone, Debug)]
pub struct NormalizationOutcome {
    /// The rescaled parameters; same realized function, same path-lifting.
    pub params: Parameters,
    /// Scale applied at each hidden neuron, in processing order.
    pub scales: BTreeMap<NeuronId, f64>,
    /// Hidden neurons whose incoming norm was zero (outgoing weights zeroed).
    pub zero_neurons: Vec<NeuronId>,
}

fn check_q(q: f64) -> Result<()> {
    if q <= 0.0 || q.is_nan() {
        return Err(Error::InvalidExponent(q));
    }
    Ok(())
}

/// q-norm of the incoming weight vector of `v` extended by its bias.
pub fn incoming_norm(arch: &Architecture, params: &Parameters, v: NeuronIdx, q: f64) -> f64 {
    let weights = arch.incoming(v).map(|(_, e)| params.weight(e));
    if q.is_infinite() {
        weights
            .map(f64::abs)
            .fold(params.bias(v).abs(), f64::max)
    } else {
        let s: f64 = weights.map(|w| w.abs().powf(q)).sum::<f64>() + params.bias(v).abs().powf(q);
        s.powf(1.0 / q)
    }
}

/// q-norm of the sub-lifting at every neuron, by the exact recursion
/// `phi(v) = (incoming lifts scaled by their weights, then the bias)`:
/// in the q-th power domain,
/// `phi(v)^q = |b_v|^q + sum_u phi(u)^q |w(u,v)|^q`, with `phi = 1` at
/// inputs. Needs no path enumeration and holds for arbitrary DAGs.
pub fn sublifting_norms(arch: &Architecture, params: &Parameters, q: f64) -> Result<Vec<f64>> {
    check_q(q)?;
    params.check_binding(arch)?;
    let order = arch.topological_order()?;
    let mut norm = vec![0.0f64; arch.neuron_count()];
    if q.is_infinite() {
        for &v in &order {
            norm[v] = if arch.is_input(v) {
                1.0
            } else {
                arch.incoming(v)
                    .map(|(u, e)| norm[u] * params.weight(e).abs())
                    .fold(params.bias(v).abs(), f64::max)
            };
        }
    } else {
        let mut pow = vec![0.0f64; arch.neuron_count()];
        for &v in &order {
            pow[v] = if arch.is_input(v) {
                1.0
            } else {
                params.bias(v).abs().powf(q)
                    + arch
                        .incoming(v)
                        .map(|(u, e)| pow[u] * params.weight(e).abs().powf(q))
                        .sum::<f64>()
            };
            norm[v] = pow[v].powf(1.0 / q);
        }
    }
    Ok(norm)
}

/// Rescales `params` into a q-normalized representative.
///
/// Hidden neurons are processed in topological order. Each neuron's scale is
/// the q-norm of its incoming weights and bias; a zero scale zeroes the
/// outgoing weights, a positive one divides the incoming weights and bias
/// and multiplies the outgoing weights. The realized function and the
/// path-lifting are preserved; the scale test against zero is exact
/// (no epsilon), since rescaling by a tiny positive factor is legitimate.
pub fn normalize(arch: &Architecture, params: &Parameters, q: f64) -> Result<NormalizationOutcome> {
    check_q(q)?;
    params.check_binding(arch)?;
    let order = arch.topological_order()?;
    let mut out = params.clone();
    let mut scales = BTreeMap::new();
    let mut zero_neurons = Vec::new();
    for &v in &order {
        if !arch.is_hidden(v) {
            continue;
        }
        let lambda = incoming_norm(arch, &out, v, q);
        scales.insert(arch.id(v).clone(), lambda);
        if lambda == 0.0 {
            for &e in arch.outgoing_edges(v) {
                out.set_weight(e, 0.0);
            }
            zero_neurons.push(arch.id(v).clone());
        } else {
            for (_, e) in arch.incoming(v) {
                out.set_weight(e, out.weight(e) / lambda);
            }
            out.set_bias(v, out.bias(v) / lambda);
            for &e in arch.outgoing_edges(v) {
                out.set_weight(e, out.weight(e) * lambda);
            }
        }
    }
    Ok(NormalizationOutcome {
        params: out,
        scales,
        zero_neurons,
    })
}

/// Whether `params` is q-normalized: at every hidden neuron the sub-lifting
/// q-norm equals the incoming-weights-plus-bias q-norm, that common value is
/// 0 or 1 (tolerance 1e-9), and a zero value comes with exactly-zero
/// outgoing weights.
pub fn is_normalized(arch: &Architecture, params: &Parameters, q: f64) -> Result<bool> {
    let sub = sublifting_norms(arch, params, q)?;
    for v in 0..arch.neuron_count() {
        if !arch.is_hidden(v) {
            continue;
        }
        let incoming = incoming_norm(arch, params, v, q);
        if (sub[v] - incoming).abs() > TOL * sub[v].abs().max(incoming.abs()).max(1.0) {
            return Ok(false);
        }
        if incoming.abs() > TOL && (incoming - 1.0).abs() > TOL {
            return Ok(false);
        }
        if incoming.abs() <= TOL
            && arch
                .outgoing_edges(v)
                .iter()
                .any(|&e| params.weight(e) != 0.0)
        {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Applies the single-neuron rescaling symmetry: incoming weights and bias
/// of `v` are multiplied by `lambda`, outgoing weights divided by `lambda`.
pub fn apply_rescaling(
    arch: &Architecture,
    params: &Parameters,
    v: &str,
    lambda: f64,
) -> Result<Parameters> {
    if lambda <= 0.0 || lambda.is_nan() || lambda.is_infinite() {
        return Err(Error::NonPositiveScale(lambda));
    }
    params.check_binding(arch)?;
    let idx = arch
        .index_of(v)
        .ok_or_else(|| Error::UnknownNeuron(v.to_owned()))?;
    if !arch.is_hidden(idx) {
        return Err(Error::NotHiddenNeuron(v.to_owned()));
    }
    let mut out = params.clone();
    for (_, e) in arch.incoming(idx) {
        out.set_weight(e, out.weight(e) * lambda);
    }
    out.set_bias(idx, out.bias(idx) * lambda);
    for &e in arch.outgoing_edges(idx) {
        out.set_weight(e, out.weight(e) / lambda);
    }
    Ok(out)
}
