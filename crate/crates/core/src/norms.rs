//! Mixed path-norms, the DAG operator-norm product and Lipschitz bounds.
//!
//! The mixed `(q, r)` path-norm is the outer r-norm, over output neurons,
//! of the inner q-norms of the per-output sub-liftings. It is computed here
//! two ways:
//!
//! - [`path_norm_fast`]: one forward pass on the graph with every pooling
//!   activation replaced by identity, parameters mapped through
//!   `x -> |x|^q`, and an all-ones input. Linear in the network size.
//! - [`path_norm_exact`]: direct evaluation over the enumerated lifting;
//!   exponential in the worst case, kept as the oracle.
//!
//! [`naive_forward_norm`] runs the forward-pass formula *without* the
//! pooling rewrite. It is wrong as soon as a pooling neuron exists and is
//! kept as a diagnostic of exactly that failure.

use crate::error::{Error, Result};
use crate::forward;
use crate::graph::{Architecture, NeuronIdx, Parameters};
use crate::paths::{self, Path};
use crate::transforms;

/// Exponent pair of a mixed path-norm: inner `q` (finite), outer `r`
/// (may be `f64::INFINITY`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormSpec {
    q: f64,
    r: f64,
}

impl NormSpec {
    pub fn new(q: f64, r: f64) -> Result<Self> {
        if q <= 0.0 || q.is_nan() {
            return Err(Error::InvalidExponent(q));
        }
        if q.is_infinite() {
            return Err(Error::InfiniteInnerExponent);
        }
        if r <= 0.0 || r.is_nan() {
            return Err(Error::InvalidExponent(r));
        }
        Ok(NormSpec { q, r })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn r(&self) -> f64 {
        self.r
    }
}

/// A norm value plus an overflow marker. `overflow` is set when some
/// intermediate of the computation left the finite 64-bit range, in which
/// case `value` is `+inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormResult {
    pub value: f64,
    pub overflow: bool,
}

impl NormResult {
    fn finite(value: f64) -> Self {
        NormResult {
            value,
            overflow: false,
        }
    }

    fn overflowed() -> Self {
        NormResult {
            value: f64::INFINITY,
            overflow: true,
        }
    }
}

/// `r`-norm of a non-negative vector; `r = inf` is the maximum.
pub fn vector_norm(values: &[f64], r: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    if r.is_infinite() {
        values.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
    } else {
        values
            .iter()
            .map(|v| v.abs().powf(r))
            .sum::<f64>()
            .powf(1.0 / r)
    }
}

fn forward_norm(
    arch: &Architecture,
    params: &Parameters,
    spec: &NormSpec,
) -> Result<NormResult> {
    params.check_binding(arch)?;
    let q = spec.q;
    let powered = params.map_values(|x| x.abs().powf(q));
    let ones = vec![1.0; arch.d_in()];
    let outputs = forward::realize(arch, &powered, &ones)?;
    if outputs.iter().any(|v| !v.is_finite()) {
        return Ok(NormResult::overflowed());
    }
    let inner: Vec<f64> = outputs.iter().map(|v| v.powf(1.0 / q)).collect();
    let value = vector_norm(&inner, spec.r);
    if value.is_finite() {
        Ok(NormResult::finite(value))
    } else {
        Ok(NormResult::overflowed())
    }
}

/// Mixed `(q, r)` path-norm in a single forward pass: pooling neurons are
/// first replaced by identity ones, all weights and biases are mapped
/// through `x -> |x|^q`, the network is evaluated on the all-ones input,
/// and output `v` then holds the q-th power of the sub-lifting norm at `v`.
pub fn path_norm_fast(
    arch: &Architecture,
    params: &Parameters,
    spec: &NormSpec,
) -> Result<NormResult> {
    let rewritten = transforms::pool_to_identity(arch);
    forward_norm(&rewritten, params, spec)
}

/// The forward-pass formula *without* the pooling rewrite. Equals
/// [`path_norm_fast`] on pool-free networks and undershoots it otherwise
/// (a pooling neuron propagates one order statistic instead of the sum).
pub fn naive_forward_norm(
    arch: &Architecture,
    params: &Parameters,
    spec: &NormSpec,
) -> Result<NormResult> {
    forward_norm(arch, params, spec)
}

/// Mixed path-norm in the log domain: returns `log10` of the norm.
///
/// After the pooling rewrite the forward pass only ever adds non-negative
/// terms, so it can be carried out on logarithms with log-sum-exp and never
/// overflows. Intended for L1/L2 path-norms of deep networks whose plain
/// value exceeds the largest finite 64-bit float.
pub fn path_norm_fast_log10(
    arch: &Architecture,
    params: &Parameters,
    spec: &NormSpec,
) -> Result<f64> {
    params.check_binding(arch)?;
    let q = spec.q;
    let order = arch.topological_order()?;
    // ln of each neuron's value in the rewritten |theta|^q forward pass.
    let mut ln_val = vec![f64::NEG_INFINITY; arch.neuron_count()];
    for &v in arch.inputs() {
        ln_val[v] = 0.0;
    }
    let mut terms: Vec<f64> = Vec::new();
    for &v in &order {
        if arch.is_input(v) {
            continue;
        }
        terms.clear();
        terms.push(q * params.bias(v).abs().ln());
        for (u, e) in arch.incoming(v) {
            terms.push(ln_val[u] + q * params.weight(e).abs().ln());
        }
        ln_val[v] = log_sum_exp(&terms);
    }
    let ln_inner: Vec<f64> = arch.outputs().iter().map(|&v| ln_val[v] / q).collect();
    let ln_norm = if spec.r.is_infinite() {
        ln_inner.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    } else {
        let scaled: Vec<f64> = ln_inner.iter().map(|&l| spec.r * l).collect();
        log_sum_exp(&scaled) / spec.r
    };
    Ok(ln_norm / std::f64::consts::LN_10)
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + terms.iter().map(|&t| (t - m).exp()).sum::<f64>().ln()
}

/// Mixed path-norm evaluated directly on the enumerated path-lifting.
pub fn path_norm_exact(
    arch: &Architecture,
    params: &Parameters,
    spec: &NormSpec,
    cap: u64,
) -> Result<f64> {
    let lifting = paths::path_lifting(arch, params, cap)?;
    let inner: Vec<f64> = lifting
        .per_output()
        .map(|(_, values)| vector_norm(values, spec.q))
        .collect();
    Ok(vector_norm(&inner, spec.r))
}

/// Per-path aggregate behind the DAG operator-norm product: the q-th root
/// of `sum over positions l of |gamma(p_l)|^q * prod over later positions k
/// of ||incoming(p_k)||_q^q`, where `gamma(v)` is 1 for inputs and the bias
/// otherwise, and `incoming(v)` is the incoming weight vector of `v`
/// (bias excluded). An empty product is 1.
pub fn pathwise_product(
    arch: &Architecture,
    params: &Parameters,
    path: &Path,
    q: f64,
) -> Result<f64> {
    if q <= 0.0 || q.is_nan() {
        return Err(Error::InvalidExponent(q));
    }
    if q.is_infinite() {
        return Err(Error::InfiniteInnerExponent);
    }
    params.check_binding(arch)?;
    let gamma_pow = |v: NeuronIdx| -> f64 {
        if arch.is_input(v) {
            1.0
        } else {
            params.bias(v).abs().powf(q)
        }
    };
    let neurons = path.neurons();
    let mut suffix = 1.0; // product of incoming-norm^q over neurons after position l
    let mut total = gamma_pow(neurons[neurons.len() - 1]);
    for l in (0..neurons.len() - 1).rev() {
        suffix *= incoming_norm_pow(arch, params, neurons[l + 1], q);
        total += gamma_pow(neurons[l]) * suffix;
    }
    Ok(total.powf(1.0 / q))
}

fn incoming_norm_pow(arch: &Architecture, params: &Parameters, v: NeuronIdx, q: f64) -> f64 {
    arch.incoming(v)
        .map(|(_, e)| params.weight(e).abs().powf(q))
        .sum()
}

/// DAG operator-norm product: outer r-norm over output neurons of the
/// per-output maximum of [`pathwise_product`], computed by a per-neuron
/// dynamic program (no path enumeration). For a layered fully-connected
/// bias-free network this equals the product of the layers' max-row-q-norms.
pub fn dag_operator_product(
    arch: &Architecture,
    params: &Parameters,
    spec: &NormSpec,
) -> Result<f64> {
    params.check_binding(arch)?;
    let q = spec.q;
    let order = arch.topological_order()?;
    // value(v) = max over paths ending at v of pathwise_product^q.
    let mut value = vec![0.0f64; arch.neuron_count()];
    for &v in &order {
        if arch.is_input(v) {
            value[v] = 1.0;
            continue;
        }
        let best_ant = arch
            .antecedents(v)
            .iter()
            .map(|&u| value[u])
            .fold(f64::NEG_INFINITY, f64::max);
        value[v] = params.bias(v).abs().powf(q) + incoming_norm_pow(arch, params, v, q) * best_ant;
    }
    let per_output: Vec<f64> = arch
        .outputs()
        .iter()
        .map(|&v| value[v].powf(1.0 / q))
        .collect();
    Ok(vector_norm(&per_output, spec.r))
}

/// Certified Lipschitz bound: the mixed `(1, r)` path-norm. For all inputs
/// `x, x'`, the outputs satisfy
/// `||R(x) - R(x')||_r <= bound * ||x - x'||_inf`.
pub fn lipschitz_bound(arch: &Architecture, params: &Parameters, r: f64) -> Result<NormResult> {
    let spec = NormSpec::new(1.0, r)?;
    path_norm_fast(arch, params, &spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::{Activation, NetworkBuilder};
    use crate::paths::DEFAULT_PATH_CAP;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
    }

    #[test]
    fn diamond_fast_norms() {
        let (arch, params) = fixtures::diamond();
        let n11 = path_norm_fast(&arch, &params, &NormSpec::new(1.0, 1.0).unwrap()).unwrap();
        assert!(close(n11.value, 5.5, 1e-12), "{}", n11.value);
        assert!(!n11.overflow);
        let n22 = path_norm_fast(&arch, &params, &NormSpec::new(2.0, 2.0).unwrap()).unwrap();
        assert!(close(n22.value, 13.25f64.sqrt(), 1e-12), "{}", n22.value);
    }

    #[test]
    fn pool_counterexample_norms() {
        let (arch, params) = fixtures::pool_counterexample();
        let spec = NormSpec::new(1.0, 1.0).unwrap();
        assert_eq!(path_norm_fast(&arch, &params, &spec).unwrap().value, 2.0);
        assert_eq!(naive_forward_norm(&arch, &params, &spec).unwrap().value, 1.0);
        let spec21 = NormSpec::new(2.0, 1.0).unwrap();
        assert_eq!(naive_forward_norm(&arch, &params, &spec21).unwrap().value, 1.0);
    }

    #[test]
    fn naive_equals_fast_without_pools() {
        let (arch, params) = fixtures::diamond();
        for (q, r) in [(1.0, 1.0), (2.0, f64::INFINITY), (4.0, 2.0)] {
            let spec = NormSpec::new(q, r).unwrap();
            let fast = path_norm_fast(&arch, &params, &spec).unwrap().value;
            let naive = naive_forward_norm(&arch, &params, &spec).unwrap().value;
            assert!(close(fast, naive, 1e-12));
        }
    }

    #[test]
    fn exact_agrees_with_fast_on_fixtures() {
        for (arch, params) in [fixtures::diamond(), fixtures::pool_counterexample()] {
            for q in [1.0, 2.0, 4.0] {
                for r in [1.0, 2.0, f64::INFINITY] {
                    let spec = NormSpec::new(q, r).unwrap();
                    let fast = path_norm_fast(&arch, &params, &spec).unwrap().value;
                    let exact =
                        path_norm_exact(&arch, &params, &spec, DEFAULT_PATH_CAP).unwrap();
                    assert!(
                        close(fast, exact, 1e-9),
                        "q={q} r={r}: fast {fast} vs exact {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn zero_parameters_zero_norm() {
        let (arch, _) = fixtures::diamond();
        let zeros = Parameters::zeros(&arch);
        let spec = NormSpec::new(2.0, 1.0).unwrap();
        assert_eq!(path_norm_exact(&arch, &zeros, &spec, DEFAULT_PATH_CAP).unwrap(), 0.0);
        assert_eq!(path_norm_fast(&arch, &zeros, &spec).unwrap().value, 0.0);
    }

    #[test]
    fn scalar_output_norm_independent_of_r() {
        let (arch, params) = fixtures::diamond();
        let q = 2.0;
        let base = path_norm_fast(&arch, &params, &NormSpec::new(q, 1.0).unwrap())
            .unwrap()
            .value;
        for r in [2.0, 3.5, f64::INFINITY] {
            let v = path_norm_fast(&arch, &params, &NormSpec::new(q, r).unwrap())
                .unwrap()
                .value;
            assert!(close(base, v, 1e-12));
        }
    }

    #[test]
    fn pathwise_product_examples() {
        let (arch, params) = fixtures::diamond();
        // gamma(u) * |w(u,h1)| * |w-in(o)| + |b(h1)| * |w-in(o)| + |b(o)|
        // = 1 * 2 * 2 + 0.5 * 2 + 0 = 5.
        let p = Path::from_ids(&arch, &["u", "h1", "o"]).unwrap();
        assert!(close(pathwise_product(&arch, &params, &p, 1.0).unwrap(), 5.0, 1e-12));
        let p = Path::from_ids(&arch, &["u", "h2", "o"]).unwrap();
        assert!(close(pathwise_product(&arch, &params, &p, 1.0).unwrap(), 6.0, 1e-12));
        let p = Path::from_ids(&arch, &["o"]).unwrap();
        assert_eq!(pathwise_product(&arch, &params, &p, 1.0).unwrap(), 0.0);
        let p = Path::from_ids(&arch, &["u"]).unwrap();
        assert_eq!(pathwise_product(&arch, &params, &p, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn operator_product_examples() {
        let (arch, params) = fixtures::diamond();
        let spec = NormSpec::new(1.0, f64::INFINITY).unwrap();
        assert!(close(dag_operator_product(&arch, &params, &spec).unwrap(), 6.0, 1e-12));

        // One dense layer with rows (1, 2) and (3, 4): the product collapses
        // to the maximal row L1-norm, 7.
        let (layer, layer_params) = NetworkBuilder::new()
            .input("i1")
            .input("i2")
            .identity("o1")
            .identity("o2")
            .edge("i1", "o1", 1.0)
            .edge("i2", "o1", 2.0)
            .edge("i1", "o2", 3.0)
            .edge("i2", "o2", 4.0)
            .build()
            .unwrap();
        assert!(close(
            dag_operator_product(&layer, &layer_params, &spec).unwrap(),
            7.0,
            1e-12
        ));

        let zeros = Parameters::zeros(&arch);
        assert_eq!(dag_operator_product(&arch, &zeros, &spec).unwrap(), 0.0);
    }

    #[test]
    fn operator_product_dominates_path_norm() {
        for (arch, params) in [fixtures::diamond(), fixtures::pool_counterexample()] {
            for q in [1.0, 2.0] {
                for r in [1.0, f64::INFINITY] {
                    let spec = NormSpec::new(q, r).unwrap();
                    let phi = path_norm_exact(&arch, &params, &spec, DEFAULT_PATH_CAP).unwrap();
                    let pi = dag_operator_product(&arch, &params, &spec).unwrap();
                    assert!(phi <= pi * (1.0 + 1e-9), "q={q} r={r}: {phi} > {pi}");
                }
            }
        }
    }

    #[test]
    fn lipschitz_examples() {
        let (d1, d1_params) = fixtures::diamond();
        assert!(close(lipschitz_bound(&d1, &d1_params, 1.0).unwrap().value, 5.5, 1e-12));
        let zeros = Parameters::zeros(&d1);
        assert_eq!(lipschitz_bound(&d1, &zeros, 1.0).unwrap().value, 0.0);
        let (m1, m1_params) = fixtures::pool_counterexample();
        assert_eq!(
            lipschitz_bound(&m1, &m1_params, f64::INFINITY).unwrap().value,
            2.0
        );
    }

    #[test]
    fn log_domain_matches_plain_when_finite() {
        let (arch, params) = fixtures::diamond();
        for (q, r) in [(1.0, 1.0), (2.0, 2.0), (1.0, f64::INFINITY)] {
            let spec = NormSpec::new(q, r).unwrap();
            let plain = path_norm_fast(&arch, &params, &spec).unwrap().value;
            let log10 = path_norm_fast_log10(&arch, &params, &spec).unwrap();
            assert!(close(plain.log10(), log10, 1e-9), "q={q} r={r}");
        }
    }

    #[test]
    fn overflow_is_flagged_and_log_domain_survives() {
        // 40 doubling layers starting from 1e300 overflow f64 in the plain
        // pass; the log-domain route reports the exponent instead.
        let mut builder = NetworkBuilder::new().input("a00");
        let mut prev = "a00".to_string();
        for i in 1..=40 {
            let id = format!("a{i:02}");
            builder = builder
                .neuron(id.clone(), if i == 40 { Activation::Identity } else { Activation::Relu })
                .edge(prev.clone(), id.clone(), 1e300f64.powf(1.0 / 40.0) * 2.0);
            prev = id;
        }
        let (arch, params) = builder.build().unwrap();
        let spec = NormSpec::new(1.0, 1.0).unwrap();
        let plain = path_norm_fast(&arch, &params, &spec).unwrap();
        assert!(plain.overflow);
        let log10 = path_norm_fast_log10(&arch, &params, &spec).unwrap();
        assert!(log10 > 300.0 && log10.is_finite(), "log10 = {log10}");
    }

    #[test]
    fn infinite_q_is_rejected() {
        assert!(matches!(
            NormSpec::new(f64::INFINITY, 1.0),
            Err(Error::InfiniteInnerExponent)
        ));
        assert!(matches!(NormSpec::new(0.0, 1.0), Err(Error::InvalidExponent(_))));
        assert!(matches!(NormSpec::new(1.0, 0.0), Err(Error::InvalidExponent(_))));
    }
}
