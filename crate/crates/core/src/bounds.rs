//! Generalization- and margin-bound constants.
//!
//! Everything here is closed-form arithmetic over architecture metadata
//! (depth, pooling statistics, dimensions) and dataset statistics. The
//! headline quantity is `(4 * sigma / n) * L * C * ||Phi||_1`, an upper
//! bound on the expected generalization error of any estimator whose L1
//! path-norm stays below the given value, for an `L`-Lipschitz loss. The
//! margin variant bounds the misclassification probability by an empirical
//! margin count plus `(8 * sigma / n) * C * ||Phi||_1 / gamma`.
//!
//! Natural logarithms throughout.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Architecture, Parameters};

/// Which empirical scale statistic to compute from a dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SigmaVariant {
    /// `sqrt(max(n, sum_i ||x_i||_inf^2))` — the bias-free form.
    SupNorm,
    /// `sqrt(max(n, max_u sum_i x_{i,u}^2))` with a constant-one coordinate
    /// appended — the form matching bias absorption into an extra input.
    CoordinateWithBias,
}

/// Empirical scale statistic of a dataset. Always at least `sqrt(n)`.
///
/// This is the plug-in estimate over the provided sample; reports should
/// label it "empirical sigma".
pub fn sigma_estimate(rows: &[Vec<f64>], variant: SigmaVariant) -> Result<f64> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let inner = match variant {
        SigmaVariant::SupNorm => rows
            .iter()
            .map(|row| {
                let m = row.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
                m * m
            })
            .sum::<f64>(),
        SigmaVariant::CoordinateWithBias => {
            let d = rows.first().map(|r| r.len()).unwrap_or(0);
            let mut best = n as f64; // the constant-one coordinate
            for u in 0..d {
                let s: f64 = rows.iter().map(|row| row[u] * row[u]).sum();
                best = best.max(s);
            }
            best
        }
    };
    Ok((n as f64).max(inner).sqrt())
}

/// Architecture metadata feeding the bound constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ArchMeta {
    /// Depth: maximal input-to-output path length.
    pub depth: usize,
    /// Number of distinct pooling orders (`P`).
    pub pool_types: usize,
    /// Maximal pooling kernel size (`K`, 1 when pool-free).
    pub max_kernel: usize,
    /// Number of pooling layers (`M`).
    pub pool_layers: usize,
    pub d_in: usize,
    pub d_out: usize,
    /// Whether biases are in play; shifts `d_in` to `d_in + 1` inside `C`.
    pub with_bias: bool,
    /// Whether pooling neurons form whole layers with nothing skipping
    /// over them (precondition of the sharpened constant).
    pub pools_layered: bool,
}

impl ArchMeta {
    /// Extracts the metadata of a concrete network. `with_bias` is set when
    /// any neuron carries a nonzero bias.
    ///
    /// Bounds require pooling neurons to have null biases; a nonzero pool
    /// bias is a hard error here, not a warning.
    pub fn from_network(arch: &Architecture, params: &Parameters) -> Result<ArchMeta> {
        params.check_binding(arch)?;
        for v in 0..arch.neuron_count() {
            if arch.activation(v).is_pool() && params.bias(v) != 0.0 {
                return Err(Error::PoolBiasNonZero(arch.id(v).to_string()));
            }
        }
        let stats = arch.pool_stats()?;
        Ok(ArchMeta {
            depth: arch.depth()?,
            pool_types: stats.distinct_orders,
            max_kernel: stats.max_kernel,
            pool_layers: stats.pool_layer_count,
            d_in: arch.d_in(),
            d_out: arch.d_out(),
            with_bias: (0..arch.neuron_count()).any(|v| params.bias(v) != 0.0),
            pools_layered: stats.pools_layered,
        })
    }

    fn effective_d_in(&self) -> f64 {
        if self.with_bias {
            (self.d_in + 1) as f64
        } else {
            self.d_in as f64
        }
    }
}

/// The bound constant
/// `C = sqrt(D * ln((3 + 2P) * K) + ln((3 + 2P) / (1 + P) * d_in * d_out))`,
/// with `d_in` replaced by `d_in + 1` when biases are in play.
pub fn bound_constant_c(meta: &ArchMeta) -> f64 {
    let p = meta.pool_types as f64;
    let k = meta.max_kernel as f64;
    let d = meta.depth as f64;
    let factor = 3.0 + 2.0 * p;
    (d * (factor * k).ln()
        + (factor / (1.0 + p) * meta.effective_d_in() * meta.d_out as f64).ln())
    .sqrt()
}

/// Sharpened constant for single-order pooling grouped in layers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SharpenedConstant {
    /// `sqrt(D * ln 3 + M * ln K + ln((d_in + 1) * d_out))`.
    pub value: f64,
    /// Whether the structural precondition holds: at most one pooling order
    /// and pooling neurons grouped in layers with nothing skipping over
    /// them. The value is heuristic when this is false.
    pub applicable: bool,
}

/// Sharpened bound constant
/// `C_sharpened = sqrt(D * ln 3 + M * ln K + ln((d_in + 1) * d_out))`.
///
/// The formula carries `d_in + 1` unconditionally. Applies when there is a
/// single pooling order whose neurons are grouped in layers with no skip
/// connections over them; the returned flag reports whether that
/// precondition was met.
pub fn bound_constant_c_sharpened(meta: &ArchMeta) -> SharpenedConstant {
    let value = (meta.depth as f64 * 3.0f64.ln()
        + meta.pool_layers as f64 * (meta.max_kernel as f64).ln()
        + ((meta.d_in + 1) as f64 * meta.d_out as f64).ln())
    .sqrt();
    SharpenedConstant {
        value,
        applicable: meta.pool_types <= 1 && meta.pools_layered,
    }
}

/// Assembles the generalization bound `(4 * sigma / n) * L * C * ||Phi||_1`.
pub fn generalization_bound(sigma: f64, n: usize, l: f64, c: f64, path_norm_l1: f64) -> f64 {
    4.0 * sigma / n as f64 * l * c * path_norm_l1
}

/// Margin of an output vector against a 1-based class label: the labeled
/// coordinate minus the best competing coordinate.
pub fn margin(output: &[f64], label: usize) -> Result<f64> {
    if output.len() < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: output.len(),
        });
    }
    if label == 0 || label > output.len() {
        return Err(Error::OutOfRangeLabel {
            label,
            classes: output.len(),
        });
    }
    let correct = output[label - 1];
    let best_other = output
        .iter()
        .enumerate()
        .filter(|&(c, _)| c != label - 1)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(correct - best_other)
}

/// gamma-margin loss: 0 above the margin target, 1 on misclassification,
/// linear in between. Always in `[0, 1]`.
pub fn margin_loss(output: &[f64], label: usize, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let m = margin(output, label)?;
    Ok(margin_loss_of_margin(m, gamma))
}

fn margin_loss_of_margin(m: f64, gamma: f64) -> f64 {
    if gamma < m {
        0.0
    } else if m < 0.0 {
        1.0
    } else {
        1.0 - m / gamma
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma <= 0.0 || gamma.is_nan() {
        return Err(Error::NonPositiveGamma(gamma));
    }
    Ok(())
}

/// The two terms of the misclassification bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MarginBound {
    /// Fraction of samples whose margin is at most `gamma`.
    pub term1: f64,
    /// `(8 * sigma / n) * C * ||Phi||_1 / gamma`.
    pub term2: f64,
    pub total: f64,
}

/// Bounds the misclassification probability: the fraction of training
/// samples not classified with margin above `gamma`, plus the complexity
/// term. Scaling the outputs and `gamma` by a common positive factor leaves
/// both terms unchanged.
pub fn margin_bound(
    outputs: &[Vec<f64>],
    labels: &[usize],
    gamma: f64,
    sigma: f64,
    n: usize,
    c: f64,
    path_norm_l1: f64,
) -> Result<MarginBound> {
    check_gamma(gamma)?;
    if outputs.len() != labels.len() || outputs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: outputs.len().min(labels.len()),
        });
    }
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut missed = 0usize;
    for (row, &label) in outputs.iter().zip(labels) {
        if margin(row, label)? <= gamma {
            missed += 1;
        }
    }
    let term1 = missed as f64 / n as f64;
    let term2 = 8.0 * sigma / n as f64 * c * path_norm_l1 / gamma;
    Ok(MarginBound {
        term1,
        term2,
        total: term1 + term2,
    })
}

/// Numerically stable cross-entropy of a logit vector against a 1-based
/// class label: `logsumexp(logits) - logits[label]`.
pub fn cross_entropy(logits: &[f64], label: usize) -> Result<f64> {
    if label == 0 || label > logits.len() {
        return Err(Error::OutOfRangeLabel {
            label,
            classes: logits.len(),
        });
    }
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|&x| (x - m).exp()).sum::<f64>().ln();
    Ok(lse - logits[label - 1])
}

/// Assembled bound constants for one network/dataset pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    /// Empirical scale statistic of the inputs.
    pub sigma: f64,
    pub n: usize,
    /// Architecture constant `C`.
    pub c: f64,
    /// Sharpened constant, when its structural precondition is known.
    pub c_sharpened: SharpenedConstant,
    /// Lipschitz constant `L` of the loss.
    pub loss_lipschitz: f64,
    /// L1 path-norm of the parameters.
    pub path_norm_l1: f64,
    /// `(4 * sigma / n) * L * C * path_norm_l1`.
    pub bound: f64,
    /// Margin-based misclassification bound, when margins were evaluated.
    pub margin: Option<MarginBound>,
}

/// Assembles every closed-form quantity of the generalization bound.
pub fn assemble_bound_report(
    meta: &ArchMeta,
    sigma: f64,
    n: usize,
    loss: Loss,
    path_norm_l1: f64,
    margin: Option<MarginBound>,
) -> BoundReport {
    let c = bound_constant_c(meta);
    let l = loss.lipschitz_constant();
    BoundReport {
        sigma,
        n,
        c,
        c_sharpened: bound_constant_c_sharpened(meta),
        loss_lipschitz: l,
        path_norm_l1,
        bound: generalization_bound(sigma, n, l, c, path_norm_l1),
        margin,
    }
}

/// A loss together with its Lipschitz constant with respect to the L2 norm
/// on the output vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Loss {
    /// Cross-entropy over one-hot labels; Lipschitz constant `sqrt(2)`.
    CrossEntropy,
    /// gamma-margin loss; Lipschitz constant `2 / gamma`.
    Margin { gamma: f64 },
    /// A user-supplied Lipschitz constant.
    Constant(f64),
}

impl Loss {
    pub fn margin(gamma: f64) -> Result<Loss> {
        check_gamma(gamma)?;
        Ok(Loss::Margin { gamma })
    }

    pub fn lipschitz_constant(&self) -> f64 {
        match *self {
            Loss::CrossEntropy => std::f64::consts::SQRT_2,
            Loss::Margin { gamma } => 2.0 / gamma,
            Loss::Constant(l) => l,
        }
    }
}
