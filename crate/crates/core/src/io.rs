//! Network and dataset file formats.
//!
//! Networks are JSON documents with top-level keys `neurons` (list of
//! `{id, activation, k?}`), `edges` (list of `{from, to, weight}`) and
//! `biases` (map id -> number), plus an optional `name`. Activations are
//! `"input"`, `"relu"`, `"identity"` or `"kpool"` (which requires `k`).
//! Numbers are decimal floating point, round-trippable at 64-bit precision.
//! Biases may be omitted and default to zero; input neurons must not carry
//! one.
//!
//! Datasets are header-less CSV: one row per sample, `d_in` numeric columns,
//! optionally followed by one integer label column in `1..=d_out`.

use std::collections::BTreeMap;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{validate, Activation, Architecture, Neuron, NeuronId, Parameters};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    neurons: Vec<NeuronDoc>,
    edges: Vec<EdgeDoc>,
    #[serde(default)]
    biases: BTreeMap<String, f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NeuronDoc {
    id: String,
    activation: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    from: String,
    to: String,
    weight: f64,
}

fn parse_activation(doc: &NeuronDoc) -> Result<Activation> {
    let act = match doc.activation.as_str() {
        "input" => Activation::Input,
        "relu" => Activation::Relu,
        "identity" => Activation::Identity,
        "kpool" => {
            let k = doc.k.ok_or_else(|| Error::Parse {
                context: format!("neuron `{}`", doc.id),
                message: "activation `kpool` requires field `k`".to_owned(),
            })?;
            return Ok(Activation::KPool(k));
        }
        other => {
            return Err(Error::Parse {
                context: format!("neuron `{}`", doc.id),
                message: format!(
                    "unknown activation `{other}` (expected input, relu, identity or kpool)"
                ),
            })
        }
    };
    if doc.k.is_some() {
        return Err(Error::Parse {
            context: format!("neuron `{}`", doc.id),
            message: format!("field `k` is only valid for kpool, not `{}`", doc.activation),
        });
    }
    Ok(act)
}

fn activation_doc(neuron: &Neuron) -> NeuronDoc {
    let (activation, k) = match neuron.activation {
        Activation::Input => ("input", None),
        Activation::Relu => ("relu", None),
        Activation::Identity => ("identity", None),
        Activation::KPool(k) => ("kpool", Some(k)),
    };
    NeuronDoc {
        id: neuron.id.to_string(),
        activation: activation.to_owned(),
        k,
    }
}

/// Parses a network document without validating semantic invariants, so
/// that malformed networks can still be inspected by `validate`.
pub fn parse_network(text: &str) -> Result<(Architecture, Parameters)> {
    let doc: NetworkDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
        context: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let mut neurons = Vec::with_capacity(doc.neurons.len());
    for n in &doc.neurons {
        neurons.push(Neuron {
            id: NeuronId::new(n.id.clone()),
            activation: parse_activation(n)?,
        });
    }
    let edges: Vec<(NeuronId, NeuronId)> = doc
        .edges
        .iter()
        .map(|e| (NeuronId::new(e.from.clone()), NeuronId::new(e.to.clone())))
        .collect();
    let arch = Architecture::new(neurons, edges, doc.name)?;
    let mut params = Parameters::zeros(&arch);
    for e in &doc.edges {
        let f = arch.index_of(&e.from).expect("endpoint checked above");
        let t = arch.index_of(&e.to).expect("endpoint checked above");
        let idx = arch.edge_between(f, t).expect("edge exists");
        params.set_weight(idx, e.weight);
    }
    for (id, b) in &doc.biases {
        let v = arch
            .index_of(id)
            .ok_or_else(|| Error::UnknownNeuron(id.clone()))?;
        if arch.is_input(v) {
            return Err(Error::Parse {
                context: format!("bias `{id}`"),
                message: "input neurons cannot carry a bias".to_owned(),
            });
        }
        params.set_bias(v, *b);
    }
    Ok((arch, params))
}

/// Loads and validates a network file.
pub fn load_network(path: impl AsRef<FsPath>) -> Result<(Architecture, Parameters)> {
    let text = std::fs::read_to_string(path)?;
    let (arch, params) = parse_network(&text)?;
    let report = validate(&arch, Some(&params));
    if !report.ok {
        let summary: Vec<String> = report
            .violations
            .iter()
            .map(|v| format!("[{}] {}: {}", v.rule, v.subject, v.message))
            .collect();
        return Err(Error::Validation(summary.join("; ")));
    }
    Ok((arch, params))
}

/// Canonical serialization: neurons and edges in ascending order, every
/// non-input bias spelled out.
pub fn network_to_string(arch: &Architecture, params: &Parameters) -> Result<String> {
    params.check_binding(arch)?;
    let doc = NetworkDoc {
        name: arch.name().map(str::to_owned),
        neurons: arch.neurons().iter().map(activation_doc).collect(),
        edges: arch
            .edges()
            .iter()
            .enumerate()
            .map(|(e, &(f, t))| EdgeDoc {
                from: arch.id(f).to_string(),
                to: arch.id(t).to_string(),
                weight: params.weight(e),
            })
            .collect(),
        biases: (0..arch.neuron_count())
            .filter(|&v| !arch.is_input(v))
            .map(|v| (arch.id(v).to_string(), params.bias(v)))
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("network doc serializes");
    out.push('\n');
    Ok(out)
}

/// Writes the canonical serialization to `path`.
pub fn save_network(
    path: impl AsRef<FsPath>,
    arch: &Architecture,
    params: &Parameters,
) -> Result<()> {
    std::fs::write(path, network_to_string(arch, params)?)?;
    Ok(())
}

/// A parsed dataset: sample rows plus optional 1-based class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub labels: Option<Vec<usize>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Parses CSV rows of width `d_in` (inputs only) or `d_in + 1` (inputs plus
/// a trailing integer label, checked against `d_out` when known). Blank
/// lines are skipped; all rows must agree on the presence of labels.
pub fn parse_dataset(text: &str, d_in: usize, d_out: Option<usize>) -> Result<Dataset> {
    let mut inputs = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut labeled: Option<bool> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let has_label = match fields.len() {
            n if n == d_in => false,
            n if n == d_in + 1 => true,
            n => {
                return Err(Error::Parse {
                    context: format!("line {}", lineno + 1),
                    message: format!("expected {d_in} or {} columns, got {n}", d_in + 1),
                })
            }
        };
        match labeled {
            None => labeled = Some(has_label),
            Some(prev) if prev != has_label => {
                return Err(Error::Parse {
                    context: format!("line {}", lineno + 1),
                    message: "inconsistent column count across rows".to_owned(),
                })
            }
            _ => {}
        }
        let mut row = Vec::with_capacity(d_in);
        for field in &fields[..d_in] {
            row.push(field.parse::<f64>().map_err(|e| Error::Parse {
                context: format!("line {}", lineno + 1),
                message: format!("`{field}`: {e}"),
            })?);
        }
        inputs.push(row);
        if has_label {
            let raw = fields[d_in];
            let label = raw.parse::<usize>().map_err(|e| Error::Parse {
                context: format!("line {}", lineno + 1),
                message: format!("label `{raw}`: {e}"),
            })?;
            if let Some(classes) = d_out {
                if label == 0 || label > classes {
                    return Err(Error::OutOfRangeLabel { label, classes });
                }
            }
            labels.push(label);
        }
    }
    Ok(Dataset {
        inputs,
        labels: if labeled == Some(true) { Some(labels) } else { None },
    })
}

/// Loads a CSV dataset from disk.
pub fn load_dataset(
    path: impl AsRef<FsPath>,
    d_in: usize,
    d_out: Option<usize>,
) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    parse_dataset(&text, d_in, d_out)
}
