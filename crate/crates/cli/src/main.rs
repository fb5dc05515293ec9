//! `pathgauge`: path-liftings, path-norms, rescalings and generalization
//! bounds for DAG ReLU networks, from the command line.
//!
//! Every subcommand reads the JSON network format, prints one structured
//! JSON report to standard output and a short summary to standard error.
//! Exit codes: 0 on success, 1 on validation or computation failure, 2 on
//! usage errors.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use pathgauge_core::bounds::{self, ArchMeta, Loss};
use pathgauge_core::graph::validate;
use pathgauge_core::io;
use pathgauge_core::norms::{self, NormSpec};
use pathgauge_core::paths::{self, DEFAULT_PATH_CAP};
use pathgauge_core::rescale;
use pathgauge_core::sampler::SplitMix64;
use pathgauge_core::transforms;
use pathgauge_core::{forward, Error};

use report::{num, FileDigest, Inputs, RunReport};

#[derive(Parser)]
#[command(
    name = "pathgauge",
    version,
    about = "Path-norm toolkit for DAG ReLU networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn parse_exponent(s: &str) -> Result<f64, String> {
    match s.to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        other => other
            .parse::<f64>()
            .map_err(|e| format!("invalid exponent `{s}`: {e}")),
    }
}

#[derive(Clone, Copy, Debug)]
struct MetaArgs {
    depth: usize,
    pool_types: usize,
    max_kernel: usize,
    pool_layers: usize,
    d_in: usize,
    d_out: usize,
}

fn parse_meta(s: &str) -> Result<MetaArgs, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 6 {
        return Err("expected 6 comma-separated values: D,P,K,M,din,dout".to_owned());
    }
    let mut values = [0usize; 6];
    for (slot, part) in values.iter_mut().zip(&parts) {
        *slot = part
            .parse::<usize>()
            .map_err(|e| format!("invalid meta value `{part}`: {e}"))?;
    }
    Ok(MetaArgs {
        depth: values[0],
        pool_types: values[1],
        max_kernel: values[2],
        pool_layers: values[3],
        d_in: values[4],
        d_out: values[5],
    })
}

fn parse_loss(s: &str) -> Result<Loss, String> {
    if s == "xent" {
        return Ok(Loss::CrossEntropy);
    }
    if let Some(gamma) = s.strip_prefix("margin:") {
        let gamma = gamma
            .parse::<f64>()
            .map_err(|e| format!("invalid margin gamma `{gamma}`: {e}"))?;
        return Loss::margin(gamma).map_err(|e| e.to_string());
    }
    if let Some(l) = s.strip_prefix("const:") {
        let l = l
            .parse::<f64>()
            .map_err(|e| format!("invalid Lipschitz constant `{l}`: {e}"))?;
        return Ok(Loss::Constant(l));
    }
    Err(format!(
        "unknown loss `{s}` (expected `xent`, `margin:GAMMA` or `const:L`)"
    ))
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TransformOp {
    /// Move biases onto edges from a constant-one input neuron.
    AbsorbBiases,
    /// Contract hidden identity neurons into bypass edges.
    DropIdentity,
    /// Replace every k-max-pool activation by identity.
    PoolToId,
}

#[derive(Subcommand)]
enum Command {
    /// Check a network file against the model invariants.
    Validate { net: PathBuf },
    /// Mixed (q, r) path-norm of the network parameters.
    Pathnorm {
        net: PathBuf,
        #[arg(long, value_parser = parse_exponent)]
        q: f64,
        #[arg(long, value_parser = parse_exponent)]
        r: f64,
        /// Evaluate over the enumerated path-lifting instead of the
        /// rewritten forward pass.
        #[arg(long, conflicts_with_all = ["naive", "log_domain"])]
        exact: bool,
        /// Run the forward-pass formula without the pool rewrite
        /// (diagnostic; wrong in the presence of pooling neurons).
        #[arg(long, conflicts_with = "log_domain")]
        naive: bool,
        /// Accumulate in the log domain and report log10 of the norm.
        #[arg(long)]
        log_domain: bool,
        /// Path enumeration budget for --exact.
        #[arg(long, default_value_t = DEFAULT_PATH_CAP)]
        cap: u64,
    },
    /// Rescale parameters into their q-normalized representative.
    Normalize {
        net: PathBuf,
        #[arg(long, value_parser = parse_exponent)]
        q: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Certified Lipschitz bound (the mixed (1, r) path-norm).
    Lipschitz {
        net: PathBuf,
        #[arg(long, value_parser = parse_exponent)]
        r: f64,
    },
    /// DAG operator-norm product.
    Opnorm {
        net: PathBuf,
        #[arg(long, value_parser = parse_exponent)]
        q: f64,
        #[arg(long, value_parser = parse_exponent)]
        r: f64,
    },
    /// Function-preserving graph rewrites.
    Transform {
        net: PathBuf,
        #[arg(long, value_enum)]
        op: TransformOp,
        #[arg(long)]
        out: PathBuf,
        /// With --op absorb-biases: add the constant input even when every
        /// bias is zero.
        #[arg(long)]
        force_bias_input: bool,
    },
    /// Cross-check the fast formulas against brute-force enumeration.
    OracleDiff {
        net: PathBuf,
        /// Optional CSV of inputs; a deterministic probe battery otherwise.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_PATH_CAP)]
        cap: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Generalization-bound constants and assembly.
    #[command(group = clap::ArgGroup::new("sigma_source").required(true).args(["b", "data"]))]
    Bound {
        #[arg(required_unless_present = "meta")]
        net: Option<PathBuf>,
        /// Loss whose Lipschitz constant enters the bound:
        /// xent, margin:GAMMA or const:L.
        #[arg(long, value_parser = parse_loss)]
        loss: Option<Loss>,
        /// CSV dataset for the empirical sigma estimate.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Architecture metadata D,P,K,M,din,dout; bypasses the network
        /// file entirely.
        #[arg(long, value_parser = parse_meta, conflicts_with = "net")]
        meta: Option<MetaArgs>,
        /// Upper bound on the input L-infinity norm; with --n it replaces
        /// the dataset-driven sigma by B * sqrt(n).
        #[arg(long = "B", requires = "n")]
        b: Option<f64>,
        /// Sample count (required with --B).
        #[arg(long = "n")]
        n: Option<usize>,
        /// L1 path-norm supplied directly instead of computed.
        #[arg(long, conflicts_with = "pathnorm_log10")]
        pathnorm: Option<f64>,
        /// log10 of the L1 path-norm supplied directly.
        #[arg(long = "pathnorm-log10")]
        pathnorm_log10: Option<f64>,
        /// Compute the network path-norm in the log domain; the bound is
        /// then reported as log10(bound).
        #[arg(long)]
        log_domain: bool,
        /// With --meta: treat the metadata as bias-free (no d_in + 1 shift).
        #[arg(long)]
        bias_free: bool,
    },
    /// Misclassification bound from margins on a labeled dataset.
    MarginBound {
        net: PathBuf,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        data: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let command_echo: String = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    match run(cli.command, command_echo, started) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn inputs_for(
    net: Option<&Path>,
    data: Option<&Path>,
    out: Option<&Path>,
) -> Result<Inputs, Error> {
    Ok(Inputs {
        network: net.map(FileDigest::of).transpose()?,
        dataset: data.map(FileDigest::of).transpose()?,
        out: out.map(|p| p.display().to_string()),
    })
}

fn run(command: Command, echo: String, started: Instant) -> Result<u8, Error> {
    match command {
        Command::Validate { net } => {
            let inputs = inputs_for(Some(&net), None, None)?;
            let text = std::fs::read_to_string(&net)?;
            let (arch, params) = io::parse_network(&text)?;
            let report = validate(&arch, Some(&params));
            let ok = report.ok;
            let results = json!({
                "neurons": arch.neuron_count(),
                "edges": arch.edge_count(),
                "d_in": arch.d_in(),
                "d_out": arch.d_out(),
                "ok": report.ok,
                "violations": report.violations,
            });
            eprintln!(
                "{}: {}",
                net.display(),
                if ok { "valid" } else { "INVALID" }
            );
            for v in &report.violations {
                eprintln!("  [{}] {}: {}", v.rule, v.subject, v.message);
            }
            RunReport::emit(echo, inputs, results, started);
            Ok(if ok { 0 } else { 1 })
        }

        Command::Pathnorm {
            net,
            q,
            r,
            exact,
            naive,
            log_domain,
            cap,
        } => {
            let inputs = inputs_for(Some(&net), None, None)?;
            let (arch, params) = io::load_network(&net)?;
            let spec = NormSpec::new(q, r)?;
            let (mode, value, overflow, log10) = if exact {
                let v = norms::path_norm_exact(&arch, &params, &spec, cap)?;
                ("exact", v, false, None)
            } else if naive {
                let v = norms::naive_forward_norm(&arch, &params, &spec)?;
                ("naive", v.value, v.overflow, None)
            } else if log_domain {
                let l = norms::path_norm_fast_log10(&arch, &params, &spec)?;
                ("log-domain", 10f64.powf(l), false, Some(l))
            } else {
                let v = norms::path_norm_fast(&arch, &params, &spec)?;
                ("fast", v.value, v.overflow, None)
            };
            let mut results = json!({
                "q": num(q),
                "r": num(r),
                "mode": mode,
                "pathnorm": num(value),
                "overflow": overflow,
            });
            if let Some(l) = log10 {
                results["pathnorm_log10"] = num(l);
            }
            eprintln!("pathnorm(q={q}, r={r}, {mode}) = {value}");
            RunReport::emit(echo, inputs, results, started);
            Ok(0)
        }

        Command::Normalize { net, q, out } => {
            let inputs = inputs_for(Some(&net), None, Some(&out))?;
            let (arch, params) = io::load_network(&net)?;
            let outcome = rescale::normalize(&arch, &params, q)?;
            io::save_network(&out, &arch, &outcome.params)?;
            let scales: serde_json::Map<String, serde_json::Value> = outcome
                .scales
                .iter()
                .map(|(id, l)| (id.to_string(), num(*l)))
                .collect();
            let results = json!({
                "q": num(q),
                "scales": scales,
                "zero_neurons": outcome.zero_neurons.iter().map(|i| i.to_string()).collect::<Vec<_>>(),
                "is_normalized": rescale::is_normalized(&arch, &outcome.params, q)?,
            });
            eprintln!(
                "normalized {} hidden neurons ({} dead), wrote {}",
                outcome.scales.len(),
                outcome.zero_neurons.len(),
                out.display()
            );
            RunReport::emit(echo, inputs, results, started);
            Ok(0)
        }

        Command::Lipschitz { net, r } => {
            let inputs = inputs_for(Some(&net), None, None)?;
            let (arch, params) = io::load_network(&net)?;
            let bound = norms::lipschitz_bound(&arch, &params, r)?;
            let results = json!({
                "r": num(r),
                "lipschitz_bound": num(bound.value),
                "overflow": bound.overflow,
            });
            eprintln!("lipschitz bound (r={r}) = {}", bound.value);
            RunReport::emit(echo, inputs, results, started);
            Ok(0)
        }

        Command::Opnorm { net, q, r } => {
            let inputs = inputs_for(Some(&net), None, None)?;
            let (arch, params) = io::load_network(&net)?;
            let spec = NormSpec::new(q, r)?;
            let value = norms::dag_operator_product(&arch, &params, &spec)?;
            let results = json!({
                "q": num(q),
                "r": num(r),
                "operator_product": num(value),
            });
            eprintln!("operator-norm product (q={q}, r={r}) = {value}");
            RunReport::emit(echo, inputs, results, started);
            Ok(0)
        }

        Command::Transform {
            net,
            op,
            out,
            force_bias_input,
        } => {
            let inputs = inputs_for(Some(&net), None, Some(&out))?;
            let (arch, params) = io::load_network(&net)?;
            let (new_arch, new_params, extra) = match op {
                TransformOp::AbsorbBiases => {
                    let absorbed = transforms::absorb_biases(&arch, &params, force_bias_input)?;
                    let extra = json!({
                        "bias_input": absorbed.bias_input.as_ref().map(|i| i.to_string()),
                        "bias_position": absorbed.bias_position,
                    });
                    (absorbed.architecture, absorbed.parameters, extra)
                }
                TransformOp::DropIdentity => {
                    let (a, p) = transforms::eliminate_identity_neurons(&arch, &params)?;
                    (a, p, json!({}))
                }
                TransformOp::PoolToId => {
                    (transforms::pool_to_identity(&arch), params.clone(), json!({}))
                }
            };
            io::save_network(&out, &new_arch, &new_params)?;
            let mut results = json!({
                "op": format!("{op:?}"),
                "neurons_before": arch.neuron_count(),
                "neurons_after": new_arch.neuron_count(),
                "edges_before": arch.edge_count(),
                "edges_after": new_arch.edge_count(),
            });
            if let serde_json::Value::Object(extra) = extra {
                results.as_object_mut().unwrap().extend(extra);
            }
            eprintln!(
                "{} -> {} neurons, {} -> {} edges, wrote {}",
                arch.neuron_count(),
                new_arch.neuron_count(),
                arch.edge_count(),
                new_arch.edge_count(),
                out.display()
            );
            RunReport::emit(echo, inputs, results, started);
            Ok(0)
        }

        Command::OracleDiff { net, data, cap, tol } => {
            let inputs = inputs_for(Some(&net), data.as_deref(), None)?;
            let (arch, params) = io::load_network(&net)?;
            let rows = match &data {
                Some(path) => io::load_dataset(path, arch.d_in(), Some(arch.d_out()))?.inputs,
                None => probe_battery(arch.d_in()),
            };

            let mut norm_checks = Vec::new();
            let mut worst = 0.0f64;
            for q in [1.0, 2.0, 4.0] {
                for r in [1.0, 2.0, f64::INFINITY] {
                    let spec = NormSpec::new(q, r)?;
                    let fast = norms::path_norm_fast(&arch, &params, &spec)?;
                    let exact = norms::path_norm_exact(&arch, &params, &spec, cap)?;
                    let diff = rel_diff(fast.value, exact);
                    worst = worst.max(diff);
                    norm_checks.push(json!({
                        "q": num(q),
                        "r": num(r),
                        "fast": num(fast.value),
                        "exact": num(exact),
                        "rel_diff": num(diff),
                    }));
                }
            }
            let mut forward_worst = 0.0f64;
            for row in &rows {
                let direct = forward::realize(&arch, &params, row)?;
                let via = paths::forward_via_lifting(&arch, &params, row, cap)?;
                for (a, b) in direct.iter().zip(&via) {
                    forward_worst = forward_worst.max(rel_diff(*a, *b));
                }
            }
            worst = worst.max(forward_worst);
            let pass = worst <= tol;
            let results = json!({
                "tolerance": tol,
                "norm_checks": norm_checks,
                "forward_inputs": rows.len(),
                "forward_max_rel_diff": num(forward_worst),
                "max_rel_diff": num(worst),
                "pass": pass,
            });
            eprintln!(
                "oracle-diff: max relative discrepancy {worst:.3e} ({})",
                if pass { "pass" } else { "FAIL" }
            );
            RunReport::emit(echo, inputs, results, started);
            Ok(if pass { 0 } else { 1 })
        }

        Command::Bound {
            net,
            loss,
            data,
            meta,
            b,
            n,
            pathnorm,
            pathnorm_log10,
            log_domain,
            bias_free,
        } => run_bound(BoundArgs {
            net,
            loss,
            data,
            meta,
            b,
            n,
            pathnorm,
            pathnorm_log10,
            log_domain,
            bias_free,
            echo,
            started,
        }),

        Command::MarginBound { net, gamma, data } => {
            let inputs = inputs_for(Some(&net), Some(&data), None)?;
            let (arch, params) = io::load_network(&net)?;
            let dataset = io::load_dataset(&data, arch.d_in(), Some(arch.d_out()))?;
            let labels = dataset.labels.clone().ok_or_else(|| Error::Parse {
                context: data.display().to_string(),
                message: "margin-bound needs a trailing label column".to_owned(),
            })?;
            let meta = ArchMeta::from_network(&arch, &params)?;
            let n = dataset.len();
            let variant = if meta.with_bias {
                bounds::SigmaVariant::CoordinateWithBias
            } else {
                bounds::SigmaVariant::SupNorm
            };
            let sigma = bounds::sigma_estimate(&dataset.inputs, variant)?;
            let c = bounds::bound_constant_c(&meta);
            let r1 = norms::path_norm_fast(&arch, &params, &NormSpec::new(1.0, 1.0)?)?;
            let outputs = forward::batch_realize(&arch, &params, &dataset.inputs)?;
            let mb = bounds::margin_bound(&outputs, &labels, gamma, sigma, n, c, r1.value)?;
            let results = json!({
                "gamma": gamma,
                "sigma": num(sigma),
                "n": n,
                "C": num(c),
                "pathnorm_l1": num(r1.value),
                "overflow": r1.overflow,
                "term1": num(mb.term1),
                "term2": num(mb.term2),
                "total": num(mb.total),
            });
            eprintln!(
                "margin bound (gamma={gamma}): {} + {} = {}",
                mb.term1, mb.term2, mb.total
            );
            RunReport::emit(echo, inputs, results, started);
            Ok(0)
        }
    }
}

fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs())
}

/// Deterministic inputs used by oracle-diff when no dataset is given:
/// zeros, all-ones, negated ones, and five pseudo-random vectors.
fn probe_battery(d_in: usize) -> Vec<Vec<f64>> {
    let mut rows = vec![
        vec![0.0; d_in],
        vec![1.0; d_in],
        vec![-1.0; d_in],
    ];
    let mut rng = SplitMix64::new(0xD1FF);
    for _ in 0..5 {
        rows.push((0..d_in).map(|_| rng.uniform(-3.0, 3.0)).collect());
    }
    rows
}

struct BoundArgs {
    net: Option<PathBuf>,
    loss: Option<Loss>,
    data: Option<PathBuf>,
    meta: Option<MetaArgs>,
    b: Option<f64>,
    n: Option<usize>,
    pathnorm: Option<f64>,
    pathnorm_log10: Option<f64>,
    log_domain: bool,
    bias_free: bool,
    echo: String,
    started: Instant,
}

fn run_bound(args: BoundArgs) -> Result<u8, Error> {
    let BoundArgs {
        net,
        loss,
        data,
        meta,
        b,
        n,
        pathnorm,
        pathnorm_log10,
        log_domain,
        bias_free,
        echo,
        started,
    } = args;

    let inputs = inputs_for(net.as_deref(), data.as_deref(), None)?;
    // clap guarantees exactly one of `net` / `--meta`.
    let loaded = match &net {
        Some(path) => Some(io::load_network(path)?),
        None => None,
    };

    let arch_meta = match (&loaded, meta) {
        (Some((arch, params)), _) => ArchMeta::from_network(arch, params)?,
        (None, Some(m)) => ArchMeta {
            depth: m.depth,
            pool_types: m.pool_types,
            max_kernel: m.max_kernel,
            pool_layers: m.pool_layers,
            d_in: m.d_in,
            d_out: m.d_out,
            with_bias: !bias_free,
            pools_layered: true,
        },
        (None, None) => unreachable!(),
    };

    // Scale statistic: either B * sqrt(n) from a supplied input bound, or
    // the empirical estimate over a dataset (clap requires one of the two).
    let (sigma, n, sigma_source) = match (b, n, &data) {
        (Some(b), Some(n), _) => (b * (n as f64).sqrt(), n, "B * sqrt(n)"),
        (None, _, Some(path)) => {
            let dataset = io::load_dataset(path, arch_meta.d_in, Some(arch_meta.d_out))?;
            let variant = if arch_meta.with_bias {
                bounds::SigmaVariant::CoordinateWithBias
            } else {
                bounds::SigmaVariant::SupNorm
            };
            let sigma = bounds::sigma_estimate(&dataset.inputs, variant)?;
            (sigma, dataset.len(), "empirical sigma")
        }
        _ => unreachable!("clap enforces a sigma source"),
    };

    let c = bounds::bound_constant_c(&arch_meta);
    let sharpened = bounds::bound_constant_c_sharpened(&arch_meta);
    let coefficient = 4.0 * sigma / n as f64 * c;
    let coefficient_sharpened = 4.0 * sigma / n as f64 * sharpened.value;

    // L1 path-norm: supplied, or computed from the network.
    let mut norm_plain: Option<(f64, bool)> = pathnorm.map(|v| (v, false));
    let mut norm_log10: Option<f64> = pathnorm_log10;
    if norm_plain.is_none() && norm_log10.is_none() {
        if let Some((arch, params)) = &loaded {
            let spec = NormSpec::new(1.0, 1.0)?;
            if log_domain {
                norm_log10 = Some(norms::path_norm_fast_log10(arch, params, &spec)?);
            } else {
                let v = norms::path_norm_fast(arch, params, &spec)?;
                norm_plain = Some((v.value, v.overflow));
            }
        }
    }

    let mut results = json!({
        "sigma": num(sigma),
        "sigma_source": sigma_source,
        "n": n,
        "meta": arch_meta,
        "C": num(c),
        "C_sharpened": num(sharpened.value),
        "C_sharpened_applicable": sharpened.applicable,
        "coefficient": num(coefficient),
        "coefficient_sharpened": num(coefficient_sharpened),
    });
    let obj = results.as_object_mut().unwrap();
    if let Some(loss) = loss {
        obj.insert("L".to_owned(), num(loss.lipschitz_constant()));
    }
    if let Some((v, overflow)) = norm_plain {
        obj.insert("pathnorm_l1".to_owned(), num(v));
        obj.insert("overflow".to_owned(), json!(overflow));
        if let Some(loss) = loss {
            obj.insert(
                "bound".to_owned(),
                num(bounds::generalization_bound(
                    sigma,
                    n,
                    loss.lipschitz_constant(),
                    c,
                    v,
                )),
            );
        }
    }
    if let Some(l10) = norm_log10 {
        obj.insert("pathnorm_l1_log10".to_owned(), num(l10));
        if let Some(loss) = loss {
            // log10 of (4 sigma / n) * L * C * pathnorm.
            let bound_log10 = (4.0 * sigma / n as f64).log10()
                + loss.lipschitz_constant().log10()
                + c.log10()
                + l10;
            obj.insert("bound_log10".to_owned(), num(bound_log10));
        }
    }

    eprintln!(
        "sigma = {sigma:.6} ({sigma_source}), C = {c:.4}, 4*sigma*C/n = {coefficient:.6}"
    );
    if let Some(serde_json::Value::Number(bound)) = obj.get("bound") {
        eprintln!("bound = {bound}");
    }
    RunReport::emit(echo, inputs, results, started);
    Ok(0)
}
