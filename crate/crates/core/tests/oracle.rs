//! Property suite: structural invariants and exact symmetries checked over
//! randomly sampled networks, with brute-force enumeration as the referee.

mod common;

use common::*;
use pathgauge_core::bounds;
use pathgauge_core::forward;
use pathgauge_core::graph::{validate, Activation, Architecture, Parameters};
use pathgauge_core::io;
use pathgauge_core::norms::{self, NormSpec};
use pathgauge_core::paths::{self, DEFAULT_PATH_CAP};
use pathgauge_core::rescale;
use pathgauge_core::sampler::{self, NetConfig, SplitMix64};
use pathgauge_core::transforms;
use proptest::prelude::*;

fn sample(seed: u64) -> (Architecture, Parameters) {
    sampler::sample_network(&mut SplitMix64::new(seed), &NetConfig::default())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn topological_order_is_edge_respecting_permutation(seed: u64) {
        let (arch, _) = sample(seed);
        let order = arch.topological_order().unwrap();
        let mut seen = vec![false; arch.neuron_count()];
        for &v in &order {
            seen[v] = true;
        }
        prop_assert!(seen.iter().all(|&s| s));
        let mut position = vec![0usize; arch.neuron_count()];
        for (i, &v) in order.iter().enumerate() {
            position[v] = i;
        }
        for &(f, t) in arch.edges() {
            prop_assert!(position[f] < position[t]);
        }
        prop_assert_eq!(order, arch.topological_order().unwrap());
    }

    #[test]
    fn depth_is_at_least_one(seed: u64) {
        let (arch, _) = sample(seed);
        prop_assert!(arch.depth().unwrap() >= 1);
    }

    #[test]
    fn subgraph_keeps_exactly_the_ancestors(seed: u64, pick: usize) {
        let (arch, params) = sample(seed);
        let v = pick % arch.neuron_count();
        let sub = arch.subgraph_to(arch.id(v).as_str()).unwrap();
        // Unique output is v.
        prop_assert_eq!(sub.outputs().len(), 1);
        prop_assert_eq!(sub.id(sub.outputs()[0]).as_str(), arch.id(v).as_str());
        // Every kept neuron reaches v: reverse reachability from v covers sub.
        let target = sub.index_of(arch.id(v).as_str()).unwrap();
        let mut reach = vec![false; sub.neuron_count()];
        reach[target] = true;
        let mut stack = vec![target];
        while let Some(w) = stack.pop() {
            for &u in sub.antecedents(w) {
                if !reach[u] {
                    reach[u] = true;
                    stack.push(u);
                }
            }
        }
        prop_assert!(reach.iter().all(|&r| r));
        // Inputs of the subgraph are inputs of the original.
        for &i in sub.inputs() {
            let orig = arch.index_of(sub.id(i).as_str()).unwrap();
            prop_assert!(arch.is_input(orig));
        }
        // Path set of the subgraph = paths of the original ending at v.
        let sub_params = params.restricted_to(&arch, &sub).unwrap();
        let sub_lifting = paths::path_lifting(&sub, &sub_params, DEFAULT_PATH_CAP).unwrap();
        let full = paths::enumerate_paths_ending_at(&arch, v, DEFAULT_PATH_CAP);
        prop_assert!(full.is_ok());
        prop_assert_eq!(sub_lifting.len(), full.unwrap().len());
    }

    #[test]
    fn pool_stats_survive_relabeling(seed: u64) {
        let mut rng = SplitMix64::new(seed);
        let (arch, params) = sampler::sample_network(&mut rng, &NetConfig::default());
        let (renamed, _, _) = sampler::relabel_network(&mut rng, &arch, &params);
        let a = arch.pool_stats().unwrap();
        let b = renamed.pool_stats().unwrap();
        prop_assert_eq!(a.distinct_orders, b.distinct_orders);
        prop_assert_eq!(a.max_kernel, b.max_kernel);
        prop_assert_eq!(a.pool_layer_count, b.pool_layer_count);
        prop_assert_eq!(arch.depth().unwrap(), renamed.depth().unwrap());
    }

    #[test]
    fn path_count_matches_enumeration(seed: u64) {
        let (arch, _) = sample(seed);
        let count = paths::path_count(&arch).unwrap();
        if count <= 20_000 {
            let enumerated = paths::enumerate_paths(&arch, 20_000).unwrap();
            prop_assert_eq!(count, enumerated.len() as u128);
        }
    }

    #[test]
    fn activation_rows_have_at_most_one_nonzero(seed: u64) {
        let mut rng = SplitMix64::new(seed);
        let (arch, params) = sampler::sample_network(&mut rng, &NetConfig::default());
        if paths::path_count(&arch).unwrap() > 5_000 {
            return Ok(());
        }
        let x = sampler::sample_input(&mut rng, arch.d_in(), -3.0, 3.0);
        let acts = paths::path_activations(&arch, &params, &x, DEFAULT_PATH_CAP).unwrap();
        for row in acts.to_dense() {
            prop_assert!(row.iter().map(|&b| b as usize).sum::<usize>() <= 1);
        }
    }

    #[test]
    fn binary_rescaling_is_bitwise_invisible(seed: u64, pick: usize) {
        let mut rng = SplitMix64::new(seed);
        let (arch, params) = sampler::sample_network(&mut rng, &NetConfig::default());
        let hidden: Vec<usize> = (0..arch.neuron_count()).filter(|&v| arch.is_hidden(v)).collect();
        if hidden.is_empty() {
            return Ok(());
        }
        let v = hidden[pick % hidden.len()];
        let scaled = rescale::apply_rescaling(&arch, &params, arch.id(v).as_str(), 2.0).unwrap();
        let x = sampler::sample_input(&mut rng, arch.d_in(), -3.0, 3.0);
        let before = forward::realize(&arch, &params, &x).unwrap();
        let after = forward::realize(&arch, &scaled, &x).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&before), bits(&after));
        // The lifting is bitwise invariant too: multiplying by 2 and
        // dividing by 2 are exact.
        let l_before = paths::path_lifting(&arch, &params, DEFAULT_PATH_CAP).unwrap();
        let l_after = paths::path_lifting(&arch, &scaled, DEFAULT_PATH_CAP).unwrap();
        prop_assert_eq!(bits(l_before.values()), bits(l_after.values()));
    }

    #[test]
    fn naive_norm_equals_fast_on_pool_free_nets(seed: u64) {
        let (arch, params) =
            sampler::sample_network(&mut SplitMix64::new(seed), &NetConfig::default().pool_free());
        for (q, r) in [(1.0, 1.0), (2.0, f64::INFINITY)] {
            let spec = NormSpec::new(q, r).unwrap();
            let fast = norms::path_norm_fast(&arch, &params, &spec).unwrap();
            let naive = norms::naive_forward_norm(&arch, &params, &spec).unwrap();
            prop_assert_eq!(fast.value.to_bits(), naive.value.to_bits());
        }
    }

    #[test]
    fn mixed_norm_collapses_to_flat_norm_when_q_equals_r(seed: u64) {
        let (arch, params) = sample(seed);
        if paths::path_count(&arch).unwrap() > 20_000 {
            return Ok(());
        }
        let lifting = paths::path_lifting(&arch, &params, DEFAULT_PATH_CAP).unwrap();
        for q in [1.0, 2.0] {
            let spec = NormSpec::new(q, q).unwrap();
            let fast = norms::path_norm_fast(&arch, &params, &spec).unwrap().value;
            let flat = flat_norm(&lifting, q);
            prop_assert!(
                rel_err(fast, flat) <= 1e-12,
                "q = {}: {} vs {}", q, fast, flat
            );
        }
    }

    #[test]
    fn operator_product_dominates_and_matches_brute_force(seed: u64) {
        let (arch, params) = sample(seed);
        if paths::path_count(&arch).unwrap() > 10_000 {
            return Ok(());
        }
        let enumerated = paths::enumerate_paths(&arch, 10_000).unwrap();
        for q in [1.0, 2.0] {
            for r in [1.0, f64::INFINITY] {
                let spec = NormSpec::new(q, r).unwrap();
                let dp = norms::dag_operator_product(&arch, &params, &spec).unwrap();
                // Brute force: per-output max of the pathwise aggregate.
                let mut per_output: Vec<f64> = Vec::new();
                for &o in arch.outputs() {
                    let best = enumerated
                        .iter()
                        .filter(|p| p.end() == o)
                        .map(|p| norms::pathwise_product(&arch, &params, p, q).unwrap())
                        .fold(f64::NEG_INFINITY, f64::max);
                    per_output.push(best);
                }
                let brute = norms::vector_norm(&per_output, r);
                prop_assert!(rel_err(dp, brute) <= 1e-12, "q={} r={}: {} vs {}", q, r, dp, brute);

                let phi = norms::path_norm_exact(&arch, &params, &spec, DEFAULT_PATH_CAP).unwrap();
                prop_assert!(phi <= dp * (1.0 + 1e-9), "q={} r={}: {} > {}", q, r, phi, dp);
            }
        }
    }

    #[test]
    fn sublifting_recursion_matches_enumeration(seed: u64) {
        let (arch, params) = sample(seed);
        if paths::path_count(&arch).unwrap() > 5_000 {
            return Ok(());
        }
        for q in [1.0, 2.0] {
            let sub = rescale::sublifting_norms(&arch, &params, q).unwrap();
            for &o in arch.outputs() {
                let sub_arch = arch.subgraph_to(arch.id(o).as_str()).unwrap();
                let sub_params = params.restricted_to(&arch, &sub_arch).unwrap();
                let lifting = paths::path_lifting(&sub_arch, &sub_params, DEFAULT_PATH_CAP).unwrap();
                let direct = flat_norm(&lifting, q);
                prop_assert!(rel_err(sub[o], direct) <= 1e-11, "{} vs {}", sub[o], direct);
            }
        }
    }

    #[test]
    fn network_files_round_trip_bitwise(seed: u64) {
        let (arch, params) = sample(seed);
        let text = io::network_to_string(&arch, &params).unwrap();
        let (arch2, params2) = io::parse_network(&text).unwrap();
        prop_assert!(validate(&arch2, Some(&params2)).ok);
        prop_assert_eq!(arch.neurons(), arch2.neurons());
        prop_assert_eq!(arch.edges(), arch2.edges());
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(params.weights()), bits(params2.weights()));
        prop_assert_eq!(bits(params.biases()), bits(params2.biases()));
    }

    #[test]
    fn margin_loss_is_a_unit_interval_relaxation(m1 in -10.0f64..10.0, m2 in -10.0f64..10.0, gamma in 0.01f64..10.0) {
        let out1 = [m1, 0.0];
        let out2 = [m2, 0.0];
        let l1 = bounds::margin_loss(&out1, 1, gamma).unwrap();
        let l2 = bounds::margin_loss(&out2, 1, gamma).unwrap();
        prop_assert!((0.0..=1.0).contains(&l1));
        if gamma < m1 {
            prop_assert_eq!(l1, 0.0);
        }
        if m1 < 0.0 {
            prop_assert_eq!(l1, 1.0);
        }
        // Non-increasing in the margin.
        if m1 <= m2 {
            prop_assert!(l1 >= l2);
        }
    }

    #[test]
    fn cross_entropy_is_nonnegative_and_stable(shift in -500.0f64..500.0, spread in 0.0f64..50.0) {
        let logits = [shift + spread, shift, shift - spread];
        for label in 1..=3usize {
            let loss = bounds::cross_entropy(&logits, label).unwrap();
            prop_assert!(loss >= -1e-12, "loss {}", loss);
            prop_assert!(loss.is_finite());
        }
    }
}

#[test]
fn forward_via_lifting_spot_check() {
    let mut rng = SplitMix64::new(0xFACADE);
    let cfg = NetConfig::default();
    for _ in 0..50 {
        let (arch, params) = sampler::sample_network(&mut rng, &cfg);
        for _ in 0..3 {
            let x = sampler::sample_input(&mut rng, arch.d_in(), -3.0, 3.0);
            let direct = forward::realize(&arch, &params, &x).unwrap();
            let via = paths::forward_via_lifting(&arch, &params, &x, DEFAULT_PATH_CAP).unwrap();
            assert_all_close(&direct, &via, 1e-9, "forward via lifting");
        }
    }
}

#[test]
fn piecewise_linearity_between_same_trace_inputs() {
    let mut rng = SplitMix64::new(0xC0FFEE);
    let cfg = NetConfig::default();
    let mut checked = 0usize;
    'outer: for _ in 0..400 {
        let (arch, params) = sampler::sample_network(&mut rng, &cfg);
        let x0 = sampler::sample_input(&mut rng, arch.d_in(), -3.0, 3.0);
        // Look nearby for an input with the identical trace.
        let base = forward::trace(&arch, &params, &x0).unwrap();
        for _ in 0..5 {
            let x1: Vec<f64> = x0
                .iter()
                .map(|&xi| xi + rng.uniform(-0.05, 0.05))
                .collect();
            let other = forward::trace(&arch, &params, &x1).unwrap();
            if base.edge_activations != other.edge_activations
                || base.neuron_activations != other.neuron_activations
            {
                continue;
            }
            let y0 = base.outputs(&arch);
            let y1 = other.outputs(&arch);
            for t in [0.25, 0.5, 0.75] {
                let xt: Vec<f64> = x0.iter().zip(&x1).map(|(&a, &b)| a + t * (b - a)).collect();
                let yt = forward::realize(&arch, &params, &xt).unwrap();
                let expect: Vec<f64> =
                    y0.iter().zip(&y1).map(|(&a, &b)| a + t * (b - a)).collect();
                assert_all_close(&yt, &expect, 1e-9, "affine along same-trace segment");
            }
            checked += 1;
            if checked >= 60 {
                break 'outer;
            }
            break;
        }
    }
    assert!(checked >= 20, "only {checked} same-trace segments found");
}

#[test]
fn generic_rescaling_preserves_everything_within_tolerance() {
    let mut rng = SplitMix64::new(0xBEEF01);
    let cfg = NetConfig::default();
    for _ in 0..60 {
        let (arch, params) = sampler::sample_network(&mut rng, &cfg);
        let hidden: Vec<usize> = (0..arch.neuron_count())
            .filter(|&v| arch.is_hidden(v))
            .collect();
        if hidden.is_empty() {
            continue;
        }
        let v = hidden[rng.below(hidden.len())];
        let lambda = rng.uniform(0.3, 3.0);
        let scaled = rescale::apply_rescaling(&arch, &params, arch.id(v).as_str(), lambda).unwrap();

        let l_before = paths::path_lifting(&arch, &params, DEFAULT_PATH_CAP).unwrap();
        let l_after = paths::path_lifting(&arch, &scaled, DEFAULT_PATH_CAP).unwrap();
        assert_all_close(l_before.values(), l_after.values(), 1e-12, "lifting under rescaling");

        for (q, r) in [(1.0, 1.0), (2.0, f64::INFINITY)] {
            let spec = NormSpec::new(q, r).unwrap();
            let a = norms::path_norm_fast(&arch, &params, &spec).unwrap().value;
            let b = norms::path_norm_fast(&arch, &scaled, &spec).unwrap().value;
            assert!(rel_err(a, b) <= 1e-12, "path norm under rescaling: {a} vs {b}");
        }
    }
}

#[test]
fn transforms_preserve_realize_and_l1_norm() {
    let mut rng = SplitMix64::new(0xABCDEF);
    let cfg = NetConfig::default();
    for _ in 0..60 {
        let (arch, sampled) = sampler::sample_network(&mut rng, &cfg);
        if paths::path_count(&arch).unwrap() > 20_000 {
            continue;
        }
        let params = zero_pool_biases(&arch, &sampled);
        let l1 = lifting_l1(&arch, &params, DEFAULT_PATH_CAP);

        let absorbed = transforms::absorb_biases(&arch, &params, false).unwrap();
        let l1_absorbed = lifting_l1(&absorbed.architecture, &absorbed.parameters, DEFAULT_PATH_CAP);
        assert!(rel_err(l1, l1_absorbed) <= 1e-12, "{l1} vs {l1_absorbed}");

        let (lean, lean_params) =
            transforms::eliminate_identity_neurons(&absorbed.architecture, &absorbed.parameters)
                .unwrap();
        for v in 0..lean.neuron_count() {
            if lean.is_hidden(v) && lean.activation(v) == Activation::Identity {
                // Only identity neurons feeding a pool may survive.
                assert!(
                    lean.successors(v).iter().any(|&w| lean.activation(w).is_pool()),
                    "eliminable hidden identity neuron survived"
                );
            }
        }
        assert!(lean.depth().unwrap() <= absorbed.architecture.depth().unwrap());
        // Contracting an identity neuron maps paths one-to-one unless a
        // bypass edge merges with an existing one; merges show up as a drop
        // in the path count and can only shrink the L1 norm (weights of
        // different signs add on the merged edge).
        let merge_free = paths::path_count(&absorbed.architecture).unwrap()
            == paths::path_count(&lean).unwrap();
        let l1_lean = lifting_l1(&lean, &lean_params, DEFAULT_PATH_CAP);
        if merge_free {
            assert!(rel_err(l1, l1_lean) <= 1e-12, "{l1} vs {l1_lean}");
        } else {
            assert!(l1_lean <= l1 * (1.0 + 1e-12), "{l1_lean} > {l1}");
        }

        for _ in 0..5 {
            let x = sampler::sample_input(&mut rng, arch.d_in(), -3.0, 3.0);
            let y = forward::realize(&arch, &params, &x).unwrap();
            let ya =
                forward::realize(&absorbed.architecture, &absorbed.parameters, &absorbed.augment(&x))
                    .unwrap();
            assert_all_close(&y, &ya, 1e-9, "realize after bias absorption");
            let yl = forward::realize(&lean, &lean_params, &absorbed.augment(&x)).unwrap();
            assert_all_close(&y, &yl, 1e-9, "realize after identity elimination");
        }
    }
}

#[test]
fn pool_rewrite_dominates_on_nonnegative_weights() {
    // On |theta| with the all-ones input, replacing pools by identity can
    // only increase neuron values (a sum of non-negative terms is at least
    // any single order statistic of them).
    let mut rng = SplitMix64::new(0x5EED);
    let cfg = NetConfig::default();
    for _ in 0..100 {
        let (arch, params) = sampler::sample_network(&mut rng, &cfg);
        let abs = params.map_values(f64::abs);
        let ones = vec![1.0; arch.d_in()];
        let original = forward::realize(&arch, &abs, &ones).unwrap();
        let rewritten =
            forward::realize(&transforms::pool_to_identity(&arch), &abs, &ones).unwrap();
        for (a, b) in original.iter().zip(&rewritten) {
            assert!(b >= a, "rewrite decreased an output: {b} < {a}");
        }
    }
}

#[test]
fn normalize_spot_check_all_q() {
    let mut rng = SplitMix64::new(0x9021);
    let cfg = NetConfig::default();
    for _ in 0..40 {
        let (arch, params) = sampler::sample_network(&mut rng, &cfg);
        for q in [1.0, 2.0, f64::INFINITY] {
            let outcome = rescale::normalize(&arch, &params, q).unwrap();
            assert!(rescale::is_normalized(&arch, &outcome.params, q).unwrap());
            for _ in 0..3 {
                let x = sampler::sample_input(&mut rng, arch.d_in(), -3.0, 3.0);
                let before = forward::realize(&arch, &params, &x).unwrap();
                let after = forward::realize(&arch, &outcome.params, &x).unwrap();
                assert_all_close(&before, &after, 1e-9, "realize under normalization");
            }
        }
    }
}
