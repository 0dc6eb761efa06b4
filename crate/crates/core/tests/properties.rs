use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gaelab_core::alignment::{misalignment, perturb_features, span_equal};
use gaelab_core::eval::{auc, sample_negatives};
use gaelab_core::graph::{diffusion, io, l1_normalize_columns, split_edges, split_nodes, Graph, SplitItems};
use gaelab_core::linalg::{least_squares, thin_svd, DenseMatrix, SparseMatrix};
use gaelab_core::model::{decode_logits, encode, loss, Embedding, EncoderParams, FeatureInput, Variant};
use gaelab_core::synth::{generate, SynthConfig};
use gaelab_core::theory;

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn random_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edge_list(&edges, n, None).unwrap()
}

fn rel_frob(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.sub(b).unwrap().frobenius_norm() / a.frobenius_norm().max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn matmul_is_associative(seed in any::<u64>(), m in 1usize..12, k in 1usize..12, l in 1usize..12, p in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = (gaussian(m, k, &mut rng), gaussian(k, l, &mut rng), gaussian(l, p, &mut rng));
        let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
        let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
        prop_assert!(rel_frob(&left, &right) < 1e-9);
    }

    #[test]
    fn spmm_matches_dense(seed in any::<u64>(), m in 1usize..20, k in 1usize..20, p in 1usize..8, fill in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dense = DenseMatrix::from_fn(m, k, |_, _| if rng.random_bool(fill) { rng.random_range(-2.0..2.0) } else { 0.0 });
        let s = SparseMatrix::from_dense(&dense);
        let x = gaussian(k, p, &mut rng);
        let got = s.spmm(&x).unwrap();
        let want = dense.matmul(&x).unwrap();
        prop_assert!(got.max_abs_diff(&want) < 1e-10);
    }

    #[test]
    fn least_squares_beats_zero(seed in any::<u64>(), m in 1usize..15, n in 1usize..15, rank_cut in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = gaussian(m, n, &mut rng);
        // duplicate columns to make some instances rank deficient
        for j in 0..rank_cut.min(n.saturating_sub(1)) {
            let c = a.column(0);
            a.set_column(j + 1, &c);
        }
        let b = gaussian(m, 2, &mut rng);
        let ls = least_squares(&a, &b).unwrap();
        let fit = a.matmul(&ls.solution).unwrap();
        let r = b.sub(&fit).unwrap().frobenius_norm();
        prop_assert!(r <= b.frobenius_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn auc_is_rank_invariant_and_antisymmetric(seed in any::<u64>(), np in 1usize..40, nn in 1usize..40, levels in 2u32..50) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pos: Vec<f64> = (0..np).map(|_| rng.random_range(0..levels) as f64 / levels as f64).collect();
        let neg: Vec<f64> = (0..nn).map(|_| rng.random_range(0..levels) as f64 / levels as f64).collect();
        let base = auc(&pos, &neg).unwrap();
        prop_assert!((0.0..=1.0).contains(&base));
        for f in [|v: f64| 3.0 * v - 7.0, |v: f64| v.exp(), |v: f64| v.powi(3)] {
            let p2: Vec<f64> = pos.iter().map(|&v| f(v)).collect();
            let n2: Vec<f64> = neg.iter().map(|&v| f(v)).collect();
            prop_assert_eq!(auc(&p2, &n2).unwrap(), base);
        }
        prop_assert_eq!(base + auc(&neg, &pos).unwrap(), 1.0);
    }

    #[test]
    fn decoder_is_exactly_symmetric(seed in any::<u64>(), n in 1usize..25, d in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let logits = decode_logits(&Embedding::new(gaussian(n, d, &mut rng)).unwrap());
        prop_assert_eq!(logits.transpose(), logits);
    }

    #[test]
    fn linear_embedding_depends_on_product_only(seed in any::<u64>(), n in 2usize..15, g in 1usize..6, h in 1usize..8, d in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = random_graph(n, 0.3, &mut rng);
        let diff = diffusion(&graph);
        let x = FeatureInput::Dense(gaussian(n, g, &mut rng));
        let (w0, w1) = (gaussian(g, h, &mut rng), gaussian(h, d, &mut rng));
        let product = w0.matmul(&w1).unwrap();
        let a = encode(&EncoderParams::new(Variant::Linear, w0, w1).unwrap(), &diff, &x).unwrap();
        let b = encode(&EncoderParams::new(Variant::Linear, product, DenseMatrix::identity(d)).unwrap(), &diff, &x).unwrap();
        prop_assert!(a.matrix().max_abs_diff(b.matrix()) <= 1e-12 * a.matrix().max_abs().max(1.0));
    }

    #[test]
    fn loss_is_orthogonally_invariant(seed in any::<u64>(), n in 2usize..20, d in 1usize..6, lambda in 0.0f64..0.1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = random_graph(n, 0.3, &mut rng);
        let z = gaussian(n, d, &mut rng);
        let q = thin_svd(&gaussian(d, d, &mut rng)).unwrap().u;
        let zq = z.matmul(&q).unwrap();
        let (l1, l2) = (loss(graph.adjacency(), &z, lambda).unwrap(), loss(graph.adjacency(), &zq, lambda).unwrap());
        prop_assert!((l1 - l2).abs() <= 1e-10 * l1.abs().max(1.0));
    }

    #[test]
    fn diffusion_is_symmetric_and_contractive(seed in any::<u64>(), n in 1usize..25, p in 0.0f64..0.6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = random_graph(n, p, &mut rng);
        let a = diffusion(&graph).to_dense();
        prop_assert!(a.max_abs_diff(&a.transpose()) <= 1e-12);
        // power iteration: each step can only shrink the vector
        let mut v = gaussian(n, 1, &mut rng);
        for _ in 0..60 {
            let w = a.matmul(&v).unwrap();
            let (nv, nw) = (v.frobenius_norm(), w.frobenius_norm());
            prop_assert!(nw <= nv * (1.0 + 1e-10));
            if nw == 0.0 {
                break;
            }
            v = w.scale(1.0 / nw);
        }
    }

    #[test]
    fn edge_split_partitions_edges(seed in any::<u64>(), n in 12usize..40, p in 0.15f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = random_graph(n, p, &mut rng);
        prop_assume!(graph.edge_count() >= 10);
        let (train, plan) = split_edges(&graph, seed).unwrap();
        let SplitItems::Edges { train: tr, val, test } = plan.items else { unreachable!() };
        let all: BTreeSet<_> = tr.iter().chain(&val).chain(&test).copied().collect();
        prop_assert_eq!(all.len(), tr.len() + val.len() + test.len());
        prop_assert_eq!(all, graph.edges().into_iter().collect::<BTreeSet<_>>());
        prop_assert_eq!(train.edges(), { let mut t = tr.clone(); t.sort(); t });
    }

    #[test]
    fn node_split_keeps_graph_invariants(seed in any::<u64>(), n in 12usize..40, p in 0.05f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = random_graph(n, p, &mut rng);
        let (train, plan) = split_nodes(&graph, seed).unwrap();
        let SplitItems::Nodes { train: nodes, .. } = plan.items else { unreachable!() };
        prop_assert_eq!(train.n(), nodes.len());
        prop_assert!(train.adjacency().is_symmetric());
        for i in 0..train.n() {
            prop_assert!(train.has_edge(i, i));
            for j in 0..train.n() {
                prop_assert_eq!(train.has_edge(i, j), graph.has_edge(nodes[i], nodes[j]));
            }
        }
    }

    #[test]
    fn edge_dump_round_trips(seed in any::<u64>(), n in 1usize..30, p in 0.0f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = random_graph(n, p, &mut rng);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("edges.txt");
        io::write_edge_list(&path, &graph).unwrap();
        let again = Graph::from_edge_list(&io::read_edge_list(&path).unwrap(), n, None).unwrap();
        prop_assert_eq!(again, graph);
    }

    #[test]
    fn misalignment_ignores_column_order(seed in any::<u64>(), n in 4usize..25, g in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = gaussian(n, g, &mut rng);
        let mut perm: Vec<usize> = (0..g).collect();
        perm.reverse();
        perm.rotate_left(rng.random_range(0..g));
        let graph = random_graph(n, 0.3, &mut rng);
        let a = misalignment(&graph.clone().with_features(Some(x.clone())).unwrap()).unwrap();
        let b = misalignment(&graph.with_features(Some(x.select_columns(&perm))).unwrap()).unwrap();
        prop_assert!((a.d_algn - b.d_algn).abs() <= 1e-9 * a.d_algn.abs().max(1.0));
        prop_assert!((a.subspace_angle_sum - b.subspace_angle_sum).abs() <= 1e-7);
    }

    #[test]
    fn perturbed_features_are_orthonormal(seed in any::<u64>(), n in 10usize..60, g in 1usize..8, ov_frac in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = gaussian(n, g, &mut rng);
        let overlap = (ov_frac * g as f64).round() as usize;
        let out = perturb_features(&x, overlap).unwrap();
        prop_assert_eq!(out.shape(), (n, g));
        let gram = out.t_matmul(&out).unwrap();
        prop_assert!(gram.max_abs_diff(&DenseMatrix::identity(g)) < 1e-8);
    }

    #[test]
    fn l1_normalization_preserves_span_checks(seed in any::<u64>(), n in 4usize..20, g in 1usize..5, in_span in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = gaussian(n, g, &mut rng);
        let f = if in_span { u.matmul(&gaussian(g, g, &mut rng)).unwrap() } else { gaussian(n, g, &mut rng) };
        let before = span_equal(&u, &f, 1e-8).unwrap();
        let after = span_equal(&u, &l1_normalize_columns(&f), 1e-8).unwrap();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn negative_sampling_is_seeded(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = random_graph(80, 0.05, &mut rng);
        let pos = graph.edges();
        let a = sample_negatives(&graph, &pos, seed).unwrap();
        let b = sample_negatives(&graph, &pos, seed).unwrap();
        let c = sample_negatives(&graph, &pos, seed ^ 1).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_ne!(a.negatives, c.negatives);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn thin_svd_reconstructs(seed in any::<u64>(), m in 1usize..=200, n in 1usize..=64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = gaussian(m.max(n), n, &mut rng);
        let svd = thin_svd(&a).unwrap();
        prop_assert!(rel_frob(&a, &svd.reconstruct()) < 1e-8);
        let k = svd.u.cols();
        prop_assert!(svd.u.t_matmul(&svd.u).unwrap().max_abs_diff(&DenseMatrix::identity(k)) < 1e-10);
        prop_assert!(svd.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn generator_invariants_and_reproducibility(seed in any::<u64>()) {
        let cfg = SynthConfig { n: 150, g: 8, density_low: 0.03, density_high: 0.06, seed };
        let g = generate(&cfg).unwrap();
        let a = g.adjacency();
        prop_assert!(a.is_symmetric());
        prop_assert!(a.values().iter().all(|&v| v == 1.0));
        prop_assert!((0..g.n()).all(|i| g.has_edge(i, i)));
        let density = 2.0 * g.edge_count() as f64 / (150.0 * 149.0);
        prop_assert!((0.03..=0.06).contains(&density));
        prop_assert_eq!(generate(&cfg).unwrap(), g);
    }

    #[test]
    fn misalignment_grows_as_overlap_shrinks(seed in any::<u64>()) {
        let cfg = SynthConfig { n: 300, g: 16, density_low: 0.02, density_high: 0.04, seed };
        let g = generate(&cfg).unwrap();
        let x = g.features().unwrap().clone();
        let mut prev = f64::NEG_INFINITY;
        for ov in [16, 8, 4, 2, 0] {
            let h = g.clone().with_features(Some(perturb_features(&x, ov).unwrap())).unwrap();
            let m = misalignment(&h).unwrap().subspace_angle_sum;
            prop_assert!(m > prev, "overlap {ov}: {m} <= {prev}");
            prev = m;
        }
    }

    #[test]
    fn theory_suites_hold(seed in any::<u64>()) {
        for r in theory::linearization_suite(seed, 8).unwrap()
            .into_iter()
            .chain(theory::reparameterization_suite(seed, 10, 1e-8).unwrap())
            .chain(theory::recoverability_suite(seed, 10, 1e-8).unwrap())
            .chain(theory::obstruction_suite(seed, 10, 1e-8).unwrap())
        {
            prop_assert_eq!(r.verdict(), theory::Verdict::Pass, "{}", r);
        }
    }
}
