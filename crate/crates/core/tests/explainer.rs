use std::sync::OnceLock;

use pathwise::baselines::edge_mask_explainer;
use pathwise::graphio::{generate_synthetic, Dataset, Graph, SyntheticSpec};
use pathwise::pathexplainer::{
    apply_mask, edge_weights, explain, extract_subgraph, learn_mask, masked_prediction, weighted_prediction,
    MaskConfig, PathwayMask,
};
use pathwise::pathmamba::{fit, Model, ModelConfig, Prepared, TrainConfig};
use pathwise::pathsampler::{rwse, sample_pathways};
use proptest::prelude::*;

struct Fixture {
    data: Dataset,
    model: Model,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let spec = SyntheticSpec {
            num_graphs_per_class: 12,
            background_nodes: 14,
            background_edge_prob: 0.2,
            motif_length: 5,
            ..SyntheticSpec::default()
        };
        let data = generate_synthetic(&spec, 3).unwrap();
        let config = ModelConfig {
            hidden: 16,
            ..ModelConfig::default()
        };
        let train = TrainConfig {
            epochs: 20,
            batch_size: 8,
            ..TrainConfig::default()
        };
        let all: Vec<usize> = (0..data.graphs.len()).collect();
        let (model, _) = fit(&data, &all, &config, &train, 5).unwrap();
        Fixture { data, model }
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn mean_edge_score(lambda: f64, epochs: usize, graph: usize) -> f64 {
    let f = fixture();
    let g = &f.data.graphs[graph];
    let paths = f.model.inference_pathways(&g.graph).unwrap();
    let config = MaskConfig {
        lambda,
        epochs,
        ..MaskConfig::default()
    };
    let mask = learn_mask(&f.model, &g.graph, &g.features, &paths, &config, 1).unwrap();
    mean(&edge_weights(&g.graph, &paths, &mask))
}

#[test]
fn lambda_sweep_is_monotone() {
    for graph in [0, 13] {
        let scores: Vec<f64> = [0.0, 0.005, 0.1, 10.0]
            .iter()
            .map(|&l| mean_edge_score(l, 300, graph))
            .collect();
        for w in scores.windows(2) {
            assert!(w[1] <= w[0] + 1e-3, "graph {graph}: {scores:?}");
        }
    }
}

#[test]
fn large_lambda_closes_the_mask() {
    // Adam moves a logit ≈ lr per step; closing from +2 needs a few hundred
    assert!(mean_edge_score(10.0, 600, 3) < 0.1);
}

#[test]
fn zero_lambda_keeps_the_prediction() {
    let f = fixture();
    let config = MaskConfig {
        lambda: 0.0,
        epochs: 300,
        ..MaskConfig::default()
    };
    for i in [1, 14, 20] {
        let g = &f.data.graphs[i];
        let full = f.model.predict(&g.graph, &g.features).unwrap();
        let paths = f.model.inference_pathways(&g.graph).unwrap();
        let mask = learn_mask(&f.model, &g.graph, &g.features, &paths, &config, 2).unwrap();
        let masked = masked_prediction(&f.model, &g.graph, &g.features, &paths, &mask, true).unwrap();
        let p = full.probabilities[full.label];
        assert!((masked.probabilities[full.label] - p).abs() < 0.05, "graph {i}");

        let em = edge_mask_explainer(&f.model, &g.graph, &g.features, &config, 2).unwrap();
        let prep = Prepared::with_parts(&g.graph, &g.features, rwse(&g.graph, f.model.config().pe_steps), paths).unwrap();
        let masked = weighted_prediction(&f.model, &prep, em.edge_scores.as_ref().unwrap(), Some(&em.scores)).unwrap();
        assert!((masked.probabilities[full.label] - p).abs() < 0.05, "edge mask, graph {i}");
    }
}

#[test]
fn mask_learning_leaves_the_model_untouched() {
    let f = fixture();
    let before = f.model.params().checksum();
    let g = &f.data.graphs[2];
    explain(&f.model, &g.graph, &g.features, &MaskConfig::default(), 0.2, 4).unwrap();
    edge_mask_explainer(&f.model, &g.graph, &g.features, &MaskConfig::default(), 4).unwrap();
    assert_eq!(f.model.params().checksum(), before);
}

#[test]
fn explanations_are_deterministic() {
    let f = fixture();
    let g = &f.data.graphs[5];
    let a = explain(&f.model, &g.graph, &g.features, &MaskConfig::default(), 0.3, 8).unwrap();
    let b = explain(&f.model, &g.graph, &g.features, &MaskConfig::default(), 0.3, 8).unwrap();
    assert_eq!(a, b);
}

#[test]
fn keep_ratio_fixes_the_node_count() {
    let f = fixture();
    let g = &f.data.graphs[7];
    let n = g.graph.node_count();
    for keep in [1.0 / n as f64, 0.1, 0.5, 1.0] {
        let (_, ex) = explain(&f.model, &g.graph, &g.features, &MaskConfig::default(), keep, 1).unwrap();
        let k = (keep * n as f64).ceil() as usize;
        assert_eq!(ex.selected.len(), k);
        let sub = ex.subgraph(&g.graph).unwrap();
        assert_eq!(sub.node_count(), k);
        if k == 1 {
            assert_eq!(sub.edge_count(), 0);
        }
        if keep == 1.0 {
            assert_eq!(ex.subgraph_edges, g.graph.edges());
        }
    }
}

#[test]
fn decreasing_scores_on_a_path_keep_its_head() {
    let g = Graph::new(10, (0..9).map(|i| (i, i + 1))).unwrap();
    let scores: Vec<f64> = (0..10).map(|i| 1.0 - i as f64 / 10.0).collect();
    let ex = extract_subgraph(&g, &scores, &[0.0; 9], 0.5).unwrap();
    assert_eq!(ex.selected, vec![0, 1, 2, 3, 4]);
    assert_eq!(ex.subgraph_edges, vec![(0, 1), (1, 2), (2, 3), (3, 4)]);
}

#[test]
fn forty_node_graph_keeps_four() {
    let n = 40;
    let g = Graph::new(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap();
    let scores: Vec<f64> = (0..n).map(|i| ((i * 17) % 40) as f64).collect();
    let ex = extract_subgraph(&g, &scores, &vec![0.5; n], 0.1).unwrap();
    assert_eq!(ex.selected.len(), 4);
}

fn random_graph(n: usize, seed: u64) -> Graph {
    let mut edges = Vec::new();
    let mut state = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1;
    for u in 0..n {
        for v in u + 1..n {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            if state % 3 == 0 {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, edges).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn soft_adjacency_is_symmetric_and_supported_on_edges(
        n in 2usize..10,
        seed in 0u64..10_000,
        logits in prop::collection::vec(-5.0f64..5.0, 10),
        background in -5.0f64..5.0,
    ) {
        let g = random_graph(n, seed);
        let paths = sample_pathways(&g, 3, seed).unwrap();
        let mask = PathwayMask { logits: logits[..n].to_vec(), background_logit: background, lambda: 0.0 };
        let adj = apply_mask(&g, &paths, &mask).unwrap();
        for u in 0..n {
            for v in 0..n {
                prop_assert_eq!(adj.get(u, v), adj.get(v, u));
                prop_assert_eq!(adj.get(u, v) > 0.0, g.has_edge(u, v));
                prop_assert!(adj.get(u, v) < 1.0);
            }
        }
    }
}
