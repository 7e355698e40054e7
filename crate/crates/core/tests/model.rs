mod common;

use common::{random_tensor, rng};
use pathwise::graphio::{FeatureMatrix, Graph};
use pathwise::ndtensor::{softmax, Tape, Tensor};
use pathwise::pathmamba::{
    gin_layer, global_layer, mamba_scan, mlp, pathmamba_layer, readout_classify, GinParams, Linear, MambaParams,
    Mlp, Model, ModelConfig, ParamStore, Prepared, WalkPlan,
};
use pathwise::pathsampler::{rwse, sample_pathways, sample_pathways_keyed};
use proptest::prelude::*;

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn star3() -> Graph {
    Graph::new(4, [(0, 1), (0, 2), (0, 3)]).unwrap()
}

#[test]
fn gin_on_a_star() {
    let mut store = ParamStore::new();
    let gin = GinParams {
        weight: store.add("w", Tensor::identity(1)),
        epsilon: store.add("eps", Tensor::zeros(1, 1)),
    };
    let mut tape = Tape::new();
    let vars = store.bind(&mut tape, false);
    let x = tape.constant(Tensor::from_vec(4, 1, vec![0.0, 1.0, 1.0, 1.0]).unwrap());
    let out = gin_layer(&mut tape, &vars, x, &star3(), None, &gin).unwrap();
    assert_eq!(tape.tensor(out).to_vec(), vec![3.0, 1.0, 1.0, 1.0]);

    let zero = tape.constant(Tensor::zeros(4, 1));
    let out = gin_layer(&mut tape, &vars, zero, &star3(), None, &gin).unwrap();
    assert!(tape.tensor(out).to_vec().iter().all(|v| *v == 0.0));
}

#[test]
fn gin_is_permutation_equivariant() {
    let g = Graph::new(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 1)]).unwrap();
    let perm = [3, 0, 4, 1, 2];
    let pg = g.permuted(&perm).unwrap();
    let mut store = ParamStore::new();
    let mut r = rng(4);
    let gin = GinParams {
        weight: store.add("w", random_tensor(&mut r, 3, 3)),
        epsilon: store.add("eps", Tensor::scalar(0.3)),
    };
    let x = random_tensor(&mut r, 5, 3);
    let px = FeatureMatrix::new(x.clone()).unwrap().permuted(&perm);
    let mut tape = Tape::new();
    let vars = store.bind(&mut tape, false);
    let xv = tape.constant(x);
    let pxv = tape.constant(px.tensor().clone());
    let a = gin_layer(&mut tape, &vars, xv, &g, None, &gin).unwrap();
    let b = gin_layer(&mut tape, &vars, pxv, &pg, None, &gin).unwrap();
    let (a, b) = (tape.tensor(a), tape.tensor(b));
    for (old, &new) in perm.iter().enumerate() {
        for c in 0..3 {
            assert!((a.get(old, c) - b.get(new, c)).abs() < 1e-12);
        }
    }
}

struct Scan {
    store: ParamStore,
    params: MambaParams,
}

fn scan_params(seed: u64, width: usize, state: usize) -> Scan {
    let mut r = rng(seed);
    let mut store = ParamStore::new();
    let mut lin = |store: &mut ParamStore, name: &str, cols: usize| Linear {
        weight: store.add(format!("{name}.w"), random_tensor(&mut r, width, cols)),
        bias: Some(store.add(format!("{name}.b"), random_tensor(&mut r, 1, cols))),
    };
    let delta = lin(&mut store, "delta", 1);
    let b = lin(&mut store, "b", state);
    let c = lin(&mut store, "c", state);
    let d_vals = (0..state).map(|k| 0.2 + 0.15 * k as f64).collect();
    let d = store.add("d", Tensor::from_vec(1, state, d_vals).unwrap());
    let out = store.add("out", random_tensor(&mut rng(seed + 99), state, width));
    Scan {
        store,
        params: MambaParams { delta, b, c, d, out },
    }
}

fn affine(x: &[f64], store: &ParamStore, lin: &Linear) -> Vec<f64> {
    let w = store.get(lin.weight);
    let b = store.get(lin.bias.unwrap());
    (0..w.cols())
        .map(|j| b.get(0, j) + x.iter().enumerate().map(|(i, xi)| xi * w.get(i, j)).sum::<f64>())
        .collect()
}

/// Step-by-step reference: one sequence, plain loops.
fn unrolled(seq: &[Vec<f64>], gates: Option<&[f64]>, scan: &Scan) -> Vec<f64> {
    let s = &scan.store;
    let p = &scan.params;
    let d = s.get(p.d).to_vec();
    let ds = d.len();
    let mut h = vec![0.0; ds];
    let mut out = vec![0.0; ds];
    for (t, x) in seq.iter().enumerate() {
        let delta = softplus(affine(x, s, &p.delta)[0]);
        let b = affine(x, s, &p.b);
        let c = affine(x, s, &p.c);
        for k in 0..ds {
            h[k] = (1.0 - delta * d[k]) * h[k] + delta * b[k];
        }
        let weight = match gates {
            None => f64::from(u8::from(t + 1 == seq.len())),
            Some(g) => g[t] - g.get(t + 1).copied().unwrap_or(0.0),
        };
        for k in 0..ds {
            out[k] += weight * c[k] * h[k];
        }
    }
    out
}

#[test]
fn scan_matches_unrolled_reference() {
    for seed in 0..10 {
        let scan = scan_params(seed, 3, 4);
        let mut r = rng(seed + 500);
        // two sequences of five steps, batched row-wise
        let steps: Vec<Tensor> = (0..5).map(|_| random_tensor(&mut r, 2, 3)).collect();
        let gate_vals: Vec<Vec<f64>> = {
            let mut g = vec![vec![1.0, 1.0]];
            for t in 1..5 {
                let prev: &Vec<f64> = &g[t - 1];
                let f = [0.9 - 0.1 * t as f64, 0.5];
                g.push(vec![prev[0] * f[0], prev[1] * f[1]]);
            }
            g
        };
        for gated in [false, true] {
            let mut tape = Tape::new();
            let vars = scan.store.bind(&mut tape, false);
            let seq: Vec<_> = steps.iter().map(|t| tape.constant(t.clone())).collect();
            let gates: Vec<_> = gate_vals
                .iter()
                .map(|g| tape.constant(Tensor::from_vec(2, 1, g.clone()).unwrap()))
                .collect();
            let out = mamba_scan(&mut tape, &vars, &seq, gated.then_some(&gates[..]), &scan.params).unwrap();
            let out = tape.tensor(out);
            for row in 0..2 {
                let xs: Vec<Vec<f64>> = steps.iter().map(|t| t.row(row)).collect();
                let g: Vec<f64> = gate_vals.iter().map(|g| g[row]).collect();
                let want = unrolled(&xs, gated.then_some(&g[..]), &scan);
                for (k, w) in want.iter().enumerate() {
                    assert!((out.get(row, k) - w).abs() < 1e-10, "seed {seed} gated {gated}");
                }
            }
        }
    }
}

#[test]
fn unit_gates_equal_ungated_scan() {
    let scan = scan_params(3, 3, 4);
    let mut r = rng(8);
    let steps: Vec<Tensor> = (0..6).map(|_| random_tensor(&mut r, 3, 3)).collect();
    let mut tape = Tape::new();
    let vars = scan.store.bind(&mut tape, false);
    let seq: Vec<_> = steps.iter().map(|t| tape.constant(t.clone())).collect();
    let ones: Vec<_> = (0..6).map(|_| tape.constant(Tensor::filled(3, 1, 1.0))).collect();
    let a = mamba_scan(&mut tape, &vars, &seq, None, &scan.params).unwrap();
    let b = mamba_scan(&mut tape, &vars, &seq, Some(&ones), &scan.params).unwrap();
    assert!(tape.tensor(a).max_abs_diff(&tape.tensor(b)) < 1e-12);
}

#[test]
fn memoryless_when_delta_times_decay_is_one() {
    let mut scan = scan_params(5, 3, 4);
    // constant Δ = softplus(0.4); D = 1/Δ makes the state forget each step
    let delta = softplus(0.4);
    let p = scan.params.clone();
    *scan.store.get_mut(p.delta.weight) = Tensor::zeros(3, 1);
    *scan.store.get_mut(p.delta.bias.unwrap()) = Tensor::scalar(0.4);
    *scan.store.get_mut(p.d) = Tensor::filled(1, 4, 1.0 / delta);
    let mut r = rng(6);
    let steps: Vec<Tensor> = (0..5).map(|_| random_tensor(&mut r, 1, 3)).collect();
    let mut tape = Tape::new();
    let vars = scan.store.bind(&mut tape, false);
    let seq: Vec<_> = steps.iter().map(|t| tape.constant(t.clone())).collect();
    let out = mamba_scan(&mut tape, &vars, &seq, None, &p).unwrap();
    let out = tape.tensor(out);
    let last = steps[4].row(0);
    let b = affine(&last, &scan.store, &p.b);
    let c = affine(&last, &scan.store, &p.c);
    for k in 0..4 {
        assert!((out.get(0, k) - c[k] * delta * b[k]).abs() < 1e-12);
    }
}

#[test]
fn zero_input_with_zero_biases_gives_zero() {
    let mut scan = scan_params(2, 3, 4);
    let p = scan.params.clone();
    for lin in [&p.delta, &p.b, &p.c] {
        let bias = lin.bias.unwrap();
        let cols = scan.store.get(bias).cols();
        *scan.store.get_mut(bias) = Tensor::zeros(1, cols);
    }
    let mut tape = Tape::new();
    let vars = scan.store.bind(&mut tape, false);
    let seq: Vec<_> = (0..4).map(|_| tape.constant(Tensor::zeros(2, 3))).collect();
    let out = mamba_scan(&mut tape, &vars, &seq, None, &p).unwrap();
    let out = tape.tensor(out);
    assert!(out.to_vec().iter().all(|v| *v == 0.0));
}

#[test]
fn global_layer_shape_and_single_node_walks() {
    let n = 32;
    let g = Graph::new(n, (0..n).map(|i| (i, (i + 1) % n)).chain((0..n).map(|i| (i, (i + 5) % n)))).unwrap();
    let paths = sample_pathways(&g, 8, 1).unwrap();
    let plan = WalkPlan::new(&g, &paths).unwrap();
    let scan = scan_params(1, 6, 4);
    let mut tape = Tape::new();
    let vars = scan.store.bind(&mut tape, false);
    let x = tape.constant(random_tensor(&mut rng(2), n, 6));
    let out = global_layer(&mut tape, &vars, x, &plan, None, &scan.params).unwrap();
    assert_eq!(tape.tensor(out).shape(), (n, 6));

    // isolated nodes walk nowhere: their row depends on their own features only
    let lonely = Graph::new(3, [(0, 1)]).unwrap();
    let paths = sample_pathways(&lonely, 4, 1).unwrap();
    let plan = WalkPlan::new(&lonely, &paths).unwrap();
    let base = random_tensor(&mut rng(3), 3, 6);
    let mut changed = base.clone();
    for c in 0..6 {
        changed.set(0, c, 5.0);
        changed.set(1, c, -5.0);
    }
    let rows: Vec<Vec<f64>> = [base, changed]
        .into_iter()
        .map(|t| {
            let mut tape = Tape::new();
            let vars = scan.store.bind(&mut tape, false);
            let x = tape.constant(t);
            let gates = plan.gates(&mut tape, None, lonely.edge_count()).unwrap();
            let out = global_layer(&mut tape, &vars, x, &plan, gates.as_deref(), &scan.params).unwrap();
            tape.tensor(out).row(2)
        })
        .collect();
    assert_eq!(rows[0], rows[1]);
}

#[test]
fn identical_nodes_get_identical_global_rows() {
    // 4-cycle with equal features everywhere: every walk sees the same sequence
    let g = Graph::new(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
    let paths = sample_pathways(&g, 5, 9).unwrap();
    let plan = WalkPlan::new(&g, &paths).unwrap();
    let scan = scan_params(4, 3, 2);
    let mut tape = Tape::new();
    let vars = scan.store.bind(&mut tape, false);
    let x = tape.constant(Tensor::filled(4, 3, 0.7));
    let out = global_layer(&mut tape, &vars, x, &plan, None, &scan.params).unwrap();
    let out = tape.tensor(out);
    for r in 1..4 {
        assert_eq!(out.row(r), out.row(0));
    }
}

fn model_and_input(seed: u64) -> (Model, Graph, FeatureMatrix) {
    let config = ModelConfig {
        hidden: 6,
        walk_length: 4,
        pe_steps: 3,
        d_state: 3,
        ..ModelConfig::default()
    };
    let g = Graph::new(7, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 0), (0, 3)]).unwrap();
    let x = FeatureMatrix::new(random_tensor(&mut rng(seed), 7, 4)).unwrap();
    (Model::new(config, 4, seed).unwrap(), g, x)
}

#[test]
fn zeroed_global_projection_reduces_to_gin() {
    let (mut model, g, _) = model_and_input(1);
    let layer = model.layout().layers[0].clone();
    let out = layer.mamba.as_ref().unwrap().out;
    let paths = sample_pathways(&g, 4, 3).unwrap();
    let plan = WalkPlan::new(&g, &paths).unwrap();
    let run = |model: &Model, with_global: bool| {
        let mut tape = Tape::new();
        let vars = model.params().bind(&mut tape, false);
        let h = tape.constant(random_tensor(&mut rng(11), 7, 6));
        let y = if with_global {
            pathmamba_layer(&mut tape, &vars, h, &g, &plan, None, None, &layer).unwrap()
        } else {
            let local = gin_layer(&mut tape, &vars, h, &g, None, &layer.gin).unwrap();
            mlp(&mut tape, &vars, local, &layer.combine).unwrap()
        };
        tape.tensor(y)
    };
    assert!(run(&model, true).max_abs_diff(&run(&model, false)) > 1e-6);
    *model.params_mut().get_mut(out) = Tensor::zeros(3, 6);
    assert_eq!(run(&model, true), run(&model, false));
}

#[test]
fn zero_combine_mlp_outputs_zero() {
    let (mut model, g, _) = model_and_input(2);
    let layer = model.layout().layers[0].clone();
    for lin in [&layer.combine.first, &layer.combine.second] {
        let (r, c) = model.params().get(lin.weight).shape();
        *model.params_mut().get_mut(lin.weight) = Tensor::zeros(r, c);
        let b = lin.bias.unwrap();
        let (r, c) = model.params().get(b).shape();
        *model.params_mut().get_mut(b) = Tensor::zeros(r, c);
    }
    let paths = sample_pathways(&g, 4, 3).unwrap();
    let plan = WalkPlan::new(&g, &paths).unwrap();
    let mut tape = Tape::new();
    let vars = model.params().bind(&mut tape, false);
    let h = tape.constant(random_tensor(&mut rng(5), 7, 6));
    let y = pathmamba_layer(&mut tape, &vars, h, &g, &plan, None, None, &layer).unwrap();
    assert!(tape.tensor(y).to_vec().iter().all(|v| *v == 0.0));
}

fn readout_store(seed: u64) -> (ParamStore, Mlp) {
    let mut r = rng(seed);
    let mut store = ParamStore::new();
    let mut lin = |store: &mut ParamStore, name: &str, rows: usize, cols: usize| Linear {
        weight: store.add(format!("{name}.w"), random_tensor(&mut r, rows, cols)),
        bias: Some(store.add(format!("{name}.b"), random_tensor(&mut r, 1, cols))),
    };
    let first = lin(&mut store, "first", 4, 5);
    let second = lin(&mut store, "second", 5, 3);
    (store, Mlp { first, second })
}

#[test]
fn readout_properties() {
    let (store, readout) = readout_store(1);
    let probs = |x: Tensor| {
        let mut tape = Tape::new();
        let vars = store.bind(&mut tape, false);
        let xv = tape.constant(x);
        let logits = readout_classify(&mut tape, &vars, xv, &readout).unwrap();
        softmax(&tape.tensor(logits).to_vec())
    };
    let x = random_tensor(&mut rng(2), 5, 4);
    let p = probs(x.clone());
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);

    // single row: pooling is the identity on it
    let single = probs(Tensor::from_rows(&[x.row(2)]).unwrap());
    let mut tape = Tape::new();
    let vars = store.bind(&mut tape, false);
    let row = tape.constant(Tensor::from_rows(&[x.row(2)]).unwrap());
    let direct = mlp(&mut tape, &vars, row, &readout).unwrap();
    assert_eq!(single, softmax(&tape.tensor(direct).to_vec()));

    // duplicating a row changes nothing
    let mut rows: Vec<Vec<f64>> = (0..5).map(|r| x.row(r)).collect();
    rows.push(x.row(0));
    assert_eq!(probs(Tensor::from_rows(&rows).unwrap()), p);

    assert!(softmax(&[0.3; 4]).iter().all(|v| (v - 0.25).abs() < 1e-15));
}

#[test]
fn prediction_is_deterministic_and_normalised() {
    let (model, g, x) = model_and_input(3);
    let a = model.predict(&g, &x).unwrap();
    let b = model.predict(&g, &x).unwrap();
    assert_eq!(a, b);
    assert!((a.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    let wrong = FeatureMatrix::new(Tensor::zeros(7, 5)).unwrap();
    assert_eq!(model.predict(&g, &wrong).unwrap_err().kind(), "dimension");
}

#[test]
fn checkpoint_round_trip() {
    let (mut model, g, x) = model_and_input(4);
    model.inference_samples = 3;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    model.save(&path).unwrap();
    let back = Model::load(&path).unwrap();
    assert_eq!(back.params().checksum(), model.params().checksum());
    assert_eq!(back.predict(&g, &x).unwrap(), model.predict(&g, &x).unwrap());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replacen("\"version\":1", "\"version\":99", 1)).unwrap();
    assert!(Model::load(&path).is_err());
}

#[test]
fn prepared_input_matches_predict() {
    let (model, g, x) = model_and_input(6);
    let paths = model.inference_pathways(&g).unwrap();
    let prep = Prepared::with_parts(&g, &x, rwse(&g, 3), paths).unwrap();
    let p = softmax(&model.logits_value(&prep).unwrap());
    assert_eq!(p, model.predict(&g, &x).unwrap().probabilities);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Relabelling nodes while keying walk streams by node identity leaves
    /// the prediction unchanged.
    #[test]
    fn permutation_invariance_with_matched_walks(seed in 0u64..1000, shift in 1usize..7) {
        let (model, g, x) = model_and_input(seed);
        let n = g.node_count();
        let perm: Vec<usize> = (0..n).map(|i| (i * 3 + shift) % n).collect();
        let keys: Vec<u64> = (0..n as u64).map(|k| k * 7919 + 1).collect();
        let mut pkeys = vec![0; n];
        for (old, &new) in perm.iter().enumerate() {
            pkeys[new] = keys[old];
        }
        let a = model.predict_keyed(&g, &x, &keys).unwrap();
        let b = model.predict_keyed(&g.permuted(&perm).unwrap(), &x.permuted(&perm), &pkeys).unwrap();
        for (p, q) in a.probabilities.iter().zip(&b.probabilities) {
            prop_assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn keyed_walks_follow_their_keys(seed in 0u64..1000) {
        let g = Graph::new(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2)]).unwrap();
        let perm = [2, 4, 1, 0, 3];
        let keys = [11u64, 12, 13, 14, 15];
        let mut pkeys = [0u64; 5];
        for (old, &new) in perm.iter().enumerate() {
            pkeys[new] = keys[old];
        }
        let a = sample_pathways_keyed(&g, 6, seed, &keys).unwrap();
        let b = sample_pathways_keyed(&g.permuted(&perm).unwrap(), 6, seed, &pkeys).unwrap();
        for (pa, pb) in a.pathways.iter().zip(0..) {
            let mapped: Vec<usize> = pa.nodes.iter().map(|&v| perm[v]).collect();
            prop_assert_eq!(&mapped, &b.pathways[perm[pb]].nodes);
        }
    }
}
