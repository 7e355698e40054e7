//! Finite-difference checks of every differentiable op and of the full
//! classifier loss, reporting the worst relative error per case.

use pathwise::graphio::{FeatureMatrix, Graph};
use pathwise::ndtensor::{Tape, Tensor, Var};
use pathwise::pathmamba::{Model, ModelConfig, Prepared};
use pathwise::pathsampler::{rwse, sample_pathways};
use rand::Rng;

use super::{away_from_zero, check_gradients, random_tensor, rng};

pub const OP_TOL: f64 = 1e-4;
pub const MODEL_TOL: f64 = 1e-3;
pub const SEEDS: u64 = 10;

/// Contracts an arbitrary-shaped output against fixed random weights so
/// every output entry contributes to the scalar.
fn contract(tape: &mut Tape, out: Var, weights: &Tensor) -> Var {
    let w = tape.constant(weights.clone());
    let prod = tape.mul(out, w).unwrap();
    tape.sum_all(prod).unwrap()
}

/// Worst relative error of one op over all seeds.
fn op_case<F>(inputs: impl Fn(u64) -> Vec<Tensor>, out_shape: (usize, usize), f: F) -> f64
where
    F: Fn(&mut Tape, &[Var]) -> Var,
{
    (0..SEEDS)
        .map(|seed| {
            let xs = inputs(seed);
            let weights = random_tensor(&mut rng(1000 + seed), out_shape.0, out_shape.1);
            check_gradients(&xs, |tape, v| {
                let out = f(tape, v);
                contract(tape, out, &weights)
            })
        })
        .fold(0.0, f64::max)
}

pub fn matmul_chain() -> Vec<(&'static str, f64)> {
    let inputs = |s| {
        let mut r = rng(s);
        vec![random_tensor(&mut r, 3, 4), random_tensor(&mut r, 4, 5), random_tensor(&mut r, 5, 2)]
    };
    vec![(
        "matmul chain",
        op_case(inputs, (3, 2), |t, v| {
            let ab = t.matmul(v[0], v[1]).unwrap();
            t.matmul(ab, v[2]).unwrap()
        }),
    )]
}

pub fn broadcasting_arithmetic() -> Vec<(&'static str, f64)> {
    let inputs = |s| {
        let mut r = rng(s);
        vec![random_tensor(&mut r, 4, 3), random_tensor(&mut r, 1, 3), random_tensor(&mut r, 4, 1)]
    };
    vec![
        ("add row", op_case(inputs, (4, 3), |t, v| t.add(v[0], v[1]).unwrap())),
        ("sub column", op_case(inputs, (4, 3), |t, v| t.sub(v[0], v[2]).unwrap())),
        ("mul row", op_case(inputs, (4, 3), |t, v| t.mul(v[0], v[1]).unwrap())),
        ("mul self", op_case(inputs, (4, 3), |t, v| t.mul(v[0], v[0]).unwrap())),
        ("scale", op_case(inputs, (4, 3), |t, v| t.scale(v[0], -2.5).unwrap())),
    ]
}

pub fn activations() -> Vec<(&'static str, f64)> {
    let inputs = |s| vec![away_from_zero(&mut rng(s), 3, 4)];
    vec![
        ("relu", op_case(inputs, (3, 4), |t, v| t.relu(v[0]).unwrap())),
        ("sigmoid", op_case(inputs, (3, 4), |t, v| t.sigmoid(v[0]).unwrap())),
        ("softplus", op_case(inputs, (3, 4), |t, v| t.softplus(v[0]).unwrap())),
    ]
}

pub fn indexing_ops() -> Vec<(&'static str, f64)> {
    let inputs = |s| {
        let mut r = rng(s);
        vec![random_tensor(&mut r, 4, 3), random_tensor(&mut r, 4, 2)]
    };
    vec![
        ("concat", op_case(inputs, (4, 5), |t, v| t.concat_columns(&[v[0], v[1]]).unwrap())),
        ("gather", op_case(inputs, (5, 3), |t, v| t.gather_rows(v[0], &[3, 0, 0, 2, 1]).unwrap())),
        ("take", op_case(inputs, (2, 3), |t, v| t.take(v[0], &[0, 11, 5, 5, 7, 2], (2, 3)).unwrap())),
        (
            "scatter",
            op_case(inputs, (2, 2), |t, v| t.scatter_add(v[1], &[0, 1, 2, 3, 3, 2, 1, 0], (2, 2)).unwrap()),
        ),
    ]
}

pub fn edge_aggregation() -> Vec<(&'static str, f64)> {
    let edges = [(0, 1), (1, 2), (2, 3), (0, 3), (1, 3)];
    let inputs = |s| {
        let mut r = rng(s);
        vec![random_tensor(&mut r, 4, 3), random_tensor(&mut r, 1, 5)]
    };
    vec![
        ("aggregate", op_case(inputs, (4, 3), |t, v| t.edge_aggregate(v[0], &edges, None).unwrap())),
        (
            "weighted aggregate",
            op_case(inputs, (4, 3), |t, v| t.edge_aggregate(v[0], &edges, Some(v[1])).unwrap()),
        ),
    ]
}

pub fn pooling_and_losses() -> Vec<(&'static str, f64)> {
    let inputs = |s| vec![random_tensor(&mut rng(s), 5, 3)];
    let ce = (0..SEEDS)
        .map(|seed| {
            let logits = random_tensor(&mut rng(seed), 1, 4);
            check_gradients(&[logits], |t, v| t.softmax_cross_entropy(v[0], (seed % 4) as usize).unwrap())
        })
        .fold(0.0, f64::max);
    vec![
        ("max pool", op_case(inputs, (1, 3), |t, v| t.rowwise_max_pool(v[0]).unwrap())),
        ("sum", op_case(inputs, (1, 1), |t, v| t.sum_all(v[0]).unwrap())),
        ("cross entropy", ce),
    ]
}

/// Every op case.
pub fn all_ops() -> Vec<(&'static str, f64)> {
    [
        matmul_chain(),
        broadcasting_arithmetic(),
        activations(),
        indexing_ops(),
        edge_aggregation(),
        pooling_and_losses(),
    ]
    .concat()
}

fn six_node_graph() -> Graph {
    Graph::new(6, [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3)]).unwrap()
}

fn small_config() -> ModelConfig {
    ModelConfig {
        num_layers: 2,
        hidden: 5,
        walk_length: 4,
        pe_steps: 3,
        classes: 3,
        d_state: 3,
        use_global: true,
    }
}

/// Cross-entropy of the full classifier, with parameters, features and
/// edge weights all perturbed; one worst error per seed.
pub fn full_model_loss() -> Vec<f64> {
    let graph = six_node_graph();
    (0..SEEDS)
        .map(|seed| {
            let mut model = Model::new(small_config(), 4, seed).unwrap();
            let mut r = rng(seed);
            // nudge the zero-initialised GIN epsilons so their gradients are generic
            for (name, t) in model.params().names().to_vec().iter().zip(0..) {
                if name.ends_with("epsilon") {
                    model.params_mut().tensors_mut()[t].set(0, 0, 0.1);
                }
            }
            let features = FeatureMatrix::new(random_tensor(&mut r, 6, 4)).unwrap();
            let paths = sample_pathways(&graph, 4, seed).unwrap();
            let pe = rwse(&graph, 3);
            let prep = Prepared::with_parts(&graph, &features, pe, paths).unwrap();
            let weights = Tensor::from_vec(1, 7, (0..7).map(|_| r.random_range(0.3..1.0)).collect()).unwrap();
            let mut inputs: Vec<Tensor> = model.params().tensors().to_vec();
            let np = inputs.len();
            inputs.push(features.tensor().clone());
            inputs.push(weights);
            let label = (seed % 3) as usize;
            check_gradients(&inputs, |tape, v| {
                let logits = model.logits(tape, &v[..np], &prep, v[np], Some(v[np + 1])).unwrap();
                tape.softmax_cross_entropy(logits, label).unwrap()
            })
        })
        .collect()
}
