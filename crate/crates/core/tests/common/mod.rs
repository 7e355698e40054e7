#![allow(dead_code)]

use pathwise::ndtensor::{Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    let v = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    Tensor::from_vec(rows, cols, v).unwrap()
}

/// Random values bounded away from zero, so kinks (ReLU) are not straddled
/// by a finite-difference step.
pub fn away_from_zero(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    let v = (0..rows * cols)
        .map(|_| {
            let m = rng.random_range(0.1..1.0);
            if rng.random::<bool>() {
                m
            } else {
                -m
            }
        })
        .collect();
    Tensor::from_vec(rows, cols, v).unwrap()
}

/// |a − n| / max(|a|, |n|, 1e-3): relative error with a floor so that
/// gradients that are exactly zero do not divide by zero.
pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-3)
}

/// Largest relative error between tape gradients and central differences
/// (step 1e-5) of the scalar built by `f` from `inputs`.
pub fn check_gradients<F>(inputs: &[Tensor], f: F) -> f64
where
    F: Fn(&mut Tape, &[Var]) -> Var,
{
    let eval = |values: &[Tensor]| {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values.iter().map(|t| tape.constant(t.clone())).collect();
        let out = f(&mut tape, &vars);
        tape.scalar(out)
    };
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t.clone())).collect();
    let out = f(&mut tape, &vars);
    let grads = tape.backward(out).unwrap();
    let h = 1e-5;
    let mut worst = 0.0f64;
    for (k, input) in inputs.iter().enumerate() {
        let analytic = grads.get(vars[k]);
        for r in 0..input.rows() {
            for c in 0..input.cols() {
                let mut plus = inputs.to_vec();
                plus[k].set(r, c, input.get(r, c) + h);
                let mut minus = inputs.to_vec();
                minus[k].set(r, c, input.get(r, c) - h);
                let numeric = (eval(&plus) - eval(&minus)) / (2.0 * h);
                worst = worst.max(rel_err(analytic.get(r, c), numeric));
            }
        }
    }
    worst
}
pub mod gradcheck;
pub mod oracles;
