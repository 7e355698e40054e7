//! Differentiable building blocks. Every function records onto a caller
//! supplied tape and reads parameters from `vars`, which must come from
//! [`ParamStore::bind`](super::ParamStore::bind) on the matching store.

use crate::graphio::Graph;
use crate::ndtensor::{Tape, Tensor, Var};
use crate::pathsampler::PathwaySet;
use crate::{Error, Result};

use super::params::{GinParams, LayerParams, Linear, MambaParams, Mlp};

/// Pathways laid out step-major for batched scanning.
///
/// `steps[t][i]` is the node visited by pathway `i` at step `t`; pathways
/// shorter than the longest one repeat their last node. `transitions[t][i]`
/// (for `t >= 1`) is the edge index used to reach step `t`, or `None` when
/// that step is padding.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkPlan {
    pub steps: Vec<Vec<usize>>,
    pub transitions: Vec<Vec<Option<usize>>>,
    pub padded: bool,
}

impl WalkPlan {
    pub fn new(graph: &Graph, paths: &PathwaySet) -> Result<Self> {
        paths.validate_for(graph)?;
        let n = graph.node_count();
        let len = paths.walk_length + 1;
        let mut steps = vec![vec![0; n]; len];
        let mut transitions = vec![vec![None; n]; len];
        let mut padded = false;
        for (i, p) in paths.pathways.iter().enumerate() {
            for t in 0..len {
                if t < p.nodes.len() {
                    steps[t][i] = p.nodes[t];
                    if t > 0 {
                        transitions[t][i] = graph.edge_index(p.nodes[t - 1], p.nodes[t]);
                    }
                } else {
                    steps[t][i] = *p.nodes.last().expect("pathways are nonempty");
                    padded = true;
                }
            }
        }
        Ok(Self {
            steps,
            transitions,
            padded,
        })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Survival weights `g_t` per pathway (each N×1): `g_0 = 1` and
    /// `g_t = g_{t-1} · w(transition_t)`, with padding steps weighing 0.
    /// Returns `None` when every weight is 1, so callers can skip gating.
    pub fn gates(&self, tape: &mut Tape, edge_weights: Option<Var>, edge_count: usize) -> Result<Option<Vec<Var>>> {
        let n = self.steps[0].len();
        match edge_weights {
            None if !self.padded => Ok(None),
            None => {
                let mut out = Vec::with_capacity(self.len());
                let mut alive = vec![1.0; n];
                for t in 0..self.len() {
                    if t > 0 {
                        for (a, tr) in alive.iter_mut().zip(&self.transitions[t]) {
                            if tr.is_none() {
                                *a = 0.0;
                            }
                        }
                    }
                    out.push(tape.constant(Tensor::from_vec(n, 1, alive.clone())?));
                }
                Ok(Some(out))
            }
            Some(w) => {
                let zero = tape.constant(Tensor::zeros(1, 1));
                let aug = tape.concat_columns(&[w, zero])?;
                let mut out = Vec::with_capacity(self.len());
                let mut g = tape.constant(Tensor::filled(n, 1, 1.0));
                out.push(g);
                for t in 1..self.len() {
                    let pos: Vec<usize> = self.transitions[t].iter().map(|e| e.unwrap_or(edge_count)).collect();
                    let f = tape.take(aug, &pos, (n, 1))?;
                    g = tape.mul(g, f)?;
                    out.push(g);
                }
                Ok(Some(out))
            }
        }
    }
}

pub fn linear(tape: &mut Tape, vars: &[Var], x: Var, lin: &Linear) -> Result<Var> {
    let mut y = tape.matmul(x, vars[lin.weight.0])?;
    if let Some(b) = lin.bias {
        y = tape.add(y, vars[b.0])?;
    }
    Ok(y)
}

/// Two-layer perceptron with a ReLU in between.
pub fn mlp(tape: &mut Tape, vars: &[Var], x: Var, m: &Mlp) -> Result<Var> {
    let h = linear(tape, vars, x, &m.first)?;
    let h = tape.relu(h)?;
    linear(tape, vars, h, &m.second)
}

/// `ReLU(((1+ε)X + Σ_{j∈N(i)} w_ij X_j) · W)`; unit weights when
/// `edge_weights` is `None`, otherwise a 1×E row aligned to `graph.edges()`.
pub fn gin_layer(
    tape: &mut Tape,
    vars: &[Var],
    x: Var,
    graph: &Graph,
    edge_weights: Option<Var>,
    params: &GinParams,
) -> Result<Var> {
    let rows = tape.value(x).nrows();
    if rows != graph.node_count() {
        return Err(Error::Dimension(format!(
            "{rows} feature rows for {} nodes",
            graph.node_count()
        )));
    }
    let one = tape.constant(Tensor::scalar(1.0));
    let scale = tape.add(one, vars[params.epsilon.0])?;
    let own = tape.mul(x, scale)?;
    let agg = tape.edge_aggregate(x, graph.edges(), edge_weights)?;
    let pre = tape.add(own, agg)?;
    let lin = tape.matmul(pre, vars[params.weight.0])?;
    Ok(tape.relu(lin)?)
}

/// Selective scan over a batch of equally long sequences.
///
/// `seq[t]` holds step `t` of every sequence (one row each). With
/// `h_0 = 0`, each step computes `Δ = softplus(f_Δ(x))`, `B = f_B(x)`,
/// `C = f_C(x)` and `h ← (1 − Δ·D) ⊙ h + Δ·B`. Without gates the output is
/// `C_last ⊙ h_last`; with survival gates `g_t` it is the expected readout
/// over stopping points, `Σ_t (g_t − g_{t+1}) ⊙ C_t ⊙ h_t`, which equals the
/// ungated value when all gates are 1. Output is rows × d_state.
pub fn mamba_scan(
    tape: &mut Tape,
    vars: &[Var],
    seq: &[Var],
    gates: Option<&[Var]>,
    params: &MambaParams,
) -> Result<Var> {
    if seq.is_empty() {
        return Err(Error::Config("selective scan over an empty sequence".into()));
    }
    if let Some(g) = gates {
        if g.len() != seq.len() {
            return Err(Error::Config("one gate per scan step required".into()));
        }
    }
    let d = vars[params.d.0];
    let mut h: Option<Var> = None;
    let mut acc: Option<Var> = None;
    let last = seq.len() - 1;
    for (t, &x) in seq.iter().enumerate() {
        let dl = linear(tape, vars, x, &params.delta)?;
        let delta = tape.softplus(dl)?;
        let b = linear(tape, vars, x, &params.b)?;
        let next = match h {
            None => tape.mul(b, delta)?,
            Some(prev) => {
                let decay = tape.mul(prev, d)?;
                let diff = tape.sub(b, decay)?;
                let upd = tape.mul(diff, delta)?;
                tape.add(prev, upd)?
            }
        };
        h = Some(next);
        match gates {
            None if t == last => {
                let c = linear(tape, vars, x, &params.c)?;
                acc = Some(tape.mul(c, next)?);
            }
            None => {}
            Some(g) => {
                let c = linear(tape, vars, x, &params.c)?;
                let y = tape.mul(c, next)?;
                let coeff = if t == last { g[t] } else { tape.sub(g[t], g[t + 1])? };
                let term = tape.mul(y, coeff)?;
                acc = Some(match acc {
                    None => term,
                    Some(a) => tape.add(a, term)?,
                });
            }
        }
    }
    Ok(acc.expect("sequence is nonempty"))
}

/// Pathway branch: gathers node features along each node's pathway, scans
/// them and projects the d_state readout back to the feature width. Row `i`
/// of the result belongs to the pathway starting at node `i`.
pub fn global_layer(
    tape: &mut Tape,
    vars: &[Var],
    x: Var,
    plan: &WalkPlan,
    gates: Option<&[Var]>,
    params: &MambaParams,
) -> Result<Var> {
    let rows = tape.value(x).nrows();
    if plan.steps.first().map(Vec::len) != Some(rows) {
        return Err(Error::Dimension(format!(
            "walk plan covers {} nodes, features have {rows} rows",
            plan.steps.first().map_or(0, Vec::len)
        )));
    }
    let seq = plan
        .steps
        .iter()
        .map(|idx| tape.gather_rows(x, idx))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let state = mamba_scan(tape, vars, &seq, gates, params)?;
    Ok(tape.matmul(state, vars[params.out.0])?)
}

/// `MLP(GIN(X) + Global(X))`; the global term is skipped for layers built
/// without a pathway branch.
#[allow(clippy::too_many_arguments)]
pub fn pathmamba_layer(
    tape: &mut Tape,
    vars: &[Var],
    x: Var,
    graph: &Graph,
    plan: &WalkPlan,
    edge_weights: Option<Var>,
    gates: Option<&[Var]>,
    params: &LayerParams,
) -> Result<Var> {
    let local = gin_layer(tape, vars, x, graph, edge_weights, &params.gin)?;
    let mixed = match &params.mamba {
        Some(m) => {
            let global = global_layer(tape, vars, x, plan, gates, m)?;
            tape.add(local, global)?
        }
        None => local,
    };
    mlp(tape, vars, mixed, &params.combine)
}

/// Column-wise max over nodes followed by the readout MLP; returns 1×C
/// logits (softmax is applied by the caller or the loss).
pub fn readout_classify(tape: &mut Tape, vars: &[Var], x: Var, readout: &Mlp) -> Result<Var> {
    let pooled = tape.rowwise_max_pool(x)?;
    mlp(tape, vars, pooled, readout)
}
