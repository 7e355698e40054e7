//! Independent reference implementations used to check the metric and
//! baseline code: brute force, exact arithmetic or textbook algorithms.
#![allow(dead_code)]

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use pathwise::graphio::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Erdős–Rényi graph G(n, p) from a seeded generator.
pub fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, edges).unwrap()
}

/// Diameter of the largest component (ties: smallest node) from
/// Floyd–Warshall all-pairs distances.
pub fn floyd_warshall_diameter(g: &Graph) -> usize {
    let n = g.node_count();
    if n == 0 {
        return 0;
    }
    const INF: usize = usize::MAX / 4;
    let mut d = vec![vec![INF; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = 0;
    }
    for &(u, v) in g.edges() {
        d[u][v] = 1;
        d[v][u] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    // component of v = nodes at finite distance; pick the largest, lowest member first
    let mut best: Vec<usize> = Vec::new();
    for v in 0..n {
        let comp: Vec<usize> = (0..n).filter(|&w| d[v][w] < INF).collect();
        if comp.len() > best.len() {
            best = comp;
        }
    }
    best.iter()
        .flat_map(|&a| best.iter().map(move |&b| (a, b)))
        .map(|(a, b)| d[a][b])
        .max()
        .unwrap_or(0)
}

/// Longest simple path by enumerating every simple path (no pruning).
pub fn enumerate_longest_path(g: &Graph) -> usize {
    fn walk(g: &Graph, v: usize, seen: &mut Vec<bool>, len: usize, best: &mut usize) {
        *best = (*best).max(len);
        for &w in g.neighbors(v) {
            if !seen[w] {
                seen[w] = true;
                walk(g, w, seen, len + 1, best);
                seen[w] = false;
            }
        }
    }
    let mut best = 0;
    for s in 0..g.node_count() {
        let mut seen = vec![false; g.node_count()];
        seen[s] = true;
        walk(g, s, &mut seen, 0, &mut best);
    }
    best
}

fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// P(X ≥ k) for the hypergeometric distribution by summing the exact pmf
/// in big integers and dividing once.
pub fn hypergeom_tail_exact(population: u64, successes: u64, draws: u64, observed: u64) -> f64 {
    let mut num = BigUint::zero();
    for i in observed..=draws.min(successes) {
        if draws - i > population - successes {
            continue;
        }
        num += binomial(successes, i) * binomial(population - successes, draws - i);
    }
    let den = binomial(population, draws);
    BigRational::new(BigInt::from(num), BigInt::from(den)).to_f64().unwrap()
}

pub fn is_dominating(g: &Graph, set: &[usize]) -> bool {
    let mut covered = vec![false; g.node_count()];
    for &v in set {
        covered[v] = true;
        for &w in g.neighbors(v) {
            covered[w] = true;
        }
    }
    covered.into_iter().all(|c| c)
}

/// Size of a minimum dominating set by trying subsets in increasing size.
pub fn min_dominating_size(g: &Graph) -> usize {
    let n = g.node_count();
    assert!(n <= 20);
    (0..=n)
        .find(|&k| {
            (0u32..1 << n)
                .filter(|m| m.count_ones() as usize == k)
                .any(|m| is_dominating(g, &(0..n).filter(|&v| m & (1 << v) != 0).collect::<Vec<_>>()))
        })
        .unwrap()
}

/// Uniform-restart PageRank solved exactly over the rationals from
/// `(I − αPᵀ) s = (1−α)/N · 1` (graph without isolated nodes); `alpha`
/// is given as numerator/denominator.
pub fn pagerank_exact(g: &Graph, alpha: (i64, i64)) -> Vec<f64> {
    let n = g.node_count();
    let a = BigRational::new(BigInt::from(alpha.0), BigInt::from(alpha.1));
    let one = BigRational::one();
    let mut m = vec![vec![BigRational::zero(); n + 1]; n];
    for v in 0..n {
        m[v][v] = one.clone();
        for &u in g.neighbors(v) {
            let share = a.clone() / BigRational::from_integer(BigInt::from(g.degree(u) as u64));
            m[v][u] = m[v][u].clone() - share;
        }
        m[v][n] = (one.clone() - a.clone()) / BigRational::from_integer(BigInt::from(n as u64));
    }
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero()).expect("nonsingular");
        m.swap(col, pivot);
        let p = m[col][col].clone();
        for c in col..=n {
            m[col][c] = m[col][c].clone() / p.clone();
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in col..=n {
                    let sub = f.clone() * m[col][c].clone();
                    m[r][c] = m[r][c].clone() - sub;
                }
            }
        }
    }
    m.iter().map(|row| row[n].to_f64().unwrap()).collect()
}
