//! Shared oracle code for the integration suites.
//!
//! Everything here is deliberately independent of the walk engine's
//! implementation path: expectations come from exhaustive enumeration of
//! walk prefixes with their probabilities, and series are evaluated by
//! plain repeated matrix multiplication.

// each test binary compiles its own copy and uses a subset
#![allow(dead_code)]

use grf_kit::graph::Graph;
use nalgebra::DMatrix;

/// Exact per-ensemble feature expectation by enumerating every walk prefix
/// of length <= `f.len() - 1` with its probability.
///
/// A walker from `i` deposits `f[k] * weight` at its step-`k` vertex; the
/// prefix `i = u_0, ..., u_k` is reached with probability
/// `(1-p)^k * prod 1/deg(u_j)` and carries deterministic weight
/// `prod A(u_j, u_{j+1}) deg(u_j) / (1-p)`.
pub fn oracle_features(graph: &Graph, a_norm: &DMatrix<f64>, f: &[f64], p: f64) -> DMatrix<f64> {
    let n = graph.num_vertices();
    let mut out = DMatrix::zeros(n, n);
    for start in 0..n {
        let mut row = vec![0.0f64; n];
        enumerate(graph, a_norm, f, p, start, 0, 1.0, 1.0, &mut row);
        for (v, &value) in row.iter().enumerate() {
            out[(start, v)] = value;
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    graph: &Graph,
    a_norm: &DMatrix<f64>,
    f: &[f64],
    p: f64,
    u: usize,
    step: usize,
    reach_prob: f64,
    weight: f64,
    row: &mut [f64],
) {
    row[u] += f[step] * reach_prob * weight;
    if step + 1 >= f.len() {
        return;
    }
    let degree = graph.degree(u) as f64;
    for &v in graph.neighbors(u) {
        enumerate(
            graph,
            a_norm,
            f,
            p,
            v,
            step + 1,
            reach_prob * (1.0 - p) / degree,
            weight * a_norm[(u, v)] * degree / (1.0 - p),
            row,
        );
    }
}

/// `sum_k coeffs[k] m^k` by repeated multiplication.
pub fn poly_in_matrix(coeffs: &[f64], m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut acc = DMatrix::<f64>::identity(n, n) * coeffs[0];
    let mut power = DMatrix::<f64>::identity(n, n);
    for &c in &coeffs[1..] {
        power = &power * m;
        acc += &power * c;
    }
    acc
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

/// Kolmogorov-Smirnov distance of a sample against Uniform[0, 1).
pub fn ks_distance_uniform(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let upper = (i as f64 + 1.0) / n - x;
        let lower = x - i as f64 / n;
        d = d.max(upper).max(lower);
    }
    d
}
