//! Graph representation, synthetic generators and edge-list IO.

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::rng::{self, tag};

/// Undirected weighted graph with a dense symmetric adjacency matrix.
///
/// Invariants enforced at construction: valid vertex indices, no self-loops,
/// no duplicate undirected pairs, strictly positive weights, and no isolated
/// vertices (the normalized Laplacian needs an invertible degree matrix).
#[derive(Debug, Clone)]
pub struct Graph {
    num_vertices: usize,
    edges: Vec<(usize, usize, f64)>,
    adjacency: DMatrix<f64>,
    neighbors: Vec<Vec<usize>>,
    weighted_degrees: Vec<f64>,
}

impl Graph {
    /// Builds a graph from an undirected edge list. Edge endpoints may be
    /// given in either order; they are stored canonically as `u < v`.
    pub fn new(num_vertices: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if num_vertices == 0 {
            return Err(Error::InvalidGraph("graph must have at least one vertex".into()));
        }
        let mut adjacency = DMatrix::zeros(num_vertices, num_vertices);
        let mut canonical = Vec::with_capacity(edges.len());
        for &(u, v, w) in edges {
            if u >= num_vertices || v >= num_vertices {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) out of range for {num_vertices} vertices"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {u}")));
            }
            if w <= 0.0 || !w.is_finite() {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) has non-positive weight {w}"
                )));
            }
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            if adjacency[(a, b)] != 0.0 {
                return Err(Error::InvalidGraph(format!("duplicate edge ({a}, {b})")));
            }
            adjacency[(a, b)] = w;
            adjacency[(b, a)] = w;
            canonical.push((a, b, w));
        }
        canonical.sort_by_key(|&(u, v, _)| (u, v));

        let mut neighbors = vec![Vec::new(); num_vertices];
        for &(u, v, _) in &canonical {
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        if let Some(isolated) = neighbors.iter().position(Vec::is_empty) {
            return Err(Error::InvalidGraph(format!("isolated vertex {isolated}")));
        }
        let weighted_degrees = (0..num_vertices)
            .map(|i| adjacency.row(i).sum())
            .collect();
        Ok(Self {
            num_vertices,
            edges: canonical,
            adjacency,
            neighbors,
            weighted_degrees,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Canonical edge list, sorted by `(u, v)` with `u < v`.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    /// Sorted neighbor list of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    /// Neighbor count of `v` (unweighted degree).
    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    /// Sum of incident edge weights of `v`.
    pub fn weighted_degree(&self, v: usize) -> f64 {
        self.weighted_degrees[v]
    }

    /// Serializes to the edge-list text format (`u v w` per line, sorted by
    /// `(u, v)`), suitable for fixture round-tripping.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for &(u, v, w) in &self.edges {
            out.push_str(&format!("{u} {v} {w}\n"));
        }
        out
    }
}

/// Degree-normalized Laplacian of a graph, together with the normalized
/// adjacency it induces.
#[derive(Debug, Clone)]
pub struct NormalizedLaplacian {
    laplacian: DMatrix<f64>,
    normalized_adjacency: DMatrix<f64>,
}

impl NormalizedLaplacian {
    /// Computes `L = D^{-1/2} (D - W) D^{-1/2}` where `D` is the diagonal of
    /// weighted degrees. Also forms `A_norm = I - L`, whose entries are
    /// `W_uv / sqrt(d_u d_v)` and whose spectrum lies in `[-1, 1]`.
    pub fn new(graph: &Graph) -> Self {
        let n = graph.num_vertices();
        let inv_sqrt: Vec<f64> = (0..n)
            .map(|i| 1.0 / graph.weighted_degree(i).sqrt())
            .collect();
        let mut normalized_adjacency = DMatrix::zeros(n, n);
        for &(u, v, w) in graph.edges() {
            let a = w * inv_sqrt[u] * inv_sqrt[v];
            normalized_adjacency[(u, v)] = a;
            normalized_adjacency[(v, u)] = a;
        }
        let laplacian = DMatrix::identity(n, n) - &normalized_adjacency;
        Self {
            laplacian,
            normalized_adjacency,
        }
    }

    /// The normalized Laplacian matrix; eigenvalues lie in `[0, 2]`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    /// The normalized adjacency `I - L`; eigenvalues lie in `[-1, 1]`.
    pub fn normalized_adjacency(&self) -> &DMatrix<f64> {
        &self.normalized_adjacency
    }

    pub fn dim(&self) -> usize {
        self.laplacian.nrows()
    }
}

/// Graph family selector for the synthetic generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFamily {
    ErdosRenyi,
    BarabasiAlbert,
    BinaryTree,
    Ladder,
}

impl fmt::Display for GraphFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            GraphFamily::ErdosRenyi => "erdos_renyi",
            GraphFamily::BarabasiAlbert => "barabasi_albert",
            GraphFamily::BinaryTree => "binary_tree",
            GraphFamily::Ladder => "ladder",
        };
        f.write_str(name)
    }
}

/// Parameters for one synthetic graph. `n` is the vertex (spin) count for
/// the random models, the height for binary trees and the rung count for
/// ladders.
#[derive(Debug, Clone)]
pub struct GraphGeneratorSpec {
    pub family: GraphFamily,
    pub n: usize,
    pub p_edge: Option<f64>,
    pub m_attach: Option<usize>,
    pub seed: u64,
}

impl GraphGeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidGeneratorSpec(msg));
        match self.family {
            GraphFamily::ErdosRenyi => {
                if self.n < 2 {
                    return fail(format!("erdos_renyi needs n >= 2, got {}", self.n));
                }
                match self.p_edge {
                    Some(p) if p > 0.0 && p <= 1.0 => {}
                    Some(p) => return fail(format!("p_edge must be in (0, 1], got {p}")),
                    None => return fail("erdos_renyi requires p_edge".into()),
                }
                if self.m_attach.is_some() {
                    return fail("m_attach is only valid for barabasi_albert".into());
                }
            }
            GraphFamily::BarabasiAlbert => {
                let m = match self.m_attach {
                    Some(m) if m >= 1 => m,
                    Some(_) => return fail("m_attach must be >= 1".into()),
                    None => return fail("barabasi_albert requires m_attach".into()),
                };
                if m >= self.n {
                    return fail(format!("m_attach must be < n, got m={m}, n={}", self.n));
                }
                if self.p_edge.is_some() {
                    return fail("p_edge is only valid for erdos_renyi".into());
                }
            }
            GraphFamily::BinaryTree | GraphFamily::Ladder => {
                if self.n < 1 {
                    return fail("n must be >= 1".into());
                }
                if self.p_edge.is_some() || self.m_attach.is_some() {
                    return fail(format!("{} takes no extra parameters", self.family));
                }
            }
        }
        Ok(())
    }

    /// Short label used in CSV output, e.g. `erdos_renyi-n20-s7`.
    pub fn label(&self) -> String {
        format!("{}-n{}-s{}", self.family, self.n, self.seed)
    }
}

/// Generates a graph from the spec. Deterministic for a fixed seed.
pub fn generate(spec: &GraphGeneratorSpec) -> Result<Graph> {
    spec.validate()?;
    match spec.family {
        GraphFamily::ErdosRenyi => erdos_renyi(spec.n, spec.p_edge.unwrap(), spec.seed),
        GraphFamily::BarabasiAlbert => barabasi_albert(spec.n, spec.m_attach.unwrap(), spec.seed),
        GraphFamily::BinaryTree => binary_tree(spec.n),
        GraphFamily::Ladder => ladder(spec.n),
    }
}

const ER_MAX_ATTEMPTS: usize = 1000;

/// G(n, p): each of the C(n,2) edges is present independently with
/// probability `p`. Draws with an isolated vertex are rejected and the
/// substream counter incremented, up to 1000 attempts.
fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    for attempt in 0..ER_MAX_ATTEMPTS as u64 {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                let bits = rng::keyed(seed, &[tag::ER_EDGE, attempt, u as u64, v as u64]);
                if rng::u01(bits) < p {
                    edges.push((u, v, 1.0));
                }
            }
        }
        let mut degree = vec![0usize; n];
        for &(u, v, _) in &edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        if degree.iter().all(|&d| d > 0) {
            return Graph::new(n, &edges);
        }
    }
    Err(Error::GenerationExhausted {
        attempts: ER_MAX_ATTEMPTS,
        reason: format!("erdos_renyi(n={n}, p={p}) keeps producing isolated vertices"),
    })
}

/// Preferential attachment: a complete seed graph on `m + 1` vertices, then
/// one vertex per step wiring `m` distinct targets sampled with probability
/// proportional to current degree.
fn barabasi_albert(n: usize, m: usize, seed: u64) -> Result<Graph> {
    let mut edges = Vec::new();
    let mut degree = vec![0usize; n];
    for u in 0..=m {
        for v in (u + 1)..=m {
            edges.push((u, v, 1.0));
            degree[u] += 1;
            degree[v] += 1;
        }
    }
    for new_vertex in (m + 1)..n {
        let mut targets: Vec<usize> = Vec::with_capacity(m);
        let mut draw_index = 0u64;
        let total: usize = degree[..new_vertex].iter().sum();
        while targets.len() < m {
            let bits = rng::keyed(seed, &[tag::BA_TARGET, new_vertex as u64, draw_index]);
            draw_index += 1;
            // roulette wheel over current degrees, duplicates discarded
            let mut ticket = rng::u01(bits) * total as f64;
            let mut chosen = new_vertex - 1;
            for (candidate, &k) in degree.iter().enumerate().take(new_vertex) {
                ticket -= k as f64;
                if ticket < 0.0 {
                    chosen = candidate;
                    break;
                }
            }
            if !targets.contains(&chosen) {
                targets.push(chosen);
            }
        }
        for &t in &targets {
            edges.push((t, new_vertex, 1.0));
            degree[t] += 1;
            degree[new_vertex] += 1;
        }
    }
    Graph::new(n, &edges)
}

/// Complete balanced binary tree of the given height: `2^(h+1) - 1` vertices
/// in level order, vertex `i` has children `2i+1` and `2i+2`.
fn binary_tree(height: usize) -> Result<Graph> {
    if height > 30 {
        return Err(Error::InvalidGeneratorSpec(format!(
            "binary tree height {height} is too large"
        )));
    }
    let n = (1usize << (height + 1)) - 1;
    let mut edges = Vec::with_capacity(n - 1);
    for i in 0..n {
        for child in [2 * i + 1, 2 * i + 2] {
            if child < n {
                edges.push((i, child, 1.0));
            }
        }
    }
    Graph::new(n, &edges)
}

/// Ladder graph `L_n = P_n x P_2`: `2n` vertices and `3n - 2` edges.
/// Vertices `0..n` form one rail, `n..2n` the other, rung `i` joins
/// `i` to `n + i`.
fn ladder(rungs: usize) -> Result<Graph> {
    let n = rungs;
    let mut edges = Vec::with_capacity(3 * n - 2);
    for i in 0..n {
        if i + 1 < n {
            edges.push((i, i + 1, 1.0));
            edges.push((n + i, n + i + 1, 1.0));
        }
        edges.push((i, n + i, 1.0));
    }
    Graph::new(2 * n, &edges)
}

/// Result of parsing an edge-list file.
#[derive(Debug)]
pub struct LoadedGraph {
    pub graph: Graph,
    /// Number of duplicate undirected pairs that were collapsed (first
    /// weight kept).
    pub duplicate_count: usize,
    /// Vertex labels in dense-index order.
    pub labels: Vec<String>,
}

/// Parses whitespace-separated `u v [w]` lines. Lines starting with `#` are
/// ignored, labels are arbitrary tokens mapped to dense indices in
/// first-appearance order, and a missing weight defaults to 1.0.
pub fn load_edge_list(text: &str) -> Result<LoadedGraph> {
    let mut labels: Vec<String> = Vec::new();
    let mut index_of: HashMap<String, usize> = HashMap::new();
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut seen: HashMap<(usize, usize), f64> = HashMap::new();
    let mut duplicate_count = 0usize;

    let intern = |token: &str, labels: &mut Vec<String>, index_of: &mut HashMap<String, usize>| {
        if let Some(&i) = index_of.get(token) {
            i
        } else {
            let i = labels.len();
            labels.push(token.to_string());
            index_of.insert(token.to_string(), i);
            i
        }
    };

    for (line_no, raw) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (u_tok, v_tok) = match (parts.next(), parts.next()) {
            (Some(u), Some(v)) => (u, v),
            _ => {
                return Err(Error::EdgeListParse {
                    line: line_no,
                    message: format!("expected 'u v [w]', got {line:?}"),
                })
            }
        };
        let weight = match parts.next() {
            Some(w_tok) => w_tok.parse::<f64>().map_err(|_| Error::EdgeListParse {
                line: line_no,
                message: format!("unparseable weight {w_tok:?}"),
            })?,
            None => 1.0,
        };
        if parts.next().is_some() {
            return Err(Error::EdgeListParse {
                line: line_no,
                message: "trailing tokens after 'u v w'".into(),
            });
        }
        if weight <= 0.0 || !weight.is_finite() {
            return Err(Error::EdgeListParse {
                line: line_no,
                message: format!("non-positive weight {weight}"),
            });
        }
        let u = intern(u_tok, &mut labels, &mut index_of);
        let v = intern(v_tok, &mut labels, &mut index_of);
        if u == v {
            return Err(Error::EdgeListParse {
                line: line_no,
                message: format!("self-loop at vertex {u_tok:?}"),
            });
        }
        let key = if u < v { (u, v) } else { (v, u) };
        if seen.contains_key(&key) {
            duplicate_count += 1;
            continue;
        }
        seen.insert(key, weight);
        edges.push((key.0, key.1, weight));
    }

    if edges.is_empty() {
        return Err(Error::InvalidGraph("edge list has no edges".into()));
    }
    let graph = Graph::new(labels.len(), &edges)?;
    Ok(LoadedGraph {
        graph,
        duplicate_count,
        labels,
    })
}
