//! Terminating random walks, antithetic termination coupling, and the
//! random-feature kernel estimator built on them.
//!
//! Every walker owns counter-based random streams keyed by
//! `(seed, ensemble, vertex, walker, step)`, one for termination draws and
//! one for neighbor selection. Coupling only remaps which walker's
//! termination stream is read (pair partners share the even walker's raw
//! draws), so switching between IID and antithetic termination never
//! changes neighbor-selection randomness, and even-indexed walkers behave
//! identically under both schemes.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{self, tag};
use crate::series::ModulationSeries;

/// Which of the two independent walk ensembles a stream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleTag {
    First,
    Second,
}

impl EnsembleTag {
    fn id(self) -> u64 {
        match self {
            EnsembleTag::First => 0,
            EnsembleTag::Second => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EnsembleTag::First => "first",
            EnsembleTag::Second => "second",
        }
    }
}

/// Walker termination coupling scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    Iid,
    Antithetic,
}

impl std::fmt::Display for Coupling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Coupling::Iid => "iid",
            Coupling::Antithetic => "antithetic",
        })
    }
}

/// Offsets a termination draw by one half modulo one. Applying it twice
/// returns the input.
#[inline]
pub fn antithetic_trv(t: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&t));
    if t < 0.5 {
        t + 0.5
    } else {
        t - 0.5
    }
}

/// Reproducible stream of termination random variables for one walker.
///
/// `(seed, vertex, walker, ensemble, counter)` fully determines each draw;
/// the marginal distribution is uniform on `[0, 1)`.
#[derive(Debug, Clone)]
pub struct TrvStream {
    seed: u64,
    vertex: usize,
    walker: usize,
    ensemble: EnsembleTag,
    counter: u64,
}

impl TrvStream {
    pub fn new(seed: u64, vertex: usize, walker: usize, ensemble: EnsembleTag) -> Self {
        Self { seed, vertex, walker, ensemble, counter: 0 }
    }

    /// Draw at an explicit counter value, without advancing.
    pub fn at(&self, counter: u64) -> f64 {
        rng::u01(rng::keyed(
            self.seed,
            &[tag::TRV, self.ensemble.id(), self.vertex as u64, self.walker as u64, counter],
        ))
    }

    /// Next draw; advances the counter.
    pub fn next_trv(&mut self) -> f64 {
        let value = self.at(self.counter);
        self.counter += 1;
        value
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }
}

/// Identifies one walker within one ensemble and resolves its random
/// streams under the configured coupling.
#[derive(Debug, Clone, Copy)]
pub struct WalkerContext {
    pub seed: u64,
    pub vertex: usize,
    pub walker: usize,
    pub ensemble: EnsembleTag,
    pub coupling: Coupling,
}

impl WalkerContext {
    /// Termination draw for this walker at `step`. Under antithetic
    /// coupling the pair `(2j, 2j+1)` shares the even member's raw stream;
    /// the odd member applies the half offset. A dead partner simply stops
    /// consuming draws; the survivor stays on its per-step transform.
    #[inline]
    pub fn trv(&self, step: u64) -> f64 {
        match self.coupling {
            Coupling::Iid => {
                TrvStream::new(self.seed, self.vertex, self.walker, self.ensemble).at(step)
            }
            Coupling::Antithetic => {
                let leader = self.walker & !1;
                let raw = TrvStream::new(self.seed, self.vertex, leader, self.ensemble).at(step);
                if self.walker % 2 == 1 {
                    antithetic_trv(raw)
                } else {
                    raw
                }
            }
        }
    }

    /// Neighbor-selection bits for `step`; independent of the coupling.
    #[inline]
    fn neighbor_bits(&self, step: u64) -> u64 {
        rng::keyed(
            self.seed,
            &[tag::STEP, self.ensemble.id(), self.vertex as u64, self.walker as u64, step],
        )
    }
}

/// One sampled walk: visited vertices, the cumulative importance weight at
/// every step, and whether the hard step cap cut the walk short.
#[derive(Debug, Clone)]
pub struct WalkRecord {
    pub vertices: Vec<usize>,
    pub weights: Vec<f64>,
    pub truncated: bool,
}

impl WalkRecord {
    /// Number of moves made (0 for a walk that died before moving).
    pub fn length(&self) -> usize {
        self.vertices.len() - 1
    }
}

/// Samples one terminating random walk from `ctx.vertex`.
///
/// At each step the termination draw comes first: if it falls below
/// `p_term` the walk ends before moving, so walk length is exactly
/// Geometric(p). Otherwise the walker moves to a uniformly random neighbor
/// `v` of `u` and multiplies its running importance weight by
/// `A_norm(u, v) * deg(u) / (1 - p_term)` with `deg` the neighbor count.
pub fn sample_walk(graph: &Graph, ctx: &WalkerContext, p_term: f64, max_steps: usize) -> WalkRecord {
    let mut vertices = Vec::with_capacity(8);
    let mut weights = Vec::with_capacity(8);
    let mut current = ctx.vertex;
    let mut weight = 1.0f64;
    vertices.push(current);
    weights.push(weight);

    for step in 0..max_steps as u64 {
        if ctx.trv(step) < p_term {
            return WalkRecord { vertices, weights, truncated: false };
        }
        let degree = graph.degree(current);
        let next = graph.neighbors(current)[rng::uniform_index(ctx.neighbor_bits(step), degree)];
        let a_uv = graph.adjacency()[(current, next)]
            / (graph.weighted_degree(current) * graph.weighted_degree(next)).sqrt();
        weight *= a_uv * degree as f64 / (1.0 - p_term);
        current = next;
        vertices.push(current);
        weights.push(weight);
    }
    WalkRecord { vertices, weights, truncated: true }
}

/// Walk ensemble parameters shared by every vertex.
#[derive(Debug, Clone, Copy)]
pub struct WalkEnsembleConfig {
    pub num_walkers: usize,
    pub p_term: f64,
    pub coupling: Coupling,
    pub seed: u64,
    pub max_steps: usize,
}

impl WalkEnsembleConfig {
    /// Step cap that never clips deposits: loads beyond the modulation
    /// order are zero anyway.
    pub fn default_max_steps(kmax: usize) -> usize {
        10 * kmax
    }

    pub fn validate(&self, max_order: usize) -> Result<()> {
        if self.num_walkers == 0 {
            return Err(Error::InvalidWalkConfig("num_walkers must be >= 1".into()));
        }
        if self.coupling == Coupling::Antithetic && !self.num_walkers.is_multiple_of(2) {
            return Err(Error::InvalidWalkConfig(format!(
                "antithetic coupling needs an even walker count, got {}",
                self.num_walkers
            )));
        }
        if !(self.p_term > 0.0 && self.p_term < 1.0) {
            return Err(Error::InvalidWalkConfig(format!(
                "termination probability must lie in (0, 1), got {}",
                self.p_term
            )));
        }
        if self.max_steps < max_order {
            return Err(Error::InvalidWalkConfig(format!(
                "max_steps {} is below the modulation order {max_order}",
                self.max_steps
            )));
        }
        Ok(())
    }
}

/// Per-ensemble walk statistics, dumpable as JSON lines.
#[derive(Debug, Clone, Serialize)]
pub struct WalkDiagnostics {
    pub ensemble: &'static str,
    pub walks: u64,
    /// `length_histogram[k]` counts walks that made exactly `k` moves.
    pub length_histogram: Vec<u64>,
    pub truncated_walks: u64,
    pub weight_min: f64,
    pub weight_max: f64,
}

impl WalkDiagnostics {
    fn new(ensemble: EnsembleTag) -> Self {
        Self {
            ensemble: ensemble.name(),
            walks: 0,
            length_histogram: Vec::new(),
            truncated_walks: 0,
            weight_min: f64::INFINITY,
            weight_max: f64::NEG_INFINITY,
        }
    }

    fn record(&mut self, record: &WalkRecord) {
        self.walks += 1;
        let len = record.length();
        if self.length_histogram.len() <= len {
            self.length_histogram.resize(len + 1, 0);
        }
        self.length_histogram[len] += 1;
        if record.truncated {
            self.truncated_walks += 1;
        }
        for &w in &record.weights {
            self.weight_min = self.weight_min.min(w);
            self.weight_max = self.weight_max.max(w);
        }
    }

    fn merge(&mut self, other: &WalkDiagnostics) {
        self.walks += other.walks;
        if self.length_histogram.len() < other.length_histogram.len() {
            self.length_histogram.resize(other.length_histogram.len(), 0);
        }
        for (slot, &count) in self.length_histogram.iter_mut().zip(&other.length_histogram) {
            *slot += count;
        }
        self.truncated_walks += other.truncated_walks;
        self.weight_min = self.weight_min.min(other.weight_min);
        self.weight_max = self.weight_max.max(other.weight_max);
    }
}

/// Per-vertex feature vectors for one ensemble, stored as matrix rows.
#[derive(Debug, Clone)]
pub struct FeatureSet {
    pub ensemble: EnsembleTag,
    matrix: DMatrix<f64>,
}

impl FeatureSet {
    /// Row `i` is the feature vector owned by vertex `i`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn vector(&self, vertex: usize) -> Vec<f64> {
        self.matrix.row(vertex).iter().copied().collect()
    }
}

/// Runs `cfg.num_walkers` walks from every vertex and accumulates
/// modulated load deposits: a walker owned by vertex `i` standing on
/// vertex `v` at step `k` adds `f[k] * weight_k` to `phi(i)[v]`. Step 0
/// always deposits `f[0]` at the owner itself. Every feature vector is
/// divided by the walker count.
///
/// Vertices are processed in parallel; per-vertex accumulation is
/// sequential in walker order, so results are identical for any thread
/// count.
pub fn build_features(
    graph: &Graph,
    modulation: &[f64],
    cfg: &WalkEnsembleConfig,
    ensemble: EnsembleTag,
) -> Result<(FeatureSet, WalkDiagnostics)> {
    cfg.validate(modulation.len() - 1)?;
    let n = graph.num_vertices();

    let per_vertex: Vec<(Vec<f64>, WalkDiagnostics)> = (0..n)
        .into_par_iter()
        .map(|vertex| {
            let mut row = vec![0.0f64; n];
            let mut diag = WalkDiagnostics::new(ensemble);
            for walker in 0..cfg.num_walkers {
                let ctx = WalkerContext {
                    seed: cfg.seed,
                    vertex,
                    walker,
                    ensemble,
                    coupling: cfg.coupling,
                };
                let record = sample_walk(graph, &ctx, cfg.p_term, cfg.max_steps);
                diag.record(&record);
                let deposits = record.vertices.len().min(modulation.len());
                for k in 0..deposits {
                    row[record.vertices[k]] += modulation[k] * record.weights[k];
                }
            }
            let scale = 1.0 / cfg.num_walkers as f64;
            for value in &mut row {
                *value *= scale;
            }
            (row, diag)
        })
        .collect();

    let mut matrix = DMatrix::zeros(n, n);
    let mut diagnostics = WalkDiagnostics::new(ensemble);
    for (vertex, (row, diag)) in per_vertex.iter().enumerate() {
        for (j, &value) in row.iter().enumerate() {
            matrix[(vertex, j)] = value;
        }
        diagnostics.merge(diag);
    }
    Ok((FeatureSet { ensemble, matrix }, diagnostics))
}

/// Diagnostics for both ensembles of one estimate.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateDiagnostics {
    pub first: WalkDiagnostics,
    pub second: WalkDiagnostics,
}

impl EstimateDiagnostics {
    /// One JSON object per line, one line per ensemble.
    pub fn to_json_lines(&self) -> String {
        let mut out = serde_json::to_string(&self.first).expect("diagnostics serialize");
        out.push('\n');
        out.push_str(&serde_json::to_string(&self.second).expect("diagnostics serialize"));
        out.push('\n');
        out
    }
}

/// Estimates the kernel matrix from two independent walk ensembles, one
/// per modulation sequence: `K_hat[i, j] = phi(i) . psi(j)`, symmetrized.
/// The expectation equals the truncated kernel series entrywise, diagonal
/// included, because the ensembles are independent.
pub fn estimate_kernel(
    graph: &Graph,
    modulation: &ModulationSeries,
    cfg: &WalkEnsembleConfig,
) -> Result<(DMatrix<f64>, EstimateDiagnostics)> {
    let (phi, first) = build_features(graph, modulation.f1(), cfg, EnsembleTag::First)?;
    let (psi, second) = build_features(graph, modulation.f2(), cfg, EnsembleTag::Second)?;
    let raw = phi.matrix() * psi.matrix().transpose();
    let estimate = (&raw + raw.transpose()) * 0.5;
    Ok((estimate, EstimateDiagnostics { first, second }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GraphFamily, GraphGeneratorSpec};
    use crate::series::{kernel_series, modulation_from_series, ModulationMode};
    use crate::spectral::KernelSpec;
    use proptest::prelude::*;

    fn k2() -> Graph {
        Graph::new(2, &[(0, 1, 1.0)]).unwrap()
    }

    fn p3() -> Graph {
        Graph::new(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }

    #[test]
    fn antithetic_trv_examples() {
        assert!((antithetic_trv(0.3) - 0.8).abs() < 1e-15);
        assert!((antithetic_trv(0.7) - 0.2).abs() < 1e-15);
        assert_eq!(antithetic_trv(0.0), 0.5);
    }

    #[test]
    fn trv_stream_is_reproducible_and_keyed() {
        let mut a = TrvStream::new(7, 3, 1, EnsembleTag::First);
        let mut b = TrvStream::new(7, 3, 1, EnsembleTag::First);
        for _ in 0..50 {
            assert_eq!(a.next_trv(), b.next_trv());
        }
        assert_eq!(a.counter(), 50);
        let c = TrvStream::new(7, 3, 1, EnsembleTag::Second);
        assert_ne!(a.at(0), c.at(0));
        assert_ne!(a.at(0), TrvStream::new(7, 3, 2, EnsembleTag::First).at(0));
    }

    #[test]
    fn antithetic_pair_has_exactly_one_step_zero_termination() {
        // p = 0.5: the half offset puts exactly one of each pair below 0.5
        for seed in 0..1000u64 {
            for vertex in 0..3 {
                let even = WalkerContext {
                    seed,
                    vertex,
                    walker: 0,
                    ensemble: EnsembleTag::First,
                    coupling: Coupling::Antithetic,
                };
                let odd = WalkerContext { walker: 1, ..even };
                let kills = [even.trv(0) < 0.5, odd.trv(0) < 0.5];
                assert_eq!(kills.iter().filter(|&&k| k).count(), 1);
            }
        }
    }

    #[test]
    fn walk_terminates_at_length_zero_when_first_trv_is_low() {
        let g = k2();
        let mut saw_zero = false;
        let mut saw_positive = false;
        for seed in 0..64 {
            let ctx = WalkerContext {
                seed,
                vertex: 0,
                walker: 0,
                ensemble: EnsembleTag::First,
                coupling: Coupling::Iid,
            };
            let record = sample_walk(&g, &ctx, 0.5, 100);
            if ctx.trv(0) < 0.5 {
                assert_eq!(record.length(), 0);
                assert_eq!(record.vertices, vec![0]);
                saw_zero = true;
            } else {
                assert!(record.length() >= 1);
                saw_positive = true;
            }
        }
        assert!(saw_zero && saw_positive);
    }

    #[test]
    fn k2_importance_weight_after_one_step_is_two() {
        // A_norm(0,1) = 1 on K2, deg = 1, p = 0.5 -> weight 1 / 0.5 = 2
        let g = k2();
        for seed in 0..64 {
            let ctx = WalkerContext {
                seed,
                vertex: 0,
                walker: 0,
                ensemble: EnsembleTag::First,
                coupling: Coupling::Iid,
            };
            let record = sample_walk(&g, &ctx, 0.5, 100);
            for (k, &w) in record.weights.iter().enumerate() {
                assert!((w - 2.0f64.powi(k as i32)).abs() < 1e-12);
            }
            if record.length() >= 1 {
                assert_eq!(record.vertices[1], 1);
            }
        }
    }

    #[test]
    fn walk_lengths_have_geometric_mean() {
        let g = generate(&GraphGeneratorSpec {
            family: GraphFamily::ErdosRenyi,
            n: 10,
            p_edge: Some(0.6),
            m_attach: None,
            seed: 1,
        })
        .unwrap();
        let samples = 100_000;
        let mut total = 0usize;
        for walker in 0..samples {
            let ctx = WalkerContext {
                seed: 99,
                vertex: walker % 10,
                walker,
                ensemble: EnsembleTag::First,
                coupling: Coupling::Iid,
            };
            total += sample_walk(&g, &ctx, 0.5, 500).length();
        }
        let mean = total as f64 / samples as f64;
        // Geometric(0.5) mean 1, std sqrt(2); 4 sigma of the sample mean
        assert!((mean - 1.0).abs() < 4.0 * (2.0f64).sqrt() / (samples as f64).sqrt());
    }

    #[test]
    fn truncation_is_flagged_at_the_step_cap() {
        let g = k2();
        let mut truncated = 0;
        for seed in 0..2000 {
            let ctx = WalkerContext {
                seed,
                vertex: 0,
                walker: 0,
                ensemble: EnsembleTag::First,
                coupling: Coupling::Iid,
            };
            let record = sample_walk(&g, &ctx, 0.5, 2);
            assert!(record.length() <= 2);
            if record.truncated {
                truncated += 1;
                assert_eq!(record.length(), 2);
            }
        }
        // P(survive two draws) = 1/4; expect around 500
        assert!(truncated > 300 && truncated < 700);
    }

    #[test]
    fn even_walkers_match_across_couplings_and_odd_share_moves() {
        let g = p3();
        for seed in 0..200 {
            let iid0 = WalkerContext {
                seed,
                vertex: 1,
                walker: 0,
                ensemble: EnsembleTag::First,
                coupling: Coupling::Iid,
            };
            let anti0 = WalkerContext { coupling: Coupling::Antithetic, ..iid0 };
            let r_iid = sample_walk(&g, &iid0, 0.5, 100);
            let r_anti = sample_walk(&g, &anti0, 0.5, 100);
            assert_eq!(r_iid.vertices, r_anti.vertices);
            assert_eq!(r_iid.weights, r_anti.weights);

            // odd walker: termination differs, neighbor choices agree on
            // the common prefix
            let iid1 = WalkerContext { walker: 1, ..iid0 };
            let anti1 = WalkerContext { walker: 1, ..anti0 };
            let r_iid1 = sample_walk(&g, &iid1, 0.5, 100);
            let r_anti1 = sample_walk(&g, &anti1, 0.5, 100);
            let common = r_iid1.vertices.len().min(r_anti1.vertices.len());
            assert_eq!(r_iid1.vertices[..common], r_anti1.vertices[..common]);
        }
    }

    #[test]
    fn point_mass_modulation_gives_unit_basis_features() {
        let g = p3();
        for coupling in [Coupling::Iid, Coupling::Antithetic] {
            let cfg = WalkEnsembleConfig {
                num_walkers: 4,
                p_term: 0.5,
                coupling,
                seed: 5,
                max_steps: 50,
            };
            let modulation = [2.5, 0.0, 0.0];
            let (features, diag) =
                build_features(&g, &modulation, &cfg, EnsembleTag::First).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let expected = if i == j { 2.5 } else { 0.0 };
                    assert_eq!(features.matrix()[(i, j)], expected);
                }
            }
            assert_eq!(features.vector(1), vec![0.0, 2.5, 0.0]);
            assert_eq!(features.ensemble, EnsembleTag::First);
            assert_eq!(diag.walks, 12);
        }
    }

    #[test]
    fn identity_modulation_pair_estimates_identity_exactly() {
        let g = p3();
        let series = kernel_series(&KernelSpec::diffusion(0.0).unwrap(), 5).unwrap();
        let modulation = modulation_from_series(&series, ModulationMode::Symmetric).unwrap();
        let cfg = WalkEnsembleConfig {
            num_walkers: 6,
            p_term: 0.5,
            coupling: Coupling::Iid,
            seed: 11,
            max_steps: 50,
        };
        let (estimate, _) = estimate_kernel(&g, &modulation, &cfg).unwrap();
        assert_eq!(estimate, DMatrix::identity(3, 3));
    }

    #[test]
    fn estimate_is_deterministic_across_thread_counts() {
        let g = generate(&GraphGeneratorSpec {
            family: GraphFamily::Ladder,
            n: 5,
            p_edge: None,
            m_attach: None,
            seed: 0,
        })
        .unwrap();
        let series = kernel_series(&KernelSpec::diffusion(0.5).unwrap(), 20).unwrap();
        let modulation = modulation_from_series(&series, ModulationMode::Symmetric).unwrap();
        let cfg = WalkEnsembleConfig {
            num_walkers: 8,
            p_term: 0.5,
            coupling: Coupling::Antithetic,
            seed: 77,
            max_steps: 200,
        };
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| estimate_kernel(&g, &modulation, &cfg).unwrap().0)
        };
        let single = run(1);
        let quad = run(4);
        assert_eq!(single, quad);
    }

    #[test]
    fn config_validation_rejects_bad_parameters() {
        let base = WalkEnsembleConfig {
            num_walkers: 4,
            p_term: 0.5,
            coupling: Coupling::Antithetic,
            seed: 0,
            max_steps: 100,
        };
        assert!(base.validate(10).is_ok());
        assert!(WalkEnsembleConfig { num_walkers: 0, ..base }.validate(10).is_err());
        assert!(WalkEnsembleConfig { num_walkers: 3, ..base }.validate(10).is_err());
        assert!(WalkEnsembleConfig { p_term: 0.0, ..base }.validate(10).is_err());
        assert!(WalkEnsembleConfig { p_term: 1.0, ..base }.validate(10).is_err());
        assert!(WalkEnsembleConfig { max_steps: 5, ..base }.validate(10).is_err());
        assert!(WalkEnsembleConfig { num_walkers: 3, coupling: Coupling::Iid, ..base }
            .validate(10)
            .is_ok());
    }

    #[test]
    fn diagnostics_json_lines_shape() {
        let g = p3();
        let series = kernel_series(&KernelSpec::diffusion(0.5).unwrap(), 10).unwrap();
        let modulation = modulation_from_series(&series, ModulationMode::Symmetric).unwrap();
        let cfg = WalkEnsembleConfig {
            num_walkers: 2,
            p_term: 0.5,
            coupling: Coupling::Iid,
            seed: 3,
            max_steps: 100,
        };
        let (_, diag) = estimate_kernel(&g, &modulation, &cfg).unwrap();
        let dump = diag.to_json_lines();
        let lines: Vec<&str> = dump.lines().collect();
        assert_eq!(lines.len(), 2);
        let first: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(first["ensemble"], "first");
        assert_eq!(first["walks"], 6);
        assert!(first["length_histogram"].is_array());
    }

    proptest! {
        #[test]
        fn antithetic_trv_is_an_involution_preserving_the_unit_interval(raw in any::<u64>()) {
            let t = crate::rng::u01(raw);
            let offset = antithetic_trv(t);
            prop_assert!((0.0..1.0).contains(&offset));
            prop_assert_eq!(antithetic_trv(offset), t);
            // exactly one of the pair falls below one half
            prop_assert!((t < 0.5) != (offset < 0.5));
        }
    }
}
