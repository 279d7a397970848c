//! Oracle checks for the walk estimator: exhaustive-enumeration
//! expectations against the analytic series targets, and Monte Carlo means
//! against both.

mod common;

use common::{max_abs_diff, oracle_features, poly_in_matrix};
use grf_kit::graph::{Graph, NormalizedLaplacian};
use grf_kit::series::{kernel_series, modulation_from_series, ModulationMode};
use grf_kit::spectral::KernelSpec;
use grf_kit::walk::{build_features, estimate_kernel, Coupling, EnsembleTag, WalkEnsembleConfig};
use nalgebra::DMatrix;

fn p3() -> Graph {
    Graph::new(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
}

fn k3() -> Graph {
    Graph::new(3, &[(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)]).unwrap()
}

fn k4() -> Graph {
    let mut edges = Vec::new();
    for u in 0..4 {
        for v in (u + 1)..4 {
            edges.push((u, v, 1.0));
        }
    }
    Graph::new(4, &edges).unwrap()
}

/// Weighted star: exercises the weighted normalized adjacency.
fn weighted_star() -> Graph {
    Graph::new(4, &[(0, 1, 2.0), (0, 2, 0.5), (0, 3, 1.0)]).unwrap()
}

#[test]
fn oracle_matches_matrix_powers_on_tiny_graphs() {
    // the enumeration oracle and the series target are two independent
    // routes to E[phi]; they must agree to near machine precision
    let kmax = 6;
    for graph in [p3(), k3(), k4(), weighted_star()] {
        let lap = NormalizedLaplacian::new(&graph);
        let series = kernel_series(&KernelSpec::diffusion(0.5).unwrap(), kmax).unwrap();
        let modulation = modulation_from_series(&series, ModulationMode::Symmetric).unwrap();
        let oracle = oracle_features(&graph, lap.normalized_adjacency(), modulation.f1(), 0.5);
        let target = poly_in_matrix(modulation.f1(), lap.normalized_adjacency());
        assert!(max_abs_diff(&oracle, &target) <= 1e-10);
    }
}

#[test]
fn sampled_features_are_unbiased_for_the_oracle_expectation() {
    // Monte Carlo mean of phi entries within 3 standard errors of the
    // enumeration oracle
    let graph = k3();
    let lap = NormalizedLaplacian::new(&graph);
    let series = kernel_series(&KernelSpec::diffusion(0.5).unwrap(), 6).unwrap();
    let modulation = modulation_from_series(&series, ModulationMode::Symmetric).unwrap();
    let expected = oracle_features(&graph, lap.normalized_adjacency(), modulation.f1(), 0.5);

    let runs = 20_000usize;
    let n = graph.num_vertices();
    let mut sum = DMatrix::<f64>::zeros(n, n);
    let mut sum_sq = DMatrix::<f64>::zeros(n, n);
    for run in 0..runs {
        let cfg = WalkEnsembleConfig {
            num_walkers: 2,
            p_term: 0.5,
            coupling: Coupling::Iid,
            seed: 31_000 + run as u64,
            max_steps: 60,
        };
        let (features, _) = build_features(&graph, modulation.f1(), &cfg, EnsembleTag::First).unwrap();
        sum += features.matrix();
        sum_sq += features.matrix().component_mul(features.matrix());
    }
    for i in 0..n {
        for j in 0..n {
            let mean = sum[(i, j)] / runs as f64;
            let var = (sum_sq[(i, j)] / runs as f64 - mean * mean).max(0.0);
            let se = (var / runs as f64).sqrt();
            let dev = (mean - expected[(i, j)]).abs();
            assert!(
                dev <= 3.0 * se + 1e-12,
                "phi[{i},{j}]: dev {dev:.3e} > 3 se {:.3e}",
                3.0 * se
            );
        }
    }
}

#[test]
fn estimator_expectation_matches_product_of_ensemble_targets() {
    // E[K_hat] = F1 F2^T exactly (independent ensembles); Monte Carlo over
    // seeds confirms at 3 standard errors for both couplings
    let graph = p3();
    let lap = NormalizedLaplacian::new(&graph);
    let series = kernel_series(&KernelSpec::diffusion(0.5).unwrap(), 6).unwrap();
    let modulation = modulation_from_series(&series, ModulationMode::Symmetric).unwrap();
    let f1 = poly_in_matrix(modulation.f1(), lap.normalized_adjacency());
    let f2 = poly_in_matrix(modulation.f2(), lap.normalized_adjacency());
    let target = &f1 * f2.transpose();

    for coupling in [Coupling::Iid, Coupling::Antithetic] {
        let runs = 20_000usize;
        let n = graph.num_vertices();
        let mut sum = DMatrix::<f64>::zeros(n, n);
        let mut sum_sq = DMatrix::<f64>::zeros(n, n);
        for run in 0..runs {
            let cfg = WalkEnsembleConfig {
                num_walkers: 2,
                p_term: 0.5,
                coupling,
                seed: 77_000 + run as u64,
                max_steps: 60,
            };
            let (estimate, _) = estimate_kernel(&graph, &modulation, &cfg).unwrap();
            sum += &estimate;
            sum_sq += estimate.component_mul(&estimate);
        }
        for i in 0..n {
            for j in 0..n {
                let mean = sum[(i, j)] / runs as f64;
                let var = (sum_sq[(i, j)] / runs as f64 - mean * mean).max(0.0);
                let se = (var / runs as f64).sqrt();
                let dev = (mean - target[(i, j)]).abs();
                assert!(
                    dev <= 3.0 * se + 1e-12,
                    "{coupling} K[{i},{j}]: dev {dev:.3e} > 3 se {:.3e}",
                    3.0 * se
                );
            }
        }
    }
}

#[test]
fn asymmetric_mode_is_unbiased_too() {
    // f2 = delta: the second ensemble contributes unit basis vectors and
    // K_hat rows average the raw loads
    let graph = k3();
    let lap = NormalizedLaplacian::new(&graph);
    let series = kernel_series(&KernelSpec::inverse_cosine(), 6).unwrap();
    let modulation = modulation_from_series(&series, ModulationMode::Asymmetric).unwrap();
    let f1 = poly_in_matrix(modulation.f1(), lap.normalized_adjacency());
    let f2 = poly_in_matrix(modulation.f2(), lap.normalized_adjacency());
    let target = &f1 * f2.transpose();

    let runs = 20_000usize;
    let n = graph.num_vertices();
    let mut sum = DMatrix::<f64>::zeros(n, n);
    for run in 0..runs {
        let cfg = WalkEnsembleConfig {
            num_walkers: 2,
            p_term: 0.5,
            coupling: Coupling::Antithetic,
            seed: 123_000 + run as u64,
            max_steps: 60,
        };
        let (estimate, _) = estimate_kernel(&graph, &modulation, &cfg).unwrap();
        sum += &estimate;
    }
    let mean = sum / runs as f64;
    // loose 1% absolute band; per-entry SE is ~2e-3 here
    assert!(max_abs_diff(&mean, &target) < 0.01);
}

#[test]
fn k2_large_ensemble_mean_load_matches_series() {
    // one call with 1e5 walkers: phi(0)[1] concentrates on
    // sum_k f(k) (A^k)[0,1], where odd powers of A are the K2 flip
    let graph = Graph::new(2, &[(0, 1, 1.0)]).unwrap();
    let lap = NormalizedLaplacian::new(&graph);
    let series = kernel_series(&KernelSpec::diffusion(0.5).unwrap(), 20).unwrap();
    let modulation = modulation_from_series(&series, ModulationMode::Symmetric).unwrap();
    let target = poly_in_matrix(modulation.f1(), lap.normalized_adjacency());

    let cfg = WalkEnsembleConfig {
        num_walkers: 100_000,
        p_term: 0.5,
        coupling: Coupling::Iid,
        seed: 2_024,
        max_steps: 200,
    };
    let (features, diag) = build_features(&graph, modulation.f1(), &cfg, EnsembleTag::First).unwrap();
    // per-walker deposit std is O(1); 3 standard errors at 1e5 walkers
    let standard_error_bound = 3.0 * 1.0 / (cfg.num_walkers as f64).sqrt();
    assert!(
        (features.matrix()[(0, 1)] - target[(0, 1)]).abs() < standard_error_bound,
        "mean load {} vs target {}",
        features.matrix()[(0, 1)],
        target[(0, 1)]
    );
    assert_eq!(diag.walks, 200_000);
    assert_eq!(diag.truncated_walks, 0);
}

#[test]
fn p3_far_entry_matches_enumerated_target() {
    // K_hat[0, 2] couples the two path ends; its truncated-series target
    // is the (0,2) entry of sum_k alpha_k A^k
    let graph = p3();
    let lap = NormalizedLaplacian::new(&graph);
    let kmax = 20;
    let series = kernel_series(&KernelSpec::diffusion(0.5).unwrap(), kmax).unwrap();
    let modulation = modulation_from_series(&series, ModulationMode::Symmetric).unwrap();
    let truncated = poly_in_matrix(series.coefficients(), lap.normalized_adjacency());
    let target = truncated[(0, 2)];

    let runs = 100_000usize;
    let mut values = Vec::with_capacity(runs);
    for run in 0..runs {
        let cfg = WalkEnsembleConfig {
            num_walkers: 2,
            p_term: 0.5,
            coupling: Coupling::Iid,
            seed: 555_000 + run as u64,
            max_steps: 200,
        };
        let (estimate, _) = estimate_kernel(&graph, &modulation, &cfg).unwrap();
        values.push(estimate[(0, 2)]);
    }
    let mean: f64 = values.iter().sum::<f64>() / runs as f64;
    let var: f64 =
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (runs as f64 - 1.0);
    let se = (var / runs as f64).sqrt();
    assert!(
        (mean - target).abs() <= 3.0 * se,
        "mean {mean:.6e} vs target {target:.6e}, 3 se {:.3e}",
        3.0 * se
    );
}
