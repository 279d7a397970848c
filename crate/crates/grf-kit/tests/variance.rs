//! Behavioral checks on the variance side of the estimator: antithetic
//! termination should reduce both the spread and the mean of the error on
//! the families where its benefit is established, and the harness must
//! scale to the largest graphs the benchmarks use.

use grf_kit::experiment::{mean_std, run_experiment, ExperimentSpec, GraphSource};
use grf_kit::graph::{GraphFamily, GraphGeneratorSpec};
use grf_kit::spectral::KernelSpec;
use grf_kit::walk::Coupling;

fn ladder(rungs: usize) -> GraphGeneratorSpec {
    GraphGeneratorSpec {
        family: GraphFamily::Ladder,
        n: rungs,
        p_edge: None,
        m_attach: None,
        seed: 0,
    }
}

#[test]
fn antithetic_reduces_error_spread_on_regularized_laplacian() {
    // the coupling's variance reduction is established for this kernel;
    // with 400 repeats the gap is far outside repeat noise
    let spec = ExperimentSpec {
        graph: GraphSource::Generator(ladder(10)),
        kernel: KernelSpec::regularized_laplacian(1.0, 2).unwrap(),
        walker_counts: vec![4],
        repeats: 400,
        p_term: 0.5,
        couplings: vec![Coupling::Iid, Coupling::Antithetic],
        base_seed: 60_601,
        kmax: 50,
        mode: None,
    };
    let report = run_experiment(&spec).unwrap();
    let collect = |coupling: Coupling| -> Vec<f64> {
        report
            .rows
            .iter()
            .filter(|r| r.coupling == coupling)
            .map(|r| r.rel_frob_error)
            .collect()
    };
    let (iid_mean, iid_std) = mean_std(&collect(Coupling::Iid));
    let (anti_mean, anti_std) = mean_std(&collect(Coupling::Antithetic));
    assert!(
        anti_mean < iid_mean,
        "antithetic mean {anti_mean} should beat iid mean {iid_mean}"
    );
    assert!(
        anti_std < iid_std,
        "antithetic spread {anti_std} should beat iid spread {iid_std}"
    );
}

#[test]
fn harness_handles_hundred_vertex_graphs() {
    // largest spin used by the benchmarks; keep the protocol small so the
    // test stays quick while covering the dense-eigensolver path
    let spec = ExperimentSpec {
        graph: GraphSource::Generator(GraphGeneratorSpec {
            family: GraphFamily::ErdosRenyi,
            n: 100,
            p_edge: Some(0.3),
            m_attach: None,
            seed: 12,
        }),
        kernel: KernelSpec::diffusion(0.5).unwrap(),
        walker_counts: vec![2, 16],
        repeats: 10,
        p_term: 0.5,
        couplings: vec![Coupling::Iid, Coupling::Antithetic],
        base_seed: 7,
        kmax: 50,
        mode: None,
    };
    let report = run_experiment(&spec).unwrap();
    assert_eq!(report.num_vertices, 100);
    assert_eq!(report.rows.len(), 2 * 2 * 10);
    for coupling in [Coupling::Iid, Coupling::Antithetic] {
        let few = report.summary_for(coupling, 2).unwrap().mean;
        let many = report.summary_for(coupling, 16).unwrap().mean;
        assert!(many < few, "{coupling}: error must shrink with walkers");
    }
}
