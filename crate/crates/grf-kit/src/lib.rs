//! Graph kernel matrices and their random-feature estimators.
//!
//! The crate computes exact graph kernels (diffusion, d-regularized
//! Laplacian, Matérn, inverse cosine) through dense spectral decomposition,
//! approximates the estimable families with features built from terminating
//! random walks (IID or antithetic termination coupling), and benchmarks
//! the two estimators' relative Frobenius error across synthetic graph
//! families.
//!
//! ## Quick start
//!
//! ```
//! use grf_kit::graph::{generate, GraphFamily, GraphGeneratorSpec, NormalizedLaplacian};
//! use grf_kit::series::{default_mode, kernel_series, modulation_from_series};
//! use grf_kit::spectral::{exact_kernel, KernelSpec};
//! use grf_kit::walk::{estimate_kernel, Coupling, WalkEnsembleConfig};
//!
//! let graph = generate(&GraphGeneratorSpec {
//!     family: GraphFamily::Ladder,
//!     n: 10,
//!     p_edge: None,
//!     m_attach: None,
//!     seed: 0,
//! })?;
//! let lap = NormalizedLaplacian::new(&graph);
//! let kernel = KernelSpec::diffusion(0.5)?;
//! let exact = exact_kernel(&lap, &kernel, &graph)?;
//!
//! let series = kernel_series(&kernel, 50)?;
//! let modulation = modulation_from_series(&series, default_mode(&kernel))?;
//! let cfg = WalkEnsembleConfig {
//!     num_walkers: 16,
//!     p_term: 0.5,
//!     coupling: Coupling::Antithetic,
//!     seed: 42,
//!     max_steps: 500,
//! };
//! let (estimate, _diagnostics) = estimate_kernel(&graph, &modulation, &cfg)?;
//! let rel_error = (&estimate - &exact.matrix).norm() / exact.matrix.norm();
//! assert!(rel_error < 0.2);
//! # Ok::<(), grf_kit::Error>(())
//! ```

pub mod error;
pub mod experiment;
pub mod graph;
pub mod plot;
pub mod rng;
pub mod series;
pub mod spectral;
pub mod walk;

pub mod cli;

pub use error::{Error, Result};
