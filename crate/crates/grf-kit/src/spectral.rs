//! Ground-truth kernel matrices via dense symmetric eigendecomposition,
//! plus BFS shortest-path distances for the distance-based Matérn kernel.

use std::collections::VecDeque;
use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{Graph, NormalizedLaplacian};

/// One of the supported kernel families with its parameters.
///
/// `MaternLaplacian` is the walk-estimable stand-in for the Matérn family:
/// it reuses the regularized-Laplacian form with `(s, d)` derived from a
/// smoothness/length-scale pair. `MaternDistance` is the closed-form
/// half-integer Matérn over hop distances and is exact-only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Diffusion { t: f64 },
    RegularizedLaplacian { s: f64, d: u32 },
    MaternLaplacian { s: f64, d: u32 },
    /// Smoothness nu = k + 1/2 stored via the integer `k`.
    MaternDistance { k: u32, l: f64 },
    InverseCosine,
}

impl KernelSpec {
    pub fn diffusion(t: f64) -> Result<Self> {
        if t < 0.0 || !t.is_finite() {
            return Err(Error::InvalidKernelSpec(format!(
                "diffusion time must be >= 0, got {t}"
            )));
        }
        Ok(KernelSpec::Diffusion { t })
    }

    pub fn regularized_laplacian(s: f64, d: u32) -> Result<Self> {
        check_regularized(s, d)?;
        Ok(KernelSpec::RegularizedLaplacian { s, d })
    }

    /// Builds the estimable Matérn variant from integer smoothness `nu` and
    /// length scale `l`, mapping `s = l^2 / (2 nu)` and `d = nu`.
    pub fn matern_laplacian(nu: u32, l: f64) -> Result<Self> {
        if nu == 0 {
            return Err(Error::InvalidKernelSpec("matern_laplacian needs nu >= 1".into()));
        }
        if l <= 0.0 || !l.is_finite() {
            return Err(Error::InvalidKernelSpec(format!("length scale must be > 0, got {l}")));
        }
        let s = l * l / (2.0 * f64::from(nu));
        check_regularized(s, nu)?;
        Ok(KernelSpec::MaternLaplacian { s, d: nu })
    }

    /// Same variant from its stored `(s, d)` parameters directly.
    pub fn matern_laplacian_from_scale(s: f64, d: u32) -> Result<Self> {
        check_regularized(s, d)?;
        Ok(KernelSpec::MaternLaplacian { s, d })
    }

    /// Builds the distance Matérn from half-integer smoothness `nu = k + 1/2`.
    pub fn matern_distance(nu: f64, l: f64) -> Result<Self> {
        let two_nu = 2.0 * nu;
        let rounded = two_nu.round();
        if (two_nu - rounded).abs() > 1e-9 || rounded < 1.0 || rounded % 2.0 != 1.0 {
            return Err(Error::InvalidKernelSpec(format!(
                "matern_distance needs half-integer nu (1/2, 3/2, 5/2, ...), got {nu}"
            )));
        }
        if l <= 0.0 || !l.is_finite() {
            return Err(Error::InvalidKernelSpec(format!("length scale must be > 0, got {l}")));
        }
        let k = ((rounded as u64 - 1) / 2) as u32;
        if k > 20 {
            return Err(Error::InvalidKernelSpec(format!("nu = {nu} is too large")));
        }
        Ok(KernelSpec::MaternDistance { k, l })
    }

    pub fn inverse_cosine() -> Self {
        KernelSpec::InverseCosine
    }

    /// True for the families that admit a power series in the normalized
    /// adjacency, i.e. the ones the walk estimator can target.
    pub fn is_estimable(&self) -> bool {
        !matches!(self, KernelSpec::MaternDistance { .. })
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            KernelSpec::Diffusion { .. } => "diffusion",
            KernelSpec::RegularizedLaplacian { .. } => "regularized_laplacian",
            KernelSpec::MaternLaplacian { .. } => "matern_laplacian",
            KernelSpec::MaternDistance { .. } => "matern_distance",
            KernelSpec::InverseCosine => "inverse_cosine",
        }
    }
}

fn check_regularized(s: f64, d: u32) -> Result<()> {
    if s <= 0.0 || !s.is_finite() {
        return Err(Error::InvalidKernelSpec(format!(
            "regularization scale must be > 0, got {s}"
        )));
    }
    if d == 0 {
        return Err(Error::InvalidKernelSpec("power d must be >= 1".into()));
    }
    Ok(())
}

// Labels stay comma-free so they can sit in one CSV field; the DSL parser
// accepts ';' as well as ',' so labels round-trip through --kernel.
impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Diffusion { t } => write!(f, "diffusion:t={t}"),
            KernelSpec::RegularizedLaplacian { s, d } => write!(f, "reglap:s={s};d={d}"),
            KernelSpec::MaternLaplacian { s, d } => write!(f, "matern-lap:s={s};d={d}"),
            KernelSpec::MaternDistance { k, l } => {
                write!(f, "matern:nu={};l={l}", f64::from(*k) + 0.5)
            }
            KernelSpec::InverseCosine => write!(f, "invcos"),
        }
    }
}

/// Exact kernel matrix together with the spec that produced it.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub matrix: DMatrix<f64>,
    pub spec: KernelSpec,
}

impl KernelMatrix {
    /// Row-major CSV with 17 significant digits, for external cross-checks.
    pub fn to_csv(&self) -> String {
        matrix_to_csv(&self.matrix)
    }
}

/// Row-major CSV serialization at full f64 precision.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Eigendecomposition of a symmetric matrix: eigenvalues ascending with a
/// matching orthonormal column matrix.
pub fn eigh(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let scale = m.amax().max(1.0);
    let asym = (m - m.transpose()).amax();
    if asym > 1e-10 * scale {
        return Err(Error::NotSymmetric(asym));
    }
    let symmetrized = (m + m.transpose()) * 0.5;
    let eig = symmetrized
        .try_symmetric_eigen(f64::EPSILON, 10_000)
        .ok_or(Error::EigenFailed)?;

    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    Ok((values, vectors))
}

/// Applies a scalar function to the spectrum: `U f(Lambda) U^T`.
fn spectral_apply(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> Result<DMatrix<f64>> {
    let (values, vectors) = eigh(m)?;
    let mapped = DVector::from_iterator(values.len(), values.iter().map(|&l| f(l)));
    let scaled = &vectors * DMatrix::from_diagonal(&mapped);
    let k = scaled * vectors.transpose();
    // take out eigensolver round-off so the symmetry invariant is exact
    Ok((&k + k.transpose()) * 0.5)
}

/// Computes the exact kernel matrix for the spec.
///
/// The graph is needed for the distance Matérn (hop distances) and must be
/// connected in that case.
pub fn exact_kernel(lap: &NormalizedLaplacian, spec: &KernelSpec, graph: &Graph) -> Result<KernelMatrix> {
    let matrix = match *spec {
        KernelSpec::Diffusion { t } => spectral_apply(lap.matrix(), |l| (-t * l).exp())?,
        KernelSpec::RegularizedLaplacian { s, d } | KernelSpec::MaternLaplacian { s, d } => {
            spectral_apply(lap.matrix(), |l| (1.0 + s * l).powi(-(d as i32)))?
        }
        KernelSpec::InverseCosine => {
            spectral_apply(lap.matrix(), |l| (l * std::f64::consts::FRAC_PI_4).cos())?
        }
        KernelSpec::MaternDistance { k, l } => {
            let dist = bfs_distances(graph)?;
            let n = graph.num_vertices();
            DMatrix::from_fn(n, n, |i, j| matern_value(f64::from(dist[(i, j)]), k, l))
        }
    };
    Ok(KernelMatrix { matrix, spec: *spec })
}

/// Half-integer Matérn covariance at distance `r`:
/// `exp(-sqrt(2k+1) r / l) * (k!/(2k)!) * sum_i (k+i)!/(i!(k-i)!) (2 sqrt(2k+1) r / l)^(k-i)`.
pub fn matern_value(r: f64, k: u32, l: f64) -> f64 {
    debug_assert!(r >= 0.0 && l > 0.0);
    let k = k as usize;
    let scaled = (2.0 * k as f64 + 1.0).sqrt() * r / l;
    let mut sum = 0.0;
    for i in 0..=k {
        let coeff = factorial(k + i) / (factorial(i) * factorial(k - i));
        sum += coeff * (2.0 * scaled).powi((k - i) as i32);
    }
    (-scaled).exp() * factorial(k) / factorial(2 * k) * sum
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// All-pairs hop-count distances by BFS from every vertex. Errors on a
/// disconnected graph, naming one unreachable pair.
pub fn bfs_distances(graph: &Graph) -> Result<DMatrix<u32>> {
    let n = graph.num_vertices();
    let mut dist = DMatrix::from_element(n, n, u32::MAX);
    let mut queue = VecDeque::new();
    for source in 0..n {
        dist[(source, source)] = 0;
        queue.clear();
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let du = dist[(source, u)];
            for &v in graph.neighbors(u) {
                if dist[(source, v)] == u32::MAX {
                    dist[(source, v)] = du + 1;
                    queue.push_back(v);
                }
            }
        }
        if let Some(unreached) = (0..n).find(|&v| dist[(source, v)] == u32::MAX) {
            return Err(Error::Disconnected(source, unreached));
        }
    }
    Ok(dist)
}
