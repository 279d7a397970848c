//! Variance benchmark harness: relative Frobenius error of IID versus
//! antithetic walk estimators across kernels, graph families, walker counts
//! and repeats, plus win-rate studies over seeded graph collections.

use std::path::PathBuf;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{self, Graph, GraphGeneratorSpec, NormalizedLaplacian};
use crate::rng::{self, tag};
use crate::series::{default_mode, kernel_series, modulation_from_series, ModulationMode};
use crate::spectral::{exact_kernel, KernelSpec};
use crate::walk::{estimate_kernel, Coupling, WalkEnsembleConfig};

/// Version comment emitted at the top of every CSV artifact.
pub const CSV_HEADER: &str = "# grf-kit v1";

/// Where the experiment graph comes from.
#[derive(Debug, Clone)]
pub enum GraphSource {
    Generator(GraphGeneratorSpec),
    File(PathBuf),
}

impl GraphSource {
    fn realize(&self) -> Result<(Graph, String, String)> {
        match self {
            GraphSource::Generator(spec) => {
                let g = graph::generate(spec)?;
                Ok((g, spec.family.to_string(), spec.label()))
            }
            GraphSource::File(path) => {
                let text = std::fs::read_to_string(path)?;
                let loaded = graph::load_edge_list(&text)?;
                let label = path
                    .file_name()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| path.display().to_string());
                Ok((loaded.graph, "file".to_string(), label))
            }
        }
    }
}

/// Full description of one error-versus-walkers experiment.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub graph: GraphSource,
    pub kernel: KernelSpec,
    pub walker_counts: Vec<usize>,
    pub repeats: usize,
    pub p_term: f64,
    pub couplings: Vec<Coupling>,
    pub base_seed: u64,
    pub kmax: usize,
    /// Modulation mode; `None` picks the family default.
    pub mode: Option<ModulationMode>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidExperimentSpec(m));
        if self.repeats < 2 {
            return fail(format!("repeats must be >= 2, got {}", self.repeats));
        }
        if self.walker_counts.is_empty() {
            return fail("walker_counts must be nonempty".into());
        }
        if !self.walker_counts.windows(2).all(|w| w[0] < w[1]) {
            return fail(format!(
                "walker_counts must be ascending, got {:?}",
                self.walker_counts
            ));
        }
        if self.walker_counts[0] == 0 {
            return fail("walker counts must be >= 1".into());
        }
        if self.couplings.is_empty() {
            return fail("couplings must be nonempty".into());
        }
        if !(self.p_term > 0.0 && self.p_term < 1.0) {
            return fail(format!(
                "termination probability must lie in (0, 1), got {}",
                self.p_term
            ));
        }
        if !self.kernel.is_estimable() {
            return fail(format!(
                "kernel {} has no walk estimator; choose an estimable family",
                self.kernel
            ));
        }
        Ok(())
    }
}

/// One raw measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub coupling: Coupling,
    pub num_walkers: usize,
    pub repeat: usize,
    pub rel_frob_error: f64,
}

/// Mean and sample standard deviation of one `(coupling, walkers)` cell.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub coupling: Coupling,
    pub num_walkers: usize,
    pub mean: f64,
    pub std: f64,
    /// For antithetic rows when the IID partner exists: strict
    /// mean-comparison win flag. Ties count as losses.
    pub win: Option<bool>,
}

/// A cell whose computation failed; the sweep continues without it.
#[derive(Debug, Clone)]
pub struct FailedCell {
    pub coupling: Coupling,
    pub num_walkers: usize,
    pub repeat: usize,
    pub message: String,
}

/// Results of one experiment, flat rows plus derived summaries.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub graph_id: usize,
    pub graph_label: String,
    pub family: String,
    pub num_vertices: usize,
    pub kernel: String,
    pub rows: Vec<RawRow>,
    pub summaries: Vec<SummaryRow>,
    pub failed_cells: Vec<FailedCell>,
}

impl ExperimentReport {
    pub fn summary_for(&self, coupling: Coupling, num_walkers: usize) -> Option<&SummaryRow> {
        self.summaries
            .iter()
            .find(|s| s.coupling == coupling && s.num_walkers == num_walkers)
    }
}

/// Relative Frobenius error between the exact kernel and an estimate.
pub fn rel_frobenius(exact: &DMatrix<f64>, estimate: &DMatrix<f64>) -> Result<f64> {
    if exact.shape() != estimate.shape() {
        return Err(Error::InvalidExperimentSpec(format!(
            "dimension mismatch: {:?} vs {:?}",
            exact.shape(),
            estimate.shape()
        )));
    }
    let denom = exact.norm();
    if denom == 0.0 {
        return Err(Error::InvalidExperimentSpec("exact kernel has zero norm".into()));
    }
    Ok((exact - estimate).norm() / denom)
}

/// Runs the full sweep. Per-repeat seeds derive from `base_seed` by keyed
/// mixing, so cells are order-independent; both couplings inside a repeat
/// share the even walkers' trajectories (common random numbers).
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    run_experiment_with_id(spec, 0)
}

/// Same as [`run_experiment`] with an explicit graph id for multi-graph
/// studies.
pub fn run_experiment_with_id(spec: &ExperimentSpec, graph_id: usize) -> Result<ExperimentReport> {
    spec.validate()?;
    let (graph, family, graph_label) = spec.graph.realize()?;
    let lap = NormalizedLaplacian::new(&graph);
    let exact = exact_kernel(&lap, &spec.kernel, &graph)?;
    let series = kernel_series(&spec.kernel, spec.kmax)?;
    let mode = spec.mode.unwrap_or_else(|| default_mode(&spec.kernel));
    let modulation = modulation_from_series(&series, mode)?;

    struct Cell {
        coupling: Coupling,
        num_walkers: usize,
        repeat: usize,
    }
    let mut cells = Vec::new();
    for &coupling in &spec.couplings {
        for &num_walkers in &spec.walker_counts {
            for repeat in 0..spec.repeats {
                cells.push(Cell { coupling, num_walkers, repeat });
            }
        }
    }

    let outcomes: Vec<std::result::Result<RawRow, FailedCell>> = cells
        .par_iter()
        .map(|cell| {
            let cfg = WalkEnsembleConfig {
                num_walkers: cell.num_walkers,
                p_term: spec.p_term,
                coupling: cell.coupling,
                seed: rng::substream(spec.base_seed, tag::REPEAT, cell.repeat as u64),
                max_steps: WalkEnsembleConfig::default_max_steps(spec.kmax),
            };
            estimate_kernel(&graph, &modulation, &cfg)
                .and_then(|(estimate, _)| rel_frobenius(&exact.matrix, &estimate))
                .map(|rel_frob_error| RawRow {
                    coupling: cell.coupling,
                    num_walkers: cell.num_walkers,
                    repeat: cell.repeat,
                    rel_frob_error,
                })
                .map_err(|e| FailedCell {
                    coupling: cell.coupling,
                    num_walkers: cell.num_walkers,
                    repeat: cell.repeat,
                    message: e.to_string(),
                })
        })
        .collect();

    let mut rows = Vec::with_capacity(cells.len());
    let mut failed_cells = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(row) => rows.push(row),
            Err(fail) => failed_cells.push(fail),
        }
    }
    let summaries = summarize(&rows);

    Ok(ExperimentReport {
        graph_id,
        graph_label,
        family,
        num_vertices: graph.num_vertices(),
        kernel: spec.kernel.to_string(),
        rows,
        summaries,
        failed_cells,
    })
}

/// Aggregates raw rows into per-`(coupling, walkers)` means and sample
/// standard deviations, attaching win flags where both couplings exist.
pub fn summarize(rows: &[RawRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(Coupling, usize)> =
        rows.iter().map(|r| (r.coupling, r.num_walkers)).collect();
    keys.sort_by_key(|&(c, m)| (c != Coupling::Iid, m));
    keys.dedup();

    let stats = |coupling: Coupling, m: usize| -> (f64, f64) {
        let values: Vec<f64> = rows
            .iter()
            .filter(|r| r.coupling == coupling && r.num_walkers == m)
            .map(|r| r.rel_frob_error)
            .collect();
        mean_std(&values)
    };

    let mut out = Vec::with_capacity(keys.len());
    for (coupling, m) in keys {
        let (mean, std) = stats(coupling, m);
        let win = if coupling == Coupling::Antithetic
            && rows.iter().any(|r| r.coupling == Coupling::Iid && r.num_walkers == m)
        {
            let (iid_mean, _) = stats(Coupling::Iid, m);
            Some(decide_win(iid_mean, mean))
        } else {
            None
        };
        out.push(SummaryRow { coupling, num_walkers: m, mean, std, win });
    }
    out
}

/// Sample mean and (n-1)-normalized standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, var.sqrt())
}

/// Raw CSV: `graph_id,family,n,kernel,coupling,num_walkers,repeat,rel_frob_error`.
pub fn raw_csv(reports: &[&ExperimentReport]) -> String {
    let mut out = format!(
        "{CSV_HEADER}\ngraph_id,family,n,kernel,coupling,num_walkers,repeat,rel_frob_error\n"
    );
    for report in reports {
        for row in &report.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                report.graph_id,
                report.family,
                report.num_vertices,
                report.kernel,
                row.coupling,
                row.num_walkers,
                row.repeat,
                row.rel_frob_error
            ));
        }
    }
    out
}

/// Summary CSV keyed by `(graph_id, coupling, num_walkers)`.
pub fn summary_csv(reports: &[&ExperimentReport]) -> String {
    let mut out = format!(
        "{CSV_HEADER}\ngraph_id,family,n,kernel,coupling,num_walkers,mean_rel_frob_error,std_rel_frob_error,win\n"
    );
    for report in reports {
        for s in &report.summaries {
            let win = match s.win {
                Some(true) => "1",
                Some(false) => "0",
                None => "",
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                report.graph_id,
                report.family,
                report.num_vertices,
                report.kernel,
                s.coupling,
                s.num_walkers,
                s.mean,
                s.std,
                win
            ));
        }
    }
    out
}

/// Parsed raw CSV row, as written by [`raw_csv`].
#[derive(Debug, Clone)]
pub struct RawRecord {
    pub graph_id: usize,
    pub family: String,
    pub num_vertices: usize,
    pub kernel: String,
    pub row: RawRow,
}

/// Parses a raw CSV document back into records (round-trip support).
pub fn read_raw_csv(text: &str) -> Result<Vec<RawRecord>> {
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.starts_with("graph_id") || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::Config(format!(
                "raw CSV line {}: expected 8 fields, got {}",
                idx + 1,
                fields.len()
            )));
        }
        let parse_err = |what: &str| Error::Config(format!("raw CSV line {}: bad {what}", idx + 1));
        let coupling = match fields[4] {
            "iid" => Coupling::Iid,
            "antithetic" => Coupling::Antithetic,
            _ => return Err(parse_err("coupling")),
        };
        records.push(RawRecord {
            graph_id: fields[0].parse().map_err(|_| parse_err("graph_id"))?,
            family: fields[1].to_string(),
            num_vertices: fields[2].parse().map_err(|_| parse_err("n"))?,
            kernel: fields[3].to_string(),
            row: RawRow {
                coupling,
                num_walkers: fields[5].parse().map_err(|_| parse_err("num_walkers"))?,
                repeat: fields[6].parse().map_err(|_| parse_err("repeat"))?,
                rel_frob_error: fields[7].parse().map_err(|_| parse_err("rel_frob_error"))?,
            },
        });
    }
    Ok(records)
}

/// Per-graph outcome of a win-rate study, decided at the largest walker
/// count.
#[derive(Debug, Clone)]
pub struct WinRecord {
    pub graph_index: usize,
    pub graph_seed: u64,
    pub iid_mean: f64,
    pub antithetic_mean: f64,
    pub win: bool,
}

/// Aggregate outcome over a seeded graph collection.
#[derive(Debug)]
pub struct WinRateOutcome {
    pub records: Vec<WinRecord>,
    /// Graphs that failed to evaluate, excluded from the denominator.
    pub skipped: Vec<(usize, String)>,
    pub reports: Vec<ExperimentReport>,
}

impl WinRateOutcome {
    pub fn wins(&self) -> usize {
        self.records.iter().filter(|r| r.win).count()
    }

    pub fn evaluated(&self) -> usize {
        self.records.len()
    }

    pub fn rate(&self) -> f64 {
        self.wins() as f64 / self.evaluated() as f64
    }
}

/// Strict-inequality win decision: antithetic wins only when its mean
/// error is strictly below the IID mean; ties count as losses.
pub fn decide_win(iid_mean: f64, antithetic_mean: f64) -> bool {
    antithetic_mean < iid_mean
}

/// Runs the experiment over `num_graphs` seeded graphs drawn from the
/// template (its own seed field is ignored) and counts wins at the largest
/// walker count.
pub fn win_rate_study(
    template: &GraphGeneratorSpec,
    num_graphs: usize,
    rest: &ExperimentSpec,
) -> Result<WinRateOutcome> {
    if num_graphs == 0 {
        return Err(Error::InvalidExperimentSpec("num_graphs must be >= 1".into()));
    }
    rest.validate()?;
    if !rest.couplings.contains(&Coupling::Iid) || !rest.couplings.contains(&Coupling::Antithetic) {
        return Err(Error::InvalidExperimentSpec(
            "win-rate studies need both iid and antithetic couplings".into(),
        ));
    }
    let largest = *rest.walker_counts.last().unwrap();

    let outcomes: Vec<std::result::Result<(WinRecord, ExperimentReport), (usize, String)>> =
        (0..num_graphs)
            .into_par_iter()
            .map(|index| {
                let graph_seed = rng::substream(rest.base_seed, tag::GRAPH, index as u64);
                let mut generator = template.clone();
                generator.seed = graph_seed;
                let spec = ExperimentSpec {
                    graph: GraphSource::Generator(generator),
                    base_seed: graph_seed,
                    ..rest.clone()
                };
                let report =
                    run_experiment_with_id(&spec, index).map_err(|e| (index, e.to_string()))?;
                let pick = |coupling: Coupling| {
                    report
                        .summary_for(coupling, largest)
                        .map(|s| s.mean)
                        .ok_or_else(|| (index, format!("missing {coupling} summary")))
                };
                let iid_mean = pick(Coupling::Iid)?;
                let antithetic_mean = pick(Coupling::Antithetic)?;
                let record = WinRecord {
                    graph_index: index,
                    graph_seed,
                    iid_mean,
                    antithetic_mean,
                    win: decide_win(iid_mean, antithetic_mean),
                };
                Ok((record, report))
            })
            .collect();

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    let mut reports = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok((record, report)) => {
                records.push(record);
                reports.push(report);
            }
            Err(skip) => skipped.push(skip),
        }
    }
    if records.is_empty() {
        return Err(Error::InvalidExperimentSpec(format!(
            "all {num_graphs} graphs failed; first failure: {}",
            skipped.first().map(|(_, m)| m.as_str()).unwrap_or("unknown")
        )));
    }
    Ok(WinRateOutcome { records, skipped, reports })
}
