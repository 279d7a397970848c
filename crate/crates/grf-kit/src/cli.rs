//! Command-line interface: graph/kernel mini-DSL parsing, config-file
//! merging, and command execution.
//!
//! Grammar (versioned with the CSV formats as v1):
//!
//! ```text
//! graph  := "er:n=<int>,p=<float>" | "ba:n=<int>,m=<int>"
//!         | "tree:h=<int>" | "ladder:<int>" | "file:<path>"
//! kernel := "diffusion:t=<float>" | "reglap:s=<float>,d=<int>"
//!         | "matern:nu=<half-int>,l=<float>"
//!         | "matern-lap:nu=<int>,l=<float>" | "invcos"
//! ```
//!
//! Parameter separators may be `,` or `;`; kernel labels in CSV output use
//! `;` (comma-free fields) and parse back unchanged.
//!
//! Flags override config-file values (`--config`, flat `key=value` lines,
//! unknown keys are errors). Exit codes: 0 success, 1 usage error,
//! 2 runtime failure.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::experiment::{
    self, raw_csv, read_raw_csv, run_experiment, summary_csv, win_rate_study, ExperimentSpec,
    GraphSource, CSV_HEADER,
};
use crate::graph::{self, GraphFamily, GraphGeneratorSpec, NormalizedLaplacian};
use crate::plot::emit_plot;
use crate::series::{
    coefficients_csv, default_mode, kernel_series, modulation_from_series, ModulationMode,
    DEFAULT_KMAX,
};
use crate::spectral::{exact_kernel, KernelSpec};
use crate::walk::{estimate_kernel, Coupling, WalkEnsembleConfig};

/// CLI failure split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config keys, or parameter values; exit code 1.
    Usage(String),
    /// Valid request that failed while running; exit code 2.
    Runtime(String),
    /// Help or version text; print to stdout and exit 0.
    Help(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Help(_) => 0,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) | CliError::Help(m) => m,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

/// Runtime by default; configuration-shaped library errors map to usage.
fn runtime(e: Error) -> CliError {
    match e {
        Error::InvalidGeneratorSpec(_)
        | Error::InvalidKernelSpec(_)
        | Error::InvalidWalkConfig(_)
        | Error::InvalidExperimentSpec(_)
        | Error::Config(_) => CliError::Usage(e.to_string()),
        other => CliError::Runtime(other.to_string()),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "grfkit",
    version,
    about = "Graph kernels, random-walk feature estimators, and variance benchmarks",
    disable_help_subcommand = true
)]
struct CliArgs {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic graph and write it as an edge list.
    Generate(GenerateArgs),
    /// Compute an exact kernel matrix (CSV, 17 significant digits).
    Exact(ExactArgs),
    /// Estimate a kernel matrix with random walk features.
    Estimate(EstimateArgs),
    /// Sweep estimator error over walker counts and repeats.
    Experiment(ExperimentArgs),
    /// Win-rate study over a collection of seeded graphs.
    Winrate(WinrateArgs),
    /// Dump power-series and modulation coefficients.
    DumpSeries(DumpSeriesArgs),
}

#[derive(Debug, Args, Default)]
struct GenerateArgs {
    /// Graph DSL, e.g. "er:n=20,p=0.4" or "ladder:10".
    #[arg(long)]
    graph: Option<String>,
    /// Generator seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key=value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
struct ExactArgs {
    /// Graph DSL or "file:<path>".
    #[arg(long)]
    graph: Option<String>,
    /// Kernel DSL, e.g. "diffusion:t=0.5" or "invcos".
    #[arg(long)]
    kernel: Option<String>,
    /// Seed for generated graphs.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
struct EstimateArgs {
    #[arg(long)]
    graph: Option<String>,
    #[arg(long)]
    kernel: Option<String>,
    /// Walkers per vertex per ensemble.
    #[arg(long)]
    walkers: Option<usize>,
    /// Termination probability in (0, 1).
    #[arg(long)]
    p: Option<f64>,
    /// Coupling: iid or antithetic.
    #[arg(long)]
    coupling: Option<String>,
    /// Modulation mode: symmetric or asymmetric (default per family).
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Series truncation order.
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write per-ensemble walk diagnostics as JSON lines.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
struct ExperimentArgs {
    #[arg(long)]
    graph: Option<String>,
    #[arg(long)]
    kernel: Option<String>,
    /// Comma-separated ascending walker counts, e.g. "2,4,8,16".
    #[arg(long)]
    walkers: Option<String>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    /// Comma-separated couplings, e.g. "iid,antithetic".
    #[arg(long)]
    couplings: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    kmax: Option<usize>,
    /// Raw CSV output path; the summary CSV lands next to it with a
    /// .summary.csv extension.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write an SVG chart next to the raw CSV.
    #[arg(long)]
    plot: bool,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
struct WinrateArgs {
    /// Generator template DSL (seed field is derived per graph).
    #[arg(long)]
    family: Option<String>,
    /// Number of seeded graphs.
    #[arg(long)]
    graphs: Option<usize>,
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    walkers: Option<String>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    kmax: Option<usize>,
    /// Summary CSV path (per-graph rows); win rate prints to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
struct DumpSeriesArgs {
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Parses the graph mini-DSL.
pub fn parse_graph_dsl(text: &str, seed: u64) -> Result<GraphSource, CliError> {
    let (head, rest) = split_head(text);
    match head {
        "file" => {
            let path = rest.ok_or_else(|| usage("file: needs a path, e.g. file:karate.txt"))?;
            Ok(GraphSource::File(PathBuf::from(path)))
        }
        "er" | "erdos_renyi" => {
            let kv = parse_kv(rest.unwrap_or(""))?;
            reject_unknown(&kv, &["n", "p"])?;
            Ok(GraphSource::Generator(GraphGeneratorSpec {
                family: GraphFamily::ErdosRenyi,
                n: take_int(&kv, "n")?.ok_or_else(|| usage("er: needs n"))?,
                p_edge: take_float(&kv, "p")?,
                m_attach: None,
                seed,
            }))
        }
        "ba" | "barabasi_albert" => {
            let kv = parse_kv(rest.unwrap_or(""))?;
            reject_unknown(&kv, &["n", "m"])?;
            Ok(GraphSource::Generator(GraphGeneratorSpec {
                family: GraphFamily::BarabasiAlbert,
                n: take_int(&kv, "n")?.ok_or_else(|| usage("ba: needs n"))?,
                p_edge: None,
                m_attach: take_int(&kv, "m")?,
                seed,
            }))
        }
        "tree" | "binary_tree" => {
            let kv = parse_kv(rest.unwrap_or(""))?;
            reject_unknown(&kv, &["h"])?;
            Ok(GraphSource::Generator(GraphGeneratorSpec {
                family: GraphFamily::BinaryTree,
                n: take_int(&kv, "h")?.ok_or_else(|| usage("tree: needs h (height)"))?,
                p_edge: None,
                m_attach: None,
                seed,
            }))
        }
        "ladder" => {
            let rungs_text =
                rest.ok_or_else(|| usage("ladder: needs a rung count, e.g. ladder:10"))?;
            let rungs: usize = rungs_text
                .parse()
                .map_err(|_| usage(format!("ladder: bad rung count {rungs_text:?}")))?;
            Ok(GraphSource::Generator(GraphGeneratorSpec {
                family: GraphFamily::Ladder,
                n: rungs,
                p_edge: None,
                m_attach: None,
                seed,
            }))
        }
        other => Err(usage(format!(
            "unknown graph family {other:?}; expected er, ba, tree, ladder, or file"
        ))),
    }
}

/// Parses the kernel mini-DSL.
pub fn parse_kernel_dsl(text: &str) -> Result<KernelSpec, CliError> {
    let (head, rest) = split_head(text);
    match head {
        "diffusion" | "heat" => {
            let kv = parse_kv(rest.unwrap_or(""))?;
            reject_unknown(&kv, &["t"])?;
            let t = take_float(&kv, "t")?.unwrap_or(0.5);
            KernelSpec::diffusion(t).map_err(runtime)
        }
        "reglap" | "regularized_laplacian" => {
            let kv = parse_kv(rest.unwrap_or(""))?;
            reject_unknown(&kv, &["s", "d"])?;
            let s = take_float(&kv, "s")?.unwrap_or(1.0);
            let d = take_int(&kv, "d")?.unwrap_or(2);
            KernelSpec::regularized_laplacian(s, d as u32).map_err(runtime)
        }
        "matern" | "matern_distance" => {
            let kv = parse_kv(rest.unwrap_or(""))?;
            reject_unknown(&kv, &["nu", "l"])?;
            let nu = take_float(&kv, "nu")?.unwrap_or(2.5);
            let l = take_float(&kv, "l")?.unwrap_or(1.0);
            KernelSpec::matern_distance(nu, l).map_err(runtime)
        }
        "matern-lap" | "matern_laplacian" => {
            let kv = parse_kv(rest.unwrap_or(""))?;
            reject_unknown(&kv, &["nu", "l", "s", "d"])?;
            // accepts (nu, l) or the stored (s, d) form so labels round-trip
            if kv.contains_key("s") || kv.contains_key("d") {
                if kv.contains_key("nu") || kv.contains_key("l") {
                    return Err(usage("matern-lap takes either nu,l or s,d, not both"));
                }
                let s = take_float(&kv, "s")?.ok_or_else(|| usage("matern-lap: s,d needs s"))?;
                let d = take_int(&kv, "d")?.ok_or_else(|| usage("matern-lap: s,d needs d"))?;
                KernelSpec::matern_laplacian_from_scale(s, d as u32).map_err(runtime)
            } else {
                let nu = take_int(&kv, "nu")?.unwrap_or(2);
                let l = take_float(&kv, "l")?.unwrap_or(1.0);
                KernelSpec::matern_laplacian(nu as u32, l).map_err(runtime)
            }
        }
        "invcos" | "inverse_cosine" => {
            if rest.is_some() {
                return Err(usage("invcos takes no parameters"));
            }
            Ok(KernelSpec::inverse_cosine())
        }
        other => Err(usage(format!(
            "unknown kernel {other:?}; expected diffusion, reglap, matern, matern-lap, or invcos"
        ))),
    }
}

fn split_head(text: &str) -> (&str, Option<&str>) {
    match text.split_once(':') {
        Some((head, rest)) => (head, Some(rest)),
        None => (text, None),
    }
}

fn parse_kv(text: &str) -> Result<HashMap<String, String>, CliError> {
    let mut out = HashMap::new();
    // ';' is accepted alongside ',' so that displayed kernel labels (which
    // keep CSV fields comma-free) parse back unchanged
    for part in text.split([',', ';']).filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| usage(format!("expected key=value, got {part:?}")))?;
        out.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(out)
}

fn take_int(kv: &HashMap<String, String>, key: &str) -> Result<Option<usize>, CliError> {
    kv.get(key)
        .map(|v| v.parse().map_err(|_| usage(format!("bad integer for {key}: {v:?}"))))
        .transpose()
}

fn take_float(kv: &HashMap<String, String>, key: &str) -> Result<Option<f64>, CliError> {
    kv.get(key)
        .map(|v| v.parse().map_err(|_| usage(format!("bad number for {key}: {v:?}"))))
        .transpose()
}

fn reject_unknown(kv: &HashMap<String, String>, allowed: &[&str]) -> Result<(), CliError> {
    for key in kv.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(usage(format!("unknown parameter {key:?}; allowed: {allowed:?}")));
        }
    }
    Ok(())
}

fn parse_walker_list(text: &str) -> Result<Vec<usize>, CliError> {
    let counts: Vec<usize> = text
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse().map_err(|_| usage(format!("bad walker count {p:?}"))))
        .collect::<Result<_, _>>()?;
    if counts.is_empty() {
        return Err(usage("walker list is empty"));
    }
    if counts.contains(&0) {
        return Err(usage("walkers must be >= 1"));
    }
    Ok(counts)
}

fn parse_coupling(text: &str) -> Result<Coupling, CliError> {
    match text {
        "iid" => Ok(Coupling::Iid),
        "antithetic" => Ok(Coupling::Antithetic),
        other => Err(usage(format!("unknown coupling {other:?}; expected iid or antithetic"))),
    }
}

fn parse_couplings(text: &str) -> Result<Vec<Coupling>, CliError> {
    let list: Vec<Coupling> = text
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| parse_coupling(p.trim()))
        .collect::<Result<_, _>>()?;
    if list.is_empty() {
        return Err(usage("coupling list is empty"));
    }
    Ok(list)
}

fn parse_mode(text: &str) -> Result<ModulationMode, CliError> {
    match text {
        "symmetric" => Ok(ModulationMode::Symmetric),
        "asymmetric" => Ok(ModulationMode::Asymmetric),
        other => Err(usage(format!("unknown mode {other:?}; expected symmetric or asymmetric"))),
    }
}

/// Flat `key=value` config file. Blank lines and `#` comments are skipped;
/// unknown keys are errors, not warnings.
fn load_config_file(path: &Path, allowed: &[&str]) -> Result<HashMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut out = HashMap::new();
    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("config line {}: expected key=value", line_no + 1)))?;
        let key = key.trim();
        if !allowed.contains(&key) {
            return Err(usage(format!(
                "config line {}: unknown key {key:?}; allowed: {allowed:?}",
                line_no + 1
            )));
        }
        out.insert(key.to_string(), value.trim().to_string());
    }
    Ok(out)
}

/// Flag value if present, else config-file value parsed by `parse`.
fn merge<T, F>(
    flag: Option<T>,
    file: &HashMap<String, String>,
    key: &str,
    parse: F,
) -> Result<Option<T>, CliError>
where
    F: FnOnce(&str) -> Result<T, CliError>,
{
    if flag.is_some() {
        return Ok(flag);
    }
    file.get(key).map(|v| parse(v)).transpose()
}

fn parse_u64(v: &str) -> Result<u64, CliError> {
    v.parse().map_err(|_| usage(format!("bad integer {v:?}")))
}

fn parse_usize(v: &str) -> Result<usize, CliError> {
    v.parse().map_err(|_| usage(format!("bad integer {v:?}")))
}

fn parse_f64(v: &str) -> Result<f64, CliError> {
    v.parse().map_err(|_| usage(format!("bad number {v:?}")))
}

fn require<T>(value: Option<T>, what: &str) -> Result<T, CliError> {
    value.ok_or_else(|| usage(format!("missing required parameter: {what}")))
}

fn write_or_print(out: Option<&PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn realize_graph(source: &GraphSource) -> Result<graph::Graph, CliError> {
    match source {
        GraphSource::Generator(spec) => graph::generate(spec).map_err(runtime),
        GraphSource::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
            let loaded = graph::load_edge_list(&text).map_err(runtime)?;
            if loaded.duplicate_count > 0 {
                eprintln!(
                    "warning: collapsed {} duplicate edge(s) in {}",
                    loaded.duplicate_count,
                    path.display()
                );
            }
            Ok(loaded.graph)
        }
    }
}

/// Worker-pool size: `GRFKIT_THREADS` caps parallelism, 0 or unset means
/// automatic.
fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let threads = match std::env::var("GRFKIT_THREADS") {
        Ok(value) => value
            .parse::<usize>()
            .map_err(|_| usage(format!("GRFKIT_THREADS must be an integer, got {value:?}")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot build thread pool: {e}")))
}

/// Parses argv (flags override the optional config file) and runs the
/// selected command.
pub fn run(argv: &[String]) -> Result<(), CliError> {
    let cli = CliArgs::try_parse_from(argv).map_err(|e| {
        if e.use_stderr() {
            usage(e)
        } else {
            CliError::Help(e.to_string())
        }
    })?;
    match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Exact(args) => cmd_exact(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Winrate(args) => cmd_winrate(args),
        Command::DumpSeries(args) => cmd_dump_series(args),
    }
}

const GENERATE_KEYS: &[&str] = &["graph", "seed", "out"];

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    let file = match &args.config {
        Some(path) => load_config_file(path, GENERATE_KEYS)?,
        None => HashMap::new(),
    };
    let seed = merge(args.seed, &file, "seed", parse_u64)?.unwrap_or(0);
    let graph_text =
        require(merge(args.graph, &file, "graph", |v| Ok(v.to_string()))?, "--graph")?;
    let out = merge(args.out, &file, "out", |v| Ok(PathBuf::from(v)))?;

    let source = parse_graph_dsl(&graph_text, seed)?;
    if matches!(source, GraphSource::File(_)) {
        return Err(usage("generate needs a synthetic family, not file:"));
    }
    let g = realize_graph(&source)?;
    write_or_print(out.as_ref(), &g.to_edge_list())
}

const EXACT_KEYS: &[&str] = &["graph", "kernel", "seed", "out"];

fn cmd_exact(args: ExactArgs) -> Result<(), CliError> {
    let file = match &args.config {
        Some(path) => load_config_file(path, EXACT_KEYS)?,
        None => HashMap::new(),
    };
    let seed = merge(args.seed, &file, "seed", parse_u64)?.unwrap_or(0);
    let graph_text =
        require(merge(args.graph, &file, "graph", |v| Ok(v.to_string()))?, "--graph")?;
    let kernel_text =
        require(merge(args.kernel, &file, "kernel", |v| Ok(v.to_string()))?, "--kernel")?;
    let out = merge(args.out, &file, "out", |v| Ok(PathBuf::from(v)))?;

    let source = parse_graph_dsl(&graph_text, seed)?;
    let kernel = parse_kernel_dsl(&kernel_text)?;
    let g = realize_graph(&source)?;
    let lap = NormalizedLaplacian::new(&g);
    let k = exact_kernel(&lap, &kernel, &g).map_err(runtime)?;
    write_or_print(out.as_ref(), &k.to_csv())
}

const ESTIMATE_KEYS: &[&str] = &[
    "graph", "kernel", "walkers", "p", "coupling", "mode", "seed", "kmax", "out", "diagnostics",
];

fn cmd_estimate(args: EstimateArgs) -> Result<(), CliError> {
    let file = match &args.config {
        Some(path) => load_config_file(path, ESTIMATE_KEYS)?,
        None => HashMap::new(),
    };
    let graph_text =
        require(merge(args.graph, &file, "graph", |v| Ok(v.to_string()))?, "--graph")?;
    let kernel_text =
        require(merge(args.kernel, &file, "kernel", |v| Ok(v.to_string()))?, "--kernel")?;
    let walkers = require(merge(args.walkers, &file, "walkers", parse_usize)?, "--walkers")?;
    if walkers == 0 {
        return Err(usage("walkers must be >= 1"));
    }
    let p = merge(args.p, &file, "p", parse_f64)?.unwrap_or(0.5);
    let coupling = merge(args.coupling, &file, "coupling", |v| Ok(v.to_string()))?
        .map(|v| parse_coupling(&v))
        .transpose()?
        .unwrap_or(Coupling::Iid);
    let mode = merge(args.mode, &file, "mode", |v| Ok(v.to_string()))?
        .map(|v| parse_mode(&v))
        .transpose()?;
    let seed = merge(args.seed, &file, "seed", parse_u64)?.unwrap_or(0);
    let kmax = merge(args.kmax, &file, "kmax", parse_usize)?.unwrap_or(DEFAULT_KMAX);
    let out = merge(args.out, &file, "out", |v| Ok(PathBuf::from(v)))?;
    let diagnostics_path =
        merge(args.diagnostics, &file, "diagnostics", |v| Ok(PathBuf::from(v)))?;

    let source = parse_graph_dsl(&graph_text, seed)?;
    let kernel = parse_kernel_dsl(&kernel_text)?;
    let g = realize_graph(&source)?;
    let series = kernel_series(&kernel, kmax).map_err(runtime)?;
    let modulation =
        modulation_from_series(&series, mode.unwrap_or_else(|| default_mode(&kernel)))
            .map_err(runtime)?;
    let cfg = WalkEnsembleConfig {
        num_walkers: walkers,
        p_term: p,
        coupling,
        seed,
        max_steps: WalkEnsembleConfig::default_max_steps(kmax),
    };
    let pool = thread_pool()?;
    let (estimate, diag) =
        pool.install(|| estimate_kernel(&g, &modulation, &cfg)).map_err(runtime)?;
    if let Some(path) = diagnostics_path {
        std::fs::write(&path, diag.to_json_lines())
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    write_or_print(out.as_ref(), &crate::spectral::matrix_to_csv(&estimate))
}

const EXPERIMENT_KEYS: &[&str] = &[
    "graph", "kernel", "walkers", "repeats", "p", "couplings", "mode", "seed", "kmax", "out",
    "plot",
];

fn cmd_experiment(args: ExperimentArgs) -> Result<(), CliError> {
    let file = match &args.config {
        Some(path) => load_config_file(path, EXPERIMENT_KEYS)?,
        None => HashMap::new(),
    };
    let graph_text =
        require(merge(args.graph, &file, "graph", |v| Ok(v.to_string()))?, "--graph")?;
    let kernel_text =
        require(merge(args.kernel, &file, "kernel", |v| Ok(v.to_string()))?, "--kernel")?;
    let walkers_text = merge(args.walkers, &file, "walkers", |v| Ok(v.to_string()))?
        .unwrap_or_else(|| "2,4,8,16".to_string());
    let repeats = merge(args.repeats, &file, "repeats", parse_usize)?.unwrap_or(100);
    let p = merge(args.p, &file, "p", parse_f64)?.unwrap_or(0.5);
    let couplings_text = merge(args.couplings, &file, "couplings", |v| Ok(v.to_string()))?
        .unwrap_or_else(|| "iid,antithetic".to_string());
    let mode = merge(args.mode, &file, "mode", |v| Ok(v.to_string()))?
        .map(|v| parse_mode(&v))
        .transpose()?;
    let seed = merge(args.seed, &file, "seed", parse_u64)?.unwrap_or(0);
    let kmax = merge(args.kmax, &file, "kmax", parse_usize)?.unwrap_or(DEFAULT_KMAX);
    let out = require(merge(args.out, &file, "out", |v| Ok(PathBuf::from(v)))?, "--out")?;
    let plot =
        args.plot || file.get("plot").map(|v| v == "true" || v == "1").unwrap_or(false);

    let spec = ExperimentSpec {
        graph: parse_graph_dsl(&graph_text, seed)?,
        kernel: parse_kernel_dsl(&kernel_text)?,
        walker_counts: parse_walker_list(&walkers_text)?,
        repeats,
        p_term: p,
        couplings: parse_couplings(&couplings_text)?,
        base_seed: seed,
        kmax,
        mode,
    };
    let pool = thread_pool()?;
    let report = pool.install(|| run_experiment(&spec)).map_err(runtime)?;
    for failed in &report.failed_cells {
        eprintln!(
            "warning: cell ({}, walkers {}, repeat {}) failed: {}",
            failed.coupling, failed.num_walkers, failed.repeat, failed.message
        );
    }

    std::fs::write(&out, raw_csv(&[&report]))
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", out.display())))?;
    let summary_path = out.with_extension("summary.csv");
    std::fs::write(&summary_path, summary_csv(&[&report]))
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", summary_path.display())))?;
    if plot {
        let svg_path = out.with_extension("svg");
        emit_plot(&report, &svg_path).map_err(runtime)?;
    }
    Ok(())
}

const WINRATE_KEYS: &[&str] = &[
    "family", "graphs", "kernel", "walkers", "repeats", "p", "mode", "seed", "kmax", "out",
];

fn cmd_winrate(args: WinrateArgs) -> Result<(), CliError> {
    let file = match &args.config {
        Some(path) => load_config_file(path, WINRATE_KEYS)?,
        None => HashMap::new(),
    };
    let family_text =
        require(merge(args.family, &file, "family", |v| Ok(v.to_string()))?, "--family")?;
    let graphs = merge(args.graphs, &file, "graphs", parse_usize)?.unwrap_or(50);
    let kernel_text =
        require(merge(args.kernel, &file, "kernel", |v| Ok(v.to_string()))?, "--kernel")?;
    let walkers_text = merge(args.walkers, &file, "walkers", |v| Ok(v.to_string()))?
        .unwrap_or_else(|| "2,4,8,16".to_string());
    let repeats = merge(args.repeats, &file, "repeats", parse_usize)?.unwrap_or(10);
    let p = merge(args.p, &file, "p", parse_f64)?.unwrap_or(0.5);
    let mode = merge(args.mode, &file, "mode", |v| Ok(v.to_string()))?
        .map(|v| parse_mode(&v))
        .transpose()?;
    let seed = merge(args.seed, &file, "seed", parse_u64)?.unwrap_or(0);
    let kmax = merge(args.kmax, &file, "kmax", parse_usize)?.unwrap_or(DEFAULT_KMAX);
    let out = merge(args.out, &file, "out", |v| Ok(PathBuf::from(v)))?;

    let template = match parse_graph_dsl(&family_text, 0)? {
        GraphSource::Generator(spec) => spec,
        GraphSource::File(_) => {
            return Err(usage("winrate needs a synthetic family template, not file:"))
        }
    };
    let rest = ExperimentSpec {
        graph: GraphSource::Generator(template.clone()),
        kernel: parse_kernel_dsl(&kernel_text)?,
        walker_counts: parse_walker_list(&walkers_text)?,
        repeats,
        p_term: p,
        couplings: vec![Coupling::Iid, Coupling::Antithetic],
        base_seed: seed,
        kmax,
        mode,
    };
    let pool = thread_pool()?;
    let outcome = pool.install(|| win_rate_study(&template, graphs, &rest)).map_err(runtime)?;
    for (index, message) in &outcome.skipped {
        eprintln!("warning: graph {index} skipped: {message}");
    }
    if let Some(path) = out {
        let reports: Vec<&experiment::ExperimentReport> = outcome.reports.iter().collect();
        std::fs::write(&path, summary_csv(&reports))
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    println!(
        "win rate: {:.4} ({} of {} graphs; {} skipped)",
        outcome.rate(),
        outcome.wins(),
        outcome.evaluated(),
        outcome.skipped.len()
    );
    Ok(())
}

const DUMP_SERIES_KEYS: &[&str] = &["kernel", "kmax", "mode", "out"];

fn cmd_dump_series(args: DumpSeriesArgs) -> Result<(), CliError> {
    let file = match &args.config {
        Some(path) => load_config_file(path, DUMP_SERIES_KEYS)?,
        None => HashMap::new(),
    };
    let kernel_text =
        require(merge(args.kernel, &file, "kernel", |v| Ok(v.to_string()))?, "--kernel")?;
    let kmax = merge(args.kmax, &file, "kmax", parse_usize)?.unwrap_or(DEFAULT_KMAX);
    let mode = merge(args.mode, &file, "mode", |v| Ok(v.to_string()))?
        .map(|v| parse_mode(&v))
        .transpose()?;
    let out = merge(args.out, &file, "out", |v| Ok(PathBuf::from(v)))?;

    let kernel = parse_kernel_dsl(&kernel_text)?;
    let series = kernel_series(&kernel, kmax).map_err(runtime)?;
    let modulation =
        modulation_from_series(&series, mode.unwrap_or_else(|| default_mode(&kernel)))
            .map_err(runtime)?;
    write_or_print(out.as_ref(), &coefficients_csv(&series, &modulation))
}

/// Re-summarizes a raw CSV document; supports the experiment -> CSV ->
/// summary round-trip check and scripting.
pub fn resummarize_raw_csv(text: &str) -> Result<String, CliError> {
    let records = read_raw_csv(text).map_err(runtime)?;
    let rows: Vec<experiment::RawRow> = records.iter().map(|r| r.row.clone()).collect();
    let summaries = experiment::summarize(&rows);
    let mut out = format!("{CSV_HEADER}\ncoupling,num_walkers,mean,std\n");
    for s in summaries {
        out.push_str(&format!("{},{},{},{}\n", s.coupling, s.num_walkers, s.mean, s.std));
    }
    Ok(out)
}
