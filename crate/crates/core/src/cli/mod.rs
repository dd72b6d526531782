//! Command-line front end.
//!
//! Every subcommand writes its outputs into `--out` (a directory, created on
//! demand). Failures print one JSON object on stderr and exit nonzero.

pub mod io;
pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::algorithms::{build_full_region, default_box, run_algorithm1, Algo1Config, Algo2Config};
use crate::baselines::{BaselineKind, DEFAULT_DIRECTIONS};
use crate::geometry::Region;
use crate::network::{assemble_matrices, parse_case, slater_point, FlowMatrices, RadialNetwork};
use crate::oracle::{classify_samples, raster_classify, sample_uniform, OracleError, OracleOptions, Verdict};
use crate::{Error, Result};

use io::{MetricsReport, RegionFile, TraceFile, METRICS_SCHEMA, TRACE_SCHEMA};

pub const LOG_ENV: &str = "DISPREGION_LOG";

#[derive(Debug, Parser)]
#[command(name = "dispregion", version, about = "Dispatchable regions of radial feeders")]
pub struct Cli {
    /// Worker threads for parallel batches (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a case file and report its structure.
    Validate(CaseArgs),
    /// Cutting-plane approximation of the relaxed region.
    RelaxedRegion(RegionArgs),
    /// Relaxed region with the inexact sub-regions removed.
    FullRegion(FullArgs),
    /// Region of a linear comparison model.
    Baseline(BaselineArgs),
    /// Failure and missing rates of a region file.
    Metrics(MetricsArgs),
    /// Ground-truth classification on a W = 2 grid.
    Raster(RasterArgs),
    /// SVG overlay of region files and an optional raster.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CaseArgs {
    #[arg(long)]
    pub case: PathBuf,
    /// Replacement renewable node labels, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub renewables: Option<Vec<u32>>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BoxArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub box_lo: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub box_hi: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct Algo1Args {
    #[command(flatten)]
    pub bounds: BoxArgs,
    #[arg(long, default_value_t = 100)]
    pub cmax: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol_zero: f64,
}

#[derive(Debug, Clone, Args)]
pub struct RegionArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    #[command(flatten)]
    pub algo1: Algo1Args,
}

#[derive(Debug, Clone, Args)]
pub struct FullArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    #[command(flatten)]
    pub algo1: Algo1Args,
    #[arg(long, default_value_t = 1e-4)]
    pub eta: f64,
    /// Defaults to twice `--eta`.
    #[arg(long)]
    pub eta_prime: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    pub eps_delta: f64,
}

#[derive(Debug, Clone, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    #[command(flatten)]
    pub algo1: Algo1Args,
    /// `lindistflow`, `socp-linear` or `socp-linear:K`.
    #[arg(long, value_parser = parse_kind)]
    pub kind: BaselineKind,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 7)]
    pub grid: usize,
}

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    /// Region file to evaluate.
    #[arg(long)]
    pub region: PathBuf,
    /// Sampling box; defaults to the bounding box of the region's outer polytope.
    #[command(flatten)]
    pub bounds: BoxArgs,
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub oracle: OracleArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RasterArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    /// Take the raster box from this region's outer bounding box.
    #[arg(long, conflicts_with_all = ["box_lo", "box_hi"])]
    pub region: Option<PathBuf>,
    #[command(flatten)]
    pub bounds: BoxArgs,
    #[arg(long, default_value_t = 60)]
    pub resolution: usize,
    #[command(flatten)]
    pub oracle: OracleArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    /// Region files to overlay (repeat the flag).
    #[arg(long = "region", required = true)]
    pub regions: Vec<PathBuf>,
    /// Raster CSV written by `raster`.
    #[arg(long)]
    pub raster: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

fn parse_kind(s: &str) -> std::result::Result<BaselineKind, String> {
    match s {
        "lindistflow" => Ok(BaselineKind::LinDistFlow),
        "socp-linear" => Ok(BaselineKind::SocpLinear(DEFAULT_DIRECTIONS)),
        _ => match s.strip_prefix("socp-linear:") {
            Some(k) => k.parse().map(BaselineKind::SocpLinear).map_err(|e| format!("bad direction count: {e}")),
            None => Err(format!("unknown baseline {s:?}")),
        },
    }
}

/// Everything a run depends on, after defaults are filled in.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub case: PathBuf,
    pub renewables: Option<Vec<u32>>,
    pub algo1: Algo1Config,
    pub algo2: Algo2Config,
    pub samples: usize,
    pub seed: u64,
    pub grid: usize,
    pub out: PathBuf,
    pub baseline: Option<BaselineKind>,
}

impl RunConfig {
    /// Defaults for `case`; the box is left empty until the network is known.
    pub fn new(case: impl Into<PathBuf>) -> Self {
        Self {
            case: case.into(),
            renewables: None,
            algo1: Algo1Config::new(Vec::new(), Vec::new()),
            algo2: Algo2Config::default(),
            samples: 2000,
            seed: 42,
            grid: 7,
            out: PathBuf::from("."),
            baseline: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Input("--samples must be positive".into()));
        }
        if self.grid < 2 {
            return Err(Error::Input("--grid must be at least 2".into()));
        }
        self.algo1.validate()?;
        let a2 = &self.algo2;
        if !(a2.eta > 0.0) || !(a2.eta_prime >= a2.eta) || !(a2.eps_delta > 0.0) {
            return Err(Error::Input("need 0 < eta <= eta_prime and eps_delta > 0".into()));
        }
        if let Some(BaselineKind::SocpLinear(k)) = self.baseline {
            if k < 8 {
                return Err(Error::Input(format!("socp-linear needs at least 8 directions, got {k}")));
            }
        }
        Ok(())
    }

    /// Loads the case, applies the renewable override and fills the default box.
    pub fn load(&mut self) -> Result<RadialNetwork> {
        let mut net = parse_case(&self.case)?;
        if let Some(labels) = &self.renewables {
            let idx = labels
                .iter()
                .map(|&l| match net.node_index(l) {
                    Some(0) | None => Err(Error::Input(format!("renewable label {l} is not a non-root node"))),
                    Some(k) => Ok(k),
                })
                .collect::<Result<Vec<_>>>()?;
            let mut seen = idx.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != idx.len() || idx.is_empty() {
                return Err(Error::Input("renewable labels must be distinct and nonempty".into()));
            }
            net = net.with_renewables(idx);
        }
        if self.algo1.box_lo.is_empty() && self.algo1.box_hi.is_empty() {
            let (lo, hi) = default_box(&net);
            self.algo1.box_lo = lo;
            self.algo1.box_hi = hi;
        }
        if self.algo1.box_lo.len() != net.w_dim() || self.algo1.box_hi.len() != net.w_dim() {
            return Err(Error::Input(format!("box needs {} entries per corner", net.w_dim())));
        }
        self.validate()?;
        Ok(net)
    }

    fn output(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out)
            .map_err(|source| Error::Io { context: format!("creating {}", self.out.display()), source })?;
        Ok(self.out.join(name))
    }
}

fn apply_box(cfg: &mut RunConfig, b: &BoxArgs) -> Result<()> {
    match (&b.box_lo, &b.box_hi) {
        (Some(lo), Some(hi)) => {
            cfg.algo1.box_lo = lo.clone();
            cfg.algo1.box_hi = hi.clone();
            Ok(())
        }
        (None, None) => Ok(()),
        _ => Err(Error::Input("--box-lo and --box-hi go together".into())),
    }
}

fn base_config(c: &CaseArgs) -> RunConfig {
    let mut cfg = RunConfig::new(&c.case);
    cfg.renewables = c.renewables.clone();
    cfg.out = c.out.clone();
    cfg
}

fn algo1_config(c: &CaseArgs, a: &Algo1Args) -> Result<RunConfig> {
    let mut cfg = base_config(c);
    apply_box(&mut cfg, &a.bounds)?;
    cfg.algo1.c_max = a.cmax;
    cfg.algo1.tol_zero = a.tol_zero;
    cfg.algo2.c_max = a.cmax;
    cfg.algo2.tol_zero = a.tol_zero;
    Ok(cfg)
}

#[derive(Debug, Serialize)]
struct ValidateReport {
    case: String,
    n: usize,
    w: usize,
    v0: f64,
    renewables: Vec<u32>,
    lines: usize,
    state_dim: usize,
    cones: usize,
    limit_rows: usize,
    default_box_lo: Vec<f64>,
    default_box_hi: Vec<f64>,
    /// Equality residual of the interior point built at `w = 0`.
    interior_residual: f64,
}

fn validate(args: &CaseArgs) -> Result<()> {
    let mut cfg = base_config(args);
    let net = cfg.load()?;
    let mats = assemble_matrices(&net);
    let zero = vec![0.0; net.w_dim()];
    let x = slater_point(&mats, &net, &zero);
    let report = ValidateReport {
        case: net.name.clone(),
        n: net.n(),
        w: net.w_dim(),
        v0: net.v0,
        renewables: net.renewables.iter().map(|&k| net.labels[k]).collect(),
        lines: net.lines.len(),
        state_dim: mats.state_dim(),
        cones: mats.cone_count(),
        limit_rows: mats.ineq_count(),
        default_box_lo: cfg.algo1.box_lo.clone(),
        default_box_hi: cfg.algo1.box_hi.clone(),
        interior_residual: mats.equality_residual(x.as_slice(), &zero).amax(),
    };
    let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Input(e.to_string()))?;
    println!("{text}");
    io::write_json(&cfg.output("validate.json")?, &report)
}

fn save_region(cfg: &RunConfig, net: &RadialNetwork, model: &str, region: Region, traces: Vec<crate::algorithms::RunTrace>) -> Result<()> {
    io::write_json(&cfg.output("region.json")?, &RegionFile::new(&net.name, model, region))?;
    let trace = TraceFile { schema: TRACE_SCHEMA.into(), case: net.name.clone(), traces };
    io::write_json(&cfg.output("trace.json")?, &trace)
}

fn outer_region(cfg: &RunConfig, net: &RadialNetwork, mats: &FlowMatrices, model: &str) -> Result<()> {
    let (poly, trace) = run_algorithm1(mats, &cfg.algo1)?;
    eprintln!("{model}: {:?} with {} planes", trace.termination, trace.planes_added());
    save_region(cfg, net, model, Region::new(poly), vec![trace])
}

fn relaxed_region(args: &RegionArgs) -> Result<()> {
    let mut cfg = algo1_config(&args.case, &args.algo1)?;
    let net = cfg.load()?;
    outer_region(&cfg, &net, &assemble_matrices(&net), "socp")
}

fn full_region(args: &FullArgs) -> Result<()> {
    let mut cfg = algo1_config(&args.case, &args.algo1)?;
    cfg.algo2.eta = args.eta;
    cfg.algo2.eta_prime = args.eta_prime.unwrap_or(2.0 * args.eta);
    cfg.algo2.eps_delta = args.eps_delta;
    let net = cfg.load()?;
    let mats = assemble_matrices(&net);
    let (region, traces) = build_full_region(&mats, &cfg.algo1, &cfg.algo2)?;
    eprintln!("socp: {} holes from {} tightening vectors", region.holes.len(), traces.len() - 1);
    save_region(&cfg, &net, "socp", region, traces)
}

fn baseline(args: &BaselineArgs) -> Result<()> {
    let mut cfg = algo1_config(&args.case, &args.algo1)?;
    cfg.baseline = Some(args.kind);
    let net = cfg.load()?;
    let mats = args.kind.build(&net, &assemble_matrices(&net))?;
    outer_region(&cfg, &net, &mats, &args.kind.label())
}

fn bbox_of(region: &Region) -> Result<(Vec<f64>, Vec<f64>)> {
    region
        .outer
        .bounding_box()?
        .ok_or(Error::Oracle(OracleError::EmptySample))
}

fn metrics(args: &MetricsArgs) -> Result<()> {
    let mut cfg = base_config(&args.case);
    cfg.samples = args.samples;
    cfg.seed = args.seed;
    cfg.grid = args.oracle.grid;
    let file = io::read_region(&args.region)?;
    let net = cfg.load()?;
    if file.region.outer.dim() != net.w_dim() {
        return Err(Error::Input(format!("region has dimension {}, case has W = {}", file.region.outer.dim(), net.w_dim())));
    }
    let (lo, hi) = match (&args.bounds.box_lo, &args.bounds.box_hi) {
        (Some(lo), Some(hi)) => (lo.clone(), hi.clone()),
        (None, None) => bbox_of(&file.region)?,
        _ => return Err(Error::Input("--box-lo and --box-hi go together".into())),
    };
    let mats = assemble_matrices(&net);
    let samples = sample_uniform(&lo, &hi, cfg.samples, cfg.seed, |_| true);
    let opts = OracleOptions { grid_points: cfg.grid, tol_zero: cfg.algo1.tol_zero, ..OracleOptions::default() };
    let verdicts: Vec<Verdict> = classify_samples(&net, &mats, &samples, &opts)?.into_iter().map(|v| v.status).collect();
    fs::write(cfg.output("samples.csv")?, io::samples_csv(&samples, &verdicts))
        .map_err(|source| Error::Io { context: "writing samples.csv".into(), source })?;

    let member = |w: &[f64]| file.region.contains(w);
    let in_region = samples.iter().filter(|w| member(w)).count();
    if in_region == 0 {
        return Err(Error::Oracle(OracleError::EmptySample));
    }
    let count = |v: Verdict| verdicts.iter().filter(|&&x| x == v).count();
    let feasible: Vec<Vec<f64>> = samples
        .iter()
        .zip(&verdicts)
        .filter(|(_, v)| **v == Verdict::Feasible)
        .map(|(w, _)| w.clone())
        .collect();
    let report = MetricsReport {
        schema: METRICS_SCHEMA.into(),
        case: net.name.clone(),
        model: file.model.clone(),
        samples: samples.len(),
        seed: cfg.seed,
        grid_points: cfg.grid,
        in_region,
        feasible: feasible.len(),
        unknown: count(Verdict::Unknown),
        infeasible: count(Verdict::Infeasible),
        failure_rate: crate::oracle::failure_rate(member, &samples, &verdicts).ok(),
        missing_rate: crate::oracle::missing_rate(member, &feasible).ok(),
    };
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| Error::Input(e.to_string()))?);
    io::write_json(&cfg.output("metrics.json")?, &report)
}

fn raster(args: &RasterArgs) -> Result<()> {
    let mut cfg = base_config(&args.case);
    cfg.grid = args.oracle.grid;
    apply_box(&mut cfg, &args.bounds)?;
    if let Some(path) = &args.region {
        let (lo, hi) = bbox_of(&io::read_region(path)?.region)?;
        cfg.algo1.box_lo = lo;
        cfg.algo1.box_hi = hi;
    }
    if args.resolution == 0 {
        return Err(Error::Input("--resolution must be positive".into()));
    }
    let net = cfg.load()?;
    let mats = assemble_matrices(&net);
    let opts = OracleOptions { grid_points: cfg.grid, ..OracleOptions::default() };
    let r = raster_classify(&net, &mats, &cfg.algo1.box_lo, &cfg.algo1.box_hi, args.resolution, &opts)?;
    fs::write(cfg.output("raster.csv")?, io::raster_csv(&r))
        .map_err(|source| Error::Io { context: "writing raster.csv".into(), source })
}

fn plot(args: &PlotArgs) -> Result<()> {
    let files = args.regions.iter().map(|p| io::read_region(p)).collect::<Result<Vec<_>>>()?;
    if files.iter().any(|f| f.region.outer.dim() != 2) {
        return Err(Error::Input("plot needs W = 2 regions".into()));
    }
    let cells = match &args.raster {
        Some(p) => io::parse_raster_csv(&read_text(p)?)?,
        None => Vec::new(),
    };
    let resolution = (cells.len() as f64).sqrt().round() as usize;
    let layers: Vec<svg::Layer> = files
        .iter()
        .map(|f| svg::Layer { label: f.model.clone(), outer: &f.region.outer, holes: &f.region.holes })
        .collect();
    let text = svg::render(&layers, &cells, resolution)?;
    fs::create_dir_all(&args.out)
        .map_err(|source| Error::Io { context: format!("creating {}", args.out.display()), source })?;
    let path = args.out.join("plot.svg");
    fs::write(&path, text).map_err(|source| Error::Io { context: format!("writing {}", path.display()), source })
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { context: format!("reading {}", path.display()), source })
}

/// Machine-readable kind of an error: the variant name, nested once.
pub fn error_kind(err: &Error) -> String {
    fn head(debug: String) -> String {
        debug.split(|c: char| !c.is_alphanumeric() && c != '_').next().unwrap_or_default().to_string()
    }
    match err {
        Error::Case(e) => head(format!("{e:?}")),
        Error::Conic(e) => head(format!("{e:?}")),
        Error::Geometry(e) => head(format!("{e:?}")),
        Error::Algorithm(e) => head(format!("{e:?}")),
        Error::Oracle(e) => head(format!("{e:?}")),
        Error::Io { .. } => "Io".into(),
        Error::Input(_) => "Input".into(),
    }
}

#[derive(Serialize)]
struct ErrorReport {
    error: String,
    message: String,
}

pub fn execute(cli: &Cli) -> Result<()> {
    let go = || match &cli.command {
        Command::Validate(a) => validate(a),
        Command::RelaxedRegion(a) => relaxed_region(a),
        Command::FullRegion(a) => full_region(a),
        Command::Baseline(a) => baseline(a),
        Command::Metrics(a) => metrics(a),
        Command::Raster(a) => raster(a),
        Command::Plot(a) => plot(a),
    };
    match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Input(format!("thread pool: {e}")))?
            .install(go),
        None => go(),
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return 0;
            }
            let report = ErrorReport { error: "Usage".into(), message: e.to_string() };
            eprintln!("{}", serde_json::to_string(&report).unwrap_or_default());
            return 2;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let report = ErrorReport { error: error_kind(&e), message: e.to_string() };
            eprintln!("{}", serde_json::to_string(&report).unwrap_or_default());
            1
        }
    }
}
