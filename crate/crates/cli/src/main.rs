//! `cantor-ei`: extremal-index statistics for Cantor target sets.
//!
//! Exit codes: 0 ok, 2 config error, 3 resource cap, 4 numeric
//! non-convergence, 5 I/O.

mod config;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cantor_ei::digraph::{
    build_mqk, build_nq, dim_bound, mcclure_vertices, spectral_radius, SPECTRAL_TOL,
};
use cantor_ei::dynamics::{generate_ensemble, MapId, Observable, PiecewiseMap};
use cantor_ei::estimator::{
    fmt_sig12, sweep, write_sweep_csv, write_sweep_rows, SweepMeta, SweepTable, SWEEP_CSV_COLUMNS,
};
use cantor_ei::exact::{fmt_rat, AffineMap, Caps};
use cantor_ei::ifs::AffineIfs;
use cantor_ei::theory::{
    cluster_terminator_set, covering_counts, dim_estimate_from_counts, obrien_theta,
    rational_to_f64, theory_csv_row,
};
use cantor_ei::Error as CoreError;

use config::{ConfigFile, RunStamp};

#[derive(Debug)]
pub enum CliError {
    Core(CoreError),
    Config(String),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(CoreError::ResourceLimit(_)) => 3,
            CliError::Core(CoreError::NonConvergence { .. }) => 4,
            CliError::Io(_) => 5,
            _ => 2,
        }
    }
}

fn io_err(context: &str, e: std::io::Error) -> CliError {
    CliError::Io(format!("{context}: {e}"))
}

#[derive(Parser)]
#[command(
    name = "cantor-ei",
    version,
    about = "Extremal-index statistics of orbits hitting Cantor target sets"
)]
struct Cli {
    /// Worker threads for simulation (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Suppress progress logs on stderr (never affects data output).
    #[arg(long, global = true)]
    quiet: bool,

    /// Flat key=value config file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact O'Brien ratio theta = mu(A_{q,L}) / mu(C_L).
    ThetaExact(ThetaExactArgs),
    /// Substitution matrix N^q: dimension, row sums, spectral radius, and
    /// the box-dimension bound for C ∩ T^{-q}(C).
    Digraph(DigraphArgs),
    /// Generate a seeded orbit ensemble and optionally dump raw series.
    Simulate(SimulateArgs),
    /// Hsing-estimator sweep over thresholds and gaps (CSV).
    Sweep(SweepArgs),
    /// Finite-level EI ratio of a survivor Cantor set from an IFS spec file.
    IfsTheta(IfsThetaArgs),
    /// Covering-count diagnostics N* / N for C_n ∩ T^{-q}(C_n).
    Counts(CountsArgs),
    /// One-shot regeneration of one reference figure's data at configured scale.
    Repro(ReproArgs),
}

#[derive(Args, Clone, Default)]
struct CapsArgs {
    /// Deepest Cantor/survivor level allowed (default 20).
    #[arg(long)]
    max_level: Option<u32>,
    /// Endpoint denominator bit-length cap (default 4096).
    #[arg(long)]
    max_denom_bits: Option<u64>,
    /// Interval-count budget per exact operation (default 20000000).
    #[arg(long)]
    max_intervals: Option<usize>,
}

impl CapsArgs {
    fn resolve(&self, cfg: &ConfigFile) -> Result<Caps, CliError> {
        let defaults = Caps::default();
        Ok(Caps {
            max_cantor_level: cfg.resolve_or(
                &self.max_level,
                "max-level",
                defaults.max_cantor_level,
            )?,
            max_denom_bits: cfg.resolve_or(
                &self.max_denom_bits,
                "max-denom-bits",
                defaults.max_denom_bits,
            )?,
            max_intervals: cfg.resolve_or(
                &self.max_intervals,
                "max-intervals",
                defaults.max_intervals,
            )?,
        })
    }
}

#[derive(Args)]
struct ThetaExactArgs {
    /// Map id: `mx_mod1:<m>` or `mixed_linear`.
    #[arg(long)]
    map: Option<String>,
    /// Threshold index L (the exceedance set is C_L).
    #[arg(long)]
    level: Option<u32>,
    /// Gap parameter q of the cluster-terminating event.
    #[arg(long)]
    gaps: Option<u32>,
    /// Also write a one-row CSV `level,q,mu_U,mu_A,theta`.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Dump the exact set A_{q,L}, one `lo hi` rational pair per line.
    #[arg(long)]
    dump_set: Option<PathBuf>,
    #[command(flatten)]
    caps: CapsArgs,
}

#[derive(Args)]
struct DigraphArgs {
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    q: Option<u32>,
    /// Emit the nonzero entries as 1-indexed `row col` lines after the report.
    #[arg(long)]
    dump_matrix: bool,
    /// Also build the per-offset matrix M^k_q for this seed offset.
    #[arg(long)]
    mcclure: Option<u32>,
    /// Cantor depth of the exact non-emptiness filter (default 6).
    #[arg(long)]
    filter_depth: Option<u32>,
    #[command(flatten)]
    caps: CapsArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    map: Option<String>,
    /// Observable: ladder | escape.
    #[arg(long)]
    observable: Option<String>,
    /// Orbit length.
    #[arg(long)]
    n: Option<usize>,
    /// Number of orbits.
    #[arg(long)]
    ell: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Unrecorded steps before the series starts (default: 1000 for maps
    /// without invariant Lebesgue measure, else 0).
    #[arg(long)]
    burnin: Option<u32>,
    /// Observable cap standing in for infinity (default 100).
    #[arg(long)]
    cap: Option<u32>,
    /// Directory for raw series dumps, one integer per line per orbit file.
    #[arg(long)]
    dump_series: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    map: Option<String>,
    #[arg(long)]
    observable: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    ell: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    burnin: Option<u32>,
    #[arg(long)]
    cap: Option<u32>,
    #[arg(long)]
    u_min: Option<u32>,
    #[arg(long)]
    u_max: Option<u32>,
    /// Comma-separated gap values, e.g. 1,5,10.
    #[arg(long)]
    q: Option<String>,
    /// Output CSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IfsThetaArgs {
    /// IFS spec file: one `lambda_num/lambda_den offset_num/offset_den` per line.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Iterate count of the compatible map (threshold index is n+k-1).
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    n: Option<u32>,
    #[command(flatten)]
    caps: CapsArgs,
}

#[derive(Args)]
struct CountsArgs {
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    q: Option<u32>,
    /// Single level (shorthand for n-min = n-max).
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    n_min: Option<u32>,
    #[arg(long)]
    n_max: Option<u32>,
    /// Extra refinement depth: counts are taken against C_{n+refine}.
    #[arg(long)]
    refine: Option<u32>,
    #[command(flatten)]
    caps: CapsArgs,
}

#[derive(Args)]
struct ReproArgs {
    /// Figure preset: fig3|fig4|fig7|fig8|fig9 (aliases: ladder-m3-m9,
    /// ladder-m5, mixed-linear, nonlinear-gauss-rotation, quadratic-survivor).
    figure: String,
    /// Scale-down override for orbit length.
    #[arg(long)]
    n: Option<usize>,
    /// Scale-down override for ensemble size.
    #[arg(long)]
    ell: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Panel for two-panel figures: left (n=50000, ell=500) or right
    /// (n=500000, ell=100).
    #[arg(long)]
    panel: Option<String>,
    /// Output CSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .is_err()
        {
            eprintln!("warning: thread pool already initialized");
        }
    }
    let cfg = match &cli.config {
        Some(path) => match ConfigFile::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(e.exit_code());
            }
        },
        None => ConfigFile::default(),
    };
    let result = match &cli.command {
        Command::ThetaExact(args) => cmd_theta_exact(args, &cfg),
        Command::Digraph(args) => cmd_digraph(args, &cfg),
        Command::Simulate(args) => cmd_simulate(args, &cfg, cli.quiet),
        Command::Sweep(args) => cmd_sweep(args, &cfg, cli.quiet),
        Command::IfsTheta(args) => cmd_ifs_theta(args, &cfg),
        Command::Counts(args) => cmd_counts(args, &cfg),
        Command::Repro(args) => cmd_repro(args, &cfg, cli.quiet),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn exact_map_from_id(id: &str) -> Result<AffineMap, CliError> {
    let map_id: MapId = id.parse().map_err(CliError::Core)?;
    match map_id {
        MapId::MxMod1(m) => Ok(AffineMap::mx_mod1(m)?),
        MapId::MixedLinear => Ok(AffineMap::mixed_linear()),
        other => Err(CliError::Core(CoreError::UnsupportedMap(format!(
            "{other} has no exact-affine form; theta-exact supports mx_mod1:<m> and mixed_linear"
        )))),
    }
}

fn print_header(stamp: &RunStamp) {
    for line in stamp.header_lines() {
        println!("# {line}");
    }
}

fn cmd_theta_exact(args: &ThetaExactArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    let map_id: String = cfg.require(&args.map, "map")?;
    let level: u32 = cfg.require(&args.level, "level")?;
    let gaps: u32 = cfg.require(&args.gaps, "gaps")?;
    let caps = args.caps.resolve(cfg)?;
    let map = exact_map_from_id(&map_id)?;

    let mut stamp = RunStamp::new("theta-exact");
    stamp
        .push("map", &map_id)
        .push("level", level)
        .push("gaps", gaps);

    let result = obrien_theta(&map, level, gaps, &caps)?;
    print_header(&stamp);
    println!(
        "theta = {} ~ {}",
        fmt_rat(&result.theta),
        fmt_sig12(rational_to_f64(&result.theta))
    );
    println!(
        "mu_U = {}  mu_A = {}",
        fmt_rat(&result.mu_u),
        fmt_rat(&result.mu_a)
    );

    if let Some(path) = &args.csv {
        let mut text = String::new();
        for line in stamp.header_lines() {
            text.push_str(&format!("# {line}\n"));
        }
        text.push_str("level,q,mu_U,mu_A,theta\n");
        text.push_str(&theory_csv_row(&result));
        text.push('\n');
        fs::write(path, text).map_err(|e| io_err("writing csv", e))?;
    }
    if let Some(path) = &args.dump_set {
        let u = cantor_ei::exact::cantor_approx(level, &caps)?;
        let a = cluster_terminator_set(&map, &u, gaps, &caps)?;
        let mut text = String::new();
        for line in stamp.header_lines() {
            text.push_str(&format!("# {line}\n"));
        }
        text.push_str(&a.to_text());
        fs::write(path, text).map_err(|e| io_err("writing set dump", e))?;
    }
    Ok(())
}

fn cmd_digraph(args: &DigraphArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    let m: u32 = cfg.require(&args.m, "m")?;
    let q: u32 = cfg.require(&args.q, "q")?;
    let caps = args.caps.resolve(cfg)?;

    let mut stamp = RunStamp::new("digraph");
    stamp.push("m", m).push("q", q);

    let nq = build_nq(m, q)?;
    let rho = spectral_radius(&nq, SPECTRAL_TOL)?;
    let bound = dim_bound(m, q)?;

    print_header(&stamp);
    println!("dimension = {}", nq.dim());
    println!("entries = {}", nq.entry_count());
    let hist = nq.row_sum_histogram();
    let hist_str: Vec<String> = hist
        .iter()
        .enumerate()
        .map(|(s, c)| format!("{s}:{c}"))
        .collect();
    println!("row-sum histogram = {}", hist_str.join(" "));
    println!("spectral_radius = {}", fmt_sig12(rho));
    println!("dim_bound = {}", fmt_sig12(bound));

    if let Some(k) = args.mcclure {
        let depth = cfg.resolve_or(&args.filter_depth, "filter-depth", 6)?;
        let vertices = mcclure_vertices(m, q, k, depth, &caps)?;
        let mqk = build_mqk(&vertices, m, q)?;
        let rho_sub = spectral_radius(&mqk, SPECTRAL_TOL)?;
        let offsets: Vec<String> = vertices.iter().map(|v| v.offset.to_string()).collect();
        println!(
            "mcclure seed {k} at depth {depth}: {} vertices [{}]",
            vertices.len(),
            offsets.join(" ")
        );
        println!("mcclure spectral_radius = {}", fmt_sig12(rho_sub));
    }
    if args.dump_matrix {
        for (r, c) in nq.entries() {
            println!("{} {}", r + 1, c + 1);
        }
    }
    Ok(())
}

struct EnsembleSpec {
    map_id: MapId,
    observable: Observable,
    obs_name: String,
    n: usize,
    ell: u32,
    seed: u64,
    burnin: u32,
}

impl EnsembleSpec {
    fn generate(&self, quiet: bool) -> Result<Vec<cantor_ei::ObservableSeries>, CliError> {
        if !quiet {
            eprintln!(
                "generating {} orbits of length {} for {} ({}, burn-in {})",
                self.ell, self.n, self.map_id, self.obs_name, self.burnin
            );
        }
        let map = PiecewiseMap::from_map_id(&self.map_id);
        Ok(generate_ensemble(
            &map,
            self.observable,
            self.n,
            self.ell,
            self.seed,
            self.burnin,
        )?)
    }

    fn meta(&self) -> SweepMeta {
        SweepMeta {
            map_id: self.map_id.to_string(),
            observable: self.obs_name.clone(),
            n: self.n,
            ell: self.ell,
            seed: self.seed,
            burnin: self.burnin,
        }
    }

    fn stamp_into(&self, stamp: &mut RunStamp) {
        stamp
            .push("map", self.map_id)
            .push("observable", &self.obs_name)
            .push("n", self.n)
            .push("ell", self.ell)
            .push("seed", self.seed)
            .push("burnin", self.burnin)
            .push("cap", self.observable.cap());
    }
}

#[allow(clippy::too_many_arguments)]
fn resolve_ensemble_spec(
    cfg: &ConfigFile,
    map: &Option<String>,
    observable: &Option<String>,
    n: &Option<usize>,
    ell: &Option<u32>,
    seed: &Option<u64>,
    burnin: &Option<u32>,
    cap: &Option<u32>,
) -> Result<EnsembleSpec, CliError> {
    let map_str: String = cfg.require(map, "map")?;
    let map_id: MapId = map_str.parse().map_err(CliError::Core)?;
    let obs_name: String = cfg.resolve_or(observable, "observable", "ladder".to_string())?;
    let cap = cfg.resolve_or(cap, "cap", 100)?;
    let observable = Observable::parse(&obs_name, cap).map_err(CliError::Core)?;
    let burnin = cfg
        .resolve(burnin, "burnin")?
        .unwrap_or_else(|| map_id.default_burnin());
    Ok(EnsembleSpec {
        map_id,
        observable,
        obs_name,
        n: cfg.require(n, "n")?,
        ell: cfg.require(ell, "ell")?,
        seed: cfg.resolve_or(seed, "seed", 42)?,
        burnin,
    })
}

fn cmd_simulate(args: &SimulateArgs, cfg: &ConfigFile, quiet: bool) -> Result<(), CliError> {
    let spec = resolve_ensemble_spec(
        cfg,
        &args.map,
        &args.observable,
        &args.n,
        &args.ell,
        &args.seed,
        &args.burnin,
        &args.cap,
    )?;
    let mut stamp = RunStamp::new("simulate");
    spec.stamp_into(&mut stamp);

    let ensemble = spec.generate(quiet)?;
    let total: u64 = ensemble.iter().map(|s| s.levels.len() as u64).sum();
    let max_level = ensemble
        .iter()
        .flat_map(|s| s.levels.iter())
        .max()
        .copied()
        .unwrap_or(0);
    let mean_level = ensemble
        .iter()
        .flat_map(|s| s.levels.iter())
        .map(|&l| l as f64)
        .sum::<f64>()
        / total.max(1) as f64;

    print_header(&stamp);
    println!("orbits = {}", ensemble.len());
    println!("samples = {total}");
    println!("max_level = {max_level}");
    println!("mean_level = {}", fmt_sig12(mean_level));

    if let Some(dir) = &args.dump_series {
        fs::create_dir_all(dir).map_err(|e| io_err("creating dump directory", e))?;
        for series in &ensemble {
            let path = dir.join(format!("orbit_{:05}.txt", series.origin.orbit_index));
            let mut text = String::new();
            for line in stamp.header_lines() {
                text.push_str(&format!("# {line}\n"));
            }
            text.push_str(&format!(
                "# orbit-index: {} x0: {:?}\n",
                series.origin.orbit_index, series.origin.x0
            ));
            for level in &series.levels {
                text.push_str(&format!("{level}\n"));
            }
            fs::write(&path, text).map_err(|e| io_err("writing series dump", e))?;
        }
        if !quiet {
            eprintln!("wrote {} series files to {}", ensemble.len(), dir.display());
        }
    }
    Ok(())
}

fn parse_q_list(text: &str) -> Result<Vec<u32>, CliError> {
    let qs: Result<Vec<u32>, _> = text.split(',').map(|s| s.trim().parse::<u32>()).collect();
    qs.map_err(|_| CliError::Config(format!("bad gap list `{text}` (expected e.g. 1,5,10)")))
}

fn write_output(path: &Option<PathBuf>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| io_err("writing output", e)),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| io_err("writing stdout", e)),
    }
}

fn cmd_sweep(args: &SweepArgs, cfg: &ConfigFile, quiet: bool) -> Result<(), CliError> {
    let spec = resolve_ensemble_spec(
        cfg,
        &args.map,
        &args.observable,
        &args.n,
        &args.ell,
        &args.seed,
        &args.burnin,
        &args.cap,
    )?;
    let u_min = cfg.resolve_or(&args.u_min, "u-min", 1)?;
    let u_max = cfg.resolve_or(&args.u_max, "u-max", 20)?;
    if u_min > u_max {
        return Err(CliError::Config(format!(
            "u-min {u_min} above u-max {u_max}"
        )));
    }
    let q_text = cfg.resolve_or(&args.q, "q", "1,5,10".to_string())?;
    let qs = parse_q_list(&q_text)?;

    let mut stamp = RunStamp::new("sweep");
    spec.stamp_into(&mut stamp);
    stamp
        .push("u-min", u_min)
        .push("u-max", u_max)
        .push("q", &q_text);

    let ensemble = spec.generate(quiet)?;
    let table = sweep(&ensemble, u_min..=u_max, &qs, spec.meta())?;
    let mut buf = Vec::new();
    write_sweep_csv(&table, &stamp.header_lines(), &mut buf)
        .map_err(|e| io_err("formatting csv", e))?;
    write_output(&args.out, &buf)
}

fn cmd_ifs_theta(args: &IfsThetaArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    let spec_path: PathBuf = cfg.require(&args.spec, "spec")?;
    let k: u32 = cfg.require(&args.k, "k")?;
    let n: u32 = cfg.require(&args.n, "n")?;
    let caps = args.caps.resolve(cfg)?;

    let text = fs::read_to_string(&spec_path)
        .map_err(|e| io_err(&format!("reading {}", spec_path.display()), e))?;
    let ifs = AffineIfs::parse(&text)?;

    let mut stamp = RunStamp::new("ifs-theta");
    stamp
        .push("spec-sha-source", spec_path.display())
        .push("contractions", ifs.contractions().len())
        .push("k", k)
        .push("n", n);

    let theta = ifs.general_theta(k, n, &caps)?;
    let limit = ifs.theoretical_ei(k);
    print_header(&stamp);
    println!(
        "theta = {} ~ {}",
        fmt_rat(&theta),
        fmt_sig12(rational_to_f64(&theta))
    );
    println!(
        "limit = {} ~ {}",
        fmt_rat(&limit),
        fmt_sig12(rational_to_f64(&limit))
    );
    Ok(())
}

fn cmd_counts(args: &CountsArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    let m: u32 = cfg.require(&args.m, "m")?;
    let q: u32 = cfg.require(&args.q, "q")?;
    let caps = args.caps.resolve(cfg)?;
    let single = cfg.resolve(&args.n, "n")?;
    let n_min = match single {
        Some(n) => n,
        None => cfg.require(&args.n_min, "n-min")?,
    };
    let n_max = match single {
        Some(n) => n,
        None => cfg.require(&args.n_max, "n-max")?,
    };
    if n_min > n_max || n_min == 0 {
        return Err(CliError::Config(format!(
            "bad level range {n_min}..{n_max}"
        )));
    }
    let refine = cfg.resolve_or(&args.refine, "refine", 0)?;

    let mut stamp = RunStamp::new("counts");
    stamp
        .push("m", m)
        .push("q", q)
        .push("n-min", n_min)
        .push("n-max", n_max)
        .push("refine", refine);

    print_header(&stamp);
    println!("n,n_star,n_refined");
    let mut refined = Vec::new();
    for n in n_min..=n_max {
        let (star, refd) = covering_counts(m, q, n, n + refine, &caps)?;
        println!("{n},{star},{refd}");
        refined.push((n, refd));
    }
    if refined.len() >= 2 && refined.iter().all(|&(_, c)| c > 0) {
        let slope = dim_estimate_from_counts(&refined)?;
        println!("# dim_estimate = {}", fmt_sig12(slope));
    }
    Ok(())
}

struct FigurePreset {
    name: &'static str,
    runs: Vec<(MapId, &'static str)>,
    n: usize,
    ell: u32,
    u_max: u32,
}

fn figure_preset(figure: &str, panel: Option<&str>) -> Result<FigurePreset, CliError> {
    let panel_scale = |name: &str| -> Result<(usize, u32), CliError> {
        match panel.unwrap_or("left") {
            "left" => Ok((50_000, 500)),
            "right" => Ok((500_000, 100)),
            other => Err(CliError::Config(format!(
                "figure {name} has panels left|right, not `{other}`"
            ))),
        }
    };
    match figure {
        "fig3" | "ladder-m3-m9" => Ok(FigurePreset {
            name: "fig3",
            runs: vec![(MapId::MxMod1(3), "ladder"), (MapId::MxMod1(9), "ladder")],
            n: 50_000,
            ell: 500,
            u_max: 20,
        }),
        "fig4" | "ladder-m5" => {
            let (n, ell) = panel_scale("fig4")?;
            Ok(FigurePreset {
                name: "fig4",
                runs: vec![(MapId::MxMod1(5), "ladder")],
                n,
                ell,
                u_max: 28,
            })
        }
        "fig7" | "mixed-linear" => {
            let (n, ell) = panel_scale("fig7")?;
            Ok(FigurePreset {
                name: "fig7",
                runs: vec![(MapId::MixedLinear, "ladder")],
                n,
                ell,
                u_max: 20,
            })
        }
        "fig8" | "nonlinear-gauss-rotation" => Ok(FigurePreset {
            name: "fig8",
            runs: vec![
                (MapId::Nonlinear, "ladder"),
                (MapId::Gauss, "ladder"),
                (MapId::Rotation, "ladder"),
            ],
            n: 50_000,
            ell: 500,
            u_max: 20,
        }),
        "fig9" | "quadratic-survivor" => Ok(FigurePreset {
            name: "fig9",
            runs: vec![
                (MapId::QuadraticCompatible, "escape"),
                (MapId::MxMod1(5), "escape"),
            ],
            n: 50_000,
            ell: 500,
            u_max: 14,
        }),
        other => Err(CliError::Config(format!(
            "unknown figure `{other}` (expected fig3|fig4|fig7|fig8|fig9 or an alias)"
        ))),
    }
}

fn cmd_repro(args: &ReproArgs, cfg: &ConfigFile, quiet: bool) -> Result<(), CliError> {
    let panel = cfg.resolve(&args.panel, "panel")?;
    let preset = figure_preset(&args.figure, panel.as_deref())?;
    let n = cfg.resolve_or(&args.n, "n", preset.n)?;
    let ell = cfg.resolve_or(&args.ell, "ell", preset.ell)?;
    let seed = cfg.resolve_or(&args.seed, "seed", 42)?;
    let qs = [1u32, 5, 10];

    let mut stamp = RunStamp::new("repro");
    stamp
        .push("figure", preset.name)
        .push("n", n)
        .push("ell", ell)
        .push("seed", seed)
        .push("q", "1,5,10")
        .push("u-max", preset.u_max);
    if let Some(p) = &panel {
        stamp.push("panel", p);
    }

    let mut tables: Vec<SweepTable> = Vec::new();
    for (map_id, obs_name) in &preset.runs {
        let spec = EnsembleSpec {
            map_id: *map_id,
            observable: Observable::parse(obs_name, 100).map_err(CliError::Core)?,
            obs_name: obs_name.to_string(),
            n,
            ell,
            seed,
            // the reference experiments sample the initial points uniformly
            // with no burn-in
            burnin: 0,
        };
        let ensemble = spec.generate(quiet)?;
        tables.push(sweep(&ensemble, 1..=preset.u_max, &qs, spec.meta())?);
    }

    let mut buf = Vec::new();
    for line in stamp.header_lines() {
        writeln!(&mut buf, "# {line}").map_err(|e| io_err("formatting csv", e))?;
    }
    writeln!(&mut buf, "{SWEEP_CSV_COLUMNS}").map_err(|e| io_err("formatting csv", e))?;
    for table in &tables {
        write_sweep_rows(table, &mut buf).map_err(|e| io_err("formatting csv", e))?;
    }
    write_output(&args.out, &buf)
}
