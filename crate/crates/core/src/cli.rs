//! Command-line front end.
//!
//! Every subcommand writes into `<out>/<subcommand>/` and leaves a
//! `manifest.json` there holding the argument vector, the resolved
//! parameters and the per-run configuration. Outputs are deterministic for a
//! given manifest, independent of `--threads`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::collapse::{adjoint_kernel_value, hermitian_split, KernelL, KernelVariant};
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::grid::{Grid, C64};
use crate::macro_rates::{rate_ratio, sharp_scanning_lambda, MacroBody};
use crate::master::{
    appendix_a_kernel_equivalence, gibbs_residual, propagate, relax_energy, GeneratorSpec, PropagateOptions,
};
use crate::params::{ModelParams, ParamsFile, Preset, SimModel, SimUnits};
use crate::qstate::WaveState;
use crate::sde::{run_ensemble, run_trajectory, Hamiltonian, Scheme, SdeConfig, FIG1_ALPHA, FIG1_SIGMA};

#[derive(Debug, Parser)]
#[command(name = "dcsl", version, about = "Dissipative CSL trajectories, master equation and macroscopic rates")]
pub struct Cli {
    /// JSON parameter file (keys: preset, gamma_cm3_per_s, r_C_m, v_eta_m_per_s, mass_amu)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Parameter override, repeatable: --set v_eta_m_per_s=2e5
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for ensembles (0 = all cores)
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a single trajectory
    Simulate(SimulateArgs),
    /// Integrate an ensemble of trajectories
    Ensemble(EnsembleArgs),
    /// Propagate the master equation and check relaxation and stationarity
    Master(MasterArgs),
    /// Localization and dissipation rates of a homogeneous sphere
    Rates(RatesArgs),
    /// Write the collapse kernel on a grid
    KernelDump(KernelArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StatePreset {
    Fig1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HamiltonianArg {
    None,
    Free,
}

impl From<HamiltonianArg> for Hamiltonian {
    fn from(h: HamiltonianArg) -> Self {
        match h {
            HamiltonianArg::None => Hamiltonian::None,
            HamiltonianArg::Free => Hamiltonian::Free,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Nonlinear,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Main,
    AppendixA,
}

impl From<VariantArg> for KernelVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Main => KernelVariant::Main,
            VariantArg::AppendixA => KernelVariant::AppendixA,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Grid points (even)
    #[arg(long = "grid", default_value_t = 512)]
    pub n: usize,
    /// Box length in units of r_C
    #[arg(long, default_value_t = 40.0)]
    pub length: f64,
}

#[derive(Debug, Clone, Args)]
pub struct TrajectoryArgs {
    #[arg(long, value_enum)]
    pub preset: Option<StatePreset>,
    /// Dissipation constant; defaults to the value of the resolved parameters
    #[arg(long)]
    pub k: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Time step in units of 1/lambda
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Number of steps; overrides --t-end
    #[arg(long)]
    pub steps: Option<usize>,
    /// Peak offset in units of r_C
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Peak width in units of r_C
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Real superposition weights of the right and left peaks
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub weights: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub hamiltonian: Option<HamiltonianArg>,
    #[arg(long, value_enum, default_value = "nonlinear")]
    pub scheme: SchemeArg,
    #[arg(long, default_value_t = 1)]
    pub record_every: usize,
    /// Snapshot times in units of 1/lambda
    #[arg(long, value_delimiter = ',')]
    pub snapshot_times: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub traj: TrajectoryArgs,
    /// Noise substream index
    #[arg(long, default_value_t = 0)]
    pub trajectory: u64,
}

#[derive(Debug, Clone, Args)]
pub struct EnsembleArgs {
    #[command(flatten)]
    pub traj: TrajectoryArgs,
    #[arg(long, default_value_t = 500)]
    pub n_traj: usize,
}

#[derive(Debug, Clone, Args)]
pub struct MasterArgs {
    #[arg(long, value_enum, default_value = "main")]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 0.25)]
    pub k: f64,
    #[arg(long = "grid", default_value_t = 128)]
    pub n: usize,
    #[arg(long, default_value_t = 40.0)]
    pub length: f64,
    #[arg(long, default_value_t = 8.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 0.02)]
    pub dt: f64,
    #[arg(long, default_value_t = 5)]
    pub record_every: usize,
    /// Initial Gaussian packet: width, centre and mean momentum
    #[arg(long, default_value_t = 0.3)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    pub x0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub p0: f64,
    #[arg(long, value_enum, default_value = "free")]
    pub hamiltonian: HamiltonianArg,
}

#[derive(Debug, Clone, Args)]
pub struct RatesArgs {
    /// Parameter preset; overrides the preset of --config
    #[arg(long)]
    pub preset: Option<Preset>,
    /// Sphere radius in metres
    #[arg(long, default_value_t = 1e-3)]
    pub radius: f64,
    /// Particle count; defaults to the reference density N = 1e25 (R[cm])^3
    #[arg(long = "N", alias = "n-particles", conflicts_with = "density")]
    pub n_particles: Option<f64>,
    /// Number density in particles per m^3
    #[arg(long)]
    pub density: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    #[arg(long, default_value_t = 0.25)]
    pub k: f64,
    #[arg(long = "grid", default_value_t = 64)]
    pub n: usize,
    #[arg(long, default_value_t = 20.0)]
    pub length: f64,
    #[arg(long, value_enum, default_value = "main")]
    pub variant: VariantArg,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    argv: &'a [String],
    subcommand: &'static str,
    seed: u64,
    params_file: &'a ParamsFile,
    params: &'a ModelParams,
    units: SimUnits,
    run: Value,
    outputs: Vec<String>,
}

struct Context<'a> {
    argv: &'a [String],
    seed: u64,
    params_file: ParamsFile,
    params: ModelParams,
    dir: PathBuf,
}

impl Context<'_> {
    fn file(&self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    fn write_manifest(&self, subcommand: &'static str, run: Value, outputs: &[&str]) -> Result<()> {
        let manifest = Manifest {
            tool: "dcsl",
            version: env!("CARGO_PKG_VERSION"),
            argv: self.argv,
            subcommand,
            seed: self.seed,
            params_file: &self.params_file,
            params: &self.params,
            units: SimUnits::new(&self.params),
            run,
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
        };
        write_json(&self.dir.join("manifest.json"), &manifest)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Applies `key=value` overrides on top of a parameter file. Values are read
/// as JSON and fall back to plain strings (`preset=adler2007`).
pub fn apply_overrides(base: &ParamsFile, overrides: &[String]) -> Result<ParamsFile> {
    let mut v = serde_json::to_value(base)?;
    let map = v.as_object_mut().expect("parameter file serializes to an object");
    for o in overrides {
        let (key, raw) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {o:?} is not of the form key=value")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        map.insert(key.trim().to_string(), value);
    }
    serde_json::from_value(v).map_err(|e| Error::Config(format!("bad parameter override: {e}")))
}

struct Resolved {
    model: SimModel,
    grid: Arc<Grid>,
    state: WaveState,
    config: SdeConfig,
    run: Value,
}

fn pinned<T: PartialEq + Copy + std::fmt::Debug>(name: &str, given: Option<T>, value: T) -> Result<T> {
    match given {
        Some(g) if g != value => Err(Error::Config(format!("--{name} is fixed to {value:?} by --preset fig1"))),
        _ => Ok(value),
    }
}

fn resolve_trajectory(args: &TrajectoryArgs, params: &ModelParams, seed: u64) -> Result<Resolved> {
    let fig1 = args.preset == Some(StatePreset::Fig1);
    let (k, alpha, sigma, dt, hamiltonian, weights) = if fig1 {
        (
            pinned("k", args.k, 0.0)?,
            pinned("alpha", args.alpha, FIG1_ALPHA)?,
            pinned("sigma", args.sigma, FIG1_SIGMA)?,
            pinned("dt", args.dt, 0.01)?,
            pinned("hamiltonian", args.hamiltonian, HamiltonianArg::None)?,
            (1.0, 1.0),
        )
    } else {
        let w = args.weights.clone().unwrap_or_else(|| vec![1.0, 1.0]);
        (
            args.k.unwrap_or(params.k),
            args.alpha.unwrap_or(FIG1_ALPHA),
            args.sigma.unwrap_or(FIG1_SIGMA),
            args.dt.unwrap_or(0.01),
            args.hamiltonian.unwrap_or(HamiltonianArg::None),
            (w[0], w[1]),
        )
    };
    if fig1 && args.weights.as_deref().is_some_and(|w| w != [1.0, 1.0]) {
        return Err(Error::Config("--weights is fixed to 1,1 by --preset fig1".into()));
    }
    let t_end = match (args.steps, args.t_end) {
        (Some(s), _) => s as f64 * dt,
        (None, Some(t)) => t,
        (None, None) => 1.0,
    };
    let mut config = SdeConfig::fig1(seed);
    config.dt = dt;
    config.t_end = t_end;
    config.hamiltonian = hamiltonian.into();
    config.scheme = match args.scheme {
        SchemeArg::Nonlinear => Scheme::Nonlinear,
        SchemeArg::Linear => Scheme::Linear,
    };
    config.record_every = args.record_every;
    config.outcome_variance = sigma * sigma;
    config.snapshot_times = match &args.snapshot_times {
        Some(t) => t.clone(),
        None => config.snapshot_times.iter().copied().filter(|&t| t <= t_end + 0.5 * dt).collect(),
    };

    let model = SimModel::dimensionless(k);
    let grid = Grid::shared(args.grid.n, args.grid.length, model.hbar)?;
    let state = WaveState::gaussian_superposition(
        grid.clone(),
        alpha,
        sigma,
        (C64::new(weights.0, 0.0), C64::new(weights.1, 0.0)),
    )?;
    let run = json!({
        "preset": args.preset,
        "model": model,
        "grid": { "n": args.grid.n, "length": args.grid.length },
        "initial_state": { "alpha": alpha, "sigma": sigma, "weights": [weights.0, weights.1] },
        "sde": config,
    });
    Ok(Resolved { model, grid, state, config, run })
}

fn write_density_columns(w: &mut impl Write, x: &[f64], columns: &[(f64, Vec<f64>)]) -> Result<()> {
    write!(w, "x")?;
    for (t, _) in columns {
        write!(w, ",t={t}")?;
    }
    writeln!(w)?;
    for (i, xi) in x.iter().enumerate() {
        write!(w, "{xi:.10e}")?;
        for (_, col) in columns {
            write!(w, ",{:.10e}", col[i])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

fn cmd_simulate(ctx: &Context, args: &SimulateArgs) -> Result<()> {
    let r = resolve_trajectory(&args.traj, &ctx.params, ctx.seed)?;
    let kernel = KernelL::build(&r.model, &r.grid)?;
    let traj = run_trajectory(&r.config, &kernel, &r.state, args.trajectory)?;

    let mut w = ctx.file("trajectory.csv")?;
    writeln!(w, "t,norm,mean_x,var_x,mean_p,energy")?;
    for (t, o) in traj.times.iter().zip(&traj.observables) {
        writeln!(
            w,
            "{t:.6},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            o.norm, o.mean_x, o.var_x, o.mean_p, o.kinetic_energy
        )?;
    }
    w.flush()?;

    let columns: Vec<(f64, Vec<f64>)> = traj
        .snapshots
        .iter()
        .map(|s| (s.time, r.grid.to_position(&s.phi).iter().map(|z| z.norm_sqr()).collect()))
        .collect();
    let mut w = ctx.file("snapshots.csv")?;
    write_density_columns(&mut w, r.grid.x(), &columns)?;
    w.flush()?;

    let mut w = ctx.file("final_state.csv")?;
    traj.final_state.write_csv(&mut w)?;
    w.flush()?;

    let mut run = r.run;
    run["trajectory"] = json!(args.trajectory);
    run["outcome"] = json!(traj.outcome);
    ctx.write_manifest("simulate", run, &["trajectory.csv", "snapshots.csv", "final_state.csv"])
}

fn cmd_ensemble(ctx: &Context, args: &EnsembleArgs) -> Result<()> {
    let r = resolve_trajectory(&args.traj, &ctx.params, ctx.seed)?;
    let kernel = KernelL::build(&r.model, &r.grid)?;
    let ens = run_ensemble(&r.config, &kernel, &r.state, args.n_traj)?;

    write_json(&ctx.dir.join("summary.json"), &ens)?;

    let mut w = ctx.file("stats.csv")?;
    writeln!(w, "t,mean_x,sd_mean_x,mean_var_x,median_var_x,mean_p,mean_energy,mean_norm")?;
    for s in &ens.stats {
        writeln!(
            w,
            "{:.6},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            s.time,
            s.mean_x.mean,
            s.mean_x.variance.sqrt(),
            s.var_x.mean,
            s.median_var_x,
            s.mean_p.mean,
            s.kinetic_energy.mean,
            s.norm.mean
        )?;
    }
    w.flush()?;

    let mut w = ctx.file("var_x.csv")?;
    write!(w, "t")?;
    for i in 0..ens.n_traj {
        write!(w, ",traj_{i}")?;
    }
    writeln!(w)?;
    for (ti, s) in ens.stats.iter().enumerate() {
        write!(w, "{:.6}", s.time)?;
        for tl in &ens.timelines {
            write!(w, ",{:.8e}", tl[ti].var_x)?;
        }
        writeln!(w)?;
    }
    w.flush()?;

    let mut w = ctx.file("ensemble_density.csv")?;
    write_density_columns(&mut w, r.grid.x(), &ens.position_density)?;
    w.flush()?;
    let mut w = ctx.file("sample_density.csv")?;
    write_density_columns(&mut w, r.grid.x(), &ens.sample_density)?;
    w.flush()?;

    let mut run = r.run;
    run["n_traj"] = json!(args.n_traj);
    ctx.write_manifest(
        "ensemble",
        run,
        &["summary.json", "stats.csv", "var_x.csv", "ensemble_density.csv", "sample_density.csv"],
    )
}

fn cmd_master(ctx: &Context, args: &MasterArgs) -> Result<()> {
    let model = SimModel::dimensionless(args.k);
    let grid = Grid::shared(args.n, args.length, model.hbar)?;
    let gen = GeneratorSpec::new(&model, &grid, args.variant.into(), args.hamiltonian.into())?;
    let state = WaveState::gaussian_packet(grid.clone(), args.x0, args.sigma, args.p0)?;
    let rho0 = DensityMatrix::from_pure(&state.momentum());
    let mut opts = PropagateOptions::new(args.dt, args.t_end);
    opts.record_every = args.record_every;
    opts.keep_states = false;
    let tl = propagate(&rho0, &gen, &grid, &opts)?;

    let mut w = ctx.file("energy.csv")?;
    writeln!(w, "t,H,H_analytic,trace,min_eigenvalue")?;
    for r in &tl.records {
        writeln!(
            w,
            "{:.6},{:.12e},{:.12e},{:.15},{:.6e}",
            r.time, r.energy, r.energy_analytic, r.trace, r.min_eigenvalue
        )?;
    }
    w.flush()?;

    let p2 = rho0.momentum_moment(&grid, 2);
    let fit = relax_energy(&tl.times(), &tl.energies(), &model);
    let gibbs = |scale: f64| gibbs_residual(&gen, &grid, scale);
    let as_json = |r: Result<f64>| match r {
        Ok(v) => json!(v),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let report = json!({
        "relaxation_rate_1d": model.relaxation_rate(),
        "asymptotic_energy_1d": if args.k > 0.0 { json!(model.asymptotic_energy()) } else { Value::Null },
        "heating_rate_1d": model.energy_source(),
        "fit": match &fit {
            Ok(f) => json!(f),
            Err(e) => json!({ "error": e.to_string() }),
        },
        "energy_law": {
            "p2_rate": gen.p2_rate(&grid, &rho0)?,
            "p2_rate_analytic": gen.p2_rate_analytic(p2),
        },
        "gibbs_residual": if args.k > 0.0 { as_json(gibbs(1.0)) } else { Value::Null },
        "gibbs_residual_double_temperature": if args.k > 0.0 { as_json(gibbs(2.0)) } else { Value::Null },
        "appendix_a_kernel_difference": appendix_a_kernel_equivalence(&model, &grid),
        "min_eigenvalue": tl.records.iter().map(|r| r.min_eigenvalue).fold(f64::INFINITY, f64::min),
        "max_trace_error": tl.records.iter().map(|r| (r.trace - 1.0).abs()).fold(0.0, f64::max),
    });
    write_json(&ctx.dir.join("report.json"), &report)?;

    let run = json!({
        "model": model,
        "variant": KernelVariant::from(args.variant),
        "hamiltonian": Hamiltonian::from(args.hamiltonian),
        "grid": { "n": args.n, "length": args.length },
        "initial_state": { "sigma": args.sigma, "x0": args.x0, "p0": args.p0 },
        "propagation": opts,
    });
    ctx.write_manifest("master", run, &["energy.csv", "report.json"])
}

fn cmd_rates(ctx: &Context, args: &RatesArgs, out: &mut impl Write) -> Result<()> {
    let params = match args.preset {
        Some(p) => {
            let mut file = ctx.params_file.clone();
            file.preset = Some(p);
            file.gamma_cm3_per_s = None;
            file.resolve()?
        }
        None => ctx.params,
    };
    let body = match (args.n_particles, args.density) {
        (Some(n), _) => MacroBody::from_count(&params, args.radius, n)?,
        (None, Some(d)) => MacroBody::from_density(&params, args.radius, d)?,
        (None, None) => MacroBody::reference(&params, args.radius)?,
    };
    let report = rate_ratio(&body)?;
    let lambda_half = sharp_scanning_lambda(&body, body.radius)?;
    let lambda_sat = sharp_scanning_lambda(&body, 2.0 * body.radius)?;

    writeln!(out, "{:<28}{:>14}", "quantity", "value")?;
    let rows = [
        ("radius [m]", body.radius),
        ("N", body.n_particles),
        ("lambda [1/s]", body.lambda),
        ("k", body.k),
        ("Gamma [1/s]", report.gamma),
        ("chi [1/s]", report.chi),
        ("Gamma/chi", report.ratio),
        ("1e4 N^2 (R/r_C)^2", report.asymptotic_ratio),
        ("Lambda(d=R) [1/s]", lambda_half),
        ("Lambda(d>=2R) [1/s]", lambda_sat),
    ];
    for (name, v) in rows {
        writeln!(out, "{name:<28}{v:>14.4e}")?;
    }

    let result = json!({
        "params": params,
        "report": report,
        "sharp_scanning": { "d_equals_R": lambda_half, "saturated": lambda_sat },
    });
    write_json(&ctx.dir.join("rates.json"), &result)?;
    let run = json!({
        "preset": args.preset.map(Preset::name),
        "radius": args.radius,
        "n_particles": args.n_particles,
        "density": args.density,
    });
    ctx.write_manifest("rates", run, &["rates.json"])
}

fn cmd_kernel_dump(ctx: &Context, args: &KernelArgs) -> Result<()> {
    let model = SimModel::dimensionless(args.k);
    let grid = Grid::new(args.n, args.length, model.hbar)?;
    let kernel = KernelL::build_variant(&model, &grid, args.variant.into())?;
    let mut w = ctx.file("kernel.csv")?;
    writeln!(w, "Q,P,L,L_adjoint,a,b")?;
    for (qi, &q) in grid.p().iter().enumerate() {
        for (pi, &p) in grid.p().iter().enumerate() {
            let (a, b) = hermitian_split(&model, q, p);
            writeln!(
                w,
                "{q:.10e},{p:.10e},{:.15e},{:.15e},{a:.15e},{b:.15e}",
                kernel.value(qi, pi),
                adjoint_kernel_value(&model, q, p)
            )?;
        }
    }
    w.flush()?;
    let run = json!({
        "model": model,
        "variant": kernel.variant(),
        "grid": { "n": args.n, "length": args.length },
    });
    ctx.write_manifest("kernel-dump", run, &["kernel.csv"])
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "domain",
        Error::GridMismatch { .. } => "grid_mismatch",
        Error::Integration { .. } => "integration",
        Error::Trajectory { .. } => "trajectory",
        Error::Positivity { .. } => "positivity",
        Error::FitQuality(_) => "fit_quality",
        Error::Config(_) => "config",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    }
}

fn execute(cli: &Cli, argv: &[String], out: &mut impl Write) -> Result<()> {
    let base = match &cli.config {
        Some(p) => ParamsFile::load(p)?,
        None => ParamsFile::default(),
    };
    let params_file = apply_overrides(&base, &cli.overrides)?;
    let params = params_file.resolve()?;
    let sub = match &cli.command {
        Command::Simulate(_) => "simulate",
        Command::Ensemble(_) => "ensemble",
        Command::Master(_) => "master",
        Command::Rates(_) => "rates",
        Command::KernelDump(_) => "kernel-dump",
    };
    let dir = cli.out.join(sub);
    std::fs::create_dir_all(&dir)?;
    let ctx = Context { argv, seed: cli.seed, params_file, params, dir };

    if let Command::Rates(a) = &cli.command {
        return cmd_rates(&ctx, a, out);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Simulate(a) => cmd_simulate(&ctx, a),
        Command::Ensemble(a) => cmd_ensemble(&ctx, a),
        Command::Master(a) => cmd_master(&ctx, a),
        Command::KernelDump(a) => cmd_kernel_dump(&ctx, a),
        Command::Rates(_) => unreachable!("handled above"),
    })
}

/// Runs the tool on `argv` (including the program name). Errors go to `err`
/// as a single JSON object; the return value is the process exit status.
pub fn run(argv: &[String], out: &mut impl Write, err: &mut impl Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let msg = json!({ "error": { "kind": "usage", "message": e.to_string().trim() } });
            let _ = writeln!(err, "{msg}");
            return 2;
        }
    };
    match execute(&cli, argv, out) {
        Ok(()) => 0,
        Err(e) => {
            let msg = json!({ "error": { "kind": error_kind(&e), "message": e.to_string() } });
            let _ = writeln!(err, "{msg}");
            1
        }
    }
}
