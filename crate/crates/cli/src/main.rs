mod config;
mod density;
mod output;
mod table;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use winding_core::mc::simulate_paths;
use winding_core::mc::RadialBin;

use config::{Axis, CheckKind, ExperimentConfig, Format, Law};
use output::{read_samples, sidecar_path, write_report, Artifact, SAMPLE_COLUMNS};

/// Winding-angle laws of planar and conical Brownian motion: densities,
/// path simulation and statistical verification.
#[derive(Parser)]
#[command(name = "winding", version)]
struct Cli {
    /// TOML or JSON config; a JSON or CSV artifact re-runs its embedded config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; standard output when absent (required by simulate).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true, env = "WINDING_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate a winding density on a grid.
    Density(DensityArgs),
    /// Simulate paths and write one row per path.
    Simulate(SimulateArgs),
    /// Run a statistical check on sample artifacts and write a JSON report.
    Verify(VerifyArgs),
    /// Closed form against contour quadrature over a (beta, delta, t, dtheta) grid.
    Table(TableArgs),
}

#[derive(Args)]
struct DensityArgs {
    #[arg(long, value_enum)]
    law: Option<Law>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    z: Option<f64>,
    #[arg(long, value_enum)]
    axis: Option<Axis>,
    #[arg(long, allow_hyphen_values = true)]
    lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    hi: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    r_start: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    n_paths: Option<usize>,
    #[arg(long)]
    dt_max: Option<f64>,
    #[arg(long)]
    dt_radius_factor: Option<f64>,
    #[arg(long)]
    r_floor: Option<f64>,
    /// Halve the step parameters.
    #[arg(long)]
    refined: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    check: Option<CheckKind>,
    /// Sample artifact from simulate; repeat to compare several horizons.
    #[arg(long = "samples")]
    samples: Vec<PathBuf>,
    /// Characteristic-function argument; repeatable.
    #[arg(long = "alpha", allow_hyphen_values = true)]
    alphas: Vec<f64>,
    #[arg(long)]
    ks_max: Option<f64>,
    #[arg(long)]
    sigmas: Option<f64>,
    /// Radial conditioning bin as lo,hi.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    r_bin: Option<Vec<f64>>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
}

#[derive(Args)]
struct TableArgs {
    #[arg(long)]
    max_rel: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Ok(pass) when the invocation completed.
fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_path = Some(o.clone());
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    match cli.command {
        Command::Density(a) => cmd_density(cfg, a),
        Command::Simulate(a) => cmd_simulate(cfg, a),
        Command::Verify(a) => cmd_verify(cfg, a, cli.format),
        Command::Table(a) => cmd_table(cfg, a),
    }
}

fn cmd_density(mut cfg: ExperimentConfig, a: DensityArgs) -> Result<bool> {
    cfg.claim("density")?;
    let mut d = cfg.density.take().unwrap_or_default();
    d.law = a.law.or(d.law);
    d.beta = a.beta.unwrap_or(d.beta);
    d.delta = a.delta.unwrap_or(d.delta);
    d.t = a.t.unwrap_or(d.t);
    d.z = a.z.unwrap_or(d.z);
    d.axis = a.axis.or(d.axis);
    d.grid.lo = a.lo.unwrap_or(d.grid.lo);
    d.grid.hi = a.hi.unwrap_or(d.grid.hi);
    d.grid.step = a.step.unwrap_or(d.grid.step);
    if let Some(law) = d.law {
        d.axis = Some(d.axis.unwrap_or(law.native_axis()));
    }
    let table = density::run(&d)?;
    cfg.density = Some(d);
    Artifact {
        title: "density",
        config: &cfg,
        diagnostics: table.diagnostics,
        columns: table.columns,
        rows: table.rows,
    }
    .write(cfg.format, cfg.output_path.as_deref())?;
    Ok(true)
}

fn cmd_simulate(mut cfg: ExperimentConfig, a: SimulateArgs) -> Result<bool> {
    cfg.claim("simulate")?;
    let Some(out) = cfg.output_path.clone() else {
        bail!("simulate needs --out (a sidecar <out>.meta.json is written next to it)");
    };
    let mut s = cfg.simulate.take().unwrap_or_default();
    s.r_start = a.r_start.unwrap_or(s.r_start);
    s.t_total = a.t.unwrap_or(s.t_total);
    s.n_paths = a.n_paths.unwrap_or(s.n_paths);
    s.dt_max = a.dt_max.or(s.dt_max);
    s.dt_radius_factor = a.dt_radius_factor.or(s.dt_radius_factor);
    s.r_floor = a.r_floor.or(s.r_floor);
    s.refined |= a.refined;
    let walk = s.walk(cfg.seed)?;
    cfg.simulate = Some(s.resolved(&walk));
    let set = simulate_paths(&walk)?;
    let rows = set
        .samples()
        .iter()
        .map(|x| vec![x.dtheta_final, x.r_final, x.clock])
        .collect();
    let diagnostics = serde_json::to_value(set.diagnostics())?;
    Artifact {
        title: "simulate",
        config: &cfg,
        diagnostics: diagnostics.clone(),
        columns: SAMPLE_COLUMNS.to_vec(),
        rows,
    }
    .write(cfg.format, Some(&out))?;
    let sidecar = sidecar_path(&out);
    let mut text = serde_json::to_string_pretty(&json!({
        "config": cfg,
        "walk": walk,
        "diagnostics": diagnostics,
    }))?;
    text.push('\n');
    std::fs::write(&sidecar, text).with_context(|| format!("writing {}", sidecar.display()))?;
    // Catch a write that would not read back.
    read_samples(&out).context("re-reading the written samples")?;
    Ok(true)
}

fn cmd_verify(mut cfg: ExperimentConfig, a: VerifyArgs, format: Option<Format>) -> Result<bool> {
    cfg.claim("verify")?;
    if format == Some(Format::Csv) {
        bail!("verify writes JSON reports only");
    }
    cfg.format = Format::Json;
    let mut v = cfg.verify.take().unwrap_or_default();
    v.check = a.check.or(v.check);
    if !a.samples.is_empty() {
        v.samples = a.samples;
    }
    if !a.alphas.is_empty() {
        v.alphas = a.alphas;
    }
    v.ks_max = a.ks_max.unwrap_or(v.ks_max);
    v.sigmas = a.sigmas.unwrap_or(v.sigmas);
    if let Some(b) = a.r_bin {
        v.r_bin = Some(RadialBin::new(b[0], b[1])?);
    }
    v.beta = a.beta.unwrap_or(v.beta);
    v.delta = a.delta.unwrap_or(v.delta);
    let (report, diagnostics) = verify::run(&v, cfg.seed)?;
    cfg.verify = Some(v);
    write_report(&cfg, &report, diagnostics, cfg.output_path.as_deref())?;
    Ok(report.pass)
}

fn cmd_table(mut cfg: ExperimentConfig, a: TableArgs) -> Result<bool> {
    cfg.claim("table")?;
    let mut t = cfg.table.take().unwrap_or_default();
    t.max_rel = a.max_rel.unwrap_or(t.max_rel);
    let rows = table::run(&t)?;
    let worst = rows.iter().map(|r| r[6]).fold(0.0, f64::max);
    let pass = rows.iter().all(|r| r[6] <= t.max_rel);
    let diagnostics = json!({
        "rows": rows.len(),
        "max_rel_error": worst,
        "threshold": t.max_rel,
        "pass": pass,
    });
    cfg.table = Some(t);
    Artifact {
        title: "table",
        config: &cfg,
        diagnostics,
        columns: table::COLUMNS.to_vec(),
        rows,
    }
    .write(cfg.format, cfg.output_path.as_deref())?;
    Ok(pass)
}
