use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fibrescan::changepoint::ThetaGrid;
use fibrescan::config::PipelineConfig;
use fibrescan::field::GridSpec;
use fibrescan::pipeline::{self, CriticalValueTable};
use fibrescan::report::{emit_report, Format};
use fibrescan::{io, Error, Result};

/// Directional anomaly detection in 3D fibre systems.
#[derive(Parser, Debug)]
#[command(name = "fibrescan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Configuration file (dotted key = value).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value = "text", value_parser = ["json", "text"])]
    format: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an RSA fibre system.
    Simulate,
    /// Local directions, folded fields and window attributes.
    Fields {
        /// Directory holding fibres.csv (defaults to --out).
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Change-point test suite on saved fields.
    Test {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// (Spatial) SAEM clustering of saved window attributes.
    Cluster {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// All stages in order.
    Pipeline,
    /// Critical values for lists of m and σ².
    Calibrate {
        #[arg(long, value_delimiter = ',', default_values_t = [80, 80, 80])]
        dims: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [2, 7, 10])]
        m: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 4.0, 8.0])]
        sigma2: Vec<f64>,
        /// Box lattice offset and step Δ₀ = Δ₁.
        #[arg(long, default_value_t = 8)]
        step: usize,
        /// Minimum box extent L_M in cells.
        #[arg(long, default_value_t = 33)]
        min_extent: usize,
        #[arg(long, default_value_t = 0.05)]
        gamma0: f64,
        #[arg(long, default_value_t = 0.5)]
        gamma1: f64,
        /// Tail-bound constant M₀ (default σ).
        #[arg(long)]
        m0: Option<f64>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
}

enum Outcome {
    Clear,
    Anomaly,
}

fn load_config(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(p) => PipelineConfig::parse(&fs::read_to_string(p)?)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &PipelineConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn render_table(t: &CriticalValueTable) -> String {
    let mut ms: Vec<usize> = t.rows.iter().map(|r| r.m).collect();
    ms.sort_unstable();
    ms.dedup();
    let mut s = format!(
        "|Theta0| = {}, alpha = {}\n{:>8}",
        t.theta_count, t.alpha, "sigma2"
    );
    for m in &ms {
        s += &format!(" {:>10}", format!("m={m}"));
    }
    s.push('\n');
    let mut sig: Vec<f64> = Vec::new();
    for r in &t.rows {
        if !sig.contains(&r.sigma2) {
            sig.push(r.sigma2);
        }
    }
    for v in sig {
        s += &format!("{v:>8}");
        for m in &ms {
            let y = t
                .rows
                .iter()
                .find(|r| r.m == *m && r.sigma2 == v)
                .map(|r| r.y_alpha);
            s += &format!(" {:>10.4}", y.unwrap_or(f64::NAN));
        }
        s.push('\n');
    }
    s
}

fn input_dir(input: &Option<PathBuf>, cfg: &PipelineConfig) -> PathBuf {
    input.clone().unwrap_or_else(|| out_dir(cfg))
}

fn run(cli: &Cli, format: Format) -> Result<Outcome> {
    if let Command::Calibrate {
        dims,
        m,
        sigma2,
        step,
        min_extent,
        gamma0,
        gamma1,
        m0,
        alpha,
    } = &cli.command
    {
        let dims: [usize; 3] = dims
            .as_slice()
            .try_into()
            .map_err(|_| Error::invalid("--dims needs three values"))?;
        let theta = ThetaGrid {
            offset: *step,
            step: *step,
            min_extent: *min_extent,
            gamma0: *gamma0,
            gamma1: *gamma1,
        };
        let table = pipeline::critical_value_table(dims, &theta, m, sigma2, *m0, *alpha)?;
        match format {
            Format::Json => print_json(&table)?,
            Format::Text => print!("{}", render_table(&table)),
        }
        return Ok(Outcome::Clear);
    }
    let cfg = load_config(&cli.common)?;
    let staged = |stage: &'static str, e: Error| match e {
        e @ Error::Stage { .. } => e,
        e => Error::Stage {
            stage,
            source: Box::new(e),
        },
    };
    match &cli.command {
        Command::Simulate => {
            let sim = cfg
                .simulation
                .as_ref()
                .ok_or_else(|| Error::invalid("simulate needs a simulation section"))?;
            let dir = out_dir(&cfg);
            let fibres = pipeline::simulate(sim, cfg.seed).map_err(|e| staged("simulate", e))?;
            io::save_fibres(&dir.join(pipeline::FIBRES_FILE), &fibres)?;
            if sim.voxelize {
                let v = fibrescan::sim::voxelize(&fibres, pipeline::volume_dims(sim));
                io::save_volume(&dir.join(pipeline::VOLUME_FILE), &v, 1.0)?;
            }
            match format {
                Format::Json => print_json(&serde_json::json!({ "fibres": fibres.len() }))?,
                Format::Text => println!("fibres {}", fibres.len()),
            }
        }
        Command::Fields { input } => {
            let dir = out_dir(&cfg);
            let fields = match (&cfg.simulation, &cfg.input) {
                (_, Some(inp)) => {
                    let cells = match inp.cells {
                        Some(c) => c,
                        None => io::load_direction_field(&inp.directions, None)?.dims(),
                    };
                    let grid = GridSpec::new(cfg.grid.cell_edge, cells, cfg.grid.window)?;
                    let d = io::load_direction_field(&inp.directions, Some(grid))?;
                    pipeline::compute_fields(d, &cfg.entropy)
                }
                (Some(sim), None) => {
                    let fibres =
                        io::load_fibres(&input_dir(input, &cfg).join(pipeline::FIBRES_FILE))?;
                    let grid = GridSpec::for_domain(sim.dims, cfg.grid.cell_edge, cfg.grid.window)?;
                    pipeline::fields_from_fibres(&fibres, &grid, &cfg.entropy)
                }
                (None, None) => unreachable!("validated config"),
            }
            .map_err(|e| staged("fields", e))?;
            pipeline::save_fields(&dir, &fields)?;
            match format {
                Format::Json => print_json(&serde_json::json!({
                    "grid": fields.grid(),
                    "occupied_cells": fields.directions.occupied(),
                    "windows": fields.windows.len(),
                }))?,
                Format::Text => println!(
                    "{} occupied cells, {} windows",
                    fields.directions.occupied(),
                    fields.windows.len()
                ),
            }
        }
        Command::Test { input } => {
            let fields = pipeline::load_fields(&input_dir(input, &cfg), &cfg.entropy)?;
            let suite = pipeline::run_tests(&fields, &cfg.test).map_err(|e| staged("test", e))?;
            io::save_json(&out_dir(&cfg).join(pipeline::TEST_FILE), &suite)?;
            match format {
                Format::Json => print_json(&suite)?,
                Format::Text => {
                    for r in &suite.results {
                        println!(
                            "{:<8} statistic {:.4e} critical {:.4e} p-bound {:.3e} {}",
                            r.attribute,
                            r.statistic,
                            r.y_alpha,
                            r.p_bound,
                            if r.reject { "reject" } else { "accept" }
                        );
                    }
                }
            }
            if suite.reject {
                return Ok(Outcome::Anomaly);
            }
        }
        Command::Cluster { input } => {
            let fields = pipeline::load_fields(&input_dir(input, &cfg), &cfg.entropy)?;
            let outcome = pipeline::cluster(&fields, &cfg.cluster, cfg.seed)
                .map_err(|e| staged("cluster", e))?;
            pipeline::save_cluster(&out_dir(&cfg), &outcome)?;
            let summary = outcome.summary();
            match format {
                Format::Json => print_json(&summary)?,
                Format::Text => println!(
                    "{} of {} windows anomalous, beta_hat {:.4}",
                    summary.anomaly_windows, summary.windows, summary.beta_hat
                ),
            }
        }
        Command::Pipeline => {
            let report = pipeline::run_pipeline(&cfg)?;
            print!("{}", emit_report(&report, format)?);
            if report.anomaly_detected {
                return Ok(Outcome::Anomaly);
            }
        }
        Command::Calibrate { .. } => unreachable!(),
    }
    Ok(Outcome::Clear)
}

fn is_config_error(e: &Error) -> bool {
    matches!(e, Error::Config(_) | Error::InvalidArgument(_))
}

fn report_error(e: &Error, config: Option<&Path>) {
    eprintln!("error: {e}");
    if let (true, Some(p)) = (is_config_error(e), config) {
        eprintln!("config: {}", p.display());
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let format: Format = cli.common.format.parse().expect("clap restricts --format");
    match run(&cli, format) {
        Ok(Outcome::Clear) => ExitCode::SUCCESS,
        Ok(Outcome::Anomaly) => ExitCode::from(10),
        Err(e) => {
            report_error(&e, cli.common.config.as_deref());
            log::debug!("{e:?}");
            if is_config_error(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
