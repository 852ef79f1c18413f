use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use gffperc::io::{OutputFormat, RunConfig};
use gffperc::Error;
use serde::de::DeserializeOwned;

mod commands;

#[derive(Parser, Debug)]
#[command(
    name = "gffperc",
    version,
    about = "Level-set percolation of the lattice Gaussian free field"
)]
struct Cli {
    /// TOML run configuration; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Repeat for more log output on stderr.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

fn kebab<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

/// Flags mirroring the keys of the run configuration.
#[derive(Args, Debug, Default)]
struct Overrides {
    #[arg(long, global = true)]
    d: Option<usize>,
    /// Window half-width; a comma-separated list for sweeps.
    #[arg(long = "N", global = true, value_delimiter = ',')]
    sizes: Option<Vec<i64>>,
    #[arg(long, global = true)]
    kappa: Option<i64>,
    #[arg(long = "L", global = true)]
    scale: Option<i64>,
    #[arg(long = "K", global = true)]
    separation: Option<i64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    h: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    h1: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    h2: Option<f64>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long = "h-star", global = true, allow_hyphen_values = true)]
    h_star: Option<f64>,
    #[arg(long, global = true)]
    alpha: Option<i64>,
    #[arg(long = "C", global = true)]
    c: Option<f64>,
    #[arg(long, global = true)]
    c1: Option<f64>,
    #[arg(long = "calibrate-c1", global = true)]
    calibrate_c1: bool,
    #[arg(long = "M", global = true)]
    m_const: Option<f64>,
    /// Number of samples.
    #[arg(long = "n", global = true)]
    n_samples: Option<u64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `outer-boundary` or `literal`.
    #[arg(long = "f-mode", global = true, value_parser = kebab::<gffperc::experiments::FMode>)]
    f_mode: Option<gffperc::experiments::FMode>,
    /// `extremal` or `all`.
    #[arg(long = "pair-mode", global = true, value_parser = kebab::<gffperc::topology::PairMode>)]
    pair_mode: Option<gffperc::topology::PairMode>,
    /// Output file; `.json` selects JSON, anything else CSV. Stdout if absent.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    /// Format used for stdout.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) {
        macro_rules! set {
            ($src:ident => $dst:ident) => {
                if let Some(v) = self.$src.clone() {
                    cfg.$dst = v;
                }
            };
            ($src:ident => some $dst:ident) => {
                if let Some(v) = self.$src {
                    cfg.$dst = Some(v);
                }
            };
        }
        set!(d => d);
        if let Some(ns) = &self.sizes {
            if let Some(&first) = ns.first() {
                cfg.n = first;
            }
            cfg.ns = ns.clone();
        }
        set!(kappa => kappa);
        set!(scale => some l);
        set!(separation => k);
        set!(h => h);
        set!(h1 => some h1);
        set!(h2 => some h2);
        set!(epsilon => epsilon);
        set!(delta => some delta);
        set!(h_star => some h_star);
        set!(alpha => alpha);
        set!(c => some c);
        set!(c1 => c1);
        set!(m_const => m_const);
        set!(n_samples => n_samples);
        set!(seed => seed);
        set!(f_mode => f_mode);
        set!(pair_mode => pair_mode);
        if self.calibrate_c1 {
            cfg.calibrate_c1 = true;
        }
        if self.out.is_some() {
            cfg.output = self.out.clone();
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Free Green's function with its convergence trace.
    Green {
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Displacement `y`, comma-separated; the origin by default.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y: Option<Vec<i64>>,
    },
    /// Capacity growth of boxes or thin tubes.
    Capacity {
        #[arg(long, value_enum, default_value = "box")]
        shape: ShapeArg,
        /// Tube axis (0-based).
        #[arg(long, default_value_t = 0)]
        axis: usize,
        #[arg(long = "site-cap", default_value_t = gffperc::experiments::capacity::DEFAULT_SITE_CAP)]
        site_cap: usize,
        /// Allowed max/min ratio.
        #[arg(long, default_value_t = 3.0)]
        band: f64,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Writes one field sample in the GFF1 format.
    Sample {
        /// Half-width of the sampled box.
        #[arg(long = "box")]
        half_width: i64,
        #[arg(long, default_value_t = 0)]
        index: u64,
    },
    /// Good/bad classification of the coarse sites covering `B_N`.
    Classify {
        /// Read the field from a GFF1 file instead of sampling.
        #[arg(long)]
        field: Option<PathBuf>,
        /// Sample index when sampling.
        #[arg(long, default_value_t = 0)]
        index: u64,
    },
    /// Monte Carlo estimate of an event probability.
    Estimate {
        #[arg(long, value_enum)]
        event: EventArg,
        /// Arm radius; `N - 1` by default.
        #[arg(long)]
        r: Option<i64>,
        /// Level grid for the crossing bracket.
        #[arg(long = "h-grid", value_delimiter = ',', allow_hyphen_values = true)]
        h_grid: Option<Vec<f64>>,
    },
    /// Tube events and their deterministic implications.
    Tube {
        /// Plant an insulated open path on every sample.
        #[arg(long)]
        planted: bool,
        #[arg(long, default_value_t = 2)]
        margin: i64,
        #[arg(long, default_value_t = 4)]
        pad: i64,
    },
    /// Decay-model fits of a stretch table.
    Fit {
        /// CSV with `N`, `p_hat` and optionally `censored` columns.
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ShapeArg {
    Box,
    Tube,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
enum EventArg {
    Stretch,
    Field,
    Arm,
    Crossing,
    LocUniq,
    Bad,
}

fn error_record(e: &Error) -> serde_json::Value {
    let (kind, key) = match e {
        Error::Config { key, .. } => ("config", Some(key.clone())),
        Error::InvalidParameter { name, .. } => ("invalid-parameter", Some(name.clone())),
        Error::CapacityExceeded { .. } => ("capacity-exceeded", None),
        Error::NonConvergence { .. } => ("non-convergence", None),
        Error::SolverStalled { .. } => ("solver-stalled", None),
        Error::DomainTooSmall { .. } | Error::SiteOutsideDomain(_) => ("domain", None),
        Error::GeometryCollision(_) => ("geometry-collision", None),
        Error::Format(_) => ("format", None),
        Error::NotANumber(field) => ("nan", Some(field.clone())),
        Error::Io(_) => ("io", None),
        _ => ("error", None),
    };
    serde_json::json!({ "error": { "kind": kind, "key": key, "message": e.to_string() } })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_record(&e));
            match e {
                Error::Config { .. } | Error::InvalidParameter { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(cli: Cli) -> gffperc::Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cli.overrides.apply(&mut cfg);
    cfg.validate()?;
    log::info!("configuration: {}", serde_json::to_string(&cfg)?);
    let stdout_format = match cli.overrides.format {
        Some(Format::Json) => OutputFormat::Json,
        _ => OutputFormat::Csv,
    };
    let ctx = commands::Context {
        cfg,
        stdout_format,
        kappa_flag: cli.overrides.kappa,
    };
    match cli.command {
        Command::Green { tol, y } => commands::green(&ctx, tol, y),
        Command::Capacity {
            shape,
            axis,
            site_cap,
            band,
            tol,
        } => {
            let shape = match shape {
                ShapeArg::Box => gffperc::experiments::GrowthShape::Box,
                ShapeArg::Tube => gffperc::experiments::GrowthShape::Tube {
                    axis,
                    epsilon: ctx.cfg.epsilon,
                },
            };
            commands::capacity(&ctx, shape, site_cap, band, tol)
        }
        Command::Sample { half_width, index } => commands::sample(&ctx, half_width, index),
        Command::Classify { field, index } => commands::classify(&ctx, field, index),
        Command::Estimate { event, r, h_grid } => match event {
            EventArg::Stretch => commands::estimate_stretch(&ctx),
            EventArg::Crossing if h_grid.is_some() => commands::estimate_bracket(&ctx, &h_grid.unwrap()),
            other => commands::estimate_event(&ctx, other, r),
        },
        Command::Tube { planted, margin, pad } => commands::tube(&ctx, planted, margin, pad),
        Command::Fit { input } => commands::fit(&ctx, &input),
    }
}
