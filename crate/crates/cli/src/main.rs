//! `anisogreen`: build coefficient tables, evaluate kernels, and run the
//! convergence, timing and plotting sweeps.
//!
//! Exit codes: 0 success, 1 other failure (including usage errors),
//! 2 material validation, 3 singular symbol, 4 table/material hash mismatch,
//! 5 evaluation point at the source.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use anisogreen::expansion::MultiIndex;
use clap::{Args, Parser, Subcommand};

pub const TABLES_ENV: &str = "ANISOGREEN_TABLES_DIR";

#[derive(Parser, Debug)]
#[command(name = "anisogreen", version, about = "Spherical-harmonic fundamental solutions for anisotropic multi-field materials")]
pub struct Cli {
    /// Directory holding coefficient tables.
    #[arg(long, global = true, env = TABLES_ENV, default_value = "tables")]
    pub tables_dir: PathBuf,

    /// Permit multi-indices of total order above 4.
    #[arg(long, global = true)]
    pub allow_high_order: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the base table and every derivative table up to --order.
    Build(BuildArgs),
    /// Evaluate one kernel table at a list of points.
    Eval(EvalArgs),
    /// Per-component e_S1 against the contour oracle as L (or the Zener ratio) varies.
    Sweep(SweepArgs),
    /// Per-point cost of series and contour evaluation against achieved error.
    Bench(BenchArgs),
    /// Spherical plot data of one kernel component.
    Plot(PlotArgs),
    /// List or describe the built-in materials.
    Materials {
        #[command(subcommand)]
        action: MaterialsAction,
    },
}

#[derive(Args, Debug, Clone)]
pub struct MaterialArg {
    /// Built-in name (Cu, PZT-4, IsoElastic(mu,nu), ...) or path to a material JSON file.
    #[arg(long)]
    pub material: String,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    #[command(flatten)]
    pub material: MaterialArg,
    /// Series truncation.
    #[arg(long = "L", default_value_t = 40)]
    pub l: usize,
    /// Highest total derivative order.
    #[arg(long, default_value_t = 0)]
    pub order: u32,
    /// Quadrature exactness degree; default 2(L + order) + 32.
    #[arg(long)]
    pub quad_degree: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub material: MaterialArg,
    #[arg(long, default_value = "0,0,0")]
    pub multi_index: MultiIndex,
    /// CSV of `x,y,z` rows in metres (an optional header row is skipped).
    #[arg(long, conflicts_with = "random")]
    pub points: Option<PathBuf>,
    /// Evaluate at this many seeded random points with radii in [0.5, 2].
    #[arg(long)]
    pub random: Option<usize>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Truncate the stored table further.
    #[arg(long = "L")]
    pub l: Option<usize>,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Required unless --zener is given.
    #[arg(long)]
    pub material: Option<String>,
    /// Ascending truncations.
    #[arg(long = "L-list", value_delimiter = ',', default_value = "8,16,24,32,40")]
    pub l_list: Vec<usize>,
    /// Zener anisotropy ratios; sweeps the cubic family at --L instead of a material.
    #[arg(long, value_delimiter = ',')]
    pub zener: Option<Vec<f64>>,
    /// Truncation used with --zener.
    #[arg(long = "L", default_value_t = 40)]
    pub l: usize,
    #[arg(long, default_value = "0,0,0")]
    pub multi_index: MultiIndex,
    /// Contour nodes of the reference.
    #[arg(long, default_value_t = 512)]
    pub nodes: usize,
    /// Sphere grid as `n_theta x n_phi`.
    #[arg(long, default_value = "24x48")]
    pub grid: String,
    #[arg(long)]
    pub quad_degree: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub material: MaterialArg,
    #[arg(long = "L-list", value_delimiter = ',', default_value = "10,20,40")]
    pub l_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128")]
    pub nodes: Vec<usize>,
    /// Number of random evaluation points.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub warmup: usize,
    /// Minimum timed wall clock per configuration, milliseconds.
    #[arg(long, default_value_t = 50)]
    pub min_time_ms: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    #[command(flatten)]
    pub material: MaterialArg,
    #[arg(long, default_value = "0,0,0")]
    pub multi_index: MultiIndex,
    #[arg(long = "L", default_value_t = 40)]
    pub l: usize,
    #[arg(long, default_value = "64x128")]
    pub grid: String,
    /// 1-based component `i,j`.
    #[arg(long, default_value = "1,1")]
    pub component: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a Wavefront OBJ mesh.
    #[arg(long)]
    pub obj: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum MaterialsAction {
    List,
    Show {
        name: String,
        /// Print the JSON material file instead of the property table.
        #[arg(long)]
        json: bool,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    err.chain()
        .find_map(|e| e.downcast_ref::<anisogreen::Error>())
        .map(|e| e.exit_code() as u8)
        .unwrap_or(1)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
