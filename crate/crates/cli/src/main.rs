// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use lqcp_cli::commands::{
    run_calibrate, run_estimate, run_test, CalibrateArgs, EstimateArgs, Output, TestArgs,
};
use lqcp_cli::scenario::{parse_cov, WbsDesign};
use lqcp_cli::{
    load_adjacency_series, load_csv_matrix, rows_to_csv, run_scenario, CliError, Loaded,
    Overrides, RunReport, Seeds, Timing,
};

const EXIT_REJECT: u8 = 2;
const EXIT_ERROR: u8 = 3;
const EXIT_USAGE: u8 = 64;

/// Self-normalized L_q-norm change-point testing and estimation.
///
/// Exit status: 0 when the command ran, 2 when a test rejected, >2 on error.
/// Null tables are cached in the directory named by LQCP_CACHE_DIR.
#[derive(Debug, Parser)]
#[command(name = "lqcp", version)]
struct Cli {
    /// Print the result rows as CSV instead of the JSON report.
    #[arg(long, global = true)]
    csv: bool,
    /// Worker threads for Monte-Carlo work (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Test for one change point.
    Test(TestArgs),
    /// Estimate one or more change points.
    Estimate(EstimateArgs),
    /// Simulate null tables and write them to a directory.
    Calibrate(CalibrateArgs),
    /// Run a simulation scenario.
    Simulate(Box<SimulateArgs>),
    /// Test or estimate on a network series: one flattened m x m adjacency
    /// matrix per CSV row.
    Network {
        #[command(subcommand)]
        command: NetworkCommand,
    },
}

#[derive(Debug, Subcommand)]
enum NetworkCommand {
    Test(TestArgs),
    Estimate(EstimateArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// table1-size, table2-power, table3-rmse, table4-wbs, network-size,
    /// network-power or network-wbs.
    scenario: String,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    null_reps: Option<usize>,
    #[arg(long)]
    calib_reps: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<usize>>,
    #[arg(long)]
    alpha: Option<f64>,
    /// id, ar:RHO or cs:RHO.
    #[arg(long)]
    cov: Option<String>,
    #[arg(long)]
    delta: Option<f64>,
    /// Number of shifted coordinates.
    #[arg(long)]
    d: Option<usize>,
    /// sparse, dense or mixed (table4-wbs).
    #[arg(long)]
    design: Option<String>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    k_sparse: Option<f64>,
    #[arg(long)]
    intervals: Option<usize>,
    /// Number of network nodes.
    #[arg(long)]
    m: Option<usize>,
    /// Network sparsity: r = c m blocks.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    null_seed: Option<u64>,
    #[arg(long)]
    interval_seed: Option<u64>,
    #[arg(long)]
    calib_seed: Option<u64>,
}

impl SimulateArgs {
    fn overrides(&self) -> Result<Overrides, CliError> {
        Ok(Overrides {
            reps: self.reps,
            null_reps: self.null_reps,
            calib_reps: self.calib_reps,
            n: self.n,
            p: self.p,
            q: self.q.clone(),
            alpha: self.alpha,
            cov: self.cov.as_deref().map(parse_cov).transpose()?,
            delta: self.delta,
            d: self.d,
            design: self.design.as_deref().map(str::parse::<WbsDesign>).transpose()?,
            k: self.k,
            k_sparse: self.k_sparse,
            intervals: self.intervals,
            m: self.m,
            c: self.c,
            mu: self.mu,
            seed: self.seed,
            null_seed: self.null_seed,
            interval_seed: self.interval_seed,
            calib_seed: self.calib_seed,
        })
    }
}

fn load(path: &PathBuf, header: bool, network: bool) -> Result<Loaded, CliError> {
    if network {
        Ok(load_adjacency_series(path, header)?.0)
    } else {
        load_csv_matrix(path, header)
    }
}

fn dispatch(command: &Command, seeds: &mut Seeds) -> Result<Output, CliError> {
    match command {
        Command::Test(args) => {
            let data = load(&args.input, args.header, false)?;
            run_test(args, &data.matrix, data.names.as_deref(), seeds)
        }
        Command::Estimate(args) => {
            let data = load(&args.input, args.header, false)?;
            run_estimate(args, &data.matrix, data.names.as_deref(), seeds)
        }
        Command::Calibrate(args) => run_calibrate(args, seeds),
        Command::Simulate(args) => {
            let (config, rows) = run_scenario(&args.scenario, &args.overrides()?, seeds)?;
            Ok(Output {
                config,
                results: serde_json::json!({ "rows": rows }),
                rows,
                reject: false,
            })
        }
        Command::Network { command } => match command {
            NetworkCommand::Test(args) => {
                let data = load(&args.input, args.header, true)?;
                run_test(args, &data.matrix, data.names.as_deref(), seeds)
            }
            NetworkCommand::Estimate(args) => {
                let data = load(&args.input, args.header, true)?;
                run_estimate(args, &data.matrix, data.names.as_deref(), seeds)
            }
        },
    }
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::InvalidArgument(e.to_string()))?;
    }
    let start = Instant::now();
    let mut seeds = Seeds::default();
    let output = dispatch(&cli.command, &mut seeds)?;
    if cli.csv {
        print!("{}", rows_to_csv(&output.rows)?);
    } else {
        let report = RunReport {
            command: std::env::args().collect(),
            config: output.config,
            results: output.results,
            seeds: seeds.into_map(),
            timing: Timing {
                seconds: start.elapsed().as_secs_f64(),
            },
        };
        println!("{}", report.to_json()?);
    }
    Ok(output.reject)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::from(EXIT_REJECT),
        Ok(false) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
