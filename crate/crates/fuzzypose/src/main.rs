//! Command-line front end: offline tuning, episode simulation, and the
//! optimizer benchmark harness.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fuzzypose::config::{
    load_params, load_scenario, save_params, trace_to_csv, write_series_csv, write_trace_csv,
    ParamsMeta,
};
use fuzzypose::filter::{ErrorMode, GainMode};
use fuzzypose::fuzzy::build_model;
use fuzzypose::gsa::{benchmarks, run_gsa, GsaConfig, SearchSpace};
use fuzzypose::se3::Pose;
use fuzzypose::tuning::{run_episode, tune_flc, EpisodeOptions, TuneOptions};
use fuzzypose::{Error, Result};

#[derive(Parser)]
#[command(
    name = "fuzzypose",
    version,
    about = "SE(3) pose filter with a fuzzy-tuned gain",
    after_help = "Exit codes: 0 success, 2 config/validation error, 3 runtime numerical failure."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tune the controller's membership parameters against a scenario.
    ///
    /// Writes the tuned params file to --out and the search trace to
    /// `trace.csv` next to it.
    Tune {
        /// Scenario config file.
        #[arg(long)]
        config: PathBuf,
        /// Output params file.
        #[arg(long)]
        out: PathBuf,
        /// Search population size.
        #[arg(long, default_value_t = 100)]
        nodes: usize,
        /// Search iterations.
        #[arg(long, default_value_t = 250)]
        iters: usize,
        /// Search seed (the measurement-noise seed comes from the config).
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run one episode and export the series CSV.
    Simulate {
        /// Params file (k1..k22 plus gamma/s_delta).
        #[arg(long)]
        params: PathBuf,
        /// Scenario config file.
        #[arg(long)]
        config: PathBuf,
        /// Output series CSV.
        #[arg(long)]
        out: PathBuf,
        /// Override the scenario's measurement-noise seed.
        #[arg(long)]
        seed: Option<u64>,
        /// `fuzzy` or `constant:<k_op>`.
        #[arg(long, default_value = "fuzzy")]
        gain_mode: String,
        /// `measurable` or `oracle`.
        #[arg(long, default_value = "measurable")]
        error_mode: String,
    },
    /// Run the optimizer on a benchmark function and print the trace CSV.
    GsaBench {
        /// `sphere`, `rosenbrock`, or `rastrigin`.
        #[arg(long)]
        function: String,
        /// Problem dimension.
        #[arg(long)]
        dim: usize,
        /// Search iterations.
        #[arg(long)]
        iters: usize,
        /// Search seed.
        #[arg(long)]
        seed: u64,
        /// Search population size.
        #[arg(long, default_value_t = 30)]
        nodes: usize,
        /// Write the trace here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_gain_mode(raw: &str, params_path: &Path) -> Result<GainMode> {
    if raw == "fuzzy" {
        let (params, _) = load_params(params_path)?;
        return Ok(GainMode::Fuzzy(build_model(&params)?));
    }
    if let Some(value) = raw.strip_prefix("constant:") {
        let k_op: f64 = value.parse().map_err(|_| {
            Error::Validation(format!("`{value}` is not a number in --gain-mode"))
        })?;
        if !(k_op >= 0.0) {
            return Err(Error::Validation(format!(
                "constant k_op must be nonnegative, got {k_op}"
            )));
        }
        return Ok(GainMode::Constant(k_op));
    }
    Err(Error::Validation(format!(
        "--gain-mode must be `fuzzy` or `constant:<k>`, got `{raw}`"
    )))
}

fn parse_error_mode(raw: &str) -> Result<ErrorMode> {
    match raw {
        "measurable" => Ok(ErrorMode::Measurable),
        "oracle" => Ok(ErrorMode::Oracle),
        _ => Err(Error::Validation(format!(
            "--error-mode must be `measurable` or `oracle`, got `{raw}`"
        ))),
    }
}

fn cmd_tune(config: &Path, out: &Path, nodes: usize, iters: usize, seed: u64) -> Result<()> {
    let file = load_scenario(config)?;
    let mut opts = TuneOptions::new(GsaConfig::new(nodes, iters, seed));
    if let Some(gamma) = file.gamma {
        opts.gamma = gamma;
    }
    if let Some(s_delta) = file.s_delta {
        opts.s_delta = s_delta;
    }
    if let Some(init) = file.initial_estimate {
        opts.initial_estimate = init;
    }
    let (params, result) = tune_flc(&file.scenario, &opts)?;
    let meta = ParamsMeta {
        gamma: opts.gamma,
        s_delta: opts.s_delta,
        seed: file.scenario.seed,
    };
    save_params(&params, &meta, out)?;
    let trace_path = out.parent().unwrap_or(Path::new(".")).join("trace.csv");
    write_trace_csv(&result, &trace_path)?;
    eprintln!(
        "tuned {} nodes x {} iterations: best cost {} -> {} and {}",
        nodes,
        iters,
        result.best_cost,
        out.display(),
        trace_path.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    params_path: &Path,
    config: &Path,
    out: &Path,
    seed: Option<u64>,
    gain_mode: &str,
    error_mode: &str,
) -> Result<()> {
    let file = load_scenario(config)?;
    let (_, meta) = load_params(params_path)?;
    let mut opts = EpisodeOptions::new(parse_gain_mode(gain_mode, params_path)?);
    opts.error_mode = parse_error_mode(error_mode)?;
    opts.gamma = file.gamma.unwrap_or(meta.gamma);
    opts.s_delta = file.s_delta.unwrap_or(meta.s_delta);
    opts.initial_estimate = file.initial_estimate.unwrap_or_else(Pose::identity);
    opts.seed = seed;
    let series = run_episode(&file.scenario, &opts)?;
    write_series_csv(&series, out)?;
    let last = series.records.last().expect("episodes are never empty");
    eprintln!(
        "simulated {} steps: final attitude error {}, position error {} -> {}",
        series.len() - 1,
        last.attitude_error,
        last.position_error,
        out.display()
    );
    Ok(())
}

fn cmd_gsa_bench(
    function: &str,
    dim: usize,
    iters: usize,
    seed: u64,
    nodes: usize,
    out: Option<&Path>,
) -> Result<()> {
    let cost: fn(&[f64]) -> f64 = match function {
        "sphere" => benchmarks::sphere,
        "rosenbrock" => benchmarks::rosenbrock,
        "rastrigin" => benchmarks::rastrigin,
        _ => {
            return Err(Error::Validation(format!(
                "--function must be sphere, rosenbrock, or rastrigin, got `{function}`"
            )))
        }
    };
    let (lo, hi) = benchmarks::default_range(function).expect("covered by the match above");
    let space = SearchSpace::uniform(lo, hi, dim)?;
    let config = GsaConfig::new(nodes, iters, seed);
    let result = run_gsa(&space, |x| Some(cost(x)), &config)?;
    match out {
        Some(path) => write_trace_csv(&result, path)?,
        None => print!("{}", trace_to_csv(&result)),
    }
    eprintln!(
        "{function} dim {dim}: best cost {} after {iters} iterations",
        result.best_cost
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Tune {
            config,
            out,
            nodes,
            iters,
            seed,
        } => cmd_tune(&config, &out, nodes, iters, seed),
        Command::Simulate {
            params,
            config,
            out,
            seed,
            gain_mode,
            error_mode,
        } => cmd_simulate(&params, &config, &out, seed, &gain_mode, &error_mode),
        Command::GsaBench {
            function,
            dim,
            iters,
            seed,
            nodes,
            out,
        } => cmd_gsa_bench(&function, dim, iters, seed, nodes, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
