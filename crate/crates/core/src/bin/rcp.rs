use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use rcp_placement::baseline::{run_frame_by_frame, FrameSolverConfig};
use rcp_placement::compare::compare_runs;
use rcp_placement::plot::emit_plot;
use rcp_placement::rcp::{run_rcp, AnnealSchedule, ControllerGains, DEFAULT_T_MIN};
use rcp_placement::scenario::{generate_scenario, Scenario, ScenarioFile, ScenarioGenConfig};
use rcp_placement::trace::{emit_csv, read_csv};
use rcp_placement::Error;

#[derive(Parser)]
#[command(name = "rcp", version, about = "Real-time controller placement simulator for mobile SDN")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a moving-cluster scenario file.
    Gen(GenArgs),
    /// Run one algorithm on a scenario and write its trace.
    Run(RunArgs),
    /// Run both algorithms on a scenario and write traces, report and plot.
    Compare(CompareArgs),
    /// Plot one or more traces into an SVG file.
    Plot(PlotArgs),
}

#[derive(Args, Clone, Default)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    k0: Option<f64>,
    /// Per-step temperature decay of the real-time controller.
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Starting temperature (both algorithms).
    #[arg(long, allow_negative_numbers = true)]
    t0: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    horizon: Option<f64>,
    /// Write zeros instead of measured wall times, for byte-reproducible output.
    #[arg(long)]
    zero_walltime: bool,
}

#[derive(Args)]
struct SolverArgs {
    /// Speed cap on each controller (none by default).
    #[arg(long, allow_negative_numbers = true)]
    u_max: Option<f64>,
    /// Temperature decay per level of the frame-by-frame solver.
    #[arg(long, default_value_t = 0.9)]
    frame_alpha: f64,
    /// Warm-start each frame from the previous placement.
    #[arg(long)]
    warm_start: bool,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2)]
    dimension: usize,
    #[arg(long, default_value_t = 4)]
    clusters: usize,
    #[arg(long, default_value_t = 25)]
    nodes_per_cluster: usize,
    /// Cluster standard deviation before normalization.
    #[arg(long, default_value_t = 1.0)]
    spread: f64,
    /// Half side of the region cluster means are drawn from.
    #[arg(long, default_value_t = 10.0)]
    region: f64,
    /// Rayleigh parameter for node rates.
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    #[arg(long, default_value_t = 4)]
    controllers: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Rcp,
    Frame,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    algo: Algo,
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long, num_args = 1.., required = true)]
    trace: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn apply_overrides(file: &mut ScenarioFile, c: &Common) {
    if let Some(v) = c.seed {
        file.seed = v;
    }
    if let Some(v) = c.gamma {
        file.gamma = v;
    }
    if let Some(v) = c.k0 {
        file.k0 = v;
    }
    if let Some(v) = c.alpha {
        file.alpha = v;
    }
    if let Some(v) = c.t0 {
        file.t0_temperature = v;
    }
    if let Some(v) = c.steps {
        file.steps = v;
    }
    if let Some(v) = c.horizon {
        file.horizon = v;
    }
}

struct Setup {
    scenario: Scenario<f64>,
    gains: ControllerGains<f64>,
    schedule: AnnealSchedule<f64>,
    frame: FrameSolverConfig<f64>,
}

fn setup(path: &Path, common: &Common, solver: &SolverArgs) -> Result<Setup, Error> {
    let mut file = ScenarioFile::read(path)?;
    apply_overrides(&mut file, common);
    let scenario = Scenario::<f64>::from_file(&file)?;
    let gains = ControllerGains { u_max: solver.u_max, ..ControllerGains::new(scenario.k0)? }.validated()?;
    let t_min = DEFAULT_T_MIN.min(scenario.t0_temperature);
    let schedule = AnnealSchedule::new(scenario.t0_temperature, scenario.alpha, t_min)?;
    let frame = FrameSolverConfig {
        alpha: solver.frame_alpha,
        t_min,
        warm_start: solver.warm_start,
        ..FrameSolverConfig::with_t0(scenario.t0_temperature)
    };
    frame.validate()?;
    Ok(Setup { scenario, gains, schedule, frame })
}

fn gen(args: &GenArgs) -> Result<(), Error> {
    let defaults = ScenarioGenConfig::default();
    let c = &args.common;
    let config = ScenarioGenConfig {
        dimension: args.dimension,
        num_clusters: args.clusters,
        nodes_per_cluster: args.nodes_per_cluster,
        cluster_spread: args.spread,
        region: args.region,
        rayleigh_sigma: args.sigma,
        num_controllers: args.controllers,
        seed: c.seed.unwrap_or(defaults.seed),
        horizon: c.horizon.unwrap_or(defaults.horizon),
        steps: c.steps.unwrap_or(defaults.steps),
        gamma: c.gamma.unwrap_or(defaults.gamma),
        k0: c.k0,
        alpha: c.alpha.unwrap_or(defaults.alpha),
        t0: c.t0,
    };
    let file = generate_scenario(&config)?;
    Scenario::<f64>::from_file(&file)?;
    file.write(&args.out)
}

fn run(args: &RunArgs) -> Result<(), Error> {
    let s = setup(&args.scenario, &args.common, &args.solver)?;
    let mut trace = match args.algo {
        Algo::Rcp => run_rcp(&s.scenario, &s.gains, &s.schedule)?,
        Algo::Frame => run_frame_by_frame(&s.scenario, &s.frame)?,
    };
    if args.common.zero_walltime {
        trace.zero_walltime();
    }
    emit_csv(&trace, &args.out)
}

fn compare(args: &CompareArgs) -> Result<(), Error> {
    let s = setup(&args.scenario, &args.common, &args.solver)?;
    let mut cmp = compare_runs(&s.scenario, &s.gains, &s.schedule, &s.frame)?;
    if args.common.zero_walltime {
        cmp.zero_walltime();
    }
    cmp.emit(&args.out_dir)?;
    if let Some(speedup) = cmp.report.speedup {
        println!(
            "rcp {:.1} us/step, frame {:.1} us/frame, speedup {speedup:.1}x",
            cmp.report.rcp_timing.mean_us, cmp.report.frame_timing.mean_us
        );
    }
    Ok(())
}

fn plot(args: &PlotArgs) -> Result<(), Error> {
    let traces = args.trace.iter().map(|p| read_csv(p)).collect::<Result<Vec<_>, _>>()?;
    emit_plot(&traces, &args.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => gen(a).context("gen failed"),
        Command::Run(a) => run(a).context("run failed"),
        Command::Compare(a) => compare(a).context("compare failed"),
        Command::Plot(a) => plot(a).context("plot failed"),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let numeric = e.downcast_ref::<Error>().is_some_and(Error::is_numeric);
            ExitCode::from(if numeric { 3 } else { 2 })
        }
    }
}
