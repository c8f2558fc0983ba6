use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context};
use blockalm::alm::{alm_solve, AlmConfig, PenaltyMode, StepSchedule};
use blockalm::bcd::{random_start, BcdConfig, Tau, UpdateKind};
use blockalm::model::{
    brute_force_optimum, check_assumptions, load_instance, load_solution, save_instance, save_solution, verify_feasible,
    BlockProblem,
};
use blockalm::oracle::build_oracles;
use blockalm::random::{generate_random, RandomMode, RandomSpec};
use blockalm::refine::{NoRefinement, PackingRefiner, Refiner, SweepRefiner};
use blockalm::ttp::{build_instance, load_spec, uncongested_spec, ProfitMode};
use blockalm::{Error, Rational, Scalar};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;

/// Exit code when the run ends without a feasible point.
const EXIT_INFEASIBLE: u8 = 2;

#[derive(Parser)]
#[command(name = "blockalm", version, about = "Augmented Lagrangian solver for block-structured 0/1 programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the augmented Lagrangian method on an instance file.
    Solve(SolveArgs),
    /// Build a train-timetabling instance.
    GenTtp(GenTtpArgs),
    /// Write a seeded random instance.
    GenRandom(GenRandomArgs),
    /// Optimum by full enumeration.
    Brute {
        instance: PathBuf,
        #[arg(long)]
        exact: bool,
    },
    /// Report the structural assumptions and optionally verify a solution.
    Check {
        instance: PathBuf,
        solution: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Classical,
    ClassicalExact,
    Prox,
}

#[derive(Clone, Copy, ValueEnum)]
enum Penalty {
    Subgradient,
    Geometric,
}

#[derive(Clone, Copy, ValueEnum)]
enum Schedule {
    Constant,
    Decay,
}

#[derive(Clone, Copy, ValueEnum)]
enum RefineKind {
    Sweep,
    Packing,
    None,
}

#[derive(clap::Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "classical")]
    mode: Mode,
    /// Prox-linear step size, or `auto` for 1/(2.01 κ).
    #[arg(long, default_value = "auto")]
    tau: String,
    #[arg(long, value_enum, default_value = "geometric")]
    penalty: Penalty,
    /// Geometric penalty factor; 1.2 for timetabling instances, 2 otherwise.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, value_enum, default_value = "constant")]
    schedule: Schedule,
    /// Initial penalty; 20 for timetabling instances, 1 otherwise.
    #[arg(long)]
    rho0: Option<f64>,
    #[arg(long, default_value_t = 500)]
    kmax: usize,
    #[arg(long, default_value_t = 100)]
    tmax: usize,
    /// Start BCD from a random blockwise-feasible point.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    time_limit_s: Option<f64>,
    /// CSV trace path; JSON goes next to it.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    solution: Option<PathBuf>,
    /// Known optimum; enables gap1 and the gap stopping rule.
    #[arg(long, allow_hyphen_values = true)]
    ref_optimum: Option<f64>,
    #[arg(long, value_enum, default_value = "sweep")]
    refine: RefineKind,
    /// Exact rational arithmetic.
    #[arg(long)]
    exact: bool,
    /// Fill the trace `ms` column with wall time.
    #[arg(long)]
    record_time: bool,
}

#[derive(clap::Args)]
struct GenTtpArgs {
    /// TtpSpec JSON; without it an uncongested line is generated.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    trains: usize,
    #[arg(long, default_value_t = 5)]
    stations: usize,
    #[arg(long, default_value_t = 100)]
    horizon: u32,
    #[arg(long, default_value_t = 2)]
    headway: u32,
    #[arg(long, value_enum, default_value = "count")]
    profit: Profit,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Profit {
    Count,
    Revenue,
}

#[derive(clap::Args)]
struct GenRandomArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    blocks: usize,
    #[arg(long, default_value_t = 3)]
    rows: usize,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    /// 0/1 coupling with b = 1 and costs on uncoupled columns.
    #[arg(long)]
    constrained: bool,
    #[arg(short, long)]
    output: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("BLOCKALM_LOG")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => {
            if args.exact {
                solve::<Rational>(&args)
            } else {
                solve::<f64>(&args)
            }
        }
        Command::GenTtp(args) => gen_ttp(&args),
        Command::GenRandom(args) => gen_random(&args),
        Command::Brute { instance, exact } => {
            if exact {
                brute::<Rational>(&instance)
            } else {
                brute::<f64>(&instance)
            }
        }
        Command::Check { instance, solution } => check(&instance, solution.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn scalar<S: Scalar>(v: f64, name: &str) -> anyhow::Result<S> {
    if !v.is_finite() {
        bail!("--{name} must be finite");
    }
    Ok(S::from_f64_lossy(v))
}

fn solve<S: Scalar>(args: &SolveArgs) -> anyhow::Result<u8> {
    let problem: BlockProblem<S> = load_instance(&args.instance)?;
    let ttp = problem.label() == Some("ttp");
    let oracles = build_oracles(&problem)?;

    let tau = match args.tau.as_str() {
        "auto" => Tau::Auto,
        t => Tau::Fixed(scalar(t.parse::<f64>().context("--tau expects a number or `auto`")?, "tau")?),
    };
    let bcd = BcdConfig {
        update: match args.mode {
            Mode::Classical => UpdateKind::ClassicalLinearized,
            Mode::ClassicalExact => UpdateKind::ClassicalExact,
            Mode::Prox => UpdateKind::ProxLinear,
        },
        tau,
        t_max: args.tmax,
        assume_binary_coupling: false,
    };
    let beta = scalar(args.beta, "beta")?;
    let sigma = args.sigma.unwrap_or(if ttp { 1.2 } else { 2.0 });
    let cfg = AlmConfig {
        k_max: args.kmax,
        penalty: match args.penalty {
            Penalty::Subgradient => PenaltyMode::Subgradient,
            Penalty::Geometric => PenaltyMode::Geometric {
                sigma: scalar(sigma, "sigma")?,
            },
        },
        schedule: match args.schedule {
            Schedule::Constant => StepSchedule::Constant(beta),
            Schedule::Decay => StepSchedule::Decay(beta),
        },
        rho0: scalar(args.rho0.unwrap_or(if ttp { 20.0 } else { 1.0 }), "rho0")?,
        x0: args.seed.map(|s| random_start(&oracles, s)).transpose()?,
        time_limit: args.time_limit_s.map(Duration::from_secs_f64),
        reference_optimum: args.ref_optimum.map(|v| scalar(v, "ref-optimum")).transpose()?,
        record_time: args.record_time,
        ..AlmConfig::default()
    };
    let mut refiner: Box<dyn Refiner<S>> = match args.refine {
        RefineKind::Sweep => Box::new(SweepRefiner::default()),
        RefineKind::Packing => Box::new(PackingRefiner::default()),
        RefineKind::None => Box::new(NoRefinement),
    };
    let out = alm_solve(&problem, &oracles, &bcd, &cfg, refiner.as_mut())?;
    info!("stopped: {:?}", out.stop);

    if let Some(path) = &args.trace {
        out.trace.write_files(path)?;
    }
    let last = out.trace.rows.last();
    let show = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |g| format!("{g:.6e}"));
    match &out.incumbent {
        Some(inc) => {
            println!("value: {}", inc.value.to_f64_lossy());
            println!("feasible: true");
            if let Some(path) = &args.solution {
                save_solution(&inc.x, &inc.value, path)?;
            }
        }
        None => {
            println!("value: -");
            println!("feasible: false");
        }
    }
    println!(
        "lower_bound: {}",
        out.best_lower_bound.as_ref().map_or_else(|| "-".to_string(), |b| b.to_f64_lossy().to_string())
    );
    println!("gap1: {}", show(last.and_then(|r| r.gap1)));
    println!("gap2: {}", show(last.and_then(|r| r.gap2)));
    println!("iterations: {}", out.trace.len());
    println!("stop: {:?}", out.stop);
    if out.heuristic_step {
        println!("note: linearized steps ran without the structural assumptions");
    }
    Ok(if out.incumbent.is_some() { 0 } else { EXIT_INFEASIBLE })
}

fn gen_ttp(args: &GenTtpArgs) -> anyhow::Result<u8> {
    let spec = match &args.spec {
        Some(path) => load_spec(path)?,
        None => {
            let mut s = uncongested_spec(args.trains, args.stations, args.horizon, args.headway);
            s.profit_mode = match args.profit {
                Profit::Count => ProfitMode::Count,
                Profit::Revenue => ProfitMode::Revenue,
            };
            s
        }
    };
    let problem: BlockProblem<Rational> = build_instance(&spec)?;
    save_instance(&problem, &args.output)?;
    println!(
        "wrote {} trains, {} variables, {} coupling rows to {}",
        problem.num_blocks(),
        problem.n(),
        problem.m(),
        args.output.display()
    );
    Ok(0)
}

fn gen_random(args: &GenRandomArgs) -> anyhow::Result<u8> {
    let spec = RandomSpec {
        blocks: args.blocks,
        rows: args.rows,
        block_dim: args.dim,
        density: args.density,
        mode: if args.constrained {
            RandomMode::AssumptionConstrained
        } else {
            RandomMode::General
        },
    };
    let problem: BlockProblem<Rational> = generate_random(args.seed, &spec);
    save_instance(&problem, &args.output)?;
    println!("wrote {}", args.output.display());
    Ok(0)
}

fn brute<S: Scalar>(path: &Path) -> anyhow::Result<u8> {
    let problem: BlockProblem<S> = load_instance(path)?;
    match brute_force_optimum(&problem) {
        Ok(best) => {
            println!("value: {}", best.value.to_f64_lossy());
            for (j, block) in best.solution.to_bits().iter().enumerate() {
                let bits: Vec<String> = block.iter().map(u8::to_string).collect();
                println!("x[{j}] = ({})", bits.join(","));
            }
            Ok(0)
        }
        Err(Error::Infeasible) => {
            println!("infeasible");
            Ok(EXIT_INFEASIBLE)
        }
        Err(e) => Err(e.into()),
    }
}

fn check(instance: &Path, solution: Option<&Path>) -> anyhow::Result<u8> {
    let problem: BlockProblem<Rational> = load_instance(instance)?;
    let report = check_assumptions(&problem);
    println!("{}", serde_json::to_string_pretty(&report)?);
    let Some(path) = solution else { return Ok(0) };
    let x = load_solution(path)?;
    match verify_feasible(&problem, &x) {
        Ok(()) => {
            println!("solution: feasible, value {}", problem.objective(&x));
            Ok(0)
        }
        Err(e) => {
            println!("solution: infeasible ({e})");
            Ok(EXIT_INFEASIBLE)
        }
    }
}
