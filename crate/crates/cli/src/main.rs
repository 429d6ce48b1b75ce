use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use polcert::config::{ConfigError, RunConfig};
use polcert::oracle::{dump_trace, exact_tree_probability, mc_failure_estimate, simulate_trace};
use polcert::plot::{render_svg, PartitionDump};

const EXIT_CODES: &str = "Exit codes:
  0  success (verify: no p_safe given, or bound <= p_safe)
  1  verify: bound exceeds p_safe
  2  configuration or input error
  3  verify: state budget exhausted, frontier labelled fail (bound still reported)
  4  other runtime error";

#[derive(Parser)]
#[command(name = "polcert", version, about = "Certified failure-probability bounds for neural RL policies", after_help = EXIT_CODES)]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the abstraction and bound the failure probability.
    Verify(VerifyArgs),
    /// Simulate the concrete closed loop from one state.
    Simulate(SimulateArgs),
    /// Render a partition dump as SVG.
    Plot(PlotArgs),
}

#[derive(Args)]
struct VerifyArgs {
    config: PathBuf,
    /// Report JSON output path.
    #[arg(long, default_value = "report.json")]
    report: PathBuf,
    /// Also write the IMDP as text.
    #[arg(long)]
    dump_imdp: Option<PathBuf>,
    /// Also write the refined initial partition (input for `plot`).
    #[arg(long)]
    partition: Option<PathBuf>,
    /// Use unnormalised upper probabilities for the maxmax bound.
    #[arg(long)]
    conservative: bool,
}

#[derive(Args)]
struct SimulateArgs {
    config: PathBuf,
    /// Start state, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    state: Vec<f64>,
    /// Horizon (defaults to the config's).
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo trials; 1 prints a single trace.
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Also compute the exact failure probability.
    #[arg(long)]
    exact: bool,
    /// Write the (first) trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    partition: PathBuf,
    #[arg(long, default_value = "partition.svg")]
    out: PathBuf,
    /// Two state axes to draw, e.g. `0,1`.
    #[arg(long, value_delimiter = ',')]
    axes: Vec<usize>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Imdp(_) => Failure::Runtime(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

fn write(path: &PathBuf, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn verify(args: VerifyArgs) -> Result<u8, Failure> {
    let mut cfg = RunConfig::load(&args.config)?;
    cfg.conservative |= args.conservative;
    let env = cfg.environment()?;
    info!("verifying {} with {}", env.name(), cfg.network.display());
    let (report, imdp) = cfg.run()?;
    let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Runtime(e.to_string()))?;
    write(&args.report, &(text + "\n"))?;
    if let Some(path) = &args.dump_imdp {
        write(path, &imdp.dump())?;
    }
    if let Some(path) = &args.partition {
        let dump = PartitionDump::initial_partition(&imdp, env.var_names(), env.action_names());
        let text = serde_json::to_string_pretty(&dump).map_err(|e| Failure::Runtime(e.to_string()))?;
        write(path, &(text + "\n"))?;
    }
    println!("environment      {}", env.name());
    println!("bound (maxmax)   {:.6}", report.global_maxmax);
    let maxmin = report.bounds.iter().map(|b| b.maxmin).fold(0.0, f64::max);
    println!("maxmin           {maxmin:.6} (guidance only, not a lower bound)");
    println!("imdp states      {}", report.stats.imdp_states);
    println!("polyhedra        {}", report.stats.polyhedra);
    println!("containment hits {}", report.stats.containment_merges);
    println!("runtime          {:.2} s", report.stats.wall_clock_s);
    if !report.flags.is_empty() {
        println!("flags            {}", report.flags.join(", "));
    }
    if let Some(pass) = report.pass {
        println!("p_safe {}     {}", report.p_safe.unwrap_or(0.0), if pass { "PASS" } else { "FAIL" });
    }
    if report.flags.iter().any(|f| f == "budget_exhausted") {
        return Ok(3);
    }
    Ok(if report.pass == Some(false) { 1 } else { 0 })
}

fn simulate(args: SimulateArgs) -> Result<u8, Failure> {
    let cfg = RunConfig::load(&args.config)?;
    let env = cfg.environment()?;
    let net = cfg.load_network()?;
    if args.state.len() != env.dim() {
        return Err(Failure::Config(format!(
            "state needs {} values, got {}",
            env.dim(),
            args.state.len()
        )));
    }
    if args.trials == 0 {
        return Err(Failure::Config("trials must be >= 1".into()));
    }
    let k = args.steps.unwrap_or(cfg.horizon);
    let (trace, failed) = simulate_trace(&env, &net, &args.state, k, args.seed);
    if let Some(path) = &args.trace {
        write(path, &dump_trace(&trace))?;
    }
    if args.trials == 1 {
        print!("{}", dump_trace(&trace));
        println!("failed {failed}");
    } else {
        let mc = mc_failure_estimate(&env, &net, &args.state, k, args.trials, args.seed)
            .map_err(|e| Failure::Runtime(e.to_string()))?;
        println!(
            "monte carlo {:.6} ({} / {}), 95% wilson [{:.6}, {:.6}]",
            mc.estimate, mc.failures, mc.trials, mc.wilson_ci.0, mc.wilson_ci.1
        );
    }
    if args.exact {
        let p = exact_tree_probability(&env, &net, &args.state, k)
            .map_err(|e| Failure::Runtime(e.to_string()))?;
        println!("exact {p:.12}");
    }
    Ok(0)
}

fn plot(args: PlotArgs) -> Result<u8, Failure> {
    let text = fs::read_to_string(&args.partition)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", args.partition.display())))?;
    let dump: PartitionDump =
        serde_json::from_str(&text).map_err(|e| Failure::Config(format!("partition dump: {e}")))?;
    let axes = match args.axes.as_slice() {
        [] => None,
        [a, b] => Some((*a, *b)),
        _ => return Err(Failure::Config("--axes takes exactly two indices".into())),
    };
    let svg = render_svg(&dump, axes).map_err(|e| Failure::Config(e.to_string()))?;
    write(&args.out, &svg)?;
    println!("wrote {} leaves to {}", dump.leaves.len(), args.out.display());
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(4);
        }
    }
    let outcome = match cli.command {
        Command::Verify(a) => verify(a),
        Command::Simulate(a) => simulate(a),
        Command::Plot(a) => plot(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(4)
        }
    }
}
