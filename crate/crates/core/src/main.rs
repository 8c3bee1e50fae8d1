use std::error::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bitround::generators::{generate_cflp, generate_knapsack, CflpRecipe, KnapsackRecipe};
use bitround::harness::{run_experiment, write_outputs, ExperimentConfig, HarnessError};
use bitround::model::{parse_opb, write_opb_with_header, BinaryProgram};
use bitround::rounding::round_objective;
use bitround::solvers::{certify_pair, solve_auto, SolveBudget};
use bitround::symmetry::{build_colored_graph, find_generators};

type CliResult<T> = Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(name = "bitround", version, about = "ℓ-bit objective rounding for binary programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Keep the top `level` bits of every objective coefficient.
    Round {
        #[arg(long)]
        level: u32,
        input: PathBuf,
        output: PathBuf,
        /// Write the per-coefficient rounding report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Generate a synthetic instance.
    #[command(subcommand)]
    Generate(GenerateCommand),
    /// Detect formulation symmetries.
    Symmetry {
        input: PathBuf,
        /// Search-node budget.
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Solve a program exactly.
    Solve {
        input: PathBuf,
        #[arg(long, default_value_t = 10_000_000)]
        budget_nodes: u64,
    },
    /// Solve original and rounded programs and check the ε-optimality certificate.
    Certify {
        input: PathBuf,
        #[arg(long)]
        level: u32,
        #[arg(long, default_value_t = 10_000_000)]
        budget_nodes: u64,
    },
    /// Run an ℓ-sweep experiment.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GenerateCommand {
    /// Capacitated facility location.
    Cflp {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        decimals: u32,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Clustered 0/1 knapsack.
    Knapsack {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Equal cluster sizes (default).
        #[arg(long, conflicts_with = "random_sizes")]
        balanced: bool,
        /// Uniformly random cluster sizes.
        #[arg(long)]
        random_sizes: bool,
        /// Weight range `lo:hi`, upper bound exclusive.
        #[arg(long, value_parser = parse_range)]
        weights: Option<(i64, i64)>,
        /// Noise amplitude on item values.
        #[arg(long)]
        sigma: Option<i64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArg,
    },
}

#[derive(Args)]
struct OutputArg {
    #[arg(short = 'o', long = "output")]
    path: PathBuf,
}

fn parse_range(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s.split_once(':').ok_or("expected lo:hi")?;
    let a = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b = b.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((a, b))
}

fn read_program(path: &Path) -> CliResult<BinaryProgram> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(parse_opb(&text).map_err(|e| format!("{}: {e}", path.display()))?)
}

fn write_file(path: &Path, body: &str) -> CliResult<()> {
    std::fs::write(path, body).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn run(command: Command) -> CliResult<ExitCode> {
    match command {
        Command::Round {
            level,
            input,
            output,
            report,
        } => {
            let bp = read_program(&input)?;
            let (rounded, rep) = round_objective(&bp, level);
            let header = vec![format!("rounded: level {level} from {}", input.display())];
            write_file(&output, &write_opb_with_header(&rounded, &header))?;
            if let Some(path) = report {
                write_file(&path, &rep.to_json())?;
            }
            eprintln!(
                "{} of {} coefficients changed",
                rep.changed(),
                rep.per_coefficient.len()
            );
        }
        Command::Generate(GenerateCommand::Cflp {
            n,
            m,
            seed,
            decimals,
            out,
        }) => {
            let mut recipe = CflpRecipe::new(n, m, seed);
            recipe.decimals = decimals;
            let bp = generate_cflp(&recipe)?;
            write_file(&out.path, &write_opb_with_header(&bp, &recipe.provenance()))?;
        }
        Command::Generate(GenerateCommand::Knapsack {
            n,
            k,
            balanced: _,
            random_sizes,
            weights,
            sigma,
            seed,
            out,
        }) => {
            let mut recipe = KnapsackRecipe::new(n, k, seed);
            recipe.balanced = !random_sizes;
            if let Some((lo, hi)) = weights {
                recipe.weight_low = lo;
                recipe.weight_high = hi;
            }
            if let Some(s) = sigma {
                recipe.noise_sigma = s;
            }
            let bp = generate_knapsack(&recipe)?;
            write_file(&out.path, &write_opb_with_header(&bp, &recipe.provenance()))?;
        }
        Command::Symmetry { input, budget, json } => {
            let bp = read_program(&input)?;
            let report = find_generators(&build_colored_graph(&bp), budget);
            println!("generators: {}", report.generator_count);
            for g in &report.generators {
                println!("  {g}");
            }
            let mut sizes: Vec<usize> = report.orbit_partition.iter().map(Vec::len).filter(|&s| s > 1).collect();
            sizes.sort_unstable_by(|a, b| b.cmp(a));
            println!("nontrivial orbit sizes: {sizes:?}");
            println!("search nodes: {}", report.search_nodes);
            if report.timed_out {
                println!("budget exhausted: generator list may be incomplete");
            }
            if let Some(path) = json {
                write_file(&path, &report.to_json())?;
            }
        }
        Command::Solve { input, budget_nodes } => {
            let bp = read_program(&input)?;
            let r = solve_auto(&bp, SolveBudget::nodes(budget_nodes), 0)?;
            println!("status: {}", serde_json::to_value(r.status)?.as_str().unwrap_or("?"));
            match r.best_value {
                Some(v) => println!("value: {v}"),
                None => println!("value: none"),
            }
            if let Some(x) = &r.best_assignment {
                println!("assignment: {}", x.run_length());
            }
            println!("nodes: {}", r.nodes_explored);
        }
        Command::Certify {
            input,
            level,
            budget_nodes,
        } => {
            let bp = read_program(&input)?;
            let report = certify_pair(&bp, level, SolveBudget::nodes(budget_nodes))?;
            println!("{}", report.to_json());
        }
        Command::Experiment { config, out } => {
            let text = std::fs::read_to_string(&config).map_err(|e| format!("{}: {e}", config.display()))?;
            let cfg = match ExperimentConfig::from_json(&text) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("error: {e}");
                    return Ok(ExitCode::from(3));
                }
            };
            let outcome = match run_experiment(&cfg) {
                Ok(o) => o,
                Err(e @ HarnessError::Config(_)) => {
                    eprintln!("error: {e}");
                    return Ok(ExitCode::from(3));
                }
                Err(e) => return Err(e.into()),
            };
            let dir = out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("."));
            write_outputs(&cfg, &outcome, &dir)?;
            eprintln!("{} records written to {}", outcome.records.len(), dir.display());
            let violations = outcome.violations();
            if violations > 0 {
                eprintln!("loss bound exceeded in {violations} records");
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
