use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use relevance_core::bench::{run_bench, BenchConfig, Method, Resampling, DEFAULT_FOLDS};
use relevance_core::boruta::{DEFAULT_LEVEL, DEFAULT_MAX_ITER};
use relevance_core::data::load_csv;
use relevance_core::rng::seeded;
use relevance_core::synth::{generate, preset};
use relevance_core::{decompose, Forest, PipelineConfig, RelevanceReport, Task};

#[derive(Parser)]
#[command(name = "relevance", version, about = "Strong/weak/irrelevant feature decomposition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic benchmark dataset and its ground truth.
    Generate(GenerateArgs),
    /// Decompose the features of a CSV file.
    Select(SelectArgs),
    /// Run selection methods on benchmark presets.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Preset name, e.g. "Set 1" or "NL 2".
    #[arg(long)]
    preset: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Header name of the target column.
    #[arg(long, default_value = "y")]
    target_name: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Classification,
    Regression,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    input: PathBuf,
    /// Name of the target column.
    #[arg(long, default_value = "y")]
    target: String,
    #[arg(long)]
    out: PathBuf,
    /// Number of shadow refits per null distribution.
    #[arg(long, default_value_t = 50)]
    alpha: usize,
    /// Significance level of the prediction intervals.
    #[arg(long, default_value_t = 1e-6)]
    p_value: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    boruta_max_iter: usize,
    #[arg(long, default_value_t = DEFAULT_LEVEL)]
    boruta_level: f64,
    #[arg(long, value_enum, default_value = "classification")]
    task: TaskArg,
    /// Print a table of the decomposition to standard output.
    #[arg(long)]
    table: bool,
    /// Also write a forest fitted on all features (node arrays) as JSON.
    #[arg(long)]
    dump_forest: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated preset names.
    #[arg(long, value_delimiter = ',', required = true)]
    presets: Vec<String>,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    /// Comma-separated methods: sq, rfe.
    #[arg(long, value_delimiter = ',', default_value = "sq,rfe")]
    methods: Vec<String>,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    rfe_folds: usize,
    /// Write zero for all timings so reports are byte-for-byte reproducible.
    #[arg(long)]
    no_timing: bool,
    /// Bootstrap one draw of each linear preset instead of drawing afresh
    /// for every repeat.
    #[arg(long)]
    bootstrap: bool,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Select(args) => cmd_select(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let spec = preset(&args.preset)?;
    let (ds, truth) = generate(&spec, &mut seeded(args.seed))?;
    ds.write_csv(&args.out, &args.target_name)?;
    let json = serde_json::to_string_pretty(&truth)?;
    std::fs::write(&args.truth, json + "\n")
        .with_context(|| format!("writing {}", args.truth.display()))?;
    Ok(())
}

fn cmd_select(args: SelectArgs) -> Result<()> {
    let task = match args.task {
        TaskArg::Classification => Task::Classification,
        TaskArg::Regression => Task::Regression,
    };
    let ds = load_csv(&args.input, &args.target, task)?;
    let config = PipelineConfig {
        alpha: args.alpha,
        p_value: args.p_value,
        boruta_max_iter: args.boruta_max_iter,
        boruta_level: args.boruta_level,
        ..Default::default()
    };
    let report = decompose(&ds, &config, &mut seeded(args.seed))?;
    std::fs::write(&args.out, report.to_json()? + "\n")
        .with_context(|| format!("writing {}", args.out.display()))?;
    if args.table {
        print_table(&report, ds.names());
    }
    if let Some(path) = args.dump_forest {
        let forest = Forest::fit(&config.minimal_set, &ds, &mut seeded(args.seed))?;
        std::fs::write(&path, serde_json::to_string(&forest)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn print_table(report: &RelevanceReport, names: &[String]) {
    let width = names.iter().map(String::len).max().unwrap_or(0).max(7);
    println!("{:<width$}  class       importance  reduced", "feature");
    for (j, name) in names.iter().enumerate() {
        let class = if report.strong.contains(j) {
            "strong"
        } else if report.weak.contains(j) {
            "weak"
        } else {
            "irrelevant"
        };
        let diag = report.diagnostics.features.iter().find(|f| f.index == j);
        let importance = diag.map_or("-".to_string(), |f| format!("{:.4}", f.importance));
        let reduced = diag
            .and_then(|f| f.reduced_score)
            .map_or("-".to_string(), |s| format!("{s:.4}"));
        println!("{name:<width$}  {class:<10}  {importance:>10}  {reduced:>7}");
    }
    if let Some(pi) = &report.diagnostics.score_interval {
        println!("score interval [{:.4}, {:.4}]", pi.lower, pi.upper);
    }
    if let Some(gamma) = &report.diagnostics.importance_interval {
        println!("importance threshold {:.6}", gamma.upper);
    }
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let methods = args
        .methods
        .iter()
        .map(|m| m.parse::<Method>())
        .collect::<Result<Vec<_>, _>>()?;
    let mut config = BenchConfig::new(args.presets, args.repeats, methods, args.seed);
    config.rfe_folds = args.rfe_folds;
    if args.bootstrap {
        config.resampling = Resampling::Bootstrap;
    }
    let mut result = run_bench(&config)?;
    if args.no_timing {
        result = result.without_timing();
    }
    result.write_to_dir(&args.out_dir)?;
    for s in result.summary() {
        let fmt = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{x:.3}"));
        println!(
            "{:<6} {:<4} f1 {}  strong recall {}  weak recall {}  accuracy {}  {}s",
            s.preset,
            s.method,
            fmt(s.f1),
            fmt(s.strong_recall),
            fmt(s.weak_recall),
            fmt(s.train_accuracy),
            fmt(s.seconds),
        );
    }
    Ok(())
}
