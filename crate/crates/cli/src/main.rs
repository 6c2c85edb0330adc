use std::fs;
use std::io::{self, BufReader, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use num_bigint::BigUint;

use mealy_pac::analysis::{write_table_csv, TableOptions, TableRow};
use mealy_pac::bounds::{h_for_confidence, safety_probability, solve_h};
use mealy_pac::models::ModelCatalog;
use mealy_pac::oracles::{exact_count_dp, exact_count_enumerate, monte_carlo, ExactCount};
use mealy_pac::sul::wire::{serve, serve_tcp};
use mealy_pac::sul::{BlackBoxConfig, Endpoint, SulFactory};
use mealy_pac::{analyze, reproduce_table, AnalysisOptions, Budget, MealyMachine, OracleSemantics};
use mealy_pac::{Parallelism, Target};

#[derive(Parser)]
#[command(
    name = "mealy-pac",
    version,
    about = "PAC-confidence safety analysis for Mealy-machine systems"
)]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a safe-path set, count it and report P_V, confidence, P_L and (for models) the exact probability.
    Analyze(AnalyzeArgs),
    /// Exact safe-path count of a model file.
    Exact(ExactArgs),
    /// Monte Carlo estimate of the safety probability.
    Estimate(EstimateArgs),
    /// Samples needed for a confidence parameter h and safe-path count d.
    SampleSize(SampleSizeArgs),
    /// Confidence reached with L samples and d safe paths.
    Confidence(ConfidenceArgs),
    /// Run the eight ALKS case-study rows and compare them with the reference values.
    ReproduceTable(TableArgs),
    /// Serve a model over the line protocol (stdin/stdout, or TCP with --listen).
    ServeModel(ServeArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct TargetSource {
    /// Model file, or the name of a bundled model.
    #[arg(long)]
    model: Option<String>,
    /// host:port of a running protocol server.
    #[arg(long)]
    endpoint: Option<String>,
    /// Program speaking the protocol on stdin/stdout (split on whitespace).
    #[arg(long)]
    cmd: Option<String>,
}

#[derive(Args)]
struct TargetArgs {
    #[command(flatten)]
    source: TargetSource,
    /// Outputs that mark a black-box run as unsafe when emitted last.
    #[arg(long, value_delimiter = ',', default_value = "alarm")]
    unsafe_outputs: Vec<String>,
    /// Per-request timeout for black-box systems, in milliseconds.
    #[arg(long, default_value_t = 5000)]
    timeout_ms: u64,
    /// Reconnection attempts after a transport failure.
    #[arg(long, default_value_t = 2)]
    retries: u32,
}

enum Resolved {
    Model(String, MealyMachine),
    Remote(String, BlackBoxConfig),
}

impl Resolved {
    fn target(&self) -> Target<'_> {
        match self {
            Resolved::Model(name, machine) => Target::WhiteBox { name, machine },
            Resolved::Remote(name, config) => Target::BlackBox { name, config },
        }
    }

    fn factory(&self) -> &dyn SulFactory {
        match self {
            Resolved::Model(_, m) => m,
            Resolved::Remote(_, c) => c,
        }
    }
}

impl TargetArgs {
    fn resolve(&self) -> Result<Resolved> {
        let s = &self.source;
        let endpoint = match (&s.model, &s.endpoint, &s.cmd) {
            (Some(spec), _, _) => {
                let (name, machine) = ModelCatalog::from_env()
                    .load(spec)
                    .map_err(mealy_pac::Error::from)?;
                return Ok(Resolved::Model(name, machine));
            }
            (_, Some(addr), _) => Endpoint::Tcp(addr.clone()),
            (_, _, Some(cmd)) => Endpoint::Command(cmd.clone()),
            _ => unreachable!("clap enforces exactly one target"),
        };
        let name = match &endpoint {
            Endpoint::Tcp(a) | Endpoint::Command(a) => a.clone(),
        };
        let mut config = BlackBoxConfig::new(endpoint, self.unsafe_outputs.iter().cloned());
        config.timeout = Duration::from_millis(self.timeout_ms);
        config.max_retries = self.retries;
        Ok(Resolved::Remote(name, config))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    JsonLines,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    target: TargetArgs,
    /// Horizon: number of inputs per run.
    #[arg(short = 'n', long = "horizon")]
    n: usize,
    /// Number of positive examples to draw.
    #[arg(
        short = 'L',
        long = "samples",
        conflicts_with = "confidence",
        required_unless_present = "confidence"
    )]
    samples: Option<u64>,
    /// Target confidence in (0, 1) instead of a fixed budget.
    #[arg(long)]
    confidence: Option<f64>,
    /// Upper bound on the safe-path count, used to size the budget for --confidence.
    #[arg(long, requires = "confidence")]
    d_bound: Option<BigUint>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = OracleSemantics::AllSafe)]
    oracle_semantics: OracleSemantics,
    /// Membership-query cap per oracle call; hitting it keeps the binding.
    #[arg(long)]
    oracle_cap: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::JsonLines)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the learned monomial set to this file.
    #[arg(long)]
    set_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExactMethod {
    Dp,
    Enumerate,
}

#[derive(Args)]
struct ExactArgs {
    #[arg(long)]
    model: String,
    #[arg(short = 'n', long = "horizon")]
    n: usize,
    #[arg(long, value_enum, default_value_t = ExactMethod::Dp)]
    method: ExactMethod,
    /// Largest |I|^n the enumeration method will attempt.
    #[arg(long, default_value_t = 100_000_000)]
    cap: u64,
    #[arg(long, value_enum, default_value_t = Format::JsonLines)]
    format: Format,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    target: TargetArgs,
    #[arg(short = 'n', long = "horizon")]
    n: usize,
    #[arg(short = 'L', long = "samples")]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = mealy_pac::oracles::DEFAULT_SHARDS)]
    shards: usize,
    #[arg(long, value_enum, default_value_t = Format::JsonLines)]
    format: Format,
}

#[derive(Args)]
struct SampleSizeArgs {
    /// Confidence parameter h > 1 (confidence is 1 - 1/h).
    #[arg(
        long,
        conflicts_with = "confidence",
        required_unless_present = "confidence"
    )]
    h: Option<f64>,
    /// Target confidence, converted to h = 1/(1 - confidence).
    #[arg(long)]
    confidence: Option<f64>,
    /// Number of safe paths.
    #[arg(short = 'd', long)]
    d: BigUint,
}

#[derive(Args)]
struct ConfidenceArgs {
    #[arg(short = 'L', long = "samples")]
    samples: u64,
    #[arg(short = 'd', long)]
    d: BigUint,
    /// Also print P = d / |I|^n for this alphabet size (needs -n).
    #[arg(long, requires = "n")]
    alphabet_size: Option<usize>,
    #[arg(short = 'n', long = "horizon")]
    n: Option<usize>,
}

#[derive(Args)]
struct TableArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = OracleSemantics::AllSafe)]
    oracle_semantics: OracleSemantics,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write the table here instead of stdout; the comparison goes to stderr either way.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 5 if any compared cell is outside its tolerance.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    model: String,
    /// Accept TCP connections on this address instead of using stdin/stdout.
    #[arg(long)]
    listen: Option<String>,
}

fn parallelism(sequential: bool) -> Parallelism {
    if sequential {
        Parallelism::Sequential
    } else {
        Parallelism::default()
    }
}

/// Writes `text` to `path` (whole file at once) or to stdout.
fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn table_text(rows: &[TableRow], format: Format) -> Result<String> {
    Ok(match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_table_csv(rows, &mut buf)?;
            String::from_utf8(buf)?
        }
        Format::JsonLines => {
            let mut s = String::new();
            for r in rows {
                s.push_str(&serde_json::to_string(r)?);
                s.push('\n');
            }
            s
        }
    })
}

fn run_analyze(a: &AnalyzeArgs, par: Parallelism) -> Result<()> {
    let resolved = a.target.resolve()?;
    let budget = match (a.samples, a.confidence) {
        (Some(l), None) => Budget::Samples(l),
        (None, Some(target)) => Budget::Confidence {
            target,
            d_bound: a.d_bound.clone(),
        },
        _ => unreachable!("clap enforces exactly one budget"),
    };
    let mut opts = AnalysisOptions::new(a.n, budget, a.seed);
    opts.oracle_semantics = a.oracle_semantics;
    opts.parallelism = par;
    if let Some(cap) = a.oracle_cap {
        opts.oracle_cap = cap;
    }
    let outcome = analyze(&resolved.target(), &opts)?;
    let r = &outcome.report;
    info!(
        "{}: x_S={} P_V={:.4} confidence={:.4} P_L={:.4}",
        r.model, r.x_s, r.p_v, r.confidence, r.p_l
    );
    let text = match a.format {
        Format::JsonLines => r.to_json_line()? + "\n",
        Format::Csv => table_text(&[TableRow::from(r)], Format::Csv)?,
    };
    if let Some(p) = &a.set_out {
        let set = outcome.set.render(&outcome.alphabet);
        fs::write(p, set).with_context(|| format!("writing {}", p.display()))?;
    }
    emit(&text, a.out.as_deref())
}

fn exact_text(c: &ExactCount, format: Format) -> Result<String> {
    Ok(match format {
        Format::Csv => format!(
            "n,safe_paths,total_paths,probability\n{},{},{},{}\n",
            c.n, c.safe_paths, c.total_paths, c.probability
        ),
        Format::JsonLines => {
            serde_json::json!({
                "n": c.n,
                "safe_paths": c.safe_paths.to_string(),
                "total_paths": c.total_paths.to_string(),
                "probability": c.probability,
            })
            .to_string()
                + "\n"
        }
    })
}

fn run_exact(a: &ExactArgs, par: Parallelism) -> Result<()> {
    let (_, machine) = ModelCatalog::from_env()
        .load(&a.model)
        .map_err(mealy_pac::Error::from)?;
    if a.n == 0 {
        return Err(mealy_pac::Error::from(mealy_pac::MachineError::ZeroHorizon).into());
    }
    let count = match a.method {
        ExactMethod::Dp => exact_count_dp(&machine, a.n),
        ExactMethod::Enumerate => {
            exact_count_enumerate(&machine, a.n, a.cap, par).map_err(mealy_pac::Error::from)?
        }
    };
    emit(&exact_text(&count, a.format)?, None)
}

fn run_estimate(a: &EstimateArgs, par: Parallelism) -> Result<()> {
    let resolved = a.target.resolve()?;
    let est = monte_carlo(resolved.factory(), a.n, a.samples, a.seed, a.shards, par)
        .map_err(mealy_pac::Error::from)?;
    let text = match a.format {
        Format::Csv => format!(
            "samples,safe_hits,estimate,std_error,seed,shards\n{},{},{},{},{},{}\n",
            est.samples, est.safe_hits, est.estimate, est.std_error, est.seed, est.shards
        ),
        Format::JsonLines => serde_json::to_string(&est)? + "\n",
    };
    emit(&text, None)
}

fn run_sample_size(a: &SampleSizeArgs) -> Result<()> {
    let h = match (a.h, a.confidence) {
        (Some(h), _) => h,
        (None, Some(c)) => h_for_confidence(c).map_err(mealy_pac::Error::from)?,
        _ => unreachable!("clap enforces one of --h / --confidence"),
    };
    let l = mealy_pac::analysis::sample_size(h, &a.d)?;
    println!("{l}");
    Ok(())
}

fn run_confidence(a: &ConfidenceArgs) -> Result<()> {
    let pac = solve_h(a.samples, &a.d).map_err(mealy_pac::Error::from)?;
    println!("h={:.6} confidence={:.6}", pac.h, pac.confidence);
    if let (Some(k), Some(n)) = (a.alphabet_size, a.n) {
        let p = safety_probability(&a.d, k, n).map_err(mealy_pac::Error::from)?;
        println!("probability={p:.6}");
    }
    Ok(())
}

fn run_table(a: &TableArgs, par: Parallelism) -> Result<bool> {
    let opts = TableOptions {
        seed: a.seed,
        parallelism: par,
        oracle_semantics: a.oracle_semantics,
    };
    let outcome = reproduce_table(&opts)?;
    let text = table_text(&outcome.rows(), a.format)?;
    emit(&text, a.out.as_deref())?;

    let mut err = io::stderr().lock();
    for c in &outcome.checks {
        writeln!(
            err,
            "{} {:<12} N={:<2} {:<10} ours={:<8} reference={:<6} rule={}",
            if c.pass { "ok  " } else { "DIFF" },
            c.model,
            c.n,
            c.column,
            c.ours,
            c.reference,
            c.rule
        )?;
    }
    let coffee = &outcome.coffee;
    writeln!(
        err,
        "coffee (reconstructed) N=5: x_S={} exact safe paths={} P_V={:.4} (reference x_S: 272, not compared)",
        coffee.x_s,
        coffee
            .exact_safe_paths
            .as_ref()
            .map(ToString::to_string)
            .unwrap_or_default(),
        coffee.p_v
    )?;
    let failed = outcome.checks.iter().filter(|c| !c.pass).count();
    writeln!(
        err,
        "{} of {} cells within tolerance",
        outcome.checks.len() - failed,
        outcome.checks.len()
    )?;
    Ok(failed == 0)
}

fn run_serve(a: &ServeArgs) -> Result<()> {
    let (name, machine) = ModelCatalog::from_env()
        .load(&a.model)
        .map_err(mealy_pac::Error::from)?;
    match &a.listen {
        Some(addr) => {
            let listener = TcpListener::bind(addr).with_context(|| format!("binding {addr}"))?;
            eprintln!("serving {name} on {}", listener.local_addr()?);
            serve_tcp(Arc::new(machine), listener)?;
        }
        None => {
            let stdin = io::stdin();
            serve(&machine, BufReader::new(stdin.lock()), io::stdout().lock())?;
        }
    }
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if let Some(e) = e.downcast_ref::<mealy_pac::Error>() {
        e.exit_code()
    } else if e.downcast_ref::<io::Error>().is_some() {
        1
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let par = parallelism(cli.sequential);

    let result = match &cli.command {
        Command::Analyze(a) => run_analyze(a, par),
        Command::Exact(a) => run_exact(a, par),
        Command::Estimate(a) => run_estimate(a, par),
        Command::SampleSize(a) => run_sample_size(a),
        Command::Confidence(a) => run_confidence(a),
        Command::ReproduceTable(a) => match run_table(a, par) {
            Ok(true) => Ok(()),
            Ok(false) if a.strict => {
                eprintln!("error: some cells are outside tolerance");
                return ExitCode::from(5);
            }
            Ok(false) => Ok(()),
            Err(e) => Err(e),
        },
        Command::ServeModel(a) => run_serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
