//! `modelprob`: posterior model probabilities for the example problems, at a
//! single observation, over a grid, or for every figure panel.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use modelprob::sweep::{self, Grid, MethodChoice, RunConfig, DEFAULT_FIGURE_SEED};
use modelprob::{build_example, exact_posterior_probs, EstimateResult, ExampleConfig};

#[derive(Parser)]
#[command(
    name = "modelprob",
    version,
    about = "Posterior model probability estimators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate P(M=k|y) at one observation with every requested method
    Estimate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Observation
        #[arg(long, allow_hyphen_values = true)]
        y: f64,
        /// Also write the table as CSV to this file
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the methods over a grid of observations and write CSV
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        run: RunArgs,
        /// `min:max:count` or a comma-separated list; defaults to the example's grid
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<Grid>,
        /// Output file (standard output if absent)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate the data behind every figure panel
    Figures {
        /// Output directory
        #[arg(long, default_value = "figures")]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_FIGURE_SEED)]
        seed: u64,
        /// Override the per-figure draw counts
        #[arg(long = "T")]
        draws: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExampleId {
    Ex1,
    Ex2,
    Ex3,
    #[value(name = "ex3-3")]
    Ex3Three,
    Ex4,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_enum)]
    example: ExampleId,
    /// Binomial trials (ex3, ex3-3)
    #[arg(long)]
    n: Option<u64>,
    /// Beta(m, m) prior (ex3)
    #[arg(long)]
    m: Option<f64>,
    /// First hyperparameter (ex3-3, ex4)
    #[arg(long)]
    a: Option<f64>,
    /// Second hyperparameter (ex3-3, ex4)
    #[arg(long)]
    b: Option<f64>,
    /// Parameters as `name=value` pairs, e.g. `n=17,a=2.5,b=12.5,c=501.5,d=500`
    #[arg(long)]
    params: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    /// Comma-separated subset of exact, scott, congdon, gibbs, coupled
    #[arg(long, default_value = "exact,scott,congdon,gibbs")]
    methods: String,
    /// Monte Carlo draws per method
    #[arg(long = "T", default_value_t = 10_000)]
    draws: usize,
    #[arg(long, default_value_t = DEFAULT_FIGURE_SEED)]
    seed: u64,
    /// Gibbs sweeps discarded before averaging
    #[arg(long, default_value_t = 0)]
    burn_in: usize,
}

/// Failures split by exit status: bad input (2) and everything else (1).
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<modelprob::Error> for Failure {
    fn from(e: modelprob::Error) -> Self {
        match e {
            modelprob::Error::Config(_) | modelprob::Error::Domain { .. } => {
                Failure::Usage(e.into())
            }
            _ => Failure::Runtime(e.into()),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(anyhow::anyhow!(msg.into()))
}

impl ModelArgs {
    fn config(&self) -> Result<ExampleConfig, Failure> {
        let mut values: BTreeMap<String, f64> = BTreeMap::new();
        if let Some(params) = &self.params {
            for pair in params.split([',', ';']).filter(|s| !s.trim().is_empty()) {
                let (name, value) = pair
                    .split_once('=')
                    .ok_or_else(|| usage(format!("parameter `{pair}` is not name=value")))?;
                let value: f64 = value
                    .trim()
                    .parse()
                    .map_err(|_| usage(format!("parameter `{pair}` has a non-numeric value")))?;
                values.insert(name.trim().to_string(), value);
            }
        }
        let flags = [
            ("n", self.n.map(|n| n as f64)),
            ("m", self.m),
            ("a", self.a),
            ("b", self.b),
        ];
        for (name, v) in flags {
            if let Some(v) = v {
                values.insert(name.into(), v);
            }
        }
        let get = |name: &str| {
            values
                .get(name)
                .copied()
                .ok_or_else(|| usage(format!("missing parameter {name} for this example")))
        };
        let count = |name: &str| -> Result<u64, Failure> {
            let v = get(name)?;
            if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as u64)
            } else {
                Err(usage(format!("{name} = {v} must be a positive integer")))
            }
        };
        let allowed: &[&str] = match self.example {
            ExampleId::Ex1 | ExampleId::Ex2 => &[],
            ExampleId::Ex3 => &["n", "m"],
            ExampleId::Ex3Three => &["n", "a", "b", "c", "d"],
            ExampleId::Ex4 => &["a", "b"],
        };
        if let Some(extra) = values.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(usage(format!(
                "parameter {extra} does not apply to this example"
            )));
        }
        Ok(match self.example {
            ExampleId::Ex1 => ExampleConfig::Ex1,
            ExampleId::Ex2 => ExampleConfig::Ex2,
            ExampleId::Ex3 => ExampleConfig::Ex3TwoModel {
                n: count("n")?,
                m: get("m")?,
            },
            ExampleId::Ex3Three => ExampleConfig::Ex3ThreeModel {
                n: count("n")?,
                a: get("a")?,
                b: get("b")?,
                c: get("c")?,
                d: get("d")?,
            },
            ExampleId::Ex4 => ExampleConfig::Ex4 {
                a: get("a")?,
                b: get("b")?,
            },
        })
    }
}

impl RunArgs {
    fn config(&self, example: ExampleConfig, grid: Grid) -> Result<RunConfig, Failure> {
        let config = RunConfig {
            example,
            methods: MethodChoice::parse_list(&self.methods)?,
            grid,
            draws: self.draws,
            seed: self.seed,
            burn_in: self.burn_in,
        };
        config.validate()?;
        Ok(config)
    }
}

fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:.16e}")
    }
}

fn estimate(
    model: &ModelArgs,
    run: &RunArgs,
    y: f64,
    out: Option<&PathBuf>,
) -> Result<(), Failure> {
    let example = model.config()?;
    let config = run.config(example.clone(), Grid::List(vec![y]))?;
    let set = build_example(&example)?;
    let exact = exact_posterior_probs(&set, y)?;
    let results: Vec<EstimateResult> = sweep::estimate_point(&config, &set, y, 0)?;

    let methods: Vec<&str> = config.methods.iter().map(|m| m.as_str()).collect();
    println!(
        "example {} {} y = {y}  T = {}  seed = {}  methods = {}",
        example.id(),
        example.parameters(),
        config.draws,
        config.seed,
        methods.join(",")
    );
    println!(
        "{:<8} {:>5} {:>10} {:>10} {:>10} {:>11}",
        "method", "model", "prob", "stderr", "exact", "discrepancy"
    );
    let mut csv = String::new();
    let _ = writeln!(csv, "# tool: modelprob {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(csv, "# example: {}", example.id());
    let _ = writeln!(csv, "# parameters: {}", example.parameters());
    let _ = writeln!(csv, "# y: {}", fmt_num(y));
    let _ = writeln!(csv, "# T: {}", config.draws);
    let _ = writeln!(csv, "# seed: {}", config.seed);
    let _ = writeln!(csv, "# burn_in: {}", config.burn_in);
    let _ = writeln!(csv, "method,model,prob,stderr,exact,discrepancy");
    for r in &results {
        for (k, (&p, &se)) in r.probs.iter().zip(&r.stderrs).enumerate() {
            let diff = p - exact[k];
            println!(
                "{:<8} {:>5} {:>10.6} {:>10.6} {:>10.6} {:>11.2e}",
                r.method.as_str(),
                k + 1,
                p,
                se,
                exact[k],
                diff
            );
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{}",
                r.method.as_str(),
                k + 1,
                fmt_num(p),
                fmt_num(se),
                fmt_num(exact[k]),
                fmt_num(diff)
            );
        }
    }
    if let Some(path) = out {
        fs::write(path, csv)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(Failure::Runtime)?;
    }
    Ok(())
}

fn run_sweep(
    model: &ModelArgs,
    run: &RunArgs,
    grid: Option<Grid>,
    out: Option<&PathBuf>,
) -> Result<(), Failure> {
    let example = model.config()?;
    let grid = grid.unwrap_or(Grid::Default);
    grid.resolve(&example)?;
    let config = run.config(example, grid)?;
    let table = sweep::run_sweep(&config)?;
    match out {
        Some(path) => table.write_csv_file(path)?,
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            table
                .write_csv(&mut lock)
                .and_then(|_| lock.flush())
                .context("writing to standard output")
                .map_err(Failure::Runtime)?;
        }
    }
    Ok(())
}

fn figures(out: &Path, seed: u64, draws: Option<usize>) -> Result<(), Failure> {
    if draws == Some(0) {
        return Err(usage("T must be at least 1"));
    }
    for (path, table) in sweep::write_figures(out, seed, draws)? {
        eprintln!("wrote {} ({} rows)", path.display(), table.rows.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Estimate { model, run, y, out } => estimate(model, run, *y, out.as_ref()),
        Command::Sweep {
            model,
            run,
            grid,
            out,
        } => run_sweep(model, run, grid.clone(), out.as_ref()),
        Command::Figures { out, seed, draws } => figures(out, *seed, *draws),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
