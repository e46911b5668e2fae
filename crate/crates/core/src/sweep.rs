//! Grid sweeps over observations and their CSV form.
//!
//! A sweep evaluates the requested methods at every grid point and reports
//! the probability of the first model. Grid point `i` and method slot `j`
//! draw from the substream `substream_id(&[i, j])` of the master seed, so
//! adding grid points or methods never changes the other cells.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{self, EstimateResult, GibbsOptions};
use crate::models::{self, linspace, ExampleConfig, ModelSet};
use crate::samplers::{self, substream_id, RandomStream};

/// Version tag of the CSV layout written by [`SweepTable::write_csv`].
pub const CSV_SCHEMA: &str = "modelprob-sweep/1";

/// Column header line of the CSV layout.
pub const CSV_COLUMNS: &str =
    "y,exact,scott,congdon,gibbs,scott_se,congdon_se,gibbs_se,coupled,coupled_se";

/// Seed used by [`write_figures`] unless overridden.
pub const DEFAULT_FIGURE_SEED: u64 = 20_080_415;

const SLOT_WITHIN_MODEL: u64 = 0;
const SLOT_GIBBS: u64 = 1;
const SLOT_COUPLED: u64 = 2;

/// A method selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodChoice {
    Exact,
    Scott,
    Congdon,
    Gibbs,
    /// Common-random-number Congdon estimate; only for `ex2`.
    Coupled,
}

impl MethodChoice {
    pub fn as_str(&self) -> &'static str {
        match self {
            MethodChoice::Exact => "exact",
            MethodChoice::Scott => "scott",
            MethodChoice::Congdon => "congdon",
            MethodChoice::Gibbs => "gibbs",
            MethodChoice::Coupled => "coupled",
        }
    }

    /// Parses a comma-separated list, dropping duplicates and keeping a
    /// canonical order.
    pub fn parse_list(s: &str) -> Result<Vec<MethodChoice>> {
        let mut methods = s
            .split(',')
            .map(str::trim)
            .filter(|m| !m.is_empty())
            .map(MethodChoice::from_str)
            .collect::<Result<Vec<_>>>()?;
        methods.sort();
        methods.dedup();
        if methods.is_empty() {
            return Err(Error::Config("no methods requested".into()));
        }
        Ok(methods)
    }
}

impl FromStr for MethodChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(MethodChoice::Exact),
            "scott" => Ok(MethodChoice::Scott),
            "congdon" => Ok(MethodChoice::Congdon),
            "gibbs" => Ok(MethodChoice::Gibbs),
            "coupled" => Ok(MethodChoice::Coupled),
            other => Err(Error::Config(format!(
                "unknown method {other:?} (expected exact, scott, congdon, gibbs or coupled)"
            ))),
        }
    }
}

/// Observation values to sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    /// The example's default range.
    Default,
    List(Vec<f64>),
    /// `count` evenly spaced points from `min` to `max`.
    Linear {
        min: f64,
        max: f64,
        count: usize,
    },
}

impl Grid {
    pub fn resolve(&self, example: &ExampleConfig) -> Result<Vec<f64>> {
        let values = match self {
            Grid::Default => example.default_grid(),
            Grid::List(v) => v.clone(),
            Grid::Linear { min, max, count } => {
                if *count < 2 {
                    return Err(Error::Config(format!(
                        "grid needs at least two points, got {count}"
                    )));
                }
                if !(min < max) {
                    return Err(Error::Config(format!(
                        "grid bounds {min}:{max} are not increasing"
                    )));
                }
                linspace(*min, *max, *count)
            }
        };
        if values.is_empty() {
            return Err(Error::Config("empty observation grid".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("grid values must be finite".into()));
        }
        if values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config(
                "grid values must be strictly increasing".into(),
            ));
        }
        Ok(values)
    }

    pub fn describe(&self) -> String {
        match self {
            Grid::Default => "default".into(),
            Grid::List(v) => v
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(" "),
            Grid::Linear { min, max, count } => format!("{min}:{max}:{count}"),
        }
    }
}

impl FromStr for Grid {
    type Err = Error;

    /// `min:max:count` or a comma-separated list of values.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |what: &str| Error::Config(format!("invalid grid {s:?}: {what}"));
        let parse = |v: &str| v.trim().parse::<f64>().map_err(|_| bad("not a number"));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.len() {
            1 => Ok(Grid::List(s.split(',').map(parse).collect::<Result<_>>()?)),
            3 => Ok(Grid::Linear {
                min: parse(parts[0])?,
                max: parse(parts[1])?,
                count: parts[2]
                    .trim()
                    .parse()
                    .map_err(|_| bad("count is not a nonnegative integer"))?,
            }),
            _ => Err(bad("expected min:max:count or a comma-separated list")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub example: ExampleConfig,
    pub methods: Vec<MethodChoice>,
    pub grid: Grid,
    pub draws: usize,
    pub seed: u64,
    pub burn_in: usize,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("no methods requested".into()));
        }
        if self.draws == 0 {
            return Err(Error::Config("draw count T must be at least 1".into()));
        }
        if self.methods.contains(&MethodChoice::Coupled) && self.example != ExampleConfig::Ex2 {
            return Err(Error::Config(
                "the coupled method is only defined for ex2".into(),
            ));
        }
        Ok(())
    }
}

/// Estimates from every requested method at one observation.
pub fn estimate_point(
    config: &RunConfig,
    set: &ModelSet,
    y: f64,
    y_index: u64,
) -> Result<Vec<EstimateResult>> {
    config.validate()?;
    set.check_observation(y)?;
    let stream = |slot: u64| RandomStream::new(config.seed, substream_id(&[y_index, slot]));
    let wants = |m: MethodChoice| config.methods.contains(&m);

    let mut results = Vec::new();
    if wants(MethodChoice::Exact) {
        results.push(estimators::exact_estimate(set, y)?);
    }
    if wants(MethodChoice::Scott) || wants(MethodChoice::Congdon) {
        // both estimators share one set of within-model draws
        let samples = samplers::sample_within_model_posteriors(
            set,
            y,
            config.draws,
            &stream(SLOT_WITHIN_MODEL),
        )?;
        if wants(MethodChoice::Scott) {
            results.push(estimators::scott_estimate(set, &samples)?);
        }
        if wants(MethodChoice::Congdon) {
            results.push(estimators::congdon_estimate(set, &samples)?);
        }
    }
    if wants(MethodChoice::Gibbs) {
        let options = GibbsOptions {
            burn_in: config.burn_in,
            ..GibbsOptions::default()
        };
        results.push(estimators::gibbs_corrected(
            set,
            y,
            config.draws,
            options,
            &stream(SLOT_GIBBS),
        )?);
    }
    if wants(MethodChoice::Coupled) {
        results.push(estimators::congdon_coupled_ex2(
            y,
            config.draws,
            &mut stream(SLOT_COUPLED),
        )?);
    }
    Ok(results)
}

/// Probability of the first model and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub prob: f64,
    pub stderr: f64,
}

impl Cell {
    fn from_result(r: &EstimateResult) -> Self {
        Cell {
            prob: r.probs[0],
            stderr: r.stderrs[0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub y: f64,
    pub exact: Option<f64>,
    pub scott: Option<Cell>,
    pub congdon: Option<Cell>,
    pub gibbs: Option<Cell>,
    pub coupled: Option<Cell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub config: RunConfig,
    pub rows: Vec<SweepRow>,
}

/// Runs every grid point, in parallel, and assembles rows in grid order.
pub fn run_sweep(config: &RunConfig) -> Result<SweepTable> {
    config.validate()?;
    let set = models::build_example(&config.example)?;
    let grid = config.grid.resolve(&config.example)?;
    grid.iter().try_for_each(|&y| set.check_observation(y))?;
    let rows = grid
        .par_iter()
        .enumerate()
        .map(|(i, &y)| {
            let results = estimate_point(config, &set, y, i as u64)?;
            let mut row = SweepRow {
                y,
                exact: None,
                scott: None,
                congdon: None,
                gibbs: None,
                coupled: None,
            };
            for r in &results {
                use estimators::Method;
                match r.method {
                    Method::Exact => row.exact = Some(r.probs[0]),
                    Method::Scott => row.scott = Some(Cell::from_result(r)),
                    Method::Congdon => row.congdon = Some(Cell::from_result(r)),
                    Method::GibbsCorrected => row.gibbs = Some(Cell::from_result(r)),
                    Method::CongdonCoupled => row.coupled = Some(Cell::from_result(r)),
                    Method::GibbsIndicator | Method::DiracPlugin => {}
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        config: config.clone(),
        rows,
    })
}

/// 17 significant digits; NaN for undefined standard errors.
fn fmt_real(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:.16e}")
    }
}

impl SweepTable {
    pub fn to_csv_string(&self) -> String {
        let c = &self.config;
        let methods: Vec<&str> = c.methods.iter().map(|m| m.as_str()).collect();
        let mut out = String::new();
        let _ = writeln!(out, "# schema: {CSV_SCHEMA}");
        let _ = writeln!(out, "# tool: modelprob {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "# example: {}", c.example.id());
        let _ = writeln!(out, "# parameters: {}", c.example.parameters());
        let _ = writeln!(out, "# methods: {}", methods.join(","));
        let _ = writeln!(out, "# T: {}", c.draws);
        let _ = writeln!(out, "# seed: {}", c.seed);
        let _ = writeln!(out, "# burn_in: {}", c.burn_in);
        let _ = writeln!(out, "# grid: {}", c.grid.describe());
        let _ = writeln!(
            out,
            "# column: probability of model 1 and its Monte Carlo standard error"
        );
        let _ = writeln!(out, "{CSV_COLUMNS}");
        let opt = |v: Option<f64>| v.map(fmt_real).unwrap_or_default();
        for r in &self.rows {
            let prob = |c: Option<Cell>| opt(c.map(|c| c.prob));
            let se = |c: Option<Cell>| opt(c.map(|c| c.stderr));
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                fmt_real(r.y),
                opt(r.exact),
                prob(r.scott),
                prob(r.congdon),
                prob(r.gibbs),
                se(r.scott),
                se(r.congdon),
                se(r.gibbs),
                prob(r.coupled),
                se(r.coupled),
            );
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        writer.write_all(self.to_csv_string().as_bytes())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let io = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut file = fs::File::create(path).map_err(io)?;
        self.write_csv(&mut file).map_err(io)?;
        file.flush().map_err(io)
    }
}

/// One figure panel to regenerate.
#[derive(Debug, Clone)]
pub struct FigurePanel {
    pub file_name: String,
    pub config: RunConfig,
}

/// Draw counts used for figure data: 10^6 for the first figure, 10^4 otherwise.
pub const FIG1_DRAWS: usize = 1_000_000;
pub const FIG_DRAWS: usize = 10_000;

/// Panels behind the five figures. `draws`, when given, replaces every
/// panel's default draw count.
pub fn figure_panels(seed: u64, draws: Option<usize>) -> Vec<FigurePanel> {
    use MethodChoice::*;
    let t = |default: usize| draws.unwrap_or(default);
    let panel = |file_name: String, example, methods: &[MethodChoice], draws| FigurePanel {
        file_name,
        config: RunConfig {
            example,
            methods: methods.to_vec(),
            grid: Grid::Default,
            draws,
            seed,
            burn_in: 0,
        },
    };

    let mut panels = vec![
        panel(
            "fig1_ex1.csv".into(),
            ExampleConfig::Ex1,
            &[Exact, Scott, Congdon, Gibbs],
            t(FIG1_DRAWS),
        ),
        panel(
            "fig2_ex2.csv".into(),
            ExampleConfig::Ex2,
            &[Exact, Scott, Congdon, Coupled],
            t(FIG_DRAWS),
        ),
    ];
    // The first variant matches the figure caption, the second the
    // surrounding text; both are shipped.
    for m in [510.0, 100.0] {
        panels.push(panel(
            format!("fig3_ex3_n15_m{m}.csv"),
            ExampleConfig::Ex3TwoModel { n: 15, m },
            &[Exact, Congdon],
            t(FIG_DRAWS),
        ));
    }
    let three_model = [
        (17, 2.5, 12.5, 501.5, 500.0),
        (25, 1.5, 4.0, 540.0, 200.0),
        (13, 0.5, 100.5, 20.0, 10.0),
        (12, 0.3, 1.8, 200.0, 200.0),
    ];
    for (i, &(n, a, b, c, d)) in three_model.iter().enumerate() {
        panels.push(panel(
            format!("fig4_panel{}.csv", i + 1),
            ExampleConfig::Ex3ThreeModel { n, a, b, c, d },
            &[Exact, Congdon],
            t(FIG_DRAWS),
        ));
    }
    let ex4 = [(0.24, 8.9), (0.56, 0.7), (4.1, 0.46), (0.98, 0.081)];
    for (i, &(a, b)) in ex4.iter().enumerate() {
        panels.push(panel(
            format!("fig5_panel{}.csv", i + 1),
            ExampleConfig::Ex4 { a, b },
            &[Exact, Congdon],
            t(FIG_DRAWS),
        ));
    }
    panels
}

/// Regenerates every figure panel as a CSV file under `dir`.
pub fn write_figures(
    dir: &Path,
    seed: u64,
    draws: Option<usize>,
) -> Result<Vec<(PathBuf, SweepTable)>> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    figure_panels(seed, draws)
        .into_iter()
        .map(|panel| {
            let table = run_sweep(&panel.config)?;
            let path = dir.join(&panel.file_name);
            table.write_csv_file(&path)?;
            Ok((path, table))
        })
        .collect()
}
