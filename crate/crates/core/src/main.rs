use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use tcmi::cli::{augment, load_csv, save_csv, write_csv, ResultRow, RunReport, Stats, Transform};
use tcmi::estimators::{build_grid, GridStrategy, Orientation};
use tcmi::search::{search, SearchConfig, SearchMode};
use tcmi::synthdata::{self, GeneratorKind, GeneratorSpec, PowerDesign, Relation};
use tcmi::{expected_fraction, expected_fraction_mc, Dataset, Error, Scorer};

#[derive(Parser)]
#[command(name = "tcmi", version, about = "Total cumulative mutual information and optimal feature-subset selection")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Output::Json)]
    output: Output,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Output {
    Json,
    Tsv,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Grid {
    Full,
    Sample,
}

impl From<Grid> for GridStrategy {
    fn from(g: Grid) -> Self {
        match g {
            Grid::Full => GridStrategy::Full,
            Grid::Sample => GridStrategy::Sample,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Bnb,
    Exhaustive,
}

#[derive(Args, Serialize)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Name of the target column.
    #[arg(long)]
    target: String,
    #[arg(long, value_enum, default_value_t = Grid::Sample)]
    grid: Grid,
    /// Append transformed features, e.g. `negate,abs`.
    #[arg(long, value_delimiter = ',')]
    augment: Vec<String>,
    /// Pair single features with a shuffled copy of themselves.
    #[arg(long)]
    shuffle_correction: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Score one feature subset.
    Score {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        subset: Vec<String>,
    },
    /// Search for the best feature subsets.
    Select {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 3)]
        max_dim: usize,
        #[arg(long, default_value_t = 10)]
        top_k: usize,
        #[arg(long, value_enum, default_value_t = Mode::Bnb)]
        mode: Mode,
    },
    /// Write a synthetic dataset as CSV.
    Generate {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 200)]
        n: usize,
        /// Number of features for the `independent` suite.
        #[arg(long, default_value_t = 4)]
        d: usize,
        /// Noise standard deviation for `friedman1`.
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
        /// Add the correlated copies X11..X14 to `friedman1`.
        #[arg(long)]
        correlated: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Statistical power of the assessment score under additive target noise.
    Power {
        #[arg(long, value_enum, default_value_t = RelationArg::Linear)]
        relation: RelationArg,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, value_delimiter = ',', default_value = "0,0.2,0.4,0.6,0.8,1.0")]
        sigmas: Vec<f64>,
        #[arg(long, default_value_t = 0.95)]
        gamma: f64,
        #[arg(long, default_value_t = 100)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare the closed-form baseline with a permutation estimate.
    BaselineCheck {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        subset: Vec<String>,
        #[arg(long, default_value_t = 1000)]
        permutations: usize,
    },
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Suite {
    /// Linear target against the linear, exponential, step, sawtooth, random and constant families.
    Families,
    BivariateNormal,
    Friedman1,
    /// Independent uniform features and target.
    Independent,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum RelationArg {
    Linear,
    Quadratic,
    Sine,
    Independent,
}

impl From<RelationArg> for Relation {
    fn from(r: RelationArg) -> Self {
        match r {
            RelationArg::Linear => Relation::Linear,
            RelationArg::Quadratic => Relation::Quadratic,
            RelationArg::Sine => Relation::Sine,
            RelationArg::Independent => Relation::Independent,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::DegenerateTarget | Error::NoFeatures => 3,
        Error::BudgetExceeded { .. } => 4,
        _ => 2,
    }
}

fn load(args: &DataArgs) -> Result<Dataset, Error> {
    let data = load_csv(&args.data, &args.target)?;
    if args.augment.is_empty() {
        return Ok(data);
    }
    let transforms = args
        .augment
        .iter()
        .map(|t| t.parse::<Transform>())
        .collect::<Result<Vec<_>, _>>()?;
    augment(&data, &transforms)
}

fn scorer<'a>(data: &'a Dataset, args: &DataArgs) -> Result<Scorer<'a>, Error> {
    let s = Scorer::new(data, args.grid.into())?;
    Ok(if args.shuffle_correction {
        s.with_shuffle_correction(args.seed)
    } else {
        s
    })
}

fn families(n: usize, seed: u64) -> Result<Dataset, Error> {
    let col = |kind, param| synthdata::generate(&GeneratorSpec::new(kind, n).param(param).seed(seed));
    let mut features = vec![
        ("linear".to_string(), col(GeneratorKind::Linear, 0)?),
        ("exponential".to_string(), col(GeneratorKind::Exponential, 0)?),
    ];
    for r in [2, 4, 8] {
        features.push((format!("step_{r}"), col(GeneratorKind::Step, r)?));
    }
    for l in [8, 4, 2] {
        features.push((format!("sawtooth_{l}"), col(GeneratorKind::Sawtooth, l)?));
    }
    features.push(("random".to_string(), col(GeneratorKind::UniformRandom, 0)?));
    features.push(("constant".to_string(), col(GeneratorKind::Constant, 0)?));
    Dataset::new("y", col(GeneratorKind::Linear, 0)?, features)
}

fn run(cli: Cli) -> Result<Option<RunReport>, Error> {
    match cli.command {
        Command::Score { data, subset } => {
            let ds = load(&data)?;
            let score = scorer(&ds, &data)?.score(&subset)?;
            let mut report = RunReport::new("score", json!({ "data": data, "subset": subset }), data.seed);
            report.stats.evaluated_nodes = 1;
            report.results.push(ResultRow::from(&score));
            Ok(Some(report))
        }
        Command::Select {
            data,
            max_dim,
            top_k,
            mode,
        } => {
            let ds = load(&data)?;
            let config = SearchConfig {
                max_dim,
                top_k,
                grid_strategy: data.grid.into(),
                mode: match mode {
                    Mode::Bnb => SearchMode::BranchAndBound,
                    Mode::Exhaustive => SearchMode::Exhaustive,
                },
                shuffle_seed: data.shuffle_correction.then_some(data.seed),
                ..Default::default()
            };
            let result = search(&ds, &config)?;
            let mut report = RunReport::new(
                "select",
                json!({ "data": data, "max_dim": max_dim, "top_k": top_k, "mode": mode }),
                data.seed,
            );
            report.results = result.ranked.iter().map(ResultRow::from).collect();
            report.stats = Stats {
                evaluated_nodes: result.evaluated_nodes,
                pruned_nodes: result.pruned_nodes,
            };
            Ok(Some(report))
        }
        Command::Generate {
            suite,
            n,
            d,
            noise,
            correlated,
            seed,
            out,
        } => {
            let ds = match suite {
                Suite::Families => families(n, seed)?,
                Suite::BivariateNormal => synthdata::bivariate_normal_suite(n, seed)?,
                Suite::Friedman1 => synthdata::friedman1(n, seed, correlated, noise)?,
                Suite::Independent => PowerDesign {
                    n,
                    d,
                    relation: Relation::Independent,
                }
                .sample(seed, 0)?,
            };
            match out {
                Some(path) => save_csv(&ds, path)?,
                None => write_csv(&ds, std::io::stdout().lock())?,
            }
            Ok(None)
        }
        Command::Power {
            relation,
            n,
            d,
            sigmas,
            gamma,
            repeats,
            seed,
        } => {
            let design = PowerDesign {
                n,
                d,
                relation: relation.into(),
            };
            let subset = design.feature_names();
            let power = synthdata::power_analysis(&design, &subset, &sigmas, gamma, repeats, seed)?;
            let mut report = RunReport::new(
                "power",
                json!({ "relation": relation, "n": n, "d": d, "sigmas": sigmas, "gamma": gamma, "repeats": repeats }),
                seed,
            );
            report.details = Some(serde_json::to_value(&power).expect("plain data"));
            Ok(Some(report))
        }
        Command::BaselineCheck {
            data,
            subset,
            permutations,
        } => {
            let ds = load(&data)?;
            let grid = build_grid(&ds, &subset, data.grid.into())?;
            let mut checks = Vec::new();
            for o in Orientation::BOTH {
                let closed = expected_fraction(&ds, &subset, &grid, o)?;
                let mc = expected_fraction_mc(&ds, &subset, data.grid.into(), o, permutations, data.seed)?;
                let z = if mc.stderr > 0.0 {
                    (closed.value - mc.value) / mc.stderr
                } else {
                    0.0
                };
                checks.push(json!({
                    "orientation": o,
                    "closed_form": closed.value,
                    "monte_carlo": mc.value,
                    "stderr": mc.stderr,
                    "z": z,
                    "agree": z.abs() <= 3.0,
                }));
            }
            let score = scorer(&ds, &data)?.score(&subset)?;
            let mut report = RunReport::new(
                "baseline-check",
                json!({ "data": data, "subset": subset, "permutations": permutations }),
                data.seed,
            );
            report.results.push(ResultRow::from(&score));
            report.details = Some(json!({ "orientations": checks }));
            Ok(Some(report))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let output = cli.output;
    let start = Instant::now();
    match run(cli) {
        Ok(Some(mut report)) => {
            report.timing.wall_seconds = start.elapsed().as_secs_f64();
            match output {
                Output::Json => println!("{}", report.to_json()),
                Output::Tsv => print!("{}", report.to_tsv()),
            }
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
