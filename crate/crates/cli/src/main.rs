use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hypercount::distance::{dk_exact_from_pmf, estimate};
use hypercount::harness::config::{ExperimentConfig, Output};
use hypercount::harness::plot::write_outputs;
use hypercount::harness::sweep::{run_sweep, SweepTable};
use hypercount::hoeffding::{verify, ProjectionReport};
use hypercount::moments::{moment_report, Arithmetic, Guards};
use hypercount::oracle::{pmf_oracle, oracle_report, PmfFile};
use hypercount::pattern::remove_isolated_vertices;
use hypercount::sim::{simulate_z, SampleBatch};
use hypercount::surrogate::surrogates;
use hypercount::{Error, Pattern, ScheduleSpec};
use serde_json::{json, Value};

/// Subhypergraph counts in random hypergraphs: simulation, exact moments,
/// normal-approximation bounds and distances.
#[derive(Parser)]
#[command(name = "hypercount", version)]
struct Cli {
    /// Directory for result files; results go to stdout when unset.
    #[arg(long, global = true, env = "HYPERCOUNT_OUT")]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo realisations of the copy count.
    Simulate(SimulateArgs),
    /// Exact moments and their surrogates.
    Exact(ExactArgs),
    /// Bound and condition values over a grid of n.
    Bounds(GridArgs),
    /// Kurtosis surrogate against the exact excess kurtosis.
    Kurtosis(GridArgs),
    /// Distances to the normal law from a sample batch or a pmf.
    Distance(DistanceArgs),
    /// Identity checks.
    Verify {
        #[command(subcommand)]
        what: VerifyCommand,
    },
    /// Full experiment from a config file.
    Sweep(SweepArgs),
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Hoeffding reconstruction, completeness and the alpha identity.
    Hoeffding(HoeffdingArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Pattern file (`vertices: v` then `edge: i j ...` lines).
    #[arg(long, required_unless_present = "named", conflicts_with = "named")]
    pattern: Option<PathBuf>,
    /// Built-in pattern: edge, loop, 2-path, 2-matching, triangle, loop-pair, 3-edge, diamond.
    #[arg(long)]
    named: Option<String>,
    /// Edge probability per size: `p2=0.5`, `q1=n^-3`, `p3=2*n^-3/2`.
    #[arg(short = 'p', long = "prob", required = true)]
    probs: Vec<String>,
}

impl ModelArgs {
    fn load(&self) -> anyhow::Result<(Pattern, ScheduleSpec)> {
        let pattern = match (&self.pattern, &self.named) {
            (Some(path), _) => read_pattern(path)?,
            (None, Some(name)) => Pattern::named(name).with_context(|| format!("unknown pattern `{name}`"))?,
            (None, None) => bail!("give --pattern or --named"),
        };
        let schedule = ScheduleSpec::parse_assignments(&self.probs)?;
        let (core, _) = remove_isolated_vertices(&pattern)?;
        schedule.require(&core.distinct_sizes())?;
        Ok((pattern, schedule))
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(short, long)]
    n: usize,
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the values as CSV (`rep,value`).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Rational,
    Float,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(short, long)]
    n: usize,
    #[arg(long, value_enum, default_value = "float")]
    mode: Mode,
    /// Cross-check against the brute-force law and include it.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Grid of n, comma separated.
    #[arg(short = 'n', long = "n", value_delimiter = ',', required = true)]
    grid: Vec<u64>,
}

#[derive(Args)]
struct DistanceArgs {
    /// SampleBatch JSON (from `simulate`) or pmf JSON (`values`, `probabilities`).
    input: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    /// Centre for standardization; defaults to the sample or pmf mean.
    #[arg(long, requires = "sd")]
    mean: Option<f64>,
    /// Scale for standardization; defaults to the sample or pmf sd.
    #[arg(long, requires = "mean")]
    sd: Option<f64>,
}

#[derive(Args)]
struct HoeffdingArgs {
    /// Take pattern, schedule, grid, seed and replications from a config.
    #[arg(long, conflicts_with_all = ["pattern", "named", "probs", "grid"])]
    config: Option<PathBuf>,
    #[arg(long)]
    pattern: Option<PathBuf>,
    #[arg(long)]
    named: Option<String>,
    #[arg(short = 'p', long = "prob")]
    probs: Vec<String>,
    #[arg(short = 'n', long = "n", value_delimiter = ',')]
    grid: Vec<u64>,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

/// How a successful run ended.
#[derive(PartialEq)]
enum Status {
    Done,
    Skipped,
}

fn read_pattern(path: &Path) -> anyhow::Result<Pattern> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Pattern::parse(&text)?)
}

/// Writes `body` to `dir/name`, or to stdout without a directory.
fn emit(dir: Option<&Path>, name: &str, body: &str) -> anyhow::Result<()> {
    match dir {
        Some(d) => {
            std::fs::create_dir_all(d)?;
            let path = d.join(name);
            std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn emit_json(dir: Option<&Path>, name: &str, value: &impl serde::Serialize) -> anyhow::Result<()> {
    emit(dir, name, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn grid_config(model: &ModelArgs, grid: Vec<u64>, outputs: Vec<Output>) -> ExperimentConfig {
    ExperimentConfig {
        pattern: model.pattern.clone().unwrap_or_default(),
        schedule: model.probs.clone(),
        n_grid: grid,
        reps: 2,
        seed: 0,
        outputs,
        output_dir: PathBuf::new(),
        delta: 0.01,
        arithmetic: Arithmetic::Float,
        hoeffding_reps: 0,
        guards: Guards::default(),
    }
}

fn emit_table(dir: Option<&Path>, stem: &str, table: &SweepTable) -> anyhow::Result<Status> {
    match dir {
        Some(_) => {
            emit(dir, &format!("{stem}.csv"), &table.to_csv()?)?;
            emit_json(dir, &format!("{stem}.json"), table)?;
        }
        None => print!("{}", table.to_csv()?),
    }
    Ok(if table.has_skips() { Status::Skipped } else { Status::Done })
}

fn simulate(args: SimulateArgs, dir: Option<&Path>) -> anyhow::Result<Status> {
    let (pattern, schedule) = args.model.load()?;
    let spec = schedule.at(args.n as f64)?;
    let batch = simulate_z(&pattern, args.n, &spec, args.reps, args.seed)?;
    if let Some(path) = &args.csv {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["rep", "value"])?;
        for (i, v) in batch.values.iter().enumerate() {
            w.write_record([i.to_string(), v.to_string()])?;
        }
        w.flush()?;
    }
    emit_json(dir, "simulate.json", &batch)?;
    Ok(Status::Done)
}

fn exact(args: ExactArgs, dir: Option<&Path>) -> anyhow::Result<Status> {
    let (pattern, schedule) = args.model.load()?;
    let (core, isolated) = remove_isolated_vertices(&pattern)?;
    let n = args.n;
    let spec = schedule.at(n as f64)?;
    let arithmetic = match args.mode {
        Mode::Rational if !spec.is_exact() => bail!("rational mode needs decimal or exact probabilities"),
        Mode::Rational => Arithmetic::Rational,
        Mode::Float => Arithmetic::Float,
    };
    let guards = Guards::default();
    let mut out = json!({
        "isolated_vertices": isolated,
        "surrogates": surrogates(&core, n as f64, &spec)?,
    });
    let mut status = Status::Done;
    let report = match moment_report(&core, n, &spec, arithmetic, &guards) {
        Ok(r) => {
            if !r.skipped.is_empty() {
                status = Status::Skipped;
            }
            Some(r)
        }
        Err(e @ Error::Guard { .. }) => {
            out["skipped"] = Value::String(e.to_string());
            status = Status::Skipped;
            None
        }
        Err(e) => return Err(e.into()),
    };
    if args.oracle {
        let oracle = oracle_report(&core, n, &spec, arithmetic, &guards)?;
        if let Some(r) = &report {
            out["max_relative_difference"] = json!(r.max_relative_difference(&oracle));
        }
        let pmf = pmf_oracle::<f64>(&core, n, &spec, &guards)?;
        out["pmf"] = serde_json::to_value(PmfFile::from_pmf(&pmf))?;
        out["oracle"] = serde_json::to_value(oracle)?;
    }
    out["moments"] = serde_json::to_value(report)?;
    emit_json(dir, "exact.json", &out)?;
    Ok(status)
}

fn bounds(args: GridArgs, dir: Option<&Path>) -> anyhow::Result<Status> {
    let (pattern, _) = args.model.load()?;
    let cfg = grid_config(&args.model, args.grid, vec![Output::Bounds, Output::Conditions]);
    let table = run_sweep(&cfg, &pattern, default_workers())?;
    emit_table(dir, "bounds", &table)
}

fn kurtosis(args: GridArgs, dir: Option<&Path>) -> anyhow::Result<Status> {
    let (pattern, schedule) = args.model.load()?;
    if !schedule.is_homogeneous() {
        bail!("the kurtosis surrogate needs one probability for every edge size");
    }
    let cfg = grid_config(&args.model, args.grid, vec![Output::Kurtosis]);
    let table = run_sweep(&cfg, &pattern, default_workers())?;
    emit_table(dir, "kurtosis", &table)
}

fn distance(args: DistanceArgs, dir: Option<&Path>) -> anyhow::Result<Status> {
    let text = std::fs::read_to_string(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let out = if let Ok(batch) = serde_json::from_str::<SampleBatch>(&text) {
        let (mean, sd) = match (args.mean, args.sd) {
            (Some(m), Some(s)) => (m, s),
            _ => (batch.mean(), batch.variance().sqrt()),
        };
        let z = hypercount::sim::standardize(&batch.values, mean, sd)?;
        json!({ "source": "sample", "mean": mean, "sd": sd, "estimate": estimate(&z, args.delta)? })
    } else {
        let pmf: PmfFile = serde_json::from_str(&text)
            .or_else(|_| serde_json::from_value::<PmfFile>(serde_json::from_str::<Value>(&text)?["pmf"].clone()))
            .context("input is neither a sample batch nor a pmf")?;
        let pairs = pmf.pairs();
        let (mean, sd) = match (args.mean, args.sd) {
            (Some(m), Some(s)) => (m, s),
            _ => {
                let m: f64 = pairs.iter().map(|(x, w)| x * w).sum();
                (m, pairs.iter().map(|(x, w)| w * (x - m).powi(2)).sum::<f64>().sqrt())
            }
        };
        json!({ "source": "pmf", "mean": mean, "sd": sd, "exact": dk_exact_from_pmf(&pairs, mean, sd)? })
    };
    emit_json(dir, "distance.json", &out)?;
    Ok(Status::Done)
}

const RECONSTRUCTION_TOL: f64 = 1e-8;
const COMPLETENESS_TOL: f64 = 1e-9;

fn verify_hoeffding(args: HoeffdingArgs, dir: Option<&Path>) -> anyhow::Result<Status> {
    let (pattern, schedule, grid, reps, seed, guards) = match &args.config {
        Some(path) => {
            let cfg = ExperimentConfig::load(path)?;
            let pattern = cfg.read_pattern()?;
            let schedule = cfg.validate(&pattern)?;
            (pattern, schedule, cfg.n_grid, cfg.hoeffding_reps, cfg.seed, cfg.guards)
        }
        None => {
            let model = ModelArgs {
                pattern: args.pattern.clone(),
                named: args.named.clone(),
                probs: args.probs.clone(),
            };
            if args.grid.is_empty() {
                bail!("give --n or --config");
            }
            let (p, s) = model.load()?;
            (p, s, args.grid, args.reps, args.seed, Guards::default())
        }
    };
    let (core, _) = remove_isolated_vertices(&pattern)?;
    let mut reports: Vec<ProjectionReport> = Vec::new();
    let mut skipped = Vec::new();
    for &n in &grid {
        let spec = schedule.at(n as f64)?;
        match verify(&core, n as usize, &spec, reps, seed, &guards) {
            Ok(r) => reports.push(r),
            Err(e @ Error::Guard { .. }) => skipped.push(json!({ "n": n, "reason": e.to_string() })),
            Err(e) => return Err(e.into()),
        }
    }
    let worst = |f: &dyn Fn(&ProjectionReport) -> f64| reports.iter().map(f).fold(0.0, f64::max);
    let reconstruction = worst(&|r| r.max_reconstruction_deviation);
    let completeness = worst(&|r| r.completeness_deviation);
    let alpha = worst(&|r| {
        r.alpha
            .iter()
            .filter(|a| a.uniform)
            .map(|a| a.max_deviation)
            .fold(0.0, f64::max)
    });
    let pass = reconstruction < RECONSTRUCTION_TOL && completeness < COMPLETENESS_TOL && alpha < RECONSTRUCTION_TOL;
    emit_json(
        dir,
        "hoeffding.json",
        &json!({
            "pass": pass,
            "worst_reconstruction_deviation": reconstruction,
            "worst_completeness_deviation": completeness,
            "worst_alpha_deviation": alpha,
            "skipped": skipped,
            "reports": reports,
        }),
    )?;
    if !pass {
        bail!("Hoeffding identities violated");
    }
    Ok(if skipped.is_empty() { Status::Done } else { Status::Skipped })
}

fn sweep(args: SweepArgs, dir: Option<&Path>) -> anyhow::Result<Status> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let pattern = cfg.read_pattern()?;
    let table = run_sweep(&cfg, &pattern, args.workers.unwrap_or_else(default_workers))?;
    let out = dir.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_dir.clone());
    for path in write_outputs(&table, &out)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(if table.has_skips() { Status::Skipped } else { Status::Done })
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn run(cli: Cli) -> anyhow::Result<Status> {
    let dir = cli.out_dir.as_deref();
    match cli.command {
        Command::Simulate(a) => simulate(a, dir),
        Command::Exact(a) => exact(a, dir),
        Command::Bounds(a) => bounds(a, dir),
        Command::Kurtosis(a) => kurtosis(a, dir),
        Command::Distance(a) => distance(a, dir),
        Command::Verify {
            what: VerifyCommand::Hoeffding(a),
        } => verify_hoeffding(a, dir),
        Command::Sweep(a) => sweep(a, dir),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // exit code 2 is reserved for guard skips
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::Skipped) => {
            eprintln!("some quantities were skipped by feasibility guards");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
