//! `bewc`: command-line driver for coset secrecy code experiments.

mod error;
mod metrics;
mod table;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bewc_core::bounds::BoundReport;
use bewc_core::codefile::{code_to_json, read_code, write_code};
use bewc_core::constructions::{
    bklc_incremental, bsc_p_from_epsilon, ldpc_dual_code, random_code, subspace_exclusion_code,
};
use bewc_core::descent::{run_descent, DescentParams, Objective};
use bewc_core::{rng, GeneratorMatrix};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::table::{Summary, TableConfig};

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "BEWC_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "bewc",
    version,
    about = "Coset secrecy codes for the binary erasure wiretap channel"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the constrained descent and write the realized code and its trace.
    Descend(DescendArgs),
    /// Evaluate a code file.
    Eval(EvalArgs),
    /// Build a comparison code.
    Construct(ConstructArgs),
    /// Statistics of a seeded sample of random codes.
    SampleRandom(SampleArgs),
    /// Finite-blocklength bounds at one operating point.
    Bounds(BoundsArgs),
    /// One row per blocklength comparing every construction.
    Table(TableArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Equiv,
    Chi2,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Equiv => Objective::EquivocationLoss,
            ObjectiveArg::Chi2 => Objective::Chi2,
        }
    }
}

#[derive(Args, Clone)]
struct DescentArgs {
    /// Euclidean step length.
    #[arg(long, default_value_t = 1e-4)]
    step: f64,
    /// Inner steps per gradient evaluation.
    #[arg(long, default_value_t = 25)]
    n_g: usize,
    /// Controller smoothing factor.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Target fluctuation ratio.
    #[arg(long, default_value_t = 1.0)]
    tau_t: f64,
    /// Standard deviation of the per-iteration random offset.
    #[arg(long, default_value_t = 1e-6)]
    sigma: f64,
    /// Outer-iteration cap.
    #[arg(long, default_value_t = 1_000_000)]
    max_outer: usize,
}

impl DescentArgs {
    fn params(&self, objective: Objective, seed: u64) -> DescentParams {
        DescentParams {
            s: self.step,
            n_g: self.n_g,
            alpha: self.alpha,
            tau_t: self.tau_t,
            sigma: self.sigma,
            objective,
            seed,
            max_outer_iterations: self.max_outer,
            record_snapshots: false,
        }
    }
}

#[derive(Args)]
struct DescendArgs {
    #[arg(long)]
    kappa: usize,
    #[arg(long)]
    n: usize,
    /// Erasure probability; defaults to k/n.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_enum, default_value = "equiv")]
    objective: ObjectiveArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; defaults to $BEWC_OUT_DIR, then the working directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write q at every trace record as JSON.
    #[arg(long)]
    snapshots: bool,
    #[command(flatten)]
    descent: DescentArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct EvalArgs {
    /// JSON code file.
    code: PathBuf,
    /// Erasure probability; defaults to k/n.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Random,
    Ldpc,
    Sec,
    Bklc,
}

#[derive(Args)]
struct ConstructArgs {
    #[arg(value_enum)]
    kind: Kind,
    #[arg(long)]
    kappa: Option<usize>,
    /// Blocklength; for `sec` it is implied by `--u`.
    #[arg(long)]
    n: Option<usize>,
    /// Excluded subspace dimension for `sec`.
    #[arg(long)]
    u: Option<usize>,
    /// Seed matrix file for `bklc`.
    #[arg(long)]
    seed_code: Option<PathBuf>,
    /// Erasure probability setting the `bklc` crossover; defaults to k/n.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    kappa: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 256)]
    sample_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-code CSV; the summary always goes to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    n: usize,
    /// Message length; give this or `--kappa`.
    #[arg(long, conflicts_with = "kappa", required_unless_present = "kappa")]
    k: Option<usize>,
    #[arg(long)]
    kappa: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct TableArgs {
    #[arg(long)]
    kappa: usize,
    /// Blocklengths; defaults to 2^(kappa-4) * {1..15}.
    #[arg(long = "n", value_delimiter = ',')]
    ns: Vec<usize>,
    /// Erasure probability for every row; defaults to k/n per row.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_enum, default_value = "equiv")]
    objective: ObjectiveArg,
    #[arg(long, default_value_t = 256)]
    sample_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Descent runs per row; the best realized code is reported.
    #[arg(long, default_value_t = 1)]
    descent_runs: usize,
    /// Seed matrix for the BKLC column; the column is omitted without it.
    #[arg(long)]
    bklc_seed: Option<PathBuf>,
    /// Output file; defaults to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    descent: DescentArgs,
}

fn default_epsilon(n: usize, k: usize, given: Option<f64>) -> f64 {
    given.unwrap_or(k as f64 / n as f64)
}

fn out_dir(given: Option<PathBuf>) -> PathBuf {
    given
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn to_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

fn check_code_size(kappa: usize, n: usize) -> CliResult<()> {
    if kappa == 0 || kappa > 16 {
        return Err(CliError::Config(format!("kappa = {kappa} must be in 1..=16")));
    }
    let max = (1usize << kappa) - 1;
    if n < kappa || n > max {
        return Err(CliError::Config(format!(
            "n = {n} must be in {kappa}..={max} for kappa = {kappa}"
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct DescendReport {
    kappa: usize,
    n: usize,
    epsilon: f64,
    objective: String,
    seed: u64,
    value: Option<f64>,
    outer_iterations: Option<usize>,
    code: Option<PathBuf>,
    trace: PathBuf,
    snapshots: Option<PathBuf>,
}

fn descend(args: DescendArgs) -> CliResult<()> {
    check_code_size(args.kappa, args.n)?;
    let objective: Objective = args.objective.into();
    let eps = default_epsilon(args.n, args.n - args.kappa, args.epsilon);
    let mut params = args.descent.params(objective, args.seed);
    params.record_snapshots = args.snapshots;
    let dir = out_dir(args.out);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let stem = format!("k{}_n{}_{objective}_seed{}", args.kappa, args.n, args.seed);
    let trace_path = dir.join(format!("trace_{stem}.csv"));
    let code_path = dir.join(format!("code_{stem}.json"));
    let snap_path = dir.join(format!("snapshots_{stem}.json"));

    let result = run_descent(args.kappa, args.n, eps, &params);
    let trace = match &result {
        Ok(out) => &out.trace,
        Err(f) => &f.trace,
    };
    let mut buf = Vec::new();
    trace.write_csv(&mut buf)?;
    std::fs::write(&trace_path, buf).map_err(|e| CliError::Io(format!("{}: {e}", trace_path.display())))?;
    let snapshots = match trace.snapshots_json() {
        Some(text) => {
            std::fs::write(&snap_path, text).map_err(|e| CliError::Io(format!("{}: {e}", snap_path.display())))?;
            Some(snap_path)
        }
        None => None,
    };
    let mut report = DescendReport {
        kappa: args.kappa,
        n: args.n,
        epsilon: eps,
        objective: objective.to_string(),
        seed: args.seed,
        value: None,
        outer_iterations: None,
        code: None,
        trace: trace_path.clone(),
        snapshots,
    };
    match result {
        Ok(out) => {
            write_code(&code_path, &out.generator)?;
            report.value = Some(out.objective_value);
            report.outer_iterations = Some(out.outer_iterations);
            report.code = Some(code_path);
            emit(None, &to_json(&report))
        }
        Err(f) => {
            eprintln!("trace written to {}", trace_path.display());
            Err(f.error.into())
        }
    }
}

fn eval(args: EvalArgs) -> CliResult<()> {
    let g = read_code(&args.code)?;
    let eps = default_epsilon(g.n(), g.k(), args.epsilon);
    let e = metrics::evaluate(&g, eps)?;
    let text = match args.format {
        Format::Json => to_json(&e),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.serialize(&e)?;
            String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.to_string()))?).expect("csv is utf-8")
        }
    };
    emit(args.out.as_deref(), &text)
}

fn need<T>(value: Option<T>, flag: &str, kind: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::Config(format!("{kind} needs --{flag}")))
}

fn construct(args: ConstructArgs) -> CliResult<()> {
    let g: GeneratorMatrix = match args.kind {
        Kind::Random => {
            let (kappa, n) = (need(args.kappa, "kappa", "random")?, need(args.n, "n", "random")?);
            check_code_size(kappa, n)?;
            random_code(kappa, n, &mut rng::seeded(args.seed))?
        }
        Kind::Ldpc => {
            let (kappa, n) = (need(args.kappa, "kappa", "ldpc")?, need(args.n, "n", "ldpc")?);
            check_code_size(kappa, n)?;
            ldpc_dual_code(kappa, n, &mut rng::seeded(args.seed))?
        }
        Kind::Sec => {
            let kappa = need(args.kappa, "kappa", "sec")?;
            let u = need(args.u, "u", "sec")?;
            let g = subspace_exclusion_code(kappa, u)?;
            if let Some(n) = args.n {
                if n != g.n() {
                    return Err(CliError::Config(format!(
                        "sec with kappa = {kappa}, u = {u} has n = {}, not {n}",
                        g.n()
                    )));
                }
            }
            g
        }
        Kind::Bklc => {
            let seed = read_code(need(args.seed_code, "seed-code", "bklc")?)?;
            let n = need(args.n, "n", "bklc")?;
            if let Some(kappa) = args.kappa {
                if kappa != seed.kappa() {
                    return Err(CliError::Config(format!(
                        "seed code has kappa = {}, not {kappa}",
                        seed.kappa()
                    )));
                }
            }
            let eps = default_epsilon(n, n.saturating_sub(seed.kappa()), args.epsilon);
            bklc_incremental(&seed, n, bsc_p_from_epsilon(eps)?)?
        }
    };
    let mut text = code_to_json(&g);
    text.push('\n');
    emit(args.out.as_deref(), &text)
}

fn sample_random(args: SampleArgs) -> CliResult<()> {
    check_code_size(args.kappa, args.n)?;
    if args.sample_size < 2 {
        return Err(CliError::Config("sample size must be at least 2".into()));
    }
    let eps = default_epsilon(args.n, args.n - args.kappa, args.epsilon);
    let mut r = rng::seeded(args.seed);
    let mut rows = Vec::with_capacity(args.sample_size);
    for _ in 0..args.sample_size {
        let g = random_code(args.kappa, args.n, &mut r)?;
        rows.push(metrics::evaluate(&g, eps)?);
    }
    let eq: Option<Vec<f64>> = rows.iter().map(|e| e.eq_loss).collect();
    let chi: Option<Vec<f64>> = rows.iter().map(|e| e.chi2).collect();
    #[derive(Serialize)]
    struct SampleReport {
        kappa: usize,
        n: usize,
        epsilon: f64,
        sample_size: usize,
        seed: u64,
        eq_loss: Option<Summary>,
        chi2: Option<Summary>,
    }
    let report = SampleReport {
        kappa: args.kappa,
        n: args.n,
        epsilon: eps,
        sample_size: args.sample_size,
        seed: args.seed,
        eq_loss: eq.as_deref().map(Summary::of),
        chi2: chi.as_deref().map(Summary::of),
    };
    if let Some(path) = &args.out {
        let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        w.write_record(["index", "eq_loss", "chi2"])?;
        for (i, e) in rows.iter().enumerate() {
            let cell = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
            w.write_record([i.to_string(), cell(e.eq_loss), cell(e.chi2)])?;
        }
        w.flush()?;
    }
    emit(None, &to_json(&report))
}

fn bounds(args: BoundsArgs) -> CliResult<()> {
    let kappa = match (args.k, args.kappa) {
        (Some(k), _) if k <= args.n => args.n - k,
        (Some(k), _) => return Err(CliError::Config(format!("k = {k} exceeds n = {}", args.n))),
        (None, Some(kappa)) => kappa,
        (None, None) => unreachable!("clap requires one of --k and --kappa"),
    };
    if kappa > args.n {
        return Err(CliError::Config(format!("kappa = {kappa} exceeds n = {}", args.n)));
    }
    let eps = default_epsilon(args.n, args.n - kappa, args.epsilon);
    emit(None, &to_json(&BoundReport::compute(args.n, kappa, eps)?))
}

fn table_cmd(args: TableArgs) -> CliResult<()> {
    let ns = if args.ns.is_empty() {
        table::default_grid(args.kappa)?
    } else {
        args.ns.clone()
    };
    let bklc_seed = args.bklc_seed.as_ref().map(read_code).transpose()?;
    let objective: Objective = args.objective.into();
    let config = TableConfig {
        kappa: args.kappa,
        ns,
        epsilon: args.epsilon,
        objective,
        params: args.descent.params(objective, args.seed),
        sample_size: args.sample_size,
        seed: args.seed,
        descent_runs: args.descent_runs,
        bklc_seed,
    };
    let text = table::run(&config)?;
    emit(args.out.as_deref(), &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Descend(a) => descend(a),
        Command::Eval(a) => eval(a),
        Command::Construct(a) => construct(a),
        Command::SampleRandom(a) => sample_random(a),
        Command::Bounds(a) => bounds(a),
        Command::Table(a) => table_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bewc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
