//! Command-line front end: instance generation, penalty-weight computation,
//! SDP bounds, spectral diagnostics, annealing runs, batch benchmarks, and
//! integer-program gadgetization.

use std::fs::File;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use bigm::anneal::{run_anneal, AnnealConfig};
use bigm::gadgets::{gadgetize, PolyIntProgram};
use bigm::instances::{
    build_portfolio_lcbo, encode_units, feasibility_budget, gen_portfolio, gen_sparse_lcbo, gen_spp,
    greedy_portfolio, parse_price_csv, PortfolioSpec,
};
use bigm::model::{brute_force_solve, objective_value, penalty_value, qubo_from_lcbo, Assignment, BRUTE_FORCE_LIMIT};
use bigm::penalty::{m_ell1, m_sdp, optimal_m, PenaltyReport};
use bigm::sdp::{lower_bound_for, SdpConfig};
use bigm::spectrum::{delta0, full_spectrum, ising_encode_as, Provenance};
use bigm::{Error, Lcbo, Result};

#[derive(Parser)]
#[command(name = "bigm", version, about = "Penalty-weight toolkit for constrained binary optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark instance and emit its JSON.
    Gen {
        #[command(subcommand)]
        family: GenFamily,
    },
    /// Compute penalty weights for an instance.
    Reformulate {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = Recipe::Sdp)]
        recipe: Recipe,
        #[arg(long, default_value_t = 1)]
        delta: i64,
    },
    /// Certified SDP lower bound on the unconstrained minimum.
    SdpBound {
        instance: PathBuf,
        /// Drop the Y11 pin and box constraints from the relaxation.
        #[arg(long)]
        strict: bool,
    },
    /// Exhaustive spectral diagnostics of the penalized Hamiltonian.
    Spectrum {
        instance: PathBuf,
        #[arg(long = "M")]
        m: i64,
    },
    /// Trotterized annealing run with sampled measurements.
    Anneal {
        instance: PathBuf,
        /// Penalty weight: a number, or `sdp` / `ell1` to compute one.
        #[arg(long = "M", default_value = "sdp")]
        m: String,
        #[arg(long, default_value_t = 100.0)]
        time: f64,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        /// Cap the step count so the diagonal layers stay within this many
        /// two-qubit gates in total.
        #[arg(long)]
        two_qubit_budget: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write a per-bitstring histogram CSV here.
        #[arg(long)]
        histogram: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        delta: i64,
    },
    /// Batch benchmark over generated instances, one CSV row each.
    Bench(BenchArgs),
    /// Reduce a bounded integer program to a constrained binary program.
    Gadgetize {
        program: PathBuf,
        #[arg(long, default_value_t = 1)]
        delta: i64,
        /// Use pure power-of-two expansion coefficients.
        #[arg(long)]
        pure_powers: bool,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GenFamily {
    /// Row-sparse random LCBO with n/5 constraints.
    Sparse {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        s: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Set-partitioning instance.
    Spp {
        /// Number of subsets (binary variables).
        #[arg(long)]
        n: usize,
        /// Number of ground-set elements (constraints).
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0.25)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Discretized Markowitz portfolio as a binary LCBO.
    Portfolio {
        /// Number of assets.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        w: u32,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Price history CSV (first column ignored, one column per asset);
        /// synthetic prices are generated when absent.
        #[arg(long)]
        prices: Option<PathBuf>,
        /// Number of synthetic price intervals when no CSV is given.
        #[arg(long, default_value_t = 30)]
        t_steps: usize,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Recipe {
    Ell1,
    Sdp,
    Optimal,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClassLabel {
    Sparse,
    Spp,
    Portfolio,
}

impl ClassLabel {
    fn name(self) -> &'static str {
        match self {
            ClassLabel::Sparse => "sparse",
            ClassLabel::Spp => "spp",
            ClassLabel::Portfolio => "portfolio",
        }
    }
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    class: ClassLabel,
    /// Instance sizes (total binary variables), comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    /// Number of seeds per size (seeds 0..count).
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 5)]
    s: usize,
    #[arg(long, default_value_t = 0.25)]
    density: f64,
    /// Ground-set size for SPP; defaults to size/2.
    #[arg(long)]
    elements: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 2)]
    w: u32,
    #[arg(long, default_value_t = 1)]
    delta: i64,
    /// Record wall-clock timings per row (makes the CSV non-reproducible).
    #[arg(long)]
    timings: bool,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct BenchmarkRow {
    instance_id: String,
    n: usize,
    class: String,
    m_ell1: Option<i64>,
    m_sdp: Option<i64>,
    m_optimal: Option<i64>,
    delta0: Option<f64>,
    delta_ell1: Option<f64>,
    delta_sdp: Option<f64>,
    /// deltaSdp / deltaEll1 when both are defined.
    gap_ratio: Option<f64>,
    sdp_iterations: Option<usize>,
    sdp_ms: Option<u64>,
    total_ms: Option<u64>,
    error: String,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let payload = json!({ "error": "usage", "message": e.to_string() });
                eprintln!("{payload}");
                std::process::exit(2);
            }
            // --help / --version style output.
            print!("{e}");
            std::process::exit(0);
        }
    };
    init_thread_pool();
    if let Err(e) = run(cli) {
        let payload = json!({ "error": error_kind(&e), "message": e.to_string() });
        eprintln!("{payload}");
        std::process::exit(e.exit_code());
    }
}

fn init_thread_pool() {
    if let Ok(v) = std::env::var("BIGM_THREADS") {
        if let Ok(threads) = v.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
            }
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::DimensionMismatch(_) => "dimensionMismatch",
        Error::Overflow(_) => "overflow",
        Error::Infeasible => "infeasible",
        Error::SizeLimit { .. } => "sizeLimit",
        Error::RetryBudget(_) => "retryBudget",
        Error::InvalidInput(_) => "invalidInput",
        Error::Precondition(_) => "precondition",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    }
}

fn read_instance(path: &Path) -> Result<Lcbo> {
    let file = File::open(path)?;
    Ok(serde_json::from_reader(file)?)
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => {
            let mut f = File::create(path)?;
            writeln!(f, "{text}")?;
        }
        None => {
            // Tolerate downstream consumers (e.g. `head`) closing the pipe.
            if let Err(e) = writeln!(std::io::stdout(), "{text}") {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(e.into());
                }
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { family } => run_gen(family),
        Command::Reformulate { instance, recipe, delta } => {
            let lcbo = read_instance(&instance)?;
            let report = penalty_report(&lcbo, recipe, delta, None)?;
            emit_json(&report, None)
        }
        Command::SdpBound { instance, strict } => {
            let lcbo = read_instance(&instance)?;
            let cfg = if strict { SdpConfig::strict() } else { SdpConfig::default() };
            let (bound, result) = lower_bound_for(&lcbo, &cfg)?;
            emit_json(
                &json!({
                    "certifiedLowerBound": bound,
                    "primalValue": result.primal_value,
                    "primalResidual": result.primal_residual,
                    "dualResidual": result.dual_residual,
                    "iterations": result.iterations,
                    "status": result.status,
                }),
                None,
            )
        }
        Command::Spectrum { instance, m } => {
            let lcbo = read_instance(&instance)?;
            emit_json(&full_spectrum(&lcbo, m)?, None)
        }
        Command::Anneal { instance, m, time, steps, two_qubit_budget, shots, seed, histogram, delta } => {
            let lcbo = read_instance(&instance)?;
            run_anneal_command(&lcbo, &m, time, steps, two_qubit_budget, shots, seed, histogram.as_deref(), delta)
        }
        Command::Bench(args) => run_bench(&args),
        Command::Gadgetize { program, delta, pure_powers, out } => {
            let file = File::open(&program)?;
            let pip: PolyIntProgram = serde_json::from_reader(file)?;
            let (lcbo, map) = gadgetize(&pip, delta, pure_powers)?;
            emit_json(&json!({ "instance": lcbo, "variableMap": map }), out.as_deref())
        }
    }
}

fn run_gen(family: GenFamily) -> Result<()> {
    match family {
        GenFamily::Sparse { n, s, seed, out } => {
            let lcbo = gen_sparse_lcbo(n, s, seed)?;
            emit_json(&lcbo, out.as_deref())
        }
        GenFamily::Spp { n, m, density, seed, out } => {
            let lcbo = gen_spp(n, m, density, seed)?;
            emit_json(&lcbo, out.as_deref())
        }
        GenFamily::Portfolio { n, w, gamma, seed, prices, t_steps, out } => {
            let spec = match prices {
                Some(path) => {
                    let history = parse_price_csv(File::open(&path)?, "csv")?;
                    PortfolioSpec::from_history(&history, gamma, w)?
                }
                None => gen_portfolio(n, w, gamma, t_steps, seed)?,
            };
            let (lcbo, _map) = build_portfolio_lcbo(&spec)?;
            emit_json(&lcbo, out.as_deref())
        }
    }
}

fn penalty_report(lcbo: &Lcbo, recipe: Recipe, delta: i64, feasible: Option<Assignment>) -> Result<PenaltyReport> {
    let mut report = m_sdp(lcbo, delta, feasibility_budget(lcbo.n()), &SdpConfig::default(), feasible)?;
    if recipe == Recipe::Optimal {
        report.m_optimal = Some(optimal_m(lcbo, delta)?);
    }
    Ok(report)
}

fn resolve_weight(lcbo: &Lcbo, m: &str, delta: i64) -> Result<i64> {
    match m {
        "sdp" => Ok(m_sdp(lcbo, delta, feasibility_budget(lcbo.n()), &SdpConfig::default(), None)?.m_sdp),
        "ell1" => m_ell1(lcbo, delta),
        other => other
            .parse::<i64>()
            .map_err(|_| Error::InvalidInput(format!("penalty weight must be a number, `sdp`, or `ell1`, got `{other}`"))),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_anneal_command(
    lcbo: &Lcbo,
    m: &str,
    time: f64,
    steps: usize,
    two_qubit_budget: Option<usize>,
    shots: u64,
    seed: u64,
    histogram: Option<&Path>,
    delta: i64,
) -> Result<()> {
    let weight = resolve_weight(lcbo, m, delta)?;
    let steps = match two_qubit_budget {
        Some(budget) => {
            let qubo = qubo_from_lcbo(lcbo, weight)?;
            let ising = ising_encode_as(&qubo, Provenance::Combined { m: weight });
            let couplings = (0..lcbo.n())
                .flat_map(|i| (i + 1..lcbo.n()).map(move |j| (i, j)))
                .filter(|&(i, j)| ising.coupling(i, j) != 0.0)
                .count()
                .max(1);
            steps.min((budget / couplings).max(1))
        }
        None => steps,
    };
    let cfg = AnnealConfig { total_time: time, steps, shots, seed };
    let (result, _psi) = run_anneal(lcbo, weight, &cfg)?;
    if let Some(path) = histogram {
        write_histogram(lcbo, &result.counts, path)?;
    }
    emit_json(&json!({ "m": weight, "steps": steps, "result": result }), None)
}

fn write_histogram(lcbo: &Lcbo, counts: &std::collections::BTreeMap<String, u64>, path: &Path) -> Result<()> {
    let report = brute_force_solve(lcbo, BRUTE_FORCE_LIMIT)?;
    let denom = report.f_star - report.f_max_feasible;
    let mut wtr = csv::Writer::from_path(path).map_err(csv_error)?;
    wtr.write_record(["bitstring", "count", "feasible", "objective", "approxRatio"]).map_err(csv_error)?;
    for (bits, count) in counts {
        let x = Assignment(bits.bytes().map(|b| b - b'0').collect());
        let f = objective_value(lcbo, &x)?;
        let feasible = penalty_value(lcbo, &x)? == 0;
        let ratio = if feasible && denom != 0 {
            format!("{}", (f - report.f_max_feasible) as f64 / denom as f64)
        } else {
            String::new()
        };
        wtr.write_record([bits.as_str(), &count.to_string(), &feasible.to_string(), &f.to_string(), &ratio])
            .map_err(csv_error)?;
    }
    wtr.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::InvalidInput(format!("csv: {e}"))
}

struct BenchJob {
    id: String,
    size: usize,
    seed: u64,
}

fn run_bench(args: &BenchArgs) -> Result<()> {
    let class = args.class;
    let jobs: Vec<BenchJob> = args
        .sizes
        .iter()
        .flat_map(|&size| {
            (0..args.seeds).map(move |seed| BenchJob {
                id: format!("{}-n{}-s{}", class.name(), size, seed),
                size,
                seed,
            })
        })
        .collect();
    let rows: Vec<BenchmarkRow> = jobs.par_iter().map(|job| bench_row(args, job)).collect();
    let mut wtr = csv::Writer::from_path(&args.out).map_err(csv_error)?;
    for row in &rows {
        wtr.serialize(row).map_err(csv_error)?;
    }
    wtr.flush()?;
    Ok(())
}

fn bench_row(args: &BenchArgs, job: &BenchJob) -> BenchmarkRow {
    let start = Instant::now();
    let mut row = BenchmarkRow {
        instance_id: job.id.clone(),
        n: job.size,
        class: args.class.name().to_string(),
        m_ell1: None,
        m_sdp: None,
        m_optimal: None,
        delta0: None,
        delta_ell1: None,
        delta_sdp: None,
        gap_ratio: None,
        sdp_iterations: None,
        sdp_ms: None,
        total_ms: None,
        error: String::new(),
    };
    if let Err(e) = bench_fill(args, job, &mut row) {
        row.error = e.to_string();
    }
    if args.timings {
        row.total_ms = Some(start.elapsed().as_millis() as u64);
    } else {
        row.sdp_ms = None;
    }
    row
}

fn bench_fill(args: &BenchArgs, job: &BenchJob, row: &mut BenchmarkRow) -> Result<()> {
    let (lcbo, greedy_point) = bench_instance(args, job)?;
    row.n = lcbo.n();
    row.m_ell1 = Some(m_ell1(&lcbo, args.delta)?);
    let sdp_start = Instant::now();
    let report = m_sdp(&lcbo, args.delta, feasibility_budget(lcbo.n()), &SdpConfig::default(), greedy_point)?;
    row.sdp_ms = Some(sdp_start.elapsed().as_millis() as u64);
    row.m_sdp = Some(report.m_sdp);
    row.sdp_iterations = Some(report.sdp_iterations);
    if lcbo.n() <= BRUTE_FORCE_LIMIT {
        row.m_optimal = Some(optimal_m(&lcbo, args.delta)?);
        row.delta0 = delta0(&lcbo)?;
        let spec_ell1 = full_spectrum(&lcbo, row.m_ell1.unwrap())?;
        let spec_sdp = full_spectrum(&lcbo, report.m_sdp)?;
        row.delta_ell1 = Some(spec_ell1.delta_m);
        row.delta_sdp = Some(spec_sdp.delta_m);
        if spec_ell1.delta_m > 0.0 {
            row.gap_ratio = Some(spec_sdp.delta_m / spec_ell1.delta_m);
        }
    }
    Ok(())
}

/// Build the instance for one benchmark job; for portfolios also return the
/// greedy feasible point so the SDP recipe works above the brute-force limit.
fn bench_instance(args: &BenchArgs, job: &BenchJob) -> Result<(Lcbo, Option<Assignment>)> {
    match args.class {
        ClassLabel::Sparse => Ok((gen_sparse_lcbo(job.size, args.s.min(job.size), job.seed)?, None)),
        ClassLabel::Spp => {
            let elements = args.elements.unwrap_or_else(|| (job.size / 2).max(1));
            Ok((gen_spp(job.size, elements, args.density, job.seed)?, None))
        }
        ClassLabel::Portfolio => {
            if job.size % args.w as usize != 0 {
                return Err(Error::InvalidInput(format!(
                    "portfolio size {} is not a multiple of w = {}",
                    job.size, args.w
                )));
            }
            let assets = job.size / args.w as usize;
            let spec = gen_portfolio(assets, args.w, args.gamma, 30, job.seed)?;
            let (lcbo, map) = build_portfolio_lcbo(&spec)?;
            let units = greedy_portfolio(&spec)?;
            let point = encode_units(&map, lcbo.n(), &units)?;
            Ok((lcbo, Some(point)))
        }
    }
}
