//! `rfs`: bound evaluation, bound verification and random-feasible-solution experiments.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime error,
//! 3 bound violation detected by `verify-bounds`.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rfs_core::bounds::{approx_factor_bound, corollary1_predicate, steiner_specific_bound};
use rfs_core::harness::{
    emit_aggregates, run_bound_verification, run_experiment, EdgeGrid, ExperimentConfig, ExperimentRun, Problem,
    VerificationPlan,
};
use rfs_core::instances::{assign_weights, gen_gnm_counted, pick_terminals};
use rfs_core::solvers::{mst, random_feasible_tree, steiner_2approx};
use rfs_core::{DistributionSpec, Error, MomentSpec, ProblemShape, Seed, SteinerInstance, WeightedGraph};

#[derive(Parser)]
#[command(name = "rfs", version, about = "Expected optimality of random feasible solutions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the approximation-factor bound (k, m, ell) or the Steiner bound (n, alpha).
    Bounds(BoundsArgs),
    /// Monte-Carlo check of every order-statistic and trimmed-sum bound.
    VerifyBounds(VerifyArgs),
    /// Weight-blind random spanning trees against the exact MST.
    MstExperiment(ExperimentArgs),
    /// Weight-blind random spanning trees against the Steiner 2-approximation.
    SteinerExperiment(ExperimentArgs),
    /// Write one generated instance as an edge list.
    DumpInstance(DumpArgs),
    /// Re-run an experiment from its config file, or re-solve a dumped instance.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    ell: Option<u64>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    alpha: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    mu: f64,
    #[arg(long)]
    sigma: f64,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Symmetric distribution; repeatable. Defaults to normal:0:1 and uniform:-1:1.
    #[arg(long = "dist", allow_hyphen_values = true)]
    dists: Vec<String>,
    /// k values for the per-rank checks.
    #[arg(long, value_delimiter = ',', default_value = "2,5,10,25,50")]
    rank_k: Vec<usize>,
    /// k values for the trimmed-sum and factor checks (all eligible m, ell).
    #[arg(long, value_delimiter = ',', default_value = "4,10,20,40")]
    shape_k: Vec<usize>,
    /// Explicit (k,m,ell) cell `k:m:ell`; repeatable; replaces --shape-k.
    #[arg(long)]
    cell: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    dist: Option<String>,
    #[arg(long)]
    full_grid: bool,
    #[arg(long)]
    n_min: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    terminal_fraction: Option<f64>,
    /// Per-trial CSV; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grouped means per (n, density bucket, dist).
    #[arg(long)]
    aggregate_out: Option<PathBuf>,
    /// Write the resolved config, for use with `replay`.
    #[arg(long)]
    save_config: Option<PathBuf>,
}

#[derive(Args)]
struct DumpArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value = "uniform:0:1", allow_hyphen_values = true)]
    dist: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also draw this many terminals and write them to --terminals-out.
    #[arg(long, requires = "terminals_out")]
    terminals: Option<usize>,
    #[arg(long)]
    terminals_out: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long, conflicts_with = "instance", required_unless_present = "instance")]
    config: Option<PathBuf>,
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Comma-separated terminal list for --instance.
    #[arg(long, value_delimiter = ',', requires = "instance")]
    terminals: Vec<usize>,
    /// Seed of the weight-blind tree for --instance.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Runtime(String),
    Violation(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ConfigInvalid(_)
            | Error::Parse { .. }
            | Error::ParameterOutOfRange(_)
            | Error::PreconditionViolated(_)
            | Error::DegenerateBound(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Bounds(a) => bounds(a),
        Command::VerifyBounds(a) => verify(a),
        Command::MstExperiment(a) => experiment(Problem::Mst, a),
        Command::SteinerExperiment(a) => experiment(Problem::Steiner, a),
        Command::DumpInstance(a) => dump(a),
        Command::Replay(a) => replay(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Violation(n)) => {
            eprintln!("{n} bound violation(s) detected");
            ExitCode::from(3)
        }
    }
}

fn output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn bounds(a: BoundsArgs) -> CliResult {
    let mom = MomentSpec::new(a.mu, a.sigma)?;
    let mut out = io::stdout().lock();
    match (a.k, a.m, a.ell, a.n, a.alpha) {
        (Some(k), Some(m), Some(ell), None, None) => {
            let shape = ProblemShape::new(k, m, ell)?;
            let r = approx_factor_bound(shape, mom)?;
            let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "undefined".into());
            writeln!(out, "case: {:?}", r.case_id)?;
            writeln!(out, "exact: {}", fmt_opt(r.exact_value))?;
            writeln!(out, "relaxed: {}", fmt_opt(r.relaxed_value))?;
            let consts: Vec<String> = r.simplified_constants.iter().map(|c| c.to_string()).collect();
            writeln!(out, "simplified: {}", consts.join(" "))?;
            writeln!(out, "corollary1: {}", corollary1_predicate(shape, mom))?;
            for n in &r.notes {
                writeln!(out, "note: {n}")?;
            }
        }
        (None, None, None, Some(n), Some(alpha)) => {
            writeln!(out, "steiner: {}", steiner_specific_bound(n, alpha, mom)?)?;
        }
        _ => return Err(Failure::Config("give either --k --m --ell or --n --alpha".into())),
    }
    Ok(())
}

fn verify(a: VerifyArgs) -> CliResult {
    let dists = if a.dists.is_empty() {
        vec![DistributionSpec::normal(0.0, 1.0)?, DistributionSpec::uniform(-1.0, 1.0)?]
    } else {
        a.dists.iter().map(|s| s.parse()).collect::<Result<Vec<_>, _>>()?
    };
    let plan = if a.cell.is_empty() {
        VerificationPlan::all_eligible(a.rank_k, &a.shape_k)
    } else {
        let shapes = a
            .cell
            .iter()
            .map(|c| {
                let parts: Vec<usize> = c.split(':').filter_map(|x| x.parse().ok()).collect();
                match parts[..] {
                    [k, m, ell] => Ok((k, m, ell)),
                    _ => Err(Failure::Config(format!("cell must be k:m:ell, got {c:?}"))),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        VerificationPlan { rank_ks: a.rank_k, shapes }
    };
    let report = run_bound_verification(&plan, &dists, a.samples, Seed(a.seed))?;
    let mut out = output(a.out.as_deref())?;
    report.write_csv(&mut out)?;
    out.flush()?;
    let violations = report.violations().count();
    eprintln!("{} checks, {} violations", report.checks.len(), violations);
    if violations > 0 {
        return Err(Failure::Violation(violations));
    }
    Ok(())
}

fn resolve_config(problem: Problem, a: &ExperimentArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::parse(
            &std::fs::read_to_string(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?,
        )?,
        None => ExperimentConfig::new(problem),
    };
    if cfg.problem != problem {
        return Err(Failure::Config(format!("config is for {}, not {problem}", cfg.problem)));
    }
    if let Some(s) = a.seed {
        cfg.seed = Seed(s);
    }
    if let Some(t) = a.trials {
        cfg.trials_per_cell = t;
    }
    if let Some(d) = &a.dist {
        cfg.dist = d.parse()?;
    }
    if a.full_grid {
        cfg.grid = EdgeGrid::Full;
    }
    if let Some(n) = a.n_min {
        cfg.n_min = n;
    }
    if let Some(n) = a.n_max {
        cfg.n_max = n;
    }
    if let Some(f) = a.terminal_fraction {
        cfg.terminal_fraction = f;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_run(run: &ExperimentRun, out: Option<&Path>, aggregate_out: Option<&Path>) -> CliResult {
    let mut w = output(out)?;
    run.write_csv(&mut w)?;
    w.flush()?;
    if let Some(p) = aggregate_out {
        let mut w = output(Some(p))?;
        emit_aggregates(run.records(), &mut w)?;
        w.flush()?;
    }
    eprintln!(
        "{} records, {} failed, {} dropped (nonpositive reference), {} (n, m) cells skipped (m < n - 1)",
        run.records().count(),
        run.failed(),
        run.dropped(),
        run.skipped.len()
    );
    Ok(())
}

fn experiment(problem: Problem, a: ExperimentArgs) -> CliResult {
    let cfg = resolve_config(problem, &a)?;
    if let Some(p) = &a.save_config {
        std::fs::write(p, cfg.to_config_string())?;
    }
    let run = run_experiment(&cfg)?;
    write_run(&run, a.out.as_deref(), a.aggregate_out.as_deref())
}

fn dump(a: DumpArgs) -> CliResult {
    let dist: DistributionSpec = a.dist.parse()?;
    let seed = Seed(a.seed);
    let (topology, rejections) = gen_gnm_counted(a.n, a.m, seed.child(0), true)?;
    let g = assign_weights(&topology, &dist, seed.child(1));
    let mut out = output(a.out.as_deref())?;
    g.write_edge_list(&mut out)?;
    out.flush()?;
    if let (Some(count), Some(path)) = (a.terminals, a.terminals_out.as_deref()) {
        let inst = pick_terminals(&g, count, seed.child(3))?;
        let list: Vec<String> = inst.terminals().iter().map(|t| t.to_string()).collect();
        std::fs::write(path, list.join(",") + "\n")?;
    }
    eprintln!("{rejections} disconnected draws rejected");
    Ok(())
}

fn replay(a: ReplayArgs) -> CliResult {
    if let Some(p) = &a.config {
        let text = std::fs::read_to_string(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
        let cfg = ExperimentConfig::parse(&text)?;
        let run = run_experiment(&cfg)?;
        return write_run(&run, a.out.as_deref(), None);
    }
    let path = a.instance.as_deref().expect("clap enforces --config or --instance");
    let file = File::open(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let g = WeightedGraph::read_edge_list(BufReader::new(file))?;
    let mut out = output(a.out.as_deref())?;
    let optimal = mst(&g)?;
    let random = random_feasible_tree(&g, Seed(a.seed))?;
    writeln!(out, "# mst")?;
    optimal.write_to(&g, &mut out)?;
    writeln!(out, "# random")?;
    random.write_to(&g, &mut out)?;
    if !a.terminals.is_empty() {
        let inst = SteinerInstance::new(g.clone(), a.terminals.iter().copied())?;
        writeln!(out, "# steiner")?;
        steiner_2approx(&inst)?.write_to(&g, &mut out)?;
    }
    out.flush()?;
    Ok(())
}
