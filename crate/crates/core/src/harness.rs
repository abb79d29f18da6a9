//! Experiment grids, bound-verification suites and their CSV output.
//!
//! # Record CSV
//!
//! `problem,n,m_edges,density,dist,trial,random_cost,reference_cost,ratio,rejections,status`
//!
//! One row per trial in grid order (n ascending, then m_edges, then trial).
//! `density` is `m_edges / C(n, 2)`; `ratio` is `random_cost / reference_cost`;
//! `rejections` counts disconnected `G(n, m)` draws discarded before the
//! instance was accepted. `status` is `ok` or `failed: <reason>` (costs blank).
//! Trials whose reference cost is not positive are dropped from the CSV and
//! counted in [`ExperimentRun::dropped`].
//!
//! # Aggregate CSV
//!
//! `problem,n,density_bucket,dist,trials,mean_ratio,std_error,median_ratio`
//!
//! Rows are grouped by `(problem, n, density_bucket, dist)` where
//! `density_bucket` is the density rounded to one decimal. `std_error` is the
//! sample standard deviation of the ratio over `sqrt(trials)`, blank for a
//! single trial.
//!
//! # Verification CSV
//!
//! `check,dist,k,r,m,ell,bound_lower,bound_upper,estimate,std_error,n_samples,retried,status,note`
//!
//! `check` is `order_stat`, `min_sum`, `max_sum` or `approx_factor`. Unused
//! index and bound columns are blank. `status` is `pass`, `fail` or
//! `skipped: <reason>`.
//!
//! All reals are written in shortest round-trip decimal form.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::bounds::{
    approx_factor_bound, order_stat_expectation_bounds, trimmed_max_sum_upper_bound, trimmed_min_sum_lower_bound,
    OrderIndex, ProblemShape,
};
use crate::error::{Error, Result};
use crate::instances::{assign_weights, gen_gnm_counted, pair_count, pick_terminals, DistributionSpec};
use crate::montecarlo::{
    approx_factor_std_error, empirical_approx_factor, estimate, OrderStatQuery, SampleEstimate, Statistic,
};
use crate::seed::Seed;
use crate::solvers::{mst, random_feasible_tree, steiner_2approx};
use crate::stats::RunningStats;

pub const RECORD_HEADER: [&str; 11] = [
    "problem",
    "n",
    "m_edges",
    "density",
    "dist",
    "trial",
    "random_cost",
    "reference_cost",
    "ratio",
    "rejections",
    "status",
];
pub const AGGREGATE_HEADER: [&str; 8] =
    ["problem", "n", "density_bucket", "dist", "trials", "mean_ratio", "std_error", "median_ratio"];
pub const VERIFICATION_HEADER: [&str; 14] = [
    "check",
    "dist",
    "k",
    "r",
    "m",
    "ell",
    "bound_lower",
    "bound_upper",
    "estimate",
    "std_error",
    "n_samples",
    "retried",
    "status",
    "note",
];

/// Standard errors of slack allowed in every statistical bound check.
pub const CHECK_Z: f64 = 3.0;
/// Sample multiplier for the single retry of a failed check.
pub const RETRY_FACTOR: usize = 10;
const RETRY_STREAM: u64 = 0x0052_4554_5259; // "RETRY"

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Problem {
    Mst,
    Steiner,
}

impl Problem {
    fn stream(self) -> u64 {
        match self {
            Problem::Mst => 1,
            Problem::Steiner => 2,
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Problem::Mst => "mst",
            Problem::Steiner => "steiner",
        })
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mst" => Ok(Problem::Mst),
            "steiner" => Ok(Problem::Steiner),
            other => Err(Error::ConfigInvalid(format!("unknown problem {other:?}"))),
        }
    }
}

/// Which edge counts are run for each `n`.
#[derive(Debug, Clone, PartialEq)]
pub enum EdgeGrid {
    /// Every `m` from `n - 1` to `C(n, 2)`.
    Full,
    /// `max(n - 1, round(f * C(n, 2)))` for each fraction `f`, deduplicated.
    Density(Vec<f64>),
}

impl EdgeGrid {
    pub fn default_density() -> Self {
        EdgeGrid::Density(vec![0.3, 0.5, 0.7, 1.0])
    }

    pub fn edge_counts(&self, n: usize) -> Vec<usize> {
        let pairs = pair_count(n);
        let lo = n - 1;
        let mut out: Vec<usize> = match self {
            EdgeGrid::Full => (lo..=pairs).collect(),
            EdgeGrid::Density(fs) => {
                fs.iter().map(|f| ((f * pairs as f64).round() as usize).clamp(lo, pairs)).collect()
            }
        };
        out.sort_unstable();
        out.dedup();
        out
    }
}

impl fmt::Display for EdgeGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeGrid::Full => f.write_str("full"),
            EdgeGrid::Density(fs) => {
                let parts: Vec<String> = fs.iter().map(|x| x.to_string()).collect();
                write!(f, "density:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for EdgeGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "full" {
            return Ok(EdgeGrid::Full);
        }
        let list = s
            .strip_prefix("density:")
            .ok_or_else(|| Error::ConfigInvalid(format!("grid must be `full` or `density:f1,f2,...`, got {s:?}")))?;
        let fs = list
            .split(',')
            .map(|x| {
                x.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|f| *f > 0.0 && *f <= 1.0)
                    .ok_or_else(|| Error::ConfigInvalid(format!("density {x:?} not in (0, 1]")))
            })
            .collect::<Result<Vec<_>>>()?;
        if fs.is_empty() {
            return Err(Error::ConfigInvalid("empty density list".into()));
        }
        Ok(EdgeGrid::Density(fs))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub n_min: usize,
    pub n_max: usize,
    pub grid: EdgeGrid,
    pub dist: DistributionSpec,
    pub trials_per_cell: usize,
    pub seed: Seed,
    /// Steiner only: `floor(terminal_fraction * n)` terminals.
    pub terminal_fraction: f64,
    /// Permit distributions with negative support.
    pub allow_signed_weights: bool,
}

impl ExperimentConfig {
    pub fn new(problem: Problem) -> Self {
        ExperimentConfig {
            problem,
            n_min: 4,
            n_max: 30,
            grid: EdgeGrid::default_density(),
            dist: DistributionSpec::Uniform { a: 0.0, b: 1.0 },
            trials_per_cell: 100,
            seed: Seed(0),
            terminal_fraction: 0.5,
            allow_signed_weights: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        if self.n_min < 3 || self.n_min > self.n_max {
            return bad(format!("need 3 <= n_min <= n_max, got {}..={}", self.n_min, self.n_max));
        }
        if self.trials_per_cell == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.terminal_fraction > 0.0 && self.terminal_fraction <= 1.0) {
            return bad(format!("terminal_fraction {} not in (0, 1]", self.terminal_fraction));
        }
        if !self.dist.is_nonnegative() && (self.problem == Problem::Steiner || !self.allow_signed_weights) {
            return bad(format!("{} has negative support; ratio experiments need nonnegative weights", self.dist));
        }
        if self.problem == Problem::Steiner && self.terminal_count(self.n_min) < 2 {
            return bad(format!(
                "terminal_fraction {} leaves fewer than 2 terminals at n = {}",
                self.terminal_fraction, self.n_min
            ));
        }
        Ok(())
    }

    pub fn terminal_count(&self, n: usize) -> usize {
        (self.terminal_fraction * n as f64).floor() as usize
    }

    /// `(n, m_edges)` cells in run order.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        (self.n_min..=self.n_max).flat_map(|n| self.grid.edge_counts(n).into_iter().map(move |m| (n, m))).collect()
    }

    /// Edge counts below `n - 1` that the full sweep omits (no connected draw exists).
    pub fn skipped_cells(&self) -> Vec<(usize, usize)> {
        match self.grid {
            EdgeGrid::Full => {
                (self.n_min..=self.n_max).flat_map(|n| (3..n.saturating_sub(1)).map(move |m| (n, m))).collect()
            }
            EdgeGrid::Density(_) => Vec::new(),
        }
    }

    /// Canonical `key = value` text; [`ExperimentConfig::parse`] reads it back.
    pub fn to_config_string(&self) -> String {
        format!(
            "problem = {}\nn_min = {}\nn_max = {}\ngrid = {}\ndist = {}\ntrials = {}\nseed = {}\nterminal_fraction = {}\nallow_signed_weights = {}\n",
            self.problem,
            self.n_min,
            self.n_max,
            self.grid,
            self.dist,
            self.trials_per_cell,
            self.seed.master(),
            self.terminal_fraction,
            self.allow_signed_weights
        )
    }

    /// Parses a `key = value` file. Blank lines and `#` comments are ignored;
    /// `problem` is required, every other key falls back to its default.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::ConfigInvalid(format!("line {}: expected `key = value`", i + 1)))?;
            if pairs.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(Error::ConfigInvalid(format!("line {}: duplicate key {:?}", i + 1, k.trim())));
            }
        }
        let problem: Problem =
            pairs.remove("problem").ok_or_else(|| Error::ConfigInvalid("missing `problem`".into()))?.parse()?;
        let mut cfg = ExperimentConfig::new(problem);
        for (k, v) in pairs {
            let num_err = || Error::ConfigInvalid(format!("invalid value for {k}: {v:?}"));
            match k.as_str() {
                "n_min" => cfg.n_min = v.parse().map_err(|_| num_err())?,
                "n_max" => cfg.n_max = v.parse().map_err(|_| num_err())?,
                "grid" => cfg.grid = v.parse()?,
                "dist" => cfg.dist = v.parse()?,
                "trials" => cfg.trials_per_cell = v.parse().map_err(|_| num_err())?,
                "seed" => cfg.seed = Seed(v.parse().map_err(|_| num_err())?),
                "terminal_fraction" => cfg.terminal_fraction = v.parse().map_err(|_| num_err())?,
                "allow_signed_weights" => cfg.allow_signed_weights = v.parse().map_err(|_| num_err())?,
                _ => return Err(Error::ConfigInvalid(format!("unknown key {k:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub problem: Problem,
    pub n: usize,
    pub m_edges: usize,
    pub dist_id: String,
    pub trial_index: usize,
    pub random_cost: f64,
    pub reference_cost: f64,
    pub ratio: f64,
    pub rejections: u32,
}

impl ExperimentRecord {
    pub fn density(&self) -> f64 {
        self.m_edges as f64 / pair_count(self.n) as f64
    }

    /// Density rounded to one decimal, in tenths.
    pub fn density_bucket(&self) -> u32 {
        (self.density() * 10.0).round() as u32
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrialOutcome {
    Recorded(ExperimentRecord),
    /// Reference cost was not positive; excluded from the CSV.
    Dropped(ExperimentRecord),
    Failed {
        n: usize,
        m_edges: usize,
        trial_index: usize,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRun {
    pub config: ExperimentConfig,
    pub outcomes: Vec<TrialOutcome>,
    pub skipped: Vec<(usize, usize)>,
}

impl ExperimentRun {
    pub fn records(&self) -> impl Iterator<Item = &ExperimentRecord> {
        self.outcomes.iter().filter_map(|o| match o {
            TrialOutcome::Recorded(r) => Some(r),
            _ => None,
        })
    }

    pub fn dropped(&self) -> usize {
        self.outcomes.iter().filter(|o| matches!(o, TrialOutcome::Dropped(_))).count()
    }

    pub fn failed(&self) -> usize {
        self.outcomes.iter().filter(|o| matches!(o, TrialOutcome::Failed { .. })).count()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(RECORD_HEADER)?;
        for o in &self.outcomes {
            match o {
                TrialOutcome::Recorded(r) => w.write_record([
                    r.problem.to_string(),
                    r.n.to_string(),
                    r.m_edges.to_string(),
                    r.density().to_string(),
                    r.dist_id.clone(),
                    r.trial_index.to_string(),
                    r.random_cost.to_string(),
                    r.reference_cost.to_string(),
                    r.ratio.to_string(),
                    r.rejections.to_string(),
                    "ok".into(),
                ])?,
                TrialOutcome::Dropped(_) => {}
                TrialOutcome::Failed { n, m_edges, trial_index, reason } => w.write_record([
                    self.config.problem.to_string(),
                    n.to_string(),
                    m_edges.to_string(),
                    (*m_edges as f64 / pair_count(*n) as f64).to_string(),
                    self.config.dist.to_string(),
                    trial_index.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    format!("failed: {reason}"),
                ])?,
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }
}

fn run_trial(cfg: &ExperimentConfig, n: usize, m_edges: usize, trial: usize) -> TrialOutcome {
    let seed = cfg.seed.path(&[cfg.problem.stream(), n as u64, m_edges as u64, trial as u64]);
    let attempt = || -> Result<ExperimentRecord> {
        let (topology, rejections) = gen_gnm_counted(n, m_edges, seed.child(0), true)?;
        let g = assign_weights(&topology, &cfg.dist, seed.child(1));
        let random = random_feasible_tree(&g, seed.child(2))?;
        let reference = match cfg.problem {
            Problem::Mst => mst(&g)?,
            Problem::Steiner => {
                let inst = pick_terminals(&g, cfg.terminal_count(n), seed.child(3))?;
                steiner_2approx(&inst)?
            }
        };
        Ok(ExperimentRecord {
            problem: cfg.problem,
            n,
            m_edges,
            dist_id: cfg.dist.to_string(),
            trial_index: trial,
            random_cost: random.cost(),
            reference_cost: reference.cost(),
            ratio: random.cost() / reference.cost(),
            rejections,
        })
    };
    match attempt() {
        Ok(r) if r.reference_cost > 0.0 => TrialOutcome::Recorded(r),
        Ok(r) => TrialOutcome::Dropped(r),
        Err(e) => TrialOutcome::Failed { n, m_edges, trial_index: trial, reason: e.to_string() },
    }
}

/// Runs every trial of the grid in parallel; outcomes come back in grid order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize, usize)> =
        cfg.cells().into_iter().flat_map(|(n, m)| (0..cfg.trials_per_cell).map(move |t| (n, m, t))).collect();
    let outcomes = jobs.par_iter().map(|&(n, m, t)| run_trial(cfg, n, m, t)).collect();
    Ok(ExperimentRun { config: cfg.clone(), outcomes, skipped: cfg.skipped_cells() })
}

/// Random weight-blind spanning tree against the exact MST.
pub fn run_mst_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    if cfg.problem != Problem::Mst {
        return Err(Error::ConfigInvalid("run_mst_experiment needs problem = mst".into()));
    }
    run_experiment(cfg)
}

/// Random weight-blind spanning tree against the Steiner 2-approximation.
pub fn run_steiner_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    if cfg.problem != Problem::Steiner {
        return Err(Error::ConfigInvalid("run_steiner_experiment needs problem = steiner".into()));
    }
    run_experiment(cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub problem: Problem,
    pub n: usize,
    /// Tenths: 3 means density ~0.3.
    pub density_bucket: u32,
    pub dist_id: String,
    pub trials: usize,
    pub mean_ratio: f64,
    pub std_error: Option<f64>,
    pub median_ratio: f64,
}

pub fn aggregate<'a>(records: impl IntoIterator<Item = &'a ExperimentRecord>) -> Result<Vec<AggregateRow>> {
    let mut groups: BTreeMap<(Problem, usize, u32, String), Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry((r.problem, r.n, r.density_bucket(), r.dist_id.clone())).or_default().push(r.ratio);
    }
    if groups.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(groups
        .into_iter()
        .map(|((problem, n, density_bucket, dist_id), ratios)| {
            let stats: RunningStats = ratios.iter().copied().collect();
            AggregateRow {
                problem,
                n,
                density_bucket,
                dist_id,
                trials: ratios.len(),
                mean_ratio: stats.mean(),
                std_error: stats.std_error(),
                median_ratio: median(ratios),
            }
        })
        .collect())
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    assert!(!xs.is_empty(), "median of empty sample");
    xs.sort_unstable_by(f64::total_cmp);
    let mid = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[mid]
    } else {
        (xs[mid - 1] + xs[mid]) / 2.0
    }
}

/// Groups records and writes the aggregate CSV.
pub fn emit_aggregates<'a, W: Write>(
    records: impl IntoIterator<Item = &'a ExperimentRecord>,
    out: W,
) -> Result<Vec<AggregateRow>> {
    let rows = aggregate(records)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATE_HEADER)?;
    for r in &rows {
        w.write_record([
            r.problem.to_string(),
            r.n.to_string(),
            (r.density_bucket as f64 / 10.0).to_string(),
            r.dist_id.clone(),
            r.trials.to_string(),
            r.mean_ratio.to_string(),
            r.std_error.map(|s| s.to_string()).unwrap_or_default(),
            r.median_ratio.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    OrderStat,
    MinSum,
    MaxSum,
    ApproxFactor,
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckKind::OrderStat => "order_stat",
            CheckKind::MinSum => "min_sum",
            CheckKind::MaxSum => "max_sum",
            CheckKind::ApproxFactor => "approx_factor",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub kind: CheckKind,
    pub dist_id: String,
    pub k: usize,
    pub r: Option<usize>,
    pub m: Option<usize>,
    pub ell: Option<usize>,
    pub bound_lower: Option<f64>,
    pub bound_upper: Option<f64>,
    pub estimate: Option<SampleEstimate>,
    /// For `ApproxFactor`, the estimate's mean is the empirical factor and
    /// its `std_error` the propagated standard error.
    pub retried: bool,
    pub status: CheckStatus,
    pub note: String,
}

impl CheckRow {
    fn new(kind: CheckKind, dist: &DistributionSpec, k: usize) -> Self {
        CheckRow {
            kind,
            dist_id: dist.to_string(),
            k,
            r: None,
            m: None,
            ell: None,
            bound_lower: None,
            bound_upper: None,
            estimate: None,
            retried: false,
            status: CheckStatus::Skipped(String::new()),
            note: String::new(),
        }
    }

    fn passes(&self, est: &SampleEstimate) -> bool {
        let slack = CHECK_Z * est.std_error;
        self.bound_lower.is_none_or(|lo| est.mean >= lo - slack)
            && self.bound_upper.is_none_or(|hi| est.mean <= hi + slack)
    }
}

/// Which checks [`run_bound_verification`] performs.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationPlan {
    /// Check every rank `1..=k` for each listed `k`.
    pub rank_ks: Vec<usize>,
    /// `(k, m, ell)` cells for the trimmed-sum and approximation-factor checks.
    pub shapes: Vec<(usize, usize, usize)>,
}

impl VerificationPlan {
    /// Every `(m, ell)` with `2m <= k` and `2(ell - 1) <= k`, for each `k`.
    pub fn all_eligible(rank_ks: Vec<usize>, shape_ks: &[usize]) -> Self {
        let shapes = shape_ks
            .iter()
            .flat_map(|&k| (1..=k / 2).flat_map(move |m| (1..=(k / 2 + 1).min(k)).map(move |ell| (k, m, ell))))
            .collect();
        VerificationPlan { rank_ks, shapes }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub checks: Vec<CheckRow>,
}

impl VerificationReport {
    pub fn count(&self, kind: CheckKind, status: &CheckStatus) -> usize {
        self.checks
            .iter()
            .filter(|c| c.kind == kind && std::mem::discriminant(&c.status) == std::mem::discriminant(status))
            .count()
    }

    pub fn violations(&self) -> impl Iterator<Item = &CheckRow> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail)
    }

    pub fn all_passed(&self) -> bool {
        self.violations().next().is_none()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        let idx = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
        let mut w = csv::Writer::from_writer(out);
        w.write_record(VERIFICATION_HEADER)?;
        for c in &self.checks {
            w.write_record([
                c.kind.to_string(),
                c.dist_id.clone(),
                c.k.to_string(),
                idx(c.r),
                idx(c.m),
                idx(c.ell),
                opt(c.bound_lower),
                opt(c.bound_upper),
                opt(c.estimate.map(|e| e.mean)),
                opt(c.estimate.map(|e| e.std_error)),
                c.estimate.map(|e| e.n_samples.to_string()).unwrap_or_default(),
                c.retried.to_string(),
                match &c.status {
                    CheckStatus::Pass => "pass".to_string(),
                    CheckStatus::Fail => "fail".to_string(),
                    CheckStatus::Skipped(why) => format!("skipped: {why}"),
                },
                c.note.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }
}

/// Re-estimates one statistic at `RETRY_FACTOR` times the sample count.
fn retry_estimate(
    dist: DistributionSpec,
    k: usize,
    stat: Statistic,
    n_samples: usize,
    seed: Seed,
) -> Result<SampleEstimate> {
    let q = OrderStatQuery::new(dist, k, vec![stat])?;
    Ok(estimate(&q, n_samples * RETRY_FACTOR, seed.child(RETRY_STREAM))?[0])
}

fn settle(row: &mut CheckRow, first: SampleEstimate, retry: impl FnOnce() -> Result<SampleEstimate>) -> Result<()> {
    if row.passes(&first) {
        row.estimate = Some(first);
        row.status = CheckStatus::Pass;
        return Ok(());
    }
    let second = retry()?;
    row.retried = true;
    row.status = if row.passes(&second) { CheckStatus::Pass } else { CheckStatus::Fail };
    row.estimate = Some(second);
    Ok(())
}

/// Samples every statistic in `plan` for each symmetric distribution and
/// compares it with its bound at [`CHECK_Z`] standard errors, retrying a
/// failed check once at [`RETRY_FACTOR`] times the samples.
pub fn run_bound_verification(
    plan: &VerificationPlan,
    dists: &[DistributionSpec],
    n_samples: usize,
    seed: Seed,
) -> Result<VerificationReport> {
    if let Some(d) = dists.iter().find(|d| !d.is_symmetric()) {
        return Err(Error::ConfigInvalid(format!("bound verification needs symmetric distributions, got {d}")));
    }
    if dists.is_empty() {
        return Err(Error::ConfigInvalid("no distributions given".into()));
    }
    let mut checks = Vec::new();
    for (di, &dist) in dists.iter().enumerate() {
        let dseed = seed.child(di as u64);
        let mom = dist.moments();

        for &k in &plan.rank_ks {
            let kseed = dseed.path(&[1, k as u64]);
            let est = estimate(&OrderStatQuery::ranks(dist, k)?, n_samples, kseed)?;
            for r in 1..=k {
                let mut row = CheckRow::new(CheckKind::OrderStat, &dist, k);
                row.r = Some(r);
                let (lo, hi) = order_stat_expectation_bounds(OrderIndex::new(r as u64, k as u64)?, mom);
                row.bound_lower = Some(lo);
                row.bound_upper = Some(hi);
                settle(&mut row, est[r - 1], || {
                    retry_estimate(dist, k, Statistic::Rank(r), n_samples, kseed.child(r as u64))
                })?;
                checks.push(row);
            }
        }

        let shape_ks: BTreeSet<usize> = plan.shapes.iter().map(|s| s.0).collect();
        for k in shape_ks {
            let kseed = dseed.path(&[2, k as u64]);
            let profile = estimate(&OrderStatQuery::trimmed_profile(dist, k)?, n_samples, kseed)?;
            let smallest = |m: usize| profile[2 * (m - 1)];
            let largest = |l: usize| profile[2 * (l - 1) + 1];
            let cells: Vec<(usize, usize)> = plan.shapes.iter().filter(|s| s.0 == k).map(|s| (s.1, s.2)).collect();
            let ms: BTreeSet<usize> = cells.iter().map(|c| c.0).collect();
            let ells: BTreeSet<usize> = cells.iter().map(|c| c.1).collect();

            for m in ms {
                let mut row = CheckRow::new(CheckKind::MinSum, &dist, k);
                row.m = Some(m);
                match ProblemShape::new(k as u64, m as u64, 1).and_then(|s| trimmed_min_sum_lower_bound(s, mom)) {
                    Ok(lb) => {
                        row.bound_lower = Some(lb);
                        settle(&mut row, smallest(m), || {
                            retry_estimate(dist, k, Statistic::SmallestSum(m), n_samples, kseed.path(&[1, m as u64]))
                        })?;
                    }
                    Err(e) => row.status = CheckStatus::Skipped(skip_reason(&e)),
                }
                checks.push(row);
            }
            for ell in ells {
                let mut row = CheckRow::new(CheckKind::MaxSum, &dist, k);
                row.ell = Some(ell);
                match ProblemShape::new(k as u64, 1, ell as u64).and_then(|s| trimmed_max_sum_upper_bound(s, mom)) {
                    Ok(ub) => {
                        row.bound_upper = Some(ub);
                        settle(&mut row, largest(ell), || {
                            retry_estimate(dist, k, Statistic::LargestSum(ell), n_samples, kseed.path(&[2, ell as u64]))
                        })?;
                    }
                    Err(e) => row.status = CheckStatus::Skipped(skip_reason(&e)),
                }
                checks.push(row);
            }
            for (m, ell) in cells {
                checks.push(factor_check(dist, k, m, ell, smallest(m), largest(ell), n_samples, kseed)?);
            }
        }
    }
    Ok(VerificationReport { checks })
}

fn skip_reason(e: &Error) -> String {
    match e {
        Error::PreconditionViolated(_) => "precondition".into(),
        other => other.to_string(),
    }
}

#[allow(clippy::too_many_arguments)]
fn factor_check(
    dist: DistributionSpec,
    k: usize,
    m: usize,
    ell: usize,
    y_star: SampleEstimate,
    y: SampleEstimate,
    n_samples: usize,
    seed: Seed,
) -> Result<CheckRow> {
    let mut row = CheckRow::new(CheckKind::ApproxFactor, &dist, k);
    row.m = Some(m);
    row.ell = Some(ell);
    let report =
        match ProblemShape::new(k as u64, m as u64, ell as u64).and_then(|s| approx_factor_bound(s, dist.moments())) {
            Ok(r) => r,
            Err(e) => {
                row.status = CheckStatus::Skipped(skip_reason(&e));
                return Ok(row);
            }
        };
    row.note = format!(
        "case={:?} relaxed={}",
        report.case_id,
        report.relaxed_value.map(|v| v.to_string()).unwrap_or_else(|| "undefined".into())
    );
    let Some(exact) = report.exact_value else {
        row.status = CheckStatus::Skipped("bound undefined".into());
        return Ok(row);
    };
    row.bound_upper = Some(exact);
    let factor = |ys: SampleEstimate, y: SampleEstimate| -> Result<SampleEstimate> {
        Ok(SampleEstimate {
            mean: empirical_approx_factor(ys, y)?,
            std_error: approx_factor_std_error(ys, y),
            n_samples: ys.n_samples,
        })
    };
    let first = match factor(y_star, y) {
        Ok(f) => f,
        Err(e @ Error::DenominatorNearZero { .. }) => {
            row.status = CheckStatus::Skipped(e.to_string());
            return Ok(row);
        }
        Err(e) => return Err(e),
    };
    settle(&mut row, first, || {
        let q = OrderStatQuery::new(dist, k, vec![Statistic::SmallestSum(m), Statistic::LargestSum(ell)])?;
        let est = estimate(&q, n_samples * RETRY_FACTOR, seed.path(&[3, m as u64, ell as u64, RETRY_STREAM]))?;
        factor(est[0], est[1])
    })?;
    Ok(row)
}
