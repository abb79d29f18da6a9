//! Monte-Carlo estimates of order statistics and trimmed sums.
//!
//! Samples are drawn in fixed-size batches; batch `b` uses substream
//! `seed.child(b)` and batch statistics are pooled in batch order, so results
//! are bit-identical whatever the number of worker threads.

use rand_distr::Distribution;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instances::DistributionSpec;
use crate::seed::Seed;
use crate::stats::RunningStats;

pub const MIN_SAMPLES: usize = 1_000;
const BATCH: usize = 4_096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n_samples)`.
    pub std_error: f64,
    pub n_samples: usize,
}

impl SampleEstimate {
    pub fn from_stats(stats: &RunningStats) -> Option<Self> {
        Some(SampleEstimate { mean: stats.mean(), std_error: stats.std_error()?, n_samples: stats.count() as usize })
    }
}

/// A per-draw statistic of `k` sorted values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    /// `X_(r:k)`, 1-based.
    Rank(usize),
    /// Sum of the `m` smallest values (`Y*`).
    SmallestSum(usize),
    /// Sum of the `ell` largest values (`Y`).
    LargestSum(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderStatQuery {
    pub dist: DistributionSpec,
    pub k: usize,
    pub stats: Vec<Statistic>,
}

impl OrderStatQuery {
    pub fn new(dist: DistributionSpec, k: usize, stats: Vec<Statistic>) -> Result<Self> {
        if k == 0 {
            return Err(Error::ParameterOutOfRange("k must be positive".into()));
        }
        for s in &stats {
            let (Statistic::Rank(i) | Statistic::SmallestSum(i) | Statistic::LargestSum(i)) = *s;
            if i == 0 || i > k {
                return Err(Error::ParameterOutOfRange(format!("{s:?} outside 1..={k}")));
            }
        }
        Ok(OrderStatQuery { dist, k, stats })
    }

    pub fn ranks(dist: DistributionSpec, k: usize) -> Result<Self> {
        Self::new(dist, k, (1..=k).map(Statistic::Rank).collect())
    }

    /// Every `SmallestSum(s)` and `LargestSum(s)` for `s` in `1..=k`, interleaved.
    pub fn trimmed_profile(dist: DistributionSpec, k: usize) -> Result<Self> {
        Self::new(dist, k, (1..=k).flat_map(|s| [Statistic::SmallestSum(s), Statistic::LargestSum(s)]).collect())
    }
}

/// Estimates every statistic of `query`, one [`SampleEstimate`] per entry.
pub fn estimate(query: &OrderStatQuery, n_samples: usize, seed: Seed) -> Result<Vec<SampleEstimate>> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::ParameterOutOfRange(format!("need at least {MIN_SAMPLES} samples, got {n_samples}")));
    }
    let batches = n_samples.div_ceil(BATCH);
    let partial: Vec<Vec<RunningStats>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let size = BATCH.min(n_samples - b * BATCH);
            run_batch(query, size, seed.child(b as u64))
        })
        .collect();
    let mut total = vec![RunningStats::new(); query.stats.len()];
    for batch in &partial {
        for (acc, s) in total.iter_mut().zip(batch) {
            acc.merge(s);
        }
    }
    Ok(total.iter().map(|s| SampleEstimate::from_stats(s).expect("n_samples >= 2")).collect())
}

fn run_batch(query: &OrderStatQuery, size: usize, seed: Seed) -> Vec<RunningStats> {
    let mut rng = seed.rng();
    let sampler = query.dist.sampler();
    let k = query.k;
    let mut draw = vec![0.0; k];
    let mut prefix = vec![0.0; k + 1];
    let mut acc = vec![RunningStats::new(); query.stats.len()];
    for _ in 0..size {
        for x in draw.iter_mut() {
            *x = sampler.sample(&mut rng);
        }
        draw.sort_unstable_by(f64::total_cmp);
        for (i, x) in draw.iter().enumerate() {
            prefix[i + 1] = prefix[i] + x;
        }
        for (a, s) in acc.iter_mut().zip(&query.stats) {
            let value = match *s {
                Statistic::Rank(r) => draw[r - 1],
                Statistic::SmallestSum(m) => prefix[m],
                Statistic::LargestSum(l) => draw[k - l..].iter().sum(),
            };
            a.push(value);
        }
    }
    acc
}

/// Estimates of `E[X_(r:k)]` for each requested rank.
pub fn estimate_order_stat(
    dist: DistributionSpec,
    k: usize,
    ranks: &[usize],
    n_samples: usize,
    seed: Seed,
) -> Result<Vec<SampleEstimate>> {
    let query = OrderStatQuery::new(dist, k, ranks.iter().map(|&r| Statistic::Rank(r)).collect())?;
    estimate(&query, n_samples, seed)
}

/// `(Y*, Y)`: sums of the `m` smallest and `ell` largest of `k` draws, from the same draws.
pub fn estimate_trimmed_sums(
    dist: DistributionSpec,
    k: usize,
    m: usize,
    ell: usize,
    n_samples: usize,
    seed: Seed,
) -> Result<(SampleEstimate, SampleEstimate)> {
    let query = OrderStatQuery::new(dist, k, vec![Statistic::SmallestSum(m), Statistic::LargestSum(ell)])?;
    let est = estimate(&query, n_samples, seed)?;
    Ok((est[0], est[1]))
}

/// `1 + |(E[Y] - E[Y*]) / E[Y*]|` from sampled means.
pub fn empirical_approx_factor(y_star: SampleEstimate, y: SampleEstimate) -> Result<f64> {
    if y_star.mean.is_nan() || y_star.std_error.is_nan() || y_star.mean.abs() <= 5.0 * y_star.std_error {
        return Err(Error::DenominatorNearZero { mean: y_star.mean, std_error: y_star.std_error });
    }
    Ok(1.0 + ((y.mean - y_star.mean) / y_star.mean).abs())
}

/// First-order standard error of [`empirical_approx_factor`].
///
/// The two partial-derivative terms are added rather than combined in
/// quadrature, which bounds the error for any correlation between `Y` and `Y*`.
pub fn approx_factor_std_error(y_star: SampleEstimate, y: SampleEstimate) -> f64 {
    let d = y_star.mean.abs();
    y.std_error / d + y.mean.abs() * y_star.std_error / (d * d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn within(e: &SampleEstimate, target: f64, z: f64) -> bool {
        (e.mean - target).abs() <= z * e.std_error
    }

    #[test]
    fn uniform_single_and_max_of_two() {
        let u = DistributionSpec::uniform(0.0, 1.0).unwrap();
        let e = estimate_order_stat(u, 1, &[1], 100_000, Seed(1)).unwrap();
        assert!(within(&e[0], 0.5, 3.0), "{e:?}");
        let e = estimate_order_stat(u, 2, &[2], 100_000, Seed(2)).unwrap();
        assert!(within(&e[0], 2.0 / 3.0, 3.0), "{e:?}");
    }

    #[test]
    fn normal_min_of_two() {
        let nrm = DistributionSpec::normal(0.0, 1.0).unwrap();
        let e = estimate_order_stat(nrm, 2, &[1], 1_000_000, Seed(3)).unwrap();
        let exact = -1.0 / std::f64::consts::PI.sqrt();
        assert!(within(&e[0], exact, 3.0), "{e:?}");
        assert!(e[0].mean > -1.0 && e[0].mean < 0.0);
    }

    #[test]
    fn full_sums_have_mean_k_mu() {
        let u = DistributionSpec::uniform(-1.0, 1.0).unwrap();
        let (ys, y) = estimate_trimmed_sums(u, 2, 2, 2, 50_000, Seed(4)).unwrap();
        assert!(within(&ys, 0.0, 3.0) && within(&y, 0.0, 3.0));
        assert!((ys.mean - y.mean).abs() < 1e-12);
    }

    #[test]
    fn trimmed_sums_against_bounds() {
        let nrm = DistributionSpec::normal(0.0, 1.0).unwrap();
        let (ys, y) = estimate_trimmed_sums(nrm, 2, 1, 1, 100_000, Seed(5)).unwrap();
        assert!(ys.mean > -0.828_427_124_746_19);
        assert!(within(&ys, -0.564_189_583_547_756_3, 3.0));
        assert!(within(&y, 0.564_189_583_547_756_3, 3.0));
        let u = DistributionSpec::uniform(-1.0, 1.0).unwrap();
        let (_, y) = estimate_trimmed_sums(u, 10, 1, 4, 100_000, Seed(6)).unwrap();
        assert!(y.mean <= 6.708_203_932_499_369 / 3f64.sqrt() + 3.0 * y.std_error);
    }

    #[test]
    fn too_few_samples_rejected() {
        let u = DistributionSpec::uniform(0.0, 1.0).unwrap();
        assert!(estimate_order_stat(u, 3, &[1], 999, Seed(0)).is_err());
        assert!(estimate_order_stat(u, 3, &[4], 1000, Seed(0)).is_err());
    }

    #[test]
    fn deterministic_for_a_seed() {
        let u = DistributionSpec::normal(0.0, 1.0).unwrap();
        let q = OrderStatQuery::ranks(u, 5).unwrap();
        assert_eq!(estimate(&q, 20_000, Seed(8)).unwrap(), estimate(&q, 20_000, Seed(8)).unwrap());
    }

    #[test]
    fn std_error_halves_when_samples_quadruple() {
        // doubling n scales SE by 1/sqrt(2); quadrupling halves it.
        let u = DistributionSpec::uniform(0.0, 1.0).unwrap();
        let a = estimate_order_stat(u, 4, &[2], 40_000, Seed(9)).unwrap()[0];
        let b = estimate_order_stat(u, 4, &[2], 80_000, Seed(10)).unwrap()[0];
        let c = estimate_order_stat(u, 4, &[2], 160_000, Seed(11)).unwrap()[0];
        let r2 = b.std_error / a.std_error;
        assert!((r2 - 0.5f64.sqrt()).abs() < 0.2 * 0.5f64.sqrt(), "{r2}");
        let r4 = c.std_error / a.std_error;
        assert!((r4 - 0.5).abs() < 0.1, "{r4}");
    }

    #[test]
    fn empirical_factor_cases() {
        let e = |mean| SampleEstimate { mean, std_error: 0.01, n_samples: 1000 };
        assert_eq!(empirical_approx_factor(e(2.0), e(2.0)).unwrap(), 1.0);
        assert_eq!(empirical_approx_factor(e(1.0), e(3.0)).unwrap(), 3.0);
        assert_eq!(empirical_approx_factor(e(-1.0), e(1.0)).unwrap(), 3.0);
        assert!(matches!(empirical_approx_factor(e(0.04), e(1.0)), Err(Error::DenominatorNearZero { .. })));
    }
}
