//! Closed-form bounds on order statistics and on the expected approximation
//! factor of a randomly chosen feasible solution.
//!
//! Notation used throughout: `k` objects with i.i.d.-marginal costs of mean
//! `mu` and standard deviation `sigma`; the optimal solution has at least `m`
//! objects and any feasible solution at most `ell`. `Y*` is the sum of the `m`
//! smallest order statistics and `Y` the sum of the `ell` largest. The
//! quantity being bounded is `1 + |(E[Y] - E[Y*]) / E[Y*]|`.
//!
//! Every comparison against a threshold is an exact floating-point
//! comparison; inputs are parameters, not accumulated sums.

use std::fmt;

use crate::error::{Error, Result};

/// Mean and standard deviation of the per-object cost distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSpec {
    mu: f64,
    sigma: f64,
}

impl MomentSpec {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::ParameterOutOfRange(format!("mean must be finite, got {mu}")));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::ParameterOutOfRange(format!(
                "standard deviation must be positive and finite, got {sigma}"
            )));
        }
        Ok(MomentSpec { mu, sigma })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Object count `k`, optimal-size lower bound `m`, feasible-size upper bound `ell`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProblemShape {
    k: u64,
    m: u64,
    ell: u64,
}

impl ProblemShape {
    pub fn new(k: u64, m: u64, ell: u64) -> Result<Self> {
        if k == 0 || m == 0 || ell == 0 {
            return Err(Error::ParameterOutOfRange(format!("k, m and ell must be positive (k={k}, m={m}, ell={ell})")));
        }
        if m > k || ell > k {
            return Err(Error::ParameterOutOfRange(format!("m and ell must not exceed k (k={k}, m={m}, ell={ell})")));
        }
        Ok(ProblemShape { k, m, ell })
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn ell(&self) -> u64 {
        self.ell
    }

    /// `m / k <= 1/2`.
    pub fn min_sum_eligible(&self) -> bool {
        2 * self.m <= self.k
    }

    /// `(ell - 1) / k <= 1/2`.
    pub fn max_sum_eligible(&self) -> bool {
        2 * (self.ell - 1) <= self.k
    }

    pub fn theorem4_eligible(&self) -> bool {
        self.min_sum_eligible() && self.max_sum_eligible()
    }
}

/// Rank `r` (1-based) among `k` order statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OrderIndex {
    r: u64,
    k: u64,
}

impl OrderIndex {
    pub fn new(r: u64, k: u64) -> Result<Self> {
        if r == 0 || r > k {
            return Err(Error::ParameterOutOfRange(format!("rank {r} outside 1..={k}")));
        }
        Ok(OrderIndex { r, k })
    }

    pub fn r(&self) -> u64 {
        self.r
    }

    pub fn k(&self) -> u64 {
        self.k
    }
}

/// `H_{n,1/2} = sum_{i=1..n} 1/sqrt(i)`, summed in ascending `i`.
///
/// Panics if `n == 0`.
pub fn harmonic_half(n: u64) -> f64 {
    assert!(n >= 1, "harmonic_half requires n >= 1");
    (1..=n).map(|i| 1.0 / (i as f64).sqrt()).sum()
}

/// `(2 sqrt(n+1) - 2, 2 sqrt(n) - 1)`: strict lower and inclusive upper
/// bound on [`harmonic_half`].
pub fn harmonic_half_bounds(n: u64) -> (f64, f64) {
    assert!(n >= 1, "harmonic_half_bounds requires n >= 1");
    let nf = n as f64;
    (2.0 * (nf + 1.0).sqrt() - 2.0, 2.0 * nf.sqrt() - 1.0)
}

/// Bounds on `E[X_(r:k)]` for a symmetric distribution with the given moments.
///
/// Branches are selected with integer arithmetic (`2r <= k`, `2(r-1) >= k`);
/// at the boundary ranks both formulas agree.
pub fn order_stat_expectation_bounds(idx: OrderIndex, mom: MomentSpec) -> (f64, f64) {
    let (r, k) = (idx.r as f64, idx.k as f64);
    let (mu, sigma) = (mom.mu, mom.sigma);

    let lower = if 2 * idx.r <= idx.k {
        mu - sigma * (k / (2.0 * r)).sqrt()
    } else {
        mu - sigma * (k * (k - r) / (2.0 * r * r)).sqrt()
    };

    let tail = k - r + 1.0;
    let upper = if 2 * (idx.r - 1) >= idx.k {
        mu + sigma * (k / (2.0 * tail)).sqrt()
    } else {
        mu + sigma * (k * (r - 1.0) / (2.0 * tail * tail)).sqrt()
    };

    (lower, upper)
}

/// `sigma * sqrt(2k) * (sqrt(m+1) - 1)`: the spread term of the `E[Y*]` bound.
fn min_sum_spread(shape: &ProblemShape, mom: &MomentSpec) -> f64 {
    mom.sigma * (2.0 * shape.k as f64).sqrt() * ((shape.m as f64 + 1.0).sqrt() - 1.0)
}

/// Strict lower bound on `E[Y*]`: `m mu - sigma sqrt(2k) (sqrt(m+1) - 1)`.
pub fn trimmed_min_sum_lower_bound(shape: ProblemShape, mom: MomentSpec) -> Result<f64> {
    if !shape.min_sum_eligible() {
        return Err(Error::PreconditionViolated(format!(
            "lower bound on the m smallest requires 2m <= k (m={}, k={})",
            shape.m, shape.k
        )));
    }
    Ok(shape.m as f64 * mom.mu - min_sum_spread(&shape, &mom))
}

/// Upper bound on `E[Y]`: `ell mu + (sigma sqrt(2k) / 2) (2 sqrt(ell) - 1)`.
pub fn trimmed_max_sum_upper_bound(shape: ProblemShape, mom: MomentSpec) -> Result<f64> {
    if !shape.max_sum_eligible() {
        return Err(Error::PreconditionViolated(format!(
            "upper bound on the ell largest requires 2(ell-1) <= k (ell={}, k={})",
            shape.ell, shape.k
        )));
    }
    let ell = shape.ell as f64;
    let half_spread = mom.sigma * (2.0 * shape.k as f64).sqrt() / 2.0;
    Ok(ell * mom.mu + half_spread * (2.0 * ell.sqrt() - 1.0))
}

/// Mean at which the `E[Y*]` lower bound changes sign:
/// `sigma sqrt(2k) (sqrt(m+1) - 1) / m`.
pub fn approx_factor_threshold(shape: ProblemShape, mom: MomentSpec) -> f64 {
    min_sum_spread(&shape, &mom) / shape.m as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundCase {
    /// `mu < threshold`: the `E[Y*]` lower bound is negative.
    NegativeDenominator,
    /// `mu > threshold`: the `E[Y*]` lower bound is positive.
    PositiveDenominator,
    /// `mu == threshold`: the `E[Y*]` lower bound is zero and the factor is unbounded.
    Degenerate,
}

/// A constant the approximation-factor bound simplifies to under some side condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Simplification {
    Two,
    Three,
    Four,
    /// Smallest `eps >= 2` with `mu <= sigma k (eps - 3) / (ell - 2m + eps m) < threshold`.
    EpsilonGe2(f64),
    /// `eps = k + ell mu / sigma`, from `threshold < mu <= sigma (eps - k) / ell`.
    EpsilonGeK(f64),
}

impl Simplification {
    pub fn value(&self) -> f64 {
        match *self {
            Simplification::Two => 2.0,
            Simplification::Three => 3.0,
            Simplification::Four => 4.0,
            Simplification::EpsilonGe2(e) | Simplification::EpsilonGeK(e) => e,
        }
    }
}

impl fmt::Display for Simplification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Simplification::Two => write!(f, "2"),
            Simplification::Three => write!(f, "3"),
            Simplification::Four => write!(f, "4"),
            Simplification::EpsilonGe2(e) => write!(f, "eps>=2:{e}"),
            Simplification::EpsilonGeK(e) => write!(f, "eps>=k:{e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub case_id: BoundCase,
    /// Bound from the un-relaxed `E[Y]` / `E[Y*]` expressions.
    pub exact_value: Option<f64>,
    /// The piecewise closed form in terms of `sigma * k`.
    pub relaxed_value: Option<f64>,
    pub simplified_constants: Vec<Simplification>,
    pub notes: Vec<String>,
}

impl BoundReport {
    /// Smallest reported constant, ignoring the `eps >= k` case.
    pub fn headline_constant(&self) -> Option<f64> {
        self.simplified_constants
            .iter()
            .filter(|s| !matches!(s, Simplification::EpsilonGeK(_)))
            .map(Simplification::value)
            .reduce(f64::min)
    }

    pub fn has(&self, wanted: Simplification) -> bool {
        self.simplified_constants.iter().any(|s| std::mem::discriminant(s) == std::mem::discriminant(&wanted))
    }
}

/// Piecewise upper bound on `1 + |(E[Y] - E[Y*]) / E[Y*]|`.
///
/// `sigma k` is the product `sigma * k` everywhere. All satisfied
/// simplifications are reported, each with its side condition in `notes`.
pub fn approx_factor_bound(shape: ProblemShape, mom: MomentSpec) -> Result<BoundReport> {
    if !shape.theorem4_eligible() {
        return Err(Error::PreconditionViolated(format!(
            "approximation-factor bound requires 2m <= k and 2(ell-1) <= k (k={}, m={}, ell={})",
            shape.k, shape.m, shape.ell
        )));
    }
    let (k, m, ell) = (shape.k as f64, shape.m as f64, shape.ell as f64);
    let (mu, sigma) = (mom.mu, mom.sigma);
    let sigma_k = sigma * k;
    let threshold = approx_factor_threshold(shape, mom);
    let lb = trimmed_min_sum_lower_bound(shape, mom)?;
    let ub = trimmed_max_sum_upper_bound(shape, mom)?;

    let mut notes = vec![format!("sigma*k = {sigma} * {k} = {sigma_k}; threshold = {threshold}")];
    if ub < lb {
        notes.push(format!(
            "E[Y] upper bound {ub} is below the E[Y*] lower bound {lb}; numerator taken in absolute value"
        ));
    }
    let mut constants = Vec::new();

    let case_id = if mu < threshold {
        BoundCase::NegativeDenominator
    } else if mu > threshold {
        BoundCase::PositiveDenominator
    } else {
        BoundCase::Degenerate
    };

    let (exact_value, relaxed_value) = match case_id {
        BoundCase::NegativeDenominator => {
            let exact = if lb < 0.0 {
                Some(1.0 + (ub - lb).abs() / -lb)
            } else {
                notes.push(format!("E[Y*] lower bound {lb} rounded to a nonnegative value"));
                None
            };
            let denom = sigma_k - m * mu;
            let relaxed = if denom > 0.0 {
                Some((ell * mu - 2.0 * m * mu + 3.0 * sigma_k) / denom)
            } else {
                notes.push(format!("relaxed denominator sigma*k - m*mu = {denom} is not positive"));
                None
            };
            (exact, relaxed)
        }
        BoundCase::PositiveDenominator => {
            let exact = if lb > 0.0 {
                Some(1.0 + (ub - lb).abs() / lb)
            } else {
                notes.push(format!("E[Y*] lower bound {lb} rounded to a nonpositive value"));
                None
            };
            let denom = m * mu - sigma_k;
            let relaxed = if denom > 0.0 {
                Some((ell * mu + sigma_k) / denom)
            } else {
                notes.push(format!("relaxed value undefined: m*mu - sigma*k = {denom} is not positive"));
                None
            };
            (exact, relaxed)
        }
        BoundCase::Degenerate => {
            notes.push("mu equals the threshold: E[Y*] lower bound is zero, bound is unbounded".into());
            (None, None)
        }
    };

    if let (Some(e), Some(r)) = (exact_value, relaxed_value) {
        if r < e {
            notes.push(format!(
                "relaxed value {r} is below the exact value {e}; the relaxation is not conservative here"
            ));
        }
    }

    let below = case_id == BoundCase::NegativeDenominator;
    if below && (ell * mu <= -sigma_k || m * mu > sigma_k) {
        constants.push(Simplification::Two);
        notes.push("2: mu < threshold and (ell*mu <= -sigma*k or m*mu > sigma*k)".into());
    }
    if mu <= 0.0 {
        constants.push(Simplification::Three);
        notes.push("3: mu <= 0".into());
    }
    if mu * (ell + 2.0 * m) <= sigma_k {
        constants.push(Simplification::Four);
        notes.push(format!("4: mu*(ell+2m) = {} <= sigma*k", mu * (ell + 2.0 * m)));
    }
    if let Some(eps) = epsilon_ge2(ell, m, mu, sigma_k, threshold) {
        constants.push(Simplification::EpsilonGe2(eps));
        notes.push(format!(
            "eps>=2 = {eps}: mu <= sigma*k(eps-3)/(ell-2m+eps*m) = {} < threshold",
            sigma_k * (eps - 3.0) / (ell - 2.0 * m + eps * m)
        ));
    }
    if threshold < mu {
        let eps = k + ell * mu / sigma;
        constants.push(Simplification::EpsilonGeK(eps));
        notes.push(format!("eps>=k = {eps}: threshold < mu <= sigma(eps-k)/ell"));
        if let Some(r) = relaxed_value {
            if r > eps {
                notes.push(format!("eps>=k = {eps} is below the relaxed value {r}"));
            }
        }
    }

    Ok(BoundReport { case_id, exact_value, relaxed_value, simplified_constants: constants, notes })
}

/// Smallest `eps >= 2` with `mu <= g(eps) < threshold`, where
/// `g(eps) = sigma_k (eps - 3) / (ell - 2m + eps m)`.
///
/// For `eps >= 2` the denominator is at least `ell > 0` and `g` is strictly
/// increasing, so the smallest solution is `max(2, g^-1(mu))`, with
/// `g^-1(mu) = (3 sigma_k + ell mu - 2 m mu) / (sigma_k - m mu)` when
/// `mu < sigma_k / m` (the supremum of `g`).
fn epsilon_ge2(ell: f64, m: f64, mu: f64, sigma_k: f64, threshold: f64) -> Option<f64> {
    let g = |eps: f64| sigma_k * (eps - 3.0) / (ell - 2.0 * m + eps * m);
    let eps = if mu <= g(2.0) {
        2.0
    } else if m * mu < sigma_k {
        // Same operation order as the relaxed value, so the result never undercuts it.
        (ell * mu - 2.0 * m * mu + 3.0 * sigma_k) / (sigma_k - m * mu)
    } else {
        return None;
    };
    // Rounding can leave g(eps) a hair below mu; nudge up to the next double.
    let mut eps = eps.max(2.0);
    while g(eps) < mu {
        eps = next_up(eps);
    }
    (g(eps) < threshold).then_some(eps)
}

fn next_up(x: f64) -> f64 {
    debug_assert!(x.is_finite() && x > 0.0);
    f64::from_bits(x.to_bits() + 1)
}

/// Corollary condition under which the bound is claimed to simplify to 3:
/// `ell > exp(2 sqrt(m+1) - 3)`, `mu > threshold` and `m <= ell <= k/2`.
pub fn corollary1_predicate(shape: ProblemShape, mom: MomentSpec) -> bool {
    let m = shape.m as f64;
    shape.ell as f64 > (2.0 * (m + 1.0).sqrt() - 3.0).exp()
        && mom.mu > approx_factor_threshold(shape, mom)
        && shape.m <= shape.ell
        && 2 * shape.ell <= shape.k
}

/// Bound for Steiner instances on `n` vertices with `alpha` terminals,
/// taking `k = C(n, 2)`, `m = floor(alpha / 2)` and `ell = n - 1`:
///
/// `(mu (n-1) + 3 sigma C(n,2) - 2 mu floor(alpha/2)) / (sigma C(n,2) - mu floor(alpha/2))`.
pub fn steiner_specific_bound(n: u64, alpha: u64, mom: MomentSpec) -> Result<f64> {
    if n < 4 {
        return Err(Error::ParameterOutOfRange(format!("need n >= 4, got {n}")));
    }
    if alpha < 2 || alpha > n {
        return Err(Error::ParameterOutOfRange(format!("need 2 <= alpha <= n, got alpha={alpha}, n={n}")));
    }
    let pairs = (n * (n - 1) / 2) as f64;
    let half = (alpha / 2) as f64;
    let (mu, sigma) = (mom.mu, mom.sigma);
    let denom = sigma * pairs - mu * half;
    if denom <= 0.0 {
        return Err(Error::DegenerateBound(format!("sigma*C(n,2) - mu*floor(alpha/2) = {denom} is not positive")));
    }
    Ok((mu * (n as f64 - 1.0) + 3.0 * sigma * pairs - 2.0 * mu * half) / denom)
}
