//! Seeded random instances: `G(n, m)` graphs, edge weights and Steiner terminals.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, Uniform};

use crate::bounds::MomentSpec;
use crate::error::{Error, Result};
use crate::seed::Seed;

/// Rejection cap when a connected `G(n, m)` draw is required.
pub const MAX_CONNECTIVITY_ATTEMPTS: u32 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

/// Simple undirected graph on vertices `0..n`.
///
/// Edges are stored with `u < v`, sorted by `(u, v)`, without duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    /// Builds a graph, canonicalizing edge orientation and order.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut out: Vec<Edge> = Vec::new();
        for (a, b, w) in edges {
            if a == b {
                return Err(Error::ParameterOutOfRange(format!("self-loop on vertex {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::ParameterOutOfRange(format!("edge ({a}, {b}) outside 0..{n}")));
            }
            out.push(Edge { u: a.min(b), v: a.max(b), w });
        }
        out.sort_by_key(|e| (e.u, e.v));
        if let Some(d) = out.windows(2).find(|p| (p[0].u, p[0].v) == (p[1].u, p[1].v)) {
            return Err(Error::ParameterOutOfRange(format!("duplicate edge ({}, {})", d[0].u, d[0].v)));
        }
        Ok(WeightedGraph { n, edges: out })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut uf = crate::solvers::UnionFind::new(self.n);
        let mut components = self.n;
        for e in &self.edges {
            if uf.union(e.u, e.v) {
                components -= 1;
            }
        }
        components == 1
    }

    /// Same topology with every weight replaced.
    pub fn with_weights(&self, weights: impl IntoIterator<Item = f64>) -> WeightedGraph {
        let edges = self.edges.iter().zip(weights).map(|(e, w)| Edge { w, ..*e }).collect::<Vec<_>>();
        assert_eq!(edges.len(), self.edges.len(), "weight count must match edge count");
        WeightedGraph { n: self.n, edges }
    }

    /// Writes the plain-text edge list: `n m` then one `u v w` line per edge.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.n, self.edges.len())?;
        for e in &self.edges {
            writeln!(out, "{} {} {}", e.u, e.v, e.w)?;
        }
        Ok(())
    }

    pub fn to_edge_list(&self) -> String {
        let mut buf = Vec::new();
        self.write_edge_list(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("edge list is ASCII")
    }

    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate().filter_map(|(i, l)| match l {
            Ok(s) if s.trim().is_empty() => None,
            other => Some((i + 1, other)),
        });
        let (line, header) = lines.next().ok_or(Error::Parse { line: 1, message: "missing header".into() })?;
        let header = header?;
        let mut fields = header.split_whitespace();
        let n: usize = parse_field(fields.next(), line, "vertex count")?;
        let m: usize = parse_field(fields.next(), line, "edge count")?;
        let mut edges = Vec::with_capacity(m);
        for _ in 0..m {
            let (line, text) = lines.next().ok_or(Error::Parse {
                line: line + edges.len() + 1,
                message: format!("expected {m} edges, found {}", edges.len()),
            })?;
            let text = text?;
            let mut f = text.split_whitespace();
            let u: usize = parse_field(f.next(), line, "u")?;
            let v: usize = parse_field(f.next(), line, "v")?;
            let w: f64 = parse_field(f.next(), line, "w")?;
            edges.push((u, v, w));
        }
        if let Some((line, _)) = lines.next() {
            return Err(Error::Parse { line, message: "trailing data after edge list".into() });
        }
        WeightedGraph::new(n, edges)
    }
}

impl FromStr for WeightedGraph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        WeightedGraph::read_edge_list(s.as_bytes())
    }
}

pub(crate) fn parse_field<T: FromStr>(field: Option<&str>, line: usize, what: &str) -> Result<T> {
    let raw = field.ok_or_else(|| Error::Parse { line, message: format!("missing {what}") })?;
    raw.parse().map_err(|_| Error::Parse { line, message: format!("invalid {what}: {raw:?}") })
}

/// Edge-weight distribution family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionSpec {
    Uniform { a: f64, b: f64 },
    Normal { mu: f64, sigma: f64 },
    Exponential { lambda: f64 },
    HalfNormal { sigma: f64 },
}

impl DistributionSpec {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        DistributionSpec::Uniform { a, b }.validated()
    }

    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        DistributionSpec::Normal { mu, sigma }.validated()
    }

    pub fn exponential(lambda: f64) -> Result<Self> {
        DistributionSpec::Exponential { lambda }.validated()
    }

    pub fn half_normal(sigma: f64) -> Result<Self> {
        DistributionSpec::HalfNormal { sigma }.validated()
    }

    fn validated(self) -> Result<Self> {
        let ok = match self {
            DistributionSpec::Uniform { a, b } => a.is_finite() && b.is_finite() && a < b,
            DistributionSpec::Normal { mu, sigma } => mu.is_finite() && sigma.is_finite() && sigma > 0.0,
            DistributionSpec::Exponential { lambda } => lambda.is_finite() && lambda > 0.0,
            DistributionSpec::HalfNormal { sigma } => sigma.is_finite() && sigma > 0.0,
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::ParameterOutOfRange(format!("invalid distribution parameters: {self}")))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            DistributionSpec::Uniform { a, b } => (a + b) / 2.0,
            DistributionSpec::Normal { mu, .. } => mu,
            DistributionSpec::Exponential { lambda } => 1.0 / lambda,
            DistributionSpec::HalfNormal { sigma } => sigma * (2.0 / std::f64::consts::PI).sqrt(),
        }
    }

    pub fn std_dev(&self) -> f64 {
        match *self {
            DistributionSpec::Uniform { a, b } => (b - a) / 12f64.sqrt(),
            DistributionSpec::Normal { sigma, .. } => sigma,
            DistributionSpec::Exponential { lambda } => 1.0 / lambda,
            DistributionSpec::HalfNormal { sigma } => sigma * (1.0 - 2.0 / std::f64::consts::PI).sqrt(),
        }
    }

    pub fn moments(&self) -> MomentSpec {
        MomentSpec::new(self.mean(), self.std_dev()).expect("validated distributions have positive spread")
    }

    pub fn is_symmetric(&self) -> bool {
        matches!(self, DistributionSpec::Uniform { .. } | DistributionSpec::Normal { .. })
    }

    /// Support contained in `[0, inf)`.
    pub fn is_nonnegative(&self) -> bool {
        match *self {
            DistributionSpec::Uniform { a, .. } => a >= 0.0,
            DistributionSpec::Normal { .. } => false,
            DistributionSpec::Exponential { .. } | DistributionSpec::HalfNormal { .. } => true,
        }
    }

    pub fn sampler(&self) -> Sampler {
        match *self {
            DistributionSpec::Uniform { a, b } => Sampler::Uniform(Uniform::new(a, b).expect("a < b")),
            DistributionSpec::Normal { mu, sigma } => Sampler::Normal(Normal::new(mu, sigma).expect("sigma > 0")),
            DistributionSpec::Exponential { lambda } => Sampler::Exponential(Exp::new(lambda).expect("lambda > 0")),
            DistributionSpec::HalfNormal { sigma } => Sampler::HalfNormal(Normal::new(0.0, sigma).expect("sigma > 0")),
        }
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DistributionSpec::Uniform { a, b } => write!(f, "uniform:{a}:{b}"),
            DistributionSpec::Normal { mu, sigma } => write!(f, "normal:{mu}:{sigma}"),
            DistributionSpec::Exponential { lambda } => write!(f, "exponential:{lambda}"),
            DistributionSpec::HalfNormal { sigma } => write!(f, "halfnormal:{sigma}"),
        }
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    /// Parses `uniform:a:b`, `normal:mu:sigma`, `exponential:lambda` or `halfnormal:sigma`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || Error::ConfigInvalid(format!("invalid distribution spec {s:?}"));
        let num = |i: usize| -> Result<f64> { parts.get(i).ok_or_else(bad)?.parse::<f64>().map_err(|_| bad()) };
        let expect_len = |n: usize| if parts.len() == n { Ok(()) } else { Err(bad()) };
        let spec = match parts[0].to_ascii_lowercase().as_str() {
            "uniform" => {
                expect_len(3)?;
                DistributionSpec::uniform(num(1)?, num(2)?)
            }
            "normal" => {
                expect_len(3)?;
                DistributionSpec::normal(num(1)?, num(2)?)
            }
            "exponential" | "exp" => {
                expect_len(2)?;
                DistributionSpec::exponential(num(1)?)
            }
            "halfnormal" | "half-normal" => {
                expect_len(2)?;
                DistributionSpec::half_normal(num(1)?)
            }
            _ => return Err(bad()),
        };
        spec.map_err(|e| Error::ConfigInvalid(e.to_string()))
    }
}

/// Concrete sampler for a [`DistributionSpec`].
#[derive(Debug, Clone, Copy)]
pub enum Sampler {
    Uniform(Uniform<f64>),
    Normal(Normal<f64>),
    Exponential(Exp<f64>),
    HalfNormal(Normal<f64>),
}

impl Distribution<f64> for Sampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Uniform(d) => d.sample(rng),
            Sampler::Normal(d) => d.sample(rng),
            Sampler::Exponential(d) => d.sample(rng),
            Sampler::HalfNormal(d) => d.sample(rng).abs(),
        }
    }
}

/// Graph plus terminal set.
#[derive(Debug, Clone, PartialEq)]
pub struct SteinerInstance {
    graph: WeightedGraph,
    terminals: Vec<usize>,
}

impl SteinerInstance {
    pub fn new(graph: WeightedGraph, terminals: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut terminals: Vec<usize> = terminals.into_iter().collect();
        terminals.sort_unstable();
        terminals.dedup();
        if terminals.len() < 2 || terminals.len() > graph.n() {
            return Err(Error::ParameterOutOfRange(format!(
                "need 2..={} distinct terminals, got {}",
                graph.n(),
                terminals.len()
            )));
        }
        if let Some(&t) = terminals.iter().find(|&&t| t >= graph.n()) {
            return Err(Error::ParameterOutOfRange(format!("terminal {t} outside 0..{}", graph.n())));
        }
        Ok(SteinerInstance { graph, terminals })
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    /// Sorted, distinct.
    pub fn terminals(&self) -> &[usize] {
        &self.terminals
    }
}

pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Maps `0..C(n,2)` onto pairs `(u, v)`, `u < v`, in lexicographic order.
fn pair_from_index(n: usize, mut idx: usize) -> (usize, usize) {
    let mut u = 0;
    loop {
        let row = n - u - 1;
        if idx < row {
            return (u, u + 1 + idx);
        }
        idx -= row;
        u += 1;
    }
}

/// Draws a graph uniformly from all edge sets of size `m_edges` on `n` vertices.
/// Weights are zero.
///
/// With `require_connected`, rejection-samples until connected; use
/// [`gen_gnm_counted`] to see the rejection count.
pub fn gen_gnm(n: usize, m_edges: usize, seed: Seed, require_connected: bool) -> Result<WeightedGraph> {
    gen_gnm_counted(n, m_edges, seed, require_connected).map(|(g, _)| g)
}

/// [`gen_gnm`], also returning how many disconnected draws were rejected.
pub fn gen_gnm_counted(n: usize, m_edges: usize, seed: Seed, require_connected: bool) -> Result<(WeightedGraph, u32)> {
    if n < 2 {
        return Err(Error::ParameterOutOfRange(format!("G(n, m) needs n >= 2, got {n}")));
    }
    let pairs = pair_count(n);
    let min_edges = if require_connected { n - 1 } else { 0 };
    if m_edges < min_edges || m_edges > pairs {
        return Err(Error::ParameterOutOfRange(format!(
            "m_edges = {m_edges} outside {min_edges}..={pairs} for n = {n}"
        )));
    }
    let mut rng = seed.rng();
    for attempt in 0..MAX_CONNECTIVITY_ATTEMPTS {
        let mut chosen = index::sample(&mut rng, pairs, m_edges).into_vec();
        chosen.sort_unstable();
        let g = WeightedGraph {
            n,
            edges: chosen
                .into_iter()
                .map(|i| {
                    let (u, v) = pair_from_index(n, i);
                    Edge { u, v, w: 0.0 }
                })
                .collect(),
        };
        if !require_connected || g.is_connected() {
            return Ok((g, attempt));
        }
    }
    Err(Error::ConnectivityUnreachable { attempts: MAX_CONNECTIVITY_ATTEMPTS })
}

/// Independent weight per edge, drawn in canonical edge order.
pub fn assign_weights(g: &WeightedGraph, dist: &DistributionSpec, seed: Seed) -> WeightedGraph {
    let mut rng = seed.rng();
    let sampler = dist.sampler();
    let weights: Vec<f64> = (0..g.edge_count()).map(|_| sampler.sample(&mut rng)).collect();
    g.with_weights(weights)
}

/// Uniformly random set of `count` distinct terminals.
pub fn pick_terminals(g: &WeightedGraph, count: usize, seed: Seed) -> Result<SteinerInstance> {
    if count < 2 || count > g.n() {
        return Err(Error::ParameterOutOfRange(format!("terminal count {count} outside 2..={}", g.n())));
    }
    let mut rng = seed.rng();
    let mut vertices: Vec<usize> = (0..g.n()).collect();
    let (chosen, _) = vertices.partial_shuffle(&mut rng, count);
    SteinerInstance::new(g.clone(), chosen.iter().copied())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    // 0.999 quantiles of the chi-square distribution.
    const CHI2_999_DF19: f64 = 43.820;
    const CHI2_999_DF5: f64 = 20.515;

    fn chi_square(counts: &HashMap<Vec<(usize, usize)>, u32>, cells: usize, draws: u32) -> f64 {
        let expected = draws as f64 / cells as f64;
        counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum::<f64>()
            + (cells - counts.len()) as f64 * expected
    }

    #[test]
    fn pair_indexing_is_lexicographic() {
        let n = 5;
        let pairs: Vec<_> = (0..pair_count(n)).map(|i| pair_from_index(n, i)).collect();
        let mut expected = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                expected.push((u, v));
            }
        }
        assert_eq!(pairs, expected);
    }

    #[test]
    fn complete_and_single_edge() {
        let g = gen_gnm(4, 6, Seed(1), true).unwrap();
        assert_eq!(g.edge_count(), 6);
        let g = gen_gnm(2, 1, Seed(1), false).unwrap();
        assert_eq!(g.edges(), &[Edge { u: 0, v: 1, w: 0.0 }]);
    }

    #[test]
    fn gnm_rejects_out_of_range() {
        assert!(gen_gnm(1, 0, Seed(0), false).is_err());
        assert!(gen_gnm(4, 7, Seed(0), false).is_err());
        assert!(gen_gnm(5, 3, Seed(0), true).is_err());
        assert!(gen_gnm(5, 0, Seed(0), false).unwrap().edges().is_empty());
    }

    #[test]
    fn gnm_is_uniform_over_edge_sets() {
        // C(6, 3) = 20 possible triples on 4 vertices.
        let draws = 100_000u32;
        let mut counts: HashMap<Vec<(usize, usize)>, u32> = HashMap::new();
        for t in 0..draws {
            let g = gen_gnm(4, 3, Seed(11).child(t as u64), false).unwrap();
            *counts.entry(g.edges().iter().map(|e| (e.u, e.v)).collect()).or_default() += 1;
        }
        assert_eq!(counts.len(), 20);
        let stat = chi_square(&counts, 20, draws);
        assert!(stat < CHI2_999_DF19, "chi2 = {stat}");
    }

    #[test]
    fn connected_draws_are_connected() {
        for t in 0..200 {
            let (g, _) = gen_gnm_counted(12, 11, Seed(5).child(t), true).unwrap();
            assert!(g.is_connected());
            assert_eq!(g.edge_count(), 11);
        }
    }

    #[test]
    fn weights_degenerate_uniform() {
        let g = gen_gnm(6, 15, Seed(2), false).unwrap();
        let d = DistributionSpec::uniform(1.0, 1.0 + 1e-9).unwrap();
        let w = assign_weights(&g, &d, Seed(3));
        assert!(w.edges().iter().all(|e| (e.w - 1.0).abs() <= 1e-9));
    }

    #[test]
    fn weight_means_match_distribution() {
        let n = 448; // C(448, 2) = 100_128 edges
        let g = gen_gnm(n, pair_count(n), Seed(0), false).unwrap();
        for d in [DistributionSpec::uniform(0.0, 1.0).unwrap(), DistributionSpec::exponential(1.0).unwrap()] {
            let w = assign_weights(&g, &d, Seed(99));
            let mean = w.total_weight() / w.edge_count() as f64;
            let se = d.std_dev() / (w.edge_count() as f64).sqrt();
            assert!((mean - d.mean()).abs() < 3.0 * se, "{d}: {mean}");
        }
    }

    #[test]
    fn terminals_forced_and_cardinality() {
        let g = gen_gnm(4, 6, Seed(0), false).unwrap();
        assert_eq!(pick_terminals(&g, 4, Seed(1)).unwrap().terminals(), &[0, 1, 2, 3]);
        let g = gen_gnm(10, 20, Seed(0), false).unwrap();
        let inst = pick_terminals(&g, 5, Seed(1)).unwrap();
        assert_eq!(inst.terminals().len(), 5);
        assert!(pick_terminals(&g, 1, Seed(1)).is_err());
        assert!(pick_terminals(&g, 11, Seed(1)).is_err());
    }

    #[test]
    fn terminal_pairs_are_uniform() {
        let g = gen_gnm(4, 6, Seed(0), false).unwrap();
        let draws = 100_000u32;
        let mut counts: HashMap<Vec<(usize, usize)>, u32> = HashMap::new();
        for t in 0..draws {
            let inst = pick_terminals(&g, 2, Seed(21).child(t as u64)).unwrap();
            let ts = inst.terminals();
            *counts.entry(vec![(ts[0], ts[1])]).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        assert!(chi_square(&counts, 6, draws) < CHI2_999_DF5);
    }

    #[test]
    fn distribution_parsing() {
        assert_eq!("uniform:0:1".parse::<DistributionSpec>().unwrap(), DistributionSpec::Uniform { a: 0.0, b: 1.0 });
        assert_eq!("exponential:2".parse::<DistributionSpec>().unwrap(), DistributionSpec::Exponential { lambda: 2.0 });
        assert!("uniform:1:0".parse::<DistributionSpec>().is_err());
        assert!("normal:0".parse::<DistributionSpec>().is_err());
        assert!("cauchy:0:1".parse::<DistributionSpec>().is_err());
        let d = DistributionSpec::half_normal(1.5).unwrap();
        assert_eq!(d.to_string().parse::<DistributionSpec>().unwrap(), d);
    }

    #[test]
    fn moments_and_symmetry() {
        let u = DistributionSpec::uniform(-1.0, 1.0).unwrap();
        assert_eq!(u.mean(), 0.0);
        assert!((u.std_dev() - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!(u.is_symmetric());
        assert!(!DistributionSpec::exponential(1.0).unwrap().is_symmetric());
        assert!(DistributionSpec::half_normal(1.0).unwrap().is_nonnegative());
    }

    #[test]
    fn edge_list_parse_errors() {
        assert!("".parse::<WeightedGraph>().is_err());
        assert!("3 2\n0 1 1.0\n".parse::<WeightedGraph>().is_err());
        assert!("3 1\n0 1 x\n".parse::<WeightedGraph>().is_err());
        assert!("3 1\n0 0 1\n".parse::<WeightedGraph>().is_err());
        assert!("3 2\n0 1 1\n1 0 2\n".parse::<WeightedGraph>().is_err());
        assert!("3 1\n0 1 1\n1 2 3\n".parse::<WeightedGraph>().is_err());
    }
}
