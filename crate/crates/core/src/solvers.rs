//! Spanning-tree and Steiner-tree solvers, plus exhaustive oracles for small graphs.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap};
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::instances::{parse_field, SteinerInstance, WeightedGraph};
use crate::seed::Seed;

/// Largest vertex count accepted by the brute-force oracles.
pub const BRUTE_FORCE_MAX_VERTICES: usize = 8;

/// Disjoint-set forest with union by rank and path compression.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), rank: vec![0; n] }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Merges the sets of `a` and `b`; false if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            Ordering::Less => self.parent[ra] = rb,
            Ordering::Greater => self.parent[rb] = ra,
            Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }
}

/// Acyclic edge subset of a host graph, referenced by edge index.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    edges: Vec<usize>,
    cost: f64,
}

impl Forest {
    /// Validates indices and acyclicity, and sums the host weights.
    pub fn from_edge_indices(g: &WeightedGraph, edges: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut edges: Vec<usize> = edges.into_iter().collect();
        edges.sort_unstable();
        edges.dedup();
        if let Some(&bad) = edges.iter().find(|&&i| i >= g.edge_count()) {
            return Err(Error::ParameterOutOfRange(format!("edge index {bad} out of range")));
        }
        let mut uf = UnionFind::new(g.n());
        for &i in &edges {
            let e = g.edges()[i];
            if !uf.union(e.u, e.v) {
                return Err(Error::ParameterOutOfRange(format!("edge ({}, {}) closes a cycle", e.u, e.v)));
            }
        }
        let cost = edges.iter().map(|&i| g.edges()[i].w).sum();
        Ok(Forest { edges, cost })
    }

    pub fn empty() -> Self {
        Forest { edges: Vec::new(), cost: 0.0 }
    }

    /// Sorted host edge indices.
    pub fn edge_indices(&self) -> &[usize] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn pairs(&self, g: &WeightedGraph) -> Vec<(usize, usize)> {
        self.edges.iter().map(|&i| (g.edges()[i].u, g.edges()[i].v)).collect()
    }

    /// Cost recomputed from the host weights.
    pub fn recompute_cost(&self, g: &WeightedGraph) -> f64 {
        self.edges.iter().map(|&i| g.edges()[i].w).sum()
    }

    /// `cost <value>` followed by the edge-list format of the member edges.
    pub fn write_to<W: Write>(&self, g: &WeightedGraph, mut out: W) -> Result<()> {
        writeln!(out, "cost {}", self.cost)?;
        writeln!(out, "{} {}", g.n(), self.edges.len())?;
        for &i in &self.edges {
            let e = g.edges()[i];
            writeln!(out, "{} {} {}", e.u, e.v, e.w)?;
        }
        Ok(())
    }

    pub fn to_text(&self, g: &WeightedGraph) -> String {
        let mut buf = Vec::new();
        self.write_to(g, &mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ASCII")
    }

    /// Parses [`Forest::write_to`] output against its host graph.
    pub fn read_from<R: BufRead>(g: &WeightedGraph, input: R) -> Result<Self> {
        let mut lines = input.lines();
        let first = lines.next().ok_or(Error::Parse { line: 1, message: "missing cost line".into() })??;
        let mut f = first.split_whitespace();
        if f.next() != Some("cost") {
            return Err(Error::Parse { line: 1, message: "expected `cost <value>`".into() });
        }
        let stated: f64 = parse_field(f.next(), 1, "cost")?;
        let rest: Vec<String> = lines.collect::<std::io::Result<_>>()?;
        let sub = WeightedGraph::read_edge_list(rest.join("\n").as_bytes()).map_err(|e| match e {
            Error::Parse { line, message } => Error::Parse { line: line + 1, message },
            other => other,
        })?;
        let mut ids = Vec::with_capacity(sub.edge_count());
        for e in sub.edges() {
            let i = g
                .edges()
                .binary_search_by_key(&(e.u, e.v), |h| (h.u, h.v))
                .map_err(|_| Error::ParameterOutOfRange(format!("edge ({}, {}) not in host graph", e.u, e.v)))?;
            ids.push(i);
        }
        let forest = Forest::from_edge_indices(g, ids)?;
        if forest.cost.to_bits() != stated.to_bits() {
            return Err(Error::Parse {
                line: 1,
                message: format!("stated cost {stated} differs from recomputed {}", forest.cost),
            });
        }
        Ok(forest)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeasibilityPredicate {
    /// `n - 1` edges connecting every vertex.
    SpanningTree,
    /// Every listed terminal in one component.
    SteinerConnectivity(Vec<usize>),
}

pub fn check_feasible(f: &Forest, g: &WeightedGraph, pred: &FeasibilityPredicate) -> bool {
    if f.edges.iter().any(|&i| i >= g.edge_count()) {
        return false;
    }
    let mut uf = UnionFind::new(g.n());
    for &i in &f.edges {
        let e = g.edges()[i];
        if !uf.union(e.u, e.v) {
            return false;
        }
    }
    match pred {
        FeasibilityPredicate::SpanningTree => g.n() > 0 && f.len() == g.n() - 1 && (1..g.n()).all(|v| uf.same(0, v)),
        FeasibilityPredicate::SteinerConnectivity(terminals) => match terminals.split_first() {
            None => true,
            Some((&first, rest)) => terminals.iter().all(|&t| t < g.n()) && rest.iter().all(|&t| uf.same(first, t)),
        },
    }
}

/// Greedy union-find over the given edge order; errors if the result does not span.
fn greedy_spanning_tree(g: &WeightedGraph, order: impl IntoIterator<Item = usize>) -> Result<Forest> {
    let mut uf = UnionFind::new(g.n());
    let target = g.n().saturating_sub(1);
    let mut chosen = Vec::with_capacity(target);
    for i in order {
        if chosen.len() == target {
            break;
        }
        let e = g.edges()[i];
        if uf.union(e.u, e.v) {
            chosen.push(i);
        }
    }
    if chosen.len() != target {
        return Err(Error::GraphDisconnected);
    }
    Forest::from_edge_indices(g, chosen)
}

/// Kruskal's algorithm; equal weights are taken in canonical edge order.
pub fn mst(g: &WeightedGraph) -> Result<Forest> {
    let mut order: Vec<usize> = (0..g.edge_count()).collect();
    order.sort_by(|&a, &b| g.edges()[a].w.total_cmp(&g.edges()[b].w));
    greedy_spanning_tree(g, order)
}

/// Weight-blind spanning tree: Kruskal's greedy step over a uniformly random
/// permutation of the edges. Not a uniform spanning tree.
pub fn random_feasible_tree(g: &WeightedGraph, seed: Seed) -> Result<Forest> {
    let mut order: Vec<usize> = (0..g.edge_count()).collect();
    order.shuffle(&mut seed.rng());
    greedy_spanning_tree(g, order)
}

fn adjacency(g: &WeightedGraph) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); g.n()];
    for (i, e) in g.edges().iter().enumerate() {
        adj[e.u].push((e.v, i));
        adj[e.v].push((e.u, i));
    }
    adj
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry(f64, usize);

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Dijkstra from `source`; returns distances and the edge used to reach each vertex.
fn shortest_paths(g: &WeightedGraph, adj: &[Vec<(usize, usize)>], source: usize) -> (Vec<f64>, Vec<Option<usize>>) {
    let mut dist = vec![f64::INFINITY; g.n()];
    let mut via = vec![None; g.n()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Reverse(HeapEntry(0.0, source)));
    while let Some(Reverse(HeapEntry(d, u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, i) in &adj[u] {
            let nd = d + g.edges()[i].w;
            if nd < dist[v] {
                dist[v] = nd;
                via[v] = Some(i);
                heap.push(Reverse(HeapEntry(nd, v)));
            }
        }
    }
    (dist, via)
}

/// Distance-network 2-approximation for the Steiner tree problem.
///
/// 1. shortest paths from every terminal;
/// 2. MST of the terminal metric closure;
/// 3. expand closure edges into host paths;
/// 4. MST of the subgraph induced by the touched vertices, then repeatedly
///    drop the lowest-numbered non-terminal leaf.
///
/// Cost is at most `2 (1 - 1/|T|)` times optimal.
pub fn steiner_2approx(inst: &SteinerInstance) -> Result<Forest> {
    let g = inst.graph();
    if let Some(e) = g.edges().iter().find(|e| e.w.is_nan() || e.w < 0.0) {
        return Err(Error::NegativeWeight { u: e.u, v: e.v, weight: e.w });
    }
    let terminals = inst.terminals();
    let adj = adjacency(g);
    let trees: Vec<_> = terminals.iter().map(|&t| shortest_paths(g, &adj, t)).collect();

    let mut closure = Vec::new();
    for (i, (dist, _)) in trees.iter().enumerate() {
        for (j, &t) in terminals.iter().enumerate().skip(i + 1) {
            let d = dist[t];
            if !d.is_finite() {
                return Err(Error::GraphDisconnected);
            }
            closure.push((d, i, j));
        }
    }
    closure.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));

    let mut uf = UnionFind::new(terminals.len());
    let mut vertices = BTreeSet::new();
    for &(_, i, j) in &closure {
        if !uf.union(i, j) {
            continue;
        }
        let via = &trees[i].1;
        let mut cur = terminals[j];
        vertices.insert(cur);
        while cur != terminals[i] {
            let e = g.edges()[via[cur].expect("reachable vertex has a predecessor")];
            cur = if e.u == cur { e.v } else { e.u };
            vertices.insert(cur);
        }
    }

    let mut induced: Vec<usize> = (0..g.edge_count())
        .filter(|&i| vertices.contains(&g.edges()[i].u) && vertices.contains(&g.edges()[i].v))
        .collect();
    induced.sort_by(|&a, &b| g.edges()[a].w.total_cmp(&g.edges()[b].w));
    let mut uf = UnionFind::new(g.n());
    let mut kept: BTreeSet<usize> = BTreeSet::new();
    for i in induced {
        let e = g.edges()[i];
        if uf.union(e.u, e.v) {
            kept.insert(i);
        }
    }

    let is_terminal = |v: usize| terminals.binary_search(&v).is_ok();
    let mut incident: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); g.n()];
    for &i in &kept {
        let e = g.edges()[i];
        incident[e.u].insert(i);
        incident[e.v].insert(i);
    }
    let mut leaves: BTreeSet<usize> = (0..g.n()).filter(|&v| !is_terminal(v) && incident[v].len() == 1).collect();
    while let Some(v) = leaves.pop_first() {
        let i = *incident[v].first().expect("leaf has one edge");
        let e = g.edges()[i];
        let other = if e.u == v { e.v } else { e.u };
        kept.remove(&i);
        incident[v].clear();
        incident[other].remove(&i);
        if !is_terminal(other) && incident[other].len() == 1 {
            leaves.insert(other);
        }
    }

    Forest::from_edge_indices(g, kept)
}

fn guard_size(g: &WeightedGraph) -> Result<()> {
    if g.n() > BRUTE_FORCE_MAX_VERTICES {
        return Err(Error::InstanceTooLarge(format!(
            "{} vertices exceeds the limit of {BRUTE_FORCE_MAX_VERTICES}",
            g.n()
        )));
    }
    Ok(())
}

/// Minimum spanning tree by enumerating every `(n-1)`-edge subset.
pub fn brute_force_mst(g: &WeightedGraph) -> Result<Forest> {
    guard_size(g)?;
    let k = g.edge_count();
    let r = g.n().saturating_sub(1);
    if r > k {
        return Err(Error::GraphDisconnected);
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut combo: Vec<usize> = (0..r).collect();
    loop {
        let mut uf = UnionFind::new(g.n());
        if combo.iter().all(|&i| uf.union(g.edges()[i].u, g.edges()[i].v)) {
            let cost: f64 = combo.iter().map(|&i| g.edges()[i].w).sum();
            if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                best = Some((cost, combo.clone()));
            }
        }
        // next combination in lexicographic order
        let Some(pos) = (0..r).rev().find(|&p| combo[p] < k - r + p) else { break };
        combo[pos] += 1;
        for p in pos + 1..r {
            combo[p] = combo[p - 1] + 1;
        }
    }
    let (_, edges) = best.ok_or(Error::GraphDisconnected)?;
    Forest::from_edge_indices(g, edges)
}

/// Minimum-cost forest connecting the terminals, by enumerating every acyclic edge subset.
pub fn brute_force_steiner(inst: &SteinerInstance) -> Result<Forest> {
    let g = inst.graph();
    guard_size(g)?;
    let mut search = SteinerSearch { g, terminals: inst.terminals(), chosen: Vec::new(), best: None };
    let parent: [u8; BRUTE_FORCE_MAX_VERTICES] = std::array::from_fn(|i| i as u8);
    search.visit(0, parent, 0.0);
    let (_, edges) = search.best.ok_or(Error::GraphDisconnected)?;
    Forest::from_edge_indices(g, edges)
}

struct SteinerSearch<'a> {
    g: &'a WeightedGraph,
    terminals: &'a [usize],
    chosen: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
}

impl SteinerSearch<'_> {
    fn root(parent: &[u8; BRUTE_FORCE_MAX_VERTICES], mut x: usize) -> usize {
        while parent[x] as usize != x {
            x = parent[x] as usize;
        }
        x
    }

    fn visit(&mut self, next: usize, parent: [u8; BRUTE_FORCE_MAX_VERTICES], cost: f64) {
        if next == self.g.edge_count() {
            let t0 = Self::root(&parent, self.terminals[0]);
            if self.terminals.iter().all(|&t| Self::root(&parent, t) == t0)
                && self.best.as_ref().is_none_or(|(c, _)| cost < *c)
            {
                self.best = Some((cost, self.chosen.clone()));
            }
            return;
        }
        self.visit(next + 1, parent, cost);
        let e = self.g.edges()[next];
        let (ru, rv) = (Self::root(&parent, e.u), Self::root(&parent, e.v));
        if ru != rv {
            let mut joined = parent;
            joined[ru] = rv as u8;
            self.chosen.push(next);
            self.visit(next + 1, joined, cost + e.w);
            self.chosen.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{assign_weights, gen_gnm, DistributionSpec};

    fn graph(n: usize, edges: &[(usize, usize, f64)]) -> WeightedGraph {
        WeightedGraph::new(n, edges.iter().copied()).unwrap()
    }

    fn triangle() -> WeightedGraph {
        graph(3, &[(0, 1, 1.0), (1, 2, 2.0), (0, 2, 3.0)])
    }

    #[test]
    fn union_find_basics() {
        let mut uf = UnionFind::new(4);
        assert!(uf.union(0, 1));
        assert!(uf.union(2, 3));
        assert!(!uf.union(1, 0));
        assert!(!uf.same(0, 3));
        assert!(uf.union(1, 3));
        assert!(uf.same(0, 2));
    }

    #[test]
    fn mst_triangle_and_path() {
        let g = triangle();
        let t = mst(&g).unwrap();
        assert_eq!(t.cost(), 3.0);
        assert_eq!(t.pairs(&g), vec![(0, 1), (1, 2)]);
        let p = graph(3, &[(0, 1, 5.0), (1, 2, 7.0)]);
        assert_eq!(mst(&p).unwrap().cost(), 12.0);
    }

    #[test]
    fn mst_disconnected() {
        let g = graph(4, &[(0, 1, 1.0), (2, 3, 1.0)]);
        assert_eq!(mst(&g), Err(Error::GraphDisconnected));
        assert_eq!(random_feasible_tree(&g, Seed(0)), Err(Error::GraphDisconnected));
        assert_eq!(brute_force_mst(&g), Err(Error::GraphDisconnected));
    }

    #[test]
    fn random_tree_on_a_tree_is_forced() {
        let g = graph(4, &[(0, 1, 1.5), (1, 2, 2.0), (1, 3, 4.0)]);
        for s in 0..10 {
            let t = random_feasible_tree(&g, Seed(s)).unwrap();
            assert_eq!(t.cost(), g.total_weight());
        }
    }

    #[test]
    fn random_tree_is_deterministic_and_feasible() {
        let g = assign_weights(
            &gen_gnm(9, 20, Seed(4), true).unwrap(),
            &DistributionSpec::uniform(0.0, 1.0).unwrap(),
            Seed(5),
        );
        let a = random_feasible_tree(&g, Seed(77)).unwrap();
        assert_eq!(a, random_feasible_tree(&g, Seed(77)).unwrap());
        assert!(check_feasible(&a, &g, &FeasibilityPredicate::SpanningTree));
        assert!(a.cost() >= mst(&g).unwrap().cost());
    }

    #[test]
    fn triangle_permutation_enumeration() {
        // Greedy over each of the 3! edge orders keeps the first two edges.
        let g = triangle();
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let total: f64 = perms.iter().map(|p| greedy_spanning_tree(&g, p.iter().copied()).unwrap().cost()).sum();
        assert_eq!(total / 6.0, 4.0);
        assert_eq!(total / 6.0 / 3.0, 4.0 / 3.0);
    }

    #[test]
    fn steiner_path_and_star() {
        let p = graph(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        let inst = SteinerInstance::new(p.clone(), [0, 2]).unwrap();
        let f = steiner_2approx(&inst).unwrap();
        assert_eq!(f.cost(), 2.0);
        assert_eq!(f.len(), 2);

        let star = graph(4, &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (1, 2, 5.0), (2, 3, 5.0)]);
        let inst = SteinerInstance::new(star.clone(), [1, 2, 3]).unwrap();
        let f = steiner_2approx(&inst).unwrap();
        assert_eq!(f.cost(), 3.0);
        assert_eq!(brute_force_steiner(&inst).unwrap().cost(), 3.0);
    }

    #[test]
    fn steiner_ignores_off_path_vertices() {
        // 0-1-2 path with a cheap pendant 1-3; terminals {0, 2}.
        let g = graph(4, &[(0, 1, 1.0), (1, 2, 1.0), (1, 3, 0.1), (0, 3, 5.0)]);
        let inst = SteinerInstance::new(g.clone(), [0, 2]).unwrap();
        let f = steiner_2approx(&inst).unwrap();
        assert_eq!(f.pairs(&g), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn steiner_rejects_negative_and_disconnected() {
        let g = graph(3, &[(0, 1, -1.0), (1, 2, 1.0)]);
        let inst = SteinerInstance::new(g, [0, 2]).unwrap();
        assert!(matches!(steiner_2approx(&inst), Err(Error::NegativeWeight { .. })));
        let g = graph(4, &[(0, 1, 1.0), (2, 3, 1.0)]);
        let inst = SteinerInstance::new(g, [0, 3]).unwrap();
        assert_eq!(steiner_2approx(&inst), Err(Error::GraphDisconnected));
        assert_eq!(brute_force_steiner(&inst), Err(Error::GraphDisconnected));
    }

    #[test]
    fn feasibility_checks() {
        let g = triangle();
        let t = mst(&g).unwrap();
        assert!(check_feasible(&t, &g, &FeasibilityPredicate::SpanningTree));
        let one = Forest::from_edge_indices(&g, [0]).unwrap();
        assert!(!check_feasible(&one, &g, &FeasibilityPredicate::SpanningTree));
        assert!(check_feasible(&one, &g, &FeasibilityPredicate::SteinerConnectivity(vec![0, 1])));
        assert!(!check_feasible(&Forest::empty(), &g, &FeasibilityPredicate::SteinerConnectivity(vec![0, 2])));
        assert!(Forest::from_edge_indices(&g, [0, 1, 2]).is_err());
    }

    #[test]
    fn brute_force_examples() {
        assert_eq!(brute_force_mst(&triangle()).unwrap().cost(), 3.0);
        let p = graph(3, &[(0, 1, 2.5), (1, 2, 4.0)]);
        let inst = SteinerInstance::new(p, [0, 2]).unwrap();
        assert_eq!(brute_force_steiner(&inst).unwrap().cost(), 6.5);
        let k4 = graph(4, &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (1, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)]);
        let inst = SteinerInstance::new(k4.clone(), [0, 1, 2, 3]).unwrap();
        assert_eq!(brute_force_steiner(&inst).unwrap().cost(), 3.0);
        assert_eq!(brute_force_mst(&k4).unwrap().cost(), 3.0);
    }

    #[test]
    fn brute_force_size_guard() {
        let g = gen_gnm(9, 8, Seed(0), true).unwrap();
        assert!(matches!(brute_force_mst(&g), Err(Error::InstanceTooLarge(_))));
        let inst = SteinerInstance::new(g, [0, 1]).unwrap();
        assert!(matches!(brute_force_steiner(&inst), Err(Error::InstanceTooLarge(_))));
    }

    #[test]
    fn forest_text_round_trip() {
        let g = triangle();
        let t = mst(&g).unwrap();
        let text = t.to_text(&g);
        assert_eq!(text, "cost 3\n3 2\n0 1 1\n1 2 2\n");
        assert_eq!(Forest::read_from(&g, text.as_bytes()).unwrap(), t);
        assert!(Forest::read_from(&g, "cost 4\n3 2\n0 1 1\n1 2 2\n".as_bytes()).is_err());
    }
}
