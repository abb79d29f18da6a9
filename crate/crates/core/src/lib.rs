//! Expected-optimality bounds for randomly chosen feasible solutions to
//! combinatorial optimization problems, plus the machinery to check them
//! empirically.
//!
//! The crate is split into:
//!
//! * [`bounds`]: closed-form bounds on order statistics, trimmed sums and the
//!   expected approximation factor of a random feasible solution.
//! * [`instances`]: seeded `G(n, m)` graphs, edge-weight distributions and
//!   Steiner terminal selection.
//! * [`solvers`]: Kruskal MST, weight-blind random spanning trees, a
//!   distance-network Steiner 2-approximation and brute-force oracles.
//! * [`montecarlo`]: sampling estimates of order statistics and trimmed sums.
//! * [`harness`]: experiment grids, bound-verification suites and CSV output.

pub mod bounds;
pub mod error;
pub mod harness;
pub mod instances;
pub mod montecarlo;
pub mod seed;
pub mod solvers;
pub mod stats;

pub use bounds::{BoundCase, BoundReport, MomentSpec, OrderIndex, ProblemShape, Simplification};
pub use error::{Error, Result};
pub use instances::{DistributionSpec, Edge, SteinerInstance, WeightedGraph};
pub use montecarlo::SampleEstimate;
pub use seed::Seed;
pub use solvers::{FeasibilityPredicate, Forest};
