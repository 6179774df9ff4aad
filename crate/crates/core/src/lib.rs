//! Conic optimization toolkit for graph bounds and matrix cones.
//!
//! The crate is organized around a dense symmetric-matrix kernel
//! ([`linalg`]), a self-contained primal-dual interior-point solver for
//! linear programs over products of PSD and nonnegative-orthant blocks
//! ([`conic`]), and the domain layers built on top of them:
//!
//! - [`graphs`]: graph model, DIMACS ingestion, generators, and exact
//!   small-scale oracles for the stability, chromatic and fractional
//!   chromatic numbers.
//! - [`theta`]: the theta numbers and their cone-generalized variants
//!   over the PSD and doubly nonnegative cones.
//! - [`cones`]: membership and separation for the completely positive,
//!   completely positive semidefinite and doubly nonnegative cones in
//!   the decidable cases, with machine-checkable certificates.
//! - [`qrelax`]: conic feasibility programs for the quantum graph
//!   parameters, their doubly nonnegative relaxations, symmetry
//!   reduction, and the aggregated chromatic program with its dual.
//! - [`ncpoly`]: non-commutative word algebra, trace-positivity
//!   certificates through truncated tracial quadratic modules, and the
//!   derived graph parameter hierarchy.

pub mod cones;
pub mod conic;
pub mod graphs;
pub mod linalg;
pub mod ncpoly;
pub mod qrelax;
pub mod theta;

pub use conic::{ConicOutcome, ConicProblem, FeasVerdict, SolveStatus};
pub use graphs::Graph;
pub use linalg::{SymMatrix, Vector};
