//! Joint estimation of several related Gaussian DAG models.
//!
//! The crate covers graph machinery (DAGs, CPDAGs, Meek rules, SHD), linear
//! SEM algebra and simulation, decomposable joint scores (observational and
//! interventional), greedy equivalence search over the joint score, per-class
//! lasso refits on the estimated union graph, and an evaluation harness.

pub mod graph;
pub mod sem;
pub mod scoring;
pub mod search;
pub mod refit;
pub mod eval;
