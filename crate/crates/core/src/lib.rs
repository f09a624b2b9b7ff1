//! Tests whether pairwise correlations observed in a temporal coauthor/citation
//! network can be explained by a *static latent-homophily* model: a hidden
//! variable per author, fixed before the observation window, that alone drives
//! each author's citation dynamics.
//!
//! The pipeline:
//!
//! 1. [`network`] ingests citation records, builds the coauthor graph, directs
//!    edges by degree dominance and extracts ±1 author-reference state series
//!    over the slices of a time window.
//! 2. [`statistics`] pools paired state sequences over directed coauthor arcs
//!    into an empirical joint distribution over the `4^T` outcomes.
//! 3. [`model`] builds the polynomial model: for each joint outcome an exact
//!    polynomial in the six chain parameters whose mixture expectation must
//!    reproduce the observed distribution.
//! 4. [`relaxation`] assembles the level-`d` moment-feasibility semidefinite
//!    program and converts dual rays into verifiable sum-of-squares rejection
//!    certificates.
//! 5. [`sdp`] solves the program with an interior-point method over the
//!    homogeneous self-dual embedding, classifying feasible / infeasible /
//!    unknown with witnesses.
//!
//! A REJECT verdict is only ever issued on an independently validated
//! certificate; solver status alone is never trusted.
//!
//! [`simulator`] provides the known-contagion data source (copy dynamics on a
//! dominance-directed graph) and [`synthetic`] generates synthetic citation
//! corpora and scale-free test graphs.

pub mod error;
pub mod experiment;
pub mod linalg;
pub mod model;
pub mod network;
pub mod poly;
pub mod relaxation;
pub mod sdp;
pub mod sdpa;
pub mod simulator;
pub mod statistics;
pub mod synthetic;

pub use error::{Error, Result};
