//! Block-structured semidefinite feasibility problems and a dense
//! interior-point solver with reliable infeasibility certificates.
//!
//! A problem has scalar variables `y`, PSD blocks whose entries are linear in
//! `y`, optional linear equalities and an optional linear objective:
//!
//! ```text
//! minimize    c^T y
//! subject to  a_k . y  = rhs_k          (equalities)
//!             X_b(y)  >= 0              (PSD blocks, X_b linear in y)
//! ```
//!
//! The solver ([`solve`]) runs a Nesterov-Todd scaled predictor-corrector
//! interior-point method on the homogeneous self-dual embedding, so genuinely
//! infeasible problems terminate with a Farkas ray instead of diverging.

mod solver;
pub mod svec;

pub use solver::solve;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;

/// One coefficient of a PSD block: `X[row, col] += coef * y[var]`, upper
/// triangle (`row <= col`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockEntry {
    pub row: usize,
    pub col: usize,
    pub var: usize,
    pub coef: f64,
}

/// A PSD block as a sparse linear map from the scalar variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdBlockMap {
    pub label: String,
    pub dim: usize,
    pub entries: Vec<BlockEntry>,
}

impl PsdBlockMap {
    /// Evaluate the block at a variable assignment.
    pub fn evaluate(&self, y: &[f64]) -> Mat {
        let mut m = Mat::zeros(self.dim, self.dim);
        for e in &self.entries {
            let v = e.coef * y[e.var];
            m[(e.row, e.col)] += v;
            if e.row != e.col {
                m[(e.col, e.row)] += v;
            }
        }
        m
    }
}

/// A linear equality `sum coef * y[var] = rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearEquality {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LinearEquality {
    pub fn evaluate(&self, y: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * y[v]).sum()
    }
}

/// Block-structured SDP with equality constraints over scalar variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub num_vars: usize,
    pub blocks: Vec<PsdBlockMap>,
    pub equalities: Vec<LinearEquality>,
    /// Objective coefficients; empty means pure feasibility (minimize 0).
    #[serde(default)]
    pub objective: Vec<f64>,
}

impl SdpProblem {
    pub fn validate(&self) -> Result<()> {
        if self.num_vars == 0 {
            return Err(Error::InvalidProblem("no variables".into()));
        }
        if !self.objective.is_empty() && self.objective.len() != self.num_vars {
            return Err(Error::InvalidProblem(format!(
                "objective has {} coefficients for {} variables",
                self.objective.len(),
                self.num_vars
            )));
        }
        if self.blocks.is_empty() {
            return Err(Error::InvalidProblem("no PSD blocks".into()));
        }
        for (bi, b) in self.blocks.iter().enumerate() {
            if b.dim == 0 {
                return Err(Error::InvalidProblem(format!("block {bi} has dimension 0")));
            }
            for e in &b.entries {
                if e.row > e.col || e.col >= b.dim {
                    return Err(Error::InvalidProblem(format!(
                        "block {bi}: entry ({}, {}) outside upper triangle of dim {}",
                        e.row, e.col, b.dim
                    )));
                }
                if e.var >= self.num_vars {
                    return Err(Error::InvalidProblem(format!(
                        "block {bi}: variable {} out of range",
                        e.var
                    )));
                }
                if !e.coef.is_finite() {
                    return Err(Error::InvalidProblem(format!(
                        "block {bi}: non-finite coefficient"
                    )));
                }
            }
        }
        for (k, eq) in self.equalities.iter().enumerate() {
            if eq.terms.is_empty() {
                return Err(Error::InvalidProblem(format!("equality {k} has no terms")));
            }
            for &(v, c) in &eq.terms {
                if v >= self.num_vars {
                    return Err(Error::InvalidProblem(format!(
                        "equality {k}: variable {v} out of range"
                    )));
                }
                if !c.is_finite() {
                    return Err(Error::InvalidProblem(format!(
                        "equality {k}: non-finite coefficient"
                    )));
                }
            }
            if !eq.rhs.is_finite() {
                return Err(Error::InvalidProblem(format!(
                    "equality {k}: non-finite rhs"
                )));
            }
        }
        Ok(())
    }

    /// Worst equality violation and smallest block eigenvalue at `y`.
    pub fn witness_quality(&self, y: &[f64]) -> (f64, f64) {
        let eq_violation = self
            .equalities
            .iter()
            .map(|eq| (eq.evaluate(y) - eq.rhs).abs())
            .fold(0.0f64, f64::max);
        let min_eig = self
            .blocks
            .iter()
            .map(|b| crate::linalg::sym_min_eig(&b.evaluate(y)))
            .fold(f64::INFINITY, f64::min);
        (eq_violation, min_eig)
    }
}

/// Options controlling a solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Primal/dual feasibility tolerance on the normalized iterate.
    pub tol_feas: f64,
    /// Complementarity-gap tolerance.
    pub tol_gap: f64,
    /// Residual tolerance for declaring an infeasibility ray valid.
    pub tol_infeas: f64,
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: 200,
            tol_feas: 1e-7,
            tol_gap: 1e-6,
            tol_infeas: 1e-9,
            verbose: false,
        }
    }
}

/// Feasible point: variable assignment plus the PSD slack of every block
/// (svec packed), both already normalized by tau.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleWitness {
    pub y: Vec<f64>,
    pub block_slacks: Vec<Vec<f64>>,
}

/// Farkas ray certifying infeasibility: multipliers `lambda` for the
/// equalities and a PSD matrix per block such that
/// `E^T lambda + sum_b map_b^*(Q_b) = 0` and `rhs . lambda = margin > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FarkasRay {
    pub eq_multipliers: Vec<f64>,
    /// svec-packed PSD dual matrix per block.
    pub block_duals: Vec<Vec<f64>>,
    /// `rhs . lambda`, positive by construction (normalized to 1).
    pub margin: f64,
    /// Max-norm of `E^T lambda + sum map^*(Q)` after normalization.
    pub residual: f64,
}

/// Residual summary of the final iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

/// Classification of a solve.
#[derive(Debug, Clone, PartialEq)]
pub enum SdpStatus {
    Feasible(FeasibleWitness),
    Infeasible(FarkasRay),
    Unknown { reason: String },
}

impl SdpStatus {
    pub fn kind(&self) -> StatusKind {
        match self {
            SdpStatus::Feasible(_) => StatusKind::Feasible,
            SdpStatus::Infeasible(_) => StatusKind::Infeasible,
            SdpStatus::Unknown { .. } => StatusKind::Unknown,
        }
    }
}

/// Status without witnesses, for reports and cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatusKind {
    Feasible,
    Infeasible,
    Unknown,
}

impl std::fmt::Display for StatusKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StatusKind::Feasible => write!(f, "feasible"),
            StatusKind::Infeasible => write!(f, "infeasible"),
            StatusKind::Unknown => write!(f, "unknown"),
        }
    }
}

/// Outcome of a solve: status with witnesses plus iteration diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpOutcome {
    pub status: SdpStatus,
    pub iterations: usize,
    pub residuals: Residuals,
}
