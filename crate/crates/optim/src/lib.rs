//! Exact solvers for the small linear and mixed-binary programs built by the
//! planners.
//!
//! Programs are always maximizations over variables with finite bounds. The
//! continuous relaxation is solved by a dense bounded-variable primal simplex
//! ([`solve_lp`]); binaries are handled by depth-first branch and bound
//! ([`solve_milp`]).

mod lp_format;
mod milp;
mod model;
mod simplex;

pub use lp_format::write_lp;
pub use milp::{solve_milp, solve_milp_with, MilpOptions};
pub use model::{Constraint, LinearProgram, Relation, VarId, Variable};
pub use simplex::solve_lp;

use std::collections::BTreeMap;

/// Primal feasibility tolerance, relative to `1 + |rhs|`.
pub const FEASIBILITY_TOL: f64 = 1e-7;
/// Distance from {0, 1} under which a binary counts as integral.
pub const INTEGRALITY_TOL: f64 = 1e-7;
/// A node is pruned when its bound does not beat the incumbent by more than this.
pub const PRUNE_GAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: Status,
    pub objective: f64,
    /// One value per variable, indexed like [`LinearProgram::variables`].
    pub values: Vec<f64>,
}

impl LpSolution {
    pub(crate) fn infeasible(n: usize) -> Self {
        LpSolution {
            status: Status::Infeasible,
            objective: f64::NEG_INFINITY,
            values: vec![0.0; n],
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub fn value(&self, var: VarId) -> f64 {
        self.values[var.index()]
    }

    /// Variable name to value.
    pub fn assignment<'a>(&self, lp: &'a LinearProgram) -> BTreeMap<&'a str, f64> {
        lp.variables()
            .iter()
            .zip(&self.values)
            .map(|(v, &x)| (v.name.as_str(), x))
            .collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("variable `{0}` has a non-finite or inverted bound")]
    InvalidBounds(String),
    #[error("variable `{0}` is binary; use solve_milp")]
    BinaryInLp(String),
    #[error("objective is unbounded, which finite bounds should make impossible")]
    Unbounded,
    #[error("simplex exceeded {0} iterations")]
    IterationLimit(usize),
    #[error("branch and bound exceeded {limit} nodes")]
    NodeLimit {
        limit: usize,
        incumbent: Option<Box<LpSolution>>,
    },
}
