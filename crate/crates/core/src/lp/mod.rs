//! Linear programming layer.
//!
//! Every stage problem in the crate is expressed as a [`LinearProgram`] and
//! handed to an [`LpSolver`]. The reference backend is [`DenseSimplex`], a
//! bounded-variable two-phase primal simplex on a dense tableau. It is meant
//! for desk-scale problems (a few thousand rows at most) and is fully
//! deterministic.
//!
//! Dual multipliers follow the sensitivity convention: the dual of a row is
//! the derivative of the optimal objective with respect to that row's
//! right-hand side. For a minimization this makes the multiplier of a `>=` row
//! nonnegative and the multiplier of a `<=` row nonpositive; for a
//! maximization the signs are mirrored.

mod check;
mod export;
mod simplex;

pub use check::{check_solution, SolutionReport};
pub use export::write_lp_format;
pub use simplex::DenseSimplex;

use std::collections::HashSet;
use thiserror::Error;

/// Default absolute tolerance on residuals.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Eq,
    Le,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub name: String,
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("row {row} references undeclared variable {var}")]
    UnknownVariable { row: String, var: usize },
    #[error("variable {0} has lower bound above upper bound")]
    InvertedBounds(String),
    #[error("duplicate identifier {0}")]
    DuplicateName(String),
    #[error("non-finite data in {0}")]
    NonFinite(String),
    #[error("simplex failed to reach the requested tolerance: {0}")]
    NumericalFailure(String),
}

/// An immutable-once-built linear program.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub sense: Sense,
    pub vars: Vec<Variable>,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            vars: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> VarId {
        self.vars.push(Variable {
            name: name.into(),
            lower,
            upper,
            cost,
        });
        VarId(self.vars.len() - 1)
    }

    /// Adds a row; zero coefficients are dropped and repeated variables are summed.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: impl IntoIterator<Item = (VarId, f64)>,
        sense: RowSense,
        rhs: f64,
    ) -> RowId {
        let mut merged: Vec<(VarId, f64)> = Vec::new();
        for (v, a) in coeffs {
            if a == 0.0 {
                continue;
            }
            match merged.iter_mut().find(|(w, _)| *w == v) {
                Some(entry) => entry.1 += a,
                None => merged.push((v, a)),
            }
        }
        merged.retain(|(_, a)| *a != 0.0);
        self.rows.push(Row {
            name: name.into(),
            coeffs: merged,
            sense,
            rhs,
        });
        RowId(self.rows.len() - 1)
    }

    pub fn set_cost(&mut self, var: VarId, cost: f64) {
        self.vars[var.0].cost = cost;
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Checks the structural invariants: coefficient references, bound order,
    /// finite data and unique identifiers.
    pub fn validate(&self) -> Result<(), LpError> {
        self.validate_data()?;
        let mut seen = HashSet::new();
        for name in self.vars.iter().map(|v| &v.name).chain(self.rows.iter().map(|r| &r.name)) {
            if !seen.insert(name.as_str()) {
                return Err(LpError::DuplicateName(name.clone()));
            }
        }
        Ok(())
    }

    /// The part of [`validate`](Self::validate) the solver relies on.
    pub(crate) fn validate_data(&self) -> Result<(), LpError> {
        let n = self.vars.len();
        for v in &self.vars {
            if v.lower > v.upper {
                return Err(LpError::InvertedBounds(v.name.clone()));
            }
            if !v.cost.is_finite() || v.lower.is_nan() || v.upper.is_nan() || v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(LpError::NonFinite(v.name.clone()));
            }
        }
        for r in &self.rows {
            if !r.rhs.is_finite() {
                return Err(LpError::NonFinite(r.name.clone()));
            }
            for &(v, a) in &r.coeffs {
                if v.0 >= n {
                    return Err(LpError::UnknownVariable {
                        row: r.name.clone(),
                        var: v.0,
                    });
                }
                if !a.is_finite() {
                    return Err(LpError::NonFinite(r.name.clone()));
                }
            }
        }
        Ok(())
    }

    /// Objective value of `x` under this program's cost vector.
    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.vars.iter().zip(x).map(|(v, xi)| v.cost * xi).sum()
    }

    /// Row activities `a_i^T x`.
    pub fn activities(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.coeffs.iter().map(|&(v, a)| a * x[v.0]).sum())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub primal: Vec<f64>,
    /// One multiplier per row: derivative of the optimal value with respect
    /// to the row's right-hand side.
    pub duals: Vec<f64>,
    /// `c_j - a_j^T duals` for each variable.
    pub reduced_costs: Vec<f64>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn value(&self, v: VarId) -> f64 {
        self.primal[v.0]
    }

    pub fn dual(&self, r: RowId) -> f64 {
        self.duals[r.0]
    }
}

/// Backend contract. Implementations must be deterministic.
pub trait LpSolver {
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution, LpError>;
}

/// Solves `lp` with the reference backend at tolerance `tol`.
pub fn solve_lp(lp: &LinearProgram, tol: f64) -> Result<LpSolution, LpError> {
    DenseSimplex::with_tolerance(tol).solve(lp)
}
