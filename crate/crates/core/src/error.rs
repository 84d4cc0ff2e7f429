use crate::lp::{solve_lp, LinearProgram, LpError, LpSolution, LpStatus};
use crate::model::ModelError;
use crate::risk::RiskError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{context}: linear program ended {status:?}")]
    Status { context: String, status: LpStatus },
    #[error("{0}")]
    Invalid(String),
}

/// Solves `lp` and insists on an optimal basis.
pub(crate) fn solve_optimal(lp: &LinearProgram, tol: f64, context: impl FnOnce() -> String) -> Result<LpSolution, SolveError> {
    let sol = solve_lp(lp, tol)?;
    if sol.status != LpStatus::Optimal {
        return Err(SolveError::Status {
            context: context(),
            status: sol.status,
        });
    }
    Ok(sol)
}
