//! Deterministic backward upper bound from trial states.
//!
//! Given upper values `v^k` at trial states `x^k` of state `t + 1`, the cost-to-go
//! is bounded above by the Lipschitz inner extension
//!
//! ```text
//! Vbar(x) = min_{mu in simplex} sum_k mu_k v^k + L ||x - sum_k mu_k x^k||_1,
//! ```
//!
//! valid for convex `V` whose slopes are bounded by `L` componentwise.

use crate::error::{solve_optimal, SolveError};
use crate::lp::{LinearProgram, RowSense, Sense, VarId};
use crate::model::Instance;
use crate::primal::PrimalTrajectory;
use crate::risk::worst_case_measure;

/// Trial states per state index; `points[t]` holds states entering stage `t`.
/// `points[0]` is unused (the root state is `x0`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrialPointSet {
    pub points: Vec<Vec<Vec<f64>>>,
}

impl TrialPointSet {
    pub fn new(horizon: usize) -> Self {
        Self {
            points: vec![Vec::new(); horizon],
        }
    }

    /// Adds `x` to state `t` unless an identical point is present.
    pub fn push(&mut self, t: usize, x: Vec<f64>) {
        let pts = &mut self.points[t];
        if !pts.iter().any(|p| p.iter().zip(&x).all(|(a, b)| (a - b).abs() <= 1e-12)) {
            pts.push(x);
        }
    }

    pub fn from_trajectories(horizon: usize, trajectories: &[PrimalTrajectory]) -> Self {
        let mut set = Self::new(horizon);
        for traj in trajectories {
            for step in traj.iter().filter(|s| s.stage > 0) {
                set.push(step.stage, step.incoming.clone());
            }
        }
        set
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhilpottBound {
    /// Upper values at the trial states, `values[t][i]` for `points[t][i]`.
    pub values: Vec<Vec<f64>>,
    pub root: f64,
}

/// `min c_j^T y + Vbar_{s+1}(x_j)` for one realization of stage `s`.
fn realization_upper(
    inst: &Instance,
    s: usize,
    j: usize,
    x_prev: &[f64],
    next: Option<(&[Vec<f64>], &[f64])>,
    tol: f64,
) -> Result<f64, SolveError> {
    let stage = &inst.stages[s];
    let r = &stage.realizations[j];
    let inf = f64::INFINITY;
    let mut lp = LinearProgram::new(Sense::Minimize);
    let x: Vec<VarId> = stage.xbar.iter().enumerate().map(|(i, &u)| lp.add_var(format!("x{i}"), 0.0, u, 0.0)).collect();
    let y: Vec<VarId> = stage
        .ybar
        .iter()
        .zip(&r.c)
        .enumerate()
        .map(|(i, (&u, &c))| lp.add_var(format!("y{i}"), 0.0, u, c))
        .collect();
    let mut rows: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); r.d.len()];
    for &(row, col, v) in r.a.entries() {
        rows[row].push((x[col], v));
    }
    for &(row, col, v) in r.t.entries() {
        rows[row].push((y[col], v));
    }
    let mut rhs = r.d.clone();
    for &(row, col, v) in r.b.entries() {
        rhs[row] -= v * x_prev[col];
    }
    for (i, (c, b)) in rows.into_iter().zip(rhs).enumerate() {
        lp.add_row(format!("dyn{i}"), c, RowSense::Eq, b);
    }
    if let Some((pts, vals)) = next {
        let l = inst.stages[s + 1].lipschitz;
        let mu: Vec<VarId> = vals.iter().enumerate().map(|(k, &v)| lp.add_var(format!("mu{k}"), 0.0, inf, v)).collect();
        lp.add_row("simplex", mu.iter().map(|&m| (m, 1.0)), RowSense::Eq, 1.0);
        for (i, &xi) in x.iter().enumerate() {
            let ep = lp.add_var(format!("ep{i}"), 0.0, inf, l);
            let em = lp.add_var(format!("em{i}"), 0.0, inf, l);
            let coeffs = [(xi, 1.0), (ep, -1.0), (em, 1.0)]
                .into_iter()
                .chain(mu.iter().zip(pts).map(|(&m, p)| (m, -p[i])));
            lp.add_row(format!("dev{i}"), coeffs, RowSense::Eq, 0.0);
        }
    }
    Ok(solve_optimal(&lp, tol, || format!("upper bound at stage {} realization {}", s + 1, j + 1))?.objective)
}

fn stage_upper(
    inst: &Instance,
    s: usize,
    x_prev: &[f64],
    next: Option<(&[Vec<f64>], &[f64])>,
    tol: f64,
) -> Result<f64, SolveError> {
    let stage = &inst.stages[s];
    let theta = (0..stage.branches())
        .map(|j| realization_upper(inst, s, j, x_prev, next, tol))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(worst_case_measure(&theta, &stage.envelope())?.0)
}

/// Backward recursion over the trial states, ending with the value at `x0`.
pub fn philpott_upper_bound(inst: &Instance, trials: &TrialPointSet, tol: f64) -> Result<PhilpottBound, SolveError> {
    let horizon = inst.stages.len();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); horizon];
    for t in (1..horizon).rev() {
        let pts = trials.points.get(t).map(Vec::as_slice).unwrap_or(&[]);
        if pts.is_empty() {
            return Err(SolveError::Invalid(format!("no trial states for stage {}", t + 1)));
        }
        let mut vals = Vec::with_capacity(pts.len());
        for x in pts {
            let next = (t + 1 < horizon).then(|| (trials.points[t + 1].as_slice(), values[t + 1].as_slice()));
            vals.push(stage_upper(inst, t, x, next, tol)?);
        }
        values[t] = vals;
    }
    let next = (horizon > 1).then(|| (trials.points[1].as_slice(), values[1].as_slice()));
    let root = stage_upper(inst, 0, &inst.x0, next, tol)?;
    Ok(PhilpottBound { values, root })
}
