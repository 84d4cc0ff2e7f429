//! Polyhedral coherent risk measures `rho[theta] = max_{q in Q} q^T theta`.
//!
//! Two envelope representations are supported: an explicit list of
//! probability vectors (`Q` is their convex hull) and the mean-AV@R box
//!
//! ```text
//! Q = { p_j (beta + delta_j) : sum_j p_j delta_j = 1 - beta, 0 <= delta_j <= (1 - beta) / alpha }
//! ```

use crate::lp::{solve_lp, LinearProgram, LpError, LpStatus, RowId, RowSense, Sense, VarId, DEFAULT_TOL};
use thiserror::Error;

/// Default cap on the number of candidate vertices examined by
/// [`envelope_vertices`].
pub const DEFAULT_VERTEX_BUDGET: usize = 1 << 20;

const DEDUP_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum RiskError {
    #[error("alpha must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("beta must lie in [0, 1], got {0}")]
    InvalidBeta(f64),
    #[error("{what} has length {got}, expected {expected}")]
    LengthMismatch { what: &'static str, got: usize, expected: usize },
    #[error("vertex enumeration over {branches} realizations needs {candidates} candidates, above the budget of {budget}")]
    BudgetExceeded { branches: usize, candidates: u128, budget: usize },
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum RiskEnvelope {
    MeanAvar { p: Vec<f64>, alpha: f64, beta: f64 },
    Vertices(Vec<Vec<f64>>),
}

impl RiskEnvelope {
    pub fn expectation(p: Vec<f64>) -> Self {
        RiskEnvelope::MeanAvar { p, alpha: 1.0, beta: 1.0 }
    }

    pub fn branches(&self) -> usize {
        match self {
            RiskEnvelope::MeanAvar { p, .. } => p.len(),
            RiskEnvelope::Vertices(v) => v.first().map_or(0, Vec::len),
        }
    }

    fn check(&self) -> Result<(), RiskError> {
        if let RiskEnvelope::MeanAvar { alpha, beta, .. } = self {
            check_params(*alpha, *beta)?;
        }
        Ok(())
    }
}

fn check_params(alpha: f64, beta: f64) -> Result<(), RiskError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(RiskError::InvalidAlpha(alpha));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(RiskError::InvalidBeta(beta));
    }
    Ok(())
}

fn check_len(what: &'static str, got: usize, expected: usize) -> Result<(), RiskError> {
    if got != expected {
        return Err(RiskError::LengthMismatch { what, got, expected });
    }
    Ok(())
}

/// AV@R through the Rockafellar-Uryasev formula
/// `min_q q + E[(theta - q)^+] / alpha`; the minimum sits at one of the
/// `theta_j`, so every candidate is evaluated.
pub fn avar(theta: &[f64], p: &[f64], alpha: f64) -> Result<f64, RiskError> {
    check_params(alpha, 0.0)?;
    check_len("theta", theta.len(), p.len())?;
    let ru = |q: f64| q + theta.iter().zip(p).map(|(&t, &pj)| pj * (t - q).max(0.0)).sum::<f64>() / alpha;
    Ok(theta.iter().map(|&q| ru(q)).fold(f64::INFINITY, f64::min))
}

pub fn rho_mean_avar(theta: &[f64], p: &[f64], alpha: f64, beta: f64) -> Result<f64, RiskError> {
    check_params(alpha, beta)?;
    let mean: f64 = theta.iter().zip(p).map(|(t, q)| t * q).sum();
    Ok(beta * mean + (1.0 - beta) * avar(theta, p, alpha)?)
}

/// Worst-case probability vector in `Q` for `theta` and the resulting value.
/// Closed form: greedy allocation of the AV@R density on the largest values
/// for the box, best vertex otherwise.
pub fn worst_case_measure(theta: &[f64], env: &RiskEnvelope) -> Result<(f64, Vec<f64>), RiskError> {
    env.check()?;
    match env {
        RiskEnvelope::MeanAvar { p, alpha, beta } => {
            check_len("theta", theta.len(), p.len())?;
            let mut order: Vec<usize> = (0..p.len()).collect();
            order.sort_by(|&a, &b| theta[b].total_cmp(&theta[a]));
            let cap = 1.0 / alpha;
            let mut left: f64 = 1.0;
            let mut q: Vec<f64> = p.iter().map(|pj| beta * pj).collect();
            for &j in &order {
                if left <= 0.0 {
                    break;
                }
                let take = (p[j] * cap).min(left);
                q[j] += (1.0 - beta) * take;
                left -= take;
            }
            let value = q.iter().zip(theta).map(|(a, b)| a * b).sum();
            Ok((value, q))
        }
        RiskEnvelope::Vertices(vs) => {
            let mut best: Option<(f64, &Vec<f64>)> = None;
            for q in vs {
                check_len("vertex", q.len(), theta.len())?;
                let v: f64 = q.iter().zip(theta).map(|(a, b)| a * b).sum();
                if best.is_none_or(|(bv, _)| v > bv) {
                    best = Some((v, q));
                }
            }
            let (v, q) = best.ok_or(RiskError::LengthMismatch {
                what: "vertex list",
                got: 0,
                expected: 1,
            })?;
            Ok((v, q.clone()))
        }
    }
}

/// Total mass of the change of measure emitted by [`envelope_constraints`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mass {
    /// A fresh variable pinned to this value by a dedicated equality row.
    /// The row's dual is the sensitivity of the optimum to the mass.
    Constant(f64),
    /// An existing variable of the program.
    Var(VarId),
}

/// Variables and rows added by [`envelope_constraints`].
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeBlock {
    /// `gamma_j >= 0`, one per realization.
    pub gamma: Vec<VarId>,
    pub mass: VarId,
    /// Row pinning the mass when [`Mass::Constant`] was requested.
    pub mass_row: Option<RowId>,
    /// `delta'` (box form) or `Phi` (vertex form).
    pub aux: Vec<VarId>,
}

/// Adds variables `gamma` constrained to `gamma in mass * Q`. All variable
/// bounds are zero or infinite and all right-hand sides are zero except the
/// mass row, so the block is positively homogeneous in the mass.
pub fn envelope_constraints(
    lp: &mut LinearProgram,
    env: &RiskEnvelope,
    mass: Mass,
    prefix: &str,
) -> Result<EnvelopeBlock, RiskError> {
    env.check()?;
    let inf = f64::INFINITY;
    let (g, mass_row) = match mass {
        Mass::Var(v) => (v, None),
        Mass::Constant(value) => {
            let g = lp.add_var(format!("{prefix}mass"), 0.0, inf, 0.0);
            let row = lp.add_row(format!("{prefix}mass_fix"), [(g, 1.0)], RowSense::Eq, value);
            (g, Some(row))
        }
    };
    let j_count = env.branches();
    let gamma: Vec<VarId> = (0..j_count)
        .map(|j| lp.add_var(format!("{prefix}gamma{j}"), 0.0, inf, 0.0))
        .collect();
    let mut aux = Vec::new();
    match env {
        RiskEnvelope::MeanAvar { p, alpha, beta } => {
            for j in 0..j_count {
                let dj = lp.add_var(format!("{prefix}delta{j}"), 0.0, inf, 0.0);
                aux.push(dj);
                lp.add_row(
                    format!("{prefix}density{j}"),
                    [(gamma[j], 1.0), (g, -beta * p[j]), (dj, -p[j])],
                    RowSense::Eq,
                    0.0,
                );
                lp.add_row(
                    format!("{prefix}cap{j}"),
                    [(dj, 1.0), (g, -(1.0 - beta) / alpha)],
                    RowSense::Le,
                    0.0,
                );
            }
            let coeffs: Vec<(VarId, f64)> = aux
                .iter()
                .zip(p)
                .map(|(&d, &pj)| (d, pj))
                .chain(std::iter::once((g, -(1.0 - beta))))
                .collect();
            lp.add_row(format!("{prefix}avar_mass"), coeffs, RowSense::Eq, 0.0);
        }
        RiskEnvelope::Vertices(vs) => {
            for (k, q) in vs.iter().enumerate() {
                check_len("vertex", q.len(), j_count)?;
                aux.push(lp.add_var(format!("{prefix}phi{k}"), 0.0, inf, 0.0));
            }
            let coeffs: Vec<(VarId, f64)> =
                aux.iter().map(|&v| (v, 1.0)).chain(std::iter::once((g, -1.0))).collect();
            lp.add_row(format!("{prefix}phi_mass"), coeffs, RowSense::Eq, 0.0);
            for j in 0..j_count {
                let coeffs: Vec<(VarId, f64)> = std::iter::once((gamma[j], 1.0))
                    .chain(aux.iter().zip(vs).map(|(&v, q)| (v, -q[j])))
                    .collect();
                lp.add_row(format!("{prefix}mix{j}"), coeffs, RowSense::Eq, 0.0);
            }
        }
    }
    Ok(EnvelopeBlock {
        gamma,
        mass: g,
        mass_row,
        aux,
    })
}

/// `max_{q in Q} q^T theta` solved as a linear program over the envelope block.
pub fn rho_via_envelope(theta: &[f64], env: &RiskEnvelope) -> Result<f64, RiskError> {
    Ok(rho_via_envelope_with_measure(theta, env)?.0)
}

/// As [`rho_via_envelope`], also returning the optimal `q`.
pub fn rho_via_envelope_with_measure(theta: &[f64], env: &RiskEnvelope) -> Result<(f64, Vec<f64>), RiskError> {
    check_len("theta", theta.len(), env.branches())?;
    let mut lp = LinearProgram::new(Sense::Maximize);
    let block = envelope_constraints(&mut lp, env, Mass::Constant(1.0), "")?;
    for (&g, &t) in block.gamma.iter().zip(theta) {
        lp.set_cost(g, t);
    }
    let sol = solve_lp(&lp, DEFAULT_TOL)?;
    if sol.status != LpStatus::Optimal {
        return Err(LpError::NumericalFailure(format!("envelope program ended {:?}", sol.status)).into());
    }
    let q = block.gamma.iter().map(|&g| sol.value(g)).collect();
    Ok((sol.objective, q))
}

fn dedup(points: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for q in points {
        if !out.iter().any(|o| o.iter().zip(&q).all(|(a, b)| (a - b).abs() <= DEDUP_TOL)) {
            out.push(q);
        }
    }
    out
}

/// True when `q` is a convex combination of `others`.
fn in_hull(q: &[f64], others: &[&Vec<f64>]) -> Result<bool, RiskError> {
    if others.is_empty() {
        return Ok(false);
    }
    let mut lp = LinearProgram::new(Sense::Minimize);
    let w: Vec<VarId> = (0..others.len()).map(|k| lp.add_var(format!("w{k}"), 0.0, 1.0, 0.0)).collect();
    lp.add_row("sum", w.iter().map(|&v| (v, 1.0)), RowSense::Eq, 1.0);
    for (j, &qj) in q.iter().enumerate() {
        lp.add_row(format!("c{j}"), w.iter().zip(others).map(|(&v, o)| (v, o[j])), RowSense::Eq, qj);
    }
    Ok(solve_lp(&lp, DEFAULT_TOL)?.status == LpStatus::Optimal)
}

/// Extreme points of `Q`, deduplicated within 1e-10.
pub fn envelope_vertices(env: &RiskEnvelope, budget: usize) -> Result<Vec<Vec<f64>>, RiskError> {
    env.check()?;
    match env {
        RiskEnvelope::Vertices(vs) => {
            let pts = dedup(vs.clone());
            let mut keep = Vec::new();
            for (k, q) in pts.iter().enumerate() {
                let others: Vec<&Vec<f64>> = pts.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, o)| o).collect();
                if !in_hull(q, &others)? {
                    keep.push(q.clone());
                }
            }
            Ok(keep)
        }
        RiskEnvelope::MeanAvar { p, alpha, beta } => {
            let support: Vec<usize> = (0..p.len()).filter(|&j| p[j] > 0.0).collect();
            let n = support.len();
            let candidates = (n as u128) << n.saturating_sub(1).min(127);
            if candidates > budget as u128 {
                return Err(RiskError::BudgetExceeded {
                    branches: p.len(),
                    candidates,
                    budget,
                });
            }
            let u = (1.0 - beta) / alpha;
            let target = 1.0 - beta;
            let mut pts = Vec::new();
            // a vertex of box ∩ hyperplane has at most one coordinate strictly inside the box
            for (fi, &free) in support.iter().enumerate() {
                let others: Vec<usize> = support.iter().enumerate().filter(|&(i, _)| i != fi).map(|(_, &j)| j).collect();
                for mask in 0u64..(1u64 << others.len()) {
                    let mut delta = vec![0.0; p.len()];
                    let mut used = 0.0;
                    for (bit, &j) in others.iter().enumerate() {
                        if mask >> bit & 1 == 1 {
                            delta[j] = u;
                            used += p[j] * u;
                        }
                    }
                    let df = (target - used) / p[free];
                    let slack = 1e-12 * (1.0 + u);
                    if df < -slack || df > u + slack {
                        continue;
                    }
                    delta[free] = df.clamp(0.0, u);
                    pts.push(p.iter().zip(&delta).map(|(pj, dj)| pj * (beta + dj)).collect());
                }
            }
            Ok(dedup(pts))
        }
    }
}
