//! Grid verification of the one-sided Lipschitz regularization
//!
//! ```text
//! D_t(pi, gamma) = - inf_{zeta >= 0} [ xbar_t^T zeta + V_t^*(pi - zeta, gamma) ],
//! V^*(psi, gamma) = sup_x psi^T x - gamma V(x),
//! ```
//!
//! where the supremum runs over the whole domain of `V_t`, not only the box.

use super::{exact_cost_to_go, exact_dual_value};
use crate::error::SolveError;
use crate::model::Instance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct CoperspectiveSample {
    pub pi: Vec<f64>,
    pub gamma: f64,
    /// Exact `D_t` from the unrolled dual program.
    pub exact: f64,
    /// Grid approximation of the regularized conjugate form.
    pub grid: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoperspectiveReport {
    pub samples: Vec<CoperspectiveSample>,
    pub max_discrepancy: f64,
    /// `L_t h`, the grid-error allowance.
    pub tolerance: f64,
}

impl CoperspectiveReport {
    pub fn pass(&self) -> bool {
        self.max_discrepancy <= self.tolerance
    }
}

/// Cartesian product of per-axis grids.
fn product(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect()
    })
}

fn axis(upper: f64, h: f64) -> Vec<f64> {
    let n = (upper / h).ceil() as usize;
    (0..=n).map(|i| (i as f64 * h).min(upper)).collect()
}

/// Compares `D_t` with the grid form at `samples` random dual states of
/// state `t` (`1 <= t <= T`, state dimension at most 2). `V_t` is tabulated
/// on a grid of spacing `h` covering twice the state box.
pub fn coperspective_check(
    inst: &Instance,
    t: usize,
    h: f64,
    samples: usize,
    seed: u64,
    node_budget: usize,
) -> Result<CoperspectiveReport, SolveError> {
    let horizon = inst.stages.len();
    if t == 0 || t > horizon {
        return Err(SolveError::Invalid(format!("state index {t} outside 1..={horizon}")));
    }
    let xbar = inst.stages[t - 1].xbar.clone();
    if xbar.len() > 2 {
        return Err(SolveError::Invalid("grid check supports at most two state components".into()));
    }
    if !(h > 0.0) {
        return Err(SolveError::Invalid(format!("grid spacing must be positive, got {h}")));
    }
    let lip = if t < horizon { inst.stages[t].lipschitz } else { 0.0 };

    let xs = product(&xbar.iter().map(|&u| axis(2.0 * u, h)).collect::<Vec<_>>());
    let mut table: Vec<(Vec<f64>, f64)> = Vec::with_capacity(xs.len());
    for x in xs {
        if let Some(v) = exact_cost_to_go(inst, t, &x, node_budget)? {
            table.push((x, v));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(samples);
    let mut worst: f64 = 0.0;
    for k in 0..samples {
        let gamma = if k % 5 == 0 { 0.0 } else { rng.gen_range(0.0..=1.0) };
        let radius = if gamma > 0.0 { gamma * lip } else { lip.max(1.0) };
        let pi: Vec<f64> = xbar.iter().map(|_| rng.gen_range(-radius..=radius)).collect();

        let exact = exact_dual_value(inst, t, &pi, gamma, false, node_budget)?;

        // outer infimum over zeta on a grid plus the kink max(pi, 0)
        let zeta_axes: Vec<Vec<f64>> = pi
            .iter()
            .map(|&p| {
                let mut a = axis(p.abs() + lip + 1.0, h);
                a.push(p.max(0.0));
                a
            })
            .collect();
        let mut best = f64::INFINITY;
        for zeta in product(&zeta_axes) {
            let psi: Vec<f64> = pi.iter().zip(&zeta).map(|(p, z)| p - z).collect();
            let conj = table
                .iter()
                .map(|(x, v)| psi.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - gamma * v)
                .fold(f64::NEG_INFINITY, f64::max);
            let val = xbar.iter().zip(&zeta).map(|(u, z)| u * z).sum::<f64>() + conj;
            best = best.min(val);
        }
        let grid = -best;
        worst = worst.max((exact - grid).abs());
        out.push(CoperspectiveSample { pi, gamma, exact, grid });
    }
    Ok(CoperspectiveReport {
        samples: out,
        max_discrepancy: worst,
        tolerance: lip * h,
    })
}
