//! Dual SDDP: forward-only cutting planes on the dual value functions and a
//! deterministic upper bound.
//!
//! For the state `t` entering stage `t` (with `x_t <= xbar_t` produced by
//! stage `t - 1`),
//!
//! ```text
//! D_t(pi, gamma) = inf_{0 <= x <= xbar_t} gamma V_t(x) - pi^T x,
//! D_T(pi, gamma) = -xbar_T^T max(pi, 0).
//! ```
//!
//! `D_t` is concave and positively homogeneous, so it is overestimated by
//! the minimum of cuts `x^T pi + z gamma` without intercept. The optimal
//! value is `sup_{pi_0} pi_0^T x0 + D_0(pi_0, 1)`, where the first stage
//! keeps `pi_0 = sum_j B_j^T lambda_j` as an equality.

use crate::error::{solve_optimal, SolveError};
use crate::lp::{LinearProgram, RowId, RowSense, Sense, VarId, DEFAULT_TOL};
use crate::model::Instance;
use crate::risk::{envelope_constraints, EnvelopeBlock, Mass};
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const DEFAULT_GAMMA_ROUND_TOL: f64 = 1e-9;
pub const DEFAULT_SANITY_TOL: f64 = 1e-6;

/// Dual state `(pi, gamma)` of the state entering stage `stage`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualState {
    pub stage: usize,
    pub pi: Vec<f64>,
    pub gamma: f64,
}

/// Homogeneous cut `D_stage(pi, gamma) <= x^T pi + z gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCut {
    pub stage: usize,
    pub x: Vec<f64>,
    pub z: f64,
    pub iteration: usize,
}

impl DualCut {
    pub fn eval(&self, pi: &[f64], gamma: f64) -> f64 {
        self.x.iter().zip(pi).map(|(a, b)| a * b).sum::<f64>() + self.z * gamma
    }

    /// Always zero; cuts of a positively homogeneous function pass through the origin.
    pub fn intercept(&self) -> f64 {
        0.0
    }
}

pub fn terminal_dual_value(pi: &[f64], _gamma: f64, xbar: &[f64]) -> f64 {
    -pi.iter().zip(xbar).map(|(p, u)| u * p.max(0.0)).sum::<f64>()
}

/// Upper models of `D_1 .. D_{T-1}`; `D_T` is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualApprox {
    pub cuts: Vec<Vec<DualCut>>,
    pub terminal_xbar: Vec<f64>,
}

impl DualApprox {
    pub fn empty(inst: &Instance) -> Self {
        Self {
            cuts: vec![Vec::new(); inst.stages.len() + 1],
            terminal_xbar: inst.stages.last().map(|s| s.xbar.clone()).unwrap_or_default(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.cuts.len() - 1
    }

    pub fn add(&mut self, cut: DualCut) {
        let t = cut.stage;
        self.cuts[t].push(cut);
    }

    /// `min_k x_k^T pi + z_k gamma`, the closed form at `t = T`, and `+inf`
    /// for a stage without cuts.
    pub fn eval(&self, t: usize, pi: &[f64], gamma: f64) -> f64 {
        if t >= self.horizon() {
            return terminal_dual_value(pi, gamma, &self.terminal_xbar);
        }
        self.cuts[t].iter().map(|c| c.eval(pi, gamma)).fold(f64::INFINITY, f64::min)
    }

    pub fn total_cuts(&self) -> usize {
        self.cuts.iter().map(Vec::len).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dual approximation serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Source of the incoming price in a dual stage block.
#[derive(Debug, Clone)]
pub(crate) enum Incoming<'a> {
    Fixed(&'a [f64]),
    Var(Vec<VarId>),
}

/// How the value of each child dual state enters the objective.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Children<'a> {
    /// Cuts of `D_{s+1}` (closed form when `s + 1 = T`).
    Approx(&'a DualApprox),
    /// Exact recursion unrolled over the subtree.
    Unrolled,
}

#[derive(Debug, Clone)]
pub(crate) struct DualBody {
    /// One row per incoming state component; its dual is the cut slope `x`.
    pub pi_rows: Vec<RowId>,
    pub envelope: EnvelopeBlock,
    pub child_pi: Vec<Vec<VarId>>,
}

fn transpose_rows(m: &crate::model::SparseMatrix, cols: usize, lambda: &[VarId]) -> Vec<Vec<(VarId, f64)>> {
    let mut out = vec![Vec::new(); cols];
    for &(r, c, v) in m.entries() {
        out[c].push((lambda[r], v));
    }
    out
}

/// Adds the dual program of stage `s` (realizations of stage `s`) to `lp`:
///
/// ```text
/// max  -xbar_s^T zeta + sum_j ( -d_j^T lambda_j - ybar^T xi_j + value_j(pi_j, gamma_j) )
/// s.t. gamma in mass * Q
///      zeta + sum_j B_j^T lambda_j >= pi          (equality without zeta when s = 0)
///      pi_j + A_j^T lambda_j = 0
///      gamma_j c_j + T_j^T lambda_j + xi_j >= 0
///      -gamma_j L <= pi_j <= gamma_j L            (when `lipschitz` and s + 1 < T)
/// ```
pub(crate) fn add_dual_stage(
    lp: &mut LinearProgram,
    inst: &Instance,
    s: usize,
    incoming: Incoming<'_>,
    mass: Mass,
    children: Children<'_>,
    lipschitz: bool,
    prefix: &str,
) -> Result<DualBody, SolveError> {
    let stage = &inst.stages[s];
    let horizon = inst.stages.len();
    let inf = f64::INFINITY;
    let n_in = inst.incoming_dim(s);
    let nx = stage.nx();
    let ny = stage.ny();
    let envelope = envelope_constraints(lp, &stage.envelope(), mass, prefix)?;

    let mut coupling: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); n_in];
    if let Some(xbar) = inst.incoming_xbar(s) {
        for (i, &u) in xbar.iter().enumerate() {
            let z = lp.add_var(format!("{prefix}zeta{i}"), 0.0, inf, -u);
            coupling[i].push((z, 1.0));
        }
    }
    let mut child_pi = Vec::with_capacity(stage.branches());
    for (j, r) in stage.realizations.iter().enumerate() {
        let gj = envelope.gamma[j];
        let lambda: Vec<VarId> = r
            .d
            .iter()
            .enumerate()
            .map(|(i, &d)| lp.add_var(format!("{prefix}lambda{j}_{i}"), f64::NEG_INFINITY, inf, -d))
            .collect();
        for &(row, col, v) in r.b.entries() {
            coupling[col].push((lambda[row], v));
        }
        let pi: Vec<VarId> = (0..nx)
            .map(|i| lp.add_var(format!("{prefix}pi{j}_{i}"), f64::NEG_INFINITY, inf, 0.0))
            .collect();
        for (i, terms) in transpose_rows(&r.a, nx, &lambda).into_iter().enumerate() {
            let coeffs = std::iter::once((pi[i], 1.0)).chain(terms);
            lp.add_row(format!("{prefix}state{j}_{i}"), coeffs, RowSense::Eq, 0.0);
        }
        for (k, terms) in transpose_rows(&r.t, ny, &lambda).into_iter().enumerate() {
            let xi = lp.add_var(format!("{prefix}xi{j}_{k}"), 0.0, inf, -stage.ybar[k]);
            let coeffs = [(gj, r.c[k]), (xi, 1.0)].into_iter().chain(terms);
            lp.add_row(format!("{prefix}ctrl{j}_{k}"), coeffs, RowSense::Ge, 0.0);
        }
        let terminal = s + 1 == horizon;
        if lipschitz && !terminal {
            let l = inst.stages[s + 1].lipschitz;
            for (i, &p) in pi.iter().enumerate() {
                lp.add_row(format!("{prefix}lipu{j}_{i}"), [(p, 1.0), (gj, -l)], RowSense::Le, 0.0);
                lp.add_row(format!("{prefix}lipl{j}_{i}"), [(p, -1.0), (gj, -l)], RowSense::Le, 0.0);
            }
        }
        if terminal {
            for (i, &p) in pi.iter().enumerate() {
                let sv = lp.add_var(format!("{prefix}pos{j}_{i}"), 0.0, inf, -stage.xbar[i]);
                lp.add_row(format!("{prefix}posrow{j}_{i}"), [(sv, 1.0), (p, -1.0)], RowSense::Ge, 0.0);
            }
        } else {
            match children {
                Children::Approx(approx) => {
                    let cuts = &approx.cuts[s + 1];
                    if cuts.is_empty() {
                        return Err(SolveError::Invalid(format!("no cuts for the dual value of stage {}", s + 2)));
                    }
                    let z = lp.add_var(format!("{prefix}hypo{j}"), f64::NEG_INFINITY, inf, 1.0);
                    for (k, cut) in cuts.iter().enumerate() {
                        let coeffs = [(z, 1.0), (gj, -cut.z)]
                            .into_iter()
                            .chain(pi.iter().zip(&cut.x).map(|(&p, &x)| (p, -x)));
                        lp.add_row(format!("{prefix}cut{j}_{k}"), coeffs, RowSense::Le, 0.0);
                    }
                }
                Children::Unrolled => {
                    add_dual_stage(
                        lp,
                        inst,
                        s + 1,
                        Incoming::Var(pi.clone()),
                        Mass::Var(gj),
                        children,
                        lipschitz,
                        &format!("{prefix}{j}."),
                    )?;
                }
            }
        }
        child_pi.push(pi);
    }

    let has_zeta = inst.incoming_xbar(s).is_some();
    let pi_rows = coupling
        .into_iter()
        .enumerate()
        .map(|(i, mut terms)| {
            let sense = if has_zeta { RowSense::Ge } else { RowSense::Eq };
            let rhs = match &incoming {
                Incoming::Fixed(pi) => pi[i],
                Incoming::Var(v) => {
                    terms.push((v[i], -1.0));
                    0.0
                }
            };
            lp.add_row(format!("{prefix}price{i}"), terms, sense, rhs)
        })
        .collect();
    Ok(DualBody {
        pi_rows,
        envelope,
        child_pi,
    })
}

/// Dual program of state `state.stage` (realizations of that stage) with
/// the current upper models of the next stage.
#[derive(Debug, Clone)]
pub struct DualStageLp {
    pub lp: LinearProgram,
    pub pi_rows: Vec<RowId>,
    pub mass_row: RowId,
    pub child_pi: Vec<Vec<VarId>>,
    pub child_gamma: Vec<VarId>,
}

pub fn build_dual_stage_lp(inst: &Instance, state: &DualState, approx: &DualApprox) -> Result<DualStageLp, SolveError> {
    let mut lp = LinearProgram::new(Sense::Maximize);
    let body = add_dual_stage(
        &mut lp,
        inst,
        state.stage,
        Incoming::Fixed(&state.pi),
        Mass::Constant(state.gamma),
        Children::Approx(approx),
        true,
        "",
    )?;
    Ok(DualStageLp {
        lp,
        pi_rows: body.pi_rows,
        mass_row: body.envelope.mass_row.expect("constant mass has a row"),
        child_pi: body.child_pi,
        child_gamma: body.envelope.gamma,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualStageSolution {
    pub value: f64,
    pub cut: DualCut,
    /// Unnormalized child states `(pi_j, gamma_j)`.
    pub children: Vec<DualState>,
    /// `|v - x^T pi - z gamma| / (1 + |v|)`.
    pub sanity_residual: f64,
    /// `|sum_j gamma_j - gamma|`.
    pub mass_residual: f64,
}

fn child_states(sol: &crate::lp::LpSolution, stage: usize, pis: &[Vec<VarId>], gammas: &[VarId]) -> Vec<DualState> {
    pis.iter()
        .zip(gammas)
        .map(|(pi, &g)| DualState {
            stage,
            pi: pi.iter().map(|&v| sol.value(v)).collect(),
            gamma: sol.value(g).max(0.0),
        })
        .collect()
}

pub fn solve_dual_stage(
    inst: &Instance,
    state: &DualState,
    approx: &DualApprox,
    tol: f64,
) -> Result<DualStageSolution, SolveError> {
    let t = state.stage;
    if t == 0 || t >= inst.stages.len() {
        return Err(SolveError::Invalid(format!("dual stage programs exist for states 1..{}", inst.stages.len() - 1)));
    }
    let built = build_dual_stage_lp(inst, state, approx)?;
    let sol = solve_optimal(&built.lp, tol, || format!("dual stage {}", t + 1))?;
    let x: Vec<f64> = built.pi_rows.iter().map(|&r| sol.dual(r)).collect();
    let z = sol.dual(built.mass_row);
    let cut = DualCut {
        stage: t,
        x,
        z,
        iteration: 0,
    };
    let value = sol.objective;
    let sanity_residual = (value - cut.eval(&state.pi, state.gamma)).abs() / (1.0 + value.abs());
    let children = child_states(&sol, t + 1, &built.child_pi, &built.child_gamma);
    let mass: f64 = children.iter().map(|c| c.gamma).sum();
    Ok(DualStageSolution {
        value,
        cut,
        children,
        sanity_residual,
        mass_residual: (mass - state.gamma).abs(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstStageSolution {
    pub upper_bound: f64,
    pub pi0: Vec<f64>,
    pub children: Vec<DualState>,
}

/// Fused first-stage program `sup_{|pi_0| <= L_0} pi_0^T x0 + D_0(pi_0, 1)`.
pub(crate) fn build_first_stage(
    inst: &Instance,
    children: Children<'_>,
    lipschitz: bool,
) -> Result<(LinearProgram, Vec<VarId>, DualBody), SolveError> {
    let mut lp = LinearProgram::new(Sense::Maximize);
    let l0 = inst.stages[0].lipschitz;
    let pi0: Vec<VarId> = inst
        .x0
        .iter()
        .enumerate()
        .map(|(i, &x)| lp.add_var(format!("pi0_{i}"), -l0, l0, x))
        .collect();
    let body = add_dual_stage(
        &mut lp,
        inst,
        0,
        Incoming::Var(pi0.clone()),
        Mass::Constant(1.0),
        children,
        lipschitz,
        "",
    )?;
    Ok((lp, pi0, body))
}

pub fn solve_first_stage(inst: &Instance, approx: &DualApprox, tol: f64) -> Result<FirstStageSolution, SolveError> {
    let (lp, pi0, body) = build_first_stage(inst, Children::Approx(approx), true)?;
    let sol = solve_optimal(&lp, tol, || "dual first stage".to_string())?;
    Ok(FirstStageSolution {
        upper_bound: sol.objective,
        pi0: pi0.iter().map(|&v| sol.value(v)).collect(),
        children: child_states(&sol, 1, &body.child_pi, &body.envelope.gamma),
    })
}

/// Draws `j` with probability `(gamma_j + epsilon) / sum_i (gamma_i + epsilon)`.
pub fn sample_branch(gamma: &[f64], epsilon: f64, rng: &mut impl rand::Rng) -> Result<usize, SolveError> {
    let weights: Vec<f64> = gamma.iter().map(|g| g.max(0.0) + epsilon).collect();
    let dist = WeightedIndex::new(&weights)
        .map_err(|e| SolveError::Invalid(format!("cannot sample from weights {weights:?}: {e}")))?;
    Ok(dist.sample(rng))
}

/// `(pi / gamma, 1)` when `gamma > tol`, else `(pi, 0)`.
pub fn normalize_state(state: &DualState, gamma_round_tol: f64) -> DualState {
    if state.gamma > gamma_round_tol {
        DualState {
            stage: state.stage,
            pi: state.pi.iter().map(|p| p / state.gamma).collect(),
            gamma: 1.0,
        }
    } else {
        DualState {
            stage: state.stage,
            pi: state.pi.clone(),
            gamma: 0.0,
        }
    }
}

/// One cut per stage from a backward sweep at `(pi, gamma) = (0, 1)`.
pub fn init_upper_approx(inst: &Instance, tol: f64) -> Result<DualApprox, SolveError> {
    let mut approx = DualApprox::empty(inst);
    for t in (1..inst.stages.len()).rev() {
        let state = DualState {
            stage: t,
            pi: vec![0.0; inst.incoming_dim(t)],
            gamma: 1.0,
        };
        let sol = solve_dual_stage(inst, &state, &approx, tol)?;
        approx.add(sol.cut);
    }
    Ok(approx)
}

/// Re-solves states `T-1 .. 1` of a forward pass with the freshest
/// downstream cuts, adding one cut per state.
pub fn dual_backward_pass(
    inst: &Instance,
    visited: &[DualState],
    approx: &mut DualApprox,
    iteration: usize,
    tol: f64,
) -> Result<(), SolveError> {
    let mut order: Vec<&DualState> = visited.iter().collect();
    order.sort_by_key(|s| std::cmp::Reverse(s.stage));
    for state in order {
        let mut cut = solve_dual_stage(inst, state, approx, tol)?.cut;
        cut.iteration = iteration;
        approx.add(cut);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualConfig {
    /// Sampling smoothing; `None` means `1e-2 / J` at each stage.
    pub epsilon: Option<f64>,
    pub gamma_round_tol: f64,
    pub sanity_tol: f64,
    pub lp_tol: f64,
    /// Add a backward pass after every forward pass.
    pub backward: bool,
}

impl Default for DualConfig {
    fn default() -> Self {
        Self {
            epsilon: None,
            gamma_round_tol: DEFAULT_GAMMA_ROUND_TOL,
            sanity_tol: DEFAULT_SANITY_TOL,
            lp_tol: DEFAULT_TOL,
            backward: false,
        }
    }
}

/// Counters collected over every dual stage solve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DualStats {
    pub stage_solves: usize,
    pub sanity_warnings: usize,
    pub max_sanity_residual: f64,
    pub max_mass_residual: f64,
}

impl DualStats {
    fn record(&mut self, sol: &DualStageSolution, sanity_tol: f64, iteration: usize) {
        self.stage_solves += 1;
        self.max_sanity_residual = self.max_sanity_residual.max(sol.sanity_residual);
        self.max_mass_residual = self.max_mass_residual.max(sol.mass_residual);
        if sol.sanity_residual > sanity_tol {
            self.sanity_warnings += 1;
            log::warn!(
                "numerical instability at iteration {iteration}, stage {}: value {} differs from cut value by {:.3e} (relative)",
                sol.cut.stage + 1,
                sol.value,
                sol.sanity_residual
            );
        }
    }
}

/// Incremental dual SDDP driver.
#[derive(Debug, Clone)]
pub struct DualSddp {
    inst: Instance,
    config: DualConfig,
    approx: DualApprox,
    rng: ChaCha8Rng,
    iteration: usize,
    first: FirstStageSolution,
    upper_bounds: Vec<f64>,
    visited: Vec<Vec<DualState>>,
    stats: DualStats,
}

impl DualSddp {
    /// Builds the initial upper models and records the iteration-0 bound.
    pub fn new(inst: &Instance, seed: u64, config: DualConfig) -> Result<Self, SolveError> {
        let approx = init_upper_approx(inst, config.lp_tol)?;
        let first = solve_first_stage(inst, &approx, config.lp_tol)?;
        Ok(Self {
            inst: inst.clone(),
            upper_bounds: vec![first.upper_bound],
            config,
            approx,
            rng: ChaCha8Rng::seed_from_u64(seed),
            iteration: 0,
            first,
            visited: Vec::new(),
            stats: DualStats::default(),
        })
    }

    fn epsilon(&self, s: usize) -> f64 {
        self.config
            .epsilon
            .unwrap_or(1e-2 / self.inst.stages[s].branches() as f64)
    }

    fn pick(&mut self, s: usize, children: &[DualState]) -> Result<DualState, SolveError> {
        let gammas: Vec<f64> = children.iter().map(|c| c.gamma).collect();
        let eps = self.epsilon(s);
        let j = sample_branch(&gammas, eps, &mut self.rng)?;
        Ok(normalize_state(&children[j], self.config.gamma_round_tol))
    }

    /// Forward pass from the current first-stage solution, adding one cut
    /// per visited state, then a fresh first-stage solve.
    pub fn iterate(&mut self) -> Result<f64, SolveError> {
        self.iteration += 1;
        let horizon = self.inst.stages.len();
        let mut visited = Vec::with_capacity(horizon.saturating_sub(1));
        if horizon > 1 {
            let first_children = self.first.children.clone();
            let mut state = self.pick(0, &first_children)?;
            for t in 1..horizon {
                let sol = solve_dual_stage(&self.inst, &state, &self.approx, self.config.lp_tol)?;
                self.stats.record(&sol, self.config.sanity_tol, self.iteration);
                let mut cut = sol.cut.clone();
                cut.iteration = self.iteration;
                self.approx.add(cut);
                visited.push(state);
                if t + 1 < horizon {
                    state = self.pick(t, &sol.children)?;
                } else {
                    break;
                }
            }
        }
        if self.config.backward {
            dual_backward_pass(&self.inst, &visited, &mut self.approx, self.iteration, self.config.lp_tol)?;
        }
        self.visited.push(visited);
        self.first = solve_first_stage(&self.inst, &self.approx, self.config.lp_tol)?;
        self.upper_bounds.push(self.first.upper_bound);
        Ok(self.first.upper_bound)
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn upper_bound(&self) -> f64 {
        self.first.upper_bound
    }

    pub fn upper_bounds(&self) -> &[f64] {
        &self.upper_bounds
    }

    pub fn approx(&self) -> &DualApprox {
        &self.approx
    }

    pub fn first_stage(&self) -> &FirstStageSolution {
        &self.first
    }

    pub fn visited(&self) -> &[Vec<DualState>] {
        &self.visited
    }

    pub fn stats(&self) -> &DualStats {
        &self.stats
    }

    pub fn instance(&self) -> &Instance {
        &self.inst
    }
}

#[derive(Debug, Clone)]
pub struct DualRun {
    /// Entry `k` is the bound after `k` iterations.
    pub upper_bounds: Vec<f64>,
    pub approx: DualApprox,
    pub visited: Vec<Vec<DualState>>,
    pub stats: DualStats,
}

pub fn run_dual(inst: &Instance, iters: usize, seed: u64, config: DualConfig) -> Result<DualRun, SolveError> {
    let mut sddp = DualSddp::new(inst, seed, config)?;
    for _ in 0..iters {
        sddp.iterate()?;
    }
    Ok(DualRun {
        upper_bounds: sddp.upper_bounds,
        approx: sddp.approx,
        visited: sddp.visited,
        stats: sddp.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tiny_defer;

    #[test]
    fn terminal_examples() {
        assert_eq!(terminal_dual_value(&[3.0], 1.0, &[10.0]), -30.0);
        assert_eq!(terminal_dual_value(&[-3.0], 1.0, &[10.0]), 0.0);
        assert_eq!(terminal_dual_value(&[1.0, -2.0], 0.0, &[5.0, 7.0]), -5.0);
    }

    #[test]
    fn normalization() {
        let s = |pi: Vec<f64>, gamma| DualState { stage: 1, pi, gamma };
        assert_eq!(normalize_state(&s(vec![2.0, -4.0], 0.5), 1e-9), s(vec![4.0, -8.0], 1.0));
        assert_eq!(normalize_state(&s(vec![1.0], 1e-12), 1e-9), s(vec![1.0], 0.0));
        assert_eq!(normalize_state(&s(vec![3.0], 1.0), 1e-9), s(vec![3.0], 1.0));
    }

    #[test]
    fn sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            assert_eq!(sample_branch(&[0.0, 1.0], 0.0, &mut rng).unwrap(), 1);
        }
        assert!(sample_branch(&[0.0, 0.0], 0.0, &mut rng).is_err());
        let hits = (0..20000).filter(|_| sample_branch(&[0.0, 1.0], 0.01, &mut rng).unwrap() == 0).count();
        let freq = hits as f64 / 20000.0;
        assert!((freq - 0.01 / 1.02).abs() < 0.004, "{freq}");
    }

    #[test]
    fn init_gives_valid_bound() {
        let inst = tiny_defer(0.5, 0.0);
        let approx = init_upper_approx(&inst, DEFAULT_TOL).unwrap();
        assert_eq!(approx.cuts[1].len(), 1);
        let first = solve_first_stage(&inst, &approx, DEFAULT_TOL).unwrap();
        assert!(first.upper_bound >= 3.0 - 1e-9 && first.upper_bound.is_finite());
    }

    #[test]
    fn zero_mass_state() {
        let inst = tiny_defer(0.5, 0.0);
        let approx = init_upper_approx(&inst, DEFAULT_TOL).unwrap();
        let state = DualState {
            stage: 1,
            pi: vec![0.7],
            gamma: 0.0,
        };
        let sol = solve_dual_stage(&inst, &state, &approx, DEFAULT_TOL).unwrap();
        assert!(sol.children.iter().all(|c| c.gamma.abs() < 1e-12));
        // only the state box remains: -xbar * max(pi, 0)
        assert!((sol.value + 7.0).abs() < 1e-9, "{}", sol.value);
    }

    #[test]
    fn single_cut_bound() {
        let inst = tiny_defer(0.5, 0.0);
        let mut approx = DualApprox::empty(&inst);
        approx.add(DualCut {
            stage: 1,
            x: vec![0.0],
            z: 5.0,
            iteration: 0,
        });
        let first = solve_first_stage(&inst, &approx, DEFAULT_TOL).unwrap();
        assert!((first.upper_bound - 5.0).abs() < 1e-9);
    }

    #[test]
    fn tiny_defer_upper_bounds() {
        for (beta, want) in [(0.0, 3.0), (1.0, 2.0), (0.5, 2.5)] {
            let run = run_dual(&tiny_defer(0.5, beta), 50, 1, DualConfig::default()).unwrap();
            assert!(run.upper_bounds[0] >= want - 1e-9);
            let ub = *run.upper_bounds.last().unwrap();
            assert!((ub - want).abs() < 1e-4, "beta {beta}: {:?}", run.upper_bounds);
            assert!(run.upper_bounds.windows(2).all(|w| w[1] <= w[0] + 1e-9));
            assert_eq!(run.stats.sanity_warnings, 0);
        }
    }

    #[test]
    fn approx_round_trip() {
        let run = run_dual(&tiny_defer(0.5, 0.0), 3, 2, DualConfig::default()).unwrap();
        assert_eq!(DualApprox::from_json(&run.approx.to_json()).unwrap(), run.approx);
    }
}
