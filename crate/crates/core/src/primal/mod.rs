//! Risk-averse SDDP on the primal recursion: outer (lower) cutting-plane
//! models of the cost-to-go functions and a deterministic lower bound.
//!
//! `V_s` denotes the cost-to-go from the state entering stage `s`, so `V_0(x0)`
//! is the optimal value and `V_T = 0`.

use crate::error::{solve_optimal, SolveError};
use crate::lp::{LinearProgram, RowId, RowSense, Sense, VarId, DEFAULT_TOL};
use crate::model::{Instance, RiskSpec};
use crate::risk::worst_case_measure;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Affine minorant `V_stage(x) >= slope^T x + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalCut {
    pub stage: usize,
    pub slope: Vec<f64>,
    pub intercept: f64,
    pub iteration: usize,
    pub trial: Vec<f64>,
}

impl PrimalCut {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.intercept + self.slope.iter().zip(x).map(|(g, xi)| g * xi).sum::<f64>()
    }
}

/// Outer models of `V_0 .. V_T`; `V_T` is identically zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutPools {
    pub lower_bounds: Vec<f64>,
    pub cuts: Vec<Vec<PrimalCut>>,
}

impl CutPools {
    pub fn new(inst: &Instance) -> Self {
        let horizon = inst.stages.len();
        Self {
            lower_bounds: (0..=horizon).map(|s| inst.cost_to_go_lower_bound(s)).collect(),
            cuts: vec![Vec::new(); horizon + 1],
        }
    }

    pub fn horizon(&self) -> usize {
        self.cuts.len() - 1
    }

    pub fn add(&mut self, cut: PrimalCut) {
        let s = cut.stage;
        self.cuts[s].push(cut);
    }

    /// Current model value `max(lower bound, max_k cut_k(x))` of `V_s`.
    pub fn eval(&self, s: usize, x: &[f64]) -> f64 {
        if s >= self.horizon() {
            return 0.0;
        }
        self.cuts[s].iter().fold(self.lower_bounds[s], |acc, c| acc.max(c.eval(x)))
    }

    pub fn total_cuts(&self) -> usize {
        self.cuts.iter().map(Vec::len).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cut pools serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Variables and rows of one realization inside a stage program.
#[derive(Debug, Clone)]
pub struct RealizationBlock {
    pub x: Vec<VarId>,
    pub y: Vec<VarId>,
    /// Epigraph of the next cost-to-go model; `None` before the terminal stage.
    pub phi: Option<VarId>,
    pub dynamics: Vec<RowId>,
}

/// Adds `A x + T y = d - B x_prev`, the boxes, and `phi >= cuts of V_{s+1}`.
fn add_realization_block(
    lp: &mut LinearProgram,
    inst: &Instance,
    s: usize,
    j: usize,
    x_prev: &[f64],
    pools: &CutPools,
) -> RealizationBlock {
    let stage = &inst.stages[s];
    let r = &stage.realizations[j];
    let x: Vec<VarId> = stage
        .xbar
        .iter()
        .enumerate()
        .map(|(i, &ub)| lp.add_var(format!("x{j}_{i}"), 0.0, ub, 0.0))
        .collect();
    let y: Vec<VarId> = stage
        .ybar
        .iter()
        .enumerate()
        .map(|(i, &ub)| lp.add_var(format!("y{j}_{i}"), 0.0, ub, 0.0))
        .collect();
    let m = r.d.len();
    let mut rows: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); m];
    for &(row, col, v) in r.a.entries() {
        rows[row].push((x[col], v));
    }
    for &(row, col, v) in r.t.entries() {
        rows[row].push((y[col], v));
    }
    let mut rhs = r.d.clone();
    let mut bx = vec![0.0; m];
    r.b.mul_add(x_prev, &mut bx);
    for (d, b) in rhs.iter_mut().zip(&bx) {
        *d -= b;
    }
    let dynamics = rows
        .into_iter()
        .zip(&rhs)
        .enumerate()
        .map(|(i, (coeffs, &b))| lp.add_row(format!("dyn{j}_{i}"), coeffs, RowSense::Eq, b))
        .collect();
    let phi = (s + 1 < inst.stages.len()).then(|| {
        let phi = lp.add_var(format!("phi{j}"), pools.lower_bounds[s + 1], f64::INFINITY, 0.0);
        for (k, cut) in pools.cuts[s + 1].iter().enumerate() {
            let coeffs = std::iter::once((phi, 1.0)).chain(x.iter().zip(&cut.slope).map(|(&xv, &g)| (xv, -g)));
            lp.add_row(format!("cut{j}_{k}"), coeffs, RowSense::Ge, cut.intercept);
        }
        phi
    });
    RealizationBlock { x, y, phi, dynamics }
}

/// Slope of the stage value in `x_prev` from the dynamics duals: `-sum_rows B^T lambda`.
fn slope_from_duals(inst: &Instance, s: usize, j: usize, lambda: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; inst.incoming_dim(s)];
    inst.stages[s].realizations[j].b.tmul_add(lambda, &mut g);
    g.iter_mut().for_each(|v| *v = -*v);
    g
}

/// Stage program with every realization and the risk aggregation.
#[derive(Debug, Clone)]
pub struct PrimalStageLp {
    pub lp: LinearProgram,
    pub blocks: Vec<RealizationBlock>,
    pub theta: Vec<VarId>,
    /// `theta_j - c_j^T y_j - phi_j >= 0`; their duals form the change of measure.
    pub theta_rows: Vec<RowId>,
}

/// Builds the cut-approximate Bellman program of stage `s` at `x_prev`.
/// Mean-AV@R uses the Rockafellar-Uryasev form; vertex envelopes use
/// `z >= sum_j q^k_j theta_j` for every vertex.
pub fn build_primal_stage_lp(inst: &Instance, s: usize, x_prev: &[f64], pools: &CutPools) -> PrimalStageLp {
    let stage = &inst.stages[s];
    let mut lp = LinearProgram::new(Sense::Minimize);
    let inf = f64::INFINITY;
    let mut blocks = Vec::with_capacity(stage.branches());
    let mut theta = Vec::with_capacity(stage.branches());
    let mut theta_rows = Vec::with_capacity(stage.branches());
    for (j, r) in stage.realizations.iter().enumerate() {
        let block = add_realization_block(&mut lp, inst, s, j, x_prev, pools);
        let th = lp.add_var(format!("theta{j}"), f64::NEG_INFINITY, inf, 0.0);
        let coeffs: Vec<(VarId, f64)> = std::iter::once((th, 1.0))
            .chain(block.y.iter().zip(&r.c).map(|(&v, &c)| (v, -c)))
            .chain(block.phi.map(|p| (p, -1.0)))
            .collect();
        theta_rows.push(lp.add_row(format!("epi{j}"), coeffs, RowSense::Ge, 0.0));
        theta.push(th);
        blocks.push(block);
    }
    match &stage.risk {
        RiskSpec::MeanAvar { alpha, beta } => {
            let q = lp.add_var("q", f64::NEG_INFINITY, inf, 1.0 - beta);
            for (j, r) in stage.realizations.iter().enumerate() {
                lp.set_cost(theta[j], beta * r.p);
                let u = lp.add_var(format!("u{j}"), 0.0, inf, (1.0 - beta) * r.p / alpha);
                lp.add_row(format!("excess{j}"), [(u, 1.0), (theta[j], -1.0), (q, 1.0)], RowSense::Ge, 0.0);
            }
        }
        RiskSpec::Polyhedral { vertices } => {
            let z = lp.add_var("z", f64::NEG_INFINITY, inf, 1.0);
            for (k, qk) in vertices.iter().enumerate() {
                let coeffs = std::iter::once((z, 1.0)).chain(theta.iter().zip(qk).map(|(&t, &w)| (t, -w)));
                lp.add_row(format!("vertex{k}"), coeffs, RowSense::Ge, 0.0);
            }
        }
    }
    PrimalStageLp {
        lp,
        blocks,
        theta,
        theta_rows,
    }
}

/// Result of a stage solve at a trial state.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSolution {
    pub value: f64,
    pub cut: PrimalCut,
    /// Outgoing state per realization.
    pub states: Vec<Vec<f64>>,
    pub controls: Vec<Vec<f64>>,
    /// Realization values `c_j^T y_j + V̂_{s+1}(x_j)`.
    pub theta: Vec<f64>,
    /// Worst-case change of measure, in `Q`.
    pub gamma: Vec<f64>,
}

/// Solves the monolithic stage program and extracts the cut tight at `x_prev`.
pub fn solve_stage_and_cut(
    inst: &Instance,
    s: usize,
    x_prev: &[f64],
    pools: &CutPools,
    tol: f64,
) -> Result<StageSolution, SolveError> {
    let built = build_primal_stage_lp(inst, s, x_prev, pools);
    let sol = solve_optimal(&built.lp, tol, || format!("primal stage {}", s + 1))?;
    let mut slope = vec![0.0; inst.incoming_dim(s)];
    for (j, block) in built.blocks.iter().enumerate() {
        let lambda: Vec<f64> = block.dynamics.iter().map(|&r| sol.dual(r)).collect();
        for (g, v) in slope.iter_mut().zip(slope_from_duals(inst, s, j, &lambda)) {
            *g += v;
        }
    }
    let value = sol.objective;
    let intercept = value - slope.iter().zip(x_prev).map(|(g, x)| g * x).sum::<f64>();
    Ok(StageSolution {
        value,
        cut: PrimalCut {
            stage: s,
            slope,
            intercept,
            iteration: 0,
            trial: x_prev.to_vec(),
        },
        states: built.blocks.iter().map(|b| b.x.iter().map(|&v| sol.value(v)).collect()).collect(),
        controls: built.blocks.iter().map(|b| b.y.iter().map(|&v| sol.value(v)).collect()).collect(),
        theta: built.theta.iter().map(|&v| sol.value(v)).collect(),
        gamma: built.theta_rows.iter().map(|&r| sol.dual(r)).collect(),
    })
}

/// Optimal decision of a single realization at a trial state.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationSolution {
    /// `c_j^T y_j + V̂_{s+1}(x_j)`.
    pub value: f64,
    pub stage_cost: f64,
    pub slope: Vec<f64>,
    pub state: Vec<f64>,
    pub controls: Vec<f64>,
}

pub fn solve_realization(
    inst: &Instance,
    s: usize,
    j: usize,
    x_prev: &[f64],
    pools: &CutPools,
    tol: f64,
) -> Result<RealizationSolution, SolveError> {
    let mut lp = LinearProgram::new(Sense::Minimize);
    let block = add_realization_block(&mut lp, inst, s, j, x_prev, pools);
    let c = &inst.stages[s].realizations[j].c;
    for (&v, &cv) in block.y.iter().zip(c) {
        lp.set_cost(v, cv);
    }
    if let Some(phi) = block.phi {
        lp.set_cost(phi, 1.0);
    }
    let sol = solve_optimal(&lp, tol, || format!("primal stage {} realization {}", s + 1, j + 1))?;
    let lambda: Vec<f64> = block.dynamics.iter().map(|&r| sol.dual(r)).collect();
    let controls: Vec<f64> = block.y.iter().map(|&v| sol.value(v)).collect();
    Ok(RealizationSolution {
        value: sol.objective,
        stage_cost: controls.iter().zip(c).map(|(y, c)| y * c).sum(),
        slope: slope_from_duals(inst, s, j, &lambda),
        state: block.x.iter().map(|&v| sol.value(v)).collect(),
        controls,
    })
}

/// Same result as [`solve_stage_and_cut`], computed from one small program per
/// realization and the closed-form worst-case measure.
pub fn solve_stage_decomposed(
    inst: &Instance,
    s: usize,
    x_prev: &[f64],
    pools: &CutPools,
    tol: f64,
) -> Result<StageSolution, SolveError> {
    let stage = &inst.stages[s];
    let parts = (0..stage.branches())
        .map(|j| solve_realization(inst, s, j, x_prev, pools, tol))
        .collect::<Result<Vec<_>, _>>()?;
    let theta: Vec<f64> = parts.iter().map(|p| p.value).collect();
    let (value, gamma) = worst_case_measure(&theta, &stage.envelope())?;
    let mut slope = vec![0.0; inst.incoming_dim(s)];
    for (p, &gj) in parts.iter().zip(&gamma) {
        for (acc, g) in slope.iter_mut().zip(&p.slope) {
            *acc += gj * g;
        }
    }
    let intercept = value - slope.iter().zip(x_prev).map(|(g, x)| g * x).sum::<f64>();
    Ok(StageSolution {
        value,
        cut: PrimalCut {
            stage: s,
            slope,
            intercept,
            iteration: 0,
            trial: x_prev.to_vec(),
        },
        states: parts.iter().map(|p| p.state.clone()).collect(),
        controls: parts.iter().map(|p| p.controls.clone()).collect(),
        theta,
        gamma,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep {
    pub stage: usize,
    pub incoming: Vec<f64>,
    pub realization: usize,
    pub controls: Vec<f64>,
    pub outgoing: Vec<f64>,
    pub cost: f64,
}

pub type PrimalTrajectory = Vec<TrajectoryStep>;

/// Incremental primal SDDP driver. Forward passes sample realizations from
/// the reference probabilities; backward passes add one cut per stage.
#[derive(Debug, Clone)]
pub struct PrimalSddp {
    inst: Instance,
    pools: CutPools,
    rng: ChaCha8Rng,
    tol: f64,
    iteration: usize,
    lower_bounds: Vec<f64>,
    trajectories: Vec<PrimalTrajectory>,
}

impl PrimalSddp {
    /// Sets up empty cut models and records the iteration-0 lower bound.
    pub fn new(inst: &Instance, seed: u64) -> Result<Self, SolveError> {
        Self::with_tolerance(inst, seed, DEFAULT_TOL)
    }

    pub fn with_tolerance(inst: &Instance, seed: u64, tol: f64) -> Result<Self, SolveError> {
        let mut me = Self {
            inst: inst.clone(),
            pools: CutPools::new(inst),
            rng: ChaCha8Rng::seed_from_u64(seed),
            tol,
            iteration: 0,
            lower_bounds: Vec::new(),
            trajectories: Vec::new(),
        };
        let lb = me.first_stage_value()?;
        me.lower_bounds.push(lb);
        Ok(me)
    }

    fn first_stage_value(&self) -> Result<f64, SolveError> {
        Ok(solve_stage_decomposed(&self.inst, 0, &self.inst.x0, &self.pools, self.tol)?.value)
    }

    pub fn forward_pass(&mut self) -> Result<PrimalTrajectory, SolveError> {
        let mut x = self.inst.x0.clone();
        let mut traj = Vec::with_capacity(self.inst.stages.len());
        for (s, stage) in self.inst.stages.iter().enumerate() {
            let j = if stage.branches() == 1 {
                0
            } else {
                let dist = WeightedIndex::new(stage.probabilities())
                    .map_err(|e| SolveError::Invalid(format!("stage {} probabilities: {e}", s + 1)))?;
                dist.sample(&mut self.rng)
            };
            let sol = solve_realization(&self.inst, s, j, &x, &self.pools, self.tol)?;
            traj.push(TrajectoryStep {
                stage: s,
                incoming: x.clone(),
                realization: j,
                controls: sol.controls,
                outgoing: sol.state.clone(),
                cost: sol.stage_cost,
            });
            x = sol.state;
        }
        Ok(traj)
    }

    pub fn backward_pass(&mut self, traj: &PrimalTrajectory) -> Result<(), SolveError> {
        for step in traj.iter().skip(1).rev() {
            let sol = solve_stage_decomposed(&self.inst, step.stage, &step.incoming, &self.pools, self.tol)?;
            let mut cut = sol.cut;
            cut.iteration = self.iteration;
            self.pools.add(cut);
        }
        Ok(())
    }

    /// One forward and one backward pass; returns the new lower bound.
    pub fn iterate(&mut self) -> Result<f64, SolveError> {
        self.iteration += 1;
        let traj = self.forward_pass()?;
        self.backward_pass(&traj)?;
        self.trajectories.push(traj);
        let lb = self.first_stage_value()?;
        self.lower_bounds.push(lb);
        Ok(lb)
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn lower_bound(&self) -> f64 {
        *self.lower_bounds.last().expect("initial bound recorded")
    }

    pub fn lower_bounds(&self) -> &[f64] {
        &self.lower_bounds
    }

    pub fn pools(&self) -> &CutPools {
        &self.pools
    }

    pub fn trajectories(&self) -> &[PrimalTrajectory] {
        &self.trajectories
    }

    pub fn instance(&self) -> &Instance {
        &self.inst
    }
}

#[derive(Debug, Clone)]
pub struct PrimalRun {
    /// Entry `k` is the bound after `k` iterations.
    pub lower_bounds: Vec<f64>,
    pub pools: CutPools,
    pub trajectories: Vec<PrimalTrajectory>,
}

pub fn run_primal(inst: &Instance, iters: usize, seed: u64) -> Result<PrimalRun, SolveError> {
    let mut sddp = PrimalSddp::new(inst, seed)?;
    for _ in 0..iters {
        sddp.iterate()?;
    }
    Ok(PrimalRun {
        lower_bounds: sddp.lower_bounds,
        pools: sddp.pools,
        trajectories: sddp.trajectories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tiny_defer;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9
    }

    #[test]
    fn terminal_stage_avar() {
        let inst = tiny_defer(0.5, 0.0);
        let pools = CutPools::new(&inst);
        for solve in [solve_stage_and_cut, solve_stage_decomposed] {
            let sol = solve(&inst, 1, &[0.0], &pools, DEFAULT_TOL).unwrap();
            assert!(close(sol.value, 3.0));
            assert!(close(sol.cut.slope[0], -1.0) && close(sol.cut.intercept, 3.0));
            assert!(close(sol.gamma[0], 0.0) && close(sol.gamma[1], 1.0));
            let sol = solve(&inst, 1, &[3.0], &pools, DEFAULT_TOL).unwrap();
            assert!(close(sol.value, 0.0));
            let sol = solve(&inst, 1, &[10.0], &pools, DEFAULT_TOL).unwrap();
            assert!(close(sol.value, 0.0) && close(sol.cut.slope[0], 0.0));
        }
    }

    #[test]
    fn terminal_stage_expectation() {
        let inst = tiny_defer(0.5, 1.0);
        let pools = CutPools::new(&inst);
        let sol = solve_stage_and_cut(&inst, 1, &[0.0], &pools, DEFAULT_TOL).unwrap();
        assert!(close(sol.value, 2.0));
        assert!(close(sol.gamma[0], 0.5) && close(sol.gamma[1], 0.5));
    }

    #[test]
    fn zero_cost_stage() {
        let mut inst = tiny_defer(0.5, 1.0);
        inst.stages[0].realizations[0].c[0] = 0.0;
        let sol = solve_stage_and_cut(&inst, 0, &[0.0], &CutPools::new(&inst), DEFAULT_TOL).unwrap();
        assert!(close(sol.value, 0.0));
    }

    #[test]
    fn tiny_defer_lower_bounds() {
        for (beta, want) in [(0.0, 3.0), (1.0, 2.0), (0.5, 2.5)] {
            let run = run_primal(&tiny_defer(0.5, beta), 10, 1).unwrap();
            assert!(close(run.lower_bounds[0], 0.0));
            assert!((run.lower_bounds[10] - want).abs() < 1e-7, "beta {beta}: {:?}", run.lower_bounds);
            assert!(run.lower_bounds.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        }
    }

    #[test]
    fn cut_pools_round_trip() {
        let run = run_primal(&tiny_defer(0.5, 0.0), 3, 4).unwrap();
        let back = CutPools::from_json(&run.pools.to_json()).unwrap();
        assert_eq!(back, run.pools);
    }
}
