use crate::error::{solve_optimal, SolveError};
use crate::lp::{LinearProgram, RowId, RowSense, Sense, VarId, DEFAULT_TOL};
use crate::model::{enumerate_tree, Instance, RiskSpec, TreeNode};

/// Optimal solution of the extensive (whole-tree) program.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensiveSolution {
    pub value: f64,
    pub nodes: Vec<TreeNode>,
    /// State carried by each node; the root carries `x0`.
    pub states: Vec<Vec<f64>>,
    /// Controls of the stage leading to each node (empty at the root).
    pub controls: Vec<Vec<f64>>,
    /// Risk-adjusted cost-to-go at each node (zero at leaves).
    pub node_values: Vec<f64>,
    /// `c^T y + value of the node`, for every non-root node.
    pub theta: Vec<f64>,
    /// Dual of the `theta` row: nested risk-adjusted path probability.
    pub gamma: Vec<f64>,
    /// Duals of the dynamics rows leading to each node.
    pub lambda: Vec<Vec<f64>>,
}

/// Instance restricted to stages `t..`, started from state `x`.
pub fn subinstance(inst: &Instance, t: usize, x: &[f64]) -> Instance {
    Instance {
        horizon: inst.stages.len() - t,
        x0: x.to_vec(),
        stages: inst.stages[t..].to_vec(),
        name: inst.name.clone(),
        description: None,
    }
}

struct NodeVars {
    x: Vec<VarId>,
    y: Vec<VarId>,
    theta: Option<VarId>,
    theta_row: Option<RowId>,
    value: Option<VarId>,
    dynamics: Vec<RowId>,
}

pub fn solve_extensive_primal(inst: &Instance, node_budget: usize) -> Result<ExtensiveSolution, SolveError> {
    solve_extensive_with_tol(inst, node_budget, DEFAULT_TOL)
}

pub fn solve_extensive_with_tol(inst: &Instance, node_budget: usize, tol: f64) -> Result<ExtensiveSolution, SolveError> {
    let horizon = inst.stages.len();
    let nodes = enumerate_tree(inst, horizon, node_budget)?;
    let inf = f64::INFINITY;
    let mut lp = LinearProgram::new(Sense::Minimize);
    let mut vars: Vec<NodeVars> = Vec::with_capacity(nodes.len());

    for node in &nodes {
        let mut nv = NodeVars {
            x: Vec::new(),
            y: Vec::new(),
            theta: None,
            theta_row: None,
            value: None,
            dynamics: Vec::new(),
        };
        if node.num_children > 0 {
            nv.value = Some(lp.add_var(format!("w{}", node.id), f64::NEG_INFINITY, inf, if node.id == 0 { 1.0 } else { 0.0 }));
        }
        if let (Some(parent), Some(j)) = (node.parent, node.realization) {
            let s = node.depth - 1;
            let stage = &inst.stages[s];
            let r = &stage.realizations[j];
            nv.x = stage.xbar.iter().enumerate().map(|(i, &u)| lp.add_var(format!("x{}_{i}", node.id), 0.0, u, 0.0)).collect();
            nv.y = stage.ybar.iter().enumerate().map(|(i, &u)| lp.add_var(format!("y{}_{i}", node.id), 0.0, u, 0.0)).collect();
            let mut rows: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); r.d.len()];
            let mut rhs = r.d.clone();
            for &(row, col, v) in r.a.entries() {
                rows[row].push((nv.x[col], v));
            }
            for &(row, col, v) in r.t.entries() {
                rows[row].push((nv.y[col], v));
            }
            for &(row, col, v) in r.b.entries() {
                if parent == 0 {
                    rhs[row] -= v * inst.x0[col];
                } else {
                    rows[row].push((vars[parent].x[col], v));
                }
            }
            nv.dynamics = rows
                .into_iter()
                .zip(rhs)
                .enumerate()
                .map(|(i, (c, b))| lp.add_row(format!("dyn{}_{i}", node.id), c, RowSense::Eq, b))
                .collect();
            let th = lp.add_var(format!("theta{}", node.id), f64::NEG_INFINITY, inf, 0.0);
            let coeffs: Vec<(VarId, f64)> = std::iter::once((th, 1.0))
                .chain(nv.y.iter().zip(&r.c).map(|(&v, &c)| (v, -c)))
                .chain(nv.value.map(|w| (w, -1.0)))
                .collect();
            nv.theta_row = Some(lp.add_row(format!("epi{}", node.id), coeffs, RowSense::Ge, 0.0));
            nv.theta = Some(th);
        }
        vars.push(nv);
    }

    // risk rows: w_n >= rho(theta of children)
    for node in nodes.iter().filter(|n| n.num_children > 0) {
        let stage = &inst.stages[node.depth];
        let w = vars[node.id].value.expect("inner node has a value variable");
        let thetas: Vec<VarId> = node.children().map(|c| vars[c].theta.expect("child has theta")).collect();
        match &stage.risk {
            RiskSpec::MeanAvar { alpha, beta } => {
                let q = lp.add_var(format!("q{}", node.id), f64::NEG_INFINITY, inf, 0.0);
                let mut coeffs = vec![(w, 1.0), (q, -(1.0 - beta))];
                for (j, (&th, r)) in thetas.iter().zip(&stage.realizations).enumerate() {
                    let u = lp.add_var(format!("u{}_{j}", node.id), 0.0, inf, 0.0);
                    lp.add_row(format!("excess{}_{j}", node.id), [(u, 1.0), (th, -1.0), (q, 1.0)], RowSense::Ge, 0.0);
                    coeffs.push((th, -beta * r.p));
                    coeffs.push((u, -(1.0 - beta) * r.p / alpha));
                }
                lp.add_row(format!("risk{}", node.id), coeffs, RowSense::Ge, 0.0);
            }
            RiskSpec::Polyhedral { vertices } => {
                for (k, qk) in vertices.iter().enumerate() {
                    let coeffs = std::iter::once((w, 1.0)).chain(thetas.iter().zip(qk).map(|(&t, &p)| (t, -p)));
                    lp.add_row(format!("vertex{}_{k}", node.id), coeffs, RowSense::Ge, 0.0);
                }
            }
        }
    }

    let sol = solve_optimal(&lp, tol, || "extensive program".to_string())?;
    let n = nodes.len();
    let mut states = Vec::with_capacity(n);
    let mut controls = Vec::with_capacity(n);
    let mut node_values = Vec::with_capacity(n);
    let mut theta = Vec::with_capacity(n);
    let mut gamma = Vec::with_capacity(n);
    let mut lambda = Vec::with_capacity(n);
    for (node, nv) in nodes.iter().zip(&vars) {
        states.push(if node.id == 0 { inst.x0.clone() } else { nv.x.iter().map(|&v| sol.value(v)).collect() });
        controls.push(nv.y.iter().map(|&v| sol.value(v)).collect());
        node_values.push(nv.value.map_or(0.0, |v| sol.value(v)));
        theta.push(nv.theta.map_or(0.0, |v| sol.value(v)));
        gamma.push(nv.theta_row.map_or(1.0, |r| sol.dual(r)));
        lambda.push(nv.dynamics.iter().map(|&r| sol.dual(r)).collect());
    }
    Ok(ExtensiveSolution {
        value: sol.objective,
        nodes,
        states,
        controls,
        node_values,
        theta,
        gamma,
        lambda,
    })
}

/// Exact `V_t(x)`: the extensive value of the subtree below state `t`.
/// Returns `None` when no feasible decision exists from `x`.
pub fn exact_cost_to_go(inst: &Instance, t: usize, x: &[f64], node_budget: usize) -> Result<Option<f64>, SolveError> {
    if t >= inst.stages.len() {
        return Ok(Some(0.0));
    }
    match solve_extensive_primal(&subinstance(inst, t, x), node_budget) {
        Ok(sol) => Ok(Some(sol.value)),
        Err(SolveError::Status { status: crate::lp::LpStatus::Infeasible, .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{tiny_defer, DEFAULT_NODE_BUDGET};

    #[test]
    fn tiny_defer_values() {
        for (beta, want) in [(0.0, 3.0), (1.0, 2.0), (0.5, 2.5)] {
            let sol = solve_extensive_primal(&tiny_defer(0.5, beta), DEFAULT_NODE_BUDGET).unwrap();
            assert!((sol.value - want).abs() < 1e-9, "beta {beta}: {}", sol.value);
        }
    }

    #[test]
    fn tiny_defer_by_enumeration() {
        // buy s now, the rest later at price 1: total 2 s + rho((1 - s)^+, (3 - s)^+)
        let best = [0.0, 1.0, 3.0]
            .iter()
            .map(|&s: &f64| 2.0 * s + (1.0 - s).max(0.0).max((3.0 - s).max(0.0)))
            .fold(f64::INFINITY, f64::min);
        let sol = solve_extensive_primal(&tiny_defer(0.5, 0.0), DEFAULT_NODE_BUDGET).unwrap();
        assert!((sol.value - best).abs() < 1e-9);
    }

    #[test]
    fn worst_case_weights_in_solution() {
        let sol = solve_extensive_primal(&tiny_defer(0.5, 0.0), DEFAULT_NODE_BUDGET).unwrap();
        assert!((sol.gamma[1] - 1.0).abs() < 1e-9);
        assert!(sol.gamma[2].abs() < 1e-9 && (sol.gamma[3] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cost_to_go_from_stage_one() {
        let inst = tiny_defer(0.5, 0.0);
        let v = exact_cost_to_go(&inst, 1, &[1.0], DEFAULT_NODE_BUDGET).unwrap().unwrap();
        assert!((v - 2.0).abs() < 1e-9);
        assert_eq!(exact_cost_to_go(&inst, 1, &[15.0], DEFAULT_NODE_BUDGET).unwrap(), None);
    }
}
