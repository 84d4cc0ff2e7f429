use crate::dual::{add_dual_stage, build_first_stage, terminal_dual_value, Children, Incoming};
use crate::error::{solve_optimal, SolveError};
use crate::lp::{LinearProgram, Sense, DEFAULT_TOL};
use crate::model::{Instance, ModelError};
use crate::risk::Mass;

fn subtree_nodes(inst: &Instance, t: usize) -> u128 {
    let mut total: u128 = 1;
    let mut level: u128 = 1;
    for s in &inst.stages[t.min(inst.stages.len())..] {
        level = level.saturating_mul(s.branches() as u128);
        total = total.saturating_add(level);
    }
    total
}

fn check_budget(inst: &Instance, t: usize, budget: usize) -> Result<(), SolveError> {
    let nodes = subtree_nodes(inst, t);
    if nodes > budget as u128 {
        let branching = inst.stages[t..].iter().map(|s| s.branches().to_string()).collect::<Vec<_>>().join("x");
        return Err(ModelError::BudgetExceeded { branching, nodes, budget }.into());
    }
    Ok(())
}

/// Exact dual value `D_t(pi, gamma)` from the recursion unrolled over the
/// subtree below state `t` (`t = T` gives the closed form).
///
/// With `lipschitz` the price boxes `|pi_j| <= gamma_j L` are imposed at
/// every inner node, matching what dual SDDP approximates.
pub fn exact_dual_value(
    inst: &Instance,
    t: usize,
    pi: &[f64],
    gamma: f64,
    lipschitz: bool,
    subtree_budget: usize,
) -> Result<f64, SolveError> {
    let horizon = inst.stages.len();
    if t >= horizon {
        return Ok(terminal_dual_value(pi, gamma, &inst.stages[horizon - 1].xbar));
    }
    check_budget(inst, t, subtree_budget)?;
    let mut lp = LinearProgram::new(Sense::Maximize);
    add_dual_stage(
        &mut lp,
        inst,
        t,
        Incoming::Fixed(pi),
        Mass::Constant(gamma),
        Children::Unrolled,
        lipschitz,
        "n.",
    )?;
    Ok(solve_optimal(&lp, DEFAULT_TOL, || format!("exact dual value at state {t}"))?.objective)
}

/// `sup_{|pi_0| <= L_0} pi_0^T x0 + D_0(pi_0, 1)` over the whole tree.
/// Equals the extensive primal value by linear programming duality.
pub fn exact_dual_first_stage(inst: &Instance, lipschitz: bool, budget: usize) -> Result<f64, SolveError> {
    check_budget(inst, 0, budget)?;
    let (mut lp, pi0, _) = build_first_stage(inst, Children::Unrolled, lipschitz)?;
    if !lipschitz {
        for v in &pi0 {
            lp.vars[v.0].lower = f64::NEG_INFINITY;
            lp.vars[v.0].upper = f64::INFINITY;
        }
    }
    Ok(solve_optimal(&lp, DEFAULT_TOL, || "exact dual first stage".to_string())?.objective)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{tiny_defer, DEFAULT_NODE_BUDGET};

    #[test]
    fn terminal_case() {
        let inst = tiny_defer(0.5, 0.0);
        assert_eq!(exact_dual_value(&inst, 2, &[3.0], 1.0, true, DEFAULT_NODE_BUDGET).unwrap(), -30.0);
    }

    #[test]
    fn homogeneous() {
        let inst = tiny_defer(0.5, 0.0);
        let a = exact_dual_value(&inst, 1, &[-0.6], 0.7, true, DEFAULT_NODE_BUDGET).unwrap();
        let b = exact_dual_value(&inst, 1, &[-1.2], 1.4, true, DEFAULT_NODE_BUDGET).unwrap();
        assert!((2.0 * a - b).abs() < 1e-9, "{a} {b}");
    }

    #[test]
    fn closes_duality_gap() {
        for (beta, want) in [(0.0, 3.0), (1.0, 2.0), (0.5, 2.5)] {
            let inst = tiny_defer(0.5, beta);
            for lip in [true, false] {
                let v = exact_dual_first_stage(&inst, lip, DEFAULT_NODE_BUDGET).unwrap();
                assert!((v - want).abs() < 1e-9, "beta {beta} lip {lip}: {v}");
            }
        }
    }

    #[test]
    fn matches_inf_form() {
        // D_1(pi, 1) = min_{0 <= x <= 10} V_1(x) - pi x with V_1(x) = (3 - x)^+ under AV@R_1/2
        let inst = tiny_defer(0.5, 0.0);
        for pi in [-1.5, -0.5, 0.0, 0.5, 1.5] {
            let want = (0..=1000)
                .map(|i| {
                    let x = i as f64 / 100.0;
                    (3.0f64 - x).max(0.0) - pi * x
                })
                .fold(f64::INFINITY, f64::min);
            let got = exact_dual_value(&inst, 1, &[pi], 1.0, false, DEFAULT_NODE_BUDGET).unwrap();
            assert!((got - want).abs() < 1e-9, "pi {pi}: {got} vs {want}");
        }
    }
}
