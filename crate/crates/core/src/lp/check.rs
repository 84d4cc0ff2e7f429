use super::{LinearProgram, LpSolution, RowSense, Sense};

/// Residual summary for a claimed optimal solution.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionReport {
    pub max_primal_residual: f64,
    pub max_dual_residual: f64,
    pub duality_gap: f64,
    pub pass: bool,
}

/// Recomputes primal feasibility, dual feasibility and the duality gap of
/// `sol` from the raw data of `lp`, without trusting the solver's reduced
/// costs or objective.
pub fn check_solution(lp: &LinearProgram, sol: &LpSolution, tol: f64) -> SolutionReport {
    let n = lp.vars.len();
    let m = lp.rows.len();
    if sol.primal.len() != n || sol.duals.len() != m {
        return SolutionReport {
            max_primal_residual: f64::INFINITY,
            max_dual_residual: f64::INFINITY,
            duality_gap: f64::INFINITY,
            pass: false,
        };
    }
    let x = &sol.primal;

    let mut primal_res: f64 = 0.0;
    for (v, &xj) in lp.vars.iter().zip(x) {
        primal_res = primal_res.max(v.lower - xj).max(xj - v.upper);
    }
    let act = lp.activities(x);
    for (r, a) in lp.rows.iter().zip(&act) {
        let viol = match r.sense {
            RowSense::Eq => (a - r.rhs).abs(),
            RowSense::Le => a - r.rhs,
            RowSense::Ge => r.rhs - a,
        };
        primal_res = primal_res.max(viol);
    }

    // Work in minimization form: c' = s c, y' = s y.
    let s = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let y: Vec<f64> = sol.duals.iter().map(|d| s * d).collect();
    let mut dual_res: f64 = 0.0;
    for (r, &yi) in lp.rows.iter().zip(&y) {
        let viol = match r.sense {
            RowSense::Eq => 0.0,
            RowSense::Ge => -yi,
            RowSense::Le => yi,
        };
        dual_res = dual_res.max(viol);
    }
    let mut reduced: Vec<f64> = lp.vars.iter().map(|v| s * v.cost).collect();
    for (r, &yi) in lp.rows.iter().zip(&y) {
        for &(v, a) in &r.coeffs {
            reduced[v.0] -= a * yi;
        }
    }
    let mut dual_obj: f64 = lp.rows.iter().zip(&y).map(|(r, yi)| r.rhs * yi).sum();
    for (v, &rj) in lp.vars.iter().zip(&reduced) {
        if rj > 0.0 {
            if v.lower.is_finite() {
                dual_obj += rj * v.lower;
            } else {
                dual_res = dual_res.max(rj);
            }
        } else if rj < 0.0 {
            if v.upper.is_finite() {
                dual_obj += rj * v.upper;
            } else {
                dual_res = dual_res.max(-rj);
            }
        }
    }

    let primal_obj = s * lp.objective_at(x);
    let gap = (primal_obj - dual_obj).abs().max((sol.objective - lp.objective_at(x)).abs());

    let bscale = lp.rows.iter().fold(1.0f64, |acc, r| acc.max(r.rhs.abs()));
    let cscale = lp.vars.iter().fold(1.0f64, |acc, v| acc.max(v.cost.abs()));
    let pass = primal_res <= tol * bscale.max(1.0) * 10.0
        && dual_res <= tol * cscale.max(1.0) * 10.0
        && gap <= tol * (1.0 + sol.objective.abs()) * 10.0;
    SolutionReport {
        max_primal_residual: primal_res.max(0.0),
        max_dual_residual: dual_res.max(0.0),
        duality_gap: gap,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{solve_lp, DEFAULT_TOL};

    fn simple() -> LinearProgram {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var("x", 0.0, 10.0, 1.0);
        lp.add_row("r", [(x, 1.0)], RowSense::Ge, 1.0);
        lp
    }

    #[test]
    fn accepts_optimal_solution() {
        let lp = simple();
        let sol = solve_lp(&lp, DEFAULT_TOL).unwrap();
        let rep = check_solution(&lp, &sol, DEFAULT_TOL);
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn flags_perturbed_primal() {
        let lp = simple();
        let mut sol = solve_lp(&lp, DEFAULT_TOL).unwrap();
        sol.primal[0] -= 1.0;
        let rep = check_solution(&lp, &sol, DEFAULT_TOL);
        assert!(!rep.pass);
        assert!((rep.max_primal_residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flags_wrong_objective() {
        let lp = simple();
        let mut sol = solve_lp(&lp, DEFAULT_TOL).unwrap();
        sol.objective += 0.5;
        let rep = check_solution(&lp, &sol, DEFAULT_TOL);
        assert!(!rep.pass);
        assert!(rep.duality_gap >= 0.5 - 1e-12);
    }
}
