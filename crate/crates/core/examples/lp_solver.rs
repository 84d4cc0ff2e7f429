//! Build a small linear program, solve it with the dense simplex backend and
//! read off primal values, row multipliers and an independent residual check.
//!
//! Run with `cargo run --example lp_solver`.

use radual::lp::{check_solution, solve_lp, write_lp_format, LinearProgram, RowSense, Sense, DEFAULT_TOL};

fn main() {
    // max 3x + 2y  s.t.  x + y <= 4,  x + 3y <= 6,  0 <= x <= 3,  y >= 0
    let mut lp = LinearProgram::new(Sense::Maximize);
    let x = lp.add_var("x", 0.0, 3.0, 3.0);
    let y = lp.add_var("y", 0.0, f64::INFINITY, 2.0);
    let cap = lp.add_row("capacity", [(x, 1.0), (y, 1.0)], RowSense::Le, 4.0);
    let mix = lp.add_row("mix", [(x, 1.0), (y, 3.0)], RowSense::Le, 6.0);

    let mut text = Vec::new();
    write_lp_format(&lp, &mut text).expect("in-memory write");
    println!("{}", String::from_utf8_lossy(&text));

    let sol = solve_lp(&lp, DEFAULT_TOL).expect("well-formed LP");
    println!("status     {:?}", sol.status);
    println!("objective  {}", sol.objective);
    println!("x = {}, y = {}", sol.value(x), sol.value(y));
    // multipliers are sensitivities of the optimal value to each right-hand side
    println!("d obj / d capacity = {}", sol.dual(cap));
    println!("d obj / d mix      = {}", sol.dual(mix));

    let report = check_solution(&lp, &sol, 1e-9);
    println!(
        "independent check: primal residual {:.1e}, dual residual {:.1e}, gap {:.1e}, pass {}",
        report.max_primal_residual, report.max_dual_residual, report.duality_gap, report.pass
    );
}
