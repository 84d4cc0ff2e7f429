//! Verify numerically that the dual value function equals the regularized
//! co-perspective of the primal cost-to-go, on a grid.
//!
//! Run with `cargo run --release --example coperspective`.

use radual::model::{tiny_defer, DEFAULT_NODE_BUDGET};
use radual::oracle::coperspective_check;

fn main() {
    let inst = tiny_defer(0.5, 0.5);
    let report = coperspective_check(&inst, 1, 0.25, 20, 4, DEFAULT_NODE_BUDGET).unwrap();
    println!("   pi      gamma   exact D      grid form");
    for s in &report.samples {
        println!("{:>7.3}  {:>6.3}  {:>10.5}  {:>10.5}", s.pi[0], s.gamma, s.exact, s.grid);
    }
    println!(
        "largest discrepancy {:.2e}, allowance L h = {:.2e}: {}",
        report.max_discrepancy,
        report.tolerance,
        if report.pass() { "pass" } else { "FAIL" }
    );
}
