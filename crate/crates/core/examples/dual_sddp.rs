//! Dual SDDP: forward passes on the risk-adjusted dual recursion produce a
//! nonincreasing upper bound from homogeneous cuts, without any Monte Carlo
//! estimate.
//!
//! Run with `cargo run --release --example dual_sddp`.

use radual::dual::{DualConfig, DualSddp};
use radual::model::{build_hydro_instance, desk_hydro_config, DEFAULT_NODE_BUDGET};
use radual::oracle::solve_extensive_primal;

fn main() {
    let inst = build_hydro_instance(&desk_hydro_config()).unwrap();
    let exact = solve_extensive_primal(&inst, DEFAULT_NODE_BUDGET).unwrap().value;

    let mut sddp = DualSddp::new(&inst, 7, DualConfig::default()).unwrap();
    println!("iter  upper bound     distance to optimum");
    println!("{:>4}  {:>14.6}  {:>14.6}", 0, sddp.upper_bound(), sddp.upper_bound() - exact);
    for k in 1..=100 {
        let ub = sddp.iterate().unwrap();
        if k <= 5 || k % 10 == 0 {
            println!("{k:>4}  {ub:>14.6}  {:>14.6}", ub - exact);
        }
    }
    println!("optimum {exact:.6}");

    let stats = sddp.stats();
    println!(
        "{} stage solves, {} sanity warnings, largest mass residual {:.1e}",
        stats.stage_solves, stats.sanity_warnings, stats.max_mass_residual
    );
    let cut = sddp.approx().cuts.iter().flatten().last().unwrap();
    println!(
        "latest cut at stage {}: D(pi, gamma) <= {:?} . pi + {:.4} gamma (intercept {})",
        cut.stage + 1,
        cut.x,
        cut.z,
        cut.intercept()
    );
    let first = sddp.first_stage();
    println!("first-stage price of storage {:?}", first.pi0);
}
