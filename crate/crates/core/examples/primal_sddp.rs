//! Primal SDDP: sampled forward passes, risk-adjusted backward cuts and a
//! nondecreasing lower bound, checked against the extensive-form optimum.
//!
//! Run with `cargo run --release --example primal_sddp`.

use radual::model::{build_hydro_instance, desk_hydro_config, DEFAULT_NODE_BUDGET};
use radual::oracle::solve_extensive_primal;
use radual::primal::PrimalSddp;

fn main() {
    let inst = build_hydro_instance(&desk_hydro_config()).unwrap();
    let exact = solve_extensive_primal(&inst, DEFAULT_NODE_BUDGET).unwrap().value;

    let mut sddp = PrimalSddp::new(&inst, 7).unwrap();
    println!("iter  lower bound     distance to optimum");
    for k in 1..=100 {
        let lb = sddp.iterate().unwrap();
        if k <= 5 || k % 10 == 0 {
            println!("{k:>4}  {lb:>14.6}  {:>14.6}", exact - lb);
        }
    }
    println!("optimum {exact:.6}, cuts stored {}", sddp.pools().total_cuts());

    let traj = sddp.trajectories().last().unwrap();
    println!("last forward pass:");
    for step in traj {
        println!(
            "  stage {} scenario {}: storage {:.3?} -> {:.3?}, stage cost {:.2}",
            step.stage + 1,
            step.realization + 1,
            step.incoming,
            step.outgoing,
            step.cost
        );
    }
}
