//! Deterministic inner-approximation upper bound built from the states that
//! primal SDDP visited, compared with the dual SDDP bound.
//!
//! Run with `cargo run --release --example philpott_bound`.

use radual::dual::{run_dual, DualConfig};
use radual::lp::DEFAULT_TOL;
use radual::model::{build_hydro_instance, desk_hydro_config, DEFAULT_NODE_BUDGET};
use radual::oracle::{philpott_upper_bound, solve_extensive_primal, TrialPointSet};
use radual::primal::PrimalSddp;

fn main() {
    let inst = build_hydro_instance(&desk_hydro_config()).unwrap();
    let exact = solve_extensive_primal(&inst, DEFAULT_NODE_BUDGET).unwrap().value;
    let dual = run_dual(&inst, 50, 1, DualConfig::default()).unwrap();

    let mut primal = PrimalSddp::new(&inst, 1).unwrap();
    println!("iter  lower bound   inner bound   dual bound");
    for k in 1..=50 {
        primal.iterate().unwrap();
        if k % 10 == 0 {
            let trials = TrialPointSet::from_trajectories(inst.horizon, primal.trajectories());
            let inner = philpott_upper_bound(&inst, &trials, DEFAULT_TOL).unwrap();
            println!("{k:>4}  {:>11.3}  {:>12.3}  {:>11.3}", primal.lower_bound(), inner.root, dual.upper_bounds[k]);
        }
    }
    println!("optimum {exact:.3}");
}
