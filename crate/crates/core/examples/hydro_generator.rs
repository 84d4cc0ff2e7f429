//! Turn a hydrothermal system description into a multistage instance and
//! solve it exactly on the full scenario tree.
//!
//! Run with `cargo run --release --example hydro_generator`.

use radual::model::{build_hydro_instance, desk_hydro_config, hydro_fixed_cost, instance_to_json, DEFAULT_NODE_BUDGET};
use radual::oracle::solve_extensive_primal;

fn main() {
    let config = desk_hydro_config();
    let inst = build_hydro_instance(&config).expect("reference config is valid");
    println!("{}", config.name.as_deref().unwrap_or("hydro"));
    println!("  stages {}, branching {:?}", inst.horizon, inst.branching());
    println!("  storage at start {:?}", inst.x0);
    let st = &inst.stages[0];
    println!("  per stage: {} states, {} controls, {} rows", st.nx(), st.ny(), st.num_rows());
    println!("  Lipschitz constants {:?}", inst.lipschitz());
    println!("  constant cost from minimum thermal output {}", hydro_fixed_cost(&config));
    println!("  instance file size {} bytes", instance_to_json(&inst).len());

    let ext = solve_extensive_primal(&inst, DEFAULT_NODE_BUDGET).expect("tree fits the budget");
    println!("  risk-averse optimal cost {:.6} over {} tree nodes", ext.value, ext.nodes.len());
    for (node, x) in ext.nodes.iter().zip(&ext.states).filter(|(n, _)| n.depth == 1) {
        println!("  storage after stage 1, inflow scenario {}: {:.3?}", node.realization.map_or(0, |j| j + 1), x);
    }
}
