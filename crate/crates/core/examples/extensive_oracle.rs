//! Exact reference values: the extensive form over the whole scenario tree,
//! exact cost-to-go at a given state, and the exact dual function.
//!
//! Run with `cargo run --example extensive_oracle`.

use radual::model::{tiny_defer, DEFAULT_NODE_BUDGET};
use radual::oracle::{exact_cost_to_go, exact_dual_first_stage, exact_dual_value, solve_extensive_primal};

fn main() {
    for beta in [0.0, 0.5, 1.0] {
        let inst = tiny_defer(0.5, beta);
        let ext = solve_extensive_primal(&inst, DEFAULT_NODE_BUDGET).unwrap();
        let dual = exact_dual_first_stage(&inst, true, DEFAULT_NODE_BUDGET).unwrap();
        println!("beta = {beta}: primal optimum {:.6}, dual optimum {:.6}", ext.value, dual);
        for (node, g) in ext.nodes.iter().skip(1).zip(&ext.gamma) {
            println!("  node {} (stage {}): risk-adjusted weight {:.3}", node.id, node.depth, g.max(0.0));
        }
    }

    let inst = tiny_defer(0.5, 0.0);
    println!("cost-to-go after stage 1:");
    for x in [0.0, 1.0, 2.0, 3.0, 4.0] {
        let v = exact_cost_to_go(&inst, 1, &[x], DEFAULT_NODE_BUDGET).unwrap().unwrap();
        println!("  V(x = {x}) = {v}");
    }
    println!("dual function at state 1, gamma = 1:");
    for pi in [-2.0, -1.0, 0.0, 1.0] {
        let d = exact_dual_value(&inst, 1, &[pi], 1.0, false, DEFAULT_NODE_BUDGET).unwrap();
        println!("  D(pi = {pi}, 1) = {d}");
    }
}
