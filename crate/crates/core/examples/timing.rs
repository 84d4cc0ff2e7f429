//! Per-iteration cost of the primal and dual methods as the number of inflow
//! scenarios per stage grows.
//!
//! Run with `cargo run --release --example timing`.

use radual::model::desk_hydro_config;
use radual::runner::{timing_report, RunConfig};

fn main() {
    let config = RunConfig {
        iters: 20,
        seed: 11,
        ..RunConfig::default()
    };
    let report = timing_report(&desk_hydro_config(), &[5, 10, 20], &config).unwrap();
    println!("mean over the last {} of {} iterations", report.window, report.iters);
    println!("   J   primal ms     dual ms   ratio");
    for r in &report.rows {
        println!("{:>4}  {:>10.3}  {:>10.3}  {:>6.2}", r.branches, r.primal_ms, r.dual_ms, r.ratio);
    }
    println!("dual slower for every J: {}", report.ratios_exceed_one());
    println!("ratio nondecreasing in J: {:?}", report.ratio_nondecreasing());
}
