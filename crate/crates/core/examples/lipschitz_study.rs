//! How the dual bound depends on the Lipschitz estimate: the same run with
//! L, 10 L and 100 L, gaps tabulated at checkpoints.
//!
//! Run with `cargo run --release --example lipschitz_study`.

use radual::model::{build_hydro_instance, desk_hydro_config};
use radual::runner::{run_lipschitz_study, RunConfig};

fn main() {
    let inst = build_hydro_instance(&desk_hydro_config()).unwrap();
    let config = RunConfig {
        iters: 100,
        seed: 0,
        factors: vec![1.0, 10.0, 100.0],
        parallel: true,
        ..RunConfig::default()
    };
    let study = run_lipschitz_study(&inst, &config).unwrap();
    print!("iter");
    for f in &study.factors {
        print!("  gap % ({f} L)");
    }
    println!();
    for (c, iter) in study.checkpoints.iter().enumerate() {
        print!("{iter:>4}");
        for g in study.gaps_at(c) {
            print!("  {:>12.4}", 100.0 * g);
        }
        println!();
    }
    println!("first-iteration gaps grow with the factor: {}", study.initial_gaps_ordered(0.0));
    println!("spread at the last checkpoint: {:.4} percentage points", 100.0 * study.final_spread());
}
