//! Interleave primal and dual SDDP until the relative gap closes, then write
//! the convergence log as CSV.
//!
//! Run with `cargo run --release --example bounds_with_stopping [out-dir]`.

use radual::model::{build_hydro_instance, desk_hydro_config};
use radual::runner::{run_command, write_convergence_csv, Mode, RunConfig};

fn main() {
    let inst = build_hydro_instance(&desk_hydro_config()).unwrap();
    let config = RunConfig {
        mode: Mode::Both,
        iters: 300,
        tol: 1e-4,
        seed: 3,
        ..RunConfig::default()
    };
    let outcome = run_command(&config, &inst).unwrap();
    let last = outcome.records.last().unwrap();
    println!(
        "{:?} after {} iterations: LB {:.4}, UB {:.4}, gap {:.2e}",
        outcome.status,
        last.iter,
        last.lb.unwrap(),
        last.ub.unwrap(),
        last.gap.unwrap()
    );

    match std::env::args().nth(1) {
        Some(dir) => {
            let files = outcome.write_artifacts(dir.as_ref()).unwrap();
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        None => {
            let mut out = Vec::new();
            write_convergence_csv(&outcome.records[..outcome.records.len().min(8)], &mut out).unwrap();
            print!("{}", String::from_utf8(out).unwrap());
            println!("...");
        }
    }
}
