//! Load, validate and re-serialize instance files, and show how malformed
//! input is reported.
//!
//! Run with `cargo run --example instance_files`.

use radual::model::{instance_from_json, instance_to_json, parse_instance_file, validate_instance};
use std::path::Path;

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/tiny-defer.json");
    let inst = parse_instance_file(&path).expect("bundled instance parses");
    println!("{}: T = {}, branching {:?}", path.display(), inst.horizon, inst.branching());
    println!("Lipschitz constants {:?}", inst.lipschitz());
    println!("validation: {}", if validate_instance(&inst).is_ok() { "ok" } else { "failed" });

    let text = instance_to_json(&inst);
    let again = instance_from_json(&text).unwrap();
    println!("round trip identical: {}", instance_to_json(&again) == text);

    let truncated = &text[..text.len() / 2];
    let bad_alpha = text.replacen("\"alpha\": 0.5", "\"alpha\": 0.0", 1);
    let bad_probs = text.replacen("\"p\": 0.5", "\"p\": 0.7", 1);
    for (label, input) in [("truncated", truncated), ("alpha = 0", bad_alpha.as_str()), ("probabilities", bad_probs.as_str())] {
        match instance_from_json(input) {
            Ok(_) => println!("{label}: unexpectedly accepted"),
            Err(e) => println!("{label}: [{}] {e}", e.code()),
        }
    }
}
