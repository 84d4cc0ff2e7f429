//! Mean-AV@R and polyhedral risk measures: the Rockafellar-Uryasev formula,
//! the worst-case measure over the risk envelope, and the envelope's vertices.
//!
//! Run with `cargo run --example risk_measures`.

use radual::risk::{
    avar, envelope_vertices, rho_mean_avar, rho_via_envelope, worst_case_measure, RiskEnvelope, DEFAULT_VERTEX_BUDGET,
};

fn main() {
    let theta = [10.0, 4.0, -2.0, 7.0];
    let p = vec![0.1, 0.4, 0.3, 0.2];
    let (alpha, beta) = (0.3, 0.5);

    println!("costs         {theta:?}");
    println!("probabilities {p:?}");
    println!("E[theta]            = {}", theta.iter().zip(&p).map(|(t, q)| t * q).sum::<f64>());
    println!("AV@R_{alpha}(theta)      = {}", avar(&theta, &p, alpha).unwrap());
    println!("(1-b)E + b AV@R     = {}", rho_mean_avar(&theta, &p, alpha, beta).unwrap());

    let env = RiskEnvelope::MeanAvar { p: p.clone(), alpha, beta };
    let (value, q) = worst_case_measure(&theta, &env).unwrap();
    println!("worst-case measure  = {q:?} (value {value})");
    println!("envelope LP value   = {}", rho_via_envelope(&theta, &env).unwrap());

    let vertices = envelope_vertices(&env, DEFAULT_VERTEX_BUDGET).unwrap();
    println!("envelope has {} vertices:", vertices.len());
    for v in &vertices {
        println!("  {v:?}");
    }

    // the same measure given as an explicit vertex list
    let poly = RiskEnvelope::Vertices(vertices);
    println!("vertex form value   = {}", rho_via_envelope(&theta, &poly).unwrap());
}
