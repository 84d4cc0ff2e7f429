//! Seeded generator of small feasible instances for testing.
//!
//! Every stage has one dynamics row per state component,
//! `x_i = sum_k B_ik x_prev_k + d_i + buy_i - dump_i + sum_e G_ie e`, with
//! `B` nonnegative and column sums at most one. Buying and dumping are
//! bounded generously, so every stage is feasible for any incoming state.

use super::{estimate_lipschitz, Instance, RiskSpec, SparseMatrix, Stage, StageRealization};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomSpec {
    pub min_horizon: usize,
    pub max_horizon: usize,
    pub max_branches: usize,
    pub max_state_dim: usize,
    pub max_extra_controls: usize,
}

impl Default for RandomSpec {
    fn default() -> Self {
        Self {
            min_horizon: 2,
            max_horizon: 3,
            max_branches: 3,
            max_state_dim: 2,
            max_extra_controls: 2,
        }
    }
}

fn round2(v: f64) -> f64 {
    (v * 4.0).round() / 4.0
}

fn random_risk(rng: &mut ChaCha8Rng, branches: usize) -> RiskSpec {
    if rng.gen_bool(0.6) {
        let alpha = [0.1, 0.25, 0.5, 0.75, 1.0][rng.gen_range(0..5)];
        let beta = [0.0, 0.25, 0.5, 1.0][rng.gen_range(0..4)];
        RiskSpec::MeanAvar { alpha, beta }
    } else {
        let k = rng.gen_range(1..=3);
        let vertices = (0..k)
            .map(|_| {
                let w: Vec<f64> = (0..branches).map(|_| rng.gen_range(1..=4) as f64).collect();
                let s: f64 = w.iter().sum();
                w.into_iter().map(|v| v / s).collect()
            })
            .collect();
        RiskSpec::Polyhedral { vertices }
    }
}

/// Draws an instance; the same seed always yields the same instance.
pub fn random_instance(seed: u64, spec: RandomSpec) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = rng.gen_range(spec.min_horizon.max(1)..=spec.max_horizon.max(spec.min_horizon).max(1));
    let dim0 = rng.gen_range(1..=spec.max_state_dim.max(1));
    let x0: Vec<f64> = (0..dim0).map(|_| round2(rng.gen_range(0.0..4.0))).collect();

    let mut stages = Vec::with_capacity(horizon);
    let mut n_in = dim0;
    let mut xbar_in = 4.0f64;
    for _ in 0..horizon {
        let nx = rng.gen_range(1..=spec.max_state_dim.max(1));
        let ne = rng.gen_range(0..=spec.max_extra_controls);
        let xbar: Vec<f64> = (0..nx).map(|_| round2(rng.gen_range(3.0..8.0))).collect();
        let swing = 4.0 + n_in as f64 * xbar_in + xbar.iter().cloned().fold(0.0, f64::max);
        let mut ybar = vec![swing; 2 * nx];
        ybar.extend((0..ne).map(|_| round2(rng.gen_range(1.0..3.0))));
        let ny = ybar.len();

        // pass-through matrix: nonnegative, column sums <= 1
        let mut b = SparseMatrix::new();
        for k in 0..n_in {
            let mut budget: f64 = 1.0;
            for i in 0..nx {
                let v = if i == k % nx { round2(rng.gen_range(0.5..1.0)) } else { round2(rng.gen_range(0.0..0.25)) };
                let v = v.min(budget);
                budget -= v;
                b.push(i, k, -v);
            }
        }
        let mut a = SparseMatrix::new();
        let mut t = SparseMatrix::new();
        for i in 0..nx {
            a.push(i, i, 1.0);
            t.push(i, i, -1.0);
            t.push(i, nx + i, 1.0);
        }
        for e in 0..ne {
            let row = rng.gen_range(0..nx);
            t.push(row, 2 * nx + e, -round2(rng.gen_range(0.5..1.5)));
        }

        let branches = rng.gen_range(1..=spec.max_branches.max(1));
        let weights: Vec<f64> = (0..branches).map(|_| rng.gen_range(1..=4) as f64).collect();
        let wsum: f64 = weights.iter().sum();
        let realizations = weights
            .iter()
            .map(|w| {
                let d = (0..nx).map(|_| round2(rng.gen_range(-3.0..3.0))).collect();
                let mut c = Vec::with_capacity(ny);
                c.extend((0..nx).map(|_| round2(rng.gen_range(1.0..5.0))));
                c.extend((0..nx).map(|_| round2(rng.gen_range(0.0..1.0))));
                c.extend((0..ne).map(|_| round2(rng.gen_range(0.0..3.0))));
                StageRealization {
                    p: w / wsum,
                    a: a.clone(),
                    b: b.clone(),
                    t: t.clone(),
                    d,
                    c,
                }
            })
            .collect();
        let risk = random_risk(&mut rng, branches);
        xbar_in = xbar.iter().cloned().fold(0.0, f64::max);
        n_in = nx;
        stages.push(Stage {
            xbar,
            ybar,
            lipschitz: 0.0,
            risk,
            realizations,
            cost_to_go_lower_bound: None,
        });
    }
    let inst = Instance {
        horizon,
        x0,
        stages,
        name: Some(format!("random-{seed}")),
        description: None,
    };
    let l = estimate_lipschitz(&inst);
    inst.with_lipschitz(&l)
}
