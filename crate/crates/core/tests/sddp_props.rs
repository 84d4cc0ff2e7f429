//! Cut validity and bound properties of both SDDP variants on random
//! instances, checked against the exact whole-tree oracles.

use proptest::prelude::*;
use radual::dual::{DualConfig, DualSddp};
use radual::model::random::{random_instance, RandomSpec};
use radual::model::{Instance, DEFAULT_NODE_BUDGET};
use radual::oracle::{exact_cost_to_go, exact_dual_value, solve_extensive_primal};
use radual::primal::PrimalSddp;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scale(inst: &Instance, v: f64) -> f64 {
    inst.cost_scale().max(v.abs()).max(1.0)
}

fn random_point(rng: &mut ChaCha8Rng, upper: &[f64]) -> Vec<f64> {
    upper.iter().map(|&u| rng.gen_range(0.0..=u)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn primal_cuts_underestimate_cost_to_go(seed in 0u64..10_000, iters in 1usize..12) {
        let inst = random_instance(seed, RandomSpec::default());
        let v = solve_extensive_primal(&inst, DEFAULT_NODE_BUDGET).unwrap().value;
        let tol = 1e-7 * scale(&inst, v);
        let mut sddp = PrimalSddp::new(&inst, seed).unwrap();
        for _ in 0..iters {
            sddp.iterate().unwrap();
        }
        let lbs = sddp.lower_bounds();
        prop_assert!(lbs.windows(2).all(|w| w[1] >= w[0] - tol), "{lbs:?}");
        prop_assert!(sddp.lower_bound() <= v + tol);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in 1..inst.horizon {
            let upper = inst.stages[s - 1].xbar.clone();
            for _ in 0..4 {
                let x = random_point(&mut rng, &upper);
                let exact = exact_cost_to_go(&inst, s, &x, DEFAULT_NODE_BUDGET).unwrap().unwrap();
                prop_assert!(sddp.pools().eval(s, &x) <= exact + tol, "stage {s} at {x:?}");
            }
        }
    }

    #[test]
    fn dual_cuts_overestimate_dual_function(seed in 0u64..10_000, iters in 1usize..12) {
        let inst = random_instance(seed, RandomSpec::default());
        let v = solve_extensive_primal(&inst, DEFAULT_NODE_BUDGET).unwrap().value;
        let tol = 1e-7 * scale(&inst, v);
        let mut sddp = DualSddp::new(&inst, seed, DualConfig::default()).unwrap();
        for _ in 0..iters {
            sddp.iterate().unwrap();
        }
        let ubs = sddp.upper_bounds();
        prop_assert!(ubs.windows(2).all(|w| w[1] <= w[0] + tol), "{ubs:?}");
        prop_assert!(sddp.upper_bound() >= v - tol);

        let approx = sddp.approx();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for t in 1..inst.horizon {
            prop_assert!(approx.cuts[t].iter().all(|c| c.intercept() == 0.0 && c.stage == t));
            let lip = inst.stages[t].lipschitz;
            for _ in 0..4 {
                let gamma = rng.gen_range(0.0..=1.0);
                let pi: Vec<f64> = (0..inst.incoming_dim(t)).map(|_| rng.gen_range(-lip..=lip)).collect();
                let exact = exact_dual_value(&inst, t, &pi, gamma, true, DEFAULT_NODE_BUDGET).unwrap();
                let model = approx.eval(t, &pi, gamma);
                prop_assert!(model >= exact - tol, "state {t}: model {model} < exact {exact}");
                let pi2: Vec<f64> = pi.iter().map(|p| 2.0 * p).collect();
                prop_assert_eq!(approx.eval(t, &pi2, 2.0 * gamma), 2.0 * model);
            }
        }
        prop_assert!(sddp.stats().max_mass_residual <= 1e-8);
    }

    #[test]
    fn exact_dual_is_concave_and_homogeneous(seed in 0u64..10_000) {
        let inst = random_instance(seed, RandomSpec::default());
        let t = 1;
        let lip = inst.stages[t].lipschitz;
        let n = inst.incoming_dim(t);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || {
            let g: f64 = rng.gen_range(0.0..=1.0);
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-lip..=lip)).collect();
            (p, g)
        };
        let (p1, g1) = draw();
        let (p2, g2) = draw();
        let d = |p: &[f64], g: f64| exact_dual_value(&inst, t, p, g, false, DEFAULT_NODE_BUDGET).unwrap();
        let (d1, d2) = (d(&p1, g1), d(&p2, g2));
        let pm: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| 0.5 * (a + b)).collect();
        let dm = d(&pm, 0.5 * (g1 + g2));
        let tol = 1e-7 * (1.0 + d1.abs() + d2.abs() + lip * inst.cost_scale());
        prop_assert!(dm >= 0.5 * (d1 + d2) - tol, "{dm} < mean of {d1}, {d2}");
        let p3: Vec<f64> = p1.iter().map(|p| 3.0 * p).collect();
        prop_assert!((d(&p3, 3.0 * g1) - 3.0 * d1).abs() <= 3.0 * tol);
    }
}

#[test]
fn dual_approximation_round_trips_through_json() {
    let inst = random_instance(3, RandomSpec::default());
    let mut sddp = DualSddp::new(&inst, 3, DualConfig::default()).unwrap();
    for _ in 0..5 {
        sddp.iterate().unwrap();
    }
    let text = sddp.approx().to_json();
    let back = radual::dual::DualApprox::from_json(&text).unwrap();
    assert_eq!(&back, sddp.approx());
}

#[test]
fn primal_pools_round_trip_through_json() {
    let inst = random_instance(4, RandomSpec::default());
    let mut sddp = PrimalSddp::new(&inst, 4).unwrap();
    for _ in 0..5 {
        sddp.iterate().unwrap();
    }
    let back = radual::primal::CutPools::from_json(&sddp.pools().to_json()).unwrap();
    assert_eq!(&back, sddp.pools());
}
