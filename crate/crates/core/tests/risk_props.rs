//! Risk measures against an independent sorted-tail evaluation, plus the
//! coherence identities.

use proptest::prelude::*;
use radual::risk::{
    avar, envelope_vertices, rho_mean_avar, rho_via_envelope, worst_case_measure, RiskEnvelope, DEFAULT_VERTEX_BUDGET,
};

/// Upper-tail average: spend mass `alpha` on the largest outcomes first.
fn tail_avar(theta: &[f64], p: &[f64], alpha: f64) -> f64 {
    let mut idx: Vec<usize> = (0..theta.len()).collect();
    idx.sort_by(|&a, &b| theta[b].total_cmp(&theta[a]));
    let mut left = alpha;
    let mut acc = 0.0;
    for i in idx {
        let take = p[i].min(left);
        acc += take * theta[i];
        left -= take;
        if left <= 0.0 {
            break;
        }
    }
    acc / alpha
}

fn oracle(theta: &[f64], p: &[f64], alpha: f64, beta: f64) -> f64 {
    let mean: f64 = theta.iter().zip(p).map(|(t, q)| t * q).sum();
    beta * mean + (1.0 - beta) * tail_avar(theta, p, alpha)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-8 * (1.0 + a.abs().max(b.abs()))
}

#[derive(Debug, Clone)]
struct Case {
    theta: Vec<f64>,
    p: Vec<f64>,
    alpha: f64,
    beta: f64,
}

fn case() -> impl Strategy<Value = Case> {
    (1usize..=6).prop_flat_map(|j| {
        (
            prop::collection::vec(-50.0f64..50.0, j),
            prop::collection::vec(1u32..=9, j),
            prop_oneof![Just(1.0), 0.01f64..1.0],
            prop_oneof![Just(0.0), Just(1.0), 0.0f64..=1.0],
        )
            .prop_map(|(theta, w, alpha, beta)| {
                let s: u32 = w.iter().sum();
                Case {
                    theta,
                    p: w.iter().map(|&v| v as f64 / s as f64).collect(),
                    alpha,
                    beta,
                }
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn functional_and_set_forms_agree(c in case()) {
        let want = oracle(&c.theta, &c.p, c.alpha, c.beta);
        prop_assert!(close(avar(&c.theta, &c.p, c.alpha).unwrap(), tail_avar(&c.theta, &c.p, c.alpha)));
        prop_assert!(close(rho_mean_avar(&c.theta, &c.p, c.alpha, c.beta).unwrap(), want));
        let env = RiskEnvelope::MeanAvar { p: c.p.clone(), alpha: c.alpha, beta: c.beta };
        prop_assert!(close(rho_via_envelope(&c.theta, &env).unwrap(), want));
        let (v, q) = worst_case_measure(&c.theta, &env).unwrap();
        prop_assert!(close(v, want));
        prop_assert!(close(q.iter().sum::<f64>(), 1.0));
        for (qi, pi) in q.iter().zip(&c.p) {
            prop_assert!(*qi >= c.beta * pi - 1e-12);
            prop_assert!(*qi <= c.beta * pi + (1.0 - c.beta) * pi / c.alpha + 1e-12);
        }
        prop_assert!(close(q.iter().zip(&c.theta).map(|(a, b)| a * b).sum::<f64>(), want));
    }

    #[test]
    fn coherence(c in case(), shift in -20.0f64..20.0, scale in 0.0f64..5.0,
                 bump in prop::collection::vec(0.0f64..10.0, 6),
                 other in prop::collection::vec(-50.0f64..50.0, 6)) {
        let rho = |t: &[f64]| rho_mean_avar(t, &c.p, c.alpha, c.beta).unwrap();
        let base = rho(&c.theta);
        let shifted: Vec<f64> = c.theta.iter().map(|t| t + shift).collect();
        prop_assert!(close(rho(&shifted), base + shift));
        let scaled: Vec<f64> = c.theta.iter().map(|t| t * scale).collect();
        prop_assert!(close(rho(&scaled), scale * base));
        let bigger: Vec<f64> = c.theta.iter().zip(&bump).map(|(t, b)| t + b).collect();
        prop_assert!(rho(&bigger) >= base - 1e-8);
        let o = &other[..c.theta.len()];
        let sum: Vec<f64> = c.theta.iter().zip(o).map(|(a, b)| a + b).collect();
        prop_assert!(rho(&sum) <= base + rho(o) + 1e-8);
    }

    #[test]
    fn vertex_form_matches(c in case()) {
        let env = RiskEnvelope::MeanAvar { p: c.p.clone(), alpha: c.alpha, beta: c.beta };
        let verts = envelope_vertices(&env, DEFAULT_VERTEX_BUDGET).unwrap();
        let best = verts
            .iter()
            .map(|q| q.iter().zip(&c.theta).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(close(best, oracle(&c.theta, &c.p, c.alpha, c.beta)));
        let poly = RiskEnvelope::Vertices(verts);
        prop_assert!(close(rho_via_envelope(&c.theta, &poly).unwrap(), best));
    }
}

#[test]
fn expectation_and_worst_case_limits() {
    let theta = [3.0, -1.0, 8.0];
    let p = [0.2, 0.5, 0.3];
    assert!(close(rho_mean_avar(&theta, &p, 0.5, 1.0).unwrap(), 2.5));
    // a tail lighter than the top outcome's probability sees only that outcome
    assert!(close(avar(&theta, &p, 0.2).unwrap(), 8.0));
}
