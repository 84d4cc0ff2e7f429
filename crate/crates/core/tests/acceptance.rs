//! Acceptance gate. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line per criterion and exits nonzero if any criterion fails.

use radual::dual::{DualConfig, DualSddp};
use radual::lp::DEFAULT_TOL;
use radual::model::random::{random_instance, RandomSpec};
use radual::model::{build_hydro_instance, desk_hydro_config, tiny_defer, Instance, DEFAULT_NODE_BUDGET};
use radual::oracle::{coperspective_check, philpott_upper_bound, solve_extensive_primal, TrialPointSet};
use radual::primal::PrimalSddp;
use radual::risk::{avar, rho_mean_avar, rho_via_envelope, RiskEnvelope};
use radual::runner::{run_command, run_lipschitz_study, timing_report, Mode, RunConfig, RunStatus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

fn criterion_1() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for (alpha, beta, want) in [(0.5, 1.0, 2.0), (0.5, 0.0, 3.0), (0.5, 0.5, 2.5)] {
        let inst = tiny_defer(alpha, beta);
        let exact = solve_extensive_primal(&inst, DEFAULT_NODE_BUDGET).unwrap().value;
        let config = RunConfig {
            mode: Mode::Both,
            iters: 200,
            tol: 1e-4,
            seed: 0,
            ..RunConfig::default()
        };
        let start = Instant::now();
        let out = run_command(&config, &inst).unwrap();
        let elapsed = start.elapsed();
        let (lb, ub) = (out.lower_bound.unwrap(), out.upper_bound.unwrap());
        let iters = out.records.last().unwrap().iter;
        let ok = out.status == RunStatus::Converged
            && iters <= 200
            && elapsed < Duration::from_secs(30)
            && rel_close(exact, want, 1e-9)
            && rel_close(lb, exact, 1e-4)
            && rel_close(ub, exact, 1e-4);
        pass &= ok;
        notes.push(format!("beta={beta}: v*={exact:.6} LB={lb:.6} UB={ub:.6} in {iters} it, {elapsed:.2?}"));
    }
    outcome(pass, notes.join("; "))
}

struct RandomRun {
    inst: Instance,
    value: f64,
    scale: f64,
    violations: usize,
    primal: PrimalSddp,
    dual: DualSddp,
}

fn random_suite() -> (Vec<RandomRun>, Duration) {
    let start = Instant::now();
    let mut runs = Vec::new();
    for seed in 0..20u64 {
        let inst = random_instance(seed, RandomSpec::default());
        let value = solve_extensive_primal(&inst, DEFAULT_NODE_BUDGET).unwrap().value;
        let scale = inst.cost_scale().max(value.abs()).max(1.0);
        let tol = 1e-7 * scale;
        let mut primal = PrimalSddp::new(&inst, seed).unwrap();
        let mut dual = DualSddp::new(&inst, seed, DualConfig::default()).unwrap();
        let bad = |lb: f64, ub: f64| lb - tol > value || value > ub + tol;
        let mut violations = usize::from(bad(primal.lower_bound(), dual.upper_bound()));
        for _ in 0..100 {
            let lb = primal.iterate().unwrap();
            let ub = dual.iterate().unwrap();
            violations += usize::from(bad(lb, ub));
        }
        runs.push(RandomRun {
            inst,
            value,
            scale,
            violations,
            primal,
            dual,
        });
    }
    (runs, start.elapsed())
}

fn criterion_2(runs: &[RandomRun], elapsed: Duration) -> Outcome {
    let violations: usize = runs.iter().map(|r| r.violations).sum();
    let final_gap = runs
        .iter()
        .map(|r| (r.dual.upper_bound() - r.primal.lower_bound()) / r.scale)
        .fold(0.0, f64::max);
    let horizons: Vec<usize> = runs.iter().map(|r| r.inst.horizon).collect();
    let shapes_ok = runs.iter().all(|r| {
        r.inst.horizon <= 3
            && r.inst.stages.iter().all(|s| {
                s.branches() <= 3
                    && s.nx() <= 2
                    && s.realizations.iter().all(|q| q.c.iter().all(|c| *c >= 0.0))
                    && s.xbar.iter().chain(&s.ybar).all(|u| u.is_finite())
            })
    });
    outcome(
        violations == 0 && shapes_ok && elapsed < Duration::from_secs(600),
        format!(
            "{} instances (T = {horizons:?}), {violations} bracket violations over 101 checks each, largest final scaled gap {final_gap:.1e}, {elapsed:.2?}",
            runs.len()
        ),
    )
}

fn tail_avar(theta: &[f64], p: &[f64], alpha: f64) -> f64 {
    let mut idx: Vec<usize> = (0..theta.len()).collect();
    idx.sort_by(|&a, &b| theta[b].total_cmp(&theta[a]));
    let (mut left, mut acc) = (alpha, 0.0);
    for i in idx {
        let take = p[i].min(left);
        acc += take * theta[i];
        left -= take;
    }
    acc / alpha
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let j = rng.gen_range(1..=6);
        let theta: Vec<f64> = (0..j).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let w: Vec<f64> = (0..j).map(|_| rng.gen_range(0.05..1.0)).collect();
        let s: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|v| v / s).collect();
        let alpha = if rng.gen_bool(0.1) { 1.0 } else { rng.gen_range(0.01..1.0) };
        let env = RiskEnvelope::MeanAvar {
            p: p.clone(),
            alpha,
            beta: 0.0,
        };
        let a = avar(&theta, &p, alpha).unwrap();
        let values = [
            a,
            rho_mean_avar(&theta, &p, alpha, 0.0).unwrap(),
            rho_via_envelope(&theta, &env).unwrap(),
            tail_avar(&theta, &p, alpha),
        ];
        for v in values {
            worst = worst.max((v - a).abs());
        }
        let c = rng.gen_range(-10.0..10.0);
        let k = rng.gen_range(0.0..10.0);
        let shifted: Vec<f64> = theta.iter().map(|t| t + c).collect();
        let scaled: Vec<f64> = theta.iter().map(|t| t * k).collect();
        let raised: Vec<f64> = theta.iter().map(|t| t + rng.gen_range(0.0..5.0)).collect();
        worst = worst.max((avar(&shifted, &p, alpha).unwrap() - (a + c)).abs());
        worst = worst.max((avar(&scaled, &p, alpha).unwrap() - k * a).abs());
        worst = worst.max((a - avar(&raised, &p, alpha).unwrap()).max(0.0));
    }
    outcome(worst <= 1e-8, format!("200 cases, largest deviation {worst:.1e}"))
}

fn criterion_4(runs: &[RandomRun]) -> Outcome {
    let (mut solves, mut warnings) = (0usize, 0usize);
    let mut mass: f64 = 0.0;
    let mut intercepts_zero = true;
    let mut homogeneous = true;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for r in runs {
        let stats = r.dual.stats();
        solves += stats.stage_solves;
        warnings += stats.sanity_warnings;
        mass = mass.max(stats.max_mass_residual);
        let approx = r.dual.approx();
        for cuts in &approx.cuts {
            for cut in cuts {
                let origin = vec![0.0; cut.x.len()];
                intercepts_zero &= cut.intercept() == 0.0 && cut.eval(&origin, 0.0) == 0.0;
            }
        }
        for t in 1..=r.inst.horizon {
            let n = r.inst.incoming_dim(t);
            for _ in 0..10 {
                let pi: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect();
                let gamma = rng.gen_range(0.0..2.0);
                let pi2: Vec<f64> = pi.iter().map(|p| 2.0 * p).collect();
                homogeneous &= approx.eval(t, &pi2, 2.0 * gamma) == 2.0 * approx.eval(t, &pi, gamma);
            }
        }
    }
    let clean = if solves == 0 { 1.0 } else { 1.0 - warnings as f64 / solves as f64 };
    outcome(
        intercepts_zero && homogeneous && mass <= 1e-8 && clean >= 0.99,
        format!(
            "zero intercepts {intercepts_zero}, exact homogeneity {homogeneous}, max mass residual {mass:.1e}, sanity held on {} of {solves} stage solves",
            solves - warnings
        ),
    )
}

fn criterion_5() -> Outcome {
    let inst = tiny_defer(0.5, 0.0);
    let rep = coperspective_check(&inst, 1, 0.25, 20, 5, DEFAULT_NODE_BUDGET).unwrap();
    outcome(
        rep.pass() && rep.samples.len() == 20,
        format!(
            "20 samples, max discrepancy {:.2e} vs allowance L_1 h = {}",
            rep.max_discrepancy, rep.tolerance
        ),
    )
}

fn criterion_6() -> Outcome {
    let inst = build_hydro_instance(&desk_hydro_config()).unwrap();
    let config = RunConfig {
        iters: 100,
        seed: 0,
        factors: vec![1.0, 10.0, 100.0],
        ..RunConfig::default()
    };
    let study = run_lipschitz_study(&inst, &config).unwrap();
    let first = study.gaps_at(0);
    let last = study.gaps_at(study.checkpoints.len() - 1);
    let ordered = study.initial_gaps_ordered(0.0);
    let spread = study.final_spread();
    outcome(
        study.checkpoints.first() == Some(&1) && study.checkpoints.last() == Some(&100) && ordered && spread <= 0.02,
        format!(
            "gaps % at iteration 1: {:.2?}; at iteration 100: {:.4?}; spread {:.4} points",
            first.iter().map(|g| 100.0 * g).collect::<Vec<_>>(),
            last.iter().map(|g| 100.0 * g).collect::<Vec<_>>(),
            100.0 * spread
        ),
    )
}

fn criterion_7() -> Outcome {
    let config = RunConfig {
        iters: 20,
        seed: 11,
        ..RunConfig::default()
    };
    let report = timing_report(&desk_hydro_config(), &[5, 10, 20], &config).unwrap();
    let rows: Vec<String> = report
        .rows
        .iter()
        .map(|r| format!("J={} {:.2}/{:.2} ms ratio {:.2}", r.branches, r.primal_ms, r.dual_ms, r.ratio))
        .collect();
    outcome(
        report.ratios_exceed_one() && report.ratio_nondecreasing() == Some(true),
        rows.join("; "),
    )
}

fn criterion_8(runs: &[RandomRun]) -> Outcome {
    let mut worst = f64::INFINITY;
    for r in runs {
        let trials = TrialPointSet::from_trajectories(r.inst.horizon, r.primal.trajectories());
        let ub = philpott_upper_bound(&r.inst, &trials, DEFAULT_TOL).unwrap();
        worst = worst.min(ub.root - r.value);
    }
    let inst = tiny_defer(0.5, 0.0);
    let mut trials = TrialPointSet::new(inst.horizon);
    trials.push(1, vec![0.0]);
    trials.push(1, vec![3.0]);
    let tiny = philpott_upper_bound(&inst, &trials, DEFAULT_TOL).unwrap().root;
    outcome(
        worst >= -1e-7 && (tiny - 3.0).abs() <= 1e-6,
        format!("min (bound - v*) over {} instances {worst:.3e}; tiny-defer with {{0, 3}} gives {tiny}", runs.len()),
    )
}

fn main() {
    let start = Instant::now();
    let (runs, suite_time) = random_suite();
    let results = [
        ("oracle convergence, tiny scale", criterion_1()),
        ("randomized weak duality", criterion_2(&runs, suite_time)),
        ("risk-measure exactness", criterion_3()),
        ("dual-structure properties", criterion_4(&runs)),
        ("co-perspective link", criterion_5()),
        ("Lipschitz-factor robustness", criterion_6()),
        ("timing trend", criterion_7()),
        ("inner-approximation baseline", criterion_8(&runs)),
    ];
    let mut failed = 0;
    for (k, (name, o)) in results.iter().enumerate() {
        println!("criterion {} [{name}]: {} - {}", k + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} of {} criteria passed in {:.2?}", results.len() - failed, results.len(), start.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}
