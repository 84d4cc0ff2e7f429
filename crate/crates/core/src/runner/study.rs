use super::{format_sig12, relative_gap, RunConfig, RunError};
use crate::dual::DualSddp;
use crate::error::SolveError;
use crate::model::{build_hydro_instance, HydroConfig, InflowSpec, Instance, ModelError};
use crate::primal::PrimalSddp;
use std::time::Instant;

/// Iterations `1, 10, 20, 50, 100, 150, ...` up to `iters`, plus `iters`.
pub fn checkpoints(iters: usize) -> Vec<usize> {
    let mut out: Vec<usize> = [1, 10, 20]
        .into_iter()
        .chain((1..).map(|k| 50 * k).take_while(|&k| k <= iters))
        .filter(|&k| k <= iters)
        .collect();
    if iters > 0 && out.last() != Some(&iters) {
        out.push(iters);
    }
    out
}

/// Relative gaps of the same run under scaled Lipschitz constants.
///
/// The primal side never reads the Lipschitz constants, so one primal run
/// supplies the lower bounds for every factor.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzStudy {
    pub factors: Vec<f64>,
    pub checkpoints: Vec<usize>,
    /// Lower bound at each checkpoint.
    pub lower_bounds: Vec<f64>,
    /// `upper_bounds[f][c]` for factor `f` at checkpoint `c`.
    pub upper_bounds: Vec<Vec<f64>>,
    pub gaps: Vec<Vec<f64>>,
}

impl LipschitzStudy {
    /// Gaps at checkpoint index `c`, one per factor.
    pub fn gaps_at(&self, c: usize) -> Vec<f64> {
        self.gaps.iter().map(|g| g[c]).collect()
    }

    /// Whether the gaps at the first checkpoint grow with the factor,
    /// up to `slack` in relative-gap units.
    pub fn initial_gaps_ordered(&self, slack: f64) -> bool {
        let mut order: Vec<usize> = (0..self.factors.len()).collect();
        order.sort_by(|&a, &b| self.factors[a].total_cmp(&self.factors[b]));
        let g: Vec<f64> = order.iter().map(|&f| self.gaps[f][0]).collect();
        !self.checkpoints.is_empty() && g.windows(2).all(|w| w[1] >= w[0] - slack)
    }

    /// Largest pairwise difference between factors at the last checkpoint.
    pub fn final_spread(&self) -> f64 {
        let Some(last) = self.checkpoints.len().checked_sub(1) else {
            return 0.0;
        };
        let g = self.gaps_at(last);
        let hi = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = g.iter().cloned().fold(f64::INFINITY, f64::min);
        hi - lo
    }

    /// `factor,iter,lb,ub,gap` rows, factor-major.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("factor,iter,lb,ub,gap\n");
        for (f, factor) in self.factors.iter().enumerate() {
            for (c, iter) in self.checkpoints.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    format_sig12(*factor),
                    iter,
                    format_sig12(self.lower_bounds[c]),
                    format_sig12(self.upper_bounds[f][c]),
                    format_sig12(self.gaps[f][c])
                ));
            }
        }
        out
    }
}

fn primal_checkpoints(inst: &Instance, config: &RunConfig, marks: &[usize]) -> Result<Vec<f64>, SolveError> {
    let mut primal = PrimalSddp::with_tolerance(inst, config.seed, config.lp_tol)?;
    let mut out = Vec::with_capacity(marks.len());
    for k in 1..=config.iters {
        let lb = primal.iterate()?;
        if marks.contains(&k) {
            out.push(lb);
        }
    }
    Ok(out)
}

fn dual_checkpoints(inst: &Instance, config: &RunConfig, marks: &[usize]) -> Result<Vec<f64>, SolveError> {
    let mut dual = DualSddp::new(inst, config.seed, config.dual_config())?;
    let mut out = Vec::with_capacity(marks.len());
    for k in 1..=config.iters {
        let ub = dual.iterate()?;
        if marks.contains(&k) {
            out.push(ub);
        }
    }
    Ok(out)
}

/// Runs the dual with `L`, `10 L`, `100 L` (or `config.factors`), all with
/// `config.seed`, and tabulates the gaps at the standard checkpoints.
pub fn run_lipschitz_study(inst: &Instance, config: &RunConfig) -> Result<LipschitzStudy, RunError> {
    config.validate()?;
    let marks = checkpoints(config.iters);
    let scaled: Vec<Instance> = config.factors.iter().map(|&f| inst.scale_lipschitz(f)).collect();
    let (lower, upper) = if config.parallel {
        std::thread::scope(|scope| {
            let lower = scope.spawn(|| primal_checkpoints(inst, config, &marks));
            let arms: Vec<_> = scaled
                .iter()
                .map(|s| scope.spawn(|| dual_checkpoints(s, config, &marks)))
                .collect();
            let upper: Result<Vec<_>, SolveError> =
                arms.into_iter().map(|h| h.join().expect("study arm panicked")).collect();
            (lower.join().expect("primal arm panicked"), upper)
        })
    } else {
        let lower = primal_checkpoints(inst, config, &marks);
        let upper = scaled.iter().map(|s| dual_checkpoints(s, config, &marks)).collect();
        (lower, upper)
    };
    let lower = lower?;
    let upper: Vec<Vec<f64>> = upper?;
    let gaps = upper
        .iter()
        .map(|ub| lower.iter().zip(ub).map(|(&l, &u)| relative_gap(l, u)).collect())
        .collect();
    for (f, factor) in config.factors.iter().enumerate() {
        log::info!("factor {factor}: gaps {:?}", upper[f].iter().zip(&lower).map(|(&u, &l)| relative_gap(l, u)).collect::<Vec<_>>());
    }
    Ok(LipschitzStudy {
        factors: config.factors.clone(),
        checkpoints: marks,
        lower_bounds: lower,
        upper_bounds: upper,
        gaps,
    })
}

/// The same system with `branches` sampled inflow scenarios per stage.
///
/// Explicit scenario tables are replaced by a sampled model centred on their
/// per-stage mean, with spread equal to the largest relative deviation
/// (capped at 1).
pub fn with_branch_count(config: &HydroConfig, branches: usize, seed: u64) -> Result<HydroConfig, ModelError> {
    let mut out = config.clone();
    out.inflows = match &config.inflows {
        InflowSpec::Sampled { mean, spread, seed, .. } => InflowSpec::Sampled {
            mean: mean.clone(),
            spread: *spread,
            branches,
            seed: *seed,
        },
        InflowSpec::Explicit { .. } => {
            let scen = config.inflow_scenarios()?;
            let mean: Vec<Vec<f64>> = scen
                .iter()
                .map(|stage| {
                    let n = stage.len() as f64;
                    (0..stage[0].len()).map(|r| stage.iter().map(|s| s[r]).sum::<f64>() / n).collect()
                })
                .collect();
            let mut spread: f64 = 0.0;
            for (stage, m) in scen.iter().zip(&mean) {
                for s in stage {
                    for (v, mu) in s.iter().zip(m) {
                        if *mu > 0.0 {
                            spread = spread.max((v - mu).abs() / mu);
                        }
                    }
                }
            }
            InflowSpec::Sampled {
                mean,
                spread: spread.min(1.0),
                branches,
                seed,
            }
        }
    };
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub branches: usize,
    /// Mean primal iteration time over the timing window, milliseconds.
    pub primal_ms: f64,
    pub dual_ms: f64,
    pub ratio: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub iters: usize,
    /// Number of final iterations averaged.
    pub window: usize,
    pub rows: Vec<TimingRow>,
}

impl TimingReport {
    pub fn ratios_exceed_one(&self) -> bool {
        self.rows.iter().all(|r| r.ratio > 1.0)
    }

    /// `None` with fewer than two rows, where no trend is defined.
    pub fn ratio_nondecreasing(&self) -> Option<bool> {
        (self.rows.len() >= 2).then(|| self.rows.windows(2).all(|w| w[1].ratio >= w[0].ratio))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("branches,primal_ms,dual_ms,ratio,lb,ub\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.branches,
                format_sig12(r.primal_ms),
                format_sig12(r.dual_ms),
                format_sig12(r.ratio),
                format_sig12(r.lower_bound),
                format_sig12(r.upper_bound)
            ));
        }
        out
    }
}

fn time_arm(inst: &Instance, config: &RunConfig, window: usize) -> Result<(f64, f64, f64, f64), SolveError> {
    let mut primal = PrimalSddp::with_tolerance(inst, config.seed, config.lp_tol)?;
    let mut dual = DualSddp::new(inst, config.seed, config.dual_config())?;
    let (mut tp, mut td) = (0.0, 0.0);
    for k in 1..=config.iters {
        let t = Instant::now();
        primal.iterate()?;
        let a = t.elapsed().as_secs_f64();
        let t = Instant::now();
        dual.iterate()?;
        let b = t.elapsed().as_secs_f64();
        if k + window > config.iters {
            tp += a;
            td += b;
        }
    }
    let w = window.max(1) as f64;
    Ok((tp / w * 1e3, td / w * 1e3, primal.lower_bound(), dual.upper_bound()))
}

/// Mean per-iteration primal and dual times over the last five of
/// `config.iters` iterations, for each branch count.
pub fn timing_report(hydro: &HydroConfig, branch_counts: &[usize], config: &RunConfig) -> Result<TimingReport, RunError> {
    config.validate()?;
    if config.iters == 0 {
        return Err(RunError::Config("timing needs at least one iteration".into()));
    }
    let window = config.iters.min(5);
    let instances = branch_counts
        .iter()
        .map(|&j| build_hydro_instance(&with_branch_count(hydro, j, config.seed)?))
        .collect::<Result<Vec<_>, ModelError>>()?;
    let times: Vec<Result<_, SolveError>> = if config.parallel {
        std::thread::scope(|scope| {
            let arms: Vec<_> = instances.iter().map(|i| scope.spawn(|| time_arm(i, config, window))).collect();
            arms.into_iter().map(|h| h.join().expect("timing arm panicked")).collect()
        })
    } else {
        instances.iter().map(|i| time_arm(i, config, window)).collect()
    };
    let mut rows = Vec::with_capacity(times.len());
    for (&branches, t) in branch_counts.iter().zip(times) {
        let (primal_ms, dual_ms, lower_bound, upper_bound) = t?;
        log::info!("J = {branches}: primal {primal_ms:.3} ms, dual {dual_ms:.3} ms per iteration");
        rows.push(TimingRow {
            branches,
            primal_ms,
            dual_ms,
            ratio: dual_ms / primal_ms,
            lower_bound,
            upper_bound,
        });
    }
    Ok(TimingReport {
        iters: config.iters,
        window,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{desk_hydro_config, tiny_defer};

    #[test]
    fn checkpoint_schedule() {
        assert_eq!(checkpoints(0), Vec::<usize>::new());
        assert_eq!(checkpoints(5), vec![1, 5]);
        assert_eq!(checkpoints(100), vec![1, 10, 20, 50, 100]);
        assert_eq!(checkpoints(120), vec![1, 10, 20, 50, 100, 120]);
    }

    #[test]
    fn duplicate_factor_gives_identical_columns() {
        let cfg = RunConfig {
            iters: 20,
            factors: vec![1.0, 1.0],
            ..RunConfig::default()
        };
        let study = run_lipschitz_study(&tiny_defer(0.5, 0.0), &cfg).unwrap();
        assert_eq!(study.gaps[0], study.gaps[1]);
        assert_eq!(study.final_spread(), 0.0);
    }

    #[test]
    fn parallel_arms_match_sequential() {
        let mut cfg = RunConfig {
            iters: 10,
            ..RunConfig::default()
        };
        let inst = tiny_defer(0.5, 0.5);
        let a = run_lipschitz_study(&inst, &cfg).unwrap();
        cfg.parallel = true;
        assert_eq!(a, run_lipschitz_study(&inst, &cfg).unwrap());
    }

    #[test]
    fn explicit_inflows_become_sampled() {
        let cfg = with_branch_count(&desk_hydro_config(), 7, 3).unwrap();
        let scen = cfg.inflow_scenarios().unwrap();
        assert!(scen.iter().all(|s| s.len() == 7));
        match cfg.inflows {
            InflowSpec::Sampled { mean, spread, .. } => {
                assert_eq!(mean[0], vec![40.0, 25.0]);
                // stage 3, south: mean 15, low scenario 5
                assert!((spread - 2.0 / 3.0).abs() < 1e-12);
            }
            _ => panic!("expected sampled inflows"),
        }
    }

    #[test]
    fn single_branch_count_has_no_trend() {
        let cfg = RunConfig {
            iters: 2,
            ..RunConfig::default()
        };
        let rep = timing_report(&desk_hydro_config(), &[2], &cfg).unwrap();
        assert_eq!(rep.rows.len(), 1);
        assert_eq!(rep.ratio_nondecreasing(), None);
    }
}
