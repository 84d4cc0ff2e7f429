//! Batch orchestration: run modes, gap-based stopping and CSV artifacts.

mod csv;
mod study;

pub use csv::{emit_convergence_csv, format_sig12, write_convergence_csv, CSV_HEADER};
pub use study::{run_lipschitz_study, timing_report, with_branch_count, LipschitzStudy, TimingReport, TimingRow};

use crate::dual::{DualApprox, DualConfig, DualSddp, DualStats, DEFAULT_GAMMA_ROUND_TOL};
use crate::error::SolveError;
use crate::lp::DEFAULT_TOL;
use crate::model::{InstanceFileError, Instance, ModelError, DEFAULT_NODE_BUDGET};
use crate::oracle::{philpott_upper_bound, solve_extensive_with_tol, TrialPointSet};
use crate::primal::{CutPools, PrimalSddp};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

/// Environment variable overriding the LP feasibility and optimality tolerance.
pub const LP_TOL_ENV: &str = "RADUAL_LP_TOL";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Instance(#[from] InstanceFileError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl RunError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::Instance(e) => e.code(),
            Self::Solve(_) => "solve",
            Self::Model(_) => "model",
            Self::Io { .. } => "io",
            Self::Config(_) => "config",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Primal,
    Dual,
    Both,
    Extensive,
    LipschitzStudy,
    Philpott,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::Primal,
        Mode::Dual,
        Mode::Both,
        Mode::Extensive,
        Mode::LipschitzStudy,
        Mode::Philpott,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Primal => "primal",
            Mode::Dual => "dual",
            Mode::Both => "both",
            Mode::Extensive => "extensive",
            Mode::LipschitzStudy => "lipschitz-study",
            Mode::Philpott => "philpott",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode {s:?}; expected one of primal, dual, both, extensive, lipschitz-study, philpott"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub iters: usize,
    /// Relative gap at which mode `both` stops.
    pub tol: f64,
    pub seed: u64,
    /// Dual sampling smoothing; `None` uses `1e-2 / J`.
    pub epsilon: Option<f64>,
    pub gamma_round_tol: f64,
    pub lp_tol: f64,
    pub factors: Vec<f64>,
    /// Iterations between inner-approximation bounds in mode `philpott`.
    pub philpott_every: usize,
    pub node_budget: usize,
    /// Record wall-clock columns; without them the CSV is byte-reproducible.
    pub timings: bool,
    /// Run study arms on separate threads.
    pub parallel: bool,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Both,
            iters: 200,
            tol: 1e-4,
            seed: 0,
            epsilon: None,
            gamma_round_tol: DEFAULT_GAMMA_ROUND_TOL,
            lp_tol: DEFAULT_TOL,
            factors: vec![1.0, 10.0, 100.0],
            philpott_every: 50,
            node_budget: DEFAULT_NODE_BUDGET,
            timings: true,
            parallel: false,
            out_dir: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: String| Err(RunError::Config(m));
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if let Some(e) = self.epsilon {
            if !(e >= 0.0) {
                return bad(format!("epsilon must be nonnegative, got {e}"));
            }
        }
        if !(self.gamma_round_tol >= 0.0) {
            return bad(format!("gamma rounding tolerance must be nonnegative, got {}", self.gamma_round_tol));
        }
        if !(self.lp_tol > 0.0) {
            return bad(format!("LP tolerance must be positive, got {}", self.lp_tol));
        }
        if let Some(f) = self.factors.iter().find(|f| !(**f >= 1.0)) {
            return bad(format!("Lipschitz factors must be at least 1, got {f}"));
        }
        if self.mode == Mode::LipschitzStudy && self.factors.is_empty() {
            return bad("the Lipschitz study needs at least one factor".into());
        }
        if self.philpott_every == 0 {
            return bad("philpott interval must be positive".into());
        }
        Ok(())
    }

    /// Applies `RADUAL_LP_TOL` when it holds a positive number.
    pub fn with_env_overrides(mut self) -> Result<Self, RunError> {
        if let Ok(raw) = std::env::var(LP_TOL_ENV) {
            match raw.trim().parse::<f64>() {
                Ok(v) if v > 0.0 => self.lp_tol = v,
                _ => return Err(RunError::Config(format!("{LP_TOL_ENV} must be a positive number, got {raw:?}"))),
            }
        }
        Ok(self)
    }

    pub fn dual_config(&self) -> DualConfig {
        DualConfig {
            epsilon: self.epsilon,
            gamma_round_tol: self.gamma_round_tol,
            lp_tol: self.lp_tol,
            ..DualConfig::default()
        }
    }
}

/// One logged iteration. Missing values print as empty CSV fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub iter: usize,
    pub lb: Option<f64>,
    pub ub: Option<f64>,
    pub gap: Option<f64>,
    /// Cumulative wall time.
    pub t_ms: Option<f64>,
    pub primal_ms: Option<f64>,
    pub dual_ms: Option<f64>,
}

impl ConvergenceRecord {
    fn new(iter: usize, lb: Option<f64>, ub: Option<f64>) -> Self {
        let gap = match (lb, ub) {
            (Some(l), Some(u)) => Some(relative_gap(l, u)),
            _ => None,
        };
        Self {
            iter,
            lb,
            ub,
            gap,
            t_ms: None,
            primal_ms: None,
            dual_ms: None,
        }
    }
}

pub fn relative_gap(lb: f64, ub: f64) -> f64 {
    (ub - lb) / lb.abs().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    IterationCapped,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Converged => 0,
            RunStatus::IterationCapped => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub mode: Mode,
    pub status: RunStatus,
    pub records: Vec<ConvergenceRecord>,
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
    /// Optimal value in mode `extensive`.
    pub extensive_value: Option<f64>,
    pub primal_cuts: Option<CutPools>,
    pub dual_cuts: Option<DualApprox>,
    pub dual_stats: Option<DualStats>,
    pub study: Option<LipschitzStudy>,
}

impl RunOutcome {
    fn new(mode: Mode, status: RunStatus) -> Self {
        Self {
            mode,
            status,
            records: Vec::new(),
            lower_bound: None,
            upper_bound: None,
            extensive_value: None,
            primal_cuts: None,
            dual_cuts: None,
            dual_stats: None,
            study: None,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }

    /// Writes `convergence.csv`, `summary.json` and whichever cut files and
    /// study tables the run produced into `dir`.
    pub fn write_artifacts(&self, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| RunError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let mut written = Vec::new();
        let mut put = |name: &str, text: String| -> Result<(), RunError> {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(io(&path))?;
            written.push(path);
            Ok(())
        };
        let mut csv = Vec::new();
        write_convergence_csv(&self.records, &mut csv).expect("writing to memory");
        put("convergence.csv", String::from_utf8(csv).expect("CSV is ASCII"))?;
        if let Some(p) = &self.primal_cuts {
            put("primal_cuts.json", p.to_json())?;
        }
        if let Some(d) = &self.dual_cuts {
            put("dual_cuts.json", d.to_json())?;
        }
        if let Some(s) = &self.study {
            put("lipschitz_study.csv", s.to_csv())?;
        }
        put("summary.json", self.summary_json())?;
        Ok(written)
    }

    pub fn summary_json(&self) -> String {
        let stats = self.dual_stats.as_ref().map(|s| {
            serde_json::json!({
                "stage_solves": s.stage_solves,
                "sanity_warnings": s.sanity_warnings,
                "max_sanity_residual": s.max_sanity_residual,
                "max_mass_residual": s.max_mass_residual,
            })
        });
        let value = serde_json::json!({
            "mode": self.mode.as_str(),
            "status": match self.status {
                RunStatus::Converged => "converged",
                RunStatus::IterationCapped => "iteration-capped",
            },
            "iterations": self.records.last().map(|r| r.iter),
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "gap": self.records.last().and_then(|r| r.gap),
            "extensive_value": self.extensive_value,
            "dual_stats": stats,
        });
        let mut text = serde_json::to_string_pretty(&value).expect("summary serializes");
        text.push('\n');
        text
    }
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Runs one mode on `inst`. Errors from any module surface as `RunError`.
pub fn run_command(config: &RunConfig, inst: &Instance) -> Result<RunOutcome, RunError> {
    config.validate()?;
    match config.mode {
        Mode::Primal => run_primal_mode(config, inst),
        Mode::Dual => run_dual_mode(config, inst),
        Mode::Both => run_both(config, inst),
        Mode::Extensive => {
            let sol = solve_extensive_with_tol(inst, config.node_budget, config.lp_tol)?;
            log::info!("extensive value {}", sol.value);
            let mut out = RunOutcome::new(Mode::Extensive, RunStatus::Converged);
            out.extensive_value = Some(sol.value);
            out.lower_bound = Some(sol.value);
            out.upper_bound = Some(sol.value);
            Ok(out)
        }
        Mode::LipschitzStudy => {
            let study = run_lipschitz_study(inst, config)?;
            let mut out = RunOutcome::new(Mode::LipschitzStudy, RunStatus::IterationCapped);
            out.lower_bound = study.lower_bounds.last().copied();
            out.study = Some(study);
            Ok(out)
        }
        Mode::Philpott => run_philpott(config, inst),
    }
}

fn run_primal_mode(config: &RunConfig, inst: &Instance) -> Result<RunOutcome, RunError> {
    let start = Instant::now();
    let mut primal = PrimalSddp::with_tolerance(inst, config.seed, config.lp_tol)?;
    let mut records = vec![ConvergenceRecord::new(0, Some(primal.lower_bound()), None)];
    for k in 1..=config.iters {
        let t = Instant::now();
        let lb = primal.iterate()?;
        let mut rec = ConvergenceRecord::new(k, Some(lb), None);
        if config.timings {
            rec.primal_ms = Some(ms(t));
            rec.t_ms = Some(ms(start));
        }
        log::info!("iter {k} lb {lb}");
        records.push(rec);
    }
    let mut out = RunOutcome::new(Mode::Primal, RunStatus::IterationCapped);
    out.lower_bound = Some(primal.lower_bound());
    out.records = records;
    out.primal_cuts = Some(primal.pools().clone());
    Ok(out)
}

fn run_dual_mode(config: &RunConfig, inst: &Instance) -> Result<RunOutcome, RunError> {
    let start = Instant::now();
    let mut dual = DualSddp::new(inst, config.seed, config.dual_config())?;
    let mut records = vec![ConvergenceRecord::new(0, None, Some(dual.upper_bound()))];
    for k in 1..=config.iters {
        let t = Instant::now();
        let ub = dual.iterate()?;
        let mut rec = ConvergenceRecord::new(k, None, Some(ub));
        if config.timings {
            rec.dual_ms = Some(ms(t));
            rec.t_ms = Some(ms(start));
        }
        log::info!("iter {k} ub {ub}");
        records.push(rec);
    }
    let mut out = RunOutcome::new(Mode::Dual, RunStatus::IterationCapped);
    out.upper_bound = Some(dual.upper_bound());
    out.records = records;
    out.dual_cuts = Some(dual.approx().clone());
    out.dual_stats = Some(dual.stats().clone());
    Ok(out)
}

fn run_both(config: &RunConfig, inst: &Instance) -> Result<RunOutcome, RunError> {
    let start = Instant::now();
    let mut primal = PrimalSddp::with_tolerance(inst, config.seed, config.lp_tol)?;
    let mut dual = DualSddp::new(inst, config.seed, config.dual_config())?;
    let first = ConvergenceRecord::new(0, Some(primal.lower_bound()), Some(dual.upper_bound()));
    let mut status = if first.gap.is_some_and(|g| g <= config.tol) {
        RunStatus::Converged
    } else {
        RunStatus::IterationCapped
    };
    let mut records = vec![first];
    let mut k = 0;
    while status != RunStatus::Converged && k < config.iters {
        k += 1;
        let t = Instant::now();
        let lb = primal.iterate()?;
        let primal_ms = ms(t);
        let t = Instant::now();
        let ub = dual.iterate()?;
        let dual_ms = ms(t);
        let mut rec = ConvergenceRecord::new(k, Some(lb), Some(ub));
        if config.timings {
            rec.primal_ms = Some(primal_ms);
            rec.dual_ms = Some(dual_ms);
            rec.t_ms = Some(ms(start));
        }
        log::info!(
            "iter {k} lb {lb} ub {ub} gap {:.3e} primal {primal_ms:.2} ms dual {dual_ms:.2} ms",
            rec.gap.unwrap_or(f64::NAN)
        );
        if rec.gap.is_some_and(|g| g <= config.tol) {
            status = RunStatus::Converged;
        }
        records.push(rec);
    }
    let mut out = RunOutcome::new(Mode::Both, status);
    out.lower_bound = Some(primal.lower_bound());
    out.upper_bound = Some(dual.upper_bound());
    out.records = records;
    out.primal_cuts = Some(primal.pools().clone());
    out.dual_cuts = Some(dual.approx().clone());
    out.dual_stats = Some(dual.stats().clone());
    Ok(out)
}

/// Primal SDDP with a deterministic inner-approximation upper bound built
/// from the visited states every `philpott_every` iterations and at the end.
fn run_philpott(config: &RunConfig, inst: &Instance) -> Result<RunOutcome, RunError> {
    let start = Instant::now();
    let mut primal = PrimalSddp::with_tolerance(inst, config.seed, config.lp_tol)?;
    let mut records = vec![ConvergenceRecord::new(0, Some(primal.lower_bound()), None)];
    let mut status = RunStatus::IterationCapped;
    let mut ub = None;
    for k in 1..=config.iters {
        let t = Instant::now();
        let lb = primal.iterate()?;
        let primal_ms = ms(t);
        let mut dual_ms = None;
        if k % config.philpott_every == 0 || k == config.iters {
            let t = Instant::now();
            let trials = TrialPointSet::from_trajectories(inst.stages.len(), primal.trajectories());
            let bound = philpott_upper_bound(inst, &trials, config.lp_tol)?;
            dual_ms = Some(ms(t));
            ub = Some(ub.map_or(bound.root, |u: f64| u.min(bound.root)));
        }
        let mut rec = ConvergenceRecord::new(k, Some(lb), dual_ms.and(ub));
        if config.timings {
            rec.primal_ms = Some(primal_ms);
            rec.dual_ms = dual_ms;
            rec.t_ms = Some(ms(start));
        }
        log::info!("iter {k} lb {lb} ub {:?}", rec.ub);
        let done = rec.gap.is_some_and(|g| g <= config.tol);
        records.push(rec);
        if done {
            status = RunStatus::Converged;
            break;
        }
    }
    let mut out = RunOutcome::new(Mode::Philpott, status);
    out.lower_bound = Some(primal.lower_bound());
    out.upper_bound = ub;
    out.records = records;
    out.primal_cuts = Some(primal.pools().clone());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tiny_defer;

    fn config(mode: Mode, iters: usize) -> RunConfig {
        RunConfig {
            mode,
            iters,
            timings: false,
            ..RunConfig::default()
        }
    }

    #[test]
    fn both_converges_on_tiny_defer() {
        let out = run_command(&config(Mode::Both, 50), &tiny_defer(0.5, 0.0)).unwrap();
        assert_eq!(out.status, RunStatus::Converged);
        let (lb, ub) = (out.lower_bound.unwrap(), out.upper_bound.unwrap());
        assert!(lb <= 3.0 + 1e-9 && ub >= 3.0 - 1e-9 && relative_gap(lb, ub) <= 1e-4);
        assert_eq!(out.records[0].iter, 0);
    }

    #[test]
    fn extensive_mode_reports_value() {
        let out = run_command(&config(Mode::Extensive, 0), &tiny_defer(0.5, 0.0)).unwrap();
        assert!((out.extensive_value.unwrap() - 3.0).abs() < 1e-9);
        assert_eq!(out.exit_code(), 0);
    }

    #[test]
    fn dual_with_no_iterations_is_capped() {
        let out = run_command(&config(Mode::Dual, 0), &tiny_defer(0.5, 0.0)).unwrap();
        assert_eq!(out.status, RunStatus::IterationCapped);
        assert_eq!(out.exit_code(), 2);
        assert_eq!(out.records.len(), 1);
        assert!(out.upper_bound.unwrap() >= 3.0 - 1e-9);
    }

    #[test]
    fn primal_mode_leaves_dual_columns_blank() {
        let out = run_command(&config(Mode::Primal, 3), &tiny_defer(0.5, 0.0)).unwrap();
        assert!(out.records.iter().all(|r| r.ub.is_none() && r.dual_ms.is_none()));
    }

    #[test]
    fn philpott_mode_brackets_value() {
        let mut cfg = config(Mode::Philpott, 20);
        cfg.philpott_every = 5;
        let out = run_command(&cfg, &tiny_defer(0.5, 0.0)).unwrap();
        assert!(out.upper_bound.unwrap() >= 3.0 - 1e-9);
        assert!(out.lower_bound.unwrap() <= 3.0 + 1e-9);
    }

    #[test]
    fn rejects_bad_config() {
        let inst = tiny_defer(0.5, 0.0);
        let mut cfg = config(Mode::Both, 1);
        cfg.tol = 0.0;
        assert!(matches!(run_command(&cfg, &inst), Err(RunError::Config(_))));
        cfg.tol = 1e-4;
        cfg.factors = vec![0.5];
        assert!(matches!(run_command(&cfg, &inst), Err(RunError::Config(_))));
    }

    #[test]
    fn mode_names_round_trip() {
        for m in Mode::ALL {
            assert_eq!(m.as_str().parse::<Mode>().unwrap(), m);
        }
        assert!("bogus".parse::<Mode>().is_err());
    }
}
