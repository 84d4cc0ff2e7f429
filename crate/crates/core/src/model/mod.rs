//! Stagewise-independent risk-averse multistage linear programs.
//!
//! Stage `s` (0-based) receives the state `x_{s}` of dimension
//! `incoming_dim(s)` and, in realization `j`, chooses an outgoing state and
//! controls subject to
//!
//! ```text
//! A_j x_out + B_j x_in + T_j y = d_j,   0 <= x_out <= xbar,   0 <= y <= ybar
//! ```
//!
//! paying `c_j^T y`. The risk measure of a stage aggregates the realization
//! costs of that stage. `lipschitz` on stage `s` bounds the dual price of the
//! state entering stage `s` (componentwise, per unit of probability mass).

mod hydro;
mod json;
pub mod random;
mod reference;
mod tree;

pub use hydro::{
    build_hydro_instance, desk_hydro_config, hydro_fixed_cost, HydroConfig, InflowSpec, Line, Reservoir, RiskParams,
    Subsystem, ThermalUnit, CURTAILMENT_FRACTIONS,
};
pub use json::{
    hydro_config_to_json, instance_from_json, instance_to_json, parse_hydro_config_file, parse_instance_file,
    InstanceFileError,
};
pub use reference::{desk_hydro_2, tiny_defer};
pub use tree::{enumerate_tree, TreeNode, DEFAULT_NODE_BUDGET};

use crate::risk::RiskEnvelope;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("scenario tree with branching {branching} has {nodes} nodes, above the budget of {budget}")]
    BudgetExceeded { branching: String, nodes: u128, budget: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Sparse matrix stored as `(row, col, value)` triplets with 0-based indices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SparseMatrix(pub Vec<(usize, usize, f64)>);

impl SparseMatrix {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        if value != 0.0 {
            self.0.push((row, col, value));
        }
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.0
    }

    /// `out += M x`
    pub fn mul_add(&self, x: &[f64], out: &mut [f64]) {
        for &(r, c, v) in &self.0 {
            out[r] += v * x[c];
        }
    }

    /// `out += M^T y`
    pub fn tmul_add(&self, y: &[f64], out: &mut [f64]) {
        for &(r, c, v) in &self.0 {
            out[c] += v * y[r];
        }
    }

    fn max_row(&self) -> Option<usize> {
        self.0.iter().map(|e| e.0).max()
    }

    fn max_col(&self) -> Option<usize> {
        self.0.iter().map(|e| e.1).max()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRealization {
    pub p: f64,
    #[serde(rename = "A")]
    pub a: SparseMatrix,
    #[serde(rename = "B")]
    pub b: SparseMatrix,
    #[serde(rename = "T")]
    pub t: SparseMatrix,
    pub d: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RiskSpec {
    MeanAvar { alpha: f64, beta: f64 },
    Polyhedral { vertices: Vec<Vec<f64>> },
}

impl RiskSpec {
    pub fn expectation() -> Self {
        RiskSpec::MeanAvar { alpha: 1.0, beta: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub xbar: Vec<f64>,
    pub ybar: Vec<f64>,
    pub lipschitz: f64,
    pub risk: RiskSpec,
    pub realizations: Vec<StageRealization>,
    /// Lower bound on the cost-to-go from the state entering this stage.
    /// Required when some cost is negative; zero otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_to_go_lower_bound: Option<f64>,
}

impl Stage {
    pub fn nx(&self) -> usize {
        self.xbar.len()
    }

    pub fn ny(&self) -> usize {
        self.ybar.len()
    }

    pub fn num_rows(&self) -> usize {
        self.realizations.first().map_or(0, |r| r.d.len())
    }

    pub fn branches(&self) -> usize {
        self.realizations.len()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.realizations.iter().map(|r| r.p).collect()
    }

    pub fn envelope(&self) -> RiskEnvelope {
        match &self.risk {
            RiskSpec::MeanAvar { alpha, beta } => RiskEnvelope::MeanAvar {
                p: self.probabilities(),
                alpha: *alpha,
                beta: *beta,
            },
            RiskSpec::Polyhedral { vertices } => RiskEnvelope::Vertices(vertices.clone()),
        }
    }

    pub fn max_abs_cost(&self) -> f64 {
        self.realizations
            .iter()
            .flat_map(|r| r.c.iter())
            .fold(0.0f64, |acc, c| acc.max(c.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub horizon: usize,
    pub x0: Vec<f64>,
    pub stages: Vec<Stage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl Instance {
    /// Dimension of the state entering stage `s`.
    pub fn incoming_dim(&self, s: usize) -> usize {
        if s == 0 {
            self.x0.len()
        } else {
            self.stages[s - 1].nx()
        }
    }

    /// Upper bound of the state entering stage `s`; `None` for the initial state.
    pub fn incoming_xbar(&self, s: usize) -> Option<&[f64]> {
        if s == 0 {
            None
        } else {
            Some(&self.stages[s - 1].xbar)
        }
    }

    /// Lower bound on the cost-to-go from the state entering stage `s`
    /// (`s == horizon` is the terminal zero function).
    pub fn cost_to_go_lower_bound(&self, s: usize) -> f64 {
        if s >= self.stages.len() {
            0.0
        } else {
            self.stages[s].cost_to_go_lower_bound.unwrap_or(0.0)
        }
    }

    pub fn branching(&self) -> Vec<usize> {
        self.stages.iter().map(Stage::branches).collect()
    }

    pub fn lipschitz(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.lipschitz).collect()
    }

    pub fn with_lipschitz(mut self, values: &[f64]) -> Self {
        for (s, &l) in self.stages.iter_mut().zip(values) {
            s.lipschitz = l;
        }
        self
    }

    pub fn scale_lipschitz(&self, factor: f64) -> Self {
        let mut inst = self.clone();
        for s in &mut inst.stages {
            s.lipschitz *= factor;
        }
        inst
    }

    /// Replaces the risk measure of every stage.
    pub fn with_risk(mut self, risk: RiskSpec) -> Self {
        for s in &mut self.stages {
            s.risk = risk.clone();
        }
        self
    }

    /// Largest absolute cost coefficient across the instance; used to scale tolerances.
    pub fn cost_scale(&self) -> f64 {
        self.stages.iter().fold(1.0f64, |acc, s| acc.max(s.max_abs_cost()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub location: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }

    fn push(&mut self, location: String, message: String) {
        self.issues.push(Issue { location, message });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

const PROB_TOL: f64 = 1e-9;

/// Lists every violated invariant. Stage numbers in messages are 1-based.
pub fn validate_instance(inst: &Instance) -> ValidationReport {
    let mut rep = ValidationReport::default();
    if inst.stages.is_empty() {
        rep.push("/stages".into(), "instance has no stages".into());
    }
    if inst.horizon != inst.stages.len() {
        rep.push(
            "/horizon".into(),
            format!("horizon {} does not match the {} stages given", inst.horizon, inst.stages.len()),
        );
    }
    for (i, &x) in inst.x0.iter().enumerate() {
        if !(x.is_finite() && x >= 0.0) {
            rep.push(format!("/x0/{i}"), format!("initial state component {x} must be finite and nonnegative"));
        }
    }
    let has_negative_cost = inst
        .stages
        .iter()
        .any(|s| s.realizations.iter().any(|r| r.c.iter().any(|&c| c < 0.0)));

    for (s, stage) in inst.stages.iter().enumerate() {
        let loc = format!("/stages/{s}");
        let label = s + 1;
        let nx = stage.nx();
        let ny = stage.ny();
        let n_in = inst.incoming_dim(s);

        for (i, &v) in stage.xbar.iter().enumerate() {
            if !(v.is_finite() && v >= 0.0) {
                rep.push(format!("{loc}/xbar/{i}"), format!("state bound {v} must be finite and nonnegative"));
            }
        }
        for (i, &v) in stage.ybar.iter().enumerate() {
            if !(v.is_finite() && v >= 0.0) {
                rep.push(format!("{loc}/ybar/{i}"), format!("control bound {v} must be finite and nonnegative"));
            }
        }
        if !(stage.lipschitz.is_finite() && stage.lipschitz >= 0.0) {
            rep.push(format!("{loc}/lipschitz"), format!("Lipschitz constant {} must be finite and nonnegative", stage.lipschitz));
        }
        if has_negative_cost && s > 0 && stage.cost_to_go_lower_bound.is_none() {
            rep.push(
                format!("{loc}/cost_to_go_lower_bound"),
                format!("negative costs present: stage {label} needs an explicit cost-to-go lower bound"),
            );
        }

        let j_count = stage.realizations.len();
        if j_count == 0 {
            rep.push(format!("{loc}/realizations"), format!("stage {label} has no realizations"));
            continue;
        }
        let m = stage.num_rows();
        let mut psum = 0.0;
        for (j, r) in stage.realizations.iter().enumerate() {
            let rloc = format!("{loc}/realizations/{j}");
            psum += r.p;
            if !(r.p >= 0.0 && r.p <= 1.0) {
                rep.push(format!("{rloc}/p"), format!("probability {} outside [0, 1] at stage {label}", r.p));
            }
            if r.d.len() != m {
                rep.push(format!("{rloc}/d"), format!("stage {label} realizations disagree on row count ({} vs {m})", r.d.len()));
            }
            if r.c.len() != ny {
                rep.push(format!("{rloc}/c"), format!("cost vector has length {} but stage {label} has {ny} controls", r.c.len()));
            }
            if r.d.iter().chain(r.c.iter()).any(|v| !v.is_finite()) {
                rep.push(rloc.clone(), "non-finite entry in d or c".into());
            }
            for (name, mat, cols) in [("A", &r.a, nx), ("B", &r.b, n_in), ("T", &r.t, ny)] {
                if let Some(row) = mat.max_row() {
                    if row >= r.d.len() {
                        rep.push(format!("{rloc}/{name}"), format!("row index {row} out of range for {} rows", r.d.len()));
                    }
                }
                if let Some(col) = mat.max_col() {
                    if col >= cols {
                        rep.push(
                            format!("{rloc}/{name}"),
                            format!("column index {col} out of range: {name} has {cols} columns at stage {label}"),
                        );
                    }
                }
                if mat.entries().iter().any(|e| !e.2.is_finite()) {
                    rep.push(format!("{rloc}/{name}"), "non-finite coefficient".into());
                }
            }
        }
        if (psum - 1.0).abs() > PROB_TOL {
            rep.push(format!("{loc}/realizations"), format!("probabilities sum to {psum} at stage {label}"));
        }

        match &stage.risk {
            RiskSpec::MeanAvar { alpha, beta } => {
                if !(*alpha > 0.0 && *alpha <= 1.0) {
                    rep.push(format!("{loc}/risk/alpha"), format!("alpha {alpha} outside (0, 1]"));
                }
                if !(*beta >= 0.0 && *beta <= 1.0) {
                    rep.push(format!("{loc}/risk/beta"), format!("beta {beta} outside [0, 1]"));
                }
            }
            RiskSpec::Polyhedral { vertices } => {
                if vertices.is_empty() {
                    rep.push(format!("{loc}/risk/vertices"), "polyhedral risk measure needs at least one vertex".into());
                }
                for (k, q) in vertices.iter().enumerate() {
                    let vloc = format!("{loc}/risk/vertices/{k}");
                    if q.len() != j_count {
                        rep.push(vloc, format!("vertex has length {} but stage {label} has {j_count} realizations", q.len()));
                        continue;
                    }
                    let sum: f64 = q.iter().sum();
                    if q.iter().any(|&v| v < -PROB_TOL) || (sum - 1.0).abs() > PROB_TOL {
                        rep.push(vloc, format!("vertex is not a probability vector (sum {sum})"));
                    }
                }
            }
        }
    }
    rep
}

/// Per-stage Lipschitz suggestion for the dual price of the state entering
/// each stage.
///
/// For the state entering stage `s` (0-based) of `T`, the estimate is the
/// largest absolute cost coefficient over the stages that produce or consume
/// it (stages `s - 1` onward) times the number of remaining stages `T - s`.
/// This is a heuristic; callers may override it.
pub fn estimate_lipschitz(inst: &Instance) -> Vec<f64> {
    let horizon = inst.stages.len();
    (0..horizon)
        .map(|s| {
            let first = s.saturating_sub(1);
            let max_cost = inst.stages[first..]
                .iter()
                .fold(0.0f64, |acc, st| acc.max(st.max_abs_cost()));
            max_cost * (horizon - s) as f64
        })
        .collect()
}
