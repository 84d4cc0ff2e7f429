//! Hydrothermal scheduling instances.
//!
//! Each subsystem has a demand balance row; each reservoir has a dynamics row
//! `x - x_prev + h + spill = inflow`. Controls per realization, in order:
//! turbined energy per reservoir, thermal generation above its minimum per
//! unit, four curtailment tiers per subsystem, spillage per reservoir, and a
//! forward and backward exchange variable per interconnection.

use super::{estimate_lipschitz, Instance, ModelError, RiskSpec, SparseMatrix, Stage, StageRealization};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Share of the demand each curtailment tier may cover.
pub const CURTAILMENT_FRACTIONS: [f64; 4] = [0.05, 0.05, 0.10, 0.80];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reservoir {
    pub capacity: f64,
    pub max_turbine: f64,
    pub initial: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subsystem {
    pub name: String,
    /// Demand per stage (length = horizon).
    pub demand: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reservoir: Option<Reservoir>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalUnit {
    pub subsystem: usize,
    #[serde(default)]
    pub gmin: f64,
    pub gmax: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    pub capacity: f64,
    pub penalty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InflowSpec {
    /// `scenarios[t][j][r]`: inflow to reservoir `r` in scenario `j` of stage `t`.
    Explicit { scenarios: Vec<Vec<Vec<f64>>> },
    /// `mean[t][r] * (1 + spread * u)` with `u` uniform on [-1, 1], clipped at 0.
    Sampled {
        mean: Vec<Vec<f64>>,
        spread: f64,
        branches: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskParams {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydroConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub horizon: usize,
    pub subsystems: Vec<Subsystem>,
    #[serde(default)]
    pub thermal_units: Vec<ThermalUnit>,
    #[serde(default)]
    pub lines: Vec<Line>,
    pub curtailment_costs: [f64; 4],
    pub spill_penalty: f64,
    pub inflows: InflowSpec,
    pub risk: RiskParams,
    /// Per-stage Lipschitz constants; estimated from the costs when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<Vec<f64>>,
}

impl HydroConfig {
    fn reservoirs(&self) -> Vec<(usize, &Reservoir)> {
        self.subsystems
            .iter()
            .enumerate()
            .filter_map(|(s, sub)| sub.reservoir.as_ref().map(|r| (s, r)))
            .collect()
    }

    /// Inflow scenarios per stage, `[t][j][r]`.
    pub fn inflow_scenarios(&self) -> Result<Vec<Vec<Vec<f64>>>, ModelError> {
        let n_res = self.reservoirs().len();
        let bad = |m: String| Err(ModelError::InvalidConfig(m));
        let scen = match &self.inflows {
            InflowSpec::Explicit { scenarios } => scenarios.clone(),
            InflowSpec::Sampled {
                mean,
                spread,
                branches,
                seed,
            } => {
                if *branches == 0 {
                    return bad("sampled inflows need at least one branch".into());
                }
                if mean.len() != self.horizon {
                    return bad(format!("inflow means given for {} stages, horizon is {}", mean.len(), self.horizon));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                mean.iter()
                    .map(|m| {
                        (0..*branches)
                            .map(|_| {
                                m.iter()
                                    .map(|&mu| (mu * (1.0 + spread * rng.gen_range(-1.0..=1.0))).max(0.0))
                                    .collect()
                            })
                            .collect()
                    })
                    .collect()
            }
        };
        if scen.len() != self.horizon {
            return bad(format!("inflows given for {} stages, horizon is {}", scen.len(), self.horizon));
        }
        for (t, stage) in scen.iter().enumerate() {
            if stage.is_empty() {
                return bad(format!("no inflow scenario at stage {}", t + 1));
            }
            for v in stage {
                if v.len() != n_res {
                    return bad(format!("inflow vector of length {} at stage {}, expected {n_res}", v.len(), t + 1));
                }
                if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return bad(format!("negative or non-finite inflow at stage {}", t + 1));
                }
            }
        }
        Ok(scen)
    }

    fn check(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidConfig(m));
        if self.horizon == 0 {
            return bad("horizon must be positive".into());
        }
        if self.subsystems.is_empty() {
            return bad("at least one subsystem is required".into());
        }
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        for sub in &self.subsystems {
            if sub.demand.len() != self.horizon {
                return bad(format!("subsystem {} has {} demands, horizon is {}", sub.name, sub.demand.len(), self.horizon));
            }
            if !sub.demand.iter().all(|&d| nonneg(d)) {
                return bad(format!("subsystem {} has a negative demand", sub.name));
            }
            if let Some(r) = &sub.reservoir {
                if !(nonneg(r.capacity) && nonneg(r.max_turbine) && nonneg(r.initial)) {
                    return bad(format!("reservoir of {} has a negative capacity or level", sub.name));
                }
                if r.initial > r.capacity {
                    return bad(format!("reservoir of {} starts above capacity", sub.name));
                }
            }
        }
        for (k, u) in self.thermal_units.iter().enumerate() {
            if u.subsystem >= self.subsystems.len() {
                return bad(format!("thermal unit {k} refers to unknown subsystem {}", u.subsystem));
            }
            if !(nonneg(u.gmin) && nonneg(u.gmax) && u.gmin <= u.gmax && u.cost.is_finite()) {
                return bad(format!("thermal unit {k} needs 0 <= gmin <= gmax"));
            }
        }
        for (k, l) in self.lines.iter().enumerate() {
            let n = self.subsystems.len();
            if l.from >= n || l.to >= n || l.from == l.to {
                return bad(format!("interconnection {k} must join two distinct known subsystems"));
            }
            if !(nonneg(l.capacity) && l.penalty.is_finite()) {
                return bad(format!("interconnection {k} has a negative capacity"));
            }
        }
        if !self.curtailment_costs.iter().all(|c| c.is_finite()) || !self.spill_penalty.is_finite() {
            return bad("costs must be finite".into());
        }
        if let Some(l) = &self.lipschitz {
            if l.len() != self.horizon || !l.iter().all(|&v| nonneg(v)) {
                return bad("lipschitz must list one nonnegative value per stage".into());
            }
        }
        Ok(())
    }
}

/// Cost of the thermal minimum generation, which the instance omits because
/// it is the same constant in every stage and scenario.
pub fn hydro_fixed_cost(config: &HydroConfig) -> f64 {
    let per_stage: f64 = config.thermal_units.iter().map(|u| u.gmin * u.cost).sum();
    per_stage * config.horizon as f64
}

pub fn build_hydro_instance(config: &HydroConfig) -> Result<Instance, ModelError> {
    config.check()?;
    let inflows = config.inflow_scenarios()?;
    let reservoirs = config.reservoirs();
    let n_sub = config.subsystems.len();
    let n_res = reservoirs.len();
    let n_th = config.thermal_units.len();
    let n_lines = config.lines.len();

    // control column offsets
    let col_turb = 0;
    let col_th = col_turb + n_res;
    let col_cur = col_th + n_th;
    let col_spill = col_cur + 4 * n_sub;
    let col_ex = col_spill + n_res;
    let ny = col_ex + 2 * n_lines;
    let row_dyn = n_sub;

    let xbar: Vec<f64> = reservoirs.iter().map(|(_, r)| r.capacity).collect();
    let mut stages = Vec::with_capacity(config.horizon);
    for t in 0..config.horizon {
        let scen = &inflows[t];
        let p = 1.0 / scen.len() as f64;

        let mut ybar = vec![0.0; ny];
        let mut cost = vec![0.0; ny];
        let mut a = SparseMatrix::new();
        let mut b = SparseMatrix::new();
        let mut tm = SparseMatrix::new();
        let mut d_base = vec![0.0; n_sub + n_res];

        for (s, sub) in config.subsystems.iter().enumerate() {
            d_base[s] = sub.demand[t];
            for k in 0..4 {
                let col = col_cur + 4 * s + k;
                ybar[col] = CURTAILMENT_FRACTIONS[k] * sub.demand[t];
                cost[col] = config.curtailment_costs[k];
                tm.push(s, col, 1.0);
            }
        }
        for (r, (s, res)) in reservoirs.iter().enumerate() {
            let max_inflow = scen.iter().fold(0.0f64, |m, v| m.max(v[r]));
            ybar[col_turb + r] = res.max_turbine;
            ybar[col_spill + r] = res.capacity + max_inflow;
            cost[col_spill + r] = config.spill_penalty;
            tm.push(*s, col_turb + r, 1.0);
            tm.push(row_dyn + r, col_turb + r, 1.0);
            tm.push(row_dyn + r, col_spill + r, 1.0);
            a.push(row_dyn + r, r, 1.0);
            b.push(row_dyn + r, r, -1.0);
        }
        for (k, u) in config.thermal_units.iter().enumerate() {
            ybar[col_th + k] = u.gmax - u.gmin;
            cost[col_th + k] = u.cost;
            tm.push(u.subsystem, col_th + k, 1.0);
            d_base[u.subsystem] -= u.gmin;
        }
        for (k, l) in config.lines.iter().enumerate() {
            let fwd = col_ex + 2 * k;
            let bwd = fwd + 1;
            for col in [fwd, bwd] {
                ybar[col] = l.capacity;
                cost[col] = l.penalty;
            }
            tm.push(l.to, fwd, 1.0);
            tm.push(l.from, fwd, -1.0);
            tm.push(l.from, bwd, 1.0);
            tm.push(l.to, bwd, -1.0);
        }

        let realizations = scen
            .iter()
            .map(|inflow| {
                let mut d = d_base.clone();
                d[row_dyn..].copy_from_slice(inflow);
                StageRealization {
                    p,
                    a: a.clone(),
                    b: b.clone(),
                    t: tm.clone(),
                    d,
                    c: cost.clone(),
                }
            })
            .collect();
        stages.push(Stage {
            xbar: xbar.clone(),
            ybar,
            lipschitz: 0.0,
            risk: RiskSpec::MeanAvar {
                alpha: config.risk.alpha,
                beta: config.risk.beta,
            },
            realizations,
            cost_to_go_lower_bound: None,
        });
    }

    let has_negative = stages.iter().any(|s| s.realizations.iter().any(|r| r.c.iter().any(|&c| c < 0.0)));
    if has_negative {
        return Err(ModelError::InvalidConfig("costs and penalties must be nonnegative".into()));
    }

    let fixed = hydro_fixed_cost(config);
    let inst = Instance {
        horizon: config.horizon,
        x0: reservoirs.iter().map(|(_, r)| r.initial).collect(),
        stages,
        name: config.name.clone(),
        description: (fixed != 0.0).then(|| format!("thermal minimum generation adds a constant cost of {fixed}")),
    };
    let l = match &config.lipschitz {
        Some(l) => l.clone(),
        None => estimate_lipschitz(&inst),
    };
    Ok(inst.with_lipschitz(&l))
}

/// Configuration of the `desk-hydro-2` reference system: two subsystems with
/// one reservoir each, three thermal units, one interconnection, four stages
/// and three inflow scenarios per stage.
pub fn desk_hydro_config() -> HydroConfig {
    HydroConfig {
        name: Some("desk-hydro-2".into()),
        horizon: 4,
        subsystems: vec![
            Subsystem {
                name: "north".into(),
                demand: vec![80.0, 85.0, 90.0, 85.0],
                reservoir: Some(Reservoir {
                    capacity: 200.0,
                    max_turbine: 60.0,
                    initial: 100.0,
                }),
            },
            Subsystem {
                name: "south".into(),
                demand: vec![50.0, 55.0, 50.0, 45.0],
                reservoir: Some(Reservoir {
                    capacity: 120.0,
                    max_turbine: 40.0,
                    initial: 60.0,
                }),
            },
        ],
        thermal_units: vec![
            ThermalUnit {
                subsystem: 0,
                gmin: 0.0,
                gmax: 30.0,
                cost: 50.0,
            },
            ThermalUnit {
                subsystem: 0,
                gmin: 0.0,
                gmax: 20.0,
                cost: 120.0,
            },
            ThermalUnit {
                subsystem: 1,
                gmin: 0.0,
                gmax: 25.0,
                cost: 80.0,
            },
        ],
        lines: vec![Line {
            from: 0,
            to: 1,
            capacity: 30.0,
            penalty: 1.0,
        }],
        curtailment_costs: [400.0, 800.0, 1500.0, 3000.0],
        spill_penalty: 0.1,
        inflows: InflowSpec::Explicit {
            scenarios: vec![
                vec![vec![20.0, 10.0], vec![40.0, 25.0], vec![60.0, 40.0]],
                vec![vec![15.0, 8.0], vec![35.0, 20.0], vec![55.0, 32.0]],
                vec![vec![10.0, 5.0], vec![30.0, 15.0], vec![50.0, 25.0]],
                vec![vec![25.0, 12.0], vec![45.0, 30.0], vec![65.0, 48.0]],
            ],
        },
        risk: RiskParams { alpha: 0.3, beta: 0.5 },
        lipschitz: None,
    }
}
