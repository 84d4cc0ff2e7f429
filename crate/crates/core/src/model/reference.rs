use super::{
    build_hydro_instance, desk_hydro_config, estimate_lipschitz, Instance, RiskSpec, SparseMatrix, Stage,
    StageRealization,
};

fn scalar(v: f64) -> SparseMatrix {
    let mut m = SparseMatrix::new();
    m.push(0, 0, v);
    m
}

/// Two-stage scalar instance: buy now at price 2, or later at price 1 once
/// demand (1 or 3, equally likely) is known. Stock carries over.
///
/// Optimal values: 2 for the expectation, 3 for AV@R at level 1/2, and
/// `2 + (1 - beta)` for the mean-AV@R mix at `alpha = 1/2`.
pub fn tiny_defer(alpha: f64, beta: f64) -> Instance {
    let risk = RiskSpec::MeanAvar { alpha, beta };
    let first = Stage {
        xbar: vec![10.0],
        ybar: vec![10.0],
        lipschitz: 0.0,
        risk: risk.clone(),
        realizations: vec![StageRealization {
            p: 1.0,
            a: scalar(1.0),
            b: SparseMatrix::new(),
            t: scalar(-1.0),
            d: vec![0.0],
            c: vec![2.0],
        }],
        cost_to_go_lower_bound: None,
    };
    let second = Stage {
        xbar: vec![10.0],
        ybar: vec![10.0],
        lipschitz: 0.0,
        risk,
        realizations: [-1.0, -3.0]
            .into_iter()
            .map(|d| StageRealization {
                p: 0.5,
                a: scalar(1.0),
                b: scalar(-1.0),
                t: scalar(-1.0),
                d: vec![d],
                c: vec![1.0],
            })
            .collect(),
        cost_to_go_lower_bound: None,
    };
    let inst = Instance {
        horizon: 2,
        x0: vec![0.0],
        stages: vec![first, second],
        name: Some("tiny-defer".into()),
        description: None,
    };
    let l = estimate_lipschitz(&inst);
    inst.with_lipschitz(&l)
}

/// Two-reservoir hydrothermal instance with four stages and three inflow
/// scenarios per stage (121 tree nodes).
pub fn desk_hydro_2() -> Instance {
    build_hydro_instance(&desk_hydro_config()).expect("built-in configuration is consistent")
}
