use super::{Instance, ModelError};

/// Default cap on the number of nodes an explicit scenario tree may have.
pub const DEFAULT_NODE_BUDGET: usize = 4000;

/// Node of the scenario tree. Depth-`t` nodes carry the state produced by
/// stage `t - 1`; the root (depth 0) carries `x0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub id: usize,
    pub depth: usize,
    pub parent: Option<usize>,
    /// Realization of stage `depth - 1` leading to this node.
    pub realization: Option<usize>,
    pub probability: f64,
    /// Children occupy ids `first_child .. first_child + num_children`.
    pub first_child: usize,
    pub num_children: usize,
}

impl TreeNode {
    pub fn children(&self) -> std::ops::Range<usize> {
        self.first_child..self.first_child + self.num_children
    }
}

/// Enumerates the tree down to depth `t_max` in breadth-first order.
pub fn enumerate_tree(inst: &Instance, t_max: usize, budget: usize) -> Result<Vec<TreeNode>, ModelError> {
    let t_max = t_max.min(inst.stages.len());
    let branching: Vec<usize> = inst.stages[..t_max].iter().map(|s| s.branches()).collect();
    let mut total: u128 = 1;
    let mut level: u128 = 1;
    for &j in &branching {
        level = level.saturating_mul(j as u128);
        total = total.saturating_add(level);
    }
    if total > budget as u128 {
        let branching = branching.iter().map(|j| j.to_string()).collect::<Vec<_>>().join("x");
        return Err(ModelError::BudgetExceeded {
            branching,
            nodes: total,
            budget,
        });
    }

    let mut nodes = vec![TreeNode {
        id: 0,
        depth: 0,
        parent: None,
        realization: None,
        probability: 1.0,
        first_child: 0,
        num_children: 0,
    }];
    let mut frontier = 0..1;
    for (depth, stage) in inst.stages[..t_max].iter().enumerate() {
        let start = nodes.len();
        for parent in frontier.clone() {
            let first = nodes.len();
            for (j, r) in stage.realizations.iter().enumerate() {
                let id = nodes.len();
                let probability = nodes[parent].probability * r.p;
                nodes.push(TreeNode {
                    id,
                    depth: depth + 1,
                    parent: Some(parent),
                    realization: Some(j),
                    probability,
                    first_child: 0,
                    num_children: 0,
                });
            }
            nodes[parent].first_child = first;
            nodes[parent].num_children = stage.realizations.len();
        }
        frontier = start..nodes.len();
    }
    for n in nodes.iter_mut().filter(|n| n.num_children == 0) {
        n.first_child = n.id + 1;
    }
    Ok(nodes)
}
