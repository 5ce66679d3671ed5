use super::strategy::{best_index, choose_waypoint, BranchRecord, PlanInputs, RoundReport};
use super::tree::{grow_tree, Branch, PlannerConfig, ViewTree};
use super::{round_seed, PlannerError};
use crate::gain::{BranchGain, GainContext, GainParams, TargetList};
use crate::geometry::Pose;

/// Visibility-only branch score with an exponential distance discount:
/// the sum over non-root nodes of `visibility * exp(-lambda_exp * length)`.
pub fn discounted_visibility(tree: &ViewTree, branch: &Branch, lambda_exp: f64) -> f64 {
    branch.nodes[1..]
        .iter()
        .map(|n| {
            let node = &tree.nodes()[*n];
            node.gain.visibility * (-lambda_exp * node.cumulative_length).exp()
        })
        .sum()
}

/// Receding-horizon NBV baseline: grows the same tree as the semantic
/// planner, orients nodes for visibility and executes the first edge of
/// the branch with the highest discounted visibility.
pub fn baseline_rh_nbv_step(
    inputs: &PlanInputs<'_>,
    current: &Pose,
    lambda_exp: f64,
    round: u64,
) -> Result<(Pose, RoundReport), PlannerError> {
    let config = PlannerConfig {
        rng_seed: round_seed(inputs.config.rng_seed, round),
        ..inputs.config.clone()
    };
    let mut tree = grow_tree(inputs.maps, *current, &config)?;
    let params = GainParams { k_mode: true, target_category: String::new(), ..inputs.base.clone() };
    let targets = TargetList::new();
    let ctx = GainContext::new(inputs.maps, inputs.camera, inputs.ray_step, &targets, &params);
    tree.orient(config.yaw_samples, config.parallel, |p| ctx.node_gain(p), |g| g.visibility);
    let scored: Vec<(Branch, BranchGain)> = tree
        .branches()
        .into_iter()
        .map(|b| {
            let v = discounted_visibility(&tree, &b, lambda_exp);
            let g = BranchGain { visibility: v, combined: v, ..BranchGain::default() };
            (b, g)
        })
        .collect();
    let best = best_index(&tree, &scored);
    let (waypoint, fallback) = choose_waypoint(&tree, &scored, best, current);
    let report = RoundReport {
        round,
        mode_k: true,
        target_index: 1,
        n_tree_nodes: tree.len(),
        best: scored[best].1,
        dominance_count: 0,
        waypoint,
        targets_added: 0,
        switched: false,
        fallback,
        branches: scored
            .iter()
            .map(|(b, g)| BranchRecord { branch_id: b.id, n_nodes: b.nodes.len(), gain: *g, mode_k: true })
            .collect(),
    };
    Ok((waypoint, report))
}
