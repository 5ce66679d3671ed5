use std::f64::consts::FRAC_PI_2;

use super::tree::{grow_tree, Branch, PlannerConfig, ViewTree};
use super::{round_seed, PlannerError};
use crate::gain::{BranchGain, GainContext, GainParams, TargetList};
use crate::geometry::{CameraModel, Pose};
use crate::mapping::MapPair;

/// Mode machine state: search (K = 1) or acquisition (K = 0) of the
/// current target, plus the termination counter.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerState {
    mode_k: bool,
    target_index: usize,
    dominance_count: u32,
    c_thre: u32,
    dominance_ratio: f64,
    finished: bool,
    roster: Vec<String>,
    targets: TargetList,
    round: u64,
}

/// What the list update asks of the current round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ListOutcome {
    /// The list is empty; keep the current mode.
    Empty,
    /// The list grew: acquisition mode was entered.
    Grew,
    /// The list is unchanged and nonempty; the best branch must be tested
    /// for dominance.
    Unchanged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fallback {
    /// Every branch scored zero; the longest branch was followed.
    LongestBranch,
    /// No node could be added; the sensor turns in place.
    TurnInPlace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchRecord {
    pub branch_id: usize,
    pub n_nodes: usize,
    pub gain: BranchGain,
    pub mode_k: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundReport {
    pub round: u64,
    pub mode_k: bool,
    pub target_index: usize,
    pub n_tree_nodes: usize,
    pub best: BranchGain,
    pub dominance_count: u32,
    pub waypoint: Pose,
    pub targets_added: usize,
    pub switched: bool,
    pub fallback: Option<Fallback>,
    pub branches: Vec<BranchRecord>,
}

impl PlannerState {
    /// Starts in search mode for the first roster entry. A roster of zero
    /// targets is finished from the outset.
    pub fn new(roster: Vec<String>, c_thre: u32, dominance_ratio: f64) -> Self {
        PlannerState {
            mode_k: true,
            target_index: 1,
            dominance_count: 0,
            c_thre: c_thre.max(1),
            dominance_ratio,
            finished: roster.is_empty(),
            roster,
            targets: TargetList::new(),
            round: 0,
        }
    }

    pub fn mode_k(&self) -> bool {
        self.mode_k
    }
    pub fn target_index(&self) -> usize {
        self.target_index
    }
    pub fn dominance_count(&self) -> u32 {
        self.dominance_count
    }
    pub fn c_thre(&self) -> u32 {
        self.c_thre
    }
    pub fn dominance_ratio(&self) -> f64 {
        self.dominance_ratio
    }
    pub fn finished(&self) -> bool {
        self.finished
    }
    pub fn roster(&self) -> &[String] {
        &self.roster
    }
    pub fn targets(&self) -> &TargetList {
        &self.targets
    }
    pub fn round(&self) -> u64 {
        self.round
    }

    /// Category currently searched for or acquired, if any remain.
    pub fn target_category(&self) -> Option<&str> {
        self.roster.get(self.target_index - 1).map(String::as_str)
    }

    /// Gain parameters for the current mode and target.
    pub fn gain_params(&self, base: &GainParams) -> GainParams {
        GainParams {
            k_mode: self.mode_k,
            target_category: self.target_category().unwrap_or_default().to_string(),
            ..base.clone()
        }
    }

    /// Applies the list-size rule after `added` voxels joined the list.
    pub fn on_list_update(&mut self, added: usize) -> ListOutcome {
        if self.targets.is_empty() {
            ListOutcome::Empty
        } else if added > 0 {
            self.mode_k = false;
            self.dominance_count = 0;
            ListOutcome::Grew
        } else {
            ListOutcome::Unchanged
        }
    }

    /// Applies the termination rule to the selected branch. Returns true
    /// when the current target is finished and the roster advanced.
    pub fn on_best_branch(&mut self, best: &BranchGain) -> bool {
        let own = best.s_unknown + best.s_refine;
        if own + best.s_surround <= 0.0 {
            return false;
        }
        if best.s_surround > self.dominance_ratio * own {
            self.dominance_count += 1;
        } else {
            self.dominance_count = 0;
        }
        if self.dominance_count < self.c_thre {
            return false;
        }
        self.mode_k = true;
        self.dominance_count = 0;
        self.targets.clear();
        self.target_index += 1;
        if self.target_index > self.roster.len() {
            self.finished = true;
        }
        true
    }

    /// Scans the map's labelled updates into the target list and applies
    /// the list-size rule.
    pub fn update_targets(&mut self, maps: &MapPair, base: &GainParams) -> (usize, ListOutcome) {
        let params = self.gain_params(base);
        let added = if self.target_category().is_some() {
            self.targets.update(maps, &params)
        } else {
            0
        };
        (added, self.on_list_update(added))
    }
}

/// Scores every root-to-leaf branch from the node gains cached in the tree.
pub fn score_branches(tree: &ViewTree, params: &GainParams) -> Vec<(Branch, BranchGain)> {
    tree.branches()
        .into_iter()
        .map(|b| {
            let nodes = &tree.nodes();
            let gain = BranchGain::from_nodes(
                b.nodes[1..].iter().map(|n| (&nodes[*n].gain, nodes[*n].cumulative_length)),
                params,
            );
            (b, gain)
        })
        .collect()
}

/// Index into `scored` of the best branch: highest combined gain, then
/// shorter total length, then lower branch id.
pub fn best_index(tree: &ViewTree, scored: &[(Branch, BranchGain)]) -> usize {
    let length = |b: &Branch| tree.nodes()[*b.nodes.last().expect("nonempty")].cumulative_length;
    let mut best = 0;
    for (i, (b, g)) in scored.iter().enumerate().skip(1) {
        let (bb, bg) = &scored[best];
        let better = g.combined > bg.combined
            || (g.combined == bg.combined && length(b) < length(bb));
        if better {
            best = i;
        }
    }
    best
}

pub fn select_best_branch(tree: &ViewTree, params: &GainParams) -> (Branch, BranchGain) {
    let scored = score_branches(tree, params);
    let i = best_index(tree, &scored);
    scored[i].clone()
}

/// Waypoint of the receding-horizon step: the first node of the best
/// branch, or a fallback when nothing scores.
pub(crate) fn choose_waypoint(
    tree: &ViewTree,
    scored: &[(Branch, BranchGain)],
    best: usize,
    current: &Pose,
) -> (Pose, Option<Fallback>) {
    if tree.len() == 1 {
        let mut p = *current;
        p.set_yaw(current.yaw() + FRAC_PI_2);
        return (p, Some(Fallback::TurnInPlace));
    }
    if scored[best].1.combined > 0.0 {
        return (tree.nodes()[scored[best].0.nodes[1]].pose, None);
    }
    let length = |b: &Branch| tree.nodes()[*b.nodes.last().expect("nonempty")].cumulative_length;
    let mut longest = 0;
    for (i, (b, _)) in scored.iter().enumerate() {
        if length(b) > length(&scored[longest].0) {
            longest = i;
        }
    }
    (tree.nodes()[scored[longest].0.nodes[1]].pose, Some(Fallback::LongestBranch))
}

fn records(scored: &[(Branch, BranchGain)], mode_k: bool) -> Vec<BranchRecord> {
    scored
        .iter()
        .map(|(b, g)| BranchRecord {
            branch_id: b.id,
            n_nodes: b.nodes.len(),
            gain: *g,
            mode_k,
        })
        .collect()
}

/// Shared inputs of one planning round.
pub struct PlanInputs<'a> {
    pub maps: &'a MapPair,
    pub camera: &'a CameraModel,
    pub ray_step: usize,
    pub base: &'a GainParams,
    pub config: &'a PlannerConfig,
}

/// One round of the adaptive strategy: maintain the target list, apply
/// the mode rules, grow and score a fresh tree and return the first node
/// of the best branch as the next waypoint.
pub fn step(
    state: &mut PlannerState,
    inputs: &PlanInputs<'_>,
    current: &Pose,
) -> Result<(Pose, RoundReport), PlannerError> {
    if state.finished {
        return Err(PlannerError::Finished);
    }
    state.round += 1;
    let (added, outcome) = state.update_targets(inputs.maps, inputs.base);

    let config = PlannerConfig {
        rng_seed: round_seed(inputs.config.rng_seed, state.round),
        ..inputs.config.clone()
    };
    let mut tree = grow_tree(inputs.maps, *current, &config)?;

    let params = state.gain_params(inputs.base);
    let ctx = GainContext::new(inputs.maps, inputs.camera, inputs.ray_step, &state.targets, &params);
    tree.orient_for(&ctx, &config);
    let mut scored = score_branches(&tree, &params);
    let mut best = best_index(&tree, &scored);
    drop(ctx);

    let mut switched = false;
    if outcome == ListOutcome::Unchanged {
        let gain = scored[best].1;
        switched = state.on_best_branch(&gain);
        if switched {
            let params = state.gain_params(inputs.base);
            let ctx = GainContext::new(inputs.maps, inputs.camera, inputs.ray_step, &state.targets, &params);
            tree.orient_for(&ctx, &config);
            scored = score_branches(&tree, &params);
            best = best_index(&tree, &scored);
        }
    }

    let (waypoint, fallback) = choose_waypoint(&tree, &scored, best, current);
    let report = RoundReport {
        round: state.round,
        mode_k: state.mode_k,
        target_index: state.target_index,
        n_tree_nodes: tree.len(),
        best: scored[best].1,
        dominance_count: state.dominance_count,
        waypoint,
        targets_added: added,
        switched,
        fallback,
        branches: records(&scored, state.mode_k),
    };
    Ok((waypoint, report))
}
