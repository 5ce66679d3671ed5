use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};

use super::PlannerError;
use crate::gain::{GainContext, NodeGain};
use crate::geometry::{normalize_angle, Aabb, Pose, Vec3};
use crate::mapping::{MapPair, VoxelState};

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    /// Tree size including the root.
    pub max_nodes: usize,
    pub extension_radius: f64,
    pub rewire_radius: f64,
    /// Uniform yaw candidates tried at every node.
    pub yaw_samples: usize,
    pub robot_radius: f64,
    pub rng_seed: u64,
    /// Sampling attempts per requested node before giving up.
    pub attempts_per_node: usize,
    /// Score yaw candidates on the rayon pool.
    pub parallel: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            max_nodes: 30,
            extension_radius: 1.0,
            rewire_radius: 1.5,
            yaw_samples: 8,
            robot_radius: 0.25,
            rng_seed: 0,
            attempts_per_node: 40,
            parallel: false,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_nodes == 0 || self.yaw_samples == 0 || self.attempts_per_node == 0 {
            return Err("max_nodes, yaw_samples and attempts_per_node must be positive".into());
        }
        let radii = [self.extension_radius, self.rewire_radius, self.robot_radius];
        if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err("planner radii must be positive and finite".into());
        }
        if self.rewire_radius < self.extension_radius {
            return Err("rewire_radius must be at least extension_radius".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewNode {
    pub pose: Pose,
    pub parent: Option<usize>,
    pub edge_length: f64,
    pub cumulative_length: f64,
    pub children: Vec<usize>,
    /// Raw gain of the node's view, filled in by [`ViewTree::orient`].
    pub gain: NodeGain,
}

/// RRT* tree of candidate views. Node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewTree {
    nodes: Vec<ViewNode>,
}

/// A root-to-leaf path. `nodes` starts at the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub id: usize,
    pub nodes: Vec<usize>,
}

impl ViewTree {
    pub fn root_only(root: Pose) -> Self {
        ViewTree {
            nodes: vec![ViewNode {
                pose: root,
                parent: None,
                edge_length: 0.0,
                cumulative_length: 0.0,
                children: Vec::new(),
                gain: NodeGain::default(),
            }],
        }
    }

    pub fn nodes(&self) -> &[ViewNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> &ViewNode {
        &self.nodes[0]
    }

    fn add(&mut self, position: Vec3, parent: usize, edge: f64) -> usize {
        let id = self.nodes.len();
        let yaw = self.nodes[parent].pose.yaw();
        self.nodes.push(ViewNode {
            pose: Pose::new(position, yaw),
            parent: Some(parent),
            edge_length: edge,
            cumulative_length: self.nodes[parent].cumulative_length + edge,
            children: Vec::new(),
            gain: NodeGain::default(),
        });
        self.nodes[parent].children.push(id);
        id
    }

    /// Appends a node under `parent`, e.g. to script a tree by hand.
    pub fn push_node(&mut self, pose: Pose, parent: usize) -> usize {
        let edge = (pose.position - self.nodes[parent].pose.position).norm();
        let id = self.add(pose.position, parent, edge);
        self.nodes[id].pose = pose;
        id
    }

    /// Overrides the cached raw gain of a node.
    pub fn set_gain(&mut self, node: usize, gain: NodeGain) {
        self.nodes[node].gain = gain;
    }

    fn reparent(&mut self, node: usize, parent: usize, edge: f64) {
        if let Some(old) = self.nodes[node].parent {
            self.nodes[old].children.retain(|c| *c != node);
        }
        self.nodes[parent].children.push(node);
        self.nodes[parent].children.sort_unstable();
        self.nodes[node].parent = Some(parent);
        self.nodes[node].edge_length = edge;
        let mut stack = vec![node];
        while let Some(n) = stack.pop() {
            let p = self.nodes[n].parent.expect("non-root");
            self.nodes[n].cumulative_length = self.nodes[p].cumulative_length + self.nodes[n].edge_length;
            stack.extend(self.nodes[n].children.iter().copied());
        }
    }

    /// Root-to-leaf branches in ascending leaf order; a root-only tree has
    /// the single branch `[0]`.
    pub fn branches(&self) -> Vec<Branch> {
        let mut out = Vec::new();
        for (leaf, n) in self.nodes.iter().enumerate() {
            if !n.children.is_empty() {
                continue;
            }
            let mut path = vec![leaf];
            let mut cur = leaf;
            while let Some(p) = self.nodes[cur].parent {
                path.push(p);
                cur = p;
            }
            path.reverse();
            out.push(Branch { id: out.len(), nodes: path });
        }
        out
    }

    /// Assigns every non-root node the yaw candidate whose view scores
    /// highest under `score`, and caches that view's raw gain. Earlier
    /// candidates win ties.
    pub fn orient<F>(&mut self, yaw_samples: usize, parallel: bool, evaluate: F, score: impl Fn(&NodeGain) -> f64)
    where
        F: Fn(&Pose) -> NodeGain + Sync,
    {
        let candidates: Vec<(usize, usize)> = (1..self.nodes.len())
            .flat_map(|n| (0..yaw_samples).map(move |m| (n, m)))
            .collect();
        let yaw_of = |m: usize| normalize_angle(-std::f64::consts::PI + (m as f64 + 0.5) * std::f64::consts::TAU / yaw_samples as f64);
        let pose_of = |(n, m): (usize, usize)| Pose::new(self.nodes[n].pose.position, yaw_of(m));
        let gains: Vec<NodeGain> = if parallel {
            candidates.par_iter().map(|c| evaluate(&pose_of(*c))).collect()
        } else {
            candidates.iter().map(|c| evaluate(&pose_of(*c))).collect()
        };
        for n in 1..self.nodes.len() {
            let base = (n - 1) * yaw_samples;
            let mut best = 0;
            for m in 1..yaw_samples {
                if score(&gains[base + m]) > score(&gains[base + best]) {
                    best = m;
                }
            }
            self.nodes[n].pose.set_yaw(yaw_of(best));
            self.nodes[n].gain = gains[base + best];
        }
    }

    /// Orients the tree for the given gain context and its mode flag.
    pub fn orient_for(&mut self, ctx: &GainContext<'_>, config: &PlannerConfig) {
        let k = ctx.params().k_mode;
        self.orient(config.yaw_samples, config.parallel, |p| ctx.node_gain(p), |g| g.mode_value(k));
    }
}

/// Region uniformly sampled for new nodes: the bounding box of blocks that
/// hold a FREE voxel, inflated by the extension radius and kept at least
/// the robot radius inside the map bounds.
pub fn sampling_region(maps: &MapPair, config: &PlannerConfig) -> Option<Aabb> {
    let layer = maps.occupancy();
    let vs = maps.voxel_size();
    let mut blocks = FxHashSet::default();
    for (v, o) in layer.iter() {
        if o.state == VoxelState::Free {
            blocks.insert(layer.split(v).0);
        }
    }
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for b in blocks {
        let (a, z) = layer.block_voxel_range(b);
        lo = lo.inf(&a.center(vs).add_scalar(-0.5 * vs));
        hi = hi.sup(&z.center(vs).add_scalar(0.5 * vs));
    }
    if lo.x > hi.x {
        return None;
    }
    lo = lo.add_scalar(-config.extension_radius);
    hi = hi.add_scalar(config.extension_radius);
    if let Some(b) = maps.bounds() {
        lo = lo.sup(&b.min.add_scalar(config.robot_radius));
        hi = hi.inf(&b.max.add_scalar(-config.robot_radius));
    }
    (lo.x < hi.x && lo.y < hi.y && lo.z < hi.z).then(|| Aabb::new(lo, hi))
}

struct FreeCache<'a> {
    maps: &'a MapPair,
    radius: f64,
    known: FxHashMap<(usize, usize), bool>,
}

impl FreeCache<'_> {
    fn check(&mut self, tree: &ViewTree, a: usize, b: usize) -> bool {
        let key = (a.min(b), a.max(b));
        if let Some(r) = self.known.get(&key) {
            return *r;
        }
        let r = self.maps.is_path_free(
            &tree.nodes[a].pose.position,
            &tree.nodes[b].pose.position,
            self.radius,
        );
        self.known.insert(key, r);
        r
    }
}

/// Grows an RRT* tree of view positions in observed free space. Node yaws
/// are copied from their parent; call [`ViewTree::orient`] to choose them.
pub fn grow_tree(maps: &MapPair, root: Pose, config: &PlannerConfig) -> Result<ViewTree, PlannerError> {
    let r = config.robot_radius;
    if !maps.is_path_free(&root.position, &root.position, r) {
        return Err(PlannerError::NoFreeSpace(root.position));
    }
    let mut tree = ViewTree::root_only(root);
    let Some(region) = sampling_region(maps, config) else {
        return Ok(tree);
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut free = FreeCache { maps, radius: r, known: FxHashMap::default() };
    let budget = config.max_nodes.saturating_mul(config.attempts_per_node);
    let mut attempts = 0;
    while tree.len() < config.max_nodes && attempts < budget {
        attempts += 1;
        let sample = Vec3::new(
            rng.gen_range(region.min.x..region.max.x),
            rng.gen_range(region.min.y..region.max.y),
            rng.gen_range(region.min.z..region.max.z),
        );
        let (nearest, dist) = tree
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (i, (n.pose.position - sample).norm()))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        if dist < 1e-9 {
            continue;
        }
        let from = tree.nodes[nearest].pose.position;
        let step = dist.min(config.extension_radius);
        let position = from + (sample - from) * (step / dist);
        if maps.state_at(&position) != VoxelState::Free
            || !maps.is_path_free(&from, &position, r)
        {
            continue;
        }
        // choose the cheapest collision-free parent in the rewiring radius
        let near: Vec<usize> = (0..tree.len())
            .filter(|i| (tree.nodes[*i].pose.position - position).norm() <= config.rewire_radius)
            .collect();
        let mut parent = nearest;
        let mut cost = tree.nodes[nearest].cumulative_length + step;
        for &n in &near {
            let d = (tree.nodes[n].pose.position - position).norm();
            let c = tree.nodes[n].cumulative_length + d;
            if c < cost && n != nearest && maps.is_path_free(&tree.nodes[n].pose.position, &position, r) {
                parent = n;
                cost = c;
            }
        }
        let edge = (tree.nodes[parent].pose.position - position).norm();
        let new = tree.add(position, parent, edge);
        free.known.insert((parent.min(new), parent.max(new)), true);
        for &n in &near {
            if n == parent {
                continue;
            }
            let d = (tree.nodes[n].pose.position - position).norm();
            if tree.nodes[new].cumulative_length + d < tree.nodes[n].cumulative_length
                && free.check(&tree, n, new)
            {
                tree.reparent(n, new, d);
            }
        }
    }
    relax(&mut tree, &mut free, config.rewire_radius);
    Ok(tree)
}

/// Repeats rewiring sweeps until no node can shorten its path through any
/// collision-free neighbour in the rewiring radius.
fn relax(tree: &mut ViewTree, free: &mut FreeCache<'_>, radius: f64) {
    loop {
        let mut changed = false;
        for n in 1..tree.len() {
            for m in 0..tree.len() {
                if m == n || tree.nodes[n].parent == Some(m) {
                    continue;
                }
                let d = (tree.nodes[n].pose.position - tree.nodes[m].pose.position).norm();
                if d <= radius
                    && tree.nodes[m].cumulative_length + d < tree.nodes[n].cumulative_length - 1e-12
                    && free.check(tree, n, m)
                {
                    tree.reparent(n, m, d);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
}
