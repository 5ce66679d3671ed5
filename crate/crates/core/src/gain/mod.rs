//! View utilities: visibility gain, the three-part semantic gain and the
//! unified, distance-penalized branch utility.

mod targets;
mod visibility;

pub use targets::{DistanceField, TargetList, BRUTE_FORCE_LIMIT};
pub use visibility::{for_each_visible, visible_voxels};

use crate::geometry::{CameraModel, Pose, VoxelIndex};
use crate::mapping::{CategoryId, LabelledVoxel, MapPair, OccupancyVoxel, VoxelState};

#[derive(Debug, Clone, PartialEq)]
pub struct GainParams {
    /// Discount rate for unknown voxels around the target, 1/m.
    pub lambda1: f64,
    /// Discount rate for labelled surroundings, 1/m.
    pub lambda2: f64,
    /// Priority of voxels already labelled with the target category.
    pub eta_tgt: f64,
    /// Expected number of rays per target voxel.
    pub n_exp: f64,
    pub lambda_o: f64,
    pub lambda_l: f64,
    /// Minimum label confidence for joining the target list.
    pub conf_min: f64,
    /// true: search (visibility) mode, false: acquisition (semantic) mode.
    pub k_mode: bool,
    pub target_category: String,
}

impl Default for GainParams {
    fn default() -> Self {
        GainParams {
            lambda1: 0.5,
            lambda2: 0.5,
            eta_tgt: 2.0,
            n_exp: 10.0,
            lambda_o: 1.0,
            lambda_l: 1.0,
            conf_min: 0.5,
            k_mode: true,
            target_category: String::new(),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GainError {
    #[error("branch has no nodes")]
    EmptyBranch,
    #[error("edge {0} has non-positive length")]
    NonPositiveEdge(usize),
}

pub fn v_gain(maps: &MapPair, voxel: VoxelIndex) -> f64 {
    if maps.state_of(voxel) == VoxelState::Unknown {
        1.0
    } else {
        0.0
    }
}

/// Refinement utility of an observed target voxel: peaks when the voxel has
/// been hit by the expected number of rays and decays with its TSDF weight.
pub fn refine_factor(n_rays: f64, weight: f64, n_exp: f64) -> f64 {
    let miss = (n_rays - n_exp).abs();
    (1.0 - miss / (1.0 + miss)) * (1.0 - weight / (1.0 + weight))
}

pub fn voxel_refine_factor(voxel: &LabelledVoxel, weight: f64, params: &GainParams) -> f64 {
    refine_factor(voxel.ray_count() as f64, weight, params.n_exp)
}

/// Which case of the semantic gain applies to a voxel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemanticCase {
    /// UNKNOWN voxel; discounted by distance to the target.
    Unknown,
    /// OCCUPIED voxel labelled with the current target category.
    Refine,
    /// OCCUPIED voxel of another non-background category.
    Surround,
    /// Everything else contributes nothing.
    None,
}

pub fn semantic_case(
    state: VoxelState,
    category: Option<CategoryId>,
    target: Option<CategoryId>,
) -> SemanticCase {
    match state {
        VoxelState::Unknown => SemanticCase::Unknown,
        VoxelState::Occupied => match category {
            Some(c) if Some(c) == target => SemanticCase::Refine,
            Some(c) if c != 0 => SemanticCase::Surround,
            _ => SemanticCase::None,
        },
        VoxelState::Free => SemanticCase::None,
    }
}

/// Per-voxel semantic gain. `d_li` is the distance to the nearest target
/// list member, infinite while the list is empty.
pub fn s_gain(maps: &MapPair, voxel: VoxelIndex, targets: &TargetList, params: &GainParams) -> f64 {
    let target = maps.category_id(&params.target_category);
    let occ = maps.occupancy_voxel(voxel);
    let labelled = maps.labelled_voxel(voxel);
    let case = semantic_case(occ.state, labelled.map(|l| l.category()), target);
    let d = || targets.nearest_distance(&voxel, maps.voxel_size());
    match case {
        SemanticCase::Unknown => (-params.lambda1 * d()).exp(),
        SemanticCase::Refine => {
            params.eta_tgt
                * voxel_refine_factor(labelled.expect("labelled"), occ.weight, params)
        }
        SemanticCase::Surround => (-params.lambda2 * d()).exp(),
        SemanticCase::None => 0.0,
    }
}

/// Raw gains of a single view, before distance penalties.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NodeGain {
    pub visibility: f64,
    pub s_unknown: f64,
    pub s_refine: f64,
    pub s_surround: f64,
}

impl NodeGain {
    pub fn semantic(&self) -> f64 {
        self.s_unknown + self.s_refine + self.s_surround
    }

    /// Value used to rank views of a single node under the given mode.
    pub fn mode_value(&self, k_mode: bool) -> f64 {
        if k_mode {
            self.visibility
        } else {
            self.semantic()
        }
    }
}

/// Distance-penalized branch gain. Every part is already divided by the
/// node's path cost, so `combined` follows from the parts and the mode.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BranchGain {
    pub visibility: f64,
    pub s_unknown: f64,
    pub s_refine: f64,
    pub s_surround: f64,
    pub combined: f64,
}

impl BranchGain {
    pub fn semantic(&self) -> f64 {
        self.s_unknown + self.s_refine + self.s_surround
    }

    pub fn combine(visibility: f64, semantic: f64, k_mode: bool) -> f64 {
        if k_mode {
            visibility
        } else {
            semantic
        }
    }

    /// Accumulates non-root nodes given as (raw gain, path length from the
    /// root). The root itself is the current view and carries no gain.
    pub fn from_nodes<'a, I>(nodes: I, params: &GainParams) -> Self
    where
        I: IntoIterator<Item = (&'a NodeGain, f64)>,
    {
        let mut b = BranchGain::default();
        for (g, delta) in nodes {
            let f_o = 1.0 / (params.lambda_o * delta);
            let f_l = 1.0 / (params.lambda_l * delta);
            b.visibility += g.visibility * f_o;
            b.s_unknown += g.s_unknown * f_l;
            b.s_refine += g.s_refine * f_l;
            b.s_surround += g.s_surround * f_l;
        }
        b.combined = Self::combine(b.visibility, b.semantic(), params.k_mode);
        b
    }
}

/// Everything needed to score views against one map snapshot.
pub struct GainContext<'a> {
    maps: &'a MapPair,
    camera: &'a CameraModel,
    ray_step: usize,
    targets: &'a TargetList,
    params: &'a GainParams,
    target: Option<CategoryId>,
    field: Option<DistanceField>,
}

impl<'a> GainContext<'a> {
    pub fn new(
        maps: &'a MapPair,
        camera: &'a CameraModel,
        ray_step: usize,
        targets: &'a TargetList,
        params: &'a GainParams,
    ) -> Self {
        let field = maps.bounds().and_then(|b| {
            let (lo, hi) = b.voxel_range(maps.voxel_size());
            DistanceField::build(targets, lo, hi)
        });
        GainContext {
            maps,
            camera,
            ray_step,
            targets,
            params,
            target: maps.category_id(&params.target_category),
            field,
        }
    }

    pub fn maps(&self) -> &MapPair {
        self.maps
    }
    pub fn camera(&self) -> &CameraModel {
        self.camera
    }
    pub fn params(&self) -> &GainParams {
        self.params
    }
    pub fn targets(&self) -> &TargetList {
        self.targets
    }
    pub fn ray_step(&self) -> usize {
        self.ray_step
    }

    fn target_distance(&self, v: &VoxelIndex) -> f64 {
        if self.targets.is_empty() {
            return f64::INFINITY;
        }
        match self.field.as_ref().and_then(|f| f.squared(v)) {
            Some(d2) => d2.sqrt() * self.maps.voxel_size(),
            None => self.targets.nearest_distance(v, self.maps.voxel_size()),
        }
    }

    fn accumulate(&self, g: &mut NodeGain, v: VoxelIndex, occ: &OccupancyVoxel) {
        let labelled = self.maps.labelled_voxel(v);
        if occ.state == VoxelState::Unknown {
            g.visibility += 1.0;
        }
        let p = self.params;
        match semantic_case(occ.state, labelled.map(|l| l.category()), self.target) {
            SemanticCase::Unknown => {
                if !self.targets.is_empty() {
                    g.s_unknown += (-p.lambda1 * self.target_distance(&v)).exp();
                }
            }
            SemanticCase::Refine => {
                let l = labelled.expect("labelled");
                g.s_refine += p.eta_tgt * voxel_refine_factor(l, occ.weight, p);
            }
            SemanticCase::Surround => {
                if !self.targets.is_empty() {
                    g.s_surround += (-p.lambda2 * self.target_distance(&v)).exp();
                }
            }
            SemanticCase::None => {}
        }
    }

    /// Raw visibility and semantic gains of the view at `pose`.
    pub fn node_gain(&self, pose: &Pose) -> NodeGain {
        let mut g = NodeGain::default();
        for_each_visible(self.maps, pose, self.camera, self.ray_step, |v, occ| {
            self.accumulate(&mut g, v, occ)
        });
        g
    }
}

/// Scores a branch given as (pose, edge length from the previous node)
/// pairs. The first entry is the root; every later edge must be positive.
pub fn branch_gain(
    ctx: &GainContext<'_>,
    branch: &[(Pose, f64)],
) -> Result<BranchGain, GainError> {
    if branch.is_empty() {
        return Err(GainError::EmptyBranch);
    }
    let mut nodes = Vec::with_capacity(branch.len() - 1);
    let mut delta = 0.0;
    for (n, (pose, edge)) in branch.iter().enumerate().skip(1) {
        if !(*edge > 0.0) {
            return Err(GainError::NonPositiveEdge(n));
        }
        delta += edge;
        nodes.push((ctx.node_gain(pose), delta));
    }
    Ok(BranchGain::from_nodes(
        nodes.iter().map(|(g, d)| (g, *d)),
        ctx.params(),
    ))
}

/// Scans new labelled-layer updates into the target list; see
/// [`TargetList::update`].
pub fn update_target_list(maps: &MapPair, targets: &mut TargetList, params: &GainParams) -> usize {
    targets.update(maps, params)
}
