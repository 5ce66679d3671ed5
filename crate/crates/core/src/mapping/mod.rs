//! Dual-layer voxel map: an occupancy TSDF layer and a labelled layer that
//! share one spatial indexing.

mod integrate;
mod layer;

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

pub use integrate::{integrate, IntegrationSummary, MappingError};
pub use layer::{BlockHashMap, BlockIndex};

use crate::geometry::{Aabb, Vec3, VoxelIndex};
use crate::scene::BACKGROUND;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum VoxelState {
    #[default]
    Unknown,
    Free,
    Occupied,
}

impl fmt::Display for VoxelState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VoxelState::Unknown => "UNKNOWN",
            VoxelState::Free => "FREE",
            VoxelState::Occupied => "OCCUPIED",
        })
    }
}

impl FromStr for VoxelState {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "UNKNOWN" => Ok(VoxelState::Unknown),
            "FREE" => Ok(VoxelState::Free),
            "OCCUPIED" => Ok(VoxelState::Occupied),
            other => Err(format!("unknown voxel state '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OccupancyVoxel {
    pub distance: f64,
    pub weight: f64,
    pub state: VoxelState,
}

/// Interned category name. Id 0 is always `background`.
pub type CategoryId = u16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelVote {
    pub instance: u32,
    pub category: CategoryId,
    pub count: u32,
}

/// Semantic state of a voxel. The reported label is the one observed in the
/// most frames; `label_count` is how many frames agreed with it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelledVoxel {
    instance: u32,
    category: CategoryId,
    label_count: u32,
    observation_count: u32,
    ray_count: u32,
    votes: Vec<LabelVote>,
}

impl LabelledVoxel {
    pub fn instance(&self) -> u32 {
        self.instance
    }
    pub fn category(&self) -> CategoryId {
        self.category
    }
    pub fn label_count(&self) -> u32 {
        self.label_count
    }
    pub fn observation_count(&self) -> u32 {
        self.observation_count
    }
    /// Rays that ended within the truncation band around this voxel.
    pub fn ray_count(&self) -> u32 {
        self.ray_count
    }
    pub fn confidence(&self) -> f64 {
        if self.observation_count == 0 {
            0.0
        } else {
            self.label_count as f64 / self.observation_count as f64
        }
    }

    /// Builds a voxel from explicit counts, raising the observation and ray
    /// counts where needed so that rays >= observations >= labels.
    pub fn with_counts(
        instance: u32,
        category: CategoryId,
        label_count: u32,
        observation_count: u32,
        ray_count: u32,
    ) -> Self {
        let observation_count = observation_count.max(label_count);
        LabelledVoxel {
            instance,
            category,
            label_count,
            observation_count,
            ray_count: ray_count.max(observation_count),
            votes: vec![LabelVote {
                instance,
                category,
                count: label_count,
            }],
        }
    }

    /// Records one frame's observation: `rays` rays ended near this voxel
    /// and their plurality label was `(instance, category)`.
    pub(crate) fn observe(&mut self, instance: u32, category: CategoryId, rays: u32) {
        self.ray_count += rays;
        self.observation_count += 1;
        match self
            .votes
            .iter_mut()
            .find(|v| v.instance == instance && v.category == category)
        {
            Some(v) => v.count += 1,
            None => self.votes.push(LabelVote {
                instance,
                category,
                count: 1,
            }),
        }
        let best = self
            .votes
            .iter()
            .max_by(|a, b| a.count.cmp(&b.count).then(b.instance.cmp(&a.instance)))
            .expect("at least one vote");
        self.instance = best.instance;
        self.category = best.category;
        self.label_count = best.count;
    }
}

/// TSDF constants. Defaults follow common TSDF practice for the voxel size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapParams {
    pub voxel_size: f64,
    pub block_side: u32,
    pub truncation: f64,
    pub weight_cap: f64,
    pub min_weight: f64,
    pub occupied_distance: f64,
}

impl MapParams {
    pub fn new(voxel_size: f64) -> Self {
        MapParams {
            voxel_size,
            block_side: 8,
            truncation: 4.0 * voxel_size,
            weight_cap: 1e4,
            min_weight: 1e-3,
            occupied_distance: voxel_size,
        }
    }

    pub fn classify(&self, distance: f64, weight: f64) -> VoxelState {
        if weight < self.min_weight {
            VoxelState::Unknown
        } else if distance < self.occupied_distance {
            VoxelState::Occupied
        } else {
            VoxelState::Free
        }
    }
}

impl Default for MapParams {
    fn default() -> Self {
        MapParams::new(0.2)
    }
}

/// Occupancy and labelled layers. Mutated only through `&mut self`
/// (integration); planners receive `&MapPair` and cannot write.
#[derive(Debug, Clone)]
pub struct MapPair {
    params: MapParams,
    occupancy: BlockHashMap<OccupancyVoxel>,
    labelled: BlockHashMap<LabelledVoxel>,
    categories: Vec<String>,
    bounds: Option<Aabb>,
    label_log: Vec<VoxelIndex>,
}

impl MapPair {
    pub fn new(params: MapParams) -> Self {
        MapPair {
            params,
            occupancy: BlockHashMap::new(params.voxel_size, params.block_side),
            labelled: BlockHashMap::new(params.voxel_size, params.block_side),
            categories: vec![BACKGROUND.to_string()],
            bounds: None,
            label_log: Vec::new(),
        }
    }

    /// Restricts gain evaluation and tree sampling to `bounds`.
    pub fn with_bounds(mut self, bounds: Aabb) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn params(&self) -> &MapParams {
        &self.params
    }
    pub fn voxel_size(&self) -> f64 {
        self.params.voxel_size
    }
    pub fn bounds(&self) -> Option<&Aabb> {
        self.bounds.as_ref()
    }
    pub fn occupancy(&self) -> &BlockHashMap<OccupancyVoxel> {
        &self.occupancy
    }
    pub fn labelled(&self) -> &BlockHashMap<LabelledVoxel> {
        &self.labelled
    }

    pub fn in_bounds(&self, v: VoxelIndex) -> bool {
        self.bounds
            .as_ref()
            .is_none_or(|b| b.contains(&v.center(self.params.voxel_size)))
    }

    pub fn category_id(&self, name: &str) -> Option<CategoryId> {
        self.categories.iter().position(|c| c == name).map(|p| p as CategoryId)
    }

    pub fn category_name(&self, id: CategoryId) -> &str {
        &self.categories[id as usize]
    }

    pub(crate) fn intern_category(&mut self, name: &str) -> CategoryId {
        match self.category_id(name) {
            Some(id) => id,
            None => {
                self.categories.push(name.to_string());
                (self.categories.len() - 1) as CategoryId
            }
        }
    }

    /// Voxels whose labelled state changed, in update order, for incremental
    /// consumers. Entries may repeat across frames.
    pub fn label_log(&self) -> &[VoxelIndex] {
        &self.label_log
    }

    pub fn occupancy_voxel(&self, v: VoxelIndex) -> OccupancyVoxel {
        self.occupancy.get(v).copied().unwrap_or_default()
    }

    pub fn labelled_voxel(&self, v: VoxelIndex) -> Option<&LabelledVoxel> {
        self.labelled.get(v)
    }

    pub fn state_of(&self, v: VoxelIndex) -> VoxelState {
        self.occupancy.get(v).map_or(VoxelState::Unknown, |o| o.state)
    }

    pub fn state_at(&self, p: &Vec3) -> VoxelState {
        self.state_of(VoxelIndex::from_point(p, self.params.voxel_size))
    }

    /// Directly sets one occupancy voxel. Used by tests, replay and bindings.
    pub fn set_occupancy(&mut self, v: VoxelIndex, distance: f64, weight: f64) {
        let state = self.params.classify(distance, weight);
        *self.occupancy.get_or_insert(v) = OccupancyVoxel {
            distance,
            weight,
            state,
        };
    }

    /// Directly sets one labelled voxel and logs it like an integration would.
    pub fn set_label(&mut self, v: VoxelIndex, category: &str, voxel: LabelledVoxel) {
        let id = self.intern_category(category);
        let mut voxel = voxel;
        voxel.category = id;
        for vote in &mut voxel.votes {
            vote.category = id;
        }
        *self.labelled.get_or_insert(v) = voxel;
        self.label_log.push(v);
    }

    /// Marks UNKNOWN voxels within `radius` of `center` as FREE with the
    /// minimum weight, so a planner can leave a start pose it cannot see
    /// around.
    pub fn clear_unknown_sphere(&mut self, center: &Vec3, radius: f64) -> usize {
        let vs = self.params.voxel_size;
        let r = Vec3::repeat(radius);
        let (lo, hi) = Aabb::new(center - r, center + r).voxel_range(vs);
        let mut cleared = 0;
        for i in lo.i..=hi.i {
            for j in lo.j..=hi.j {
                for k in lo.k..=hi.k {
                    let v = VoxelIndex::new(i, j, k);
                    if (v.center(vs) - center).norm() <= radius
                        && self.state_of(v) == VoxelState::Unknown
                    {
                        self.set_occupancy(v, self.params.truncation, self.params.min_weight);
                        cleared += 1;
                    }
                }
            }
        }
        cleared
    }

    /// True iff every voxel within `robot_radius` of segment `a -> b` is
    /// FREE. A voxel counts when its center lies within `robot_radius` plus
    /// the voxel half-diagonal, which covers any voxel the robot's sphere
    /// could touch.
    pub fn is_path_free(&self, a: &Vec3, b: &Vec3, robot_radius: f64) -> bool {
        let vs = self.params.voxel_size;
        let reach = robot_radius + 0.5 * 3f64.sqrt() * vs;
        let lo = a.inf(b) - Vec3::repeat(reach);
        let hi = a.sup(b) + Vec3::repeat(reach);
        let (lo, hi) = Aabb::new(lo, hi).voxel_range(vs);
        for k in lo.k..=hi.k {
            for j in lo.j..=hi.j {
                for i in lo.i..=hi.i {
                    let v = VoxelIndex::new(i, j, k);
                    if point_segment_distance(&v.center(vs), a, b) <= reach
                        && self.state_of(v) != VoxelState::Free
                    {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Text snapshot, one line per observed voxel sorted by index:
    /// `i j k state distance weight category confidence`.
    pub fn dump(&self) -> String {
        let mut rows: Vec<(VoxelIndex, OccupancyVoxel)> = self
            .occupancy
            .iter()
            .filter(|(_, o)| o.weight > 0.0)
            .map(|(v, o)| (v, *o))
            .collect();
        rows.sort_by_key(|(v, _)| *v);
        let mut out = String::new();
        for (v, o) in rows {
            let (cat, conf) = match self.labelled.get(v) {
                Some(l) => (self.category_name(l.category), l.confidence()),
                None => (BACKGROUND, 0.0),
            };
            let _ = writeln!(
                out,
                "{} {} {} {} {} {} {} {}",
                v.i, v.j, v.k, o.state, o.distance, o.weight, cat, conf
            );
        }
        out
    }
}

/// One parsed line of [`MapPair::dump`].
#[derive(Debug, Clone, PartialEq)]
pub struct DumpRow {
    pub index: VoxelIndex,
    pub state: VoxelState,
    pub distance: f64,
    pub weight: f64,
    pub category: String,
    pub confidence: f64,
}

pub fn parse_dump(text: &str) -> Result<Vec<DumpRow>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() != 8 {
                return Err(format!("line {}: expected 8 fields", n + 1));
            }
            let int = |s: &str| s.parse::<i32>().map_err(|e| format!("line {}: {e}", n + 1));
            let num = |s: &str| s.parse::<f64>().map_err(|e| format!("line {}: {e}", n + 1));
            Ok(DumpRow {
                index: VoxelIndex::new(int(t[0])?, int(t[1])?, int(t[2])?),
                state: t[3].parse().map_err(|e| format!("line {}: {e}", n + 1))?,
                distance: num(t[4])?,
                weight: num(t[5])?,
                category: t[6].to_string(),
                confidence: num(t[7])?,
            })
        })
        .collect()
}

pub fn point_segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p - (a + ab * t)).norm()
}
