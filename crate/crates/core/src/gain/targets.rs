use rustc_hash::{FxHashMap, FxHashSet};

use crate::geometry::VoxelIndex;
use crate::mapping::{MapPair, VoxelState};

use super::GainParams;

/// Member count above which nearest-member queries use the grid index.
pub const BRUTE_FORCE_LIMIT: usize = 2000;
const CELL_SHIFT: u32 = 3;

/// Voxels observed with the current target category.
///
/// Members are only ever added; [`TargetList::clear`] empties the list on a
/// target switch and rewinds the scan so voxels of the next category that
/// were seen earlier are picked up on the next update.
#[derive(Debug, Clone, Default)]
pub struct TargetList {
    voxels: Vec<VoxelIndex>,
    members: FxHashSet<VoxelIndex>,
    cursor: usize,
    cells: FxHashMap<(i32, i32, i32), Vec<VoxelIndex>>,
}

impl PartialEq for TargetList {
    fn eq(&self, other: &Self) -> bool {
        self.voxels == other.voxels && self.cursor == other.cursor
    }
}

fn cell_of(v: &VoxelIndex) -> (i32, i32, i32) {
    (v.i >> CELL_SHIFT, v.j >> CELL_SHIFT, v.k >> CELL_SHIFT)
}

impl TargetList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }

    pub fn contains(&self, v: &VoxelIndex) -> bool {
        self.members.contains(v)
    }

    /// Members in insertion order.
    pub fn voxels(&self) -> &[VoxelIndex] {
        &self.voxels
    }

    pub fn clear(&mut self) {
        self.voxels.clear();
        self.members.clear();
        self.cells.clear();
        self.cursor = 0;
    }

    /// Inserts `v` unconditionally. Returns false if already present.
    pub fn insert(&mut self, v: VoxelIndex) -> bool {
        if !self.members.insert(v) {
            return false;
        }
        self.voxels.push(v);
        self.cells.entry(cell_of(&v)).or_default().push(v);
        true
    }

    /// Scans labelled-layer updates since the previous call and adds every
    /// OCCUPIED voxel labelled with the target category at or above the
    /// confidence threshold. Returns the number of voxels added.
    pub fn update(&mut self, maps: &MapPair, params: &GainParams) -> usize {
        let log = maps.label_log();
        let start = self.cursor.min(log.len());
        self.cursor = log.len();
        let Some(target) = maps.category_id(&params.target_category) else {
            return 0;
        };
        let mut added = 0;
        for v in &log[start..] {
            if self.members.contains(v) || maps.state_of(*v) != VoxelState::Occupied {
                continue;
            }
            let Some(l) = maps.labelled_voxel(*v) else {
                continue;
            };
            if l.category() == target && l.confidence() >= params.conf_min && self.insert(*v) {
                added += 1;
            }
        }
        added
    }

    /// Smallest squared member distance in voxel units, `None` when empty.
    pub fn nearest_squared(&self, v: &VoxelIndex) -> Option<i64> {
        if self.voxels.is_empty() {
            return None;
        }
        if self.voxels.len() <= BRUTE_FORCE_LIMIT {
            return self.voxels.iter().map(|m| m.squared_distance(v)).min();
        }
        self.nearest_squared_grid(v)
    }

    /// Ring search over the uniform cell grid. Cells of ring `r` are at
    /// least `(r - 1) * cell_side` voxels away, which bounds the search.
    fn nearest_squared_grid(&self, v: &VoxelIndex) -> Option<i64> {
        let side = 1i64 << CELL_SHIFT;
        let (ci, cj, ck) = cell_of(v);
        let mut best: Option<i64> = None;
        let max_ring = self
            .cells
            .keys()
            .map(|c| (c.0 - ci).abs().max((c.1 - cj).abs()).max((c.2 - ck).abs()))
            .max()
            .unwrap_or(0);
        for r in 0..=max_ring {
            if let Some(b) = best {
                let floor = (r as i64 - 1).max(0) * side;
                if floor * floor > b {
                    break;
                }
            }
            for di in -r..=r {
                for dj in -r..=r {
                    for dk in -r..=r {
                        if di.abs().max(dj.abs()).max(dk.abs()) != r {
                            continue;
                        }
                        if let Some(ms) = self.cells.get(&(ci + di, cj + dj, ck + dk)) {
                            for m in ms {
                                let d = m.squared_distance(v);
                                if best.is_none_or(|b| d < b) {
                                    best = Some(d);
                                }
                            }
                        }
                    }
                }
            }
        }
        best
    }

    /// Distance in metres from the center of `v` to the nearest member
    /// center; infinite when the list is empty.
    pub fn nearest_distance(&self, v: &VoxelIndex, voxel_size: f64) -> f64 {
        self.nearest_squared(v)
            .map_or(f64::INFINITY, |d2| (d2 as f64).sqrt() * voxel_size)
    }
}

/// Exact squared Euclidean distance transform to the list members over a
/// box of voxels, so per-voxel distance lookups during view evaluation are
/// O(1). Values are integers in voxel units and agree bit-for-bit with
/// [`TargetList::nearest_squared`].
#[derive(Debug, Clone)]
pub struct DistanceField {
    lo: VoxelIndex,
    dims: [usize; 3],
    squared: Vec<f64>,
}

const FAR: f64 = 1e18;

impl DistanceField {
    /// Field over the voxel range `[lo, hi]`, grown to contain every member.
    pub fn build(targets: &TargetList, mut lo: VoxelIndex, mut hi: VoxelIndex) -> Option<Self> {
        if targets.is_empty() {
            return None;
        }
        for m in targets.voxels() {
            lo = VoxelIndex::new(lo.i.min(m.i), lo.j.min(m.j), lo.k.min(m.k));
            hi = VoxelIndex::new(hi.i.max(m.i), hi.j.max(m.j), hi.k.max(m.k));
        }
        let dims = [
            (hi.i - lo.i + 1) as usize,
            (hi.j - lo.j + 1) as usize,
            (hi.k - lo.k + 1) as usize,
        ];
        let mut field = DistanceField {
            lo,
            dims,
            squared: vec![FAR; dims[0] * dims[1] * dims[2]],
        };
        for m in targets.voxels() {
            let n = field.offset(m).expect("member inside field");
            field.squared[n] = 0.0;
        }
        field.transform();
        Some(field)
    }

    fn offset(&self, v: &VoxelIndex) -> Option<usize> {
        let i = v.i - self.lo.i;
        let j = v.j - self.lo.j;
        let k = v.k - self.lo.k;
        if i < 0 || j < 0 || k < 0 {
            return None;
        }
        let (i, j, k) = (i as usize, j as usize, k as usize);
        if i >= self.dims[0] || j >= self.dims[1] || k >= self.dims[2] {
            return None;
        }
        Some((k * self.dims[1] + j) * self.dims[0] + i)
    }

    fn transform(&mut self) {
        let [nx, ny, nz] = self.dims;
        let longest = nx.max(ny).max(nz);
        let mut line = vec![0.0; longest];
        let mut out = vec![0.0; longest];
        let mut scratch = Scratch::new(longest);
        let strides = [1, nx, nx * ny];
        for axis in 0..3 {
            let n = self.dims[axis];
            let stride = strides[axis];
            let (a, b) = match axis {
                0 => (ny, nz),
                1 => (nx, nz),
                _ => (nx, ny),
            };
            for p in 0..a {
                for q in 0..b {
                    let base = match axis {
                        0 => (q * ny + p) * nx,
                        1 => q * nx * ny + p,
                        _ => q * nx + p,
                    };
                    for t in 0..n {
                        line[t] = self.squared[base + t * stride];
                    }
                    distance_1d(&line[..n], &mut out[..n], &mut scratch);
                    for t in 0..n {
                        self.squared[base + t * stride] = out[t];
                    }
                }
            }
        }
    }

    /// Squared distance in voxel units, `None` outside the field.
    pub fn squared(&self, v: &VoxelIndex) -> Option<f64> {
        self.offset(v).map(|n| self.squared[n])
    }
}

struct Scratch {
    v: Vec<usize>,
    z: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            v: vec![0; n],
            z: vec![0.0; n + 1],
        }
    }
}

/// Lower envelope of parabolas (Felzenszwalb & Huttenlocher).
fn distance_1d(f: &[f64], d: &mut [f64], s: &mut Scratch) {
    let n = f.len();
    let mut k = 0usize;
    s.v[0] = 0;
    s.z[0] = f64::NEG_INFINITY;
    s.z[1] = f64::INFINITY;
    for q in 1..n {
        let fq = f[q] + (q * q) as f64;
        let mut x;
        loop {
            let p = s.v[k];
            x = (fq - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if x > s.z[k] || k == 0 {
                break;
            }
            k -= 1;
        }
        if x > s.z[k] {
            k += 1;
        }
        s.v[k] = q;
        s.z[k] = if k == 0 { f64::NEG_INFINITY } else { x };
        s.z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, dq) in d.iter_mut().enumerate() {
        while s.z[k + 1] < q as f64 {
            k += 1;
        }
        let p = s.v[k];
        let dx = q as f64 - p as f64;
        *dq = dx * dx + f[p];
    }
}
