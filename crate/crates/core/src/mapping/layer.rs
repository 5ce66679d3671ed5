use rustc_hash::FxHashMap;

use crate::geometry::{Vec3, VoxelIndex};

/// Index of a block of `block_side^3` voxels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockIndex(pub i32, pub i32, pub i32);

/// Sparse voxel storage: dense blocks allocated on first write and found
/// through a spatial hash. Reads of absent blocks return `None` and never
/// allocate.
#[derive(Debug, Clone)]
pub struct BlockHashMap<T> {
    voxel_size: f64,
    block_side: u32,
    shift: u32,
    slots: FxHashMap<BlockIndex, usize>,
    blocks: Vec<Box<[T]>>,
}

impl<T: Default + Clone> BlockHashMap<T> {
    /// `block_side` must be a power of two.
    pub fn new(voxel_size: f64, block_side: u32) -> Self {
        assert!(block_side.is_power_of_two(), "block side must be a power of two");
        assert!(voxel_size > 0.0, "voxel size must be positive");
        BlockHashMap {
            voxel_size,
            block_side,
            shift: block_side.trailing_zeros(),
            slots: FxHashMap::default(),
            blocks: Vec::new(),
        }
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn block_side(&self) -> u32 {
        self.block_side
    }

    pub fn block_count(&self) -> usize {
        self.slots.len()
    }

    #[inline]
    pub fn split(&self, v: VoxelIndex) -> (BlockIndex, usize) {
        let s = self.shift;
        let m = (self.block_side - 1) as i32;
        let b = BlockIndex(v.i >> s, v.j >> s, v.k >> s);
        let side = self.block_side as usize;
        let local = ((v.k & m) as usize * side + (v.j & m) as usize) * side + (v.i & m) as usize;
        (b, local)
    }

    fn join(&self, b: BlockIndex, local: usize) -> VoxelIndex {
        let side = self.block_side as usize;
        let s = self.shift;
        let i = (local % side) as i32;
        let j = ((local / side) % side) as i32;
        let k = (local / (side * side)) as i32;
        VoxelIndex::new((b.0 << s) + i, (b.1 << s) + j, (b.2 << s) + k)
    }

    #[inline]
    pub fn get(&self, v: VoxelIndex) -> Option<&T> {
        let (b, local) = self.split(v);
        self.slots.get(&b).map(|s| &self.blocks[*s][local])
    }

    /// Storage slot of block `b`, if allocated. Slots are stable for the
    /// lifetime of the map, so callers walking nearby voxels can cache them.
    #[inline]
    pub fn find_slot(&self, b: BlockIndex) -> Option<usize> {
        self.slots.get(&b).copied()
    }

    /// Storage slot of block `b`, allocating the block if needed.
    #[inline]
    pub fn slot_or_insert(&mut self, b: BlockIndex) -> usize {
        let n = (self.block_side as usize).pow(3);
        let blocks = &mut self.blocks;
        *self.slots.entry(b).or_insert_with(|| {
            blocks.push(vec![T::default(); n].into_boxed_slice());
            blocks.len() - 1
        })
    }

    #[inline]
    pub fn slot(&self, slot: usize) -> &[T] {
        &self.blocks[slot]
    }

    #[inline]
    pub fn slot_mut(&mut self, slot: usize) -> &mut [T] {
        &mut self.blocks[slot]
    }

    pub fn get_at(&self, p: &Vec3) -> Option<&T> {
        self.get(VoxelIndex::from_point(p, self.voxel_size))
    }

    #[inline]
    pub fn get_or_insert(&mut self, v: VoxelIndex) -> &mut T {
        let (b, local) = self.split(v);
        let slot = self.slot_or_insert(b);
        &mut self.blocks[slot][local]
    }

    pub fn get_mut(&mut self, v: VoxelIndex) -> Option<&mut T> {
        let (b, local) = self.split(v);
        let slot = *self.slots.get(&b)?;
        Some(&mut self.blocks[slot][local])
    }

    /// Allocated blocks, sorted by index.
    pub fn block_indices(&self) -> Vec<BlockIndex> {
        let mut keys: Vec<BlockIndex> = self.slots.keys().copied().collect();
        keys.sort_unstable();
        keys
    }

    /// Every voxel of every allocated block, in sorted block order.
    pub fn iter(&self) -> impl Iterator<Item = (VoxelIndex, &T)> + '_ {
        self.block_indices().into_iter().flat_map(move |b| {
            self.blocks[self.slots[&b]]
                .iter()
                .enumerate()
                .map(move |(local, t)| (self.join(b, local), t))
        })
    }

    /// Voxel index range `[lo, hi]` covering block `b`.
    pub fn block_voxel_range(&self, b: BlockIndex) -> (VoxelIndex, VoxelIndex) {
        let lo = self.join(b, 0);
        let m = self.block_side as i32 - 1;
        (lo, lo.offset(m, m, m))
    }
}
