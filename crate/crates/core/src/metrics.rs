//! Evaluation with privileged ground truth: perspective directivity and
//! region-of-interest reconstruction.

use std::collections::BTreeMap;

use rustc_hash::FxHashSet;

use crate::geometry::{optical_axis, Pose, Vec3, VoxelIndex};
use crate::mapping::{MapPair, VoxelState};
use crate::scene::{ground_truth_voxels, Scene};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("camera and target positions coincide")]
    DegenerateGeometry,
    #[error("no samples to summarize")]
    EmptyInput,
}

/// Cosine between the optical axis and the line from the camera to the
/// target.
pub fn directivity(pose: &Pose, target: &Vec3) -> Result<f64, MetricsError> {
    let line = target - pose.position;
    let n = line.norm();
    if n < 1e-12 {
        return Err(MetricsError::DegenerateGeometry);
    }
    Ok(optical_axis(pose).dot(&line).clamp(-n, n) / n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsConfig {
    pub target_positions: BTreeMap<String, Vec3>,
    /// Margin around the target voxels that still counts as region of
    /// interest, metres.
    pub roi_dilation: f64,
    /// Period of the time-series samples, seconds.
    pub sample_period: f64,
}

impl MetricsConfig {
    pub fn for_scene(scene: &Scene) -> Self {
        MetricsConfig {
            target_positions: scene.target_positions().iter().cloned().collect(),
            roi_dilation: 1.0,
            sample_period: 1.0,
        }
    }

    /// Position anchoring directivity for the 1-based `target_index`; past
    /// the end of the roster the last target is used.
    pub fn anchor<'a>(&'a self, roster: &[String], target_index: usize) -> Option<&'a Vec3> {
        let i = target_index.clamp(1, roster.len().max(1)) - 1;
        roster.get(i).and_then(|c| self.target_positions.get(c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSample {
    pub sim_time: f64,
    pub directivity: f64,
    pub roi_voxels: usize,
    pub total_voxels: usize,
    pub roi_ratio: f64,
    pub roi_progress: f64,
    pub target_index: usize,
    pub mode_k: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoiCounts {
    pub roi_voxels: usize,
    pub total_voxels: usize,
    pub roi_ratio: f64,
    pub roi_progress: f64,
}

/// Ground-truth region of interest on the map grid: target voxels dilated
/// by the margin, and the exposed target surface used for progress.
#[derive(Debug, Clone)]
pub struct RoiModel {
    roi: FxHashSet<VoxelIndex>,
    surface: Vec<VoxelIndex>,
}

impl RoiModel {
    pub fn new(scene: &Scene, voxel_size: f64, roi_dilation: f64) -> Self {
        let gt = ground_truth_voxels(scene, voxel_size);
        let is_target = |c: &str| scene.targets().iter().any(|t| t == c);
        let targets: Vec<VoxelIndex> = gt
            .iter()
            .filter(|(_, (c, _))| is_target(c))
            .map(|(v, _)| *v)
            .collect();
        let (lo, hi) = scene.bounds().voxel_range(voxel_size);
        let in_bounds = |v: &VoxelIndex| {
            (lo.i..=hi.i).contains(&v.i) && (lo.j..=hi.j).contains(&v.j) && (lo.k..=hi.k).contains(&v.k)
        };
        let surface = targets
            .iter()
            .filter(|v| {
                let n = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)];
                n.iter().any(|(a, b, c)| {
                    let w = v.offset(*a, *b, *c);
                    in_bounds(&w) && !gt.contains_key(&w)
                })
            })
            .copied()
            .collect();
        let r = (roi_dilation / voxel_size).floor() as i32;
        let r2 = roi_dilation * roi_dilation;
        let mut roi = FxHashSet::default();
        for v in &targets {
            for i in -r..=r {
                for j in -r..=r {
                    for k in -r..=r {
                        let d2 = ((i * i + j * j + k * k) as f64) * voxel_size * voxel_size;
                        if d2 <= r2 + 1e-9 {
                            roi.insert(v.offset(i, j, k));
                        }
                    }
                }
            }
        }
        RoiModel { roi, surface }
    }

    pub fn contains(&self, v: &VoxelIndex) -> bool {
        self.roi.contains(v)
    }

    pub fn roi_len(&self) -> usize {
        self.roi.len()
    }

    pub fn surface(&self) -> &[VoxelIndex] {
        &self.surface
    }

    pub fn measure(&self, maps: &MapPair) -> RoiCounts {
        let mut roi_voxels = 0;
        let mut total_voxels = 0;
        for (v, o) in maps.occupancy().iter() {
            if o.state == VoxelState::Occupied {
                total_voxels += 1;
                if self.roi.contains(&v) {
                    roi_voxels += 1;
                }
            }
        }
        let seen = self
            .surface
            .iter()
            .filter(|v| maps.state_of(**v) == VoxelState::Occupied)
            .count();
        RoiCounts {
            roi_voxels,
            total_voxels,
            roi_ratio: roi_voxels as f64 / total_voxels.max(1) as f64,
            roi_progress: if self.surface.is_empty() {
                0.0
            } else {
                seen as f64 / self.surface.len() as f64
            },
        }
    }
}

/// One-off ROI measurement; the region covers every roster target.
pub fn roi_metrics(maps: &MapPair, scene: &Scene, config: &MetricsConfig) -> RoiCounts {
    RoiModel::new(scene, maps.voxel_size(), config.roi_dilation).measure(maps)
}

/// Edges of the directivity histogram; bins are closed on the right and
/// the first bin also holds -1.
pub const HISTOGRAM_EDGES: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub samples: usize,
    pub mean_directivity: f64,
    pub std_directivity: f64,
    pub histogram: [usize; 4],
    pub final_roi_ratio: f64,
    pub final_roi_progress: f64,
}

impl Summary {
    /// Share of samples in the top bin.
    pub fn top_bin_share(&self) -> f64 {
        self.histogram[3] as f64 / self.samples as f64
    }
}

pub fn histogram_bin(d: f64) -> usize {
    HISTOGRAM_EDGES[1..4].iter().filter(|e| d > **e).count()
}

pub fn summarize(samples: &[MetricSample]) -> Result<Summary, MetricsError> {
    let last = samples.last().ok_or(MetricsError::EmptyInput)?;
    let n = samples.len() as f64;
    let mean = samples.iter().map(|s| s.directivity).sum::<f64>() / n;
    let var = samples.iter().map(|s| (s.directivity - mean).powi(2)).sum::<f64>() / n;
    let mut histogram = [0; 4];
    for s in samples {
        histogram[histogram_bin(s.directivity)] += 1;
    }
    Ok(Summary {
        samples: samples.len(),
        mean_directivity: mean,
        std_directivity: var.sqrt(),
        histogram,
        final_roi_ratio: last.roi_ratio,
        final_roi_progress: last.roi_progress,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::MapParams;
    use crate::scene::load_scene;
    use proptest::prelude::*;

    fn sample(d: f64) -> MetricSample {
        MetricSample {
            sim_time: 0.0,
            directivity: d,
            roi_voxels: 0,
            total_voxels: 0,
            roi_ratio: 0.0,
            roi_progress: 0.0,
            target_index: 1,
            mode_k: true,
        }
    }

    #[test]
    fn directivity_examples() {
        let p = Pose::new(Vec3::zeros(), 0.0);
        assert_eq!(directivity(&p, &Vec3::new(3.0, 0.0, 0.0)), Ok(1.0));
        assert!(directivity(&p, &Vec3::new(0.0, 3.0, 0.0)).unwrap().abs() < 1e-15);
        assert_eq!(directivity(&p, &Vec3::new(-3.0, 0.0, 0.0)), Ok(-1.0));
        assert_eq!(directivity(&p, &Vec3::zeros()), Err(MetricsError::DegenerateGeometry));
    }

    #[test]
    fn summary_examples() {
        let s = summarize(&[sample(1.0), sample(1.0), sample(1.0)]).unwrap();
        assert_eq!((s.mean_directivity, s.std_directivity), (1.0, 0.0));
        assert_eq!(s.top_bin_share(), 1.0);
        let s = summarize(&[sample(1.0), sample(-1.0)]).unwrap();
        assert_eq!((s.mean_directivity, s.std_directivity), (0.0, 1.0));
        assert_eq!(s.histogram, [1, 0, 0, 1]);
        assert_eq!(summarize(&[]), Err(MetricsError::EmptyInput));
        assert_eq!(histogram_bin(-0.5), 0);
        assert_eq!(histogram_bin(0.0), 1);
        assert_eq!(histogram_bin(0.5), 2);
        assert_eq!(histogram_bin(0.51), 3);
    }

    fn person_scene() -> Scene {
        load_scene(
            "bounds 0 0 0 4 4 2\n\
             object person 1 2.0 2.0 0.0 2.4 2.4 0.8\n\
             object wall 2 3.6 0 0 4 4 2\n\
             target person\n\
             target_position person 2.2 2.2 0.4\n",
        )
        .unwrap()
    }

    #[test]
    fn empty_map_counts_zero() {
        let scene = person_scene();
        let m = MapPair::new(MapParams::new(0.2));
        let c = roi_metrics(&m, &scene, &MetricsConfig::for_scene(&scene));
        assert_eq!(c, RoiCounts { roi_voxels: 0, total_voxels: 0, roi_ratio: 0.0, roi_progress: 0.0 });
    }

    #[test]
    fn surface_and_ratio() {
        let scene = person_scene();
        let model = RoiModel::new(&scene, 0.2, 1.0);
        // 2 x 2 x 4 target voxels; the floor layer hides nothing since
        // its lower neighbours are out of bounds, and all 16 touch air
        assert_eq!(model.surface().len(), 16);
        let mut m = MapPair::new(MapParams::new(0.2));
        let front: Vec<VoxelIndex> = (0..4).flat_map(|k| (10..12).map(move |j| VoxelIndex::new(10, j, k))).collect();
        for v in &front {
            m.set_occupancy(*v, 0.0, 1.0);
        }
        let c = model.measure(&m);
        assert_eq!(c.roi_voxels, 8);
        assert_eq!(c.roi_ratio, 1.0);
        assert_eq!(c.roi_progress, 0.5);
        // a far wall voxel lowers the ratio only
        m.set_occupancy(VoxelIndex::new(19, 0, 9), 0.0, 1.0);
        let c = model.measure(&m);
        assert_eq!((c.roi_voxels, c.total_voxels), (8, 9));
        assert_eq!(c.roi_progress, 0.5);
    }

    #[test]
    fn dilation_matches_brute_force() {
        let scene = person_scene();
        let model = RoiModel::new(&scene, 0.2, 0.5);
        let gt = ground_truth_voxels(&scene, 0.2);
        let targets: Vec<_> = gt.iter().filter(|(_, (c, _))| c == "person").map(|(v, _)| *v).collect();
        let mut n = 0;
        for i in -5..25 {
            for j in -5..25 {
                for k in -5..15 {
                    let v = VoxelIndex::new(i, j, k);
                    let near = targets
                        .iter()
                        .any(|t| (t.center(0.2) - v.center(0.2)).norm() <= 0.5 + 1e-9);
                    assert_eq!(model.contains(&v), near, "{v:?}");
                    n += near as usize;
                }
            }
        }
        assert_eq!(n, model.roi_len());
    }

    proptest! {
        #[test]
        fn directivity_scale_invariant(
            x in -5.0..5.0f64, y in -5.0..5.0f64, z in -2.0..2.0f64,
            yaw in -3.1..3.1f64, s in 0.01..100.0f64,
        ) {
            prop_assume!(x * x + y * y + z * z > 1e-6);
            let p = Pose::new(Vec3::new(0.3, -0.2, 1.0), yaw);
            let a = directivity(&p, &(p.position + Vec3::new(x, y, z))).unwrap();
            let b = directivity(&p, &(p.position + Vec3::new(x, y, z) * s)).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&a));
        }

        #[test]
        fn histogram_counts_sum(ds in proptest::collection::vec(-1.0..=1.0f64, 1..50)) {
            let samples: Vec<_> = ds.iter().map(|d| sample(*d)).collect();
            let s = summarize(&samples).unwrap();
            prop_assert_eq!(s.histogram.iter().sum::<usize>(), ds.len());
        }
    }
}
