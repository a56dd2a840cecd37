//! Hybrid environment representation: occupancy voxels for static structure
//! plus tracked bounding boxes for dynamic obstacles, maintained from a
//! stream of depth images with known poses.
//!
//! Per frame the pipeline is: occupancy raycast update -> U-depth region
//! proposals -> map-depth fusion -> Kalman tracking -> dynamic filtering ->
//! freeing of voxels inside dynamic boxes. The map has exactly one writer;
//! planners consume an immutable snapshot.

mod detect;
mod occupancy;
mod search;
mod tracker;
mod udepth;

pub use detect::detect_region_proposals;
pub use occupancy::{OccupancyConfig, OccupancyGrid, VoxelState};
pub use search::{SearchGrid, UnknownPolicy};
pub use tracker::{KalmanCv, TrackedObstacle, Tracker};
pub use udepth::{build_udepth, UDepthMap};

use serde::{Deserialize, Serialize};

use crate::depth::DepthImage;
use crate::geometry::{Aabb, CameraModel, Pose, Vec3};
use crate::real::{real, Real};
use crate::Result;

/// Tunables of the whole dynamic-map pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DynamicMapConfig<T: Real> {
    /// U-depth histogram bin width (m).
    pub bin_width: T,
    /// Region-proposal inflation ratio lambda (>= 1).
    pub inflation_ratio: T,
    /// Speed above which a track may be classified dynamic (m/s).
    pub v_threshold: T,
    /// Velocity history ring-buffer length.
    pub history_len: usize,
    /// Maximum allowed std-dev of the direction-signed history speeds (m/s).
    pub jerk_reject_threshold: T,
    /// Track association gate on predicted centers (m).
    pub association_gate: T,
    pub occupancy: OccupancyConfig<T>,
    /// Consecutive over-threshold frames required to confirm dynamic.
    pub confirm_frames: u32,
    /// Tracks unseen for longer than this are dropped (s).
    pub track_timeout: T,
    /// Exponential smoothing factor for box extents (weight on the old box).
    pub extent_smoothing: T,
    pub kalman_q_pos: T,
    pub kalman_q_vel: T,
    pub kalman_r: T,
    pub initial_velocity_var: T,
    /// Minimum object height assumed by the U-depth column threshold (m).
    pub min_object_height: T,
    /// Proposals with any extent above this are discarded as structure (m).
    pub max_proposal_extent: T,
    /// Minimum consecutive active columns for a U-depth line run.
    pub min_run_columns: usize,
    /// Points below this height are treated as ground and excluded from
    /// obstacle boxes (m).
    pub ground_filter_height: T,
}

impl<T: Real> Default for DynamicMapConfig<T> {
    fn default() -> Self {
        Self {
            bin_width: real(0.2),
            inflation_ratio: real(1.3),
            v_threshold: real(0.3),
            history_len: 10,
            jerk_reject_threshold: real(0.3),
            association_gate: real(1.0),
            occupancy: OccupancyConfig::default(),
            confirm_frames: 3,
            track_timeout: real(1.5),
            extent_smoothing: real(0.5),
            kalman_q_pos: real(0.01),
            kalman_q_vel: real(0.05),
            kalman_r: real(0.04),
            initial_velocity_var: real(25.0),
            min_object_height: real(0.3),
            max_proposal_extent: real(3.0),
            min_run_columns: 1,
            ground_filter_height: real(0.15),
        }
    }
}

/// Inflates each proposal by the ratio and replaces it with the tight bounds
/// of the occupied voxels inside; proposals over free space are dropped.
/// Voxels below `min_z` count as ground, not obstacle evidence.
pub fn fuse_with_map<T: Real>(
    proposals: &[Aabb<T>],
    grid: &OccupancyGrid<T>,
    lambda: T,
    min_z: T,
) -> Vec<Aabb<T>> {
    proposals
        .iter()
        .filter_map(|p| grid.occupied_tight_aabb_within_above(&p.inflate(lambda), min_z))
        .collect()
}

/// Immutable per-frame view handed to the planners.
#[derive(Clone, Copy)]
pub struct MapView<'a, T: Real> {
    pub grid: &'a OccupancyGrid<T>,
    pub tracks: &'a [TrackedObstacle<T>],
}

/// Owned snapshot (value copy, safe to move across threads).
#[derive(Debug, Clone)]
pub struct MapSnapshot<T: Real> {
    pub grid: OccupancyGrid<T>,
    pub tracks: Vec<TrackedObstacle<T>>,
}

/// The single-writer map: owns the grid and the tracker and runs the
/// per-frame pipeline.
#[derive(Debug, Clone)]
pub struct DynamicMap<T: Real> {
    pub grid: OccupancyGrid<T>,
    pub tracker: Tracker<T>,
    pub cfg: DynamicMapConfig<T>,
}

impl<T: Real> DynamicMap<T> {
    pub fn new(origin: Vec3<T>, resolution: T, dims: [usize; 3], cfg: DynamicMapConfig<T>) -> Self {
        let grid = OccupancyGrid::new(origin, resolution, dims, cfg.occupancy);
        Self { grid, tracker: Tracker::new(), cfg }
    }

    /// Integrates one depth frame: occupancy update, detection, tracking,
    /// classification, and clearing of dynamic regions from the static map.
    pub fn ingest(
        &mut self,
        depth: &DepthImage<T>,
        pose: &Pose<T>,
        camera: &CameraModel<T>,
        t: T,
        pixel_stride: usize,
    ) -> Result<()> {
        self.grid.update_from_depth(depth, pose, camera, pixel_stride)?;
        let ud = build_udepth(depth, self.cfg.bin_width, camera.min_range, camera.max_range);
        let proposals = detect_region_proposals(&ud, depth, camera, pose, &self.cfg);
        let fused = fuse_with_map(
            &proposals,
            &self.grid,
            self.cfg.inflation_ratio,
            self.cfg.ground_filter_height,
        );
        self.tracker.step(&fused, t, &self.cfg);
        self.tracker.classify(&self.cfg);
        let clear: Vec<Aabb<T>> = self
            .tracker
            .dynamic_tracks()
            .map(|tr| tr.bbox.grow(self.grid.resolution()))
            .collect();
        // Saturated voxels are long-confirmed structure; phantom movers
        // (apparent motion of wall fragments as the viewpoint sweeps) must
        // not erase them. Genuinely moving obstacles never saturate their
        // footprint, and whatever they leave behind is carved away by the
        // free-space updates of later frames.
        self.grid.clear_boxes_below_saturation(&clear);
        Ok(())
    }

    pub fn view(&self) -> MapView<'_, T> {
        MapView { grid: &self.grid, tracks: &self.tracker.tracks }
    }

    pub fn snapshot(&self) -> MapSnapshot<T> {
        MapSnapshot { grid: self.grid.clone(), tracks: self.tracker.tracks.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CameraModel;

    fn small_grid() -> OccupancyGrid<f64> {
        OccupancyGrid::new(Vec3::zeros(), 0.5, [20, 10, 10], OccupancyConfig::default())
    }

    fn test_camera() -> CameraModel<f64> {
        CameraModel::new(32, 24, 20.0, 20.0, 16.0, 12.0, 0.3, 6.0)
    }

    #[test]
    fn single_ray_hit_and_misses() {
        let mut grid = small_grid();
        let cam = test_camera();
        let mut img = DepthImage::new(32, 24);
        img.set(16, 12, 2.0); // one valid pixel straight ahead
        let pose = Pose::new(Vec3::new(0.25, 2.25, 2.25), 0.0);
        grid.update_from_depth(&img, &pose, &cam, 1).unwrap();

        // hit voxel at ~2.25m ahead (z-depth 2.0 from x=0.25)
        let hit_p = pose.camera_to_world(cam.unproject(16.5, 12.5, 2.0));
        let hv = grid.voxel_of(&hit_p).unwrap();
        assert_eq!(grid.log_odds_at(hv), 0.85);
        assert_eq!(grid.query(&hit_p), VoxelState::Free); // 0.85 not > threshold 0.85

        // traversed voxels got one miss each
        let mid = pose.camera_to_world(cam.unproject(16.5, 12.5, 1.0));
        let mv = grid.voxel_of(&mid).unwrap();
        assert_eq!(grid.log_odds_at(mv), -0.4);
        // untouched voxel
        assert_eq!(grid.query(&Vec3::new(9.0, 4.0, 4.0)), VoxelState::Unknown);
    }

    #[test]
    fn repeated_rays_follow_clamped_sum() {
        let cam = test_camera();
        let pose = Pose::new(Vec3::new(0.25, 2.25, 2.25), 0.0);
        let mut img = DepthImage::new(32, 24);
        img.set(16, 12, 2.0);
        for n in 1..=20 {
            let mut grid = small_grid();
            let mut expected: f64 = 0.0;
            for _ in 0..n {
                grid.update_from_depth(&img, &pose, &cam, 1).unwrap();
                expected = (expected + 0.85).clamp(-2.0, 3.5);
            }
            let hit_p = pose.camera_to_world(cam.unproject(16.5, 12.5, 2.0));
            let hv = grid.voxel_of(&hit_p).unwrap();
            assert_eq!(grid.log_odds_at(hv).to_bits(), expected.to_bits(), "n = {n}");
            assert!((grid.log_odds_at(hv) - (n as f64 * 0.85).min(3.5)).abs() < 1e-9);
            if n >= 5 {
                assert_eq!(grid.query(&hit_p), VoxelState::Occupied);
            }
        }
    }

    #[test]
    fn empty_image_leaves_grid_unchanged() {
        let mut grid = small_grid();
        let cam = test_camera();
        let img = DepthImage::new(32, 24);
        let pose = Pose::new(Vec3::new(0.25, 2.25, 2.25), 0.0);
        grid.update_from_depth(&img, &pose, &cam, 1).unwrap();
        for k in 0..10 {
            for j in 0..10 {
                for i in 0..20 {
                    assert_eq!(grid.state_index(grid.index([i, j, k])), VoxelState::Unknown);
                }
            }
        }
    }

    #[test]
    fn pose_outside_grid_rejected() {
        let mut grid = small_grid();
        let cam = test_camera();
        let img = DepthImage::new(32, 24);
        let pose = Pose::new(Vec3::new(-5.0, 0.0, 0.0), 0.0);
        assert!(grid.update_from_depth(&img, &pose, &cam, 1).is_err());
    }

    #[test]
    fn max_range_ray_is_pure_free_space() {
        let mut grid = small_grid();
        let cam = test_camera();
        let mut img = DepthImage::new(32, 24);
        img.set(16, 12, 6.0); // exactly max range
        let pose = Pose::new(Vec3::new(0.25, 2.25, 2.25), 0.0);
        grid.update_from_depth(&img, &pose, &cam, 1).unwrap();
        let end = pose.camera_to_world(cam.unproject(16.5, 12.5, 6.0));
        let ev = grid.voxel_of(&end).unwrap();
        assert_eq!(grid.log_odds_at(ev), -0.4);
    }

    #[test]
    fn misses_repeatedly_become_free() {
        let mut grid = small_grid();
        let cam = test_camera();
        let mut img = DepthImage::new(32, 24);
        img.set(16, 12, 6.0);
        let pose = Pose::new(Vec3::new(0.25, 2.25, 2.25), 0.0);
        for _ in 0..5 {
            grid.update_from_depth(&img, &pose, &cam, 1).unwrap();
        }
        let mid = pose.camera_to_world(cam.unproject(16.5, 12.5, 3.0));
        assert_eq!(grid.query(&mid), VoxelState::Free);
        assert_eq!(grid.log_odds_at(grid.voxel_of(&mid).unwrap()), -2.0);
    }

    #[test]
    fn clear_boxes_frees_union_once() {
        let mut grid = small_grid();
        let block = Aabb::from_min_max(Vec3::new(2.0, 2.0, 2.0), Vec3::new(3.0, 3.0, 3.0));
        grid.occupy_box(&block);
        let overlapping = [
            Aabb::from_min_max(Vec3::new(2.0, 2.0, 2.0), Vec3::new(2.6, 3.0, 3.0)),
            Aabb::from_min_max(Vec3::new(2.4, 2.0, 2.0), Vec3::new(3.0, 3.0, 3.0)),
        ];
        grid.clear_boxes(&overlapping);
        for k in 0..10 {
            for j in 0..10 {
                for i in 0..20 {
                    let c = grid.center_of([i, j, k]);
                    let cleared = overlapping.iter().any(|b| b.contains(&c));
                    if cleared {
                        assert_eq!(grid.query(&c), VoxelState::Free);
                        assert_eq!(grid.log_odds_at([i, j, k]), -2.0);
                    } else if block.contains(&c) {
                        assert_eq!(grid.query(&c), VoxelState::Occupied);
                    } else {
                        assert_eq!(grid.query(&c), VoxelState::Unknown);
                    }
                }
            }
        }
        // idempotent on the union
        let snapshot: Vec<f64> =
            (0..grid.dims()[0]).map(|i| grid.log_odds_at([i, 4, 4])).collect();
        grid.clear_boxes(&overlapping);
        let again: Vec<f64> = (0..grid.dims()[0]).map(|i| grid.log_odds_at([i, 4, 4])).collect();
        assert_eq!(snapshot, again);
    }

    #[test]
    fn clear_with_empty_list_is_noop() {
        let mut grid = small_grid();
        let block = Aabb::from_min_max(Vec3::new(2.0, 2.0, 2.0), Vec3::new(3.0, 3.0, 3.0));
        grid.occupy_box(&block);
        grid.clear_boxes(&[]);
        assert_eq!(grid.query(&Vec3::new(2.5, 2.5, 2.5)), VoxelState::Occupied);
    }

    #[test]
    fn query_outside_grid_is_unknown() {
        let grid = small_grid();
        assert_eq!(grid.query(&Vec3::new(-1.0, 0.0, 0.0)), VoxelState::Unknown);
        assert_eq!(grid.query(&Vec3::new(100.0, 0.0, 0.0)), VoxelState::Unknown);
    }

    fn grid_with_block(block: &Aabb<f64>) -> OccupancyGrid<f64> {
        let mut grid = small_grid();
        grid.occupy_box(block);
        grid
    }

    #[test]
    fn fuse_refines_to_tight_block() {
        let block = Aabb::from_min_max(Vec3::new(2.0, 2.0, 2.0), Vec3::new(3.0, 3.0, 3.0));
        let grid = grid_with_block(&block);
        let proposal = block;
        let fused = fuse_with_map(&[proposal], &grid, 1.0, 0.0);
        assert_eq!(fused.len(), 1);
        assert!((fused[0].min() - block.min()).norm() < 1e-9);
        assert!((fused[0].max() - block.max()).norm() < 1e-9);
    }

    #[test]
    fn fuse_offset_proposal_keeps_contained_portion() {
        let block = Aabb::from_min_max(Vec3::new(2.0, 2.0, 2.0), Vec3::new(3.0, 3.0, 3.0));
        let grid = grid_with_block(&block);
        // proposal shifted by half a box width
        let proposal = Aabb::from_min_max(Vec3::new(2.5, 2.0, 2.0), Vec3::new(3.5, 3.0, 3.0));
        let inflated = proposal.inflate(1.5);
        let fused = fuse_with_map(&[proposal], &grid, 1.5, 0.0);
        assert_eq!(fused.len(), 1);
        // oracle: enumerate every voxel, keep occupied centers inside the
        // inflated proposal, take the union of their cells
        let mut mn = Vec3::new(f64::MAX, f64::MAX, f64::MAX);
        let mut mx = Vec3::new(f64::MIN, f64::MIN, f64::MIN);
        for k in 0..grid.dims()[2] {
            for j in 0..grid.dims()[1] {
                for i in 0..grid.dims()[0] {
                    let c = grid.center_of([i, j, k]);
                    if grid.query(&c) == VoxelState::Occupied && inflated.contains(&c) {
                        let cell = grid.cell_of([i, j, k]);
                        mn = mn.inf(&cell.min());
                        mx = mx.sup(&cell.max());
                    }
                }
            }
        }
        assert!((fused[0].min() - mn).norm() < 1e-9);
        assert!((fused[0].max() - mx).norm() < 1e-9);
    }

    #[test]
    fn fuse_drops_free_space_proposal() {
        let grid = small_grid();
        let proposal = Aabb::from_min_max(Vec3::new(5.0, 1.0, 1.0), Vec3::new(6.0, 2.0, 2.0));
        assert!(fuse_with_map(&[proposal], &grid, 1.0, 0.0).is_empty());
    }
}
