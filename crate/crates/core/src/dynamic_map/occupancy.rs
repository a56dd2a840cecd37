//! Fixed-size voxel occupancy grid with additive log-odds updates.
//!
//! The grid preallocates one slot per voxel so occupancy queries are a single
//! array access. Depth images are integrated by walking each pixel ray with
//! integer voxel stepping; a per-frame stamp deduplicates updates so a voxel
//! is hit or missed at most once per frame regardless of how many rays cross
//! it near the camera.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::depth::DepthImage;
use crate::geometry::{Aabb, CameraModel, Pose, Vec3};
use crate::real::{real, Real};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoxelState {
    Free,
    Occupied,
    Unknown,
}

/// Log-odds update model: increments, clamping bounds, occupancy threshold,
/// and the prior term added on every measurement.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OccupancyConfig<T: Real> {
    pub l_hit: T,
    pub l_miss: T,
    pub l_min: T,
    pub l_max: T,
    pub occ_threshold: T,
    pub prior: T,
}

impl<T: Real> Default for OccupancyConfig<T> {
    fn default() -> Self {
        Self {
            l_hit: real(0.85),
            l_miss: real(-0.4),
            l_min: real(-2.0),
            l_max: real(3.5),
            occ_threshold: real(0.85),
            prior: T::zero(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OccupancyGrid<T: Real> {
    origin: Vec3<T>,
    resolution: T,
    dims: [usize; 3],
    log_odds: Vec<T>,
    observed: Vec<bool>,
    cfg: OccupancyConfig<T>,
    hit_stamp: Vec<u32>,
    miss_stamp: Vec<u32>,
    frame: u32,
}

impl<T: Real> OccupancyGrid<T> {
    pub fn new(origin: Vec3<T>, resolution: T, dims: [usize; 3], cfg: OccupancyConfig<T>) -> Self {
        assert!(resolution > T::zero());
        let n = dims[0] * dims[1] * dims[2];
        Self {
            origin,
            resolution,
            dims,
            log_odds: vec![T::zero(); n],
            observed: vec![false; n],
            cfg,
            hit_stamp: vec![0; n],
            miss_stamp: vec![0; n],
            frame: 0,
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn resolution(&self) -> T {
        self.resolution
    }

    pub fn origin(&self) -> Vec3<T> {
        self.origin
    }

    pub fn config(&self) -> &OccupancyConfig<T> {
        &self.cfg
    }

    /// World-space bounds of the mapped volume.
    pub fn bounds(&self) -> Aabb<T> {
        let size = Vec3::new(
            real::<T>(self.dims[0] as f64),
            real::<T>(self.dims[1] as f64),
            real::<T>(self.dims[2] as f64),
        ) * self.resolution;
        Aabb::from_min_max(self.origin, self.origin + size)
    }

    #[inline]
    pub fn index(&self, v: [usize; 3]) -> usize {
        (v[2] * self.dims[1] + v[1]) * self.dims[0] + v[0]
    }

    #[inline]
    pub fn voxel_of(&self, p: &Vec3<T>) -> Option<[usize; 3]> {
        let rel = (p - self.origin) / self.resolution;
        if rel.x < T::zero() || rel.y < T::zero() || rel.z < T::zero() {
            return None;
        }
        let v = [
            rel.x.floor().as_f64() as usize,
            rel.y.floor().as_f64() as usize,
            rel.z.floor().as_f64() as usize,
        ];
        if v[0] < self.dims[0] && v[1] < self.dims[1] && v[2] < self.dims[2] {
            Some(v)
        } else {
            None
        }
    }

    #[inline]
    pub fn center_of(&self, v: [usize; 3]) -> Vec3<T> {
        let half = real::<T>(0.5);
        self.origin
            + Vec3::new(
                (real::<T>(v[0] as f64) + half) * self.resolution,
                (real::<T>(v[1] as f64) + half) * self.resolution,
                (real::<T>(v[2] as f64) + half) * self.resolution,
            )
    }

    /// Axis-aligned cell bounds of a voxel.
    pub fn cell_of(&self, v: [usize; 3]) -> Aabb<T> {
        let half = self.resolution * real::<T>(0.5);
        Aabb::new(self.center_of(v), Vec3::new(half, half, half))
    }

    #[inline]
    pub fn log_odds_at(&self, v: [usize; 3]) -> T {
        self.log_odds[self.index(v)]
    }

    #[inline]
    pub fn state_index(&self, i: usize) -> VoxelState {
        if !self.observed[i] {
            VoxelState::Unknown
        } else if self.log_odds[i] > self.cfg.occ_threshold {
            VoxelState::Occupied
        } else {
            VoxelState::Free
        }
    }

    /// O(1) occupancy query; `Unknown` outside the grid or before the first
    /// observation of the voxel.
    pub fn query(&self, p: &Vec3<T>) -> VoxelState {
        match self.voxel_of(p) {
            None => VoxelState::Unknown,
            Some(v) => self.state_index(self.index(v)),
        }
    }

    #[inline]
    pub fn is_occupied_index(&self, i: usize) -> bool {
        self.observed[i] && self.log_odds[i] > self.cfg.occ_threshold
    }

    fn apply(&mut self, i: usize, increment: T) {
        let lo = self.log_odds[i] + increment + self.cfg.prior;
        self.log_odds[i] = lo.max(self.cfg.l_min).min(self.cfg.l_max);
        self.observed[i] = true;
    }

    /// Integrates one depth frame taken from `pose`. Every sampled pixel ray
    /// marks the traversed voxels free and (when the return is closer than
    /// `max_range`) the end voxel occupied; `pixel_stride` subsamples the
    /// image for speed.
    pub fn update_from_depth(
        &mut self,
        depth: &DepthImage<T>,
        pose: &Pose<T>,
        camera: &CameraModel<T>,
        pixel_stride: usize,
    ) -> Result<()> {
        if depth.width != camera.width || depth.height != camera.height {
            return Err(Error::DepthSizeMismatch {
                got: (depth.width, depth.height),
                expected: (camera.width, camera.height),
            });
        }
        if self.voxel_of(&pose.position).is_none() {
            return Err(Error::PoseOutsideGrid([
                pose.position.x.as_f64(),
                pose.position.y.as_f64(),
                pose.position.z.as_f64(),
            ]));
        }
        self.frame = self.frame.wrapping_add(1);
        if self.frame == 0 {
            // stamp wrap: reset so stale stamps cannot collide
            self.hit_stamp.fill(0);
            self.miss_stamp.fill(0);
            self.frame = 1;
        }
        let frame = self.frame;
        let stride = pixel_stride.max(1);
        let mut hits: Vec<usize> = Vec::new();
        let mut misses: Vec<usize> = Vec::new();
        let half = real::<T>(0.5);

        for v in (0..depth.height).step_by(stride) {
            for u in (0..depth.width).step_by(stride) {
                let d = depth.at(u, v);
                if d <= T::zero() {
                    continue;
                }
                let is_hit = d < camera.max_range;
                let d_clamped = d.min(camera.max_range);
                let end_cam = camera.unproject(
                    real::<T>(u as f64) + half,
                    real::<T>(v as f64) + half,
                    d_clamped,
                );
                let end_world = pose.camera_to_world(end_cam);
                self.walk_ray(&pose.position, &end_world, |grid, idx, is_last| {
                    if is_last && is_hit {
                        if grid.hit_stamp[idx] != frame {
                            grid.hit_stamp[idx] = frame;
                            hits.push(idx);
                        }
                    } else if grid.miss_stamp[idx] != frame {
                        grid.miss_stamp[idx] = frame;
                        misses.push(idx);
                    }
                });
            }
        }

        let (l_hit, l_miss) = (self.cfg.l_hit, self.cfg.l_miss);
        for &i in &hits {
            self.apply(i, l_hit);
        }
        for &i in &misses {
            if self.hit_stamp[i] != frame {
                self.apply(i, l_miss);
            }
        }
        Ok(())
    }

    /// Amanatides–Woo voxel walk from `from` to `to`. The visitor receives
    /// `(grid, voxel index, is_last)` where `is_last` marks the voxel
    /// containing `to` (only when `to` is inside the grid).
    fn walk_ray(&mut self, from: &Vec3<T>, to: &Vec3<T>, mut visit: impl FnMut(&mut Self, usize, bool)) {
        let dir = to - from;
        let len = dir.norm();
        if len < real(1e-12) {
            if let Some(v) = self.voxel_of(from) {
                let i = self.index(v);
                visit(self, i, true);
            }
            return;
        }
        // Clip the segment parameter to the grid volume.
        let bounds = self.bounds();
        let mut t_end = T::one();
        let mut end_inside = true;
        {
            let mn = bounds.min();
            let mx = bounds.max();
            for ax in 0..3 {
                let o = from[ax];
                let d = dir[ax];
                if d.abs() < real(1e-15) {
                    continue;
                }
                let inv = T::one() / d;
                let t0 = (mn[ax] - o) * inv;
                let t1 = (mx[ax] - o) * inv;
                let exit = t0.max(t1);
                if exit < t_end {
                    t_end = exit;
                    end_inside = false;
                }
            }
        }
        if t_end <= T::zero() {
            return;
        }
        let end_voxel = if end_inside { self.voxel_of(to) } else { None };

        let mut cur = match self.voxel_of(from) {
            Some(v) => v,
            None => return,
        };
        let res = self.resolution;
        let mut step = [0isize; 3];
        let mut t_max = [T::pos_inf(); 3];
        let mut t_delta = [T::pos_inf(); 3];
        for ax in 0..3 {
            let d = dir[ax];
            if d > real(1e-15) {
                step[ax] = 1;
                let next_boundary = self.origin[ax] + real::<T>((cur[ax] + 1) as f64) * res;
                t_max[ax] = (next_boundary - from[ax]) / d;
                t_delta[ax] = res / d;
            } else if d < real(-1e-15) {
                step[ax] = -1;
                let boundary = self.origin[ax] + real::<T>(cur[ax] as f64) * res;
                t_max[ax] = (boundary - from[ax]) / d;
                t_delta[ax] = -res / d;
            }
        }

        loop {
            let is_last = end_voxel == Some(cur);
            let i = self.index(cur);
            visit(self, i, is_last);
            if is_last {
                return;
            }
            let ax = if t_max[0] <= t_max[1] && t_max[0] <= t_max[2] {
                0
            } else if t_max[1] <= t_max[2] {
                1
            } else {
                2
            };
            if t_max[ax] > t_end {
                return;
            }
            let next = cur[ax] as isize + step[ax];
            if next < 0 || next as usize >= self.dims[ax] {
                return;
            }
            cur[ax] = next as usize;
            t_max[ax] += t_delta[ax];
        }
    }

    /// Sets every voxel whose center lies in one of the boxes to `l_min`
    /// (known free). Overlapping boxes clear the union exactly once.
    pub fn clear_boxes(&mut self, boxes: &[Aabb<T>]) {
        let l_min = self.cfg.l_min;
        for b in boxes {
            let Some((lo, hi)) = self.voxel_range(b) else { continue };
            for k in lo[2]..=hi[2] {
                for j in lo[1]..=hi[1] {
                    for i in lo[0]..=hi[0] {
                        let v = [i, j, k];
                        if b.contains(&self.center_of(v)) {
                            let idx = self.index(v);
                            self.log_odds[idx] = l_min;
                            self.observed[idx] = true;
                        }
                    }
                }
            }
        }
    }

    /// As [`clear_boxes`](Self::clear_boxes) but sparing voxels already at
    /// the saturation bound `l_max` (long-confirmed structure).
    pub fn clear_boxes_below_saturation(&mut self, boxes: &[Aabb<T>]) {
        let l_min = self.cfg.l_min;
        let l_max = self.cfg.l_max;
        for b in boxes {
            let Some((lo, hi)) = self.voxel_range(b) else { continue };
            for k in lo[2]..=hi[2] {
                for j in lo[1]..=hi[1] {
                    for i in lo[0]..=hi[0] {
                        let v = [i, j, k];
                        if b.contains(&self.center_of(v)) {
                            let idx = self.index(v);
                            if self.log_odds[idx] < l_max {
                                self.log_odds[idx] = l_min;
                                self.observed[idx] = true;
                            }
                        }
                    }
                }
            }
        }
    }

    /// Marks every voxel whose center lies in `b` as occupied at `l_max`.
    /// Used to seed grids from known geometry (tests, priors).
    pub fn occupy_box(&mut self, b: &Aabb<T>) {
        let Some((lo, hi)) = self.voxel_range(b) else { return };
        let l_max = self.cfg.l_max;
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    let v = [i, j, k];
                    if b.contains(&self.center_of(v)) {
                        let idx = self.index(v);
                        self.log_odds[idx] = l_max;
                        self.observed[idx] = true;
                    }
                }
            }
        }
    }

    /// Marks the sphere around `center` observed-free (used for the volume
    /// the robot itself occupies).
    pub fn mark_free_sphere(&mut self, center: &Vec3<T>, radius: T) {
        let b = Aabb::new(*center, Vec3::new(radius, radius, radius));
        let Some((lo, hi)) = self.voxel_range(&b) else { return };
        let l_min = self.cfg.l_min;
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    let v = [i, j, k];
                    if (self.center_of(v) - center).norm() <= radius {
                        let idx = self.index(v);
                        self.log_odds[idx] = l_min;
                        self.observed[idx] = true;
                    }
                }
            }
        }
    }

    /// Inclusive voxel index range overlapping a world-space box, or `None`
    /// when the box is entirely outside the grid.
    pub fn voxel_range(&self, b: &Aabb<T>) -> Option<([usize; 3], [usize; 3])> {
        let mn = (b.min() - self.origin) / self.resolution;
        let mx = (b.max() - self.origin) / self.resolution;
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for ax in 0..3 {
            let l = mn[ax].floor().as_f64().max(0.0);
            let h = mx[ax].floor().as_f64();
            if h < 0.0 || l >= self.dims[ax] as f64 {
                return None;
            }
            lo[ax] = l as usize;
            hi[ax] = (h as usize).min(self.dims[ax] - 1);
        }
        Some((lo, hi))
    }

    /// Tight bounds (as a union of voxel cells) of the occupied voxels whose
    /// centers fall inside `within`; `None` when there are none.
    pub fn occupied_tight_aabb_within(&self, within: &Aabb<T>) -> Option<Aabb<T>> {
        self.occupied_tight_aabb_within_above(within, T::neg_inf())
    }

    /// As [`occupied_tight_aabb_within`](Self::occupied_tight_aabb_within)
    /// but ignoring voxels whose center is below `min_z`.
    pub fn occupied_tight_aabb_within_above(&self, within: &Aabb<T>, min_z: T) -> Option<Aabb<T>> {
        let (lo, hi) = self.voxel_range(within)?;
        let mut found = false;
        let mut mn = Vec3::new(T::pos_inf(), T::pos_inf(), T::pos_inf());
        let mut mx = Vec3::new(T::neg_inf(), T::neg_inf(), T::neg_inf());
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    let v = [i, j, k];
                    if !self.is_occupied_index(self.index(v)) {
                        continue;
                    }
                    let c = self.center_of(v);
                    if !within.contains(&c) || c.z < min_z {
                        continue;
                    }
                    found = true;
                    let cell = self.cell_of(v);
                    mn = crate::geometry::component_min(&mn, &cell.min());
                    mx = crate::geometry::component_max(&mx, &cell.max());
                }
            }
        }
        found.then(|| Aabb::from_min_max(mn, mx))
    }

    /// Minimum distance from `p` to any occupied voxel cell within `radius`;
    /// `None` when no occupied voxel is that close. Negative when `p` is
    /// inside an occupied cell.
    pub fn distance_to_occupied_within(&self, p: &Vec3<T>, radius: T) -> Option<T> {
        let b = Aabb::new(*p, Vec3::new(radius, radius, radius));
        let (lo, hi) = self.voxel_range(&b)?;
        let mut best: Option<T> = None;
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    let v = [i, j, k];
                    if !self.is_occupied_index(self.index(v)) {
                        continue;
                    }
                    let d = self.cell_of(v).signed_distance(p);
                    best = Some(match best {
                        Some(cur) => cur.min(d),
                        None => d,
                    });
                }
            }
        }
        best.filter(|d| *d <= radius)
    }

    pub fn has_occupied_within(&self, p: &Vec3<T>, radius: T) -> bool {
        self.distance_to_occupied_within(p, radius).is_some()
    }

    /// Binary snapshot export: `nx ny nz` as little-endian u64, then
    /// resolution and origin as little-endian f64, then the log-odds array as
    /// little-endian f32.
    pub fn export_binary(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut header = Vec::with_capacity(8 * 7);
        for d in self.dims {
            header.extend_from_slice(&(d as u64).to_le_bytes());
        }
        header.extend_from_slice(&self.resolution.as_f64().to_le_bytes());
        for ax in 0..3 {
            header.extend_from_slice(&self.origin[ax].as_f64().to_le_bytes());
        }
        f.write_all(&header).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut body = Vec::with_capacity(self.log_odds.len() * 4);
        for lo in &self.log_odds {
            body.extend_from_slice(&(lo.as_f64() as f32).to_le_bytes());
        }
        f.write_all(&body).map_err(|e| Error::io(path.display().to_string(), e))
    }

    /// Parses a snapshot produced by [`export_binary`](Self::export_binary).
    pub fn read_binary(path: &Path) -> Result<([usize; 3], f64, [f64; 3], Vec<f32>)> {
        let mut f = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut buf = Vec::new();
        f.read_to_end(&mut buf).map_err(|e| Error::io(path.display().to_string(), e))?;
        let take_u64 = |b: &[u8], at: usize| u64::from_le_bytes(b[at..at + 8].try_into().unwrap());
        let take_f64 = |b: &[u8], at: usize| f64::from_le_bytes(b[at..at + 8].try_into().unwrap());
        if buf.len() < 56 {
            return Err(Error::Serde("grid snapshot truncated".into()));
        }
        let dims = [take_u64(&buf, 0) as usize, take_u64(&buf, 8) as usize, take_u64(&buf, 16) as usize];
        let resolution = take_f64(&buf, 24);
        let origin = [take_f64(&buf, 32), take_f64(&buf, 40), take_f64(&buf, 48)];
        let n = dims[0] * dims[1] * dims[2];
        if buf.len() != 56 + 4 * n {
            return Err(Error::Serde("grid snapshot length mismatch".into()));
        }
        let mut log_odds = Vec::with_capacity(n);
        for i in 0..n {
            let at = 56 + 4 * i;
            log_odds.push(f32::from_le_bytes(buf[at..at + 4].try_into().unwrap()));
        }
        Ok((dims, resolution, origin, log_odds))
    }
}
