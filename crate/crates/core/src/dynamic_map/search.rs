//! Traversability view over an occupancy snapshot: occupied voxels dilated
//! by a safety margin, unknown space blocked or free per planner mode, plus
//! A* and segment checks used by the planners.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geometry::Vec3;
use crate::real::{real, Real};

use super::occupancy::OccupancyGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum UnknownPolicy {
    Blocked,
    Free,
}

#[derive(Debug, Clone)]
pub struct SearchGrid<T: Real> {
    dims: [usize; 3],
    origin: Vec3<T>,
    resolution: T,
    blocked: Vec<bool>,
}

impl<T: Real> SearchGrid<T> {
    /// Builds the mask: occupied voxels dilated by `margin` (center-to-center
    /// distance), and unknown voxels blocked verbatim when the policy says so.
    pub fn from_grid(grid: &OccupancyGrid<T>, margin: T, unknown: UnknownPolicy) -> Self {
        let dims = grid.dims();
        let n = dims[0] * dims[1] * dims[2];
        let mut blocked = vec![false; n];

        let r_vox = (margin / grid.resolution()).ceil().as_f64() as isize;
        let mut offsets: Vec<(isize, isize, isize)> = Vec::new();
        let margin_f = margin.as_f64();
        let res_f = grid.resolution().as_f64();
        for dz in -r_vox..=r_vox {
            for dy in -r_vox..=r_vox {
                for dx in -r_vox..=r_vox {
                    let d = ((dx * dx + dy * dy + dz * dz) as f64).sqrt() * res_f;
                    if d <= margin_f {
                        offsets.push((dx, dy, dz));
                    }
                }
            }
        }

        let mut idx = 0usize;
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    if grid.is_occupied_index(idx) {
                        for &(dx, dy, dz) in &offsets {
                            let (nx, ny, nz) = (x as isize + dx, y as isize + dy, z as isize + dz);
                            if nx >= 0
                                && ny >= 0
                                && nz >= 0
                                && (nx as usize) < dims[0]
                                && (ny as usize) < dims[1]
                                && (nz as usize) < dims[2]
                            {
                                blocked[(nz as usize * dims[1] + ny as usize) * dims[0] + nx as usize] = true;
                            }
                        }
                    } else if unknown == UnknownPolicy::Blocked
                        && grid.state_index(idx) == super::occupancy::VoxelState::Unknown
                    {
                        blocked[idx] = true;
                    }
                    idx += 1;
                }
            }
        }
        Self { dims, origin: grid.origin(), resolution: grid.resolution(), blocked }
    }

    #[inline]
    fn index(&self, v: [usize; 3]) -> usize {
        (v[2] * self.dims[1] + v[1]) * self.dims[0] + v[0]
    }

    fn voxel_of(&self, p: &Vec3<T>) -> Option<[usize; 3]> {
        let rel = (p - self.origin) / self.resolution;
        if rel.x < T::zero() || rel.y < T::zero() || rel.z < T::zero() {
            return None;
        }
        let v = [
            rel.x.floor().as_f64() as usize,
            rel.y.floor().as_f64() as usize,
            rel.z.floor().as_f64() as usize,
        ];
        (v[0] < self.dims[0] && v[1] < self.dims[1] && v[2] < self.dims[2]).then_some(v)
    }

    fn center_of(&self, v: [usize; 3]) -> Vec3<T> {
        let half = real::<T>(0.5);
        self.origin
            + Vec3::new(
                (real::<T>(v[0] as f64) + half) * self.resolution,
                (real::<T>(v[1] as f64) + half) * self.resolution,
                (real::<T>(v[2] as f64) + half) * self.resolution,
            )
    }

    /// Points outside the grid count as blocked.
    pub fn is_free_point(&self, p: &Vec3<T>) -> bool {
        match self.voxel_of(p) {
            Some(v) => !self.blocked[self.index(v)],
            None => false,
        }
    }

    /// Straight segment check, sampled at half the voxel resolution.
    pub fn segment_free(&self, a: &Vec3<T>, b: &Vec3<T>) -> bool {
        let d = b - a;
        let len = d.norm();
        let step = self.resolution * real::<T>(0.5);
        let n = (len / step).ceil().as_f64().max(1.0) as usize;
        for i in 0..=n {
            let t = real::<T>(i as f64) / real(n as f64);
            if !self.is_free_point(&(a + d * t)) {
                return false;
            }
        }
        true
    }

    /// Finds a non-blocked voxel at or near `p` (expanding cube search up to
    /// `max_radius_vox`).
    fn nearest_free_voxel(&self, p: &Vec3<T>, max_radius_vox: usize) -> Option<[usize; 3]> {
        let v0 = self.voxel_of(p)?;
        if !self.blocked[self.index(v0)] {
            return Some(v0);
        }
        for r in 1..=max_radius_vox {
            let mut best: Option<([usize; 3], T)> = None;
            let r = r as isize;
            for dz in -r..=r {
                for dy in -r..=r {
                    for dx in -r..=r {
                        if dx.abs() != r && dy.abs() != r && dz.abs() != r {
                            continue;
                        }
                        let (nx, ny, nz) = (v0[0] as isize + dx, v0[1] as isize + dy, v0[2] as isize + dz);
                        if nx < 0 || ny < 0 || nz < 0 {
                            continue;
                        }
                        let v = [nx as usize, ny as usize, nz as usize];
                        if v[0] >= self.dims[0] || v[1] >= self.dims[1] || v[2] >= self.dims[2] {
                            continue;
                        }
                        if !self.blocked[self.index(v)] {
                            let d = (self.center_of(v) - p).norm();
                            if best.map_or(true, |(_, bd)| d < bd) {
                                best = Some((v, d));
                            }
                        }
                    }
                }
            }
            if let Some((v, _)) = best {
                return Some(v);
            }
        }
        None
    }

    /// 26-connected A* between the voxels containing `start` and `goal`
    /// (snapped to the nearest free voxel within two cells). Returns voxel
    /// center waypoints, endpoints replaced by the exact query points.
    pub fn astar(&self, start: &Vec3<T>, goal: &Vec3<T>) -> Option<Vec<Vec3<T>>> {
        let s = self.nearest_free_voxel(start, 2)?;
        let g = self.nearest_free_voxel(goal, 2)?;
        let goal_center = self.center_of(g);

        #[derive(PartialEq)]
        struct Node {
            f: f64,
            idx: usize,
        }
        impl Eq for Node {}
        impl Ord for Node {
            fn cmp(&self, other: &Self) -> Ordering {
                other.f.total_cmp(&self.f).then(other.idx.cmp(&self.idx))
            }
        }
        impl PartialOrd for Node {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }

        let n = self.dims[0] * self.dims[1] * self.dims[2];
        let mut g_cost = vec![f64::INFINITY; n];
        let mut parent = vec![usize::MAX; n];
        let mut heap = BinaryHeap::new();
        let start_idx = self.index(s);
        let goal_idx = self.index(g);
        g_cost[start_idx] = 0.0;
        heap.push(Node { f: (self.center_of(s) - goal_center).norm().as_f64(), idx: start_idx });

        let strides = [1isize, self.dims[0] as isize, (self.dims[0] * self.dims[1]) as isize];
        let coords_of = |idx: usize| {
            let x = idx % self.dims[0];
            let y = (idx / self.dims[0]) % self.dims[1];
            let z = idx / (self.dims[0] * self.dims[1]);
            [x, y, z]
        };

        while let Some(Node { idx, .. }) = heap.pop() {
            if idx == goal_idx {
                let mut path = vec![*goal];
                let mut cur = idx;
                while cur != start_idx {
                    cur = parent[cur];
                    path.push(self.center_of(coords_of(cur)));
                }
                path.push(*start);
                path.reverse();
                return Some(path);
            }
            let c = coords_of(idx);
            let base = g_cost[idx];
            for dz in -1isize..=1 {
                for dy in -1isize..=1 {
                    for dx in -1isize..=1 {
                        if dx == 0 && dy == 0 && dz == 0 {
                            continue;
                        }
                        let (nx, ny, nz) = (c[0] as isize + dx, c[1] as isize + dy, c[2] as isize + dz);
                        if nx < 0
                            || ny < 0
                            || nz < 0
                            || nx as usize >= self.dims[0]
                            || ny as usize >= self.dims[1]
                            || nz as usize >= self.dims[2]
                        {
                            continue;
                        }
                        let nidx = (idx as isize + dx * strides[0] + dy * strides[1] + dz * strides[2]) as usize;
                        if self.blocked[nidx] {
                            continue;
                        }
                        let step = ((dx * dx + dy * dy + dz * dz) as f64).sqrt() * self.resolution.as_f64();
                        let cand = base + step;
                        if cand < g_cost[nidx] {
                            g_cost[nidx] = cand;
                            parent[nidx] = idx;
                            let h = (self.center_of([nx as usize, ny as usize, nz as usize]) - goal_center)
                                .norm()
                                .as_f64();
                            heap.push(Node { f: cand + h, idx: nidx });
                        }
                    }
                }
            }
        }
        None
    }

    /// Length of the shortest 26-connected voxel path (independent oracle for
    /// sampling planners).
    pub fn shortest_path_length(&self, start: &Vec3<T>, goal: &Vec3<T>) -> Option<T> {
        let path = self.astar(start, goal)?;
        let mut len = T::zero();
        for w in path.windows(2) {
            len += (w[1] - w[0]).norm();
        }
        Some(len)
    }

    pub fn bounds_min(&self) -> Vec3<T> {
        self.origin
    }

    pub fn bounds_max(&self) -> Vec3<T> {
        self.origin
            + Vec3::new(
                real::<T>(self.dims[0] as f64),
                real::<T>(self.dims[1] as f64),
                real::<T>(self.dims[2] as f64),
            ) * self.resolution
    }
}
