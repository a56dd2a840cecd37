//! Next-best-view sampling: candidate poses in known-free space scored by
//! the count of unknown voxels visible inside the sensor frustum.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dynamic_map::VoxelState;
use crate::{Aabb, CameraModel, Error, OccupancyGrid, Pose, Result, Vec3};

use super::MissionConfig;

#[derive(Debug, Clone, Copy)]
pub struct Viewpoint {
    pub pose: Pose,
    pub gain: usize,
}

/// Uniform candidate poses in the known-free ball around the robot, each
/// expanded over the configured yaw samples. Deterministic for a given rng
/// state.
pub fn sample_viewpoint_candidates(
    grid: &OccupancyGrid,
    robot: &Pose,
    cfg: &MissionConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<Pose> {
    let mut positions = Vec::new();
    let mut attempts = 0;
    while positions.len() < cfg.viewpoint_samples && attempts < cfg.viewpoint_samples * 30 {
        attempts += 1;
        let p = robot.position
            + Vec3::new(
                rng.gen_range(-cfg.viewpoint_radius..cfg.viewpoint_radius),
                rng.gen_range(-cfg.viewpoint_radius..cfg.viewpoint_radius),
                rng.gen_range(-cfg.viewpoint_radius * 0.75..cfg.viewpoint_radius * 0.75),
            );
        if grid.query(&p) == VoxelState::Free
            && !grid.has_occupied_within(&p, cfg.robot_radius + 0.1)
        {
            positions.push(p);
        }
    }
    let mut out = Vec::with_capacity(positions.len() * cfg.viewpoint_yaw_samples);
    for p in positions {
        for k in 0..cfg.viewpoint_yaw_samples {
            let yaw = -std::f64::consts::PI
                + 2.0 * std::f64::consts::PI * k as f64 / cfg.viewpoint_yaw_samples as f64;
            out.push(Pose::new(p, yaw));
        }
    }
    out
}

/// Unknown-voxel count visible from the pose: frustum rays marched until
/// they hit occupied space, counting each unknown voxel once. With a `focus`
/// region only unknown voxels inside it score (used when exploration serves
/// the inspection target).
pub fn viewpoint_gain(
    grid: &OccupancyGrid,
    pose: &Pose,
    camera: &CameraModel,
    cfg: &MissionConfig,
    focus: Option<&Aabb>,
) -> usize {
    let mut seen = std::collections::HashSet::new();
    let half_h = (camera.width as f64 * 0.5 / camera.fx).atan();
    let half_v = (camera.height as f64 * 0.5 / camera.fy).atan();
    let step = grid.resolution() * 0.75;
    for iv in 0..cfg.gain_rays_vertical {
        let el = -half_v + 2.0 * half_v * (iv as f64 + 0.5) / cfg.gain_rays_vertical as f64;
        for ih in 0..cfg.gain_rays_horizontal {
            let az = -half_h + 2.0 * half_h * (ih as f64 + 0.5) / cfg.gain_rays_horizontal as f64;
            let dir = Vec3::new(
                (pose.yaw + az).cos() * el.cos(),
                (pose.yaw + az).sin() * el.cos(),
                el.sin(),
            );
            let mut t = camera.min_range;
            while t < camera.max_range {
                let p = pose.position + dir * t;
                match grid.voxel_of(&p) {
                    None => break,
                    Some(v) => {
                        let idx = grid.index(v);
                        match grid.state_index(idx) {
                            VoxelState::Occupied => break,
                            VoxelState::Unknown => {
                                if focus.map_or(true, |f| f.contains(&p)) {
                                    seen.insert(idx);
                                }
                            }
                            VoxelState::Free => {}
                        }
                    }
                }
                t += step;
            }
        }
    }
    seen.len()
}

/// Best viewpoint by information gain with nearest-first tie-breaking; falls
/// back to the nearest frontier when every candidate scores zero, and
/// signals exhaustion when there is no frontier either.
pub fn best_viewpoint(
    grid: &OccupancyGrid,
    robot: &Pose,
    camera: &CameraModel,
    cfg: &MissionConfig,
    focus: Option<&Aabb>,
    rng: &mut ChaCha8Rng,
) -> Result<Viewpoint> {
    let candidates = sample_viewpoint_candidates(grid, robot, cfg, rng);
    let mut best: Option<(usize, f64, Pose)> = None;
    for pose in candidates {
        let gain = viewpoint_gain(grid, &pose, camera, cfg, focus);
        let dist = (pose.position - robot.position).norm();
        let better = match &best {
            None => true,
            Some((bg, bd, _)) => gain > *bg || (gain == *bg && dist < *bd),
        };
        if better {
            best = Some((gain, dist, pose));
        }
    }
    match best {
        Some((gain, _, pose)) if gain > 0 => Ok(Viewpoint { pose, gain }),
        _ => nearest_frontier(grid, robot, cfg).ok_or(Error::ExplorationExhausted),
    }
}

/// Closest free voxel adjacent to unknown space, looking outward from the
/// robot; the viewpoint faces the unknown neighbor.
fn nearest_frontier(grid: &OccupancyGrid, robot: &Pose, cfg: &MissionConfig) -> Option<Viewpoint> {
    use std::collections::VecDeque;
    let dims = grid.dims();
    let start = grid.voxel_of(&robot.position)?;
    let mut seen = vec![false; dims[0] * dims[1] * dims[2]];
    let mut queue = VecDeque::new();
    seen[grid.index(start)] = true;
    queue.push_back(start);
    let neighbors = |v: [usize; 3]| {
        let mut out = Vec::with_capacity(6);
        for (ax, d) in [(0, 1isize), (0, -1), (1, 1), (1, -1), (2, 1), (2, -1)] {
            let n = v[ax] as isize + d;
            if n >= 0 && (n as usize) < dims[ax] {
                let mut w = v;
                w[ax] = n as usize;
                out.push(w);
            }
        }
        out
    };
    while let Some(v) = queue.pop_front() {
        for n in neighbors(v) {
            let idx = grid.index(n);
            if seen[idx] {
                continue;
            }
            seen[idx] = true;
            match grid.state_index(idx) {
                VoxelState::Free => {
                    let c = grid.center_of(n);
                    if !grid.has_occupied_within(&c, cfg.robot_radius) {
                        // frontier: free with an unknown neighbor
                        if let Some(u) =
                            neighbors(n).into_iter().find(|m| grid.state_index(grid.index(*m)) == VoxelState::Unknown)
                        {
                            let dir = grid.center_of(u) - c;
                            return Some(Viewpoint {
                                pose: Pose::new(c, dir.y.atan2(dir.x)),
                                gain: 0,
                            });
                        }
                        queue.push_back(n);
                    }
                }
                _ => {}
            }
        }
    }
    None
}
