//! Inspection-target detection and zigzag path generation for the excavation
//! front.

use crate::dynamic_map::VoxelState;
use crate::{Error, OccupancyGrid, Pose, Result, Vec3};

use super::MissionConfig;

/// A waypoint of the inspection sweep with its commanded camera yaw.
#[derive(Debug, Clone, Copy)]
pub struct InspectionWaypoint {
    pub position: Vec3,
    pub yaw: f64,
}

#[derive(Debug, Clone, Default)]
pub struct InspectionPath {
    pub waypoints: Vec<InspectionWaypoint>,
}

impl InspectionPath {
    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| (w[1].position - w[0].position).norm()).sum()
    }
}

/// Scans y-z slabs ahead of the robot for one whose occupied voxels cover at
/// least the configured fraction of the tunnel cross-section; returns the
/// wall plane's x coordinate when the robot is within lookahead of it.
pub fn detect_inspection_target(
    grid: &OccupancyGrid,
    robot: &Pose,
    cfg: &MissionConfig,
) -> Option<f64> {
    let res = grid.resolution();
    let dims = grid.dims();
    let x0 = robot.position.x.max(grid.origin().x);
    let first_slab = ((x0 - grid.origin().x) / res) as usize;
    let last_slab = (((x0 + cfg.wall_lookahead - grid.origin().x) / res) as usize).min(dims[0].saturating_sub(2));

    for i in first_slab..last_slab {
        let mut occupied = 0usize;
        let mut total = 0usize;
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                let c = grid.center_of([i, j, k]);
                if c.y.abs() > cfg.cross_section_width * 0.5 || c.z > cfg.cross_section_height {
                    continue;
                }
                // two-voxel-thick window
                total += 1;
                let a = grid.state_index(grid.index([i, j, k])) == VoxelState::Occupied;
                let b = grid.state_index(grid.index([i + 1, j, k])) == VoxelState::Occupied;
                if a || b {
                    occupied += 1;
                }
            }
        }
        if total > 0 && occupied as f64 / total as f64 >= cfg.wall_coverage_fraction {
            let wall_x = grid.origin().x + (i as f64 + 0.5) * res;
            if wall_x - robot.position.x <= cfg.wall_lookahead {
                return Some(wall_x);
            }
        }
    }
    None
}

/// Fraction of the inspection-plane cross-section that is known (observed).
pub fn known_fraction_at(grid: &OccupancyGrid, plane_x: f64, cfg: &MissionConfig) -> f64 {
    let res = grid.resolution();
    let dims = grid.dims();
    let i = (((plane_x - grid.origin().x) / res) as usize).min(dims[0].saturating_sub(2));
    let mut known = 0usize;
    let mut total = 0usize;
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            let c = grid.center_of([i, j, k]);
            if c.y.abs() > cfg.cross_section_width * 0.5 || c.z > cfg.cross_section_height {
                continue;
            }
            total += 1;
            if grid.state_index(grid.index([i, j, k])) != VoxelState::Unknown
                || grid.state_index(grid.index([i + 1, j, k])) != VoxelState::Unknown
            {
                known += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        known as f64 / total as f64
    }
}

/// Boustrophedon sweep over the wall at standoff distance, camera facing the
/// wall, followed by a rectangular fringe pass with the camera yawed toward
/// the wall corners. Fails when the map near the wall is not known enough or
/// a path point is not collision-free.
pub fn inspection_path(
    grid: &OccupancyGrid,
    wall_x: f64,
    cfg: &MissionConfig,
) -> Result<InspectionPath> {
    let plane_x = wall_x - cfg.standoff;
    if known_fraction_at(grid, plane_x, cfg) < cfg.known_fraction_threshold {
        return Err(Error::MapKnowledgeInsufficient);
    }

    let half_w = cfg.cross_section_width * 0.5;
    let m = cfg.wall_margin;
    let y_lo = -half_w + m;
    let y_hi = half_w - m;
    let z_lo = m;
    let z_hi = cfg.cross_section_height - m;

    let n_legs = ((z_hi - z_lo) / cfg.zigzag_spacing).ceil() as usize + 1;
    let dz = (z_hi - z_lo) / (n_legs - 1).max(1) as f64;
    let mut waypoints = Vec::new();
    let sample_dy = 1.0;
    for leg in 0..n_legs {
        let z = z_lo + leg as f64 * dz;
        let (from, to) = if leg % 2 == 0 { (y_lo, y_hi) } else { (y_hi, y_lo) };
        let n = ((to - from).abs() / sample_dy).ceil() as usize;
        for k in 0..=n {
            let y = from + (to - from) * k as f64 / n.max(1) as f64;
            waypoints.push(InspectionWaypoint { position: Vec3::new(plane_x, y, z), yaw: 0.0 });
        }
    }

    // rectangular fringe pass, 45 degrees toward the wall corners on the
    // vertical edges
    let fringe = [
        (Vec3::new(plane_x, y_hi, z_hi), -cfg.fringe_yaw_deg.to_radians()),
        (Vec3::new(plane_x, y_hi, z_lo), -cfg.fringe_yaw_deg.to_radians()),
        (Vec3::new(plane_x, y_lo, z_lo), cfg.fringe_yaw_deg.to_radians()),
        (Vec3::new(plane_x, y_lo, z_hi), cfg.fringe_yaw_deg.to_radians()),
        (Vec3::new(plane_x, y_hi, z_hi), 0.0),
    ];
    for (position, yaw) in fringe {
        waypoints.push(InspectionWaypoint { position, yaw });
    }

    for wp in &waypoints {
        if grid.query(&wp.position) != VoxelState::Free
            || grid.has_occupied_within(&wp.position, cfg.robot_radius)
        {
            return Err(Error::MapKnowledgeInsufficient);
        }
    }
    Ok(InspectionPath { waypoints })
}

/// Boresight coverage fraction of the wall plane by a set of camera poses:
/// a wall cell is covered when some pose's optical axis intersects the wall
/// within `spacing / sqrt(2)` of it.
pub fn wall_coverage(poses: &[Pose], wall_x: f64, cfg: &MissionConfig) -> f64 {
    let radius = cfg.zigzag_spacing / 2f64.sqrt();
    let cell = 0.25;
    let half_w = cfg.cross_section_width * 0.5;
    let mut covered = 0usize;
    let mut total = 0usize;
    let hits: Vec<(f64, f64)> = poses
        .iter()
        .filter_map(|p| {
            let f = p.forward();
            if f.x.abs() < 1e-6 {
                return None;
            }
            let t = (wall_x - p.position.x) / f.x;
            (t > 0.0).then(|| {
                let q = p.position + f * t;
                (q.y, q.z)
            })
        })
        .collect();
    let ny = (cfg.cross_section_width / cell) as usize;
    let nz = (cfg.cross_section_height / cell) as usize;
    for kz in 0..nz {
        for ky in 0..ny {
            let y = -half_w + (ky as f64 + 0.5) * cell;
            let z = (kz as f64 + 0.5) * cell;
            total += 1;
            if hits.iter().any(|(hy, hz)| {
                let dy = hy - y;
                let dz = hz - z;
                (dy * dy + dz * dz).sqrt() <= radius
            }) {
                covered += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        covered as f64 / total as f64
    }
}
