//! Circle-based guide points for the static collision cost.
//!
//! Control points closer than the safe distance to occupied voxels form
//! collision runs. For each run an A* bypass path is searched on the voxel
//! grid between the free control points bracketing the run; the n-th of N
//! collision points casts a ray at angle `n * 180 / (N+1)` degrees from the
//! chord joining the first and last collision points, in the plane spanned
//! by the chord and the bypass-path centroid, and its guide point is the
//! first intersection of that ray with the bypass path.

use crate::dynamic_map::{OccupancyGrid, SearchGrid};
use crate::geometry::Vec3;
use crate::real::{real, Real};
use crate::{Error, Result};

use super::bspline::BsplineTrajectory;

#[derive(Debug, Clone)]
pub struct GuideEntry<T: Real> {
    pub cp_index: usize,
    pub guide: Vec3<T>,
    /// Unit direction from the collision point toward the guide point at
    /// assignment time; defines the positive side of the signed distance.
    pub outward: Vec3<T>,
    pub angle_deg: T,
}

#[derive(Debug, Clone, Default)]
pub struct GuidePointAssignment<T: Real> {
    pub entries: Vec<GuideEntry<T>>,
}

/// Intermediate control points whose distance to the nearest occupied voxel
/// is below `d_safe` (the collision set), in index order.
pub fn collision_set<T: Real>(traj: &BsplineTrajectory<T>, grid: &OccupancyGrid<T>, d_safe: T) -> Vec<usize> {
    let (lo, hi) = traj.free_range();
    (lo..=hi)
        .filter(|&i| grid.distance_to_occupied_within(&traj.control_points[i], d_safe).is_some())
        .collect()
}

/// Assigns a guide point to every collision control point. Fails with
/// [`Error::GuideUnresolvable`] when no bypass path exists for some run.
pub fn find_guide_points<T: Real>(
    traj: &BsplineTrajectory<T>,
    search: &SearchGrid<T>,
    collisions: &[usize],
) -> Result<GuidePointAssignment<T>> {
    let mut entries = Vec::new();
    for run in runs(collisions) {
        let (a, b) = (run[0], run[run.len() - 1]);
        let anchor_before = traj.control_points[a - 1];
        let anchor_after = traj.control_points[b + 1];
        let path = search.astar(&anchor_before, &anchor_after).ok_or(Error::GuideUnresolvable)?;

        // chord and bypass plane
        let mut chord = traj.control_points[b] - traj.control_points[a];
        if chord.norm() < real(1e-6) {
            chord = anchor_after - anchor_before;
        }
        if chord.norm() < real(1e-6) {
            chord = Vec3::new(T::one(), T::zero(), T::zero());
        }
        let c_hat = chord.normalize();
        let centroid = path.iter().sum::<Vec3<T>>() / real::<T>(path.len() as f64);
        let raw_side: Vec3<T> = centroid - traj.control_points[a];
        let side = raw_side - c_hat * raw_side.dot(&c_hat);
        let m_hat = if side.norm() > real(1e-6) {
            side.normalize()
        } else {
            // centroid on the chord: pick any perpendicular
            let up = Vec3::new(T::zero(), T::zero(), T::one());
            let alt = c_hat.cross(&up);
            if alt.norm() > real(1e-6) {
                alt.normalize()
            } else {
                Vec3::new(T::zero(), T::one(), T::zero())
            }
        };

        // 2D projection onto the bypass plane with origin at the first
        // collision point
        let origin = traj.control_points[a];
        let to_2d = |p: &Vec3<T>| {
            let d = p - origin;
            (d.dot(&c_hat), d.dot(&m_hat))
        };
        let path_2d: Vec<(T, T)> = path.iter().map(|p| to_2d(p)).collect();

        let n_c = run.len();
        // Rays fan out from the chord midpoint, sweeping the semicircle from
        // the run entry side to the exit side, so the n-th collision point is
        // paired with a monotonically advancing station on the bypass path.
        let chord_mid = {
            let m = (traj.control_points[a] + traj.control_points[b]) * real::<T>(0.5);
            to_2d(&m)
        };
        for (order, &cp) in run.iter().enumerate() {
            let theta = T::pi() * real::<T>((order + 1) as f64) / real((n_c + 1) as f64);
            let ray_o = chord_mid;
            let ray_d = (-theta.cos(), theta.sin());
            let guide = match first_ray_polyline_hit(ray_o, ray_d, &path_2d) {
                Some((seg, s)) => path[seg] + (path[seg + 1] - path[seg]) * s,
                // no crossing in projection: fall back to the path point
                // farthest on the bypass side
                None => {
                    let far = path_2d
                        .iter()
                        .enumerate()
                        .max_by(|l, r| l.1 .1.partial_cmp(&r.1 .1).unwrap())
                        .map(|(i, _)| i)
                        .unwrap_or(0);
                    path[far]
                }
            };
            let mut outward = guide - traj.control_points[cp];
            if outward.norm() < real(1e-9) {
                outward = m_hat;
            } else {
                outward = outward.normalize();
            }
            entries.push(GuideEntry {
                cp_index: cp,
                guide,
                outward,
                angle_deg: theta * real::<T>(180.0) / T::pi(),
            });
        }
    }
    Ok(GuidePointAssignment { entries })
}

fn runs(sorted: &[usize]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for &i in sorted {
        match out.last_mut() {
            Some(run) if *run.last().unwrap() + 1 == i => run.push(i),
            _ => out.push(vec![i]),
        }
    }
    out
}

/// First intersection (smallest ray parameter) of a 2D ray with a polyline;
/// returns the segment index and the parameter along it.
fn first_ray_polyline_hit<T: Real>(
    o: (T, T),
    d: (T, T),
    polyline: &[(T, T)],
) -> Option<(usize, T)> {
    let mut best: Option<(T, usize, T)> = None;
    for (i, w) in polyline.windows(2).enumerate() {
        let (ax, ay) = w[0];
        let (bx, by) = w[1];
        let (ex, ey) = (bx - ax, by - ay);
        // o + t d = a + s e
        let det = d.0 * (-ey) - d.1 * (-ex);
        if det.abs() < real(1e-12) {
            continue;
        }
        let (rx, ry) = (ax - o.0, ay - o.1);
        let t = (rx * (-ey) - ry * (-ex)) / det;
        let s = (d.0 * ry - d.1 * rx) / det;
        if t >= T::zero() && (-real::<T>(1e-9)..=real::<T>(1.0 + 1e-9)).contains(&s) {
            let s = s.max(T::zero()).min(T::one());
            if best.map_or(true, |(bt, _, _)| t < bt) {
                best = Some((t, i, s));
            }
        }
    }
    best.map(|(_, i, s)| (i, s))
}
