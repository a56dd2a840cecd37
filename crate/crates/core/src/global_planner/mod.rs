//! Mid-level static planner: RRT* waypoint search on the occupancy snapshot
//! followed by corridor-constrained minimum-snap polynomial trajectories.

mod min_snap;
mod rrt;
mod time_alloc;

pub use min_snap::{min_snap, min_snap_in_corridor, Boundary, Corridor, PolySegment, PolyTrajectory};
pub use rrt::{rrt_star, rrt_star_traced, shortcut, RrtParams, WaypointPath};
pub use time_alloc::{allocate_times, dedup_waypoints, trapezoid_duration};

use std::path::Path;

use rand_chacha::ChaCha8Rng;

use crate::dynamic_map::SearchGrid;
use crate::geometry::{Aabb, Vec3};
use crate::real::{real, Real};
use crate::{Error, Result};

/// Static planning pipeline: RRT* path, trapezoidal time allocation, and
/// corridor-constrained minimum snap. The corridor margin doubles as the
/// safety margin for the final dense collision re-check.
#[allow(clippy::too_many_arguments)]
pub fn plan_static<T: Real>(
    search: &SearchGrid<T>,
    grid: &crate::dynamic_map::OccupancyGrid<T>,
    start: Vec3<T>,
    goal: Vec3<T>,
    sample_bounds: &Aabb<T>,
    params: &RrtParams<T>,
    cruise: T,
    hard_v_max: T,
    a_max: T,
    corridor_margin: T,
    robot_radius: T,
    boundary: &Boundary<T>,
    rng: &mut ChaCha8Rng,
) -> Result<PolyTrajectory<T>> {
    let path = rrt_star(search, start, goal, sample_bounds, params, rng)?;
    let points = dedup_waypoints(&path.points, real(1e-6));
    if points.len() < 2 {
        return Err(Error::NoPath);
    }
    // split long straight runs so the interpolated speed profile stays close
    // to the cruise speed instead of one long rest-to-rest arc
    let max_seg = real::<T>(6.0);
    let mut points = {
        let mut out = vec![points[0]];
        for w in points.windows(2) {
            let len = (w[1] - w[0]).norm();
            let pieces = (len / max_seg).ceil().as_f64().max(1.0) as usize;
            for k in 1..=pieces {
                out.push(w[0] + (w[1] - w[0]) * (real::<T>(k as f64) / real(pieces as f64)));
            }
        }
        out
    };
    points = dedup_waypoints(&points, real(1e-6));
    let mut durations = allocate_times(&points, cruise, a_max);
    let corridor = Corridor::around(&points, corridor_margin);
    let mut traj = min_snap_in_corridor(&points, &durations, &corridor, boundary, 6)?;

    // Minimum snap overshoots the allocator's average speed (up to ~1.9x on
    // rest-to-rest segments); stretch the timing only when the sampled peak
    // breaks the hard limit, so cruise headroom stays usable.
    for _ in 0..3 {
        let mut peak = T::zero();
        let mut t = traj.start_time();
        while t <= traj.end_time() {
            peak = peak.max(traj.sample(t).1.norm());
            t += real(0.05);
        }
        if peak <= hard_v_max * real::<T>(0.98) {
            break;
        }
        let scale = peak / (hard_v_max * real::<T>(0.95));
        for d in &mut durations {
            *d *= scale;
        }
        traj = min_snap_in_corridor(&points, &durations, &corridor, boundary, 6)?;
    }

    // dense feasibility gate: 1 cm spatial sampling against the occupied
    // voxels with the physical safety margin (unknown space is the local
    // planner's concern, not a hard failure here)
    let step = real::<T>(0.01);
    let mut t = traj.start_time();
    let end = traj.end_time();
    while t < end {
        if grid.has_occupied_within(&traj.position(t), robot_radius) {
            return Err(Error::NoPath);
        }
        t += step / hard_v_max.max(real(0.1));
    }
    Ok(traj)
}

/// Writes `t, x, y, z, vx, vy, vz` sampled at fixed `dt`.
pub fn export_trajectory_csv<T: Real>(traj: &PolyTrajectory<T>, dt: T, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Serde(e.to_string()))?;
    w.write_record(["t", "x", "y", "z", "vx", "vy", "vz"]).map_err(|e| Error::Serde(e.to_string()))?;
    for row in traj.sample_rows(dt) {
        let rec: Vec<String> = row.iter().map(|v| format!("{}", v.as_f64())).collect();
        w.write_record(&rec).map_err(|e| Error::Serde(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamic_map::{OccupancyConfig, OccupancyGrid, UnknownPolicy};
    use rand::SeedableRng;

    fn open_grid() -> OccupancyGrid<f64> {
        // 20 x 8 x 6 m volume, all observed free
        let mut g = OccupancyGrid::new(Vec3::new(0.0, -4.0, 0.0), 0.2, [100, 40, 30], OccupancyConfig::default());
        g.clear_boxes(&[Aabb::from_min_max(Vec3::new(0.0, -4.0, 0.0), Vec3::new(20.0, 4.0, 6.0))]);
        g
    }

    fn search(grid: &OccupancyGrid<f64>) -> SearchGrid<f64> {
        SearchGrid::from_grid(grid, 0.4, UnknownPolicy::Blocked)
    }

    #[test]
    fn empty_grid_gives_straight_two_point_path() {
        let grid = open_grid();
        let s = search(&grid);
        let start = Vec3::new(1.0, 0.0, 1.5);
        let goal = Vec3::new(11.0, 0.0, 1.5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let path = rrt_star(&s, start, goal, &grid.bounds(), &RrtParams::default(), &mut rng).unwrap();
        assert_eq!(path.points.len(), 2, "shortcutting should leave only the endpoints");
        assert!((path.points[0] - start).norm() < 1e-9);
        assert!((path.points[1] - goal).norm() < 1e-9);
        assert!((path.total_length - 10.0).abs() < 1e-6);
    }

    #[test]
    fn wall_with_gap_is_threaded_near_optimally() {
        let mut grid = open_grid();
        // wall at x=10 with a 1.5 m gap around y=1.0, z free
        grid.occupy_box(&Aabb::from_min_max(Vec3::new(9.8, -4.0, 0.0), Vec3::new(10.2, 0.25, 6.0)));
        grid.occupy_box(&Aabb::from_min_max(Vec3::new(9.8, 1.75, 0.0), Vec3::new(10.2, 4.0, 6.0)));
        let s = search(&grid);
        let start = Vec3::new(2.0, 0.0, 1.5);
        let goal = Vec3::new(18.0, 0.0, 1.5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let path = rrt_star(&s, start, goal, &grid.bounds(), &RrtParams::default(), &mut rng).unwrap();
        // passes through the gap band at x=10
        let mut crossed = false;
        for w in path.points.windows(2) {
            if (w[0].x - 10.0) * (w[1].x - 10.0) <= 0.0 {
                let t = (10.0 - w[0].x) / (w[1].x - w[0].x);
                let y = w[0].y + t * (w[1].y - w[0].y);
                assert!((0.25..=1.75).contains(&y), "crossed the wall at y={y}");
                crossed = true;
            }
        }
        assert!(crossed);
        let oracle = s.shortest_path_length(&start, &goal).unwrap();
        assert!(
            path.total_length <= 1.3 * oracle,
            "rrt* length {} vs grid oracle {}",
            path.total_length,
            oracle
        );
    }

    #[test]
    fn enclosed_goal_fails_within_budget() {
        let mut grid = open_grid();
        let goal = Vec3::new(15.0, 0.0, 1.5);
        grid.occupy_box(&Aabb::new(goal, Vec3::new(1.2, 1.2, 1.2)));
        // goal itself is inside the occupied block
        let s = search(&grid);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let params = RrtParams { max_iters: 800, ..RrtParams::default() };
        let res = rrt_star(&s, Vec3::new(2.0, 0.0, 1.5), goal, &grid.bounds(), &params, &mut rng);
        assert!(matches!(res, Err(Error::NoPath)));
    }

    #[test]
    fn solution_cost_is_nonincreasing() {
        let mut grid = open_grid();
        grid.occupy_box(&Aabb::from_min_max(Vec3::new(9.8, -4.0, 0.0), Vec3::new(10.2, 2.0, 6.0)));
        let s = search(&grid);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let (_, trace) = rrt_star_traced(
            &s,
            Vec3::new(2.0, 0.0, 1.5),
            Vec3::new(18.0, 0.0, 1.5),
            &grid.bounds(),
            &RrtParams::default(),
            &mut rng,
        )
        .unwrap();
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "cost increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn plan_static_end_to_end_is_collision_free() {
        let mut grid = open_grid();
        grid.occupy_box(&Aabb::from_min_max(Vec3::new(9.8, -4.0, 0.0), Vec3::new(10.2, 1.0, 6.0)));
        let s = search(&grid);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let traj = plan_static(
            &s,
            &grid,
            Vec3::new(2.0, 0.0, 1.5),
            Vec3::new(18.0, 0.0, 1.5),
            &grid.bounds(),
            &RrtParams::default(),
            1.0,
            1.5,
            2.0,
            0.4,
            0.3,
            &Boundary::default(),
            &mut rng,
        )
        .unwrap();
        let mut t = 0.0;
        while t < traj.end_time() {
            let p = traj.position(t);
            assert!(
                grid.distance_to_occupied_within(&p, 0.3).is_none(),
                "trajectory too close to occupied at t={t}"
            );
            t += 0.02;
        }
    }

    #[test]
    fn trajectory_csv_roundtrip() {
        let wps = vec![Vec3::new(0.0, 0.0, 1.0), Vec3::new(4.0, 1.0, 1.5)];
        let traj = min_snap(&wps, &[3.0], &Boundary::default()).unwrap();
        let dir = std::env::temp_dir().join("tunnelnav_traj_test.csv");
        export_trajectory_csv(&traj, 0.1, &dir).unwrap();
        let mut rdr = csv::Reader::from_path(&dir).unwrap();
        let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 31);
        let first: Vec<f64> = rows[0].iter().map(|s| s.parse().unwrap()).collect();
        assert!((first[1] - 0.0).abs() < 1e-9);
        std::fs::remove_file(dir).ok();
    }
}
