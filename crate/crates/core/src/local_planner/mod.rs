//! Gradient-based B-spline local planner: refines the static trajectory at
//! the replanning rate, bypassing static obstacles via circle-based guide
//! points and dynamic obstacles via receding-horizon distance fields.

mod bspline;
mod costs;
mod guide;
mod optimize;
mod region;

pub use bspline::BsplineTrajectory;
pub use costs::{control_cost, dynamic_cost, smooth_cost, static_cost, CostGrad};
pub use guide::{collision_set, find_guide_points, GuideEntry, GuidePointAssignment};
pub use optimize::{feasible, optimize, OptimizeReport, OptimizerConfig, TraceRow};
pub use region::DynamicRegion;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamic_map::{OccupancyConfig, OccupancyGrid, SearchGrid, UnknownPolicy};
    use crate::geometry::{Aabb, Vec3};
    use crate::global_planner::{min_snap, Boundary};

    fn open_grid() -> OccupancyGrid<f64> {
        let mut g = OccupancyGrid::new(
            Vec3::new(0.0, -3.0, 0.0),
            0.2,
            [60, 30, 20],
            OccupancyConfig::default(),
        );
        g.clear_boxes(&[Aabb::from_min_max(Vec3::new(0.0, -3.0, 0.0), Vec3::new(12.0, 3.0, 4.0))]);
        g
    }

    // timed so the rest-to-rest peak speed stays under the 1 m/s limit
    fn straight_reference(x0: f64, x1: f64) -> crate::global_planner::PolyTrajectory<f64> {
        min_snap(
            &[Vec3::new(x0, 0.0, 1.5), Vec3::new(x1, 0.0, 1.5)],
            &[2.0 * (x1 - x0).abs().max(1.0)],
            &Boundary::default(),
        )
        .unwrap()
    }

    // constant-velocity straight line as a piecewise polynomial
    fn linear_reference(x0: f64, x1: f64, speed: f64) -> crate::global_planner::PolyTrajectory<f64> {
        use crate::global_planner::{PolySegment, PolyTrajectory};
        let duration = (x1 - x0).abs() / speed;
        let mut coeffs = [[0.0; 8]; 3];
        coeffs[0][0] = x0;
        coeffs[0][1] = speed;
        coeffs[2][0] = 1.5;
        PolyTrajectory { segments: vec![PolySegment { start_time: 0.0, duration, coeffs }] }
    }

    #[test]
    fn obstacle_free_input_is_already_optimal() {
        let grid = open_grid();
        let search = SearchGrid::from_grid(&grid, 0.5, UnknownPolicy::Free);
        let reference = linear_reference(1.0, 9.0, 0.8);
        let spline = BsplineTrajectory::fit_reference(&reference, 0.0, 3.0, 0.15, 3).unwrap();
        let cfg = OptimizerConfig::default();
        let (out, report) = optimize(&spline, &grid, &search, &[], &cfg);
        assert!(report.success);
        for (a, b) in out.control_points.iter().zip(spline.control_points.iter()) {
            assert!((a - b).norm() < 1e-6, "control point moved by {}", (a - b).norm());
        }
    }

    #[test]
    fn wall_with_gap_yields_clear_trajectory() {
        let mut grid = open_grid();
        grid.occupy_box(&Aabb::from_min_max(Vec3::new(5.8, -3.0, 0.0), Vec3::new(6.2, 1.0, 4.0)));
        let search = SearchGrid::from_grid(&grid, 0.5, UnknownPolicy::Free);
        let reference = straight_reference(1.0, 11.0);
        let spline = BsplineTrajectory::fit_reference(&reference, 7.0, 6.0, 0.15, 3).unwrap();
        let cfg = OptimizerConfig { max_iterations: 200, ..OptimizerConfig::default() };
        let (out, report) = optimize(&spline, &grid, &search, &[], &cfg);
        assert!(report.success, "optimizer failed: final cost {}", report.final_cost);
        let mut t = out.start_time();
        while t <= out.end_time() {
            let p = out.position(t).unwrap();
            assert!(
                !grid.has_occupied_within(&p, cfg.robot_radius),
                "sample at t={t} within robot radius of the wall"
            );
            t += 0.02;
        }
    }

    #[test]
    fn endpoints_never_move() {
        let mut grid = open_grid();
        grid.occupy_box(&Aabb::from_min_max(Vec3::new(5.8, -3.0, 0.0), Vec3::new(6.2, 1.0, 4.0)));
        let search = SearchGrid::from_grid(&grid, 0.5, UnknownPolicy::Free);
        let reference = straight_reference(1.0, 11.0);
        let spline = BsplineTrajectory::fit_reference(&reference, 7.0, 6.0, 0.15, 3).unwrap();
        let (out, _) = optimize(&spline, &grid, &search, &[], &OptimizerConfig::default());
        let t0 = out.start_time();
        let t1 = out.end_time();
        assert!((out.position(t0).unwrap() - spline.position(t0).unwrap()).norm() < 1e-9);
        assert!((out.position(t1).unwrap() - spline.position(t1).unwrap()).norm() < 1e-9);
    }

    #[test]
    fn cost_trace_monotone_nonincreasing() {
        let mut grid = open_grid();
        grid.occupy_box(&Aabb::from_min_max(Vec3::new(5.8, -3.0, 0.0), Vec3::new(6.2, 1.0, 4.0)));
        let search = SearchGrid::from_grid(&grid, 0.5, UnknownPolicy::Free);
        let reference = straight_reference(1.0, 11.0);
        let spline = BsplineTrajectory::fit_reference(&reference, 7.0, 6.0, 0.15, 3).unwrap();
        let (_, report) = optimize(&spline, &grid, &search, &[], &OptimizerConfig::default());
        for w in report.trace.windows(2) {
            assert!(w[1].total <= w[0].total + 1e-12);
        }
    }

    #[test]
    fn pure_smoothing_reduces_jerk_cost() {
        let grid = open_grid();
        let search = SearchGrid::from_grid(&grid, 0.5, UnknownPolicy::Free);
        // noisy control polygon
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vec3<f64>> = (0..20)
            .map(|i| {
                Vec3::new(
                    1.0 + i as f64 * 0.3,
                    rng.gen_range(-0.3..0.3),
                    1.5 + rng.gen_range(-0.2..0.2),
                )
            })
            .collect();
        let spline = BsplineTrajectory::new(3, 0.1, 0.0, pts);
        let cfg = OptimizerConfig { w_dynamic: 0.0, ..OptimizerConfig::default() };
        let before = smooth_cost(&spline).cost;
        let (out, _) = optimize(&spline, &grid, &search, &[], &cfg);
        let after = smooth_cost(&out).cost;
        assert!(after <= before, "jerk cost grew: {before} -> {after}");
    }
}
