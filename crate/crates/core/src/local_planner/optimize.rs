//! Gradient descent with backtracking line search over the intermediate
//! control points. Guide points are recomputed whenever the collision set
//! changes; the endpoints (first/last `degree-1` control points) never move.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dynamic_map::{OccupancyGrid, SearchGrid, TrackedObstacle};
use crate::geometry::Vec3;
use crate::real::{real, Real};
use crate::{Error, Result};

use super::bspline::BsplineTrajectory;
use super::costs::{control_cost, dynamic_cost, smooth_cost, static_cost, CostGrad};
use super::guide::{collision_set, find_guide_points, GuidePointAssignment};
use super::region::DynamicRegion;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizerConfig<T: Real> {
    pub w_control: T,
    pub w_smooth: T,
    pub w_static: T,
    pub w_dynamic: T,
    pub lambda_vel: T,
    pub lambda_acc: T,
    pub v_max: T,
    pub a_max: T,
    /// Safe distance for the static collision cost (m).
    pub d_safe: T,
    /// Receding-horizon prediction length in knot steps.
    pub prediction_steps: usize,
    /// Safety inflation added to tracked obstacle radii (m).
    pub r_extra: T,
    pub max_iterations: usize,
    pub cost_tolerance: T,
    /// Optional wall-clock cutoff. Leaving it `None` keeps optimization
    /// deterministic; set it only for latency experiments.
    pub wall_clock_budget_ms: Option<f64>,
    pub robot_radius: T,
}

// Default weights balance the terms at the 0.15 s knot spacing used by the
// executor: the squared-jerk cost carries a (1/dt^3)^2 scale, so its weight
// must stay small for the collision terms to make headway under plain
// gradient descent.
impl<T: Real> Default for OptimizerConfig<T> {
    fn default() -> Self {
        Self {
            w_control: real(0.1),
            w_smooth: real(2e-4),
            w_static: real(100.0),
            w_dynamic: real(100.0),
            lambda_vel: T::one(),
            lambda_acc: real(4.0),
            // hard limits; the planners time trajectories for a 1.0 m/s
            // cruise, leaving headroom for local detours
            v_max: real(1.5),
            a_max: real(3.0),
            d_safe: real(0.8),
            prediction_steps: 8,
            r_extra: real(0.6),
            max_iterations: 100,
            cost_tolerance: real(1e-6),
            wall_clock_budget_ms: None,
            robot_radius: real(0.3),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub total: f64,
    pub control: f64,
    pub smooth: f64,
    pub static_collision: f64,
    pub dynamic_collision: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizeReport {
    pub success: bool,
    pub iterations: usize,
    pub final_cost: f64,
    pub trace: Vec<TraceRow>,
}

impl OptimizeReport {
    pub fn write_trace_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Serde(e.to_string()))?;
        for row in &self.trace {
            w.serialize(row).map_err(|e| Error::Serde(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(path.display().to_string(), e))
    }
}

/// Assigns guides for collision indices that do not have one yet; existing
/// entries are kept verbatim.
fn extend_guides<T: Real>(
    traj: &BsplineTrajectory<T>,
    search: &SearchGrid<T>,
    set: &[usize],
    guides: &mut GuidePointAssignment<T>,
) -> crate::Result<()> {
    let missing: Vec<usize> =
        set.iter().copied().filter(|i| guides.entries.iter().all(|e| e.cp_index != *i)).collect();
    if missing.is_empty() {
        return Ok(());
    }
    let fresh = find_guide_points(traj, search, set)?;
    for e in fresh.entries {
        if missing.contains(&e.cp_index) {
            guides.entries.push(e);
        }
    }
    guides.entries.sort_by_key(|e| e.cp_index);
    Ok(())
}

struct Objective<'a, T: Real> {
    regions: &'a [DynamicRegion<T>],
    cfg: &'a OptimizerConfig<T>,
}

impl<T: Real> Objective<'_, T> {
    fn eval(&self, traj: &BsplineTrajectory<T>, guides: &GuidePointAssignment<T>) -> (T, [T; 4], Vec<Vec3<T>>) {
        let c = control_cost(traj, self.cfg.v_max, self.cfg.a_max, self.cfg.lambda_vel, self.cfg.lambda_acc);
        let s = smooth_cost(traj);
        let st = static_cost(traj, guides, self.cfg.d_safe);
        let dy = dynamic_cost(traj, self.regions);
        let total = self.cfg.w_control * c.cost
            + self.cfg.w_smooth * s.cost
            + self.cfg.w_static * st.cost
            + self.cfg.w_dynamic * dy.cost;
        let n = traj.num_points();
        let mut grad = vec![Vec3::zeros(); n];
        let acc = |grad: &mut Vec<Vec3<T>>, part: &CostGrad<T>, w: T| {
            for i in 0..n {
                grad[i] += part.grad[i] * w;
            }
        };
        acc(&mut grad, &c, self.cfg.w_control);
        acc(&mut grad, &s, self.cfg.w_smooth);
        acc(&mut grad, &st, self.cfg.w_static);
        acc(&mut grad, &dy, self.cfg.w_dynamic);
        (total, [c.cost, s.cost, st.cost, dy.cost], grad)
    }
}

/// Optimizes the spline against the map snapshot. Returns the refined
/// trajectory and a report whose `success` flag certifies that dense samples
/// keep the robot radius clear of occupied voxels and never enter a dynamic
/// region.
pub fn optimize<T: Real>(
    initial: &BsplineTrajectory<T>,
    grid: &OccupancyGrid<T>,
    search: &SearchGrid<T>,
    tracks: &[TrackedObstacle<T>],
    cfg: &OptimizerConfig<T>,
) -> (BsplineTrajectory<T>, OptimizeReport) {
    let started = Instant::now();
    let horizon = real::<T>(cfg.prediction_steps as f64) * initial.knot_dt();
    let regions: Vec<DynamicRegion<T>> = tracks
        .iter()
        .filter(|t| t.dynamic)
        .map(|t| DynamicRegion::from_track(t, cfg.r_extra, horizon))
        .collect();

    let mut traj = initial.clone();
    let objective = Objective { regions: &regions, cfg };
    let (lo, hi) = traj.free_range();

    let mut current_set = collision_set(&traj, grid, cfg.d_safe);
    let mut guides = GuidePointAssignment::default();
    if extend_guides(&traj, search, &current_set, &mut guides).is_err() {
        let report = OptimizeReport { success: false, iterations: 0, final_cost: f64::NAN, trace: vec![] };
        return (traj, report);
    }

    let (mut cost, parts, mut grad) = objective.eval(&traj, &guides);
    let mut trace = vec![TraceRow {
        iteration: 0,
        total: cost.as_f64(),
        control: parts[0].as_f64(),
        smooth: parts[1].as_f64(),
        static_collision: parts[2].as_f64(),
        dynamic_collision: parts[3].as_f64(),
    }];

    let mut iterations = 0;
    let armijo = real::<T>(1e-4);
    for iter in 1..=cfg.max_iterations {
        if let Some(budget) = cfg.wall_clock_budget_ms {
            if started.elapsed().as_secs_f64() * 1e3 > budget {
                break;
            }
        }
        iterations = iter;
        // mask fixed endpoints
        for (i, g) in grad.iter_mut().enumerate() {
            if i < lo || i > hi {
                *g = Vec3::zeros();
            }
        }
        let g_sq: T = grad.iter().map(|g| g.norm_squared()).sum();
        let g_max = grad.iter().map(|g| g.norm()).fold(T::zero(), |a, b| a.max(b));
        if g_max < real(1e-12) {
            break;
        }
        // Backtracking line search under the current (frozen) guide
        // assignment; the initial step caps the largest control-point
        // displacement.
        let mut step = (real::<T>(0.3) / g_max).min(real(10.0));
        let mut accepted = false;
        let mut delta = T::zero();
        for _ in 0..40 {
            let mut cand = traj.clone();
            for i in lo..=hi {
                cand.control_points[i] -= grad[i] * step;
            }
            let (cand_cost, cand_parts, cand_grad) = objective.eval(&cand, &guides);
            if cand_cost <= cost - armijo * step * g_sq {
                delta = cost - cand_cost;
                traj = cand;
                cost = cand_cost;
                grad = cand_grad;
                trace.push(TraceRow {
                    iteration: iter,
                    total: cand_cost.as_f64(),
                    control: cand_parts[0].as_f64(),
                    smooth: cand_parts[1].as_f64(),
                    static_collision: cand_parts[2].as_f64(),
                    dynamic_collision: cand_parts[3].as_f64(),
                });
                accepted = true;
                break;
            }
            step *= real::<T>(0.5);
        }
        if !accepted {
            break;
        }
        // Control points that newly entered the collision set get guides
        // assigned; existing assignments stay frozen so the objective only
        // ever gains terms and the descent cannot cycle.
        let new_set = collision_set(&traj, grid, cfg.d_safe);
        if new_set != current_set {
            let grew = new_set.iter().any(|i| !current_set.contains(i));
            if grew {
                if extend_guides(&traj, search, &new_set, &mut guides).is_err() {
                    let report =
                        OptimizeReport { success: false, iterations: iter, final_cost: cost.as_f64(), trace };
                    return (traj, report);
                }
                let (c, _, g) = objective.eval(&traj, &guides);
                cost = c;
                grad = g;
            }
            current_set = new_set;
        } else if delta < cfg.cost_tolerance {
            break;
        }
    }

    let success = feasible(&traj, grid, &regions, cfg);
    (traj, OptimizeReport { success, iterations, final_cost: cost.as_f64(), trace })
}

/// Dense feasibility check: samples at a fifth of the knot spacing must stay
/// one robot radius away from occupied voxels and outside every dynamic
/// region at the matching prediction offset.
pub fn feasible<T: Real>(
    traj: &BsplineTrajectory<T>,
    grid: &OccupancyGrid<T>,
    regions: &[DynamicRegion<T>],
    cfg: &OptimizerConfig<T>,
) -> bool {
    let dt = traj.knot_dt() / real(5.0);
    let mut t = traj.start_time();
    let end = traj.end_time();
    while t <= end {
        let p = traj.position(t).unwrap_or_else(|_| traj.control_points[0]);
        if grid.has_occupied_within(&p, cfg.robot_radius) {
            return false;
        }
        let tau = t - traj.start_time();
        for r in regions {
            if r.at_offset(tau).distance(&p) > T::zero() {
                return false;
            }
        }
        t += dt;
    }
    true
}
