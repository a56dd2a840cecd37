//! The four optimization costs: control limits, smoothness, static
//! collision (guide points), and dynamic collision (receding-horizon
//! regions). Each returns the cost and its analytic gradient per control
//! point; gradients of the clipped terms vanish outside the active set.

use crate::geometry::Vec3;
use crate::real::{real, Real};

use super::bspline::BsplineTrajectory;
use super::guide::GuidePointAssignment;
use super::region::DynamicRegion;

#[derive(Debug, Clone)]
pub struct CostGrad<T: Real> {
    pub cost: T,
    pub grad: Vec<Vec3<T>>,
}

impl<T: Real> CostGrad<T> {
    fn zeros(n: usize) -> Self {
        Self { cost: T::zero(), grad: vec![Vec3::zeros(); n] }
    }
}

/// Index range (inclusive) of difference terms of the given stencil width
/// whose control points are all intermediate (optimizable). The clamped
/// boundary control points carry the pinned endpoint state, whose spacing is
/// intentionally non-uniform, so only the fully interior differences are
/// meaningful under the uniform-knot formulas.
fn interior_terms<T: Real>(traj: &BsplineTrajectory<T>, stencil: usize) -> std::ops::RangeInclusive<usize> {
    let (lo, hi) = traj.free_range();
    if hi + 1 < lo + stencil {
        #[allow(clippy::reversed_empty_ranges)]
        return 1..=0;
    }
    lo..=(hi + 1 - stencil)
}

/// Hinge penalty on control-point velocities and accelerations beyond the
/// limits; zero whenever every component is within bounds.
pub fn control_cost<T: Real>(
    traj: &BsplineTrajectory<T>,
    v_max: T,
    a_max: T,
    lambda_vel: T,
    lambda_acc: T,
) -> CostGrad<T> {
    let n = traj.num_points();
    let dt = traj.knot_dt();
    let mut out = CostGrad::zeros(n);
    let two = real::<T>(2.0);

    for i in interior_terms(traj, 2) {
        let v = traj.velocity_cp(i);
        for axis in 0..3 {
            let mag = v[axis].abs();
            let excess = mag - v_max;
            if excess > T::zero() {
                out.cost += excess * excess / lambda_vel;
                let sign = if v[axis] >= T::zero() { T::one() } else { -T::one() };
                let d = two * excess * sign / (lambda_vel * dt);
                out.grad[i][axis] -= d;
                out.grad[i + 1][axis] += d;
            }
        }
    }
    let dt2 = dt * dt;
    for i in interior_terms(traj, 3) {
        let a = traj.accel_cp(i);
        for axis in 0..3 {
            let mag = a[axis].abs();
            let excess = mag - a_max;
            if excess > T::zero() {
                out.cost += excess * excess / lambda_acc;
                let sign = if a[axis] >= T::zero() { T::one() } else { -T::one() };
                let d = two * excess * sign / (lambda_acc * dt2);
                out.grad[i][axis] += d;
                out.grad[i + 1][axis] -= d * two;
                out.grad[i + 2][axis] += d;
            }
        }
    }
    out
}

/// Sum of squared control-point jerks over the interior differences.
pub fn smooth_cost<T: Real>(traj: &BsplineTrajectory<T>) -> CostGrad<T> {
    let n = traj.num_points();
    let dt = traj.knot_dt();
    let dt3 = dt * dt * dt;
    let mut out = CostGrad::zeros(n);
    if n < 4 {
        return out;
    }
    let two = real::<T>(2.0);
    let three = real::<T>(3.0);
    for i in interior_terms(traj, 4) {
        let j = traj.jerk_cp(i);
        out.cost += j.norm_squared();
        let base = j * (two / dt3);
        out.grad[i] -= base;
        out.grad[i + 1] += base * three;
        out.grad[i + 2] -= base * three;
        out.grad[i + 3] += base;
    }
    out
}

/// Clipped cubic penalty on the signed distance from each collision control
/// point to its guide point; the guide-point direction fixed at assignment
/// time defines the positive (outside) half space.
pub fn static_cost<T: Real>(
    traj: &BsplineTrajectory<T>,
    guides: &GuidePointAssignment<T>,
    d_safe: T,
) -> CostGrad<T> {
    let mut out = CostGrad::zeros(traj.num_points());
    let three = real::<T>(3.0);
    for entry in &guides.entries {
        let p = traj.control_points[entry.cp_index];
        let diff = p - entry.guide;
        let dist = diff.norm();
        let (signed, dir) = if dist > real(1e-9) {
            let sign = if diff.dot(&entry.outward) >= T::zero() { T::one() } else { -T::one() };
            (sign * dist, diff * (sign / dist))
        } else {
            (T::zero(), entry.outward)
        };
        let violation = d_safe - signed;
        if violation > T::zero() {
            out.cost += violation * violation * violation;
            out.grad[entry.cp_index] -= dir * (three * violation * violation);
        }
    }
    out
}

/// Cubic penalty on the penetration depth of each control point into every
/// dynamic region, each point checked against the region advanced to its own
/// time offset along the spline.
pub fn dynamic_cost<T: Real>(traj: &BsplineTrajectory<T>, regions: &[DynamicRegion<T>]) -> CostGrad<T> {
    let n = traj.num_points();
    let dt = traj.knot_dt();
    let mut out = CostGrad::zeros(n);
    let three = real::<T>(3.0);
    let (lo, hi) = traj.free_range();
    for region in regions {
        for i in lo..=hi {
            let tau = real::<T>(i as f64) * dt;
            let shifted = region.at_offset(tau);
            let (depth, grad) = shifted.distance_and_gradient(&traj.control_points[i]);
            if depth > T::zero() {
                out.cost += depth * depth * depth;
                out.grad[i] += grad * (three * depth * depth);
            }
        }
    }
    out
}
