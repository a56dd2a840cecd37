//! Trapezoidal-profile time allocation for waypoint segments.

use crate::geometry::Vec3;
use crate::real::{real, Real};

/// Per-segment durations for a rest-to-rest trapezoidal speed profile under
/// the velocity/acceleration limits. Degenerate (near zero length) segments
/// must be removed beforehand.
pub fn allocate_times<T: Real>(points: &[Vec3<T>], v_max: T, a_max: T) -> Vec<T> {
    points
        .windows(2)
        .map(|w| {
            let len = (w[1] - w[0]).norm();
            trapezoid_duration(len, v_max, a_max)
        })
        .collect()
}

/// Duration of a rest-to-rest move of length `len`: full trapezoid when the
/// segment is long enough to reach `v_max`, otherwise a triangular profile.
pub fn trapezoid_duration<T: Real>(len: T, v_max: T, a_max: T) -> T {
    let accel_len = v_max * v_max / a_max;
    if len >= accel_len {
        len / v_max + v_max / a_max
    } else {
        real::<T>(2.0) * (len / a_max).sqrt()
    }
}

/// Removes consecutive duplicates (within `eps`) from a waypoint list.
pub fn dedup_waypoints<T: Real>(points: &[Vec3<T>], eps: T) -> Vec<Vec3<T>> {
    let mut out: Vec<Vec3<T>> = Vec::with_capacity(points.len());
    for p in points {
        if out.last().map_or(true, |q| (p - q).norm() > eps) {
            out.push(*p);
        }
    }
    out
}
