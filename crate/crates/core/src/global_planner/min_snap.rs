//! Minimum-snap piecewise polynomials through waypoints.
//!
//! Degree-7 segments per axis, minimizing the integrated squared fourth
//! derivative subject to waypoint interpolation, fixed boundary velocity and
//! acceleration, and C3 continuity at junctions. Solved in closed form by
//! partitioning junction derivatives into fixed and free sets and minimizing
//! the quadratic cost over the free ones; segments are normalized to unit
//! time internally so the only runtime inversion is one constant 8x8 matrix.

use nalgebra::DMatrix;

use crate::geometry::{component_max, component_min, Aabb, Vec3};
use crate::real::{real, Real};
use crate::{Error, Result};

const DEGREE: usize = 7;
const NCOEF: usize = DEGREE + 1;
/// Derivative orders carried per junction: position..jerk.
const NDERIV: usize = 4;

/// One polynomial segment with per-axis coefficients in local time
/// `t - start_time`, ascending powers.
#[derive(Debug, Clone)]
pub struct PolySegment<T: Real> {
    pub start_time: T,
    pub duration: T,
    pub coeffs: [[T; NCOEF]; 3],
}

impl<T: Real> PolySegment<T> {
    fn eval_axis(&self, axis: usize, local_t: T, order: usize) -> T {
        let c = &self.coeffs[axis];
        let mut acc = T::zero();
        for i in (order..NCOEF).rev() {
            let mut factor = T::one();
            for k in 0..order {
                factor *= real::<T>((i - k) as f64);
            }
            acc = acc * local_t + c[i] * factor;
        }
        acc
    }

    fn eval(&self, local_t: T, order: usize) -> Vec3<T> {
        Vec3::new(
            self.eval_axis(0, local_t, order),
            self.eval_axis(1, local_t, order),
            self.eval_axis(2, local_t, order),
        )
    }
}

/// Piecewise polynomial trajectory; the mid-level planner's output.
#[derive(Debug, Clone)]
pub struct PolyTrajectory<T: Real> {
    pub segments: Vec<PolySegment<T>>,
}

impl<T: Real> PolyTrajectory<T> {
    pub fn start_time(&self) -> T {
        self.segments.first().map(|s| s.start_time).unwrap_or_else(T::zero)
    }

    pub fn end_time(&self) -> T {
        self.segments.last().map(|s| s.start_time + s.duration).unwrap_or_else(T::zero)
    }

    pub fn duration(&self) -> T {
        self.end_time() - self.start_time()
    }

    fn segment_at(&self, t: T) -> &PolySegment<T> {
        let mut idx = self.segments.len() - 1;
        for (i, s) in self.segments.iter().enumerate() {
            if t < s.start_time + s.duration {
                idx = i;
                break;
            }
        }
        &self.segments[idx]
    }

    /// Position/velocity/acceleration with `t` clamped to the domain.
    pub fn sample(&self, t: T) -> (Vec3<T>, Vec3<T>, Vec3<T>) {
        let t = t.max(self.start_time()).min(self.end_time());
        let seg = self.segment_at(t);
        let local = t - seg.start_time;
        (seg.eval(local, 0), seg.eval(local, 1), seg.eval(local, 2))
    }

    pub fn position(&self, t: T) -> Vec3<T> {
        self.sample(t).0
    }

    /// Shifts the whole trajectory to start at `t0`.
    pub fn shift_to(mut self, t0: T) -> Self {
        let offset = t0 - self.start_time();
        for seg in &mut self.segments {
            seg.start_time += offset;
        }
        self
    }

    /// Integrated squared snap over the whole trajectory (analytic).
    pub fn snap_cost(&self) -> T {
        let mut total = T::zero();
        for seg in &self.segments {
            for axis in 0..3 {
                let c = &seg.coeffs[axis];
                for i in 4..NCOEF {
                    for j in 4..NCOEF {
                        let fi = falling_factorial::<T>(i, 4);
                        let fj = falling_factorial::<T>(j, 4);
                        let p = (i + j - 8) as i32;
                        let pow = seg.duration.powi(p + 1) / real::<T>((p + 1) as f64);
                        total += fi * fj * c[i] * c[j] * pow;
                    }
                }
            }
        }
        total
    }

    /// Samples `t, x, y, z, vx, vy, vz` rows at `dt` spacing.
    pub fn sample_rows(&self, dt: T) -> Vec<[T; 7]> {
        let mut rows = Vec::new();
        let mut t = self.start_time();
        let end = self.end_time();
        while t <= end + dt * real::<T>(0.5) {
            let (p, v, _) = self.sample(t.min(end));
            rows.push([t.min(end), p.x, p.y, p.z, v.x, v.y, v.z]);
            t += dt;
        }
        rows
    }
}

fn falling_factorial<T: Real>(i: usize, order: usize) -> T {
    let mut f = 1.0;
    for k in 0..order {
        f *= (i - k) as f64;
    }
    real(f)
}

/// Boundary derivative constraints for the trajectory ends.
#[derive(Debug, Clone, Copy)]
pub struct Boundary<T: Real> {
    pub start_velocity: Vec3<T>,
    pub start_acceleration: Vec3<T>,
    pub end_velocity: Vec3<T>,
    pub end_acceleration: Vec3<T>,
}

impl<T: Real> Default for Boundary<T> {
    fn default() -> Self {
        Self {
            start_velocity: Vec3::zeros(),
            start_acceleration: Vec3::zeros(),
            end_velocity: Vec3::zeros(),
            end_acceleration: Vec3::zeros(),
        }
    }
}

/// Endpoint-derivative map `b = A c` for a unit-duration degree-7 segment,
/// rows `[p,v,a,j](0)` then `[p,v,a,j](1)`.
fn unit_endpoint_matrix<T: Real>() -> DMatrix<T> {
    let mut a = DMatrix::zeros(NCOEF, NCOEF);
    for o in 0..NDERIV {
        a[(o, o)] = falling_factorial::<T>(o, o);
        for i in o..NCOEF {
            a[(NDERIV + o, i)] = falling_factorial::<T>(i, o);
        }
    }
    a
}

/// Snap Gram matrix for a unit-duration segment.
fn unit_snap_matrix<T: Real>() -> DMatrix<T> {
    let mut q = DMatrix::zeros(NCOEF, NCOEF);
    for i in 4..NCOEF {
        for j in 4..NCOEF {
            let p = (i + j - 8) as f64;
            q[(i, j)] = falling_factorial::<T>(i, 4) * falling_factorial::<T>(j, 4) / real(p + 1.0);
        }
    }
    q
}

/// Solves the minimum-snap problem through `waypoints` with the given
/// per-segment `durations` and boundary conditions.
pub fn min_snap<T: Real>(
    waypoints: &[Vec3<T>],
    durations: &[T],
    boundary: &Boundary<T>,
) -> Result<PolyTrajectory<T>> {
    let n_seg = durations.len();
    if waypoints.len() < 2 || waypoints.len() != n_seg + 1 {
        return Err(Error::Config(format!(
            "min_snap needs >= 2 waypoints with one duration per segment (got {} waypoints, {} durations)",
            waypoints.len(),
            n_seg
        )));
    }
    if durations.iter().any(|d| *d <= T::zero()) {
        return Err(Error::Config("segment durations must be positive".into()));
    }

    let a1 = unit_endpoint_matrix::<T>();
    let a1_inv = a1.clone().try_inverse().expect("unit endpoint matrix is invertible");
    let h_unit = a1_inv.transpose() * unit_snap_matrix::<T>() * &a1_inv;

    // Global variables: NDERIV derivatives per junction, physical units.
    let n_junc = n_seg + 1;
    let n_vars = NDERIV * n_junc;
    let gidx = |junction: usize, order: usize| NDERIV * junction + order;

    // Assemble H = sum_s D_s H_unit D_s / T_s^7 scattered into global vars.
    let mut h = DMatrix::<T>::zeros(n_vars, n_vars);
    for s in 0..n_seg {
        let t_s = durations[s];
        let mut d_scale = [T::one(); NCOEF];
        for o in 0..NDERIV {
            d_scale[o] = t_s.powi(o as i32);
            d_scale[NDERIV + o] = t_s.powi(o as i32);
        }
        let w = T::one() / t_s.powi(7);
        for r in 0..NCOEF {
            let gr = gidx(s + r / NDERIV, r % NDERIV);
            for c in 0..NCOEF {
                let gc = gidx(s + c / NDERIV, c % NDERIV);
                h[(gr, gc)] += h_unit[(r, c)] * d_scale[r] * d_scale[c] * w;
            }
        }
    }

    // Fixed: every junction position; velocity and acceleration at both ends.
    let mut fixed = vec![false; n_vars];
    for j in 0..n_junc {
        fixed[gidx(j, 0)] = true;
    }
    fixed[gidx(0, 1)] = true;
    fixed[gidx(0, 2)] = true;
    fixed[gidx(n_junc - 1, 1)] = true;
    fixed[gidx(n_junc - 1, 2)] = true;

    let fixed_ids: Vec<usize> = (0..n_vars).filter(|i| fixed[*i]).collect();
    let free_ids: Vec<usize> = (0..n_vars).filter(|i| !fixed[*i]).collect();
    let h_pp = DMatrix::from_fn(free_ids.len(), free_ids.len(), |r, c| h[(free_ids[r], free_ids[c])]);
    let h_pf = DMatrix::from_fn(free_ids.len(), fixed_ids.len(), |r, c| h[(free_ids[r], fixed_ids[c])]);
    let h_pp_lu = h_pp.lu();

    // Solve per axis and assemble segment coefficients.
    let mut coeffs: Vec<[[T; NCOEF]; 3]> = vec![[[T::zero(); NCOEF]; 3]; n_seg];
    for axis in 0..3 {
        let mut d_fixed = DMatrix::<T>::zeros(fixed_ids.len(), 1);
        for (row, &gi) in fixed_ids.iter().enumerate() {
            let j = gi / NDERIV;
            let o = gi % NDERIV;
            d_fixed[(row, 0)] = match o {
                0 => waypoints[j][axis],
                1 if j == 0 => boundary.start_velocity[axis],
                2 if j == 0 => boundary.start_acceleration[axis],
                1 => boundary.end_velocity[axis],
                2 => boundary.end_acceleration[axis],
                _ => unreachable!("only orders 0..=2 are fixed"),
            };
        }
        let rhs = -(&h_pf * &d_fixed);
        let d_free = if free_ids.is_empty() {
            DMatrix::<T>::zeros(0, 1)
        } else {
            h_pp_lu
                .solve(&rhs)
                .ok_or_else(|| Error::Config("singular minimum-snap system".into()))?
        };

        let mut d_all = vec![T::zero(); n_vars];
        for (row, &gi) in fixed_ids.iter().enumerate() {
            d_all[gi] = d_fixed[(row, 0)];
        }
        for (row, &gi) in free_ids.iter().enumerate() {
            d_all[gi] = d_free[(row, 0)];
        }

        for s in 0..n_seg {
            let t_s = durations[s];
            // normalized endpoint derivatives: order o scales by T^o
            let mut b = DMatrix::<T>::zeros(NCOEF, 1);
            for o in 0..NDERIV {
                b[(o, 0)] = d_all[gidx(s, o)] * t_s.powi(o as i32);
                b[(NDERIV + o, 0)] = d_all[gidx(s + 1, o)] * t_s.powi(o as i32);
            }
            let c_norm = &a1_inv * b;
            // back to local physical time: c_i = c_norm_i / T^i
            for i in 0..NCOEF {
                coeffs[s][axis][i] = c_norm[(i, 0)] / t_s.powi(i as i32);
            }
        }
    }

    let mut segments = Vec::with_capacity(n_seg);
    let mut t0 = T::zero();
    for s in 0..n_seg {
        segments.push(PolySegment { start_time: t0, duration: durations[s], coeffs: coeffs[s] });
        t0 += durations[s];
    }
    Ok(PolyTrajectory { segments })
}

/// Axis-aligned corridor around each waypoint pair.
#[derive(Debug, Clone)]
pub struct Corridor<T: Real> {
    pub boxes: Vec<Aabb<T>>,
    pub margin: T,
}

impl<T: Real> Corridor<T> {
    pub fn around(waypoints: &[Vec3<T>], margin: T) -> Self {
        let m = Vec3::new(margin, margin, margin);
        let boxes = waypoints
            .windows(2)
            .map(|w| Aabb::from_min_max(component_min(&w[0], &w[1]) - m, component_max(&w[0], &w[1]) + m))
            .collect();
        Self { boxes, margin }
    }
}

/// Minimum snap with a-posteriori corridor enforcement: segments whose dense
/// samples leave their corridor box are split at the chord midpoint and the
/// problem re-solved, up to `max_rounds` subdivision rounds.
pub fn min_snap_in_corridor<T: Real>(
    waypoints: &[Vec3<T>],
    durations: &[T],
    corridor: &Corridor<T>,
    boundary: &Boundary<T>,
    max_rounds: usize,
) -> Result<PolyTrajectory<T>> {
    let mut points: Vec<Vec3<T>> = waypoints.to_vec();
    let mut times: Vec<T> = durations.to_vec();
    // which corridor box each current segment belongs to
    let mut owner: Vec<usize> = (0..durations.len()).collect();

    for _ in 0..=max_rounds {
        let traj = min_snap(&points, &times, boundary)?;
        let mut violating: Vec<usize> = Vec::new();
        for (s, seg) in traj.segments.iter().enumerate() {
            let b = &corridor.boxes[owner[s]];
            let samples = 32;
            for k in 0..=samples {
                let local = seg.duration * real::<T>(k as f64) / real(samples as f64);
                if !b.contains(&seg.eval(local, 0)) {
                    violating.push(s);
                    break;
                }
            }
        }
        if violating.is_empty() {
            return Ok(traj);
        }
        // split violating segments at the chord midpoint
        for &s in violating.iter().rev() {
            let mid = (points[s] + points[s + 1]) * real::<T>(0.5);
            let half = times[s] * real::<T>(0.5);
            points.insert(s + 1, mid);
            times[s] = half;
            times.insert(s + 1, half);
            owner.insert(s + 1, owner[s]);
        }
    }
    Err(Error::SubdivisionExceeded)
}
