//! Clamped uniform B-spline trajectories: the local optimizer's decision
//! variable. Control points are the optimization variables; evaluation is de
//! Boor, derivatives use the derivative-spline control points.

use crate::geometry::Vec3;
use crate::global_planner::PolyTrajectory;
use crate::real::{real, Real};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct BsplineTrajectory<T: Real> {
    degree: usize,
    knot_dt: T,
    start_time: T,
    pub control_points: Vec<Vec3<T>>,
}

impl<T: Real> BsplineTrajectory<T> {
    /// `control_points.len()` must be at least `2*(degree-1) + 2` so the
    /// first/last `degree-1` points can stay fixed while at least two remain
    /// optimizable.
    pub fn new(degree: usize, knot_dt: T, start_time: T, control_points: Vec<Vec3<T>>) -> Self {
        assert!(degree >= 2, "degree must be at least 2");
        assert!(knot_dt > T::zero());
        assert!(
            control_points.len() >= 2 * (degree - 1) + 2,
            "need at least {} control points for degree {}",
            2 * (degree - 1) + 2,
            degree
        );
        Self { degree, knot_dt, start_time, control_points }
    }

    fn raw(degree: usize, knot_dt: T, start_time: T, control_points: Vec<Vec3<T>>) -> Self {
        Self { degree, knot_dt, start_time, control_points }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knot_dt(&self) -> T {
        self.knot_dt
    }

    pub fn start_time(&self) -> T {
        self.start_time
    }

    pub fn num_points(&self) -> usize {
        self.control_points.len()
    }

    /// Clamped uniform knot value (`i` in `0..n+k+1`).
    pub fn knot(&self, i: usize) -> T {
        let k = self.degree as isize;
        let n = self.control_points.len() as isize;
        let clamped = (i as isize - k).clamp(0, n - k);
        self.start_time + real::<T>(clamped as f64) * self.knot_dt
    }

    pub fn end_time(&self) -> T {
        self.start_time + real::<T>((self.control_points.len() - self.degree) as f64) * self.knot_dt
    }

    pub fn duration(&self) -> T {
        self.end_time() - self.start_time
    }

    /// Index range of the optimizable (intermediate) control points:
    /// `[degree-1, n-degree]` inclusive.
    pub fn free_range(&self) -> (usize, usize) {
        (self.degree - 1, self.control_points.len() - self.degree)
    }

    /// Knot span index for parameter `t` (clamped to the domain).
    fn span_of(&self, t: T) -> usize {
        let k = self.degree;
        let n = self.control_points.len();
        let rel = ((t - self.start_time) / self.knot_dt).floor().as_f64();
        let max_span = n - 1;
        let s = k as f64 + rel.max(0.0);
        (s as usize).min(max_span).max(k)
    }

    /// Nonzero basis values at `t`: returns the span `s` and the `degree+1`
    /// weights of control points `s-degree ..= s`.
    pub fn basis_at(&self, t: T) -> (usize, Vec<T>) {
        let k = self.degree;
        let s = self.span_of(t);
        let mut basis = vec![T::zero(); k + 1];
        let mut left = vec![T::zero(); k + 1];
        let mut right = vec![T::zero(); k + 1];
        basis[0] = T::one();
        for j in 1..=k {
            left[j] = t - self.knot(s + 1 - j);
            right[j] = self.knot(s + j) - t;
            let mut saved = T::zero();
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = if denom.abs() > real(1e-30) { basis[r] / denom } else { T::zero() };
                basis[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            basis[j] = saved;
        }
        (s, basis)
    }

    fn eval_clamped(&self, t: T) -> Vec3<T> {
        let (s, basis) = self.basis_at(t.max(self.start_time).min(self.end_time()));
        let mut p = Vec3::zeros();
        for (j, b) in basis.iter().enumerate() {
            p += self.control_points[s - self.degree + j] * *b;
        }
        p
    }

    /// Derivative spline (degree lowered by one).
    pub fn derivative(&self) -> BsplineTrajectory<T> {
        let k = self.degree;
        let n = self.control_points.len();
        let mut q = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            let span = self.knot(i + k + 1) - self.knot(i + 1);
            let scale = if span > real(1e-30) { real::<T>(k as f64) / span } else { T::zero() };
            q.push((self.control_points[i + 1] - self.control_points[i]) * scale);
        }
        BsplineTrajectory::raw(k - 1, self.knot_dt, self.start_time, q)
    }

    /// Position at `t`; errors outside the knot domain.
    pub fn position(&self, t: T) -> Result<Vec3<T>> {
        let eps = real::<T>(1e-9);
        if t < self.start_time - eps || t > self.end_time() + eps {
            return Err(Error::OutOfDomain {
                t: t.as_f64(),
                start: self.start_time.as_f64(),
                end: self.end_time().as_f64(),
            });
        }
        Ok(self.eval_clamped(t))
    }

    /// Position, velocity, and acceleration at `t`.
    pub fn sample(&self, t: T) -> Result<(Vec3<T>, Vec3<T>, Vec3<T>)> {
        let p = self.position(t)?;
        let d1 = self.derivative();
        let v = d1.eval_clamped(t);
        let a = d1.derivative().eval_clamped(t);
        Ok((p, v, a))
    }

    /// Paper-style control-point velocities `(P_{i+1} - P_i) / dt`.
    pub fn velocity_cp(&self, i: usize) -> Vec3<T> {
        (self.control_points[i + 1] - self.control_points[i]) / self.knot_dt
    }

    /// Control-point accelerations `(V_{i+1} - V_i) / dt`.
    pub fn accel_cp(&self, i: usize) -> Vec3<T> {
        (self.control_points[i + 2] - self.control_points[i + 1] * real::<T>(2.0) + self.control_points[i])
            / (self.knot_dt * self.knot_dt)
    }

    /// Control-point jerks `(A_{i+1} - A_i) / dt`.
    pub fn jerk_cp(&self, i: usize) -> Vec3<T> {
        let dt3 = self.knot_dt * self.knot_dt * self.knot_dt;
        (self.control_points[i + 3] - self.control_points[i + 2] * real::<T>(3.0)
            + self.control_points[i + 1] * real::<T>(3.0)
            - self.control_points[i])
            / dt3
    }

    /// Least-squares fit of a window of the reference trajectory. The first
    /// and last two control points are pinned so the spline matches the
    /// reference position and velocity at the window ends exactly.
    pub fn fit_reference(
        reference: &PolyTrajectory<T>,
        window_start: T,
        window: T,
        knot_dt: T,
        degree: usize,
    ) -> Result<Self> {
        if window < knot_dt * real::<T>(degree as f64) {
            return Err(Error::WindowTooShort(format!(
                "window {} too short for degree {} at dt {}",
                window.as_f64(),
                degree,
                knot_dt.as_f64()
            )));
        }
        let n_spans = (window / knot_dt).round().as_f64() as usize;
        let n = n_spans + degree;
        if n < 2 * (degree - 1) + 2 {
            return Err(Error::WindowTooShort("not enough control points".into()));
        }
        let domain = real::<T>(n_spans as f64) * knot_dt;
        let t_end = window_start + domain;

        let (p0, v0, _) = reference.sample(window_start);
        let (p1, v1, _) = reference.sample(t_end);
        let kk = real::<T>(degree as f64);
        let mut points = vec![Vec3::zeros(); n];
        points[0] = p0;
        points[1] = p0 + v0 * (knot_dt / kk);
        points[n - 1] = p1;
        points[n - 2] = p1 - v1 * (knot_dt / kk);

        let mut spline = BsplineTrajectory::raw(degree, knot_dt, window_start, points);
        if n > 4 {
            spline.fit_interior(reference, window_start, domain)?;
        }
        Ok(spline)
    }

    /// Solves the interior control points by least squares against dense
    /// reference samples, holding the two pinned points at each end.
    fn fit_interior(&mut self, reference: &PolyTrajectory<T>, t0: T, domain: T) -> Result<()> {
        use nalgebra::DMatrix;
        let n = self.control_points.len();
        let free: Vec<usize> = (2..n - 2).collect();
        let m = 4 * (n - self.degree) + 1;
        let mut a = DMatrix::<T>::zeros(m, free.len());
        let mut rhs = DMatrix::<T>::zeros(m, 3);
        for row in 0..m {
            let t = t0 + domain * real::<T>(row as f64) / real((m - 1) as f64);
            let (span, basis) = self.basis_at(t);
            let mut target = reference.sample(t).0;
            for (j, b) in basis.iter().enumerate() {
                let cp = span - self.degree + j;
                match free.binary_search(&cp) {
                    Ok(col) => a[(row, col)] = *b,
                    Err(_) => target -= self.control_points[cp] * *b,
                }
            }
            for axis in 0..3 {
                rhs[(row, axis)] = target[axis];
            }
        }
        let ata = a.transpose() * &a;
        let atb = a.transpose() * rhs;
        let sol = ata
            .lu()
            .solve(&atb)
            .ok_or_else(|| Error::Config("singular B-spline fitting system".into()))?;
        for (col, &cp) in free.iter().enumerate() {
            self.control_points[cp] = Vec3::new(sol[(col, 0)], sol[(col, 1)], sol[(col, 2)]);
        }
        Ok(())
    }
}
