//! Receding-horizon distance field around a moving obstacle.
//!
//! The obstacle is a sphere at its current center whose predicted region
//! tapers to a point at the linearly extrapolated position one prediction
//! horizon ahead: the region is the convex hull of the sphere and that
//! endpoint (a sphere capped by the tangent cone). For points inside, the
//! penetration depth is the exact distance to the region boundary — the
//! perpendicular distance to the tangent cone in the kite part, `r - |p - O|`
//! toward the spherical cap in the rear sector — and zero outside. The field
//! is continuous across the sector/cone seam.

use crate::geometry::Vec3;
use crate::real::{real, Real};

use crate::dynamic_map::TrackedObstacle;

#[derive(Debug, Clone, Copy)]
pub struct DynamicRegion<T: Real> {
    /// Current obstacle center.
    pub center: Vec3<T>,
    /// Obstacle radius (half diagonal of the box cross-section plus the
    /// configured safety inflation).
    pub radius: T,
    /// Estimated obstacle velocity.
    pub velocity: Vec3<T>,
    /// Remaining prediction horizon (s); the region tapers to zero here.
    pub horizon: T,
}

impl<T: Real> DynamicRegion<T> {
    pub fn from_track(track: &TrackedObstacle<T>, r_extra: T, horizon: T) -> Self {
        let he = track.bbox.half_extents;
        // partial views under-size fresh tracks, so keep a floor on the
        // assumed cross-section
        let radius = (he.x * he.x + he.y * he.y).sqrt().max(real(0.3)) + r_extra;
        Self { center: track.center(), radius, velocity: track.velocity(), horizon }
    }

    /// Predicted endpoint `C` where the region has shrunk to a point.
    pub fn predicted_end(&self) -> Vec3<T> {
        self.center + self.velocity * self.horizon
    }

    /// The region as seen `tau` seconds into the future: the center has
    /// advanced along the velocity and the radius has decayed linearly,
    /// while the predicted endpoint stays put.
    pub fn at_offset(&self, tau: T) -> Self {
        if self.horizon <= T::zero() {
            return *self;
        }
        let tau = tau.max(T::zero()).min(self.horizon);
        let scale = T::one() - tau / self.horizon;
        Self {
            center: self.center + self.velocity * tau,
            radius: self.radius * scale,
            velocity: self.velocity,
            horizon: self.horizon - tau,
        }
    }

    /// Penetration depth into the safe-area boundary: positive inside the
    /// region (distance to its surface), zero outside.
    pub fn distance(&self, p: &Vec3<T>) -> T {
        self.distance_and_gradient(p).0
    }

    /// Depth plus its gradient with respect to `p`.
    pub fn distance_and_gradient(&self, p: &Vec3<T>) -> (T, Vec3<T>) {
        let r = self.radius;
        if r <= T::zero() {
            return (T::zero(), Vec3::zeros());
        }
        let to_end = self.predicted_end() - self.center;
        let len = to_end.norm();
        let rel = p - self.center;

        // Endpoint inside the sphere: the hull is the sphere itself.
        if len <= r {
            let d = rel.norm();
            if d >= r {
                return (T::zero(), Vec3::zeros());
            }
            let grad = if d > real(1e-12) { -rel / d } else { Vec3::zeros() };
            return (r - d, grad);
        }

        let axis = to_end / len;
        let s = rel.dot(&axis);
        let radial_vec = rel - axis * s;
        let rho = radial_vec.norm();

        // meridian-plane coordinates q = (s, rho), circle radius r at the
        // origin, cone apex at (len, 0), tangency point a
        let ax = r * r / len;
        let ay = r * (len * len - r * r).sqrt() / len;

        let inside_sphere = s * s + rho * rho <= r * r;
        let cone_halfwidth = if s >= ax && s <= len {
            (len - s) * r / (len * len - r * r).sqrt()
        } else {
            T::neg_inf()
        };
        let inside_cone = rho <= cone_halfwidth;
        if !inside_sphere && !inside_cone {
            return (T::zero(), Vec3::zeros());
        }

        // candidate 1: spherical cap (directions at angle >= angle of the
        // tangency circle), otherwise the cap rim = tangency point
        let q_norm = (s * s + rho * rho).sqrt();
        let on_cap = q_norm <= real(1e-12) || s <= q_norm * (r / len);
        let (d_cap, g_cap_2d) = if on_cap {
            let d = r - q_norm;
            let g = if q_norm > real(1e-12) {
                (-s / q_norm, -rho / q_norm)
            } else {
                (T::zero(), T::zero())
            };
            (d, g)
        } else {
            let (dx, dy) = (s - ax, rho - ay);
            let d = (dx * dx + dy * dy).sqrt();
            let g = if d > real(1e-12) { (dx / d, dy / d) } else { (T::zero(), T::zero()) };
            (d, g)
        };

        // candidate 2: tangent segment from the tangency point to the apex
        let (ex, ey) = (len - ax, -ay);
        let seg_len2 = ex * ex + ey * ey;
        let tau = (((s - ax) * ex + (rho - ay) * ey) / seg_len2).max(T::zero()).min(T::one());
        let (qx, qy) = (ax + tau * ex, ay + tau * ey);
        let (dx, dy) = (s - qx, rho - qy);
        let d_seg = (dx * dx + dy * dy).sqrt();
        let g_seg_2d = if d_seg > real(1e-12) { (dx / d_seg, dy / d_seg) } else { (T::zero(), T::zero()) };

        let (d, g2d) = if d_cap <= d_seg { (d_cap, g_cap_2d) } else { (d_seg, g_seg_2d) };
        let radial_dir = if rho > real(1e-12) { radial_vec / rho } else { Vec3::zeros() };
        (d, axis * g2d.0 + radial_dir * g2d.1)
    }

    /// Whether `p` lies strictly inside the region.
    pub fn contains(&self, p: &Vec3<T>) -> bool {
        self.distance(p) > T::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn region(radius: f64, speed: f64, horizon: f64) -> DynamicRegion<f64> {
        DynamicRegion {
            center: Vec3::new(1.0, -0.5, 1.2),
            radius,
            velocity: Vec3::new(speed, 0.3, 0.0),
            horizon,
        }
    }

    #[test]
    fn depth_at_center_equals_radius() {
        let reg = region(0.6, 1.0, 2.0);
        assert!((reg.distance(&reg.center) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn zero_beyond_predicted_end() {
        let reg = region(0.5, 1.0, 2.0);
        let dir = reg.velocity.normalize();
        let p = reg.predicted_end() + dir * 0.05;
        assert_eq!(reg.distance(&p), 0.0);
    }

    #[test]
    fn stationary_obstacle_is_a_sphere() {
        let reg = DynamicRegion {
            center: Vec3::new(0.0, 0.0, 1.0),
            radius: 0.5,
            velocity: Vec3::zeros(),
            horizon: 2.0,
        };
        assert!((reg.distance(&Vec3::new(0.2, 0.0, 1.0)) - 0.3f64).abs() < 1e-12);
        assert_eq!(reg.distance(&Vec3::new(0.6, 0.0, 1.0)), 0.0);
    }

    #[test]
    fn offset_region_advances_and_shrinks() {
        let reg = region(0.5, 1.0, 2.0);
        let half = reg.at_offset(1.0);
        assert!((half.center - (reg.center + reg.velocity * 1.0)).norm() < 1e-12);
        assert!((half.radius - 0.25).abs() < 1e-12);
        assert!((half.predicted_end() - reg.predicted_end()).norm() < 1e-12);
        let done = reg.at_offset(5.0);
        assert_eq!(done.radius, 0.0);
        assert_eq!(done.distance(&done.center), 0.0);
    }

    // Independent membership test: p is in the hull of sphere(O, r) and C iff
    // it is in the sphere or the ray from C through p still meets the ball at
    // or beyond p.
    fn inside_oracle(reg: &DynamicRegion<f64>, p: &Vec3<f64>) -> bool {
        let o = reg.center;
        let r = reg.radius;
        if (p - o).norm() <= r {
            return true;
        }
        let c = reg.predicted_end();
        let pc = p - c;
        let dist_pc = pc.norm();
        if dist_pc < 1e-12 {
            return (c - o).norm() <= r;
        }
        let d = pc / dist_pc;
        // |c + t d - o|^2 = r^2
        let oc = c - o;
        let b = d.dot(&oc);
        let disc = b * b - (oc.norm_squared() - r * r);
        if disc < 0.0 {
            return false;
        }
        let t_far = -b + disc.sqrt();
        t_far >= dist_pc
    }

    // Dense boundary sampling: spherical cap behind the tangency circle plus
    // the revolved tangent segment.
    fn boundary_samples(reg: &DynamicRegion<f64>, spacing: f64) -> Vec<Vec3<f64>> {
        let o = reg.center;
        let r = reg.radius;
        let c = reg.predicted_end();
        let axis_len = (c - o).norm();
        let mut pts = Vec::new();
        let (axis, e1, e2);
        if axis_len > 1e-9 {
            axis = (c - o) / axis_len;
        } else {
            axis = Vec3::new(1.0, 0.0, 0.0);
        }
        let tmp = if axis.x.abs() < 0.9 { Vec3::new(1.0, 0.0, 0.0) } else { Vec3::new(0.0, 1.0, 0.0) };
        e1 = axis.cross(&tmp).normalize();
        e2 = axis.cross(&e1);

        let phi_a = if axis_len > r { (r / axis_len).acos() } else { 0.0 };
        // cap: polar angle from the axis in [phi_a, pi]
        let n_theta = ((std::f64::consts::PI - phi_a) * r / spacing).ceil() as usize + 1;
        for it in 0..=n_theta {
            let theta = phi_a + (std::f64::consts::PI - phi_a) * it as f64 / n_theta as f64;
            let ring_r = r * theta.sin();
            let n_psi = ((2.0 * std::f64::consts::PI * ring_r / spacing).ceil() as usize).max(1);
            for ip in 0..n_psi {
                let psi = 2.0 * std::f64::consts::PI * ip as f64 / n_psi as f64;
                pts.push(o + (axis * theta.cos() + (e1 * psi.cos() + e2 * psi.sin()) * theta.sin()) * r);
            }
        }
        if axis_len > r {
            // revolved tangent segment from the tangency circle to the apex
            let ax = r * r / axis_len;
            let ay = r * (axis_len * axis_len - r * r).sqrt() / axis_len;
            let seg_len = ((axis_len - ax).powi(2) + ay.powi(2)).sqrt();
            let n_u = (seg_len / spacing).ceil() as usize + 1;
            for iu in 0..=n_u {
                let u = iu as f64 / n_u as f64;
                let s = ax + u * (axis_len - ax);
                let w = ay * (1.0 - u);
                let n_psi = ((2.0 * std::f64::consts::PI * w / spacing).ceil() as usize).max(1);
                for ip in 0..n_psi {
                    let psi = 2.0 * std::f64::consts::PI * ip as f64 / n_psi as f64;
                    pts.push(o + axis * s + (e1 * psi.cos() + e2 * psi.sin()) * w);
                }
            }
        }
        pts
    }

    #[test]
    fn depth_matches_boundary_sampling_oracle() {
        let spacing = 0.01;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for case in 0..6 {
            let reg = DynamicRegion {
                center: Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 1.0),
                radius: rng.gen_range(0.3..0.8),
                velocity: Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.0),
                horizon: rng.gen_range(0.5..2.0),
            };
            let boundary = boundary_samples(&reg, spacing);
            for _ in 0..60 {
                let p = reg.center
                    + Vec3::new(
                        rng.gen_range(-2.5..2.5),
                        rng.gen_range(-2.5..2.5),
                        rng.gen_range(-1.5..1.5),
                    );
                let analytic = reg.distance(&p);
                let oracle = if inside_oracle(&reg, &p) {
                    boundary.iter().map(|b| (p - b).norm()).fold(f64::INFINITY, f64::min)
                } else {
                    0.0
                };
                assert!(
                    (analytic - oracle).abs() < 2.0 * spacing,
                    "case {case}: analytic {analytic} vs oracle {oracle} at {p:?}"
                );
            }
        }
    }

    #[test]
    fn continuous_across_sector_seam() {
        let reg = region(0.5, 1.0, 2.0);
        let axis = (reg.predicted_end() - reg.center).normalize();
        let tmp = Vec3::new(0.0, 0.0, 1.0);
        let perp = axis.cross(&tmp).normalize();
        // seam direction: polar angle phi_a from the axis
        let len = (reg.predicted_end() - reg.center).norm();
        let phi_a = (reg.radius / len).acos();
        for frac in [0.2, 0.5, 0.8] {
            let d = reg.radius * frac;
            for eps in [1e-8, 1e-7] {
                let dir_lo = axis * (phi_a - eps).cos() + perp * (phi_a - eps).sin();
                let dir_hi = axis * (phi_a + eps).cos() + perp * (phi_a + eps).sin();
                let a = reg.distance(&(reg.center + dir_lo * d));
                let b = reg.distance(&(reg.center + dir_hi * d));
                assert!((a - b).abs() < 1e-6, "seam jump {} at frac {frac}", (a - b).abs());
            }
        }
    }
}
