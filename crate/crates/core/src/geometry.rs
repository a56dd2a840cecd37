//! Shared geometric and camera types.
//!
//! World frame convention: `x` runs along the tunnel axis from the start
//! toward the excavation front, `z` is up, `y` completes the right-handed
//! frame (left when facing `+x`). The camera is mounted level, so the robot
//! orientation is yaw-only. Camera optical frame: `z` forward, `x` right,
//! `y` down.

use serde::{Deserialize, Serialize};

use crate::real::{real, Real};
use crate::{Error, Result};

pub type Vec3<T> = nalgebra::Vector3<T>;

/// Componentwise minimum.
pub fn component_min<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    Vec3::new(a.x.min(b.x), a.y.min(b.y), a.z.min(b.z))
}

/// Componentwise maximum.
pub fn component_max<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    Vec3::new(a.x.max(b.x), a.y.max(b.y), a.z.max(b.z))
}

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle<T: Real>(a: T) -> T {
    let two_pi = T::two_pi();
    let mut w = a % two_pi;
    if w < -T::pi() {
        w += two_pi;
    } else if w >= T::pi() {
        w -= two_pi;
    }
    w
}

/// Yaw-only robot/camera pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose<T: Real> {
    pub position: Vec3<T>,
    pub yaw: T,
}

impl<T: Real> Pose<T> {
    pub fn new(position: Vec3<T>, yaw: T) -> Self {
        Self { position, yaw: wrap_angle(yaw) }
    }

    /// Unit vector along the camera optical axis in the world frame.
    pub fn forward(&self) -> Vec3<T> {
        Vec3::new(self.yaw.cos(), self.yaw.sin(), T::zero())
    }

    /// World-frame direction of the camera `x` axis (image right).
    pub fn right(&self) -> Vec3<T> {
        Vec3::new(self.yaw.sin(), -self.yaw.cos(), T::zero())
    }

    /// World-frame direction of the camera `y` axis (image down).
    pub fn down(&self) -> Vec3<T> {
        Vec3::new(T::zero(), T::zero(), -T::one())
    }

    pub fn camera_to_world(&self, p_cam: Vec3<T>) -> Vec3<T> {
        self.position + self.right() * p_cam.x + self.down() * p_cam.y + self.forward() * p_cam.z
    }

    pub fn world_to_camera(&self, p_world: Vec3<T>) -> Vec3<T> {
        let d = p_world - self.position;
        Vec3::new(d.dot(&self.right()), d.dot(&self.down()), d.dot(&self.forward()))
    }
}

/// Axis-aligned box given by center and (strictly positive) half extents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb<T: Real> {
    pub center: Vec3<T>,
    pub half_extents: Vec3<T>,
}

impl<T: Real> Aabb<T> {
    pub fn new(center: Vec3<T>, half_extents: Vec3<T>) -> Self {
        assert!(
            half_extents.x > T::zero() && half_extents.y > T::zero() && half_extents.z > T::zero(),
            "Aabb half extents must be strictly positive"
        );
        Self { center, half_extents }
    }

    pub fn from_min_max(min: Vec3<T>, max: Vec3<T>) -> Self {
        let half = (max - min) * real::<T>(0.5);
        Self::new((max + min) * real::<T>(0.5), half)
    }

    pub fn min(&self) -> Vec3<T> {
        self.center - self.half_extents
    }

    pub fn max(&self) -> Vec3<T> {
        self.center + self.half_extents
    }

    pub fn contains(&self, p: &Vec3<T>) -> bool {
        let d = p - self.center;
        d.x.abs() <= self.half_extents.x
            && d.y.abs() <= self.half_extents.y
            && d.z.abs() <= self.half_extents.z
    }

    /// Scales the half extents by `ratio` about the center.
    pub fn inflate(&self, ratio: T) -> Self {
        Self::new(self.center, self.half_extents * ratio)
    }

    /// Grows every half extent by the fixed margin `m`.
    pub fn grow(&self, m: T) -> Self {
        Self::new(self.center, self.half_extents.add_scalar(m))
    }

    pub fn corners(&self) -> [Vec3<T>; 8] {
        let mn = self.min();
        let mx = self.max();
        [
            Vec3::new(mn.x, mn.y, mn.z),
            Vec3::new(mx.x, mn.y, mn.z),
            Vec3::new(mn.x, mx.y, mn.z),
            Vec3::new(mx.x, mx.y, mn.z),
            Vec3::new(mn.x, mn.y, mx.z),
            Vec3::new(mx.x, mn.y, mx.z),
            Vec3::new(mn.x, mx.y, mx.z),
            Vec3::new(mx.x, mx.y, mx.z),
        ]
    }

    /// Signed Euclidean distance: negative inside (minimum face distance),
    /// exact Euclidean distance outside, zero on the surface.
    pub fn signed_distance(&self, p: &Vec3<T>) -> T {
        let d = p - self.center;
        let q = Vec3::new(
            d.x.abs() - self.half_extents.x,
            d.y.abs() - self.half_extents.y,
            d.z.abs() - self.half_extents.z,
        );
        let outside = Vec3::new(q.x.max(T::zero()), q.y.max(T::zero()), q.z.max(T::zero()));
        outside.norm() + q.x.max(q.y).max(q.z).min(T::zero())
    }

    /// Distance of the closest point of the box to `p` (zero inside).
    pub fn distance(&self, p: &Vec3<T>) -> T {
        self.signed_distance(p).max(T::zero())
    }

    /// Slab-test ray intersection. Returns the entry parameter `t >= 0` with
    /// `p = origin + t * dir` (`t = 0` when the origin is inside), or `None`
    /// when the ray misses within `t_max`.
    pub fn ray_intersect(&self, origin: &Vec3<T>, dir: &Vec3<T>, t_max: T) -> Option<T> {
        let mut t_enter = T::zero();
        let mut t_exit = t_max;
        let mn = self.min();
        let mx = self.max();
        for ax in 0..3 {
            let o = origin[ax];
            let d = dir[ax];
            if d.abs() < real(1e-15) {
                if o < mn[ax] || o > mx[ax] {
                    return None;
                }
            } else {
                let inv = T::one() / d;
                let mut t0 = (mn[ax] - o) * inv;
                let mut t1 = (mx[ax] - o) * inv;
                if t0 > t1 {
                    std::mem::swap(&mut t0, &mut t1);
                }
                t_enter = t_enter.max(t0);
                t_exit = t_exit.min(t1);
                if t_enter > t_exit {
                    return None;
                }
            }
        }
        Some(t_enter)
    }
}

/// Pinhole depth camera intrinsics plus the valid sensing range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel<T: Real> {
    pub width: usize,
    pub height: usize,
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub min_range: T,
    pub max_range: T,
}

impl<T: Real> CameraModel<T> {
    pub fn new(width: usize, height: usize, fx: T, fy: T, cx: T, cy: T, min_range: T, max_range: T) -> Self {
        assert!(fx > T::zero() && fy > T::zero(), "focal lengths must be positive");
        assert!(
            T::zero() < min_range && min_range < max_range,
            "require 0 < min_range < max_range"
        );
        Self { width, height, fx, fy, cx, cy, min_range, max_range }
    }

    /// Builds intrinsics from horizontal/vertical field-of-view angles
    /// (radians), principal point at the image center.
    pub fn from_fov(width: usize, height: usize, hfov: T, vfov: T, min_range: T, max_range: T) -> Self {
        let half = real::<T>(0.5);
        let fx = real::<T>(width as f64) * half / (hfov * half).tan();
        let fy = real::<T>(height as f64) * half / (vfov * half).tan();
        let cx = real::<T>(width as f64) * half;
        let cy = real::<T>(height as f64) * half;
        Self::new(width, height, fx, fy, cx, cy, min_range, max_range)
    }

    /// Projects a camera-frame point to continuous pixel coordinates plus its
    /// z-depth. Rejects points at or behind the image plane.
    pub fn project(&self, point_cam: &Vec3<T>) -> Result<(T, T, T)> {
        if point_cam.z <= T::zero() {
            return Err(Error::BehindCamera);
        }
        let u = self.fx * point_cam.x / point_cam.z + self.cx;
        let v = self.fy * point_cam.y / point_cam.z + self.cy;
        Ok((u, v, point_cam.z))
    }

    /// Back-projects continuous pixel coordinates at the given z-depth.
    pub fn unproject(&self, u: T, v: T, depth: T) -> Vec3<T> {
        Vec3::new((u - self.cx) * depth / self.fx, (v - self.cy) * depth / self.fy, depth)
    }

    /// Unnormalized camera-frame ray direction through pixel coordinates
    /// (z component is 1, so the ray parameter equals z-depth).
    pub fn pixel_ray(&self, u: T, v: T) -> Vec3<T> {
        Vec3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, T::one())
    }

    /// Whether a camera-frame point falls inside the image and sensing range.
    pub fn sees(&self, point_cam: &Vec3<T>) -> bool {
        match self.project(point_cam) {
            Ok((u, v, d)) => {
                u >= T::zero()
                    && u < real(self.width as f64)
                    && v >= T::zero()
                    && v < real(self.height as f64)
                    && d >= self.min_range
                    && d <= self.max_range
            }
            Err(_) => false,
        }
    }
}
