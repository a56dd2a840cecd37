//! Depth-image rendering by per-pixel ray casting against the tunnel
//! surfaces and the obstacle boxes. Pure function of its inputs; the
//! optional range noise is driven by the caller-provided seed.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::world::WorldModel;
use crate::{Aabb, CameraModel, DepthImage, Pose, Vec3};

/// Renders the depth image seen from `pose`. Depths are z-depths along the
/// optical axis; pixels with a return closer than `min_range` are invalid
/// (0), rays that exit the sensing range are clamped to `max_range`.
/// `noise_sigma0` scales a zero-mean Gaussian with sigma = sigma0 * d^2.
pub fn render_depth(
    world: &WorldModel,
    actors_at_t: &[Aabb],
    pose: &Pose,
    camera: &CameraModel,
    noise_sigma0: f64,
    noise_seed: u64,
) -> DepthImage {
    let mut img = DepthImage::new(camera.width, camera.height);
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    use rand::SeedableRng;

    let origin = pose.position;
    let right = pose.right();
    let down = pose.down();
    let forward = pose.forward();

    for v in 0..camera.height {
        for u in 0..camera.width {
            // unnormalized direction with unit forward component, so the ray
            // parameter equals z-depth
            let raw = camera.pixel_ray(u as f64 + 0.5, v as f64 + 0.5);
            let dir = right * raw.x + down * raw.y + forward;

            let mut t_hit = tunnel_exit(world, &origin, &dir, camera.max_range);
            for b in world.static_obstacles.iter().chain(actors_at_t.iter()) {
                if let Some(t) = b.ray_intersect(&origin, &dir, t_hit) {
                    t_hit = t_hit.min(t);
                }
            }

            let mut d = t_hit;
            if noise_sigma0 > 0.0 && d < camera.max_range {
                d += noise_sigma0 * d * d * normal.sample(&mut rng);
            }
            if d < camera.min_range {
                img.set(u, v, 0.0);
            } else {
                img.set(u, v, d.min(camera.max_range));
            }
        }
    }
    img
}

/// Smallest positive ray parameter at which the ray leaves the tunnel
/// interior (camera assumed inside), clamped to `t_max`.
fn tunnel_exit(world: &WorldModel, o: &Vec3, d: &Vec3, t_max: f64) -> f64 {
    let cs = &world.cross_section;
    let half_w = cs.width * 0.5;
    let hw = cs.wall_height();
    let mut best = t_max;
    let mut consider = |t: f64| {
        if t > 0.0 && t < best {
            best = t;
        }
    };

    // end and start walls
    if d.x > 1e-15 {
        consider((world.end_wall_x - o.x) / d.x);
    } else if d.x < -1e-15 {
        consider(-o.x / d.x);
    }
    // floor
    if d.z < -1e-15 {
        consider(-o.z / d.z);
    }
    if !cs.arched {
        if d.z > 1e-15 {
            consider((cs.height - o.z) / d.z);
        }
        if d.y > 1e-15 {
            consider((half_w - o.y) / d.y);
        } else if d.y < -1e-15 {
            consider((-half_w - o.y) / d.y);
        }
    } else {
        // side walls only below the springline
        if d.y.abs() > 1e-15 {
            let t = if d.y > 0.0 { (half_w - o.y) / d.y } else { (-half_w - o.y) / d.y };
            let z = o.z + t * d.z;
            if z <= hw {
                consider(t);
            }
        }
        // semicircular arch: (y)^2 + (z - hw)^2 = (w/2)^2 with z > hw
        let oy = o.y;
        let oz = o.z - hw;
        let a = d.y * d.y + d.z * d.z;
        if a > 1e-15 {
            let b = oy * d.y + oz * d.z;
            let c = oy * oy + oz * oz - half_w * half_w;
            let disc = b * b - a * c;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                for t in [(-b - sq) / a, (-b + sq) / a] {
                    let z = o.z + t * d.z;
                    if z >= hw {
                        consider(t);
                    }
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn camera() -> CameraModel {
        CameraModel::from_fov(48, 36, 87f64.to_radians(), 58f64.to_radians(), 0.3, 6.0)
    }

    #[test]
    fn end_wall_depth_is_plane_distance() {
        let w = WorldModel::empty_tunnel(40.0, 8.0, 8.0);
        let cam = camera();
        let pose = Pose::new(Vec3::new(w.end_wall_x - 5.0, 0.0, 4.0), 0.0);
        let img = render_depth(&w, &[], &pose, &cam, 0.0, 0);
        // z-depth of a fronto-parallel plane is constant across pixels
        let c = img.at(24, 18);
        assert!((c - 5.0).abs() < 1e-6, "center depth {c}");
        assert!((img.at(5, 30) - 5.0).abs() < 1e-6);
    }

    #[test]
    fn cube_on_axis_reports_front_face() {
        let mut w = WorldModel::empty_tunnel(40.0, 8.0, 8.0);
        let pose = Pose::new(Vec3::new(2.0, 0.0, 4.0), 0.0);
        w.static_obstacles.push(Aabb::new(Vec3::new(5.0, 0.0, 4.0), Vec3::new(0.5, 0.5, 0.5)));
        let img = render_depth(&w, &[], &pose, &camera(), 0.0, 0);
        assert!((img.at(24, 18) - 2.5).abs() < 1e-9);
    }

    #[test]
    fn rendering_is_deterministic() {
        let mut w = WorldModel::empty_tunnel(40.0, 8.0, 8.0);
        w.static_obstacles.push(Aabb::new(Vec3::new(6.0, 1.0, 3.0), Vec3::new(0.4, 0.4, 1.0)));
        let pose = Pose::new(Vec3::new(2.0, 0.5, 3.5), 0.1);
        let a = render_depth(&w, &[], &pose, &camera(), 0.002, 42);
        let b = render_depth(&w, &[], &pose, &camera(), 0.002, 42);
        assert_eq!(a, b);
        let c = render_depth(&w, &[], &pose, &camera(), 0.002, 43);
        assert_ne!(a, c);
    }

    // Independent slow ray caster: march until the inside/outside state
    // flips, then bisect.
    fn march_depth(w: &WorldModel, pose: &Pose, cam: &CameraModel, u: usize, v: usize) -> f64 {
        let raw = cam.pixel_ray(u as f64 + 0.5, v as f64 + 0.5);
        let dir = pose.right() * raw.x + pose.down() * raw.y + pose.forward();
        let occupied = |t: f64| {
            let p = pose.position + dir * t;
            !w.inside_interior(&p) || w.static_obstacles.iter().any(|b| b.contains(&p))
        };
        let step = 0.005;
        let mut t = step;
        while t < cam.max_range {
            if occupied(t) {
                // bisect in (t - step, t]
                let mut lo = t - step;
                let mut hi = t;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if occupied(mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return hi;
            }
            t += step;
        }
        cam.max_range
    }

    #[test]
    fn matches_brute_force_ray_marcher() {
        let mut w = WorldModel::empty_tunnel(20.0, 8.0, 8.0);
        w.static_obstacles.push(Aabb::new(Vec3::new(5.0, 0.3, 3.8), Vec3::new(0.5, 0.5, 0.9)));
        w.static_obstacles.push(Aabb::new(Vec3::new(7.0, -1.5, 1.0), Vec3::new(0.7, 0.4, 1.0)));
        let cam = camera();
        let pose = Pose::new(Vec3::new(1.5, 0.2, 3.6), 0.05);
        let img = render_depth(&w, &[], &pose, &cam, 0.0, 0);
        for v in 0..cam.height {
            for u in 0..cam.width {
                let expect = march_depth(&w, &pose, &cam, u, v);
                let got = img.at(u, v);
                if got == 0.0 {
                    // invalid: analytic hit closer than min range
                    assert!(expect < cam.min_range + 1e-6);
                } else {
                    assert!(
                        (got - expect).abs() < 1e-6,
                        "pixel ({u},{v}): analytic {got} vs marcher {expect}"
                    );
                }
            }
        }
    }

    #[test]
    fn arched_tunnel_renders_consistently() {
        let mut w = WorldModel::empty_tunnel(20.0, 8.0, 8.0);
        w.cross_section.arched = true;
        let cam = camera();
        let pose = Pose::new(Vec3::new(1.5, 0.0, 3.0), 0.0);
        let img = render_depth(&w, &[], &pose, &cam, 0.0, 0);
        for v in (0..cam.height).step_by(3) {
            for u in (0..cam.width).step_by(3) {
                let expect = march_depth(&w, &pose, &cam, u, v);
                let got = img.at(u, v);
                if got > 0.0 {
                    assert!((got - expect).abs() < 1e-6, "pixel ({u},{v}): {got} vs {expect}");
                }
            }
        }
    }

    #[test]
    fn backprojected_pixels_land_on_surfaces() {
        let mut w = WorldModel::empty_tunnel(20.0, 8.0, 8.0);
        w.static_obstacles.push(Aabb::new(Vec3::new(4.0, 0.0, 3.5), Vec3::new(0.5, 0.5, 0.5)));
        let cam = camera();
        let pose = Pose::new(Vec3::new(1.0, 0.0, 3.5), 0.0);
        let img = render_depth(&w, &[], &pose, &cam, 0.0, 0);
        for v in (0..cam.height).step_by(2) {
            for u in (0..cam.width).step_by(2) {
                let d = img.at(u, v);
                if d == 0.0 || d >= cam.max_range {
                    continue;
                }
                let p = pose.camera_to_world(cam.unproject(u as f64 + 0.5, v as f64 + 0.5, d));
                let on_obstacle =
                    w.static_obstacles.iter().any(|b| b.signed_distance(&p).abs() < 1e-6);
                let on_wall = w.interior_clearance(&p).abs() < 1e-6;
                assert!(on_obstacle || on_wall, "pixel ({u},{v}) landed at {p:?}");
            }
        }
    }
}
