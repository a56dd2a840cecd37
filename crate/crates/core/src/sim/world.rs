//! Synthetic tunnel world: procedural geometry, scripted dynamic actors, and
//! ground-truth collision checks.

use serde::{Deserialize, Serialize};

use crate::{Aabb, Vec3};

/// Tunnel cross-section: rectangular, optionally capped by a semicircular
/// arch of radius `width/2` whose crown touches `height`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossSection {
    pub width: f64,
    pub height: f64,
    pub arched: bool,
}

impl CrossSection {
    /// Height of the vertical side walls (equals `height` when flat).
    pub fn wall_height(&self) -> f64 {
        if self.arched {
            self.height - self.width * 0.5
        } else {
            self.height
        }
    }

    /// Clearance from a point to the cross-section boundary (negative
    /// outside). `x` bounds are handled by the world.
    pub fn clearance(&self, y: f64, z: f64) -> f64 {
        let half_w = self.width * 0.5;
        let hw = self.wall_height();
        if !self.arched || z <= hw {
            let mut c = z.min(half_w - y.abs());
            if !self.arched {
                c = c.min(self.height - z);
            }
            c
        } else {
            let r = (y * y + (z - hw) * (z - hw)).sqrt();
            (half_w - r).min(z)
        }
    }

    pub fn contains(&self, y: f64, z: f64) -> bool {
        self.clearance(y, z) > 0.0
    }
}

/// Scripted kinematic actor: a box moving piecewise-linearly through timed
/// waypoints, optionally looping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorScript {
    pub box_size: Vec3,
    /// `(t, position)` waypoints with strictly increasing times.
    pub waypoints: Vec<(f64, Vec3)>,
    pub loop_motion: bool,
}

impl ActorScript {
    pub fn position_at(&self, t: f64) -> Vec3 {
        assert!(!self.waypoints.is_empty());
        let t0 = self.waypoints[0].0;
        let t1 = self.waypoints.last().unwrap().0;
        let span = t1 - t0;
        let mut tt = t;
        if self.loop_motion && span > 0.0 {
            // ping-pong so looping paths have no teleports
            let phase = ((t - t0) / span).rem_euclid(2.0);
            tt = if phase <= 1.0 { t0 + phase * span } else { t0 + (2.0 - phase) * span };
        }
        let tt = tt.clamp(t0, t1);
        for w in self.waypoints.windows(2) {
            if tt <= w[1].0 {
                let f = if w[1].0 > w[0].0 { (tt - w[0].0) / (w[1].0 - w[0].0) } else { 0.0 };
                return w[0].1 + (w[1].1 - w[0].1) * f;
            }
        }
        self.waypoints.last().unwrap().1
    }

    /// Exact velocity of the scripted motion (central difference over the
    /// piecewise-linear script, so reversals average to zero).
    pub fn velocity_at(&self, t: f64) -> Vec3 {
        let h = 1e-4;
        (self.position_at(t + h) - self.position_at(t - h)) / (2.0 * h)
    }

    pub fn box_at(&self, t: f64) -> Aabb {
        Aabb::new(self.position_at(t), self.box_size * 0.5)
    }
}

/// The full static + scripted world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldModel {
    pub tunnel_length: f64,
    pub cross_section: CrossSection,
    pub static_obstacles: Vec<Aabb>,
    pub dynamic_actors: Vec<ActorScript>,
    /// Plane of the excavation front (the inspection target wall).
    pub end_wall_x: f64,
}

impl WorldModel {
    pub fn empty_tunnel(length: f64, width: f64, height: f64) -> Self {
        Self {
            tunnel_length: length,
            cross_section: CrossSection { width, height, arched: false },
            static_obstacles: Vec::new(),
            dynamic_actors: Vec::new(),
            end_wall_x: length - 0.5,
        }
    }

    pub fn actor_boxes(&self, t: f64) -> Vec<Aabb> {
        self.dynamic_actors.iter().map(|a| a.box_at(t)).collect()
    }

    pub fn inside_interior(&self, p: &Vec3) -> bool {
        p.x > 0.0 && p.x < self.end_wall_x && self.cross_section.contains(p.y, p.z)
    }

    /// Clearance of a point to the nearest tunnel surface (negative outside).
    pub fn interior_clearance(&self, p: &Vec3) -> f64 {
        self.cross_section.clearance(p.y, p.z).min(p.x).min(self.end_wall_x - p.x)
    }

    /// True iff a robot sphere strictly intersects a tunnel surface, a static
    /// obstacle, or an actor box (grazing contact at exactly `radius` does
    /// not count).
    pub fn check_collision(&self, actors_at_t: &[Aabb], position: &Vec3, radius: f64) -> bool {
        if self.interior_clearance(position) < radius {
            return true;
        }
        self.static_obstacles
            .iter()
            .chain(actors_at_t.iter())
            .any(|b| b.distance(position) < radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_tunnel_center_is_free() {
        let w = WorldModel::empty_tunnel(40.0, 8.0, 8.0);
        assert!(!w.check_collision(&[], &Vec3::new(20.0, 0.0, 4.0), 0.3));
    }

    #[test]
    fn inside_obstacle_collides() {
        let mut w = WorldModel::empty_tunnel(40.0, 8.0, 8.0);
        w.static_obstacles.push(Aabb::new(Vec3::new(10.0, 0.0, 1.0), Vec3::new(0.5, 0.5, 1.0)));
        assert!(w.check_collision(&[], &Vec3::new(10.0, 0.0, 1.0), 0.3));
    }

    #[test]
    fn grazing_contact_does_not_collide() {
        let mut w = WorldModel::empty_tunnel(40.0, 8.0, 8.0);
        w.static_obstacles.push(Aabb::new(Vec3::new(10.0, 0.0, 1.0), Vec3::new(0.5, 0.5, 1.0)));
        // exactly radius away from the +x face
        let p = Vec3::new(10.5 + 0.3, 0.0, 1.0);
        assert!(!w.check_collision(&[], &p, 0.3));
        let p = Vec3::new(10.5 + 0.29, 0.0, 1.0);
        assert!(w.check_collision(&[], &p, 0.3));
    }

    #[test]
    fn walls_and_floor_collide() {
        let w = WorldModel::empty_tunnel(40.0, 8.0, 8.0);
        assert!(w.check_collision(&[], &Vec3::new(20.0, 3.8, 4.0), 0.3));
        assert!(w.check_collision(&[], &Vec3::new(20.0, 0.0, 0.2), 0.3));
        assert!(w.check_collision(&[], &Vec3::new(39.4, 0.0, 4.0), 0.3));
    }

    #[test]
    fn arched_section_narrows_near_crown() {
        let cs = CrossSection { width: 8.0, height: 8.0, arched: true };
        assert!(cs.contains(0.0, 7.9));
        assert!(!cs.contains(3.9, 7.0)); // corner cut off by the arch
        assert!(cs.contains(3.9, 3.0)); // below the springline the walls are vertical
        // clearance continuity across the springline
        let below = cs.clearance(2.0, 3.999);
        let above = cs.clearance(2.0, 4.001);
        assert!((below - above).abs() < 1e-2);
    }

    #[test]
    fn actor_script_interpolates_and_pingpongs() {
        let a = ActorScript {
            box_size: Vec3::new(0.5, 0.5, 1.7),
            waypoints: vec![(0.0, Vec3::new(0.0, -2.0, 0.85)), (4.0, Vec3::new(0.0, 2.0, 0.85))],
            loop_motion: true,
        };
        assert!((a.position_at(2.0) - Vec3::new(0.0, 0.0, 0.85)).norm() < 1e-12);
        // after the span it walks back
        assert!((a.position_at(6.0) - Vec3::new(0.0, 0.0, 0.85)).norm() < 1e-12);
        let v = a.velocity_at(1.0);
        assert!((v - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-6);
        let v_back = a.velocity_at(5.0);
        assert!((v_back - Vec3::new(0.0, -1.0, 0.0)).norm() < 1e-6);
    }
}
