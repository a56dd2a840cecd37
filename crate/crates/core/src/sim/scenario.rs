//! Seeded scenario generation: static clutter plus scripted walking actors,
//! validated to leave a traversable corridor from start to end wall.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::world::{ActorScript, WorldModel};
use crate::{Aabb, Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Difficulty {
    /// No obstacles at all.
    Empty,
    /// Light static clutter, one walker.
    Sparse,
    /// Static clutter plus two walkers.
    Moderate,
    /// Heavy static clutter plus two walkers.
    Dense,
    /// Moderate clutter with three fast walkers.
    DynamicHeavy,
}

impl Difficulty {
    /// (static boxes, walkers, walker speed range)
    fn profile(self) -> (usize, usize, (f64, f64)) {
        match self {
            Difficulty::Empty => (0, 0, (0.0, 0.0)),
            Difficulty::Sparse => (3, 1, (0.5, 0.9)),
            Difficulty::Moderate => (5, 2, (0.5, 1.2)),
            Difficulty::Dense => (8, 2, (0.5, 1.2)),
            Difficulty::DynamicHeavy => (5, 3, (0.8, 1.5)),
        }
    }
}

const TUNNEL_LENGTH: f64 = 40.0;
const TUNNEL_WIDTH: f64 = 8.0;
const TUNNEL_HEIGHT: f64 = 8.0;
/// Obstacles keep a clear span near the start and in front of the end wall.
const CLUTTER_X: (f64, f64) = (6.0, 33.0);
const CORRIDOR_WIDTH: f64 = 1.5;

/// Deterministically generates a world for the seed; obstacle placement is
/// retried until a corridor of `CORRIDOR_WIDTH` survives (validated by a
/// coarse grid search).
pub fn generate_scenario(seed: u64, difficulty: Difficulty) -> Result<WorldModel> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n_static, n_dynamic, speed_range) = difficulty.profile();

    for _attempt in 0..20 {
        let mut world = WorldModel::empty_tunnel(TUNNEL_LENGTH, TUNNEL_WIDTH, TUNNEL_HEIGHT);
        for _ in 0..n_static {
            let hx = rng.gen_range(0.25..0.8);
            let hy = rng.gen_range(0.25..0.9);
            let hz = rng.gen_range(0.5..1.8);
            let x = rng.gen_range(CLUTTER_X.0..CLUTTER_X.1);
            let y = rng.gen_range(-TUNNEL_WIDTH * 0.5 + hy + 0.2..TUNNEL_WIDTH * 0.5 - hy - 0.2);
            // most clutter stands on the floor, some hangs in the flight band
            let z = if rng.gen_bool(0.7) { hz } else { rng.gen_range(hz..3.0_f64.max(hz + 0.1)) };
            world.static_obstacles.push(Aabb::new(Vec3::new(x, y, z), Vec3::new(hx, hy, hz)));
        }
        for _ in 0..n_dynamic {
            let speed = rng.gen_range(speed_range.0..=speed_range.1);
            let x = rng.gen_range(CLUTTER_X.0 + 2.0..CLUTTER_X.1 - 2.0);
            // full crossings with a pause at the walls, like site workers
            let y0 = rng.gen_range(-TUNNEL_WIDTH * 0.5 + 0.6..-2.0);
            let y1 = rng.gen_range(2.0..TUNNEL_WIDTH * 0.5 - 0.6);
            let dwell = rng.gen_range(2.0..5.0);
            let start_phase = rng.gen_range(0.0..6.0);
            let duration = (y1 - y0).abs() / speed;
            world.dynamic_actors.push(ActorScript {
                box_size: Vec3::new(0.5, 0.5, 1.7),
                waypoints: vec![
                    (-start_phase, Vec3::new(x, y0, 0.85)),
                    (duration - start_phase, Vec3::new(x, y1, 0.85)),
                    (duration + dwell - start_phase, Vec3::new(x, y1, 0.85)),
                ],
                loop_motion: true,
            });
        }
        if corridor_exists(&world) {
            return Ok(world);
        }
    }
    Err(Error::ScenarioGeneration(format!(
        "no {CORRIDOR_WIDTH} m corridor after 20 attempts (seed {seed}, {difficulty:?})"
    )))
}

/// Coarse-grid BFS over the static world: blocked cells are within half a
/// corridor width of a static obstacle or the tunnel surface.
pub fn corridor_exists(world: &WorldModel) -> bool {
    let res = 0.25;
    let clearance = CORRIDOR_WIDTH * 0.5;
    let nx = (world.end_wall_x / res) as usize;
    let ny = (world.cross_section.width / res) as usize;
    let nz = (world.cross_section.height / res) as usize;
    let y0 = -world.cross_section.width * 0.5;
    let idx = |x: usize, y: usize, z: usize| (z * ny + y) * nx + x;
    let mut blocked = vec![false; nx * ny * nz];
    let mut free_any = false;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let p = Vec3::new(
                    (x as f64 + 0.5) * res,
                    y0 + (y as f64 + 0.5) * res,
                    (z as f64 + 0.5) * res,
                );
                // longitudinal walls bound the corridor, they don't block it
                let b = world.cross_section.clearance(p.y, p.z) < clearance
                    || world.static_obstacles.iter().any(|o| o.distance(&p) < clearance);
                blocked[idx(x, y, z)] = b;
                free_any |= !b;
            }
        }
    }
    if !free_any {
        return false;
    }
    // BFS from any free cell in the first slab to any in the last
    let mut queue = std::collections::VecDeque::new();
    let mut seen = vec![false; nx * ny * nz];
    for z in 0..nz {
        for y in 0..ny {
            if !blocked[idx(0, y, z)] {
                seen[idx(0, y, z)] = true;
                queue.push_back((0usize, y, z));
            }
        }
    }
    while let Some((x, y, z)) = queue.pop_front() {
        if x == nx - 1 {
            return true;
        }
        let neighbors = [
            (x.wrapping_add(1), y, z),
            (x.wrapping_sub(1), y, z),
            (x, y.wrapping_add(1), z),
            (x, y.wrapping_sub(1), z),
            (x, y, z.wrapping_add(1)),
            (x, y, z.wrapping_sub(1)),
        ];
        for (a, b, c) in neighbors {
            if a < nx && b < ny && c < nz && !blocked[idx(a, b, c)] && !seen[idx(a, b, c)] {
                seen[idx(a, b, c)] = true;
                queue.push_back((a, b, c));
            }
        }
    }
    false
}

/// Serializes the world as JSON (meters/seconds schema mirroring the struct
/// fields).
pub fn save_world(world: &WorldModel, path: &std::path::Path) -> Result<()> {
    let json = serde_json::to_string_pretty(world).map_err(|e| Error::Serde(e.to_string()))?;
    std::fs::write(path, json).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_world(path: &std::path::Path) -> Result<WorldModel> {
    let data = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::from_str(&data).map_err(|e| Error::Serde(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let a = generate_scenario(1234, Difficulty::Moderate).unwrap();
        let b = generate_scenario(1234, Difficulty::Moderate).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_profile_has_no_obstacles() {
        let w = generate_scenario(7, Difficulty::Empty).unwrap();
        assert!(w.static_obstacles.is_empty());
        assert!(w.dynamic_actors.is_empty());
    }

    #[test]
    fn every_generated_world_has_a_corridor() {
        for seed in 0..30 {
            for d in [Difficulty::Sparse, Difficulty::Moderate, Difficulty::Dense, Difficulty::DynamicHeavy] {
                let w = generate_scenario(seed, d).unwrap();
                assert!(corridor_exists(&w), "seed {seed} {d:?}");
            }
        }
    }

    #[test]
    fn world_json_roundtrip() {
        let w = generate_scenario(99, Difficulty::Dense).unwrap();
        let path = std::env::temp_dir().join("tunnelnav_world_test.json");
        save_world(&w, &path).unwrap();
        let back = load_world(&path).unwrap();
        assert_eq!(w, back);
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn actors_stay_clear_of_the_start() {
        for seed in 0..10 {
            let w = generate_scenario(seed, Difficulty::DynamicHeavy).unwrap();
            for a in &w.dynamic_actors {
                for (_, p) in &a.waypoints {
                    assert!(p.x > 6.0, "walker too close to the start: {p:?}");
                }
            }
        }
    }
}
