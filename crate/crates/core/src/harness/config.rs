//! Declarative episode description: world, robot, sensor, and every module's
//! tunables. An episode is fully deterministic given one of these.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamic_map::DynamicMapConfig;
use crate::global_planner::RrtParams;
use crate::local_planner::OptimizerConfig;
use crate::mission::MissionConfig;
use crate::sim::{Difficulty, WorldModel};
use crate::{CameraModel, Error, Result, Vec3};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WorldSpec {
    Generated { seed: u64, difficulty: Difficulty },
    Explicit(Box<WorldModel>),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CameraParams {
    pub width: usize,
    pub height: usize,
    pub hfov_deg: f64,
    pub vfov_deg: f64,
    pub min_range: f64,
    pub max_range: f64,
}

impl CameraParams {
    pub fn model(&self) -> CameraModel {
        CameraModel::from_fov(
            self.width,
            self.height,
            self.hfov_deg.to_radians(),
            self.vfov_deg.to_radians(),
            self.min_range,
            self.max_range,
        )
    }
}

impl Default for CameraParams {
    fn default() -> Self {
        Self { width: 160, height: 120, hfov_deg: 87.0, vfov_deg: 58.0, min_range: 0.3, max_range: 6.0 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RobotParams {
    pub radius: f64,
    pub v_max: f64,
    pub a_max: f64,
    /// Speed the global planner times trajectories for; kept below `v_max`
    /// so local detours have headroom.
    pub cruise_speed: f64,
    pub start: Vec3,
    pub start_yaw: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            radius: 0.3,
            v_max: 1.5,
            a_max: 3.0,
            cruise_speed: 1.0,
            start: Vec3::new(1.0, 0.0, 1.5),
            start_yaw: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SimParams {
    pub dt: f64,
    pub time_limit: f64,
    pub noise_sigma0: f64,
    /// Pixel subsampling stride for occupancy raycasting.
    pub pixel_stride: usize,
    /// End the episode as soon as the wall is detected (benchmark mode).
    pub stop_at_wall: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        Self { dt: 0.1, time_limit: 300.0, noise_sigma0: 0.001, pixel_stride: 2, stop_at_wall: false }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LocalPlannerParams {
    /// B-spline knot spacing (s).
    pub knot_dt: f64,
    /// Optimization window (s).
    pub window: f64,
    /// Margin used when building search grids for planning and bypass
    /// searches (m).
    pub search_margin: f64,
}

impl Default for LocalPlannerParams {
    fn default() -> Self {
        Self { knot_dt: 0.15, window: 3.0, search_margin: 0.5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub world: WorldSpec,
    pub camera: CameraParams,
    pub robot: RobotParams,
    pub sim: SimParams,
    pub map_resolution: f64,
    pub dynamic_map: DynamicMapConfig<f64>,
    pub optimizer: OptimizerConfig<f64>,
    pub mission: MissionConfig,
    pub rrt: RrtParams<f64>,
    pub local: LocalPlannerParams,
}

impl ScenarioConfig {
    /// The reference mission scenario: 40 m tunnel, three static boxes, two
    /// walking actors, full mission through inspection and return.
    pub fn reference(seed: u64) -> Self {
        let mut world = WorldModel::empty_tunnel(40.0, 8.0, 8.0);
        world.static_obstacles = vec![
            crate::Aabb::new(Vec3::new(10.0, -1.2, 1.2), Vec3::new(0.5, 0.6, 1.2)),
            crate::Aabb::new(Vec3::new(18.0, 1.5, 1.0), Vec3::new(0.6, 0.5, 1.0)),
            crate::Aabb::new(Vec3::new(26.0, 0.2, 1.5), Vec3::new(0.4, 0.7, 1.5)),
        ];
        world.dynamic_actors = vec![
            // walkers cross the full tunnel and pause at the walls
            crate::sim::ActorScript {
                box_size: Vec3::new(0.5, 0.5, 1.7),
                waypoints: vec![
                    (0.0, Vec3::new(14.0, -3.0, 0.85)),
                    (6.0, Vec3::new(14.0, 3.0, 0.85)),
                    (10.0, Vec3::new(14.0, 3.0, 0.85)),
                ],
                loop_motion: true,
            },
            crate::sim::ActorScript {
                box_size: Vec3::new(0.5, 0.5, 1.7),
                waypoints: vec![
                    (0.0, Vec3::new(22.0, 3.0, 0.85)),
                    (5.0, Vec3::new(22.0, -3.0, 0.85)),
                    (9.0, Vec3::new(22.0, -3.0, 0.85)),
                ],
                loop_motion: true,
            },
        ];
        Self {
            name: "reference".into(),
            seed,
            world: WorldSpec::Explicit(Box::new(world)),
            camera: CameraParams::default(),
            robot: RobotParams::default(),
            sim: SimParams::default(),
            map_resolution: 0.2,
            dynamic_map: DynamicMapConfig::default(),
            optimizer: OptimizerConfig::default(),
            mission: MissionConfig::default(),
            rrt: RrtParams::default(),
            local: LocalPlannerParams::default(),
        }
    }

    /// Seeded benchmark scenario at the given difficulty; ends at wall
    /// detection (the forward task of the comparison tables).
    pub fn generated(seed: u64, difficulty: Difficulty) -> Self {
        let mut cfg = Self::reference(seed);
        cfg.name = format!("{difficulty:?}-{seed}").to_lowercase();
        cfg.world = WorldSpec::Generated { seed, difficulty };
        cfg.sim.stop_at_wall = true;
        cfg
    }

    pub fn build_world(&self) -> Result<WorldModel> {
        match &self.world {
            WorldSpec::Generated { seed, difficulty } => crate::sim::generate_scenario(*seed, *difficulty),
            WorldSpec::Explicit(w) => Ok((**w).clone()),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Serde(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let data = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        serde_json::from_str(&data).map_err(|e| Error::Serde(format!("{}: {e}", path.display())))
    }
}
