//! Autonomous tunnel-inspection stack: hybrid dynamic map (occupancy voxels
//! + tracked obstacle boxes) built from depth images, a hierarchical mission
//! planner, RRT* + minimum-snap global trajectories, and a gradient-based
//! B-spline local optimizer, exercised end to end in a deterministic
//! synthetic tunnel simulator.
//!
//! The numeric kernels (geometry, splines, costs, filters, grids) are generic
//! over the scalar type via [`Real`]; the simulator, mission layer, and
//! harness use the concrete `f64` aliases exported at the crate root.

pub mod depth;
pub mod dynamic_map;
pub mod geometry;
pub mod global_planner;
pub mod harness;
pub mod local_planner;
pub mod mission;
mod real;
pub mod sim;

pub use real::{real, Real};

use thiserror::Error as ThisError;

/// Crate-wide error type.
#[derive(Debug, ThisError)]
pub enum Error {
    #[error("point is at or behind the camera plane")]
    BehindCamera,
    #[error("pose {0:?} is outside the mapped volume")]
    PoseOutsideGrid([f64; 3]),
    #[error("depth image is {got:?} but camera expects {expected:?}")]
    DepthSizeMismatch { got: (usize, usize), expected: (usize, usize) },
    #[error("no collision-free path found within budget")]
    NoPath,
    #[error("corridor subdivision depth exceeded")]
    SubdivisionExceeded,
    #[error("fit window too short: {0}")]
    WindowTooShort(String),
    #[error("time {t} outside trajectory domain [{start}, {end}]")]
    OutOfDomain { t: f64, start: f64, end: f64 },
    #[error("guide-point search could not bypass an obstacle")]
    GuideUnresolvable,
    #[error("map around the inspection target is not known well enough")]
    MapKnowledgeInsufficient,
    #[error("exploration exhausted: no unknown space reachable")]
    ExplorationExhausted,
    #[error("scenario generation failed: {0}")]
    ScenarioGeneration(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("output path {0} exists (pass force to overwrite)")]
    OutputExists(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization error: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

// Concrete scalar aliases used by the simulator, mission layer, harness, and
// CLI.
pub type Vec3 = geometry::Vec3<f64>;
pub type Pose = geometry::Pose<f64>;
pub type Aabb = geometry::Aabb<f64>;
pub type CameraModel = geometry::CameraModel<f64>;
pub type DepthImage = depth::DepthImage<f64>;
pub type OccupancyGrid = dynamic_map::OccupancyGrid<f64>;
pub type BsplineTrajectory = local_planner::BsplineTrajectory<f64>;
pub type PolyTrajectory = global_planner::PolyTrajectory<f64>;
