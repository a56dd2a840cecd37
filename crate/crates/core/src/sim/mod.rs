//! Deterministic synthetic tunnel test bed: procedural worlds, a depth
//! raycaster, and a point-mass robot tracking commanded trajectories.

mod render;
mod robot;
mod scenario;
mod world;

pub use render::render_depth;
pub use robot::{step, Command, RobotState, TrajectoryCommand};
pub use scenario::{corridor_exists, generate_scenario, load_world, save_world, Difficulty};
pub use world::{ActorScript, CrossSection, WorldModel};
