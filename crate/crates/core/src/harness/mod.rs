//! Episode orchestration: scenario configs, the closed-loop runner, and the
//! benchmark sweep reproducing the navigation / obstacle-avoidance
//! comparisons at desk scale.

mod bench;
mod config;
mod episode;
mod logs;
mod metrics;
mod outputs;

pub use bench::{benchmark_suite, run_benchmark, BenchResults, BenchRow};
pub use config::{CameraParams, LocalPlannerParams, RobotParams, ScenarioConfig, SimParams, WorldSpec};
pub use episode::{run_episode, PlannerVariant};
pub use logs::{read_csv, write_csv, CaptureRow, EpisodeLogs, TrackRow, TrajectoryRow};
pub use metrics::{mean, percentile, std_dev, RunMetrics, TrackingErrors};
pub use outputs::{write_benchmark_outputs, write_episode_outputs};
