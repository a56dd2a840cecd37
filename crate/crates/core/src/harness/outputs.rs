//! File outputs for runs and benchmarks: metrics CSV, per-episode logs,
//! grid snapshots, and a plain-text summary.

use std::path::Path;

use crate::harness::bench::BenchResults;
use crate::harness::logs::{write_csv, EpisodeLogs};
use crate::harness::metrics::RunMetrics;
use crate::{Error, OccupancyGrid, Result};

fn prepare_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        if !force {
            return Err(Error::OutputExists(dir.display().to_string()));
        }
        std::fs::remove_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))
}

/// Writes one episode's logs and metrics under `dir`.
pub fn write_episode_outputs(
    dir: &Path,
    force: bool,
    metrics: &RunMetrics,
    logs: &EpisodeLogs,
    grid: Option<&OccupancyGrid>,
) -> Result<()> {
    prepare_dir(dir, force)?;
    write_csv(std::slice::from_ref(metrics), &dir.join("metrics.csv"))?;
    write_csv(&logs.trajectory, &dir.join("trajectory.csv"))?;
    write_csv(&logs.tracks, &dir.join("tracks.csv"))?;
    write_csv(&logs.events, &dir.join("events.csv"))?;
    write_csv(&logs.transitions, &dir.join("transitions.csv"))?;
    write_csv(&logs.captures, &dir.join("captures.csv"))?;
    if let Some(grid) = grid {
        grid.export_binary(&dir.join("grid.bin"))?;
    }
    let summary = format!(
        "scenario {} variant {} seed {}\nnavigation time: {:?} s\ncompleted: {} collided: {} (ticks {})\nmin obstacle clearance: {:.3} m\nreplan median {:.2} ms p99 {:.2} ms over {} calls\ncaptures: {}\n",
        metrics.scenario,
        metrics.variant,
        metrics.seed,
        metrics.navigation_time,
        metrics.mission_completed,
        metrics.collided,
        metrics.collision_ticks,
        metrics.min_obstacle_clearance,
        metrics.replan_median_ms(),
        metrics.replan_p99_ms(),
        metrics.replan_times_ms.len(),
        metrics.capture_count,
    );
    std::fs::write(dir.join("summary.txt"), summary).map_err(|e| Error::io(dir.display().to_string(), e))
}

/// Writes benchmark aggregate rows, per-episode metrics, and the normalized
/// summary table.
pub fn write_benchmark_outputs(dir: &Path, force: bool, results: &BenchResults) -> Result<()> {
    prepare_dir(dir, force)?;
    write_csv(&results.rows, &dir.join("metrics.csv"))?;
    // per-episode rows without the latency vectors
    #[derive(serde::Serialize)]
    struct EpisodeRow<'a> {
        scenario: &'a str,
        variant: &'a str,
        seed: u64,
        navigation_time_s: Option<f64>,
        completed: bool,
        collided: bool,
        min_clearance_m: f64,
        replan_median_ms: f64,
        sim_time_s: f64,
    }
    let rows: Vec<EpisodeRow> = results
        .episodes
        .iter()
        .map(|m| EpisodeRow {
            scenario: &m.scenario,
            variant: &m.variant,
            seed: m.seed,
            navigation_time_s: m.navigation_time,
            completed: m.mission_completed,
            collided: m.collided,
            min_clearance_m: m.min_obstacle_clearance,
            replan_median_ms: m.replan_median_ms(),
            sim_time_s: m.sim_time,
        })
        .collect();
    write_csv(&rows, &dir.join("episodes.csv"))?;
    std::fs::write(dir.join("summary.txt"), results.summary())
        .map_err(|e| Error::io(dir.display().to_string(), e))
}
