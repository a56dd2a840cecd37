//! Measured outcomes of one episode and their aggregation.

use serde::{Deserialize, Serialize};

/// Mean absolute tracking errors against scripted ground truth, measured
/// only over frames where the obstacle is inside the camera frustum and
/// range, after the per-obstacle burn-in.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct TrackingErrors {
    pub position_sum: f64,
    pub velocity_sum: f64,
    pub size_sum: f64,
    pub samples: usize,
}

impl TrackingErrors {
    pub fn position_mae(&self) -> f64 {
        if self.samples == 0 { 0.0 } else { self.position_sum / self.samples as f64 }
    }
    pub fn velocity_mae(&self) -> f64 {
        if self.samples == 0 { 0.0 } else { self.velocity_sum / self.samples as f64 }
    }
    pub fn size_mae(&self) -> f64 {
        if self.samples == 0 { 0.0 } else { self.size_sum / self.samples as f64 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetrics {
    pub scenario: String,
    pub variant: String,
    pub seed: u64,
    /// Sim time from start until the inspection wall is first detected (s).
    pub navigation_time: Option<f64>,
    pub mission_completed: bool,
    pub timed_out: bool,
    pub aborted: Option<String>,
    pub collided: bool,
    pub collision_ticks: usize,
    pub min_obstacle_clearance: f64,
    /// Wall-clock time of each local optimizer call (ms). Excluded from the
    /// deterministic fingerprint.
    pub replan_times_ms: Vec<f64>,
    pub tracking: TrackingErrors,
    pub capture_count: usize,
    pub sim_time: f64,
}

impl RunMetrics {
    pub fn replan_median_ms(&self) -> f64 {
        percentile(&self.replan_times_ms, 0.5)
    }

    pub fn replan_p99_ms(&self) -> f64 {
        percentile(&self.replan_times_ms, 0.99)
    }

    /// Canonical rendering of every simulation-derived field. Wall-clock
    /// replanning latencies are excluded: they are the one quantity the host
    /// machine, not the simulation, determines.
    pub fn fingerprint(&self) -> String {
        format!(
            "{}|{}|{}|{:?}|{}|{}|{:?}|{}|{}|{:.17e}|{:.17e}|{:.17e}|{:.17e}|{}|{}|{:.17e}",
            self.scenario,
            self.variant,
            self.seed,
            self.navigation_time,
            self.mission_completed,
            self.timed_out,
            self.aborted,
            self.collided,
            self.collision_ticks,
            self.min_obstacle_clearance,
            self.tracking.position_mae(),
            self.tracking.velocity_mae(),
            self.tracking.size_mae(),
            self.tracking.samples,
            self.capture_count,
            self.sim_time,
        )
    }
}

pub fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() { 0.0 } else { values.iter().sum::<f64>() / values.len() as f64 }
}

pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}
