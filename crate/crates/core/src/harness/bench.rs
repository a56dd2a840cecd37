//! Benchmark sweeps over scenarios, planner variants, and repeats.

use serde::{Deserialize, Serialize};

use crate::harness::config::ScenarioConfig;
use crate::harness::episode::{run_episode, PlannerVariant};
use crate::harness::metrics::{mean, std_dev, RunMetrics};
use crate::sim::Difficulty;
use crate::Result;

/// Aggregated row per (variant, scenario) across repeats.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub variant: String,
    pub scenario: String,
    pub repeats: usize,
    pub nav_time_mean_s: f64,
    pub nav_time_std_s: f64,
    pub replan_ms_mean: f64,
    pub collision_rate: f64,
    pub completed_rate: f64,
}

#[derive(Debug, Clone, Default)]
pub struct BenchResults {
    pub rows: Vec<BenchRow>,
    pub episodes: Vec<RunMetrics>,
}

impl BenchResults {
    /// Mean navigation time per variant over completed episodes.
    pub fn variant_nav_mean(&self, variant: PlannerVariant) -> Option<f64> {
        let times: Vec<f64> = self
            .episodes
            .iter()
            .filter(|m| m.variant == variant.to_string())
            .filter_map(|m| m.navigation_time)
            .collect();
        (!times.is_empty()).then(|| mean(&times))
    }

    pub fn variant_collisions(&self, variant: PlannerVariant) -> usize {
        self.episodes
            .iter()
            .filter(|m| m.variant == variant.to_string())
            .filter(|m| m.collided)
            .count()
    }

    /// Human-readable table with navigation times normalized so the
    /// explore-only baseline reads 100%.
    pub fn summary(&self) -> String {
        let baseline = self.variant_nav_mean(PlannerVariant::ExploreOnly);
        let mut out = String::new();
        out.push_str("variant        nav time        replan(ms)  collision rate\n");
        for variant in [PlannerVariant::ExploreOnly, PlannerVariant::NoDynamicMap, PlannerVariant::Full] {
            let eps: Vec<&RunMetrics> =
                self.episodes.iter().filter(|m| m.variant == variant.to_string()).collect();
            if eps.is_empty() {
                continue;
            }
            let navs: Vec<f64> = eps.iter().filter_map(|m| m.navigation_time).collect();
            let nav = mean(&navs);
            let nav_std = std_dev(&navs);
            let pct = baseline
                .map(|b| format!("{:6.2}+-{:.2}%", 100.0 * nav / b, 100.0 * nav_std / b))
                .unwrap_or_else(|| format!("{nav:6.2}+-{nav_std:.2}s"));
            let replans: Vec<f64> = eps.iter().flat_map(|m| m.replan_times_ms.iter().copied()).collect();
            let collisions = eps.iter().filter(|m| m.collided).count();
            out.push_str(&format!(
                "{:<14} {:<15} {:<11.2} {:.2}%\n",
                variant.to_string(),
                pct,
                mean(&replans),
                100.0 * collisions as f64 / eps.len() as f64,
            ));
        }
        out
    }
}

/// The shipped desk-scale suite: `count` seeded scenarios cycling through
/// the cluttered difficulty profiles, every one containing both static
/// clutter and walking actors.
pub fn benchmark_suite(count: usize, base_seed: u64) -> Vec<ScenarioConfig> {
    let profiles = [Difficulty::Sparse, Difficulty::Moderate, Difficulty::Dense, Difficulty::DynamicHeavy];
    (0..count)
        .map(|i| ScenarioConfig::generated(base_seed + i as u64, profiles[i % profiles.len()]))
        .collect()
}

/// Runs every (scenario, variant) pair `repeats` times; the repeat index
/// perturbs the seed so repeats differ while staying reproducible.
pub fn run_benchmark(
    scenarios: &[ScenarioConfig],
    variants: &[PlannerVariant],
    repeats: usize,
) -> Result<BenchResults> {
    let mut results = BenchResults::default();
    for scenario in scenarios {
        for &variant in variants {
            let mut navs = Vec::new();
            let mut replans = Vec::new();
            let mut collisions = 0usize;
            let mut completions = 0usize;
            for rep in 0..repeats {
                let mut cfg = scenario.clone();
                cfg.seed = scenario.seed.wrapping_add(rep as u64 * 7919);
                let (metrics, _) = run_episode(&cfg, variant)?;
                if let Some(nav) = metrics.navigation_time {
                    navs.push(nav);
                }
                replans.extend(metrics.replan_times_ms.iter().copied());
                if metrics.collided {
                    collisions += 1;
                }
                if metrics.mission_completed {
                    completions += 1;
                }
                results.episodes.push(metrics);
            }
            results.rows.push(BenchRow {
                variant: variant.to_string(),
                scenario: scenario.name.clone(),
                repeats,
                nav_time_mean_s: mean(&navs),
                nav_time_std_s: std_dev(&navs),
                replan_ms_mean: mean(&replans),
                collision_rate: collisions as f64 / repeats as f64,
                completed_rate: completions as f64 / repeats as f64,
            });
        }
    }
    Ok(results)
}
