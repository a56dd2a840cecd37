//! Closed-loop episode execution: sense -> map -> mission -> plan ->
//! optimize -> act, at a fixed step, fully determined by the scenario
//! config and seed.

use std::time::Instant;

use rand_chacha::ChaCha8Rng;

use crate::dynamic_map::{DynamicMap, MapView, SearchGrid, UnknownPolicy};
use crate::global_planner::{allocate_times, dedup_waypoints, min_snap_in_corridor, plan_static, Boundary, Corridor, PolyTrajectory};
use crate::harness::config::ScenarioConfig;
use crate::harness::logs::{CaptureRow, EpisodeLogs, TrackRow, TrajectoryRow};
use crate::harness::metrics::{RunMetrics, TrackingErrors};
use crate::local_planner::{optimize, BsplineTrajectory};
use crate::mission::{Directive, InspectionPath, LowerPlanner, MissionPlanner, TaskMode};
use crate::sim::{render_depth, Command, RobotState, TrajectoryCommand, WorldModel};
use crate::{CameraModel, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlannerVariant {
    /// Full pipeline with the dynamic map.
    Full,
    /// Occupancy mapping only: no obstacle tracking, no dynamic regions, no
    /// freeing of dynamic voxels.
    NoDynamicMap,
    /// Conservative sampling-style baseline: navigation goes through best
    /// viewpoints only and unknown space is never planned through.
    ExploreOnly,
}

impl std::fmt::Display for PlannerVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PlannerVariant::Full => "full",
            PlannerVariant::NoDynamicMap => "no-dm",
            PlannerVariant::ExploreOnly => "explore-only",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for PlannerVariant {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(PlannerVariant::Full),
            "no-dm" => Ok(PlannerVariant::NoDynamicMap),
            "explore-only" => Ok(PlannerVariant::ExploreOnly),
            other => Err(crate::Error::Config(format!("unknown variant '{other}'"))),
        }
    }
}

struct StaticPlan {
    goal: Vec3,
    mode: TaskMode,
    traj: PolyTrajectory<f64>,
}

struct InspectExec {
    /// `(cumulative end time, yaw)` per sweep waypoint.
    yaw_schedule: Vec<(f64, f64)>,
}

impl InspectExec {
    fn yaw_at(&self, t: f64) -> Option<f64> {
        self.yaw_schedule.iter().find(|(end, _)| t <= *end).map(|(_, yaw)| *yaw)
    }
}

struct CachedSearch {
    tick: usize,
    policy: UnknownPolicy,
    grid: SearchGrid<f64>,
}

struct Executor {
    command: Command,
    static_plan: Option<StaticPlan>,
    inspect: Option<InspectExec>,
    search_cache: Option<CachedSearch>,
    rng: ChaCha8Rng,
    replan_ms: Vec<f64>,
}

impl Executor {
    fn new(seed: u64) -> Self {
        use rand::SeedableRng;
        Self {
            command: Command::hold(),
            static_plan: None,
            inspect: None,
            search_cache: None,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x706c_616e),
            replan_ms: Vec::new(),
        }
    }
}

/// How stale (in ticks) a cached inflation mask may get before rebuilding.
const SEARCH_REBUILD_TICKS: usize = 5;

struct Adapter<'a> {
    view: MapView<'a, f64>,
    cfg: &'a ScenarioConfig,
    variant: PlannerVariant,
    robot: RobotState,
    t: f64,
    tick: usize,
    exec: &'a mut Executor,
}

impl Adapter<'_> {
    fn unknown_policy(&self, mode: TaskMode) -> UnknownPolicy {
        if self.variant == PlannerVariant::ExploreOnly {
            return UnknownPolicy::Blocked;
        }
        match mode {
            // the forward task plans through unknown space
            TaskMode::Forward => UnknownPolicy::Free,
            _ => UnknownPolicy::Blocked,
        }
    }

    fn search(&mut self, policy: UnknownPolicy) -> &SearchGrid<f64> {
        let stale = match &self.exec.search_cache {
            Some(c) => c.policy != policy || self.tick.saturating_sub(c.tick) >= SEARCH_REBUILD_TICKS,
            None => true,
        };
        if stale {
            let grid = SearchGrid::from_grid(self.view.grid, self.cfg.local.search_margin, policy);
            self.exec.search_cache = Some(CachedSearch { tick: self.tick, policy, grid });
        }
        &self.exec.search_cache.as_ref().unwrap().grid
    }

    fn static_plan_clear(&self, traj: &PolyTrajectory<f64>) -> bool {
        let mut t = self.t;
        let end = traj.end_time();
        while t <= end {
            if self.view.grid.has_occupied_within(&traj.position(t), self.cfg.robot.radius) {
                return false;
            }
            t += 0.1;
        }
        true
    }
}

impl LowerPlanner for Adapter<'_> {
    fn plan_to(&mut self, goal: Vec3, mode: TaskMode, final_yaw: Option<f64>) -> bool {
        // the SBP-style baseline never follows forward goals
        if self.variant == PlannerVariant::ExploreOnly && mode == TaskMode::Forward {
            return false;
        }
        self.exec.inspect = None;

        let dist = (self.robot.position - goal).norm();
        if dist < 0.1 {
            self.exec.command = Command { trajectory: TrajectoryCommand::Hold, yaw_override: final_yaw };
            return true;
        }
        // short hop: skip the sampling planner, fly a straight minimum-snap
        // segment if it is clear
        if dist < 1.0 {
            let step = 0.05;
            let n = (dist / step).ceil() as usize;
            let clear = (0..=n).all(|k| {
                let p = self.robot.position + (goal - self.robot.position) * (k as f64 / n as f64);
                !self.view.grid.has_occupied_within(&p, self.cfg.robot.radius)
            });
            if !clear {
                return false;
            }
            let duration = crate::global_planner::trapezoid_duration(
                dist,
                self.cfg.robot.cruise_speed,
                self.cfg.robot.a_max,
            );
            let boundary = Boundary {
                start_velocity: if self.robot.velocity.norm() > 0.05 {
                    self.robot.velocity
                } else {
                    Vec3::zeros()
                },
                ..Boundary::default()
            };
            match crate::global_planner::min_snap(&[self.robot.position, goal], &[duration], &boundary) {
                Ok(traj) => {
                    self.exec.static_plan = None;
                    self.exec.command = Command {
                        trajectory: TrajectoryCommand::Poly(traj.shift_to(self.t)),
                        yaw_override: final_yaw,
                    };
                    return true;
                }
                Err(_) => return false,
            }
        }

        let policy = self.unknown_policy(mode);
        let reusable = matches!(&self.exec.static_plan, Some(sp)
            if sp.mode == mode
                && (sp.goal - goal).norm() < 2.5
                && sp.traj.end_time() > self.t + 0.5)
            && self.static_plan_clear(&self.exec.static_plan.as_ref().unwrap().traj);
        if !reusable {
            let grid_bounds = self.view.grid.bounds();
            let boundary = Boundary {
                start_velocity: if self.robot.velocity.norm() > 0.05 {
                    self.robot.velocity
                } else {
                    Vec3::zeros()
                },
                ..Boundary::default()
            };
            let cruise = self.cfg.robot.cruise_speed;
            let a_max = self.cfg.robot.a_max;
            let corridor_margin = self.cfg.robot.radius + self.cfg.map_resolution * 0.5;
            let rrt = self.cfg.rrt;
            let start = self.robot.position;
            let search = {
                // split borrow: cache fill first, then use
                self.search(policy);
                &self.exec.search_cache.as_ref().unwrap().grid
            };
            let planned = plan_static(
                search,
                self.view.grid,
                start,
                goal,
                &grid_bounds,
                &rrt,
                cruise,
                self.cfg.robot.v_max,
                a_max,
                corridor_margin,
                self.cfg.robot.radius,
                &boundary,
                &mut self.exec.rng,
            );
            match planned {
                Ok(traj) => {
                    self.exec.static_plan = Some(StaticPlan { goal, mode, traj: traj.shift_to(self.t) });
                }
                Err(_) => {
                    // brake rather than coast along a stale command
                    self.exec.command = Command::hold();
                    return false;
                }
            }
        }

        let static_traj = self.exec.static_plan.as_ref().unwrap().traj.clone();
        let remaining = static_traj.end_time() - self.t;
        let min_window = self.cfg.local.knot_dt * 3.0;
        if remaining <= min_window {
            self.exec.command =
                Command { trajectory: TrajectoryCommand::Poly(static_traj), yaw_override: final_yaw };
            return true;
        }
        let window = self.cfg.local.window.min(remaining);
        let spline = match BsplineTrajectory::fit_reference(&static_traj, self.t, window, self.cfg.local.knot_dt, 3)
        {
            Ok(s) => s,
            Err(_) => {
                self.exec.command = Command::hold();
                return false;
            }
        };

        let tracks: &[crate::dynamic_map::TrackedObstacle<f64>] = match self.variant {
            PlannerVariant::NoDynamicMap => &[],
            _ => self.view.tracks,
        };
        let grid = self.view.grid;
        let mut opt_cfg = self.cfg.optimizer.clone();
        opt_cfg.v_max = self.cfg.robot.v_max;
        opt_cfg.a_max = self.cfg.robot.a_max;
        opt_cfg.robot_radius = self.cfg.robot.radius;
        self.search(policy);
        let search = &self.exec.search_cache.as_ref().unwrap().grid;
        let started = Instant::now();
        let (out, report) = optimize(&spline, grid, search, tracks, &opt_cfg);
        self.exec.replan_ms.push(started.elapsed().as_secs_f64() * 1e3);
        if !report.success {
            self.exec.command = Command::hold();
            return false;
        }
        self.exec.command = Command { trajectory: TrajectoryCommand::Spline(out), yaw_override: final_yaw };
        true
    }

    fn follow_inspection(&mut self, path: &InspectionPath) -> bool {
        let points: Vec<Vec3> = path.waypoints.iter().map(|w| w.position).collect();
        let points = {
            let mut pts = vec![self.robot.position];
            pts.extend(points);
            dedup_waypoints(&pts, 1e-6)
        };
        if points.len() < 2 {
            return false;
        }
        let durations = allocate_times(&points, self.cfg.robot.cruise_speed, self.cfg.robot.a_max);
        let corridor = Corridor::around(&points, 0.3);
        let traj = match min_snap_in_corridor(&points, &durations, &corridor, &Boundary::default(), 6) {
            Ok(t) => t.shift_to(self.t),
            Err(_) => return false,
        };

        // yaw per planned leg: each leg takes the commanded yaw of the sweep
        // waypoint nearest its endpoint
        let mut schedule = Vec::with_capacity(durations.len());
        let mut t_cum = self.t;
        for (i, d) in durations.iter().enumerate() {
            t_cum += d;
            let end = points[i + 1];
            let yaw = path
                .waypoints
                .iter()
                .min_by(|a, b| {
                    (a.position - end).norm().total_cmp(&(b.position - end).norm())
                })
                .map(|w| w.yaw)
                .unwrap_or(0.0);
            schedule.push((t_cum, yaw));
        }
        self.exec.static_plan = None;
        self.exec.inspect = Some(InspectExec { yaw_schedule: schedule });
        self.exec.command = Command { trajectory: TrajectoryCommand::Poly(traj), yaw_override: Some(0.0) };
        true
    }
}

/// Distance from the robot center to the nearest obstacle surface (tunnel
/// walls excluded so the metric reflects obstacle avoidance).
fn obstacle_clearance(world: &WorldModel, actors: &[crate::Aabb], p: &Vec3) -> f64 {
    world
        .static_obstacles
        .iter()
        .chain(actors.iter())
        .map(|b| b.distance(p))
        .fold(f64::INFINITY, f64::min)
}

fn actor_visible(camera: &CameraModel, robot: &RobotState, center: &Vec3) -> bool {
    camera.sees(&robot.pose().world_to_camera(*center))
}

/// Runs one closed-loop episode to completion, timeout, or abort.
pub fn run_episode(cfg: &ScenarioConfig, variant: PlannerVariant) -> Result<(RunMetrics, EpisodeLogs)> {
    let world = cfg.build_world()?;
    let camera = cfg.camera.model();
    let cs = world.cross_section;
    let res = cfg.map_resolution;
    let dims = [
        (world.tunnel_length / res).ceil() as usize,
        (cs.width / res).ceil() as usize,
        (cs.height / res).ceil() as usize,
    ];
    let origin = Vec3::new(0.0, -cs.width * 0.5, 0.0);
    let mut map = DynamicMap::new(origin, res, dims, cfg.dynamic_map.clone());
    let mut robot = RobotState::at(cfg.robot.start, cfg.robot.start_yaw, cfg.robot.v_max, cfg.robot.a_max);

    let mut mission_cfg = cfg.mission.clone();
    mission_cfg.cross_section_width = cs.width;
    mission_cfg.cross_section_height = cs.height;
    mission_cfg.robot_radius = cfg.robot.radius;
    mission_cfg.cruise_z = cfg.robot.start.z;
    let mut mission = MissionPlanner::new(mission_cfg, camera, cfg.robot.start, cfg.seed);
    let mut exec = Executor::new(cfg.seed);

    let mut logs = EpisodeLogs::default();
    let mut tracking = TrackingErrors::default();
    let mut actor_seen_frames = vec![0u32; world.dynamic_actors.len()];
    let mut collision_ticks = 0usize;
    let mut min_clearance = f64::INFINITY;
    let mut aborted = None;
    let mut completed = false;
    let mut timed_out = true;
    let mut final_t = 0.0;

    let steps = (cfg.sim.time_limit / cfg.sim.dt).ceil() as usize;
    for tick in 0..steps {
        let t = tick as f64 * cfg.sim.dt;
        final_t = t;
        let actors = world.actor_boxes(t);
        let img = render_depth(
            &world,
            &actors,
            &robot.pose(),
            &camera,
            cfg.sim.noise_sigma0,
            cfg.seed ^ (tick as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
        );
        if variant == PlannerVariant::NoDynamicMap {
            map.grid.update_from_depth(&img, &robot.pose(), &camera, cfg.sim.pixel_stride)?;
        } else {
            map.ingest(&img, &robot.pose(), &camera, t, cfg.sim.pixel_stride)?;
        }
        map.grid.mark_free_sphere(&robot.position, cfg.robot.radius + 0.15);

        // tracking-error bookkeeping against scripted truth
        if variant != PlannerVariant::NoDynamicMap {
            for (k, actor) in world.dynamic_actors.iter().enumerate() {
                let truth_box = actor.box_at(t);
                if !actor_visible(&camera, &robot, &truth_box.center) {
                    actor_seen_frames[k] = 0;
                    continue;
                }
                actor_seen_frames[k] += 1;
                if actor_seen_frames[k] <= 3 {
                    continue; // burn-in
                }
                let truth_vel = actor.velocity_at(t);
                if let Some(track) = map
                    .tracker
                    .tracks
                    .iter()
                    .filter(|tr| (tr.center() - truth_box.center).norm() < 1.5)
                    .min_by(|a, b| {
                        (a.center() - truth_box.center)
                            .norm()
                            .total_cmp(&(b.center() - truth_box.center).norm())
                    })
                {
                    tracking.position_sum += (track.center() - truth_box.center).norm();
                    tracking.velocity_sum += (track.velocity() - truth_vel).norm();
                    let size_err: f64 = (0..3)
                        .map(|ax| (track.bbox.half_extents[ax] - truth_box.half_extents[ax]).abs() * 2.0)
                        .sum::<f64>()
                        / 3.0;
                    tracking.size_sum += size_err;
                    tracking.samples += 1;
                }
            }
            for tr in &map.tracker.tracks {
                logs.tracks.push(TrackRow {
                    t,
                    id: tr.id,
                    cx: tr.center().x,
                    cy: tr.center().y,
                    cz: tr.center().z,
                    hx: tr.bbox.half_extents.x,
                    hy: tr.bbox.half_extents.y,
                    hz: tr.bbox.half_extents.z,
                    vx: tr.velocity().x,
                    vy: tr.velocity().y,
                    vz: tr.velocity().z,
                    dynamic: tr.dynamic,
                });
            }
        }

        let directive = {
            let view = map.view();
            let mut adapter = Adapter { view, cfg, variant, robot, t, tick, exec: &mut exec };
            mission.step(t, &robot.pose(), view, &mut adapter)
        };
        match directive {
            Directive::Complete => {
                completed = true;
                timed_out = false;
                break;
            }
            Directive::Aborted(reason) => {
                aborted = Some(reason);
                timed_out = false;
                break;
            }
            Directive::Continue => {}
        }

        if mission.mode() == TaskMode::Inspect {
            if let Some(run) = &exec.inspect {
                if let Some(yaw) = run.yaw_at(t) {
                    exec.command.yaw_override = Some(yaw);
                }
            }
        }

        robot = crate::sim::step(&robot, &exec.command, t, cfg.sim.dt);
        let t_next = t + cfg.sim.dt;
        let actors_next = world.actor_boxes(t_next);
        if world.check_collision(&actors_next, &robot.position, cfg.robot.radius) {
            collision_ticks += 1;
        }
        min_clearance = min_clearance.min(obstacle_clearance(&world, &actors_next, &robot.position));
        logs.trajectory.push(TrajectoryRow {
            t: t_next,
            x: robot.position.x,
            y: robot.position.y,
            z: robot.position.z,
            vx: robot.velocity.x,
            vy: robot.velocity.y,
            vz: robot.velocity.z,
            yaw: robot.yaw,
            mode: mission.mode().to_string(),
        });

        if cfg.sim.stop_at_wall && mission.wall_detected_at().is_some() {
            completed = true;
            timed_out = false;
            break;
        }
    }

    logs.events = mission.events().to_vec();
    logs.transitions = mission.transitions().to_vec();
    logs.captures = mission.captures().iter().map(CaptureRow::from).collect();

    let metrics = RunMetrics {
        scenario: cfg.name.clone(),
        variant: variant.to_string(),
        seed: cfg.seed,
        navigation_time: mission.wall_detected_at(),
        mission_completed: completed,
        timed_out,
        aborted,
        collided: collision_ticks > 0,
        collision_ticks,
        min_obstacle_clearance: min_clearance,
        replan_times_ms: exec.replan_ms,
        tracking,
        capture_count: mission.captures().len(),
        sim_time: final_t,
    };
    Ok((metrics, logs))
}
