//! High-level task planner: mode selection among Forward / Explore /
//! Inspect / Return, goal generation per mode, and the transitions between
//! them. Lower-level planning is injected so the mission logic is testable
//! against scripted planners.

mod inspection;
mod viewpoint;

pub use inspection::{
    detect_inspection_target, inspection_path, known_fraction_at, wall_coverage, InspectionPath,
    InspectionWaypoint,
};
pub use viewpoint::{best_viewpoint, sample_viewpoint_candidates, viewpoint_gain, Viewpoint};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamic_map::MapView;
use crate::{CameraModel, Error, OccupancyGrid, Pose, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskMode {
    Forward,
    Explore,
    Inspect,
    Return,
}

impl std::fmt::Display for TaskMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TaskMode::Forward => "forward",
            TaskMode::Explore => "explore",
            TaskMode::Inspect => "inspect",
            TaskMode::Return => "return",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MissionConfig {
    /// Forward goal distance l (m).
    pub forward_step: f64,
    /// Fraction of the cross-section that must read occupied to call the
    /// slab an inspection target.
    pub wall_coverage_fraction: f64,
    /// The wall must be within this distance to switch to Inspect (m).
    pub wall_lookahead: f64,
    pub zigzag_spacing: f64,
    pub standoff: f64,
    pub fringe_yaw_deg: f64,
    pub viewpoint_samples: usize,
    pub viewpoint_yaw_samples: usize,
    pub viewpoint_radius: f64,
    pub gain_rays_horizontal: usize,
    pub gain_rays_vertical: usize,
    /// Known fraction of the inspection plane required before sweeping.
    pub known_fraction_threshold: f64,
    /// Return completes within this distance of the start (m).
    pub completion_tolerance: f64,
    /// Path distance between image-capture events during Inspect (m).
    pub capture_spacing: f64,
    pub cruise_z: f64,
    /// Clearance kept from the tunnel surfaces by the sweep (m).
    pub wall_margin: f64,
    pub robot_radius: f64,
    pub cross_section_width: f64,
    pub cross_section_height: f64,
    /// An exploration hop is abandoned after this long (s).
    pub explore_timeout: f64,
    pub explore_reach_tolerance: f64,
    /// Consecutive lower-level failures before the mission aborts.
    pub max_consecutive_failures: u32,
    /// Clamp forward goals this far short of the detected wall (m).
    pub wall_standoff_clamp: f64,
}

impl Default for MissionConfig {
    fn default() -> Self {
        Self {
            forward_step: 5.0,
            wall_coverage_fraction: 0.6,
            wall_lookahead: 5.0,
            zigzag_spacing: 2.0,
            standoff: 2.0,
            fringe_yaw_deg: 45.0,
            viewpoint_samples: 12,
            viewpoint_yaw_samples: 6,
            viewpoint_radius: 4.0,
            gain_rays_horizontal: 13,
            gain_rays_vertical: 9,
            known_fraction_threshold: 0.8,
            completion_tolerance: 0.3,
            capture_spacing: 0.5,
            cruise_z: 1.5,
            wall_margin: 0.8,
            robot_radius: 0.3,
            cross_section_width: 8.0,
            cross_section_height: 8.0,
            explore_timeout: 12.0,
            explore_reach_tolerance: 0.5,
            max_consecutive_failures: 60,
            wall_standoff_clamp: 1.5,
        }
    }
}

/// Lower-level planning interface the mission drives (Alg. 1's
/// `lowerLevelPlanner`). Implemented by the harness over RRT* + minimum
/// snap + the B-spline optimizer, and by scripted mocks in tests.
pub trait LowerPlanner {
    /// Plans toward `goal` in the given mode and installs the trajectory for
    /// execution; returns success.
    fn plan_to(&mut self, goal: Vec3, mode: TaskMode, final_yaw: Option<f64>) -> bool;
    /// Installs the inspection sweep for execution; returns success.
    fn follow_inspection(&mut self, path: &InspectionPath) -> bool;
}

/// Outcome of one mission tick.
#[derive(Debug, Clone, PartialEq)]
pub enum Directive {
    Continue,
    Complete,
    Aborted(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub t: f64,
    pub from: TaskMode,
    pub to: TaskMode,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CaptureEvent {
    pub t: f64,
    pub position: Vec3,
    pub yaw: f64,
}

/// Row of the mission event log: one per tick with the active goal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MissionEventRow {
    pub t: f64,
    pub mode: String,
    pub goal_x: f64,
    pub goal_y: f64,
    pub goal_z: f64,
    pub reason: String,
}

struct ExploreTarget {
    position: Vec3,
    yaw: f64,
    deadline: f64,
}

struct InspectionRun {
    path: InspectionPath,
    traveled: f64,
    last_position: Vec3,
    capture_accum: f64,
}

pub struct MissionPlanner {
    pub cfg: MissionConfig,
    camera: CameraModel,
    mode: TaskMode,
    previous_mode: TaskMode,
    start_position: Vec3,
    wall_x: Option<f64>,
    wall_detected_at: Option<f64>,
    inspection_done: bool,
    active_explore: Option<ExploreTarget>,
    inspection: Option<InspectionRun>,
    transitions: Vec<TransitionRecord>,
    captures: Vec<CaptureEvent>,
    events: Vec<MissionEventRow>,
    consecutive_failures: u32,
    done: bool,
    rng: ChaCha8Rng,
}

impl MissionPlanner {
    pub fn new(cfg: MissionConfig, camera: CameraModel, start_position: Vec3, seed: u64) -> Self {
        use rand::SeedableRng;
        Self {
            cfg,
            camera,
            mode: TaskMode::Forward,
            previous_mode: TaskMode::Forward,
            start_position,
            wall_x: None,
            wall_detected_at: None,
            inspection_done: false,
            active_explore: None,
            inspection: None,
            transitions: Vec::new(),
            captures: Vec::new(),
            events: Vec::new(),
            consecutive_failures: 0,
            done: false,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x6d69_7373),
        }
    }

    pub fn mode(&self) -> TaskMode {
        self.mode
    }

    pub fn transitions(&self) -> &[TransitionRecord] {
        &self.transitions
    }

    pub fn captures(&self) -> &[CaptureEvent] {
        &self.captures
    }

    pub fn events(&self) -> &[MissionEventRow] {
        &self.events
    }

    pub fn wall_detected_at(&self) -> Option<f64> {
        self.wall_detected_at
    }

    pub fn wall_x(&self) -> Option<f64> {
        self.wall_x
    }

    pub fn inspection_completed(&self) -> bool {
        self.inspection_done
    }

    pub fn start_position(&self) -> Vec3 {
        self.start_position
    }

    fn transition(&mut self, t: f64, to: TaskMode, reason: &str) {
        debug_assert!(self.mode != to, "self transition");
        if to == TaskMode::Explore {
            debug_assert!(self.mode != TaskMode::Explore);
            self.previous_mode = self.mode;
        }
        self.transitions.push(TransitionRecord { t, from: self.mode, to, reason: reason.into() });
        self.mode = to;
    }

    fn log_event(&mut self, t: f64, goal: Vec3, reason: &str) {
        self.events.push(MissionEventRow {
            t,
            mode: self.mode.to_string(),
            goal_x: goal.x,
            goal_y: goal.y,
            goal_z: goal.z,
            reason: reason.into(),
        });
    }

    /// Forward goal: `forward_step` ahead along the tunnel axis, pulled to
    /// the centerline laterally, clamped inside the grid and short of a
    /// detected wall.
    pub fn forward_goal(&self, robot: &Pose, grid: &OccupancyGrid) -> Vec3 {
        let bounds = grid.bounds();
        let mut x = robot.position.x + self.cfg.forward_step;
        if let Some(wx) = self.wall_x {
            x = x.min(wx - self.cfg.standoff.max(self.cfg.wall_standoff_clamp));
        }
        x = x.clamp(bounds.min().x + 0.5, bounds.max().x - 0.5);
        let y = robot.position.y * 0.2; // decay toward the centerline
        let z = self.cfg.cruise_z;
        Vec3::new(x, y, z)
    }

    pub fn return_goal(&self) -> Vec3 {
        self.start_position
    }

    /// One Alg. 1 tick. `map` is the current snapshot, `robot` the simulator
    /// pose, `planner` the lower-level planning stack.
    pub fn step(
        &mut self,
        t: f64,
        robot: &Pose,
        map: MapView<'_, f64>,
        planner: &mut dyn LowerPlanner,
    ) -> Directive {
        if self.done {
            return Directive::Complete;
        }
        // isInspectionComplete: Return goal reached
        if self.mode == TaskMode::Return
            && (robot.position - self.start_position).norm() < self.cfg.completion_tolerance
        {
            self.done = true;
            return Directive::Complete;
        }

        // reachInspectionTarget (checked while approaching)
        if self.mode == TaskMode::Forward && !self.inspection_done {
            if let Some(wx) = detect_inspection_target(map.grid, robot, &self.cfg) {
                self.wall_x = Some(wx);
                if self.wall_detected_at.is_none() {
                    self.wall_detected_at = Some(t);
                }
                self.transition(t, TaskMode::Inspect, "inspection target reached");
            }
        }

        match self.mode {
            TaskMode::Forward => self.tick_forward(t, robot, map, planner),
            TaskMode::Explore => self.tick_explore(t, robot, map, planner),
            TaskMode::Inspect => self.tick_inspect(t, robot, map, planner),
            TaskMode::Return => self.tick_return(t, robot, planner),
        }
    }

    fn fail(&mut self, t: f64, what: &str) -> Option<Directive> {
        self.consecutive_failures += 1;
        if self.consecutive_failures > self.cfg.max_consecutive_failures {
            return Some(Directive::Aborted(format!("{what} failed {} times", self.consecutive_failures)));
        }
        let _ = t;
        None
    }

    /// Keeps an in-flight exploration hop alive: re-plans its local window
    /// and reports `Continue` until the viewpoint is reached (position and
    /// yaw), the deadline passes, or planning toward it fails.
    fn continue_explore(&mut self, t: f64, robot: &Pose, planner: &mut dyn LowerPlanner) -> Option<Directive> {
        let ex = self.active_explore.as_ref()?;
        let reached = (robot.position - ex.position).norm() < self.cfg.explore_reach_tolerance
            && crate::geometry::wrap_angle(robot.yaw - ex.yaw).abs() < 0.3;
        if !reached && t < ex.deadline {
            let (pos, yaw) = (ex.position, ex.yaw);
            if planner.plan_to(pos, TaskMode::Explore, Some(yaw)) {
                return Some(Directive::Continue);
            }
        }
        self.active_explore = None;
        None
    }

    fn tick_forward(
        &mut self,
        t: f64,
        robot: &Pose,
        map: MapView<'_, f64>,
        planner: &mut dyn LowerPlanner,
    ) -> Directive {
        let goal = self.forward_goal(robot, map.grid);
        self.log_event(t, goal, "forward goal");
        if planner.plan_to(goal, TaskMode::Forward, None) {
            self.consecutive_failures = 0;
            self.active_explore = None;
            return Directive::Continue;
        }
        if let Some(d) = self.continue_explore(t, robot, planner) {
            return d;
        }
        if let Some(abort) = self.fail(t, "forward planning") {
            return abort;
        }
        self.transition(t, TaskMode::Explore, "local planning failed");
        Directive::Continue
    }

    fn tick_explore(
        &mut self,
        t: f64,
        robot: &Pose,
        map: MapView<'_, f64>,
        planner: &mut dyn LowerPlanner,
    ) -> Directive {
        // exploration on behalf of the inspection focuses on the map around
        // the target wall
        let focus = (self.previous_mode == TaskMode::Inspect)
            .then(|| self.wall_x)
            .flatten()
            .map(|wx| {
                crate::Aabb::from_min_max(
                    Vec3::new(wx - self.cfg.standoff - 1.0, -self.cfg.cross_section_width, 0.0),
                    Vec3::new(wx + 1.0, self.cfg.cross_section_width, self.cfg.cross_section_height + 1.0),
                )
            });
        let outcome =
            best_viewpoint(map.grid, robot, &self.camera, &self.cfg, focus.as_ref(), &mut self.rng);
        match outcome {
            Ok(vp) => {
                self.log_event(t, vp.pose.position, "explore viewpoint");
                if planner.plan_to(vp.pose.position, TaskMode::Explore, Some(vp.pose.yaw)) {
                    self.consecutive_failures = 0;
                    self.active_explore = Some(ExploreTarget {
                        position: vp.pose.position,
                        yaw: vp.pose.yaw,
                        deadline: t + self.cfg.explore_timeout,
                    });
                } else if let Some(abort) = self.fail(t, "explore planning") {
                    return abort;
                }
            }
            Err(Error::ExplorationExhausted) => {
                self.log_event(t, robot.position, "exploration exhausted");
                if let Some(abort) = self.fail(t, "exploration") {
                    return abort;
                }
            }
            Err(_) => {
                if let Some(abort) = self.fail(t, "exploration") {
                    return abort;
                }
            }
        }
        // Alg. 1 restores the previous task mode right after dispatching the
        // exploration trajectory.
        let back = self.previous_mode;
        self.transition(t, back, "explore dispatched");
        Directive::Continue
    }

    fn tick_inspect(
        &mut self,
        t: f64,
        robot: &Pose,
        map: MapView<'_, f64>,
        planner: &mut dyn LowerPlanner,
    ) -> Directive {
        let Some(wall_x) = self.wall_x else {
            self.transition(t, TaskMode::Explore, "no wall estimate");
            return Directive::Continue;
        };
        if let Some(run) = &mut self.inspection {
            let step = (robot.position - run.last_position).norm();
            run.traveled += step;
            run.capture_accum += step;
            run.last_position = robot.position;
            if run.capture_accum >= self.cfg.capture_spacing {
                run.capture_accum = 0.0;
                self.captures.push(CaptureEvent { t, position: robot.position, yaw: robot.yaw });
            }
            let last = run.path.waypoints.last().unwrap().position;
            let total = run.path.length();
            if run.traveled >= 0.8 * total && (robot.position - last).norm() < 0.5 {
                self.inspection = None;
                self.inspection_done = true;
                self.transition(t, TaskMode::Return, "inspection path executed");
            }
            return Directive::Continue;
        }
        match inspection_path(map.grid, wall_x, &self.cfg) {
            Ok(path) => {
                self.log_event(t, path.waypoints[0].position, "inspection sweep");
                if planner.follow_inspection(&path) {
                    self.consecutive_failures = 0;
                    self.inspection = Some(InspectionRun {
                        path,
                        traveled: 0.0,
                        last_position: robot.position,
                        capture_accum: 0.0,
                    });
                    return Directive::Continue;
                }
                if let Some(abort) = self.fail(t, "inspection execution") {
                    return abort;
                }
                self.transition(t, TaskMode::Explore, "inspection planning failed");
                Directive::Continue
            }
            Err(_) => {
                // let a dispatched exploration hop finish before sampling
                // another viewpoint
                if let Some(d) = self.continue_explore(t, robot, planner) {
                    return d;
                }
                if let Some(abort) = self.fail(t, "inspection preparation") {
                    return abort;
                }
                self.transition(t, TaskMode::Explore, "wall map insufficient");
                Directive::Continue
            }
        }
    }

    fn tick_return(&mut self, t: f64, _robot: &Pose, planner: &mut dyn LowerPlanner) -> Directive {
        let goal = self.return_goal();
        self.log_event(t, goal, "return goal");
        if planner.plan_to(goal, TaskMode::Return, None) {
            self.consecutive_failures = 0;
        } else if let Some(abort) = self.fail(t, "return planning") {
            return abort;
        }
        Directive::Continue
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamic_map::{DynamicMapConfig, OccupancyConfig};
    use crate::Aabb;

    fn camera() -> CameraModel {
        CameraModel::from_fov(64, 48, 87f64.to_radians(), 58f64.to_radians(), 0.3, 6.0)
    }

    fn grid_with_wall(wall_x: Option<f64>) -> OccupancyGrid {
        let mut grid = OccupancyGrid::new(
            Vec3::new(0.0, -4.0, 0.0),
            0.2,
            [100, 40, 40],
            OccupancyConfig::default(),
        );
        grid.clear_boxes(&[Aabb::from_min_max(Vec3::new(0.0, -4.0, 0.0), Vec3::new(20.0, 4.0, 8.0))]);
        if let Some(x) = wall_x {
            grid.occupy_box(&Aabb::from_min_max(Vec3::new(x, -4.0, 0.0), Vec3::new(x + 0.4, 4.0, 8.0)));
        }
        grid
    }

    struct ScriptedPlanner {
        plan_results: Vec<bool>,
        calls: Vec<(TaskMode, Vec3)>,
        inspection_ok: bool,
    }

    impl ScriptedPlanner {
        fn always(ok: bool) -> Self {
            Self { plan_results: vec![ok], calls: Vec::new(), inspection_ok: true }
        }
    }

    impl LowerPlanner for ScriptedPlanner {
        fn plan_to(&mut self, goal: Vec3, mode: TaskMode, _final_yaw: Option<f64>) -> bool {
            self.calls.push((mode, goal));
            if self.plan_results.len() == 1 {
                self.plan_results[0]
            } else {
                self.plan_results.remove(0)
            }
        }
        fn follow_inspection(&mut self, _path: &InspectionPath) -> bool {
            self.inspection_ok
        }
    }

    fn tracks() -> Vec<crate::dynamic_map::TrackedObstacle<f64>> {
        Vec::new()
    }

    #[test]
    fn forward_failure_switches_to_explore_and_restores() {
        let grid = grid_with_wall(None);
        let tr = tracks();
        let map = MapView { grid: &grid, tracks: &tr };
        let cfg = MissionConfig::default();
        let mut mission = MissionPlanner::new(cfg, camera(), Vec3::new(1.0, 0.0, 1.5), 7);
        let robot = Pose::new(Vec3::new(1.0, 0.0, 1.5), 0.0);
        let mut planner = ScriptedPlanner::always(false);
        mission.step(0.0, &robot, map, &mut planner);
        assert_eq!(mission.mode(), TaskMode::Explore);
        assert_eq!(mission.transitions()[0].from, TaskMode::Forward);
        assert_eq!(mission.transitions()[0].to, TaskMode::Explore);
        // next tick dispatches exploration and restores the previous mode
        mission.step(0.1, &robot, map, &mut planner);
        assert_eq!(mission.mode(), TaskMode::Forward);
        let last = mission.transitions().last().unwrap();
        assert_eq!((last.from, last.to), (TaskMode::Explore, TaskMode::Forward));
    }

    #[test]
    fn forward_goal_advances_along_axis() {
        let grid = grid_with_wall(None);
        let cfg = MissionConfig::default();
        let mission = MissionPlanner::new(cfg, camera(), Vec3::new(0.5, 0.0, 1.5), 7);
        let robot = Pose::new(Vec3::new(5.0, 0.0, 1.5), 0.0);
        let goal = mission.forward_goal(&robot, &grid);
        assert!((goal - Vec3::new(10.0, 0.0, 1.5)).norm() < 1e-9);
    }

    #[test]
    fn forward_goal_clamped_before_wall_and_grid() {
        let grid = grid_with_wall(Some(12.0));
        let cfg = MissionConfig::default();
        let mut mission = MissionPlanner::new(cfg, camera(), Vec3::new(0.5, 0.0, 1.5), 7);
        mission.wall_x = Some(12.2);
        let robot = Pose::new(Vec3::new(10.0, 1.0, 2.5), 0.0);
        let goal = mission.forward_goal(&robot, &grid);
        assert!(goal.x <= 12.2 - mission.cfg.standoff + 1e-9);
        // stays inside the grid for arbitrary poses
        let far = Pose::new(Vec3::new(19.0, -3.0, 7.0), 0.0);
        let g2 = mission.forward_goal(&far, &grid);
        assert!(grid.bounds().contains(&g2));
    }

    #[test]
    fn wall_detection_triggers_inspect_and_return_after_sweep() {
        let grid = grid_with_wall(Some(14.0));
        let tr = tracks();
        let map = MapView { grid: &grid, tracks: &tr };
        let mut cfg = MissionConfig::default();
        cfg.known_fraction_threshold = 0.5;
        let mut mission = MissionPlanner::new(cfg, camera(), Vec3::new(1.0, 0.0, 1.5), 7);
        let robot = Pose::new(Vec3::new(10.0, 0.0, 1.5), 0.0);
        let mut planner = ScriptedPlanner::always(true);
        mission.step(0.0, &robot, map, &mut planner);
        assert_eq!(mission.mode(), TaskMode::Inspect);
        assert!(mission.wall_detected_at().is_some());
        assert!((mission.wall_x().unwrap() - 14.0).abs() < 0.3);

        // drive the robot along the sweep; feed poses at the waypoints
        let path = inspection_path(&grid, mission.wall_x().unwrap(), &mission.cfg).unwrap();
        let mut t = 0.1;
        for wp in &path.waypoints {
            let pose = Pose::new(wp.position, wp.yaw);
            mission.step(t, &pose, map, &mut planner);
            t += 0.1;
        }
        // a couple of extra ticks at the final waypoint
        let last = path.waypoints.last().unwrap();
        for _ in 0..3 {
            mission.step(t, &Pose::new(last.position, last.yaw), map, &mut planner);
            t += 0.1;
        }
        assert_eq!(mission.mode(), TaskMode::Return);
        assert!(mission.inspection_completed());
        assert!(mission.captures().len() > 30);
    }

    #[test]
    fn mid_tunnel_obstacle_is_not_a_wall() {
        let mut grid = grid_with_wall(None);
        // block 30% of the cross-section
        grid.occupy_box(&Aabb::from_min_max(Vec3::new(10.0, -4.0, 0.0), Vec3::new(10.4, 0.0, 5.0)));
        let cfg = MissionConfig::default();
        let robot = Pose::new(Vec3::new(7.0, 0.0, 1.5), 0.0);
        assert!(detect_inspection_target(&grid, &robot, &cfg).is_none());
    }

    #[test]
    fn empty_map_detects_nothing() {
        let grid = OccupancyGrid::new(Vec3::new(0.0, -4.0, 0.0), 0.2, [100, 40, 40], OccupancyConfig::default());
        let cfg = MissionConfig::default();
        let robot = Pose::new(Vec3::new(5.0, 0.0, 1.5), 0.0);
        assert!(detect_inspection_target(&grid, &robot, &cfg).is_none());
    }

    #[test]
    fn return_mode_completes_at_start() {
        let grid = grid_with_wall(None);
        let tr = tracks();
        let map = MapView { grid: &grid, tracks: &tr };
        let cfg = MissionConfig::default();
        let start = Vec3::new(1.0, 0.0, 1.5);
        let mut mission = MissionPlanner::new(cfg, camera(), start, 7);
        mission.mode = TaskMode::Return;
        let mut planner = ScriptedPlanner::always(true);
        let away = Pose::new(Vec3::new(5.0, 0.0, 1.5), 0.0);
        assert_eq!(mission.step(0.0, &away, map, &mut planner), Directive::Continue);
        let home = Pose::new(start + Vec3::new(0.1, 0.1, 0.0), 0.0);
        assert_eq!(mission.step(0.1, &home, map, &mut planner), Directive::Complete);
        assert_eq!(mission.return_goal(), start);
    }

    #[test]
    fn insufficient_wall_knowledge_falls_back_to_explore() {
        // wall known only in the lower half
        let mut grid = OccupancyGrid::new(
            Vec3::new(0.0, -4.0, 0.0),
            0.2,
            [100, 40, 40],
            OccupancyConfig::default(),
        );
        grid.clear_boxes(&[Aabb::from_min_max(Vec3::new(0.0, -4.0, 0.0), Vec3::new(20.0, 4.0, 4.0))]);
        grid.occupy_box(&Aabb::from_min_max(Vec3::new(14.0, -4.0, 0.0), Vec3::new(14.4, 4.0, 4.0)));
        let cfg = MissionConfig::default();
        assert!(matches!(
            inspection_path(&grid, 14.0, &cfg),
            Err(Error::MapKnowledgeInsufficient)
        ));
    }

    #[test]
    fn zigzag_covers_the_wall() {
        let grid = grid_with_wall(Some(14.0));
        let mut cfg = MissionConfig::default();
        cfg.known_fraction_threshold = 0.5;
        let path = inspection_path(&grid, 14.0, &cfg).unwrap();
        // five legs for an 8 m wall at 2 m spacing with 0.6 m margins
        let mut leg_heights: Vec<i64> = path
            .waypoints
            .iter()
            .map(|w| (w.position.z * 1000.0) as i64)
            .collect();
        leg_heights.dedup();
        leg_heights.sort_unstable();
        leg_heights.dedup();
        assert_eq!(leg_heights.len(), 5, "legs at {leg_heights:?}");
        // boresight coverage of the full wall
        let poses: Vec<Pose> = path.waypoints.iter().map(|w| Pose::new(w.position, w.yaw)).collect();
        let coverage = wall_coverage(&poses, 14.0, &cfg);
        assert!(coverage >= 0.95, "coverage {coverage}");
        // all waypoints free and clear
        for wp in &path.waypoints {
            assert!(!grid.has_occupied_within(&wp.position, cfg.robot_radius));
        }
    }

    #[test]
    fn viewpoint_gain_maximal_among_candidates() {
        use rand::SeedableRng;
        // half-explored map: unknown beyond x = 10
        let mut grid = OccupancyGrid::new(
            Vec3::new(0.0, -4.0, 0.0),
            0.2,
            [100, 40, 40],
            OccupancyConfig::default(),
        );
        grid.clear_boxes(&[Aabb::from_min_max(Vec3::new(0.0, -4.0, 0.0), Vec3::new(10.0, 4.0, 8.0))]);
        let cfg = MissionConfig::default();
        let cam = camera();
        let robot = Pose::new(Vec3::new(8.0, 0.0, 1.5), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vp = best_viewpoint(&grid, &robot, &cam, &cfg, None, &mut rng).unwrap();
        assert!(vp.gain > 0);
        // independent re-scoring over the same candidate set
        let mut rng2 = ChaCha8Rng::seed_from_u64(3);
        let candidates = sample_viewpoint_candidates(&grid, &robot, &cfg, &mut rng2);
        let best_gain = candidates
            .iter()
            .map(|p| viewpoint_gain(&grid, p, &cam, &cfg, None))
            .max()
            .unwrap();
        assert_eq!(vp.gain, best_gain);
    }

    #[test]
    fn fully_known_map_signals_exhaustion() {
        use rand::SeedableRng;
        let mut grid = OccupancyGrid::new(
            Vec3::new(0.0, -4.0, 0.0),
            0.2,
            [20, 20, 20],
            OccupancyConfig::default(),
        );
        grid.clear_boxes(&[Aabb::from_min_max(Vec3::new(0.0, -4.0, 0.0), Vec3::new(4.0, 0.0, 4.0))]);
        let cfg = MissionConfig::default();
        let robot = Pose::new(Vec3::new(2.0, -2.0, 2.0), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let res = best_viewpoint(&grid, &robot, &camera(), &cfg, None, &mut rng);
        assert!(matches!(res, Err(Error::ExplorationExhausted)));
    }
}
