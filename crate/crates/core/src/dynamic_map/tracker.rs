//! Constant-velocity Kalman tracking of obstacle bounding boxes plus the
//! dynamic/static classifier.

use std::collections::VecDeque;

use nalgebra::{Matrix3, Matrix3x6, Matrix6, Matrix6x3, Vector6};

use crate::geometry::{Aabb, Vec3};
use crate::real::{real, Real};

use super::DynamicMapConfig;

/// Constant-velocity Kalman filter over state (position, velocity).
#[derive(Debug, Clone)]
pub struct KalmanCv<T: Real> {
    pub state: Vector6<T>,
    pub cov: Matrix6<T>,
}

impl<T: Real> KalmanCv<T> {
    pub fn new(position: Vec3<T>, pos_var: T, vel_var: T) -> Self {
        let mut state = Vector6::zeros();
        state.fixed_rows_mut::<3>(0).copy_from(&position);
        let mut cov = Matrix6::zeros();
        for i in 0..3 {
            cov[(i, i)] = pos_var;
            cov[(i + 3, i + 3)] = vel_var;
        }
        Self { state, cov }
    }

    pub fn position(&self) -> Vec3<T> {
        self.state.fixed_rows::<3>(0).into()
    }

    pub fn velocity(&self) -> Vec3<T> {
        self.state.fixed_rows::<3>(3).into()
    }

    pub fn predict(&mut self, dt: T, q_pos: T, q_vel: T) {
        let mut f = Matrix6::identity();
        for i in 0..3 {
            f[(i, i + 3)] = dt;
        }
        self.state = f * self.state;
        let mut q = Matrix6::zeros();
        for i in 0..3 {
            q[(i, i)] = q_pos;
            q[(i + 3, i + 3)] = q_vel;
        }
        self.cov = f * self.cov * f.transpose() + q;
    }

    pub fn update(&mut self, z: &Vec3<T>, r: T) {
        let mut h = Matrix3x6::zeros();
        for i in 0..3 {
            h[(i, i)] = T::one();
        }
        let s: Matrix3<T> = h * self.cov * h.transpose() + Matrix3::identity() * r;
        let Some(s_inv) = s.try_inverse() else { return };
        let k: Matrix6x3<T> = self.cov * h.transpose() * s_inv;
        let innovation = z - self.position();
        self.state += k * innovation;
        self.cov = (Matrix6::identity() - k * h) * self.cov;
    }
}

/// One tracked obstacle: smoothed box, Kalman state, velocity history, and
/// the dynamic/static flag.
#[derive(Debug, Clone)]
pub struct TrackedObstacle<T: Real> {
    pub id: u64,
    pub bbox: Aabb<T>,
    pub kalman: KalmanCv<T>,
    pub velocity_history: VecDeque<Vec3<T>>,
    pub dynamic: bool,
    pub last_seen: T,
    over_threshold_frames: u32,
}

impl<T: Real> TrackedObstacle<T> {
    pub fn velocity(&self) -> Vec3<T> {
        self.kalman.velocity()
    }

    pub fn center(&self) -> Vec3<T> {
        self.bbox.center
    }
}

#[derive(Debug, Clone, Default)]
pub struct Tracker<T: Real> {
    pub tracks: Vec<TrackedObstacle<T>>,
    next_id: u64,
}

impl<T: Real> Tracker<T> {
    pub fn new() -> Self {
        Self { tracks: Vec::new(), next_id: 0 }
    }

    /// Associates detections to tracks (greedy, nearest predicted center
    /// first, gated), runs predict+update on matches, spawns tracks for
    /// unmatched detections, and drops stale tracks. `t` must be strictly
    /// increasing across calls.
    pub fn step(&mut self, detections: &[Aabb<T>], t: T, cfg: &DynamicMapConfig<T>) {
        // Predicted centers for association.
        let predicted: Vec<Vec3<T>> = self
            .tracks
            .iter()
            .map(|tr| tr.kalman.position() + tr.kalman.velocity() * (t - tr.last_seen))
            .collect();

        let mut pairs: Vec<(T, usize, usize)> = Vec::new();
        for (ti, p) in predicted.iter().enumerate() {
            for (di, det) in detections.iter().enumerate() {
                let d = (det.center - p).norm();
                if d <= cfg.association_gate {
                    pairs.push((d, ti, di));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut track_used = vec![false; self.tracks.len()];
        let mut det_used = vec![false; detections.len()];
        for (_, ti, di) in pairs {
            if track_used[ti] || det_used[di] {
                continue;
            }
            track_used[ti] = true;
            det_used[di] = true;
            let track = &mut self.tracks[ti];
            let dt = t - track.last_seen;
            track.kalman.predict(dt, cfg.kalman_q_pos, cfg.kalman_q_vel);
            track.kalman.update(&detections[di].center, cfg.kalman_r);
            let beta = cfg.extent_smoothing;
            track.bbox = Aabb::new(
                track.kalman.position(),
                track.bbox.half_extents * beta + detections[di].half_extents * (T::one() - beta),
            );
            track.velocity_history.push_back(track.kalman.velocity());
            while track.velocity_history.len() > cfg.history_len {
                track.velocity_history.pop_front();
            }
            track.last_seen = t;
        }

        for (di, det) in detections.iter().enumerate() {
            if det_used[di] {
                continue;
            }
            let kalman = KalmanCv::new(det.center, cfg.kalman_r, cfg.initial_velocity_var);
            self.tracks.push(TrackedObstacle {
                id: self.next_id,
                bbox: *det,
                kalman,
                velocity_history: VecDeque::new(),
                dynamic: false,
                last_seen: t,
                over_threshold_frames: 0,
            });
            self.next_id += 1;
        }

        self.tracks.retain(|tr| t - tr.last_seen <= cfg.track_timeout);
    }

    /// Re-evaluates the dynamic flag of every track: speed above `V_th` for
    /// the required consecutive frames, and a velocity history that moves
    /// consistently in one direction (rejects detection noise that makes
    /// static obstacles shake back and forth).
    pub fn classify(&mut self, cfg: &DynamicMapConfig<T>) {
        for track in &mut self.tracks {
            let speed = track.kalman.velocity().norm();
            if speed > cfg.v_threshold {
                track.over_threshold_frames += 1;
            } else {
                track.over_threshold_frames = 0;
            }
            track.dynamic =
                track.over_threshold_frames >= cfg.confirm_frames && history_consistent(track, cfg);
        }
    }

    pub fn dynamic_tracks(&self) -> impl Iterator<Item = &TrackedObstacle<T>> {
        self.tracks.iter().filter(|t| t.dynamic)
    }
}

/// Jerk test on the velocity history: mean speed above `V_th` and a small
/// standard deviation of the direction-signed speeds. A shaking obstacle has
/// alternating signs and a large deviation.
fn history_consistent<T: Real>(track: &TrackedObstacle<T>, cfg: &DynamicMapConfig<T>) -> bool {
    let hist = &track.velocity_history;
    if hist.len() < 2 {
        return true;
    }
    let n = real::<T>(hist.len() as f64);
    let mean_mag = hist.iter().map(|v| v.norm()).sum::<T>() / n;
    if mean_mag <= cfg.v_threshold {
        return false;
    }
    let mut reference: Vec3<T> = hist.iter().sum::<Vec3<T>>() / n;
    if reference.norm() < real(1e-6) {
        reference = *hist.front().unwrap();
        if reference.norm() < real(1e-6) {
            return false;
        }
    }
    let signed: Vec<T> = hist
        .iter()
        .map(|v| {
            let s = if v.dot(&reference) < T::zero() { -T::one() } else { T::one() };
            s * v.norm()
        })
        .collect();
    // Deviation of consecutive signed-speed differences: back-and-forth
    // shaking flips the sign every frame and scores high, while a smooth
    // speed ramp (e.g. a fresh track converging from its zero prior) scores
    // near zero.
    let diffs: Vec<T> = signed.windows(2).map(|w| w[1] - w[0]).collect();
    let m = real::<T>(diffs.len() as f64);
    let mean = diffs.iter().copied().sum::<T>() / m;
    let var = diffs.iter().map(|d| (*d - mean) * (*d - mean)).sum::<T>() / m;
    var.sqrt() < cfg.jerk_reject_threshold
}
