//! RRT* waypoint search over an occupancy snapshot.
//!
//! Rewired tree with the usual shrinking neighbor radius; the returned path
//! is shortcut-simplified by greedily skipping to the farthest waypoint still
//! reachable on a straight free segment.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dynamic_map::SearchGrid;
use crate::geometry::{Aabb, Vec3};
use crate::real::{real, Real};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct RrtParams<T: Real> {
    /// Steering step length (m).
    pub step: T,
    /// Fraction of samples drawn at the goal.
    pub goal_bias: f64,
    pub max_iters: usize,
    /// Rewiring radius scale: r = gamma * (ln n / n)^(1/3), capped at `step`.
    pub gamma: T,
    /// A node within this distance of the goal closes the query (m).
    pub goal_tolerance: T,
}

impl<T: Real> Default for RrtParams<T> {
    fn default() -> Self {
        Self { step: real(1.2), goal_bias: 0.1, max_iters: 3000, gamma: real(6.0), goal_tolerance: real(0.6) }
    }
}

#[derive(Debug, Clone)]
pub struct WaypointPath<T: Real> {
    pub points: Vec<Vec3<T>>,
    pub total_length: T,
}

impl<T: Real> WaypointPath<T> {
    pub fn from_points(points: Vec<Vec3<T>>) -> Self {
        let total_length = points.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        Self { points, total_length }
    }
}

struct Node<T: Real> {
    p: Vec3<T>,
    parent: usize,
    cost: T,
    children: Vec<usize>,
}

pub fn rrt_star<T: Real>(
    search: &SearchGrid<T>,
    start: Vec3<T>,
    goal: Vec3<T>,
    sample_bounds: &Aabb<T>,
    params: &RrtParams<T>,
    rng: &mut ChaCha8Rng,
) -> Result<WaypointPath<T>> {
    rrt_star_traced(search, start, goal, sample_bounds, params, rng).map(|(p, _)| p)
}

/// As [`rrt_star`] but also returns the best goal-path cost after every
/// iteration (infinity until the first solution).
pub fn rrt_star_traced<T: Real>(
    search: &SearchGrid<T>,
    start: Vec3<T>,
    goal: Vec3<T>,
    sample_bounds: &Aabb<T>,
    params: &RrtParams<T>,
    rng: &mut ChaCha8Rng,
) -> Result<(WaypointPath<T>, Vec<T>)> {
    if !search.is_free_point(&start) {
        return Err(Error::NoPath);
    }
    let mut nodes: Vec<Node<T>> = vec![Node { p: start, parent: usize::MAX, cost: T::zero(), children: Vec::new() }];
    let mut best_goal: Option<usize> = None;
    let mut trace: Vec<T> = Vec::with_capacity(params.max_iters);

    let mn = sample_bounds.min();
    let mx = sample_bounds.max();
    let sample_point = |rng: &mut ChaCha8Rng| {
        Vec3::new(
            real::<T>(rng.gen_range(mn.x.as_f64()..mx.x.as_f64())),
            real::<T>(rng.gen_range(mn.y.as_f64()..mx.y.as_f64())),
            real::<T>(rng.gen_range(mn.z.as_f64()..mx.z.as_f64())),
        )
    };

    for _ in 0..params.max_iters {
        let target = if rng.gen_bool(params.goal_bias) { goal } else { sample_point(rng) };

        // nearest node (stable under ties: first index wins)
        let mut nearest = 0usize;
        let mut nearest_d = T::pos_inf();
        for (i, n) in nodes.iter().enumerate() {
            let d = (n.p - target).norm();
            if d < nearest_d {
                nearest_d = d;
                nearest = i;
            }
        }
        if nearest_d < real(1e-9) {
            trace.push(best_goal.map_or_else(T::pos_inf, |g| nodes[g].cost));
            continue;
        }
        let new_p = if nearest_d <= params.step {
            target
        } else {
            nodes[nearest].p + (target - nodes[nearest].p) * (params.step / nearest_d)
        };
        if !search.is_free_point(&new_p) || !search.segment_free(&nodes[nearest].p, &new_p) {
            trace.push(best_goal.map_or_else(T::pos_inf, |g| nodes[g].cost));
            continue;
        }

        // neighbor radius
        let n = nodes.len() as f64;
        let radius = (params.gamma * real::<T>((n.ln().max(1e-9) / n).powf(1.0 / 3.0))).min(params.step);

        // choose parent among neighbors
        let mut parent = nearest;
        let mut cost = nodes[nearest].cost + (nodes[nearest].p - new_p).norm();
        let mut neighbors: Vec<usize> = Vec::new();
        for (i, node) in nodes.iter().enumerate() {
            if (node.p - new_p).norm() <= radius {
                neighbors.push(i);
                let cand = node.cost + (node.p - new_p).norm();
                if cand < cost && search.segment_free(&node.p, &new_p) {
                    parent = i;
                    cost = cand;
                }
            }
        }

        let new_idx = nodes.len();
        nodes.push(Node { p: new_p, parent, cost, children: Vec::new() });
        nodes[parent].children.push(new_idx);

        // rewire neighbors through the new node
        for &nb in &neighbors {
            let through = cost + (nodes[nb].p - new_p).norm();
            if through < nodes[nb].cost && search.segment_free(&new_p, &nodes[nb].p) {
                let old_parent = nodes[nb].parent;
                if old_parent != usize::MAX {
                    nodes[old_parent].children.retain(|&c| c != nb);
                }
                let delta = through - nodes[nb].cost;
                nodes[nb].parent = new_idx;
                nodes[new_idx].children.push(nb);
                // propagate the improvement down the subtree
                let mut stack = vec![nb];
                while let Some(i) = stack.pop() {
                    nodes[i].cost += delta;
                    let children = nodes[i].children.clone();
                    stack.extend(children);
                }
            }
        }

        if (new_p - goal).norm() <= params.goal_tolerance {
            let better = best_goal.map_or(true, |g| cost < nodes[g].cost);
            if better {
                best_goal = Some(new_idx);
            }
        }
        trace.push(best_goal.map_or_else(T::pos_inf, |g| nodes[g].cost));
    }

    let Some(goal_idx) = best_goal else {
        return Err(Error::NoPath);
    };

    let mut raw = Vec::new();
    let mut cur = goal_idx;
    while cur != usize::MAX {
        raw.push(nodes[cur].p);
        cur = nodes[cur].parent;
    }
    raw.reverse();
    // land exactly on the goal when the last hop is free
    if (raw.last().unwrap() - goal).norm() > real(1e-9) && search.segment_free(raw.last().unwrap(), &goal) {
        raw.push(goal);
    }

    Ok((WaypointPath::from_points(shortcut(search, &raw)), trace))
}

/// Greedy longest collision-free skip.
pub fn shortcut<T: Real>(search: &SearchGrid<T>, points: &[Vec3<T>]) -> Vec<Vec3<T>> {
    if points.len() <= 2 {
        return points.to_vec();
    }
    let mut out = vec![points[0]];
    let mut i = 0;
    while i < points.len() - 1 {
        let mut j = points.len() - 1;
        while j > i + 1 && !search.segment_free(&points[i], &points[j]) {
            j -= 1;
        }
        out.push(points[j]);
        i = j;
    }
    out
}
