//! Obstacle region proposals from the U-depth map.
//!
//! Columns whose bin count exceeds a depth-dependent row threshold are
//! grouped into line runs, runs in adjacent bins are merged, and each merged
//! region is lifted back into a 3D box: width/thickness from the U-depth
//! extent, height from the matching-depth pixel rows of the original image.

use crate::depth::DepthImage;
use crate::geometry::{Aabb, CameraModel, Pose, Vec3};
use crate::real::{real, Real};

use super::udepth::UDepthMap;
use super::DynamicMapConfig;

#[derive(Debug, Clone, Copy)]
struct Run {
    bin: usize,
    u0: usize,
    u1: usize,
}

/// Detects obstacle region proposals and transforms them into map-frame
/// boxes. Returns an empty list when nothing clears the thresholds.
pub fn detect_region_proposals<T: Real>(
    ud: &UDepthMap<T>,
    depth: &DepthImage<T>,
    camera: &CameraModel<T>,
    pose: &Pose<T>,
    cfg: &DynamicMapConfig<T>,
) -> Vec<Aabb<T>> {
    let runs = active_runs(ud, camera, cfg);
    let regions = merge_runs(&runs);
    let mut out = Vec::new();
    for region in regions {
        if let Some(b) = lift_region(&region, ud, depth, camera, pose, cfg) {
            out.push(b);
        }
    }
    out
}

/// A column is active in a bin when its count exceeds the pixel-row height a
/// minimum-size object would occupy at that depth.
fn active_runs<T: Real>(ud: &UDepthMap<T>, camera: &CameraModel<T>, cfg: &DynamicMapConfig<T>) -> Vec<Run> {
    let mut runs = Vec::new();
    for bin in 0..ud.n_bins {
        let d = ud.bin_center(bin);
        if d < camera.min_range {
            continue;
        }
        let threshold = (cfg.min_object_height * camera.fy / d).as_f64() as u32;
        let mut start: Option<usize> = None;
        for u in 0..=ud.width {
            let active = u < ud.width && ud.at(bin, u) > threshold;
            match (start, active) {
                (None, true) => start = Some(u),
                (Some(s), false) => {
                    if u - s >= cfg.min_run_columns {
                        runs.push(Run { bin, u0: s, u1: u - 1 });
                    }
                    start = None;
                }
                _ => {}
            }
        }
    }
    runs
}

/// Groups runs that touch in adjacent bins and overlap in columns. A couple
/// of columns of slack keeps slanted surfaces (whose per-bin runs shift
/// sideways) in one region.
fn merge_runs(runs: &[Run]) -> Vec<Vec<Run>> {
    const COLUMN_SLACK: usize = 2;
    let n = runs.len();
    let mut group = vec![usize::MAX; n];
    let mut regions: Vec<Vec<Run>> = Vec::new();
    for i in 0..n {
        if group[i] != usize::MAX {
            continue;
        }
        let id = regions.len();
        let mut members = vec![i];
        group[i] = id;
        let mut cursor = 0;
        while cursor < members.len() {
            let a = runs[members[cursor]];
            cursor += 1;
            for (j, b) in runs.iter().enumerate() {
                if group[j] != usize::MAX {
                    continue;
                }
                let bin_adjacent = a.bin.abs_diff(b.bin) <= 1;
                let overlap = a.u0 <= b.u1 + COLUMN_SLACK && b.u0 <= a.u1 + COLUMN_SLACK;
                if bin_adjacent && overlap {
                    group[j] = id;
                    members.push(j);
                }
            }
        }
        regions.push(members.into_iter().map(|k| runs[k]).collect());
    }
    regions
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamic_map::{build_udepth, fuse_with_map, DynamicMap};
    use crate::sim::{render_depth, WorldModel};
    use crate::{Aabb, CameraModel, Pose, Vec3};

    fn camera() -> CameraModel {
        CameraModel::from_fov(320, 240, 87f64.to_radians(), 58f64.to_radians(), 0.3, 6.0)
    }

    // wide tunnel so the side walls stay outside the sensing range
    fn wide_world() -> WorldModel {
        WorldModel::empty_tunnel(20.0, 16.0, 8.0)
    }

    fn detect_from(
        world: &WorldModel,
        pose: &Pose,
        cfg: &DynamicMapConfig<f64>,
    ) -> Vec<Aabb> {
        let cam = camera();
        let img = render_depth(world, &[], pose, &cam, 0.0, 0);
        let ud = build_udepth(&img, cfg.bin_width, cam.min_range, cam.max_range);
        detect_region_proposals(&ud, &img, &cam, pose, cfg)
    }

    #[test]
    fn single_box_detected_within_tolerance() {
        let mut world = wide_world();
        let truth = Aabb::new(Vec3::new(4.0, 0.0, 0.9), Vec3::new(0.5, 0.5, 0.9));
        world.static_obstacles.push(truth);
        // laterally offset pose so the near side face is observable too
        let pose = Pose::new(Vec3::new(1.0, 1.3, 1.2), 0.0);
        let cfg = DynamicMapConfig::default();
        let proposals = detect_from(&world, &pose, &cfg);
        assert_eq!(proposals.len(), 1, "got {proposals:?}");
        let p = proposals[0];
        assert!((p.center - truth.center).norm() < 0.25, "center {:?}", p.center);
        // The rough proposal must cover the obstacle; tight extents come
        // from map fusion (tested below with the same tolerance).
        for axis in 0..3 {
            assert!(
                p.half_extents[axis] + 0.25 > truth.half_extents[axis],
                "proposal too small on axis {axis}"
            );
        }
    }

    #[test]
    fn empty_scene_has_no_proposals() {
        let world = wide_world();
        let pose = Pose::new(Vec3::new(1.0, 0.0, 1.2), 0.0);
        let proposals = detect_from(&world, &pose, &DynamicMapConfig::default());
        assert!(proposals.is_empty(), "{proposals:?}");
    }

    #[test]
    fn laterally_separated_boxes_yield_two_proposals() {
        let mut world = wide_world();
        world
            .static_obstacles
            .push(Aabb::new(Vec3::new(4.0, -1.05, 0.9), Vec3::new(0.5, 0.5, 0.9)));
        world
            .static_obstacles
            .push(Aabb::new(Vec3::new(4.0, 1.05, 0.9), Vec3::new(0.5, 0.5, 0.9)));
        let pose = Pose::new(Vec3::new(1.0, 0.0, 1.2), 0.0);
        let proposals = detect_from(&world, &pose, &DynamicMapConfig::default());
        assert_eq!(proposals.len(), 2, "{proposals:?}");
    }

    #[test]
    fn fused_detection_tightens_to_map_evidence() {
        let mut world = wide_world();
        let truth = Aabb::new(Vec3::new(4.0, 0.0, 0.9), Vec3::new(0.5, 0.5, 0.9));
        world.static_obstacles.push(truth);
        let cam = camera();
        let cfg = DynamicMapConfig::default();
        let mut map = DynamicMap::new(Vec3::new(0.0, -8.0, 0.0), 0.1, [80, 160, 30], cfg.clone());
        // short offset approach accumulating the front and one side face
        for k in 0..8 {
            let pose = Pose::new(Vec3::new(1.0 + 0.1 * k as f64, 1.3, 1.2), 0.0);
            let img = render_depth(&world, &[], &pose, &cam, 0.0, k);
            map.grid.update_from_depth(&img, &pose, &cam, 1).unwrap();
        }
        let pose = Pose::new(Vec3::new(1.2, 1.3, 1.2), 0.0);
        let img = render_depth(&world, &[], &pose, &cam, 0.0, 99);
        let ud = build_udepth(&img, cfg.bin_width, cam.min_range, cam.max_range);
        let proposals = detect_region_proposals(&ud, &img, &cam, &pose, &cfg);
        assert_eq!(proposals.len(), 1);
        let fused = fuse_with_map(&proposals, &map.grid, cfg.inflation_ratio, cfg.ground_filter_height);
        assert_eq!(fused.len(), 1);
        let f = fused[0];
        assert!((f.center - truth.center).norm() < 0.25, "fused center {:?}", f.center);
        for axis in 0..3 {
            assert!(
                (f.half_extents[axis] - truth.half_extents[axis]).abs() * 2.0 < 0.25,
                "fused extent {axis}: {} vs {}",
                f.half_extents[axis] * 2.0,
                truth.half_extents[axis] * 2.0
            );
        }
    }
}

fn lift_region<T: Real>(
    region: &[Run],
    ud: &UDepthMap<T>,
    depth: &DepthImage<T>,
    camera: &CameraModel<T>,
    pose: &Pose<T>,
    cfg: &DynamicMapConfig<T>,
) -> Option<Aabb<T>> {
    let u_min = region.iter().map(|r| r.u0).min()?;
    let u_max = region.iter().map(|r| r.u1).max()?;
    let b_min = region.iter().map(|r| r.bin).min()?;
    let b_max = region.iter().map(|r| r.bin).max()?;
    let d0 = real::<T>(b_min as f64) * ud.bin_width;
    let d1 = real::<T>((b_max + 1) as f64) * ud.bin_width;
    let margin = ud.bin_width * real::<T>(0.5);

    // Height from the matching-depth pixel rows within the run columns,
    // skipping returns at ground level.
    let mut v_min = usize::MAX;
    let mut v_max = 0usize;
    let half = real::<T>(0.5);
    for u in u_min..=u_max {
        for v in 0..depth.height {
            let d = depth.at(u, v);
            if d > T::zero() && d >= d0 - margin && d < d1 + margin {
                let world = pose.camera_to_world(camera.unproject(
                    real::<T>(u as f64) + half,
                    real::<T>(v as f64) + half,
                    d,
                ));
                if world.z < cfg.ground_filter_height {
                    continue;
                }
                v_min = v_min.min(v);
                v_max = v_max.max(v);
            }
        }
    }
    if v_min == usize::MAX {
        return None;
    }

    let d_mid = (d0 + d1) * real::<T>(0.5);
    let x0 = (real::<T>(u_min as f64) - camera.cx) * d_mid / camera.fx;
    let x1 = (real::<T>((u_max + 1) as f64) - camera.cx) * d_mid / camera.fx;
    let y0 = (real::<T>(v_min as f64) - camera.cy) * d_mid / camera.fy;
    let y1 = (real::<T>((v_max + 1) as f64) - camera.cy) * d_mid / camera.fy;
    let cam_box = Aabb::from_min_max(Vec3::new(x0, y0, d0.max(camera.min_range)), Vec3::new(x1, y1, d1));

    // Map-frame AABB of the transformed corners.
    let mut mn = Vec3::new(T::pos_inf(), T::pos_inf(), T::pos_inf());
    let mut mx = Vec3::new(T::neg_inf(), T::neg_inf(), T::neg_inf());
    for c in cam_box.corners() {
        let w = pose.camera_to_world(c);
        mn = crate::geometry::component_min(&mn, &w);
        mx = crate::geometry::component_max(&mx, &w);
    }
    let world = Aabb::from_min_max(mn, mx);
    let he = world.half_extents;
    let max_half = cfg.max_proposal_extent * real::<T>(0.5);
    if he.x > max_half || he.y > max_half || he.z > max_half {
        return None;
    }
    Some(world)
}
