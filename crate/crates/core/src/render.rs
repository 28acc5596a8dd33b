//! Point cloud rendering through arbitrary projections.
//!
//! Points are splatted into a z-buffer keyed by `(range, point_index)`; the
//! lexicographic minimum wins, so the result does not depend on thread count
//! or on the order in which points are visited. Ranges are compared at `f32`
//! precision, the stored depth is the exact `f64` range of the winning point.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{Isometry3, Point3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Mask, RgbImage};
use crate::projection::ProjectionSpec;
use crate::rig::{StereoRig, VirtualCamera};
use crate::stereo::{depth_to_disparity, DepthMap, DisparityMap};

/// Colored points in a world frame. The position in the vectors is the point's
/// stable index, used to break depth ties.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub positions: Vec<[f32; 3]>,
    pub colors: Vec<[u8; 3]>,
    pub scan_ids: Vec<u16>,
    /// Points on reflective surfaces; they render color but no depth.
    pub reflective: Option<Vec<bool>>,
}

impl PointCloud {
    pub fn new(positions: Vec<[f32; 3]>, colors: Vec<[u8; 3]>, scan_ids: Vec<u16>) -> Result<Self> {
        let cloud = Self {
            positions,
            colors,
            scan_ids,
            reflective: None,
        };
        cloud.validate()?;
        Ok(cloud)
    }

    /// Single-scan cloud.
    pub fn from_scan(positions: Vec<[f32; 3]>, colors: Vec<[u8; 3]>, scan_id: u16) -> Result<Self> {
        let n = positions.len();
        Self::new(positions, colors, vec![scan_id; n])
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.positions.len();
        if n == 0 {
            return Err(Error::Contract("point cloud is empty".into()));
        }
        if self.colors.len() != n
            || self.scan_ids.len() != n
            || self.reflective.as_ref().is_some_and(|r| r.len() != n)
        {
            return Err(Error::Contract("point cloud attribute lengths differ".into()));
        }
        if n > u32::MAX as usize {
            return Err(Error::Contract("point cloud exceeds 2^32 points".into()));
        }
        if let Some(i) = self
            .positions
            .iter()
            .position(|p| !p.iter().all(|c| c.is_finite()))
        {
            return Err(Error::Contract(format!("point {i} is not finite")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn position(&self, i: usize) -> Point3<f64> {
        let [x, y, z] = self.positions[i];
        Point3::new(x as f64, y as f64, z as f64)
    }

    /// Scan id of the first point; bundle members are expected to hold one scan each.
    pub fn primary_scan(&self) -> u16 {
        self.scan_ids[0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderSettings {
    /// Half-width of the square splat footprint is `floor(splat_radius_px)`:
    /// 0 draws single pixels, 1 draws 3x3 blocks.
    pub splat_radius_px: f64,
    /// Scan ids in fill order, central scan first. Empty keeps the bundle order.
    #[serde(default)]
    pub hole_fill_order: Vec<u16>,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self {
            splat_radius_px: 1.0,
            hole_fill_order: Vec::new(),
        }
    }
}

impl RenderSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.splat_radius_px >= 0.0 && self.splat_radius_px.is_finite()) {
            return Err(Error::Config(format!(
                "splat radius must be >= 0, got {}",
                self.splat_radius_px
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RenderOutput {
    pub rgb: RgbImage,
    /// Pixels that received any point (color is meaningful).
    pub hit: Mask,
    /// Range from the camera center; reflective hits are invalid here.
    pub depth: DepthMap,
    /// Scan that supplied each pixel.
    pub source_scan: Grid<Option<u16>>,
    /// Index of the winning point inside its cloud.
    pub point_index: Grid<Option<u32>>,
}

impl RenderOutput {
    fn empty(w: usize, h: usize) -> Self {
        Self {
            rgb: Grid::filled(w, h, [0, 0, 0]),
            hit: Grid::filled(w, h, false),
            depth: DepthMap {
                values: Grid::filled(w, h, 0.0),
                valid: Grid::filled(w, h, false),
                geometry: None,
            },
            source_scan: Grid::filled(w, h, None),
            point_index: Grid::filled(w, h, None),
        }
    }
}

const EMPTY: u64 = u64::MAX;

/// Renders one cloud from a camera at `camera_pose` (camera-to-world) into `spec`.
pub fn render(
    cloud: &PointCloud,
    camera_pose: &Isometry3<f64>,
    spec: &ProjectionSpec,
    settings: &RenderSettings,
) -> Result<RenderOutput> {
    render_masked(cloud, camera_pose, spec, settings, None)
}

/// Like [`render`], dropping splats on pixels outside `coverage`.
pub fn render_masked(
    cloud: &PointCloud,
    camera_pose: &Isometry3<f64>,
    spec: &ProjectionSpec,
    settings: &RenderSettings,
    coverage: Option<&Mask>,
) -> Result<RenderOutput> {
    cloud.validate()?;
    settings.validate()?;
    spec.validate()?;
    let (w, h) = (spec.width(), spec.height());
    if let Some(m) = coverage {
        if m.dims() != (w, h) {
            return Err(Error::Contract("coverage mask does not match the projection".into()));
        }
    }

    let world_to_cam = camera_pose.inverse();
    let cam_to_proj = spec.orientation.transpose();
    let half = settings.splat_radius_px.floor() as i64;
    let (wrap_u, wrap_v) = (spec.wraps_u(), spec.wraps_v());
    let zbuf: Vec<AtomicU64> = (0..w * h).map(|_| AtomicU64::new(EMPTY)).collect();

    let to_proj = |i: usize| -> Vector3<f64> {
        cam_to_proj * (world_to_cam * cloud.position(i)).coords
    };

    (0..cloud.len()).into_par_iter().for_each(|i| {
        let p = to_proj(i);
        let range = p.norm();
        if !(range > 0.0) {
            return;
        }
        let Some(px) = spec.project_direction(&p) else {
            return;
        };
        let key = ((range as f32).to_bits() as u64) << 32 | i as u64;
        let (cu, cv) = (px.x.round() as i64, px.y.round() as i64);
        for dv in -half..=half {
            for du in -half..=half {
                let Some(x) = fold(cu + du, w, wrap_u) else {
                    continue;
                };
                let Some(y) = fold(cv + dv, h, wrap_v) else {
                    continue;
                };
                let idx = y * w + x;
                if coverage.is_some_and(|m| !m.as_slice()[idx]) {
                    continue;
                }
                zbuf[idx].fetch_min(key, Ordering::Relaxed);
            }
        }
    });

    let mut out = RenderOutput::empty(w, h);
    let reflective = cloud.reflective.as_deref();
    for (idx, cell) in zbuf.iter().enumerate() {
        let key = cell.load(Ordering::Relaxed);
        if key == EMPTY {
            continue;
        }
        let i = (key & 0xffff_ffff) as usize;
        let (x, y) = (idx % w, idx / w);
        out.rgb.set(x, y, cloud.colors[i]);
        out.hit.set(x, y, true);
        out.source_scan.set(x, y, Some(cloud.scan_ids[i]));
        out.point_index.set(x, y, Some(i as u32));
        if !reflective.is_some_and(|r| r[i]) {
            out.depth.values.set(x, y, to_proj(i).norm());
            out.depth.valid.set(x, y, true);
        }
    }
    Ok(out)
}

fn fold(c: i64, len: usize, wraps: bool) -> Option<usize> {
    let len = len as i64;
    let c = if wraps { c.rem_euclid(len) } else { c };
    (0..len).contains(&c).then_some(c as usize)
}

/// Orders bundle members by `hole_fill_order` (bundle order when it is empty).
fn fill_sequence<'a>(bundle: &'a [PointCloud], order: &[u16]) -> Result<Vec<&'a PointCloud>> {
    if bundle.is_empty() {
        return Err(Error::Contract("scan bundle is empty".into()));
    }
    if order.is_empty() {
        return Ok(bundle.iter().collect());
    }
    let mut seq = Vec::with_capacity(bundle.len());
    for cloud in bundle {
        cloud.validate()?;
        let pos = order
            .iter()
            .position(|&s| s == cloud.primary_scan())
            .ok_or_else(|| {
                Error::Config(format!(
                    "scan {} is missing from the hole fill order",
                    cloud.primary_scan()
                ))
            })?;
        seq.push((pos, cloud));
    }
    seq.sort_by_key(|(pos, _)| *pos);
    Ok(seq.into_iter().map(|(_, c)| c).collect())
}

/// Renders the central scan, then fills pixels it left empty from the adjacent
/// scans in order. Pixels already hit are never modified.
pub fn render_with_hole_fill(
    bundle: &[PointCloud],
    camera_pose: &Isometry3<f64>,
    spec: &ProjectionSpec,
    settings: &RenderSettings,
    coverage: Option<&Mask>,
) -> Result<RenderOutput> {
    let seq = fill_sequence(bundle, &settings.hole_fill_order)?;
    let mut out = render_masked(seq[0], camera_pose, spec, settings, coverage)?;
    for cloud in &seq[1..] {
        if out.hit.count() == out.hit.len() {
            break;
        }
        let extra = render_masked(cloud, camera_pose, spec, settings, coverage)?;
        for idx in 0..out.hit.len() {
            if out.hit.as_slice()[idx] || !extra.hit.as_slice()[idx] {
                continue;
            }
            out.hit.as_mut_slice()[idx] = true;
            out.rgb.as_mut_slice()[idx] = extra.rgb.as_slice()[idx];
            out.source_scan.as_mut_slice()[idx] = extra.source_scan.as_slice()[idx];
            out.point_index.as_mut_slice()[idx] = extra.point_index.as_slice()[idx];
            out.depth.values.as_mut_slice()[idx] = extra.depth.values.as_slice()[idx];
            out.depth.valid.as_mut_slice()[idx] = extra.depth.valid.as_slice()[idx];
        }
    }
    Ok(out)
}

/// What a mask region does to depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskMode {
    /// Marks the depth invalid (written as zero).
    ZeroOut,
    /// Caps depth at the given range in meters.
    ClipTo(f64),
}

impl MaskMode {
    fn apply(self, value: &mut f64, valid: &mut bool) {
        match self {
            MaskMode::ZeroOut => {
                *value = 0.0;
                *valid = false;
            }
            MaskMode::ClipTo(max) => {
                if *valid && *value > max {
                    *value = max;
                }
            }
        }
    }
}

/// Image-space polygon in pixel coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRegion {
    pub polygon: Vec<[f64; 2]>,
    pub mode: MaskMode,
}

/// Axis-aligned world-space box, used for per-scene window and mirror annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldRegion {
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub mode: MaskMode,
}

impl WorldRegion {
    pub fn contains(&self, p: &Point3<f64>) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }
}

/// Even-odd rule on the pixel center.
fn polygon_contains(poly: &[[f64; 2]], x: f64, y: f64) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let [xi, yi] = poly[i];
        let [xj, yj] = poly[(i + n - 1) % n];
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
    }
    inside
}

/// Applies image-space regions to a depth map; later regions see earlier results.
pub fn mask_regions(depth: &DepthMap, regions: &[ImageRegion]) -> DepthMap {
    let mut out = depth.clone();
    for region in regions {
        if region.polygon.len() < 3 {
            continue;
        }
        for y in 0..out.height() {
            for x in 0..out.width() {
                if polygon_contains(&region.polygon, x as f64, y as f64) {
                    let idx = out.values.index(x, y);
                    let mut v = out.values.as_slice()[idx];
                    let mut ok = out.valid.as_slice()[idx];
                    region.mode.apply(&mut v, &mut ok);
                    out.values.as_mut_slice()[idx] = v;
                    out.valid.as_mut_slice()[idx] = ok;
                }
            }
        }
    }
    out
}

/// Applies world regions to the pixels whose winning point lies inside them.
fn apply_world_regions(out: &mut RenderOutput, bundle: &[PointCloud], regions: &[WorldRegion]) {
    if regions.is_empty() {
        return;
    }
    for idx in 0..out.hit.len() {
        let (Some(scan), Some(pi)) = (
            out.source_scan.as_slice()[idx],
            out.point_index.as_slice()[idx],
        ) else {
            continue;
        };
        let Some(cloud) = bundle.iter().find(|c| c.primary_scan() == scan) else {
            continue;
        };
        let p = cloud.position(pi as usize);
        for r in regions.iter().filter(|r| r.contains(&p)) {
            let mut v = out.depth.values.as_slice()[idx];
            let mut ok = out.depth.valid.as_slice()[idx];
            r.mode.apply(&mut v, &mut ok);
            out.depth.values.as_mut_slice()[idx] = v;
            out.depth.valid.as_mut_slice()[idx] = ok;
        }
    }
}

/// One rendered stereo pair with ground truth for the reference view.
#[derive(Debug, Clone)]
pub struct StereoSample {
    pub rgb_ref: RgbImage,
    pub rgb_sec: RgbImage,
    pub valid_ref: Mask,
    pub valid_sec: Mask,
    pub depth_ref: DepthMap,
    pub disparity_ref: DisparityMap,
    pub source_ref: Grid<Option<u16>>,
    pub point_index_ref: Grid<Option<u32>>,
}

/// Renders both views of `rig` into its pole-on-baseline equirectangular
/// projection of the given height, limited to what `camera` images, and
/// derives reference disparity from the reference range map.
pub fn synthesize_stereo_sample(
    bundle: &[PointCloud],
    rig: &StereoRig,
    camera: &VirtualCamera,
    height: usize,
    settings: &RenderSettings,
    regions: &[WorldRegion],
) -> Result<StereoSample> {
    let spec = rig.stereo_projection(height);
    let coverage = camera.coverage(&spec)?;
    let mut reference =
        render_with_hole_fill(bundle, &rig.reference_pose, &spec, settings, Some(&coverage))?;
    let second = render_with_hole_fill(bundle, &rig.second_pose(), &spec, settings, Some(&coverage))?;
    apply_world_regions(&mut reference, bundle, regions);

    let mut depth_ref = reference.depth;
    depth_ref.geometry = Some(rig.geometry(height)?);
    let disparity_ref = depth_to_disparity(&depth_ref)?;
    Ok(StereoSample {
        rgb_ref: reference.rgb,
        rgb_sec: second.rgb,
        valid_ref: reference.hit,
        valid_sec: second.hit,
        depth_ref,
        disparity_ref,
        source_ref: reference.source_scan,
        point_index_ref: reference.point_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::PinholeIntrinsics;
    use crate::projection::ProjectionKind;
    use nalgebra::Matrix3;

    fn pinhole_spec() -> ProjectionSpec {
        ProjectionSpec {
            kind: ProjectionKind::Pinhole {
                intrinsics: PinholeIntrinsics::new(50.0, 50.0, 20.0, 15.0, 41, 31).unwrap(),
            },
            orientation: Matrix3::identity(),
        }
    }

    fn single_pixel() -> RenderSettings {
        RenderSettings {
            splat_radius_px: 0.0,
            hole_fill_order: vec![],
        }
    }

    #[test]
    fn single_point_lands_on_principal_point() {
        let cloud = PointCloud::from_scan(vec![[0.0, 0.0, 2.0]], vec![[10, 20, 30]], 0).unwrap();
        let out = render(&cloud, &Isometry3::identity(), &pinhole_spec(), &single_pixel()).unwrap();
        assert_eq!(out.depth.valid.count(), 1);
        assert_eq!(*out.depth.values.get(20, 15), 2.0);
        assert_eq!(*out.rgb.get(20, 15), [10, 20, 30]);
        assert_eq!(out.hit.count(), 1);
    }

    #[test]
    fn nearest_point_wins_regardless_of_order() {
        let near = [0.0, 0.0, 1.0];
        let far = [0.0, 0.0, 2.0];
        for positions in [vec![near, far], vec![far, near]] {
            let cloud =
                PointCloud::from_scan(positions.clone(), vec![[1, 1, 1], [2, 2, 2]], 0).unwrap();
            let out =
                render(&cloud, &Isometry3::identity(), &pinhole_spec(), &single_pixel()).unwrap();
            assert_eq!(*out.depth.values.get(20, 15), 1.0);
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let cloud = PointCloud::from_scan(
            vec![[0.0, 0.0, 1.0], [0.0, 0.0, 1.0]],
            vec![[1, 1, 1], [2, 2, 2]],
            0,
        )
        .unwrap();
        let out = render(&cloud, &Isometry3::identity(), &pinhole_spec(), &single_pixel()).unwrap();
        assert_eq!(*out.rgb.get(20, 15), [1, 1, 1]);
        assert_eq!(*out.point_index.get(20, 15), Some(0));
    }

    #[test]
    fn default_splat_is_three_by_three() {
        let cloud = PointCloud::from_scan(vec![[0.0, 0.0, 2.0]], vec![[9, 9, 9]], 0).unwrap();
        let out = render(
            &cloud,
            &Isometry3::identity(),
            &pinhole_spec(),
            &RenderSettings::default(),
        )
        .unwrap();
        assert_eq!(out.depth.valid.count(), 9);
    }

    #[test]
    fn empty_cloud_is_rejected() {
        let cloud = PointCloud {
            positions: vec![],
            colors: vec![],
            scan_ids: vec![],
            reflective: None,
        };
        assert!(render(&cloud, &Isometry3::identity(), &pinhole_spec(), &single_pixel()).is_err());
    }

    #[test]
    fn reflective_points_render_color_without_depth() {
        let mut cloud = PointCloud::from_scan(vec![[0.0, 0.0, 2.0]], vec![[5, 6, 7]], 0).unwrap();
        cloud.reflective = Some(vec![true]);
        let out = render(&cloud, &Isometry3::identity(), &pinhole_spec(), &single_pixel()).unwrap();
        assert_eq!(out.hit.count(), 1);
        assert_eq!(out.depth.valid.count(), 0);
        assert_eq!(*out.depth.values.get(20, 15), 0.0);
    }

    #[test]
    fn equirect_splats_wrap_around_longitude() {
        let spec = ProjectionSpec::equirectangular(8);
        // straight back lands on the u seam
        let cloud = PointCloud::from_scan(vec![[0.0, 0.0, -1.0]], vec![[1, 2, 3]], 0).unwrap();
        let out = render(&cloud, &Isometry3::identity(), &spec, &RenderSettings::default()).unwrap();
        assert_eq!(out.hit.count(), 9);
        assert!(*out.hit.get(0, 4) && *out.hit.get(14, 4) && *out.hit.get(15, 4));
    }

    #[test]
    fn bundle_of_one_matches_render() {
        let cloud = PointCloud::from_scan(
            vec![[0.1, 0.0, 2.0], [-0.2, 0.1, 3.0], [0.0, -0.3, 1.5]],
            vec![[1, 2, 3], [4, 5, 6], [7, 8, 9]],
            3,
        )
        .unwrap();
        let spec = pinhole_spec();
        let s = RenderSettings::default();
        let a = render(&cloud, &Isometry3::identity(), &spec, &s).unwrap();
        let b = render_with_hole_fill(&[cloud], &Isometry3::identity(), &spec, &s, None).unwrap();
        assert_eq!(a.rgb, b.rgb);
        assert_eq!(a.depth, b.depth);
        assert_eq!(a.source_scan, b.source_scan);
    }

    #[test]
    fn fill_only_touches_empty_pixels() {
        let central = PointCloud::from_scan(vec![[0.0, 0.0, 5.0]], vec![[1, 1, 1]], 0).unwrap();
        let adjacent = PointCloud::from_scan(
            vec![[0.0, 0.0, 1.0], [0.4, 0.0, 2.0]],
            vec![[2, 2, 2], [3, 3, 3]],
            1,
        )
        .unwrap();
        let spec = pinhole_spec();
        let s = RenderSettings {
            splat_radius_px: 0.0,
            hole_fill_order: vec![0, 1],
        };
        let out = render_with_hole_fill(
            &[adjacent, central],
            &Isometry3::identity(),
            &spec,
            &s,
            None,
        )
        .unwrap();
        // the nearer adjacent point on the same pixel must not overwrite the central one
        assert_eq!(*out.depth.values.get(20, 15), 5.0);
        assert_eq!(*out.source_scan.get(20, 15), Some(0));
        assert_eq!(*out.source_scan.get(30, 15), Some(1));
        assert_eq!(out.hit.count(), 2);
    }

    #[test]
    fn fill_order_must_cover_bundle() {
        let a = PointCloud::from_scan(vec![[0.0, 0.0, 5.0]], vec![[1, 1, 1]], 0).unwrap();
        let b = PointCloud::from_scan(vec![[0.0, 0.0, 5.0]], vec![[1, 1, 1]], 7).unwrap();
        let s = RenderSettings {
            splat_radius_px: 0.0,
            hole_fill_order: vec![0],
        };
        assert!(
            render_with_hole_fill(&[a, b], &Isometry3::identity(), &pinhole_spec(), &s, None)
                .is_err()
        );
    }

    #[test]
    fn mask_regions_modes() {
        let depth = DepthMap::from_values(Grid::filled(10, 10, 20.0), None);
        assert_eq!(mask_regions(&depth, &[]), depth);

        let square = vec![[1.5, 1.5], [4.5, 1.5], [4.5, 4.5], [1.5, 4.5]];
        let zeroed = mask_regions(
            &depth,
            &[ImageRegion {
                polygon: square.clone(),
                mode: MaskMode::ZeroOut,
            }],
        );
        assert_eq!(zeroed.valid.count(), 100 - 9);
        assert!(!*zeroed.valid.get(3, 3) && *zeroed.valid.get(5, 5));
        assert_eq!(*zeroed.values.get(2, 2), 0.0);

        let clipped = mask_regions(
            &depth,
            &[ImageRegion {
                polygon: square,
                mode: MaskMode::ClipTo(8.0),
            }],
        );
        assert_eq!(*clipped.values.get(3, 3), 8.0);
        assert_eq!(*clipped.values.get(7, 7), 20.0);
        assert_eq!(clipped.valid.count(), 100);
    }
}
