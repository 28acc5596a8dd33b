//! FOV-parameterized virtual cameras and stereo rigs over the benchmark grid.

use nalgebra::{Isometry3, Matrix3, Point3, Translation3, Unit, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::camera::{ds_project, pinhole_project, DoubleSphereIntrinsics, PinholeIntrinsics};
use crate::error::{Error, Result};
use crate::grid::Mask;
use crate::projection::{make_ray_grid, ProjectionSpec};
use crate::stereo::StereoGeometry;

pub const DEFAULT_M: f64 = 0.2;
pub const DEFAULT_N: f64 = 1.25;

/// How virtual intrinsics follow the field of view, relative to a calibrated
/// reference camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirtualIntrinsicsPolicy {
    pub reference: DoubleSphereIntrinsics,
    #[serde(default = "default_m")]
    pub m: f64,
    #[serde(default = "default_n")]
    pub n: f64,
}

fn default_m() -> f64 {
    DEFAULT_M
}

fn default_n() -> f64 {
    DEFAULT_N
}

impl VirtualIntrinsicsPolicy {
    pub fn new(reference: DoubleSphereIntrinsics, m: f64, n: f64) -> Result<Self> {
        let p = Self { reference, m, n };
        p.validate()?;
        Ok(p)
    }

    pub fn with_defaults(reference: DoubleSphereIntrinsics) -> Self {
        Self {
            reference,
            m: DEFAULT_M,
            n: DEFAULT_N,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.reference.validate()?;
        if !(0.0..1.0).contains(&self.m) || !(self.n > 0.0 && self.n.is_finite()) {
            return Err(Error::Config(format!(
                "policy needs m in [0, 1) and n > 0, got m={} n={}",
                self.m, self.n
            )));
        }
        Ok(())
    }
}

/// Intrinsics of the virtual fisheye camera with the given field of view:
///
/// ```text
/// f_virt     = f * (n * 180 / FOV)
/// xi_virt    = xi * (1 - m * FOV / 180)
/// alpha_virt = alpha + m * (1 - alpha) * FOV / 180
/// ```
///
/// Principal point and image size are copied from the reference camera.
pub fn virtual_intrinsics(
    policy: &VirtualIntrinsicsPolicy,
    fov_deg: f64,
) -> Result<DoubleSphereIntrinsics> {
    policy.validate()?;
    if !(fov_deg > 0.0 && fov_deg.is_finite()) {
        return Err(Error::Config(format!("field of view must be positive, got {fov_deg}")));
    }
    let k = &policy.reference;
    let focal_scale = policy.n * (180.0 / fov_deg);
    let ratio = fov_deg / 180.0;
    let alpha = k.alpha + policy.m * (1.0 - k.alpha) * ratio;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!(
            "virtual alpha {alpha} left [0, 1] at FOV {fov_deg}"
        )));
    }
    Ok(DoubleSphereIntrinsics {
        fx: k.fx * focal_scale,
        fy: k.fy * focal_scale,
        xi: k.xi * (1.0 - policy.m * ratio),
        alpha,
        ..*k
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RigOrientation {
    Vertical,
    Horizontal,
}

impl RigOrientation {
    pub fn name(self) -> &'static str {
        match self {
            RigOrientation::Vertical => "vertical",
            RigOrientation::Horizontal => "horizontal",
        }
    }

    /// Direction from the reference camera to the second camera, camera frame.
    pub fn axis(self) -> Unit<Vector3<f64>> {
        match self {
            // y points down: the second camera sits below the reference
            RigOrientation::Vertical => Vector3::y_axis(),
            RigOrientation::Horizontal => Vector3::x_axis(),
        }
    }

    /// Rotation from the equirectangular projection frame to the camera frame that
    /// places the row-0 pole on the baseline, pointing away from the second camera.
    pub fn stereo_orientation(self) -> Matrix3<f64> {
        match self {
            RigOrientation::Vertical => Matrix3::identity(),
            RigOrientation::Horizontal => Matrix3::from_columns(&[
                Vector3::new(0.0, -1.0, 0.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(0.0, 0.0, 1.0),
            ]),
        }
    }
}

/// Two cameras sharing orientation, the second displaced by `baseline_m` along `axis`.
#[derive(Debug, Clone, PartialEq)]
pub struct StereoRig {
    /// Camera-to-world transform of the reference (upper or left) camera.
    pub reference_pose: Isometry3<f64>,
    pub baseline_m: f64,
    /// Unit direction to the second camera in the reference camera frame.
    pub axis: Unit<Vector3<f64>>,
    pub fov_deg: f64,
    pub orientation: RigOrientation,
}

impl StereoRig {
    pub fn second_pose(&self) -> Isometry3<f64> {
        self.reference_pose * Translation3::from(self.axis.into_inner() * self.baseline_m)
    }

    pub fn reference_center(&self) -> Point3<f64> {
        self.reference_pose * Point3::origin()
    }

    pub fn second_center(&self) -> Point3<f64> {
        self.second_pose() * Point3::origin()
    }

    pub fn stereo_orientation(&self) -> Matrix3<f64> {
        self.orientation.stereo_orientation()
    }

    /// Equirectangular projection with the pole on the baseline.
    pub fn stereo_projection(&self, height: usize) -> ProjectionSpec {
        ProjectionSpec::equirectangular(height).with_orientation(self.stereo_orientation())
    }

    pub fn geometry(&self, height: usize) -> Result<StereoGeometry> {
        StereoGeometry::new(height, self.baseline_m)
    }
}

/// Places the reference camera at `center_pose` and the second camera
/// `baseline_m` below (vertical) or to the right (horizontal).
pub fn build_rig(
    center_pose: Isometry3<f64>,
    baseline_m: f64,
    fov_deg: f64,
    orientation: RigOrientation,
) -> Result<StereoRig> {
    if !(baseline_m > 0.0 && baseline_m.is_finite()) {
        return Err(Error::Config(format!("baseline must be positive, got {baseline_m}")));
    }
    if !(60.0..=200.0).contains(&fov_deg) {
        return Err(Error::Config(format!("rig FOV {fov_deg} outside [60, 200]")));
    }
    if !center_pose.translation.vector.iter().all(|v| v.is_finite()) {
        return Err(Error::Config("rig pose must be finite".into()));
    }
    Ok(StereoRig {
        reference_pose: center_pose,
        baseline_m,
        axis: orientation.axis(),
        fov_deg,
        orientation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkGrid {
    pub baselines_m: Vec<f64>,
    pub fovs_deg: Vec<f64>,
    pub pinhole_fov_deg: f64,
}

impl Default for BenchmarkGrid {
    fn default() -> Self {
        Self {
            baselines_m: vec![0.020, 0.065, 0.120, 0.200, 0.300],
            fovs_deg: vec![120.0, 140.0, 165.0, 195.0],
            pinhole_fov_deg: 90.0,
        }
    }
}

impl BenchmarkGrid {
    pub fn validate(&self) -> Result<()> {
        if self.baselines_m.is_empty() || self.fovs_deg.is_empty() {
            return Err(Error::Config("benchmark grid lists must be nonempty".into()));
        }
        let all = self
            .baselines_m
            .iter()
            .chain(&self.fovs_deg)
            .chain(std::iter::once(&self.pinhole_fov_deg));
        for v in all {
            if !(*v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("benchmark grid value {v} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CameraKind {
    Fisheye,
    Pinhole,
}

impl CameraKind {
    pub fn name(self) -> &'static str {
        match self {
            CameraKind::Fisheye => "fisheye",
            CameraKind::Pinhole => "pinhole",
        }
    }
}

/// Identifies one stereo sample of a scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigDescriptor {
    pub id: String,
    pub camera: CameraKind,
    pub orientation: RigOrientation,
    pub baseline_m: f64,
    pub fov_deg: f64,
    pub projection: String,
}

impl RigDescriptor {
    pub fn new(camera: CameraKind, orientation: RigOrientation, baseline_m: f64, fov_deg: f64) -> Self {
        let id = format!(
            "{}-{}-b{:03}mm-fov{:03}",
            camera.name(),
            orientation.name(),
            (baseline_m * 1000.0).round() as i64,
            fov_deg.round() as i64
        );
        Self {
            id,
            camera,
            orientation,
            baseline_m,
            fov_deg,
            projection: "equirectangular".into(),
        }
    }

    /// Virtual camera whose coverage limits this sample.
    pub fn virtual_camera(&self, policy: &VirtualIntrinsicsPolicy) -> Result<VirtualCamera> {
        match self.camera {
            CameraKind::Fisheye => Ok(VirtualCamera::Fisheye {
                intrinsics: virtual_intrinsics(policy, self.fov_deg)?,
                fov_deg: self.fov_deg,
            }),
            CameraKind::Pinhole => Ok(VirtualCamera::Pinhole(PinholeIntrinsics::from_horizontal_fov(
                self.fov_deg,
                policy.reference.width,
                policy.reference.height,
            )?)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkEntry {
    pub descriptor: RigDescriptor,
    pub rig: StereoRig,
}

/// All fisheye (baseline x FOV) and pinhole (baseline) rigs in both
/// orientations, sorted by descriptor id.
pub fn enumerate_benchmark(
    grid: &BenchmarkGrid,
    scene_pose: Isometry3<f64>,
) -> Result<Vec<BenchmarkEntry>> {
    let mut out = Vec::new();
    for orientation in [RigOrientation::Vertical, RigOrientation::Horizontal] {
        for &b in &grid.baselines_m {
            for &fov in &grid.fovs_deg {
                out.push(BenchmarkEntry {
                    descriptor: RigDescriptor::new(CameraKind::Fisheye, orientation, b, fov),
                    rig: build_rig(scene_pose, b, fov, orientation)?,
                });
            }
            out.push(BenchmarkEntry {
                descriptor: RigDescriptor::new(
                    CameraKind::Pinhole,
                    orientation,
                    b,
                    grid.pinhole_fov_deg,
                ),
                rig: build_rig(scene_pose, b, grid.pinhole_fov_deg, orientation)?,
            });
        }
    }
    out.sort_by(|a, b| a.descriptor.id.cmp(&b.descriptor.id));
    if out.windows(2).any(|w| w[0].descriptor.id == w[1].descriptor.id) {
        return Err(Error::Config(
            "benchmark grid values collide after rounding to mm / degrees".into(),
        ));
    }
    Ok(out)
}

/// Physical camera whose field of view bounds a rendered sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VirtualCamera {
    Fisheye {
        intrinsics: DoubleSphereIntrinsics,
        fov_deg: f64,
    },
    Pinhole(PinholeIntrinsics),
}

impl VirtualCamera {
    /// True if a camera-frame direction is imaged: it must land on the sensor and,
    /// for fisheye cameras, lie within half the nominal FOV of the optical axis.
    pub fn covers(&self, dir: &Vector3<f64>) -> bool {
        let in_image = |px: Option<Vector2<f64>>, w: usize, h: usize| {
            px.is_some_and(|p| {
                p.x >= -0.5 && p.y >= -0.5 && p.x < w as f64 - 0.5 && p.y < h as f64 - 0.5
            })
        };
        match self {
            VirtualCamera::Fisheye {
                intrinsics,
                fov_deg,
            } => {
                let n = dir.norm();
                if !(n > 0.0) {
                    return false;
                }
                let angle = (dir.z / n).clamp(-1.0, 1.0).acos();
                angle <= (fov_deg / 2.0).to_radians()
                    && in_image(
                        ds_project(dir, intrinsics).ok().flatten(),
                        intrinsics.width,
                        intrinsics.height,
                    )
            }
            VirtualCamera::Pinhole(k) => in_image(
                pinhole_project(dir, k).ok().flatten(),
                k.width,
                k.height,
            ),
        }
    }

    /// Pixels of `spec` whose rays this camera images.
    pub fn coverage(&self, spec: &ProjectionSpec) -> Result<Mask> {
        let rays = make_ray_grid(spec)?;
        let r = spec.orientation;
        let dirs = rays.directions.map(|d| self.covers(&(r * d)));
        Ok(dirs.and(&rays.valid))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::ProjectionKind;

    fn policy() -> VirtualIntrinsicsPolicy {
        VirtualIntrinsicsPolicy::with_defaults(
            DoubleSphereIntrinsics::new(350.0, 352.0, 960.0, 540.0, -0.2, 0.6, 1920, 1080).unwrap(),
        )
    }

    #[test]
    fn fov_180_plug_in() {
        let p = policy();
        let k = virtual_intrinsics(&p, 180.0).unwrap();
        assert_eq!(k.fx, 1.25 * 350.0);
        assert_eq!(k.fy, 1.25 * 352.0);
        assert_eq!(k.xi, -0.2 * 0.8);
        assert_eq!(k.alpha, 0.6 + 0.2 * (1.0 - 0.6));
        assert_eq!((k.cx, k.cy, k.width, k.height), (960.0, 540.0, 1920, 1080));
    }

    #[test]
    fn fov_144_focal_scale() {
        let k = virtual_intrinsics(&policy(), 144.0).unwrap();
        assert_eq!(k.fx, 350.0 * 1.5625);
    }

    #[test]
    fn monotone_over_benchmark_range() {
        let p = policy();
        let ks: Vec<_> = (120..=195)
            .map(|f| virtual_intrinsics(&p, f as f64).unwrap())
            .collect();
        for w in ks.windows(2) {
            assert!(w[1].fx < w[0].fx);
            assert!(w[1].alpha > w[0].alpha);
        }
    }

    #[test]
    fn policy_rejects_bad_scaling() {
        let r = policy().reference;
        assert!(VirtualIntrinsicsPolicy::new(r, 1.0, 1.25).is_err());
        assert!(VirtualIntrinsicsPolicy::new(r, 0.2, 0.0).is_err());
        assert!(virtual_intrinsics(&policy(), 0.0).is_err());
    }

    #[test]
    fn vertical_rig_places_second_camera_below() {
        let rig = build_rig(Isometry3::identity(), 0.065, 195.0, RigOrientation::Vertical).unwrap();
        let c = rig.second_center();
        assert!((c - Point3::new(0.0, 0.065, 0.0)).norm() < 1e-15);
        let pose = Isometry3::new(
            Vector3::new(1.0, -2.0, 3.0),
            Vector3::new(0.3, -0.2, 1.1),
        );
        let rig = build_rig(pose, 0.3, 120.0, RigOrientation::Horizontal).unwrap();
        let d = (rig.second_center() - rig.reference_center()).norm();
        assert!((d - 0.3).abs() < 1e-12);
    }

    #[test]
    fn rig_rejects_zero_baseline() {
        assert!(build_rig(Isometry3::identity(), 0.0, 120.0, RigOrientation::Vertical).is_err());
        assert!(build_rig(Isometry3::identity(), 0.1, 30.0, RigOrientation::Vertical).is_err());
    }

    #[test]
    fn stereo_pole_lies_on_baseline() {
        for o in [RigOrientation::Vertical, RigOrientation::Horizontal] {
            let rig = build_rig(Isometry3::identity(), 0.1, 165.0, o).unwrap();
            let spec = rig.stereo_projection(64);
            spec.validate().unwrap();
            let pole = spec.orientation * spec.pixel_direction(0.0, -0.5).unwrap();
            // the row-0 pole points away from the second camera
            assert!((pole.dot(&rig.axis) + 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn default_grid_enumerates_fifty_samples() {
        let entries = enumerate_benchmark(&BenchmarkGrid::default(), Isometry3::identity()).unwrap();
        let count = |cam, o| {
            entries
                .iter()
                .filter(|e| e.descriptor.camera == cam && e.descriptor.orientation == o)
                .count()
        };
        assert_eq!(count(CameraKind::Fisheye, RigOrientation::Vertical), 20);
        assert_eq!(count(CameraKind::Fisheye, RigOrientation::Horizontal), 20);
        assert_eq!(count(CameraKind::Pinhole, RigOrientation::Vertical), 5);
        assert_eq!(count(CameraKind::Pinhole, RigOrientation::Horizontal), 5);
        let ids: Vec<_> = entries.iter().map(|e| e.descriptor.id.clone()).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
        let again = enumerate_benchmark(&BenchmarkGrid::default(), Isometry3::identity()).unwrap();
        assert!(again.iter().zip(&entries).all(|(a, b)| a.descriptor == b.descriptor));
        assert!(ids.contains(&"fisheye-vertical-b065mm-fov195".to_string()));
    }

    #[test]
    fn empty_grid_enumerates_nothing() {
        let grid = BenchmarkGrid {
            baselines_m: vec![],
            fovs_deg: vec![],
            pinhole_fov_deg: 90.0,
        };
        assert!(enumerate_benchmark(&grid, Isometry3::identity()).unwrap().is_empty());
        assert!(grid.validate().is_err());
    }

    #[test]
    fn fisheye_coverage_respects_half_fov() {
        let cam = RigDescriptor::new(CameraKind::Fisheye, RigOrientation::Vertical, 0.1, 120.0)
            .virtual_camera(&policy())
            .unwrap();
        assert!(cam.covers(&Vector3::z()));
        let at = |deg: f64| Vector3::new(deg.to_radians().sin(), 0.0, deg.to_radians().cos());
        assert!(cam.covers(&at(59.0)));
        assert!(!cam.covers(&at(61.0)));
        let spec = ProjectionSpec::equirectangular(32);
        assert!(matches!(spec.kind, ProjectionKind::Equirectangular { .. }));
        let m = cam.coverage(&spec).unwrap();
        assert!(m.count() > 0 && m.count() < 64 * 32 / 2);
    }
}
