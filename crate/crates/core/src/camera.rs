//! Double Sphere fisheye model and the pinhole model as per-point functions.
//!
//! Pixel convention: the center of pixel `(i, j)` sits at the integer
//! coordinate `(u, v) = (i, j)`, `u` grows along the image width, `v` along the
//! height, origin top-left. Camera frame: `x` right, `y` down, `z` forward.
//!
//! Double Sphere projection of `p = (x, y, z)`:
//!
//! ```text
//! d1 = |p|
//! d2 = sqrt(x^2 + y^2 + (xi * d1 + z)^2)
//! u  = fx * x / (alpha * d2 + (1 - alpha) * (xi * d1 + z)) + cx
//! v  = fy * y / (alpha * d2 + (1 - alpha) * (xi * d1 + z)) + cy
//! ```
//!
//! valid when the denominator is positive and `z > -w2 * d1`, with
//! `w1 = alpha / (1 - alpha)` for `alpha <= 0.5`, `(1 - alpha) / alpha` otherwise,
//! and `w2 = (w1 + xi) / sqrt(2 * w1 * xi + xi^2 + 1)`.

use std::ops::Deref;

use nalgebra::{Unit, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unit viewing direction in a camera or projection frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray(Unit<Vector3<f64>>);

impl Ray {
    /// Normalizes `v`. Returns `None` for zero or non-finite input.
    pub fn from_vector(v: Vector3<f64>) -> Option<Self> {
        if !v.iter().all(|c| c.is_finite()) {
            return None;
        }
        Unit::try_new(v, f64::MIN_POSITIVE).map(Ray)
    }

    pub fn dx(&self) -> f64 {
        self.0.x
    }

    pub fn dy(&self) -> f64 {
        self.0.y
    }

    pub fn dz(&self) -> f64 {
        self.0.z
    }

    pub fn into_inner(self) -> Vector3<f64> {
        self.0.into_inner()
    }

    /// Angle between two rays in radians, stable for tiny angles.
    pub fn angle_to(&self, other: &Ray) -> f64 {
        let cross = self.0.cross(&other.0).norm();
        let dot = self.0.dot(&other.0);
        cross.atan2(dot)
    }
}

impl Deref for Ray {
    type Target = Vector3<f64>;

    fn deref(&self) -> &Vector3<f64> {
        self.0.as_ref()
    }
}

/// Per-point camera model with pixel-space projection and unit-ray unprojection.
pub trait CameraModel {
    /// Projects a camera-frame point. `Ok(None)` means the point is outside the
    /// model's projection domain. The pixel may fall outside the image.
    fn project(&self, p: &Vector3<f64>) -> Result<Option<Vector2<f64>>>;

    /// Unprojects a pixel to a unit ray, `None` outside the model's domain.
    fn unproject(&self, px: &Vector2<f64>) -> Option<Ray>;

    fn width(&self) -> usize;

    fn height(&self) -> usize;

    /// True if the continuous pixel lies on the image, i.e. rounds to an existing pixel.
    fn contains(&self, px: &Vector2<f64>) -> bool {
        px.x >= -0.5
            && px.y >= -0.5
            && px.x < self.width() as f64 - 0.5
            && px.y < self.height() as f64 - 0.5
    }
}

fn check_point(p: &Vector3<f64>) -> Result<()> {
    if !p.iter().all(|c| c.is_finite()) {
        return Err(Error::Domain(format!("non-finite point {:?}", p.as_slice())));
    }
    if p.norm_squared() == 0.0 {
        return Err(Error::Domain("cannot project a zero-length point".into()));
    }
    Ok(())
}

/// Double Sphere intrinsics: focal lengths, principal point, sphere offset
/// `xi`, blending `alpha` and the image size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleSphereIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub xi: f64,
    pub alpha: f64,
    pub width: usize,
    pub height: usize,
}

impl DoubleSphereIntrinsics {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        xi: f64,
        alpha: f64,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            xi,
            alpha,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.fx, self.fy, self.cx, self.cy, self.xi, self.alpha]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("double sphere parameters must be finite".into()));
        }
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(Error::Config(format!(
                "focal lengths must be positive, got fx={} fy={}",
                self.fx, self.fy
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("image size must be nonzero".into()));
        }
        if self.cx < 0.0
            || self.cx >= self.width as f64
            || self.cy < 0.0
            || self.cy >= self.height as f64
        {
            return Err(Error::Config(format!(
                "principal point ({}, {}) outside the {}x{} image",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }

    /// `z > -w2 * d1` bound of the valid projection region.
    fn w2(&self) -> f64 {
        let a = self.alpha;
        let w1 = if a <= 0.5 { a / (1.0 - a) } else { (1.0 - a) / a };
        (w1 + self.xi) / (2.0 * w1 * self.xi + self.xi * self.xi + 1.0).sqrt()
    }
}

/// Projects a camera-frame point through the Double Sphere model.
pub fn ds_project(p: &Vector3<f64>, k: &DoubleSphereIntrinsics) -> Result<Option<Vector2<f64>>> {
    check_point(p)?;
    let (x, y, z) = (p.x, p.y, p.z);
    let r2 = x * x + y * y;
    let d1 = (r2 + z * z).sqrt();
    let shifted_z = k.xi * d1 + z;
    let d2 = (r2 + shifted_z * shifted_z).sqrt();
    let denom = k.alpha * d2 + (1.0 - k.alpha) * shifted_z;

    if denom <= 0.0 || z <= -k.w2() * d1 {
        return Ok(None);
    }
    Ok(Some(Vector2::new(
        k.fx * x / denom + k.cx,
        k.fy * y / denom + k.cy,
    )))
}

/// Closed-form Double Sphere unprojection.
pub fn ds_unproject(px: &Vector2<f64>, k: &DoubleSphereIntrinsics) -> Option<Ray> {
    let a = k.alpha;
    let mx = (px.x - k.cx) / k.fx;
    let my = (px.y - k.cy) / k.fy;
    let r2 = mx * mx + my * my;

    let root = 1.0 - (2.0 * a - 1.0) * r2;
    if root < 0.0 {
        // only reachable for alpha > 0.5, r2 > 1 / (2 alpha - 1)
        return None;
    }
    let mz = (1.0 - a * a * r2) / (a * root.sqrt() + 1.0 - a);
    let disc = mz * mz + (1.0 - k.xi * k.xi) * r2;
    let norm2 = mz * mz + r2;
    if disc < 0.0 || norm2 <= 0.0 {
        return None;
    }
    let scale = (mz * k.xi + disc.sqrt()) / norm2;
    Ray::from_vector(Vector3::new(scale * mx, scale * my, scale * mz - k.xi))
}

impl CameraModel for DoubleSphereIntrinsics {
    fn project(&self, p: &Vector3<f64>) -> Result<Option<Vector2<f64>>> {
        ds_project(p, self)
    }

    fn unproject(&self, px: &Vector2<f64>) -> Option<Ray> {
        ds_unproject(px, self)
    }

    fn width(&self) -> usize {
        self.width
    }

    fn height(&self) -> usize {
        self.height
    }
}

/// Perspective camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinholeIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl PinholeIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    /// Square-pixel camera with the given horizontal field of view, centered principal point.
    pub fn from_horizontal_fov(fov_deg: f64, width: usize, height: usize) -> Result<Self> {
        if !(fov_deg > 0.0 && fov_deg < 180.0) {
            return Err(Error::Config(format!(
                "pinhole field of view must lie in (0, 180), got {fov_deg}"
            )));
        }
        let f = (width as f64 / 2.0) / (fov_deg.to_radians() / 2.0).tan();
        Self::new(
            f,
            f,
            (width as f64 - 1.0) / 2.0,
            (height as f64 - 1.0) / 2.0,
            width,
            height,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) || !self.cx.is_finite() || !self.cy.is_finite() {
            return Err(Error::Config(format!(
                "invalid pinhole parameters fx={} fy={} cx={} cy={}",
                self.fx, self.fy, self.cx, self.cy
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("image size must be nonzero".into()));
        }
        Ok(())
    }
}

/// Perspective projection; `None` for points with `z <= 0`.
pub fn pinhole_project(
    p: &Vector3<f64>,
    k: &PinholeIntrinsics,
) -> Result<Option<Vector2<f64>>> {
    check_point(p)?;
    if p.z <= 0.0 {
        return Ok(None);
    }
    Ok(Some(Vector2::new(
        k.fx * p.x / p.z + k.cx,
        k.fy * p.y / p.z + k.cy,
    )))
}

pub fn pinhole_unproject(px: &Vector2<f64>, k: &PinholeIntrinsics) -> Ray {
    let v = Vector3::new((px.x - k.cx) / k.fx, (px.y - k.cy) / k.fy, 1.0);
    Ray::from_vector(v).expect("pinhole ray has unit z component")
}

impl CameraModel for PinholeIntrinsics {
    fn project(&self, p: &Vector3<f64>) -> Result<Option<Vector2<f64>>> {
        pinhole_project(p, self)
    }

    fn unproject(&self, px: &Vector2<f64>) -> Option<Ray> {
        Some(pinhole_unproject(px, self))
    }

    fn width(&self) -> usize {
        self.width
    }

    fn height(&self) -> usize {
        self.height
    }
}
