//! Target projections, per-pixel ray grids and resampling between projections.
//!
//! Every projection maps pixels to unit directions in its own *projection
//! frame*; `ProjectionSpec::orientation` rotates projection-frame directions into
//! the camera frame. Warping between two projections that share a camera center
//! is then pull-based: for each target pixel, rotate its ray into the source
//! frame, project it with the source model and sample.
//!
//! Equirectangular rows follow latitude `L(v) = (v + 0.5) / H * pi` measured
//! from the pole at `v = 0`, which points along `-y` (up) in the projection frame.
//! Longitude `phi(u) = (u + 0.5) / W * 2 pi - pi` puts `+z` at the image center.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector2, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{
    ds_project, ds_unproject, pinhole_project, pinhole_unproject, DoubleSphereIntrinsics,
    PinholeIntrinsics,
};
use crate::error::{Error, Result};
use crate::grid::{Grid, Mask};

/// Latitude of the center of row `v` in an equirectangular image of height `h`.
#[inline]
pub fn row_latitude(v: usize, h: usize) -> f64 {
    (v as f64 + 0.5) / h as f64 * PI
}

/// Equirectangular direction for latitude `lat` (from the `-y` pole) and longitude `lon`.
#[inline]
pub fn spherical_direction(lat: f64, lon: f64) -> Vector3<f64> {
    let (sl, cl) = lat.sin_cos();
    let (sp, cp) = lon.sin_cos();
    Vector3::new(sl * sp, -cl, sl * cp)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProjectionKind {
    Equirectangular {
        width: usize,
        height: usize,
        /// `[min, max)` longitude span in radians; full sphere when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        longitude_range: Option<[f64; 2]>,
    },
    Cassini {
        width: usize,
        height: usize,
    },
    Pinhole {
        intrinsics: PinholeIntrinsics,
    },
    Cubemap {
        face_size: usize,
    },
    DsFisheye {
        intrinsics: DoubleSphereIntrinsics,
    },
}

impl ProjectionKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProjectionKind::Equirectangular { .. } => "equirectangular",
            ProjectionKind::Cassini { .. } => "cassini",
            ProjectionKind::Pinhole { .. } => "pinhole",
            ProjectionKind::Cubemap { .. } => "cubemap",
            ProjectionKind::DsFisheye { .. } => "ds_fisheye",
        }
    }
}

mod row_major {
    use nalgebra::Matrix3;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Matrix3<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: [[f64; 3]; 3] = std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)]));
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix3<f64>, D::Error> {
        let rows = <[[f64; 3]; 3]>::deserialize(d)?;
        Ok(Matrix3::from_fn(|r, c| rows[r][c]))
    }
}

fn identity() -> Matrix3<f64> {
    Matrix3::identity()
}

/// A target projection with its orientation (projection frame to camera frame).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSpec {
    #[serde(flatten)]
    pub kind: ProjectionKind,
    #[serde(with = "row_major", default = "identity")]
    pub orientation: Matrix3<f64>,
}

impl ProjectionSpec {
    pub fn new(kind: ProjectionKind, orientation: Matrix3<f64>) -> Result<Self> {
        let spec = Self { kind, orientation };
        spec.validate()?;
        Ok(spec)
    }

    pub fn equirectangular(height: usize) -> Self {
        Self {
            kind: ProjectionKind::Equirectangular {
                width: 2 * height,
                height,
                longitude_range: None,
            },
            orientation: Matrix3::identity(),
        }
    }

    pub fn with_orientation(mut self, orientation: Matrix3<f64>) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn width(&self) -> usize {
        match &self.kind {
            ProjectionKind::Equirectangular { width, .. } | ProjectionKind::Cassini { width, .. } => {
                *width
            }
            ProjectionKind::Pinhole { intrinsics } => intrinsics.width,
            ProjectionKind::Cubemap { face_size } => 4 * face_size,
            ProjectionKind::DsFisheye { intrinsics } => intrinsics.width,
        }
    }

    pub fn height(&self) -> usize {
        match &self.kind {
            ProjectionKind::Equirectangular { height, .. }
            | ProjectionKind::Cassini { height, .. } => *height,
            ProjectionKind::Pinhole { intrinsics } => intrinsics.height,
            ProjectionKind::Cubemap { face_size } => 3 * face_size,
            ProjectionKind::DsFisheye { intrinsics } => intrinsics.height,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.orientation;
        if !r.iter().all(|v| v.is_finite())
            || (r.transpose() * r - Matrix3::identity()).amax() > 1e-9
            || (r.determinant() - 1.0).abs() > 1e-9
        {
            return Err(Error::Config("orientation must be a proper rotation".into()));
        }
        match &self.kind {
            ProjectionKind::Equirectangular {
                width,
                height,
                longitude_range,
            } => {
                if *width == 0 || *height == 0 {
                    return Err(Error::Config("equirectangular size must be nonzero".into()));
                }
                match longitude_range {
                    None if *width != 2 * height => {
                        return Err(Error::Config(format!(
                            "full-sphere equirectangular needs width = 2 * height, got {width}x{height}"
                        )))
                    }
                    Some([lo, hi]) if !(lo < hi && hi - lo <= 2.0 * PI + 1e-12) => {
                        return Err(Error::Config(format!(
                            "invalid longitude range [{lo}, {hi})"
                        )))
                    }
                    _ => {}
                }
            }
            ProjectionKind::Cassini { width, height } => {
                if *width == 0 || *height != 2 * width {
                    return Err(Error::Config(format!(
                        "cassini needs height = 2 * width, got {width}x{height}"
                    )));
                }
            }
            ProjectionKind::Pinhole { intrinsics } => intrinsics.validate()?,
            ProjectionKind::Cubemap { face_size } => {
                if *face_size == 0 {
                    return Err(Error::Config("cubemap face size must be nonzero".into()));
                }
            }
            ProjectionKind::DsFisheye { intrinsics } => intrinsics.validate()?,
        }
        Ok(())
    }

    fn longitude_span(&self) -> Option<(f64, f64)> {
        match &self.kind {
            ProjectionKind::Equirectangular {
                longitude_range, ..
            } => Some(match longitude_range {
                Some([lo, hi]) => (*lo, hi - lo),
                None => (-PI, 2.0 * PI),
            }),
            _ => None,
        }
    }

    /// True when the horizontal image axis wraps around (full-sphere equirectangular).
    pub fn wraps_u(&self) -> bool {
        matches!(self.longitude_span(), Some((_, span)) if (span - 2.0 * PI).abs() < 1e-12)
    }

    /// True when the vertical image axis wraps around (Cassini).
    pub fn wraps_v(&self) -> bool {
        matches!(self.kind, ProjectionKind::Cassini { .. })
    }

    /// Projection-frame direction through the continuous pixel `(u, v)`.
    pub fn pixel_direction(&self, u: f64, v: f64) -> Option<Vector3<f64>> {
        let (w, h) = (self.width() as f64, self.height() as f64);
        match &self.kind {
            ProjectionKind::Equirectangular { .. } => {
                let (lo, span) = self.longitude_span().expect("equirectangular");
                let lat = (v + 0.5) / h * PI;
                let lon = lo + (u + 0.5) / w * span;
                Some(spherical_direction(lat, lon))
            }
            ProjectionKind::Cassini { .. } => {
                let lat = (u + 0.5) / w * PI;
                let lon = (v + 0.5) / h * 2.0 * PI - PI;
                let (sl, cl) = lat.sin_cos();
                let (sp, cp) = lon.sin_cos();
                Some(Vector3::new(-cl, sl * sp, sl * cp))
            }
            ProjectionKind::Pinhole { intrinsics } => {
                Some(pinhole_unproject(&Vector2::new(u, v), intrinsics).into_inner())
            }
            ProjectionKind::DsFisheye { intrinsics } => {
                ds_unproject(&Vector2::new(u, v), intrinsics).map(|r| r.into_inner())
            }
            ProjectionKind::Cubemap { face_size } => {
                let n = *face_size;
                let (ui, vi) = (u.round(), v.round());
                if ui < 0.0 || vi < 0.0 {
                    return None;
                }
                let face = CubeFace::at_cell(ui as usize / n, vi as usize / n)?;
                let (col, row) = face.cell();
                let local = Vector2::new(u - (col * n) as f64, v - (row * n) as f64);
                let dir = pinhole_unproject(&local, &face_camera(n)).into_inner();
                Some(face.rotation() * dir)
            }
        }
    }

    /// Continuous pixel of a projection-frame direction, `None` if it does not land
    /// on the image. Wrapping axes are folded into range.
    pub fn project_direction(&self, d: &Vector3<f64>) -> Option<Vector2<f64>> {
        let (w, h) = (self.width() as f64, self.height() as f64);
        let n = d.norm();
        if !(n > 0.0) || !n.is_finite() {
            return None;
        }
        let d = d / n;
        let px = match &self.kind {
            ProjectionKind::Equirectangular { .. } => {
                let (lo, span) = self.longitude_span().expect("equirectangular");
                let lat = (-d.y).clamp(-1.0, 1.0).acos();
                let mut lon = d.x.atan2(d.z);
                if self.wraps_u() {
                    lon = lo + (lon - lo).rem_euclid(2.0 * PI);
                }
                let u = (lon - lo) / span * w - 0.5;
                let v = lat / PI * h - 0.5;
                Vector2::new(wrap_coord(u, w, self.wraps_u()), v)
            }
            ProjectionKind::Cassini { .. } => {
                let lat = (-d.x).clamp(-1.0, 1.0).acos();
                let lon = d.y.atan2(d.z);
                let u = lat / PI * w - 0.5;
                let v = (lon + PI) / (2.0 * PI) * h - 0.5;
                Vector2::new(u, wrap_coord(v, h, true))
            }
            ProjectionKind::Pinhole { intrinsics } => pinhole_project(&d, intrinsics).ok()??,
            ProjectionKind::DsFisheye { intrinsics } => ds_project(&d, intrinsics).ok()??,
            ProjectionKind::Cubemap { face_size } => {
                let n = *face_size;
                let face = CubeFace::of_direction(&d);
                let local_dir = face.rotation().transpose() * d;
                let local = pinhole_project(&local_dir, &face_camera(n)).ok()??;
                let hi = n as f64 - 0.5 - 1e-9;
                let (col, row) = face.cell();
                Vector2::new(
                    local.x.clamp(-0.5, hi) + (col * n) as f64,
                    local.y.clamp(-0.5, hi) + (row * n) as f64,
                )
            }
        };
        let inside = px.x >= -0.5 && px.y >= -0.5 && px.x < w - 0.5 && px.y < h - 0.5;
        inside.then_some(px)
    }
}

/// Maps a continuous coordinate on a wrapping axis into `[-0.5, len - 0.5)`.
fn wrap_coord(c: f64, len: f64, wraps: bool) -> f64 {
    if !wraps {
        return c;
    }
    let r = (c + 0.5).rem_euclid(len) - 0.5;
    // rem_euclid can return `len` itself after rounding
    if r >= len - 0.5 {
        -0.5
    } else {
        r
    }
}

/// Cube faces in their fixed storage order `+x, -x, +y, -y, +z, -z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CubeFace {
    PosX,
    NegX,
    PosY,
    NegY,
    PosZ,
    NegZ,
}

impl CubeFace {
    pub const ALL: [CubeFace; 6] = [
        CubeFace::PosX,
        CubeFace::NegX,
        CubeFace::PosY,
        CubeFace::NegY,
        CubeFace::PosZ,
        CubeFace::NegZ,
    ];

    /// `(column, row)` of the face in the 4x3 cross layout:
    ///
    /// ```text
    ///        -y
    ///   -x   +z   +x   -z
    ///        +y
    /// ```
    pub fn cell(self) -> (usize, usize) {
        match self {
            CubeFace::NegX => (0, 1),
            CubeFace::PosZ => (1, 1),
            CubeFace::PosX => (2, 1),
            CubeFace::NegZ => (3, 1),
            CubeFace::NegY => (1, 0),
            CubeFace::PosY => (1, 2),
        }
    }

    fn at_cell(col: usize, row: usize) -> Option<CubeFace> {
        CubeFace::ALL.into_iter().find(|f| f.cell() == (col, row))
    }

    /// Face frame (x right, y down, z forward) to projection frame.
    pub fn rotation(self) -> Matrix3<f64> {
        let (right, down, fwd) = match self {
            CubeFace::PosZ => (Vector3::x(), Vector3::y(), Vector3::z()),
            CubeFace::PosX => (-Vector3::z(), Vector3::y(), Vector3::x()),
            CubeFace::NegX => (Vector3::z(), Vector3::y(), -Vector3::x()),
            CubeFace::NegZ => (-Vector3::x(), Vector3::y(), -Vector3::z()),
            CubeFace::NegY => (Vector3::x(), Vector3::z(), -Vector3::y()),
            CubeFace::PosY => (Vector3::x(), -Vector3::z(), Vector3::y()),
        };
        Matrix3::from_columns(&[right, down, fwd])
    }

    pub fn of_direction(d: &Vector3<f64>) -> CubeFace {
        let a = d.abs();
        if a.x >= a.y && a.x >= a.z {
            if d.x >= 0.0 {
                CubeFace::PosX
            } else {
                CubeFace::NegX
            }
        } else if a.y >= a.z {
            if d.y >= 0.0 {
                CubeFace::PosY
            } else {
                CubeFace::NegY
            }
        } else if d.z >= 0.0 {
            CubeFace::PosZ
        } else {
            CubeFace::NegZ
        }
    }
}

/// 90 degree pinhole camera of one cube face.
pub fn face_camera(face_size: usize) -> PinholeIntrinsics {
    let f = face_size as f64 / 2.0;
    let c = (face_size as f64 - 1.0) / 2.0;
    PinholeIntrinsics {
        fx: f,
        fy: f,
        cx: c,
        cy: c,
        width: face_size,
        height: face_size,
    }
}

/// Arranges six faces (storage order `+x, -x, +y, -y, +z, -z`) into the cross layout.
/// Cells without a face are filled with `T::default()`.
pub fn cubemap_assemble<T: Copy + Default>(faces: &[Grid<T>; 6]) -> Result<Grid<T>> {
    let n = faces[0].width();
    if faces.iter().any(|f| f.dims() != (n, n)) || n == 0 {
        return Err(Error::Contract("cube faces must be equal nonzero squares".into()));
    }
    let mut out = Grid::filled(4 * n, 3 * n, T::default());
    for (face, img) in CubeFace::ALL.iter().zip(faces) {
        let (col, row) = face.cell();
        for y in 0..n {
            for x in 0..n {
                out.set(col * n + x, row * n + y, *img.get(x, y));
            }
        }
    }
    Ok(out)
}

/// Inverse of [`cubemap_assemble`].
pub fn cubemap_split<T: Copy + Default>(cross: &Grid<T>) -> Result<[Grid<T>; 6]> {
    let n = cross.width() / 4;
    if n == 0 || cross.width() != 4 * n || cross.height() != 3 * n {
        return Err(Error::Contract(format!(
            "cross layout must be 4n x 3n, got {}x{}",
            cross.width(),
            cross.height()
        )));
    }
    Ok(CubeFace::ALL.map(|face| {
        let (col, row) = face.cell();
        cross.crop(col * n, row * n, n, n)
    }))
}

/// Per-pixel projection-frame directions of a projection.
#[derive(Debug, Clone)]
pub struct RayGrid {
    pub directions: Grid<Vector3<f64>>,
    pub valid: Mask,
}

impl RayGrid {
    pub fn width(&self) -> usize {
        self.directions.width()
    }

    pub fn height(&self) -> usize {
        self.directions.height()
    }
}

/// Evaluates the viewing direction of every pixel center.
pub fn make_ray_grid(spec: &ProjectionSpec) -> Result<RayGrid> {
    spec.validate()?;
    let (w, h) = (spec.width(), spec.height());
    let dirs: Grid<Option<Vector3<f64>>> =
        Grid::from_fn_par(w, h, |x, y| spec.pixel_direction(x as f64, y as f64));
    Ok(RayGrid {
        valid: dirs.map(|d| d.is_some()),
        directions: dirs.map(|d| d.unwrap_or_else(Vector3::zeros)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Nearest,
    Bilinear,
}

/// Pixel types that can be resampled.
pub trait WarpSample: Copy + Default + Send + Sync {
    /// Geometry-carrying samples (depth, disparity) must not be blended.
    const BLENDABLE: bool;

    /// Weighted average; weights are positive and sum to one.
    fn blend(taps: &[(Self, f64)]) -> Self;
}

impl WarpSample for [u8; 3] {
    const BLENDABLE: bool = true;

    fn blend(taps: &[(Self, f64)]) -> Self {
        let mut acc = [0.0f64; 3];
        for (c, w) in taps {
            for (a, &v) in acc.iter_mut().zip(c) {
                *a += w * v as f64;
            }
        }
        acc.map(|a| a.round().clamp(0.0, 255.0) as u8)
    }
}

impl WarpSample for u8 {
    const BLENDABLE: bool = true;

    fn blend(taps: &[(Self, f64)]) -> Self {
        let s: f64 = taps.iter().map(|(c, w)| w * *c as f64).sum();
        s.round().clamp(0.0, 255.0) as u8
    }
}

macro_rules! geometry_sample {
    ($t:ty) => {
        impl WarpSample for $t {
            const BLENDABLE: bool = false;

            fn blend(taps: &[(Self, f64)]) -> Self {
                taps[0].0
            }
        }
    };
}

geometry_sample!(f32);
geometry_sample!(f64);

/// Result of a warp: resampled grid plus target validity.
#[derive(Debug, Clone)]
pub struct Warped<T> {
    pub image: Grid<T>,
    pub valid: Mask,
}

/// Resamples `src` (laid out per `src_spec`) into `target`. Both projections must
/// share the camera center; their orientations may differ. Target pixels whose
/// ray leaves the source image or domain, or hits an invalid source pixel, are
/// invalid and hold `T::default()`.
pub fn warp<T: WarpSample>(
    src: &Grid<T>,
    src_valid: Option<&Mask>,
    src_spec: &ProjectionSpec,
    target: &ProjectionSpec,
    interpolation: Interpolation,
) -> Result<Warped<T>> {
    if interpolation == Interpolation::Bilinear && !T::BLENDABLE {
        return Err(Error::Contract(
            "bilinear interpolation is not allowed for depth or disparity grids".into(),
        ));
    }
    src_spec.validate()?;
    if src.dims() != (src_spec.width(), src_spec.height()) {
        return Err(Error::Contract(format!(
            "source grid is {}x{} but its projection is {}x{}",
            src.width(),
            src.height(),
            src_spec.width(),
            src_spec.height()
        )));
    }
    if let Some(m) = src_valid {
        if !m.same_dims(src) {
            return Err(Error::Contract("source mask size mismatch".into()));
        }
    }
    let rays = make_ray_grid(target)?;
    let to_src = src_spec.orientation.transpose() * target.orientation;
    let sampler = Sampler {
        src,
        mask: src_valid,
        wrap_u: src_spec.wraps_u(),
        wrap_v: src_spec.wraps_v(),
    };

    let samples: Vec<Option<T>> = rays
        .directions
        .as_slice()
        .par_iter()
        .zip(rays.valid.as_slice().par_iter())
        .map(|(dir, &ok)| {
            if !ok {
                return None;
            }
            let px = src_spec.project_direction(&(to_src * dir))?;
            match interpolation {
                Interpolation::Nearest => sampler.nearest(px),
                Interpolation::Bilinear => sampler.bilinear(px),
            }
        })
        .collect();

    let (w, h) = (target.width(), target.height());
    let valid = Grid::from_vec(w, h, samples.iter().map(Option::is_some).collect())?;
    let image = Grid::from_vec(
        w,
        h,
        samples.into_iter().map(Option::unwrap_or_default).collect(),
    )?;
    Ok(Warped { image, valid })
}

struct Sampler<'a, T> {
    src: &'a Grid<T>,
    mask: Option<&'a Mask>,
    wrap_u: bool,
    wrap_v: bool,
}

impl<T: WarpSample> Sampler<'_, T> {
    fn resolve(&self, x: i64, y: i64) -> Option<(usize, usize)> {
        let (w, h) = (self.src.width() as i64, self.src.height() as i64);
        let x = if self.wrap_u { x.rem_euclid(w) } else { x };
        let y = if self.wrap_v { y.rem_euclid(h) } else { y };
        if x < 0 || y < 0 || x >= w || y >= h {
            return None;
        }
        let (x, y) = (x as usize, y as usize);
        match self.mask {
            Some(m) if !*m.get(x, y) => None,
            _ => Some((x, y)),
        }
    }

    fn nearest(&self, px: Vector2<f64>) -> Option<T> {
        let (x, y) = self.resolve(px.x.round() as i64, px.y.round() as i64)?;
        Some(*self.src.get(x, y))
    }

    fn bilinear(&self, px: Vector2<f64>) -> Option<T> {
        // the nearest tap must be valid; other invalid taps are dropped
        self.resolve(px.x.round() as i64, px.y.round() as i64)?;
        let (x0, y0) = (px.x.floor(), px.y.floor());
        let (fx, fy) = (px.x - x0, px.y - y0);
        let (x0, y0) = (x0 as i64, y0 as i64);
        let mut taps = [(T::default(), 0.0); 4];
        let mut n = 0;
        let mut total = 0.0;
        for (dx, dy, w) in [
            (0, 0, (1.0 - fx) * (1.0 - fy)),
            (1, 0, fx * (1.0 - fy)),
            (0, 1, (1.0 - fx) * fy),
            (1, 1, fx * fy),
        ] {
            if w <= 0.0 {
                continue;
            }
            if let Some((x, y)) = self.resolve(x0 + dx, y0 + dy) {
                taps[n] = (*self.src.get(x, y), w);
                total += w;
                n += 1;
            }
        }
        if n == 0 {
            return None;
        }
        for t in &mut taps[..n] {
            t.1 /= total;
        }
        Some(T::blend(&taps[..n]))
    }
}

/// Rows and columns removed by [`crop_and_rotate_for_stereo`], needed to undo it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropInfo {
    pub width: usize,
    pub height: usize,
    /// rows removed from the top and from the bottom
    pub rows: usize,
    /// columns removed from the left and from the right
    pub cols: usize,
}

/// Removes fully invalid border rows/columns symmetrically (the same count from
/// both opposite sides), then rotates 90 degrees counter-clockwise so that
/// vertical epipolar columns become horizontal scanlines.
pub fn crop_and_rotate_for_stereo<T: Copy + Default>(
    image: &Grid<T>,
    valid: &Mask,
) -> Result<(Grid<T>, Mask, CropInfo)> {
    if !image.same_dims(valid) {
        return Err(Error::Contract("image and mask sizes differ".into()));
    }
    let (w, h) = image.dims();
    let row_empty = |y: usize| valid.row(y).iter().all(|&v| !v);
    let col_empty = |x: usize| (0..h).all(|y| !*valid.get(x, y));

    let top = (0..h).take_while(|&y| row_empty(y)).count();
    if top == h {
        return Err(Error::Empty("image has no valid pixels".into()));
    }
    let bottom = (0..h).rev().take_while(|&y| row_empty(y)).count();
    let left = (0..w).take_while(|&x| col_empty(x)).count();
    let right = (0..w).rev().take_while(|&x| col_empty(x)).count();

    let info = CropInfo {
        width: w,
        height: h,
        rows: top.min(bottom),
        cols: left.min(right),
    };
    let (cw, ch) = (w - 2 * info.cols, h - 2 * info.rows);
    let img = image.crop(info.cols, info.rows, cw, ch).rotate_ccw();
    let mask = valid.crop(info.cols, info.rows, cw, ch).rotate_ccw();
    Ok((img, mask, info))
}

/// Undoes [`crop_and_rotate_for_stereo`]: rotates clockwise and pads back to the
/// original size with invalid pixels.
pub fn restore_from_stereo_input<T: Copy + Default>(
    image: &Grid<T>,
    valid: &Mask,
    info: &CropInfo,
) -> Result<(Grid<T>, Mask)> {
    let (cw, ch) = (
        info.width.checked_sub(2 * info.cols),
        info.height.checked_sub(2 * info.rows),
    );
    let (Some(cw), Some(ch)) = (cw, ch) else {
        return Err(Error::Contract("crop info is inconsistent".into()));
    };
    if image.dims() != (ch, cw) || !image.same_dims(valid) {
        return Err(Error::Contract(format!(
            "expected a {}x{} rotated image, got {}x{}",
            ch,
            cw,
            image.width(),
            image.height()
        )));
    }
    let img = image.rotate_cw();
    let mask = valid.rotate_cw();
    let mut out = Grid::filled(info.width, info.height, T::default());
    let mut out_mask = Grid::filled(info.width, info.height, false);
    for y in 0..ch {
        for x in 0..cw {
            out.set(x + info.cols, y + info.rows, *img.get(x, y));
            out_mask.set(x + info.cols, y + info.rows, *mask.get(x, y));
        }
    }
    Ok((out, out_mask))
}
