//! Depth and disparity conversion for vertical stereo pairs in equirectangular
//! projection.
//!
//! Geometry: the reference camera is the upper one, the second camera sits
//! `B` meters below it, and the equirectangular pole at row 0 points up, away
//! from the second camera. For a pixel at latitude `L` (angle from that pole)
//! with disparity `disp` pixels along its column, the parallax angle is
//! `rho = disp / H * pi`. In the triangle (reference camera, second camera,
//! scene point) the angle at the reference camera is `beta = pi - L` and the
//! angle at the second camera is `gamma = pi - rho - beta`, so by the law of
//! sines the range from the reference camera is `B * sin(gamma) / sin(rho)`.
//! The inverse is `disp = H / pi * atan(sin L / (depth / B + cos L))`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Mask};
use crate::projection::row_latitude;

/// Disparities at or below this value (pixels) carry no usable parallax.
pub const MIN_DISPARITY_PX: f64 = 1e-4;

/// Image height and baseline needed to relate disparity and range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StereoGeometry {
    pub height: usize,
    pub baseline_m: f64,
}

impl StereoGeometry {
    pub fn new(height: usize, baseline_m: f64) -> Result<Self> {
        if height == 0 || !(baseline_m > 0.0 && baseline_m.is_finite()) {
            return Err(Error::Config(format!(
                "stereo geometry needs height > 0 and baseline > 0, got H={height} B={baseline_m}"
            )));
        }
        Ok(Self { height, baseline_m })
    }
}

/// Range (meters) of a pixel at latitude `lat` with disparity `disp_px`.
/// `None` when the disparity is below [`MIN_DISPARITY_PX`] or the triangle is
/// degenerate (`gamma <= 0`).
#[inline]
pub fn disparity_to_range(lat: f64, disp_px: f64, height: usize, baseline_m: f64) -> Option<f64> {
    if !(disp_px > MIN_DISPARITY_PX) || !disp_px.is_finite() {
        return None;
    }
    let rho = disp_px / height as f64 * PI;
    let beta = PI - lat;
    let gamma = PI - rho - beta;
    if gamma <= 0.0 {
        return None;
    }
    Some(baseline_m * gamma.sin() / rho.sin())
}

/// Disparity (pixels) of a point at range `range_m` seen at latitude `lat`.
/// The two-argument arctangent keeps `rho` in `(0, pi)`.
#[inline]
pub fn range_to_disparity(lat: f64, range_m: f64, height: usize, baseline_m: f64) -> Option<f64> {
    if !(range_m > 0.0) || !range_m.is_finite() {
        return None;
    }
    let rho = lat.sin().atan2(range_m / baseline_m + lat.cos());
    Some(height as f64 / PI * rho)
}

/// Re-expresses a reference-camera observation in the second camera: returns
/// `(latitude, range)` seen from the camera `baseline_m` below.
#[inline]
pub fn transfer_to_second(lat: f64, range_m: f64, baseline_m: f64) -> Option<(f64, f64)> {
    if !(range_m > 0.0) || !range_m.is_finite() {
        return None;
    }
    let (s, c) = lat.sin_cos();
    let range2 =
        (range_m * range_m + baseline_m * baseline_m + 2.0 * range_m * baseline_m * c).sqrt();
    let lat2 = (range_m * s).atan2(range_m * c + baseline_m);
    (range2 > 0.0).then_some((lat2, range2))
}

/// Per-pixel range in meters from the camera center; invalid pixels hold zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub values: Grid<f64>,
    pub valid: Mask,
    pub geometry: Option<StereoGeometry>,
}

/// Per-pixel disparity in pixels along image columns; invalid pixels hold zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMap {
    pub values: Grid<f64>,
    pub valid: Mask,
    pub geometry: Option<StereoGeometry>,
}

impl DepthMap {
    /// Valid where the value is finite and positive.
    pub fn from_values(values: Grid<f64>, geometry: Option<StereoGeometry>) -> Self {
        let valid = values.map(|&v| v.is_finite() && v > 0.0);
        let values = values.map(|&v| if v.is_finite() && v > 0.0 { v } else { 0.0 });
        Self {
            values,
            valid,
            geometry,
        }
    }

    pub fn new(values: Grid<f64>, valid: Mask, geometry: Option<StereoGeometry>) -> Result<Self> {
        if !values.same_dims(&valid) {
            return Err(Error::Contract("depth values and mask sizes differ".into()));
        }
        let ok = values
            .as_slice()
            .iter()
            .zip(valid.as_slice())
            .all(|(&v, &m)| !m || (v.is_finite() && v > 0.0));
        if !ok {
            return Err(Error::Contract("valid depth must be finite and positive".into()));
        }
        let values = Grid::from_vec(
            values.width(),
            values.height(),
            values
                .as_slice()
                .iter()
                .zip(valid.as_slice())
                .map(|(&v, &m)| if m { v } else { 0.0 })
                .collect(),
        )?;
        Ok(Self {
            values,
            valid,
            geometry,
        })
    }

    pub fn width(&self) -> usize {
        self.values.width()
    }

    pub fn height(&self) -> usize {
        self.values.height()
    }
}

impl DisparityMap {
    /// Valid where the value is finite and non-negative.
    pub fn from_values(values: Grid<f64>, geometry: Option<StereoGeometry>) -> Self {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        let valid = values.map(|&v| ok(v));
        let values = values.map(|&v| if ok(v) { v } else { 0.0 });
        Self {
            values,
            valid,
            geometry,
        }
    }

    pub fn new(values: Grid<f64>, valid: Mask, geometry: Option<StereoGeometry>) -> Result<Self> {
        if !values.same_dims(&valid) {
            return Err(Error::Contract("disparity values and mask sizes differ".into()));
        }
        let ok = values
            .as_slice()
            .iter()
            .zip(valid.as_slice())
            .all(|(&v, &m)| !m || (v.is_finite() && v >= 0.0));
        if !ok {
            return Err(Error::Contract(
                "valid disparity must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            values,
            valid,
            geometry,
        })
    }

    pub fn width(&self) -> usize {
        self.values.width()
    }

    pub fn height(&self) -> usize {
        self.values.height()
    }
}

fn checked_geometry(geometry: Option<StereoGeometry>, rows: usize) -> Result<StereoGeometry> {
    let g = geometry.ok_or_else(|| {
        Error::Contract("stereo geometry (H, B) is required for conversion".into())
    })?;
    if g.height != rows {
        return Err(Error::Contract(format!(
            "geometry height {} does not match the {}-row grid",
            g.height, rows
        )));
    }
    StereoGeometry::new(g.height, g.baseline_m)
}

/// Applies `f(latitude, value)` to every valid pixel, rows in parallel.
fn convert_rows<F>(values: &Grid<f64>, valid: &Mask, f: F) -> (Grid<f64>, Mask)
where
    F: Fn(f64, f64) -> Option<f64> + Sync,
{
    let (w, h) = values.dims();
    let out: Vec<Option<f64>> = (0..h)
        .into_par_iter()
        .flat_map_iter(|y| {
            let lat = row_latitude(y, h);
            let vals = values.row(y);
            let mask = valid.row(y);
            let f = &f;
            vals.iter()
                .zip(mask)
                .map(move |(&v, &m)| if m { f(lat, v) } else { None })
        })
        .collect();
    let mask = Grid::from_vec(w, h, out.iter().map(Option::is_some).collect()).expect("dims");
    let vals = Grid::from_vec(w, h, out.into_iter().map(|v| v.unwrap_or(0.0)).collect())
        .expect("dims");
    (vals, mask)
}

/// Converts a disparity map into a range map of the reference camera.
pub fn disparity_to_depth(disparity: &DisparityMap) -> Result<DepthMap> {
    let g = checked_geometry(disparity.geometry, disparity.height())?;
    let (values, valid) = convert_rows(&disparity.values, &disparity.valid, |lat, d| {
        disparity_to_range(lat, d, g.height, g.baseline_m)
    });
    Ok(DepthMap {
        values,
        valid,
        geometry: Some(g),
    })
}

/// Converts a range map of the reference camera into disparities.
pub fn depth_to_disparity(depth: &DepthMap) -> Result<DisparityMap> {
    let g = checked_geometry(depth.geometry, depth.height())?;
    let (values, valid) = convert_rows(&depth.values, &depth.valid, |lat, r| {
        range_to_disparity(lat, r, g.height, g.baseline_m)
    });
    Ok(DisparityMap {
        values,
        valid,
        geometry: Some(g),
    })
}

/// Transfers the reference (upper) range map into the second (lower) camera.
///
/// Each valid pixel moves along its column to the row of its latitude as seen
/// from the second camera and carries its range from that camera. Collisions keep
/// the nearest range, ties go to the lower source row.
pub fn depth_between_frames(depth_upper: &DepthMap) -> Result<DepthMap> {
    let g = checked_geometry(depth_upper.geometry, depth_upper.height())?;
    let (w, h) = depth_upper.values.dims();
    let columns: Vec<Vec<Option<(f64, usize)>>> = (0..w)
        .into_par_iter()
        .map(|x| {
            let mut col: Vec<Option<(f64, usize)>> = vec![None; h];
            for y in 0..h {
                if !*depth_upper.valid.get(x, y) {
                    continue;
                }
                let lat = row_latitude(y, h);
                let Some((lat2, r2)) =
                    transfer_to_second(lat, *depth_upper.values.get(x, y), g.baseline_m)
                else {
                    continue;
                };
                let row = (lat2 / PI * h as f64 - 0.5).round();
                if row < 0.0 || row >= h as f64 {
                    continue;
                }
                let slot = &mut col[row as usize];
                let cand = (r2, y);
                if slot.is_none_or(|cur| cand.0 < cur.0 || (cand.0 == cur.0 && cand.1 < cur.1)) {
                    *slot = Some(cand);
                }
            }
            col
        })
        .collect();

    let mut values = Grid::filled(w, h, 0.0);
    let mut valid = Grid::filled(w, h, false);
    for (x, col) in columns.iter().enumerate() {
        for (y, c) in col.iter().enumerate() {
            if let Some((r, _)) = c {
                values.set(x, y, *r);
                valid.set(x, y, true);
            }
        }
    }
    Ok(DepthMap {
        values,
        valid,
        geometry: Some(g),
    })
}
