//! Analytic scenes of textured rectangles, used to simulate scans and to
//! provide exact ground truth in tests and demos.

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;

use crate::error::Result;
use crate::projection::{row_latitude, spherical_direction};
use crate::render::PointCloud;

/// Rectangle `center + s * half_u + t * half_v` with `|s|, |t| <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub center: Point3<f64>,
    pub half_u: Vector3<f64>,
    pub half_v: Vector3<f64>,
}

const EPS: f64 = 1e-9;

impl Quad {
    pub fn new(center: [f64; 3], half_u: [f64; 3], half_v: [f64; 3]) -> Self {
        Self {
            center: center.into(),
            half_u: half_u.into(),
            half_v: half_v.into(),
        }
    }

    /// Rectangle in the plane `z = z`, spanning `[x0, x1] x [y0, y1]`.
    pub fn facing_z(z: f64, x: [f64; 2], y: [f64; 2]) -> Self {
        Self::new(
            [(x[0] + x[1]) / 2.0, (y[0] + y[1]) / 2.0, z],
            [(x[1] - x[0]) / 2.0, 0.0, 0.0],
            [0.0, (y[1] - y[0]) / 2.0, 0.0],
        )
    }

    fn normal(&self) -> Vector3<f64> {
        self.half_u.cross(&self.half_v)
    }

    /// Local coordinates `(s, t)` of a point in the quad's plane.
    pub fn local(&self, p: &Point3<f64>) -> (f64, f64) {
        let r = p - self.center;
        (
            r.dot(&self.half_u) / self.half_u.norm_squared(),
            r.dot(&self.half_v) / self.half_v.norm_squared(),
        )
    }

    /// Ray parameter of the hit for a ray `origin + t * dir`, `t > 0`.
    pub fn intersect(&self, origin: &Point3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        let n = self.normal();
        let denom = dir.dot(&n);
        if denom.abs() < EPS {
            return None;
        }
        let t = (self.center - origin).dot(&n) / denom;
        if t <= EPS {
            return None;
        }
        let (s, q) = self.local(&(origin + dir * t));
        (s.abs() <= 1.0 && q.abs() <= 1.0).then_some(t)
    }

    /// Whether `p` lies on the rectangle within `tol` meters.
    pub fn contains(&self, p: &Point3<f64>, tol: f64) -> bool {
        let n = self.normal().normalize();
        let (s, t) = self.local(p);
        (p - self.center).dot(&n).abs() <= tol && s.abs() <= 1.0 + EPS && t.abs() <= 1.0 + EPS
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub quads: Vec<Quad>,
    /// Checker square size in meters.
    pub checker_m: f64,
}

/// First intersection of a ray with a scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub point: Point3<f64>,
    pub surface: usize,
}

impl Scene {
    pub fn new(quads: Vec<Quad>) -> Self {
        Self {
            quads,
            checker_m: 0.05,
        }
    }

    pub fn raycast(&self, origin: &Point3<f64>, dir: &Vector3<f64>) -> Option<Hit> {
        self.quads
            .iter()
            .enumerate()
            .filter_map(|(i, q)| q.intersect(origin, dir).map(|t| (t, i)))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(t, surface)| Hit {
                t,
                point: origin + dir * t,
                surface,
            })
    }

    /// Whether nothing blocks the segment from `from` to `p`.
    pub fn visible(&self, from: &Point3<f64>, p: &Point3<f64>, tol: f64) -> bool {
        let d = p - from;
        let len = d.norm();
        match self.raycast(from, &(d / len)) {
            Some(hit) => hit.t >= len - tol,
            None => true,
        }
    }

    /// Index of the surface `p` lies on.
    pub fn surface_of(&self, p: &Point3<f64>, tol: f64) -> Option<usize> {
        self.quads.iter().position(|q| q.contains(p, tol))
    }

    /// Checkerboard modulated by a smooth per-surface gradient.
    pub fn color_at(&self, surface: usize, p: &Point3<f64>) -> [u8; 3] {
        let q = &self.quads[surface];
        let (s, t) = q.local(p);
        let (su, sv) = (s * q.half_u.norm(), t * q.half_v.norm());
        let cell = (su / self.checker_m).floor() as i64 + (sv / self.checker_m).floor() as i64;
        let base = if cell.rem_euclid(2) == 0 { 60.0 } else { 190.0 };
        let shade = |phase: f64| (base + 40.0 * (su * 3.1 + sv * 1.7 + phase).sin()).clamp(0.0, 255.0) as u8;
        let tint = (surface as f64) * 1.3;
        [shade(tint), shade(tint + 2.0), shade(tint + 4.0)]
    }

    /// Simulated terrestrial scan: one ray per equirectangular pixel center of
    /// a `2 * height x height` grid around `origin`, keeping rays that hit.
    pub fn scan(&self, origin: [f64; 3], height: usize, scan_id: u16) -> Result<PointCloud> {
        let origin = Point3::from(origin);
        let width = 2 * height;
        let rows: Vec<Vec<([f32; 3], [u8; 3])>> = (0..height)
            .into_par_iter()
            .map(|v| {
                let lat = row_latitude(v, height);
                (0..width)
                    .filter_map(|u| {
                        let lon = (u as f64 + 0.5) / width as f64 * std::f64::consts::TAU
                            - std::f64::consts::PI;
                        let hit = self.raycast(&origin, &spherical_direction(lat, lon))?;
                        Some((to_f32(&hit.point), self.color_at(hit.surface, &hit.point)))
                    })
                    .collect()
            })
            .collect();
        let (positions, colors): (Vec<_>, Vec<_>) = rows.into_iter().flatten().unzip();
        PointCloud::from_scan(positions, colors, scan_id)
    }

    /// Regular samples over every surface with the given spacing.
    pub fn sample_surfaces(&self, spacing_m: f64, scan_id: u16) -> Result<PointCloud> {
        let mut positions = Vec::new();
        let mut colors = Vec::new();
        for (i, q) in self.quads.iter().enumerate() {
            let nu = (2.0 * q.half_u.norm() / spacing_m).ceil() as usize + 1;
            let nv = (2.0 * q.half_v.norm() / spacing_m).ceil() as usize + 1;
            for a in 0..nu {
                for b in 0..nv {
                    let s = -1.0 + 2.0 * a as f64 / (nu - 1) as f64;
                    let t = -1.0 + 2.0 * b as f64 / (nv - 1) as f64;
                    let p = q.center + q.half_u * s + q.half_v * t;
                    positions.push(to_f32(&p));
                    colors.push(self.color_at(i, &p));
                }
            }
        }
        PointCloud::from_scan(positions, colors, scan_id)
    }
}

fn to_f32(p: &Point3<f64>) -> [f32; 3] {
    [p.x as f32, p.y as f32, p.z as f32]
}

/// Scanner positions for [`occluder_scene`], central scan first.
pub const OCCLUDER_SCANS: [[f64; 3]; 3] = [[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [-2.0, 0.0, 0.0]];

/// A wall at `z = 4` with a free-standing panel at `z = 2` in front of it.
pub fn occluder_scene() -> Scene {
    Scene::new(vec![
        Quad::facing_z(4.0, [-4.0, 4.0], [-2.5, 2.5]),
        Quad::facing_z(2.0, [-0.4, 0.4], [-0.4, 0.4]),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quad_hit_and_miss() {
        let q = Quad::facing_z(2.0, [-1.0, 1.0], [-1.0, 1.0]);
        let o = Point3::origin();
        assert_eq!(q.intersect(&o, &Vector3::z()), Some(2.0));
        assert_eq!(q.intersect(&o, &-Vector3::z()), None);
        assert_eq!(q.intersect(&o, &Vector3::new(1.0, 0.0, 0.4)), None);
        assert!(q.contains(&Point3::new(0.5, -0.5, 2.0), 1e-9));
    }

    #[test]
    fn occluder_blocks_wall() {
        let s = occluder_scene();
        let hit = s.raycast(&Point3::origin(), &Vector3::z()).unwrap();
        assert_eq!((hit.t, hit.surface), (2.0, 1));
        let behind = Point3::new(0.0, 0.0, 4.0);
        assert!(!s.visible(&Point3::origin(), &behind, 1e-6));
        assert!(s.visible(&Point3::new(2.0, 0.0, 0.0), &behind, 1e-6));
        assert_eq!(s.surface_of(&behind, 1e-6), Some(0));
    }

    #[test]
    fn scan_points_lie_on_surfaces() {
        let s = occluder_scene();
        let cloud = s.scan([0.0, 0.0, 0.0], 64, 3).unwrap();
        assert!(cloud.len() > 100);
        assert!(cloud.scan_ids.iter().all(|&i| i == 3));
        for i in 0..cloud.len() {
            assert!(s.surface_of(&cloud.position(i), 1e-5).is_some());
        }
    }

    #[test]
    fn surface_samples_cover_corners() {
        let s = Scene::new(vec![Quad::facing_z(1.0, [0.0, 1.0], [0.0, 0.5])]);
        let c = s.sample_surfaces(0.25, 0).unwrap();
        assert_eq!(c.len(), 5 * 3);
        assert!(c.positions.contains(&[1.0, 0.5, 1.0]));
    }
}
