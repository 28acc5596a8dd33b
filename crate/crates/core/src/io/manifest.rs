//! Scene manifests, scene mask files and the sample index, all JSON.
//!
//! Layout: `scenes/<id>/scene.json`, `scenes/<id>/scans/*.ply`,
//! `scenes/<id>/masks/*.json`, `samples/<scene>/<sample>/...`.
//! Paths inside a manifest are relative to the manifest's directory.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use nalgebra::{Isometry3, Translation3, UnitQuaternion};
use serde::{Deserialize, Serialize};

use super::{read_file, write_atomic};
use crate::error::{Error, Result};
use crate::render::WorldRegion;
use crate::rig::{RigDescriptor, VirtualIntrinsicsPolicy};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaptureHeight {
    #[serde(rename = "0.5m")]
    Low,
    #[serde(rename = "1.65m")]
    Eye,
    #[serde(rename = "2.5m")]
    Ceiling,
}

impl CaptureHeight {
    pub fn meters(self) -> f64 {
        match self {
            Self::Low => 0.5,
            Self::Eye => 1.65,
            Self::Ceiling => 2.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lighting {
    Natural,
    Office,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub id: u16,
    pub path: PathBuf,
    /// Scanner center in world coordinates.
    pub origin: [f64; 3],
}

/// World pose of a rig's reference camera. `rotation` is a unit quaternion
/// `[w, x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub translation: [f64; 3],
    #[serde(default = "identity_quaternion")]
    pub rotation: [f64; 4],
}

fn identity_quaternion() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

impl Pose {
    pub fn at(translation: [f64; 3]) -> Self {
        Self {
            translation,
            rotation: identity_quaternion(),
        }
    }

    pub fn isometry(&self) -> Result<Isometry3<f64>> {
        let [w, x, y, z] = self.rotation;
        let q = nalgebra::Quaternion::new(w, x, y, z);
        if !(q.norm() - 1.0).abs().lt(&1e-6) {
            return Err(Error::Validation("pose rotation is not a unit quaternion".into()));
        }
        let [tx, ty, tz] = self.translation;
        Ok(Isometry3::from_parts(
            Translation3::new(tx, ty, tz),
            UnitQuaternion::new_normalize(q),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneManifest {
    pub schema_version: u32,
    pub scene_id: String,
    pub scans: Vec<ScanEntry>,
    pub central_scan: u16,
    pub capture_height: CaptureHeight,
    pub lighting: Lighting,
    /// World-space mask regions file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masks: Option<PathBuf>,
    pub camera: VirtualIntrinsicsPolicy,
    /// Reference camera pose; defaults to the central scan origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rig_pose: Option<Pose>,
}

impl SceneManifest {
    /// Checks structure only; see [`SceneManifest::validate_files`].
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Validation(format!(
                "unknown schema version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.scene_id.is_empty() {
            return Err(Error::Validation("scene_id is empty".into()));
        }
        if self.scans.is_empty() {
            return Err(Error::Validation("scan bundle is empty".into()));
        }
        let mut ids = BTreeSet::new();
        for s in &self.scans {
            if !ids.insert(s.id) {
                return Err(Error::Validation(format!("duplicate scan id {}", s.id)));
            }
        }
        if !ids.contains(&self.central_scan) {
            return Err(Error::Validation(format!(
                "central scan {} is not in the bundle",
                self.central_scan
            )));
        }
        self.camera.validate()?;
        self.rig_pose().map(|_| ())
    }

    /// Checks that every referenced file exists below `base`.
    pub fn validate_files(&self, base: &Path) -> Result<()> {
        let paths = self.scans.iter().map(|s| &s.path).chain(self.masks.iter());
        for p in paths {
            let full = base.join(p);
            if !full.is_file() {
                return Err(Error::Validation(format!(
                    "referenced file {} does not exist",
                    full.display()
                )));
            }
        }
        Ok(())
    }

    pub fn central(&self) -> &ScanEntry {
        self.scans
            .iter()
            .find(|s| s.id == self.central_scan)
            .expect("validated manifest has its central scan")
    }

    /// Central scan first, then the others in listed order.
    pub fn fill_order(&self) -> Vec<u16> {
        std::iter::once(self.central_scan)
            .chain(self.scans.iter().map(|s| s.id).filter(|&id| id != self.central_scan))
            .collect()
    }

    pub fn rig_pose(&self) -> Result<Isometry3<f64>> {
        match &self.rig_pose {
            Some(p) => p.isometry(),
            None => {
                let origin = self
                    .scans
                    .iter()
                    .find(|s| s.id == self.central_scan)
                    .map(|s| s.origin)
                    .unwrap_or_default();
                Pose::at(origin).isometry()
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Reads, validates and checks referenced files relative to the manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text = String::from_utf8(read_file(path)?)
            .map_err(|_| Error::Validation(format!("{} is not UTF-8", path.display())))?;
        let m = Self::from_json(&text)?;
        m.validate_files(path.parent().unwrap_or(Path::new(".")))?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.validate()?;
        write_atomic(path, self.to_json()?.as_bytes())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SceneMasks {
    pub regions: Vec<WorldRegion>,
}

impl SceneMasks {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&read_file(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, serde_json::to_string_pretty(self)?.as_bytes())
    }
}

/// One generated stereo sample; artifact paths are relative to the index file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub scene_id: String,
    pub rig: RigDescriptor,
    pub width: usize,
    pub height: usize,
    pub rgb_ref: PathBuf,
    pub rgb_sec: PathBuf,
    pub depth_ref: PathBuf,
    pub disparity_ref: PathBuf,
    /// Valid depth pixels clamped to the PNG maximum.
    #[serde(default)]
    pub depth_clamped: usize,
}

impl SampleRecord {
    pub fn artifacts(&self) -> [&PathBuf; 4] {
        [&self.rgb_ref, &self.rgb_sec, &self.depth_ref, &self.disparity_ref]
    }

    /// Checks that all four artifacts exist and the depth and disparity files
    /// have the recorded dimensions.
    pub fn validate(&self, base: &Path) -> Result<()> {
        for p in self.artifacts() {
            if !base.join(p).is_file() {
                return Err(Error::Validation(format!(
                    "sample {} lacks {}",
                    self.rig.id,
                    p.display()
                )));
            }
        }
        let depth = super::read_depth_png(&base.join(&self.depth_ref))?;
        let disp = super::read_pfm(&base.join(&self.disparity_ref))?;
        for (what, dims) in [("depth", (depth.width(), depth.height())), ("disparity", (disp.width(), disp.height()))] {
            if dims != (self.width, self.height) {
                return Err(Error::Validation(format!(
                    "sample {}: {what} is {}x{}, record says {}x{}",
                    self.rig.id, dims.0, dims.1, self.width, self.height
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleIndex {
    pub schema_version: u32,
    pub samples: Vec<SampleRecord>,
}

impl SampleIndex {
    pub fn new(samples: Vec<SampleRecord>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            samples,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let idx: Self = serde_json::from_str(text)?;
        if idx.schema_version != SCHEMA_VERSION {
            return Err(Error::Validation(format!(
                "unknown schema version {}",
                idx.schema_version
            )));
        }
        Ok(idx)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = String::from_utf8(read_file(path)?)
            .map_err(|_| Error::Validation(format!("{} is not UTF-8", path.display())))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, serde_json::to_string_pretty(self)?.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::DoubleSphereIntrinsics;

    fn manifest() -> SceneManifest {
        SceneManifest {
            schema_version: 1,
            scene_id: "office-01".into(),
            scans: vec![
                ScanEntry {
                    id: 0,
                    path: "scans/a.ply".into(),
                    origin: [0.0, -1.65, 0.0],
                },
                ScanEntry {
                    id: 1,
                    path: "scans/b.ply".into(),
                    origin: [1.0, -1.65, 0.0],
                },
            ],
            central_scan: 1,
            capture_height: CaptureHeight::Eye,
            lighting: Lighting::Office,
            masks: None,
            camera: VirtualIntrinsicsPolicy::with_defaults(
                DoubleSphereIntrinsics::new(350.0, 350.0, 639.5, 479.5, -0.2, 0.6, 1280, 960)
                    .unwrap(),
            ),
            rig_pose: None,
        }
    }

    #[test]
    fn json_roundtrip() {
        let m = manifest();
        let text = m.to_json().unwrap();
        assert!(text.contains("\"1.65m\""));
        assert_eq!(SceneManifest::from_json(&text).unwrap(), m);
    }

    #[test]
    fn missing_central_scan_fails() {
        let mut m = manifest();
        m.central_scan = 5;
        assert!(matches!(m.validate(), Err(Error::Validation(_))));
    }

    #[test]
    fn unknown_schema_fails() {
        let mut m = manifest();
        m.schema_version = 2;
        assert!(matches!(
            SceneManifest::from_json(&serde_json::to_string(&m).unwrap()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn fill_order_starts_with_central() {
        assert_eq!(manifest().fill_order(), vec![1, 0]);
    }

    #[test]
    fn rig_pose_defaults_to_central_origin() {
        let p = manifest().rig_pose().unwrap();
        assert_eq!(p.translation.vector.x, 1.0);
        assert_eq!(p.translation.vector.y, -1.65);
    }

    #[test]
    fn missing_files_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        assert!(manifest().validate_files(dir.path()).is_err());
    }

    #[test]
    fn capture_height_values() {
        assert_eq!(CaptureHeight::Low.meters(), 0.5);
        assert_eq!(
            serde_json::from_str::<CaptureHeight>("\"2.5m\"").unwrap(),
            CaptureHeight::Ceiling
        );
    }
}
