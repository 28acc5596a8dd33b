//! Dataset file formats.
//!
//! Path-based writers go through [`write_atomic`]: data lands in a temporary
//! file next to the target and is renamed into place, so a failed write never
//! leaves a partial file behind.

pub mod depth_png;
pub mod image_png;
pub mod manifest;
pub mod pfm;
pub mod ply;

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub use depth_png::{read_depth_png, write_depth_png};
pub use image_png::{read_mask_png, read_rgb_png, write_mask_png, write_rgb_png};
pub use manifest::{SampleIndex, SampleRecord, SceneManifest};
pub use pfm::{read_pfm, write_pfm};
pub use ply::{read_ply, write_ply};

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}
