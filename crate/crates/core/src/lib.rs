//! Depth and disparity tooling for wide field-of-view fisheye stereo.
//!
//! The crate covers the Double Sphere camera model, conversions between
//! spherical projections, virtual stereo rigs placed inside scanned scenes,
//! point cloud rendering, spherical disparity/depth conversion, evaluation
//! metrics and dataset file formats.

pub mod camera;
pub mod error;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod projection;
pub mod render;
pub mod rig;
pub mod stereo;
pub mod synthetic;

pub use camera::{CameraModel, DoubleSphereIntrinsics, PinholeIntrinsics, Ray};
pub use error::{Error, ErrorClass, Result};
pub use grid::{Grid, GrayImage, Mask, RgbImage};
pub use projection::{ProjectionKind, ProjectionSpec};
pub use render::{PointCloud, RenderSettings};
pub use rig::{StereoRig, VirtualIntrinsicsPolicy};
pub use stereo::{DepthMap, DisparityMap, StereoGeometry};
