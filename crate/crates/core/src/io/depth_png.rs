//! 16-bit grayscale PNG depth: one unit is one millimeter, 0 marks an invalid
//! pixel. Ranges beyond 65.535 m are clamped and reported.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma};

use super::{read_file, write_atomic};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::stereo::DepthMap;

pub const MAX_DEPTH_MM: u16 = u16::MAX;

/// Encoded image plus the number of valid pixels clamped to [`MAX_DEPTH_MM`].
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDepth {
    pub png: Vec<u8>,
    pub clamped: usize,
}

/// Millimeter code of a valid range. Ranges under 0.5 mm still encode as 1 so
/// they stay valid.
pub fn depth_to_mm(range_m: f64) -> (u16, bool) {
    let mm = (range_m * 1000.0).round();
    if mm > MAX_DEPTH_MM as f64 {
        (MAX_DEPTH_MM, true)
    } else {
        ((mm as u16).max(1), false)
    }
}

pub fn encode_depth_png(depth: &DepthMap) -> Result<EncodedDepth> {
    let (w, h) = (depth.width(), depth.height());
    let mut clamped = 0;
    let codes: Vec<u16> = depth
        .values
        .as_slice()
        .iter()
        .zip(depth.valid.as_slice())
        .map(|(&v, &ok)| {
            if !ok {
                return 0;
            }
            let (mm, c) = depth_to_mm(v);
            clamped += c as usize;
            mm
        })
        .collect();
    let img: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(w as u32, h as u32, codes)
            .ok_or_else(|| Error::Contract("depth buffer size mismatch".into()))?;
    let mut png = Vec::new();
    img.write_to(&mut Cursor::new(&mut png), ImageFormat::Png)?;
    Ok(EncodedDepth { png, clamped })
}

pub fn decode_depth_png(bytes: &[u8]) -> Result<DepthMap> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?;
    let DynamicImage::ImageLuma16(img) = img else {
        return Err(Error::Unsupported(format!(
            "depth PNG must be 16-bit grayscale, found {:?}",
            img.color()
        )));
    };
    let (w, h) = (img.width() as usize, img.height() as usize);
    let codes = img.into_raw();
    let valid = Grid::from_vec(w, h, codes.iter().map(|&c| c > 0).collect())?;
    let values = Grid::from_vec(w, h, codes.iter().map(|&c| c as f64 / 1000.0).collect())?;
    DepthMap::new(values, valid, None)
}

/// Returns the number of clamped pixels.
pub fn write_depth_png(path: &Path, depth: &DepthMap) -> Result<usize> {
    let enc = encode_depth_png(depth)?;
    write_atomic(path, &enc.png)?;
    Ok(enc.clamped)
}

pub fn read_depth_png(path: &Path) -> Result<DepthMap> {
    decode_depth_png(&read_file(path)?)
}
