//! 8-bit RGB and mask PNGs.

use std::io::Cursor;
use std::path::Path;

use image::{ImageBuffer, ImageFormat, Luma, Rgb};

use super::{read_file, write_atomic};
use crate::error::{Error, Result};
use crate::grid::{Grid, Mask, RgbImage};

pub fn encode_rgb_png(img: &RgbImage) -> Result<Vec<u8>> {
    let raw: Vec<u8> = img.as_slice().iter().flatten().copied().collect();
    let buf: ImageBuffer<Rgb<u8>, Vec<u8>> =
        ImageBuffer::from_raw(img.width() as u32, img.height() as u32, raw)
            .ok_or_else(|| Error::Contract("rgb buffer size mismatch".into()))?;
    let mut png = Vec::new();
    buf.write_to(&mut Cursor::new(&mut png), ImageFormat::Png)?;
    Ok(png)
}

/// Decodes any PNG, converting it to 8-bit RGB.
pub fn decode_rgb_png(bytes: &[u8]) -> Result<RgbImage> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?.to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let px = img.pixels().map(|p| p.0).collect();
    Grid::from_vec(w, h, px)
}

/// Valid pixels are written as 255.
pub fn encode_mask_png(mask: &Mask) -> Result<Vec<u8>> {
    let raw: Vec<u8> = mask.as_slice().iter().map(|&v| if v { 255 } else { 0 }).collect();
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(mask.width() as u32, mask.height() as u32, raw)
            .ok_or_else(|| Error::Contract("mask buffer size mismatch".into()))?;
    let mut png = Vec::new();
    buf.write_to(&mut Cursor::new(&mut png), ImageFormat::Png)?;
    Ok(png)
}

/// Nonzero luma is valid.
pub fn decode_mask_png(bytes: &[u8]) -> Result<Mask> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?.to_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    Grid::from_vec(w, h, img.pixels().map(|p| p.0[0] > 0).collect())
}

pub fn read_rgb_png(path: &Path) -> Result<RgbImage> {
    decode_rgb_png(&read_file(path)?)
}

pub fn write_rgb_png(path: &Path, img: &RgbImage) -> Result<()> {
    write_atomic(path, &encode_rgb_png(img)?)
}

pub fn read_mask_png(path: &Path) -> Result<Mask> {
    decode_mask_png(&read_file(path)?)
}

pub fn write_mask_png(path: &Path, mask: &Mask) -> Result<()> {
    write_atomic(path, &encode_mask_png(mask)?)
}
