//! Single-channel PFM ("Pf") disparity files. Rows are stored bottom-up; a
//! negative scale means little-endian samples. Invalid pixels are written as
//! `-1.0`; on reading, negative or non-finite samples are invalid.

use std::path::Path;

use super::{read_file, write_atomic};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::stereo::DisparityMap;

pub const INVALID_SAMPLE: f32 = -1.0;

pub fn encode_pfm(image: &Grid<f32>) -> Vec<u8> {
    let (w, h) = image.dims();
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * 4);
    for y in (0..h).rev() {
        for v in image.row(y) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn token(&mut self, what: &str) -> Result<(usize, &str)> {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::parse(start as u64, format!("missing {what}")));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| Error::parse(start as u64, format!("{what} is not ASCII")))?;
        Ok((start, text))
    }

    fn number<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let (at, text) = self.token(what)?;
        text.parse()
            .map_err(|_| Error::parse(at as u64, format!("bad {what} {text:?}")))
    }
}

pub fn decode_pfm(bytes: &[u8]) -> Result<Grid<f32>> {
    let mut hdr = Header { bytes, pos: 0 };
    let (_, magic) = hdr.token("magic")?;
    match magic {
        "Pf" => {}
        "PF" => return Err(Error::Unsupported("three-channel PFM".into())),
        other => return Err(Error::parse(0, format!("bad magic {other:?}"))),
    }
    let w: usize = hdr.number("width")?;
    let h: usize = hdr.number("height")?;
    let scale: f64 = hdr.number("scale")?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::parse(hdr.pos as u64, "scale must be nonzero"));
    }
    // exactly one whitespace byte separates the header from the samples
    if hdr.pos >= bytes.len() || !bytes[hdr.pos].is_ascii_whitespace() {
        return Err(Error::parse(hdr.pos as u64, "missing header terminator"));
    }
    let start = hdr.pos + 1;
    let need = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::parse(0, "dimensions overflow"))?;
    let data = &bytes[start..];
    if data.len() < need {
        return Err(Error::parse(
            (start + data.len()) as u64,
            format!("truncated: expected {need} sample bytes, found {}", data.len()),
        ));
    }
    let little = scale < 0.0;
    let mut out = Grid::filled(w, h, 0.0f32);
    for (k, chunk) in data[..need].chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        let (x, row) = (k % w, k / w);
        out.set(x, h - 1 - row, v);
    }
    Ok(out)
}

/// Samples with the invalid sentinel substituted.
pub fn disparity_samples(disp: &DisparityMap) -> Grid<f32> {
    Grid::from_fn_par(disp.width(), disp.height(), |x, y| {
        if *disp.valid.get(x, y) {
            *disp.values.get(x, y) as f32
        } else {
            INVALID_SAMPLE
        }
    })
}

pub fn samples_to_disparity(samples: &Grid<f32>) -> Result<DisparityMap> {
    let valid = samples.map(|&v| v.is_finite() && v >= 0.0);
    let values = samples.map(|&v| if v.is_finite() && v >= 0.0 { v as f64 } else { 0.0 });
    DisparityMap::new(values, valid, None)
}

pub fn write_pfm(path: &Path, disp: &DisparityMap) -> Result<()> {
    write_atomic(path, &encode_pfm(&disparity_samples(disp)))
}

pub fn read_pfm(path: &Path) -> Result<DisparityMap> {
    samples_to_disparity(&decode_pfm(&read_file(path)?)?)
}
