//! Binary little-endian PLY point clouds.
//!
//! The vertex element must carry `x y z` (float or double) and
//! `red green blue` (uchar). `scan_id` (any integer type) and `reflective`
//! (nonzero = true) are optional; other scalar properties are skipped.
//! Elements before `vertex` may only hold scalar properties. Vertex records
//! are decoded in fixed-size chunks so large scans stream through a bounded
//! buffer.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use super::write_atomic;
use crate::error::{Error, Result};
use crate::render::PointCloud;

/// Vertex records decoded per read.
pub const CHUNK_POINTS: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    pub fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn read(self, b: &[u8]) -> f64 {
        match self {
            Self::I8 => b[0] as i8 as f64,
            Self::U8 => b[0] as f64,
            Self::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Self::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }

    fn is_integer(self) -> bool {
        !matches!(self, Self::F32 | Self::F64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Property {
    pub name: String,
    pub ty: ScalarType,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub name: String,
    pub count: u64,
    pub properties: Vec<Property>,
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlyHeader {
    pub elements: Vec<Element>,
    /// Byte offset of the first data byte.
    pub data_offset: u64,
}

impl PlyHeader {
    fn vertex(&self) -> Result<(usize, &Element)> {
        self.elements
            .iter()
            .enumerate()
            .find(|(_, e)| e.name == "vertex")
            .ok_or_else(|| Error::parse(self.data_offset, "no vertex element"))
    }
}

pub fn read_header<R: BufRead>(reader: &mut R) -> Result<PlyHeader> {
    let mut offset = 0u64;
    let mut line = Vec::new();
    let mut elements: Vec<Element> = Vec::new();
    let mut first = true;
    loop {
        let at = offset;
        line.clear();
        let n = reader.read_until(b'\n', &mut line)?;
        if n == 0 {
            return Err(Error::parse(at, "header ended before end_header"));
        }
        offset += n as u64;
        let text = std::str::from_utf8(&line)
            .map_err(|_| Error::parse(at, "header line is not ASCII"))?
            .trim_end_matches(['\n', '\r']);
        let words: Vec<&str> = text.split_whitespace().collect();
        if first {
            if text != "ply" {
                return Err(Error::parse(at, "missing ply magic"));
            }
            first = false;
            continue;
        }
        match words.as_slice() {
            [] | ["comment", ..] | ["obj_info", ..] => {}
            ["format", "binary_little_endian", "1.0"] => {}
            ["format", fmt @ ("ascii" | "binary_big_endian"), ..] => {
                return Err(Error::Unsupported(format!(
                    "PLY format {fmt}; only binary_little_endian is read"
                )));
            }
            ["format", ..] => return Err(Error::parse(at, format!("bad format line {text:?}"))),
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| Error::parse(at, format!("bad element count {count:?}")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                    stride: 0,
                });
            }
            ["property", "list", ..] => {
                let el = elements
                    .last()
                    .ok_or_else(|| Error::parse(at, "property before any element"))?;
                if el.name == "vertex" || !elements.iter().any(|e| e.name == "vertex") {
                    return Err(Error::Unsupported(format!(
                        "list property in element {:?} at byte {at}",
                        el.name
                    )));
                }
                // lists after the vertex element are never read
                elements.last_mut().unwrap().stride = usize::MAX;
            }
            ["property", ty, name] => {
                let ty = ScalarType::parse(ty)
                    .ok_or_else(|| Error::parse(at, format!("unknown property type {ty:?}")))?;
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(at, "property before any element"))?;
                if el.stride != usize::MAX {
                    el.properties.push(Property {
                        name: name.to_string(),
                        ty,
                        offset: el.stride,
                    });
                    el.stride += ty.size();
                }
            }
            ["end_header"] => break,
            _ => return Err(Error::parse(at, format!("unrecognized header line {text:?}"))),
        }
    }
    Ok(PlyHeader {
        elements,
        data_offset: offset,
    })
}

struct VertexLayout {
    xyz: [Property; 3],
    rgb: [Property; 3],
    scan_id: Option<Property>,
    reflective: Option<Property>,
    stride: usize,
}

impl VertexLayout {
    fn new(el: &Element, at: u64) -> Result<Self> {
        let find = |name: &str| el.properties.iter().find(|p| p.name == name).cloned();
        let need = |name: &str| {
            find(name).ok_or_else(|| Error::parse(at, format!("vertex lacks property {name:?}")))
        };
        let xyz = [need("x")?, need("y")?, need("z")?];
        let rgb = [need("red")?, need("green")?, need("blue")?];
        if xyz.iter().any(|p| p.ty.is_integer()) {
            return Err(Error::parse(at, "vertex coordinates must be float or double"));
        }
        if rgb.iter().any(|p| p.ty != ScalarType::U8) {
            return Err(Error::parse(at, "vertex colors must be uchar"));
        }
        let scan_id = find("scan_id");
        if scan_id.as_ref().is_some_and(|p| !p.ty.is_integer()) {
            return Err(Error::parse(at, "scan_id must be an integer property"));
        }
        Ok(Self {
            xyz,
            rgb,
            scan_id,
            reflective: find("reflective"),
            stride: el.stride,
        })
    }
}

/// Reads a cloud; points without a `scan_id` property get `default_scan_id`.
pub fn read_ply_from<R: Read>(reader: R, default_scan_id: u16) -> Result<PointCloud> {
    let mut reader = BufReader::new(reader);
    let header = read_header(&mut reader)?;
    let (vi, vertex) = header.vertex()?;
    let layout = VertexLayout::new(vertex, header.data_offset)?;
    let mut offset = header.data_offset;

    for el in &header.elements[..vi] {
        let bytes = el
            .count
            .checked_mul(el.stride as u64)
            .ok_or_else(|| Error::parse(offset, "element size overflows"))?;
        let skipped = std::io::copy(&mut (&mut reader).take(bytes), &mut std::io::sink())?;
        if skipped < bytes {
            return Err(Error::parse(offset + skipped, format!("truncated {} data", el.name)));
        }
        offset += bytes;
    }

    let n = usize::try_from(vertex.count)
        .map_err(|_| Error::parse(offset, "vertex count too large"))?;
    let mut positions = Vec::with_capacity(n.min(CHUNK_POINTS * 64));
    let mut colors = Vec::with_capacity(positions.capacity());
    let mut scan_ids = Vec::with_capacity(positions.capacity());
    let mut reflective = layout.reflective.as_ref().map(|_| Vec::new());
    let mut buf = vec![0u8; layout.stride * CHUNK_POINTS.min(n.max(1))];

    let mut done = 0usize;
    while done < n {
        let take = (n - done).min(CHUNK_POINTS);
        let chunk = &mut buf[..take * layout.stride];
        let mut filled = 0;
        while filled < chunk.len() {
            let got = reader.read(&mut chunk[filled..])?;
            if got == 0 {
                return Err(Error::parse(
                    offset + filled as u64,
                    format!("truncated vertex data: {} of {n} points present", done + filled / layout.stride),
                ));
            }
            filled += got;
        }
        for rec in chunk.chunks_exact(layout.stride) {
            let get = |p: &Property| p.ty.read(&rec[p.offset..]);
            positions.push(layout.xyz.each_ref().map(|p| get(p) as f32));
            colors.push(layout.rgb.each_ref().map(|p| rec[p.offset]));
            scan_ids.push(match &layout.scan_id {
                Some(p) => {
                    let v = get(p);
                    if !(0.0..=u16::MAX as f64).contains(&v) {
                        return Err(Error::Validation(format!("scan_id {v} out of range")));
                    }
                    v as u16
                }
                None => default_scan_id,
            });
            if let (Some(r), Some(p)) = (reflective.as_mut(), &layout.reflective) {
                r.push(get(p) != 0.0);
            }
        }
        offset += chunk.len() as u64;
        done += take;
    }
    let mut cloud = PointCloud::new(positions, colors, scan_ids)?;
    cloud.reflective = reflective;
    cloud.validate()?;
    Ok(cloud)
}

pub fn read_ply(path: &Path, default_scan_id: u16) -> Result<PointCloud> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_ply_from(file, default_scan_id).map_err(|e| match e {
        Error::Stream(source) => Error::io(path, source),
        other => other,
    })
}

pub fn encode_ply(cloud: &PointCloud) -> Vec<u8> {
    let mut out = format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\n\
         property float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\n\
         property ushort scan_id\n",
        cloud.len()
    )
    .into_bytes();
    if cloud.reflective.is_some() {
        out.extend_from_slice(b"property uchar reflective\n");
    }
    out.extend_from_slice(b"end_header\n");
    for i in 0..cloud.len() {
        for c in cloud.positions[i] {
            out.extend_from_slice(&c.to_le_bytes());
        }
        out.extend_from_slice(&cloud.colors[i]);
        out.extend_from_slice(&cloud.scan_ids[i].to_le_bytes());
        if let Some(r) = &cloud.reflective {
            out.push(r[i] as u8);
        }
    }
    out
}

pub fn write_ply(path: &Path, cloud: &PointCloud) -> Result<()> {
    cloud.validate()?;
    write_atomic(path, &encode_ply(cloud))
}
