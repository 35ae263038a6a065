//! TrackVis `.trk` reader and writer (little-endian only).
//!
//! Header layout, byte offsets:
//!
//! ```text
//!   0 id_string   [u8; 6]     "TRACK\0"
//!   6 dim         [i16; 3]
//!  12 voxel_size  [f32; 3]
//!  24 origin      [f32; 3]
//!  36 n_scalars   i16
//!  38 scalar_name [[u8; 20]; 10]
//! 238 n_properties i16
//! 240 property_name [[u8; 20]; 10]
//! 440 vox_to_ras  [f32; 16]
//! 504 reserved, voxel_order, orientation, flags (kept verbatim)
//! 988 n_count     i32         0 = unknown, read to end of stream
//! 992 version     i32
//! 996 hdr_size    i32         must be 1000
//! ```
//!
//! Each track: `n_points: i32`, then `n_points * (3 + n_scalars)` f32 and
//! finally `n_properties` f32.

use thiserror::Error;

use crate::model::{ClusterGeometry, FiberPolyline};

pub const HEADER_SIZE: usize = 1000;
pub const MAX_FIELDS: usize = 10;
pub const NAME_BYTES: usize = 20;

const OFF_DIM: usize = 6;
const OFF_VOXEL_SIZE: usize = 12;
const OFF_ORIGIN: usize = 24;
const OFF_N_SCALARS: usize = 36;
const OFF_SCALAR_NAMES: usize = 38;
const OFF_N_PROPERTIES: usize = 238;
const OFF_PROPERTY_NAMES: usize = 240;
const OFF_VOX_TO_RAS: usize = 440;
const OFF_RESERVED: usize = 504;
const OFF_VOXEL_ORDER: usize = 948;
const OFF_N_COUNT: usize = 988;
const OFF_VERSION: usize = 992;
const OFF_HDR_SIZE: usize = 996;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrkError {
    #[error("file shorter than the {HEADER_SIZE}-byte header ({0} bytes)")]
    ShortHeader(usize),
    #[error("bad magic: expected \"TRACK\", found {0:?}")]
    BadMagic(String),
    #[error("hdr_size is {0}, expected 1000")]
    BadHeaderSize(i32),
    #[error("{field} = {value} is outside 0..=10")]
    CountOverflow { field: &'static str, value: i16 },
    #[error("track {track} declares {points} points")]
    InvalidPointCount { track: usize, points: i32 },
    #[error("track {track} needs {needed} bytes but only {remaining} remain")]
    Truncated { track: usize, needed: usize, remaining: usize },
    #[error("{kind} has {count} names, at most 10 fit in a TRK header")]
    TooManyFields { kind: &'static str, count: usize },
    #[error("name '{0}' is longer than 19 bytes")]
    NameTooLong(String),
    #[error("geometry cannot be written: {0}")]
    InvalidGeometry(String),
}

/// Parsed TRK header. `raw` holds all 1000 bytes, including fields this
/// crate does not interpret.
#[derive(Debug, Clone, PartialEq)]
pub struct TrkHeader {
    pub id_string: [u8; 6],
    pub dim: [i16; 3],
    pub voxel_size: [f32; 3],
    pub origin: [f32; 3],
    pub n_scalars: i16,
    pub scalar_names: Vec<String>,
    pub n_properties: i16,
    pub property_names: Vec<String>,
    pub vox_to_ras: [f32; 16],
    pub n_count: i32,
    pub version: i32,
    pub hdr_size: i32,
    raw: Box<[u8; HEADER_SIZE]>,
}

fn i16_at(b: &[u8], off: usize) -> i16 {
    i16::from_le_bytes([b[off], b[off + 1]])
}

fn i32_at(b: &[u8], off: usize) -> i32 {
    i32::from_le_bytes(b[off..off + 4].try_into().unwrap())
}

fn f32_at(b: &[u8], off: usize) -> f32 {
    f32::from_le_bytes(b[off..off + 4].try_into().unwrap())
}

fn f32s<const N: usize>(b: &[u8], off: usize) -> [f32; N] {
    std::array::from_fn(|i| f32_at(b, off + 4 * i))
}

fn name_at(b: &[u8], off: usize) -> String {
    let field = &b[off..off + NAME_BYTES];
    let end = field.iter().position(|&c| c == 0).unwrap_or(NAME_BYTES);
    String::from_utf8_lossy(&field[..end]).into_owned()
}

fn field_count(b: &[u8], off: usize, field: &'static str) -> Result<i16, TrkError> {
    let value = i16_at(b, off);
    if !(0..=MAX_FIELDS as i16).contains(&value) {
        return Err(TrkError::CountOverflow { field, value });
    }
    Ok(value)
}

/// Reads `count` names; blank slots get a positional placeholder.
fn names_at(b: &[u8], off: usize, count: i16, fallback: &str) -> Vec<String> {
    (0..count as usize)
        .map(|i| {
            let name = name_at(b, off + i * NAME_BYTES);
            if name.is_empty() {
                format!("{fallback}_{i}")
            } else {
                name
            }
        })
        .collect()
}

impl TrkHeader {
    pub fn parse(bytes: &[u8]) -> Result<Self, TrkError> {
        if bytes.len() < HEADER_SIZE {
            return Err(TrkError::ShortHeader(bytes.len()));
        }
        let b = &bytes[..HEADER_SIZE];
        if &b[..5] != b"TRACK" {
            return Err(TrkError::BadMagic(String::from_utf8_lossy(&b[..6]).into_owned()));
        }
        let hdr_size = i32_at(b, OFF_HDR_SIZE);
        if hdr_size != HEADER_SIZE as i32 {
            return Err(TrkError::BadHeaderSize(hdr_size));
        }
        let n_scalars = field_count(b, OFF_N_SCALARS, "n_scalars")?;
        let n_properties = field_count(b, OFF_N_PROPERTIES, "n_properties")?;
        Ok(Self {
            id_string: b[..6].try_into().unwrap(),
            dim: std::array::from_fn(|i| i16_at(b, OFF_DIM + 2 * i)),
            voxel_size: f32s(b, OFF_VOXEL_SIZE),
            origin: f32s(b, OFF_ORIGIN),
            n_scalars,
            scalar_names: names_at(b, OFF_SCALAR_NAMES, n_scalars, "scalar"),
            n_properties,
            property_names: names_at(b, OFF_PROPERTY_NAMES, n_properties, "property"),
            vox_to_ras: f32s(b, OFF_VOX_TO_RAS),
            n_count: i32_at(b, OFF_N_COUNT),
            version: i32_at(b, OFF_VERSION),
            hdr_size,
            raw: Box::new(b.try_into().unwrap()),
        })
    }

    /// A fresh version-2 header describing `g`: unit voxels, identity
    /// vox_to_ras, RAS voxel order.
    pub fn for_geometry(g: &ClusterGeometry) -> Result<Self, TrkError> {
        let mut raw = Box::new([0u8; HEADER_SIZE]);
        raw[..6].copy_from_slice(b"TRACK\0");
        raw[OFF_VOXEL_ORDER..OFF_VOXEL_ORDER + 4].copy_from_slice(b"RAS\0");
        let mut header = Self {
            id_string: *b"TRACK\0",
            dim: [1; 3],
            voxel_size: [1.0; 3],
            origin: [0.0; 3],
            n_scalars: 0,
            scalar_names: Vec::new(),
            n_properties: 0,
            property_names: Vec::new(),
            vox_to_ras: [
                1.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, 1.0,
            ],
            n_count: 0,
            version: 2,
            hdr_size: HEADER_SIZE as i32,
            raw,
        };
        header.describe(g)?;
        Ok(header)
    }

    /// Points the header's field names and track count at `g`.
    fn describe(&mut self, g: &ClusterGeometry) -> Result<(), TrkError> {
        for (kind, names) in [("scalars", &g.scalar_names), ("properties", &g.property_names)] {
            if names.len() > MAX_FIELDS {
                return Err(TrkError::TooManyFields { kind, count: names.len() });
            }
            if let Some(long) = names.iter().find(|n| n.len() >= NAME_BYTES || n.contains('\0')) {
                return Err(TrkError::NameTooLong(long.clone()));
            }
        }
        self.n_scalars = g.scalar_names.len() as i16;
        self.scalar_names = g.scalar_names.clone();
        self.n_properties = g.property_names.len() as i16;
        self.property_names = g.property_names.clone();
        self.n_count = i32::try_from(g.fibers.len())
            .map_err(|_| TrkError::InvalidGeometry("too many fibers".into()))?;
        Ok(())
    }

    /// Serializes the header; bytes 504..988 come from `raw` untouched.
    pub fn to_bytes(&self) -> [u8; HEADER_SIZE] {
        let mut b = *self.raw;
        b[..6].copy_from_slice(&self.id_string);
        for (i, d) in self.dim.iter().enumerate() {
            b[OFF_DIM + 2 * i..OFF_DIM + 2 * i + 2].copy_from_slice(&d.to_le_bytes());
        }
        let put_f32s = |b: &mut [u8; HEADER_SIZE], off: usize, vals: &[f32]| {
            for (i, v) in vals.iter().enumerate() {
                b[off + 4 * i..off + 4 * i + 4].copy_from_slice(&v.to_le_bytes());
            }
        };
        put_f32s(&mut b, OFF_VOXEL_SIZE, &self.voxel_size);
        put_f32s(&mut b, OFF_ORIGIN, &self.origin);
        put_f32s(&mut b, OFF_VOX_TO_RAS, &self.vox_to_ras);
        b[OFF_N_SCALARS..OFF_N_SCALARS + 2].copy_from_slice(&self.n_scalars.to_le_bytes());
        b[OFF_N_PROPERTIES..OFF_N_PROPERTIES + 2].copy_from_slice(&self.n_properties.to_le_bytes());
        for (off, names) in [
            (OFF_SCALAR_NAMES, &self.scalar_names),
            (OFF_PROPERTY_NAMES, &self.property_names),
        ] {
            b[off..off + MAX_FIELDS * NAME_BYTES].fill(0);
            for (i, name) in names.iter().take(MAX_FIELDS).enumerate() {
                let bytes = name.as_bytes();
                let n = bytes.len().min(NAME_BYTES - 1);
                b[off + i * NAME_BYTES..off + i * NAME_BYTES + n].copy_from_slice(&bytes[..n]);
            }
        }
        b[OFF_N_COUNT..OFF_N_COUNT + 4].copy_from_slice(&self.n_count.to_le_bytes());
        b[OFF_VERSION..OFF_VERSION + 4].copy_from_slice(&self.version.to_le_bytes());
        b[OFF_HDR_SIZE..OFF_HDR_SIZE + 4].copy_from_slice(&self.hdr_size.to_le_bytes());
        b
    }

    /// Bytes 504..988 (reserved block, voxel order, orientation and flags).
    pub fn reserved(&self) -> &[u8] {
        &self.raw[OFF_RESERVED..OFF_N_COUNT]
    }
}

/// Parses a whole TRK file into a cluster (cluster id 0; callers assign the
/// id from the file name).
pub fn parse_trk(bytes: &[u8]) -> Result<ClusterGeometry, TrkError> {
    read_trk(bytes).map(|(_, g)| g)
}

pub fn read_trk(bytes: &[u8]) -> Result<(TrkHeader, ClusterGeometry), TrkError> {
    let header = TrkHeader::parse(bytes)?;
    let n_scalars = header.n_scalars as usize;
    let n_properties = header.n_properties as usize;
    let expected = usize::try_from(header.n_count).ok().filter(|&n| n > 0);

    let mut fibers = Vec::with_capacity(expected.unwrap_or(0).min(1 << 16));
    let mut properties = vec![Vec::new(); n_properties];
    let mut pos = HEADER_SIZE;
    let floats = |pos: usize, count: usize| {
        bytes[pos..pos + 4 * count]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
    };

    loop {
        let track = fibers.len();
        match expected {
            Some(n) if track == n => break,
            None if pos == bytes.len() => break,
            _ => {}
        }
        let remaining = bytes.len() - pos;
        if remaining < 4 {
            return Err(TrkError::Truncated { track, needed: 4, remaining });
        }
        let n_points = i32_at(bytes, pos);
        pos += 4;
        if n_points < 0 {
            return Err(TrkError::InvalidPointCount { track, points: n_points });
        }
        let per_point = 3 + n_scalars;
        let needed = (n_points as usize)
            .checked_mul(per_point)
            .and_then(|v| v.checked_add(n_properties))
            .and_then(|v| v.checked_mul(4))
            .unwrap_or(usize::MAX);
        let remaining = bytes.len() - pos;
        if needed > remaining {
            return Err(TrkError::Truncated { track, needed, remaining });
        }

        let n_points = n_points as usize;
        let mut points = Vec::with_capacity(n_points);
        let mut scalars = vec![Vec::with_capacity(n_points); n_scalars];
        let mut values = floats(pos, n_points * per_point);
        for _ in 0..n_points {
            let mut next = || f64::from(values.next().unwrap());
            points.push([next(), next(), next()]);
            for column in scalars.iter_mut() {
                column.push(next());
            }
        }
        pos += 4 * n_points * per_point;
        for (column, v) in properties.iter_mut().zip(floats(pos, n_properties)) {
            column.push(f64::from(v));
        }
        pos += 4 * n_properties;
        fibers.push(FiberPolyline::with_scalars(points, scalars));
    }

    let mut g = ClusterGeometry {
        cluster_id: 0,
        scalar_names: header.scalar_names.clone(),
        property_names: header.property_names.clone(),
        fibers,
        properties,
    };
    g.disambiguate_property_names();
    Ok((header, g))
}

/// Writes `g` with a freshly built header.
pub fn write_trk(g: &ClusterGeometry) -> Result<Vec<u8>, TrkError> {
    let header = TrkHeader::for_geometry(g)?;
    encode(&header, g)
}

/// Writes `g` reusing `header`'s spatial and reserved fields; names and
/// counts are taken from `g`.
pub fn write_trk_with_header(header: &TrkHeader, g: &ClusterGeometry) -> Result<Vec<u8>, TrkError> {
    let mut header = header.clone();
    header.describe(g)?;
    encode(&header, g)
}

fn encode(header: &TrkHeader, g: &ClusterGeometry) -> Result<Vec<u8>, TrkError> {
    let n_scalars = g.scalar_names.len();
    if g.properties.len() != g.property_names.len()
        || g.properties.iter().any(|p| p.len() != g.fibers.len())
    {
        return Err(TrkError::InvalidGeometry("property arrays do not match fiber count".into()));
    }
    let body: usize = g
        .fibers
        .iter()
        .map(|f| 4 + 4 * (f.len() * (3 + n_scalars) + g.property_names.len()))
        .sum();
    let mut out = Vec::with_capacity(HEADER_SIZE + body);
    out.extend_from_slice(&header.to_bytes());

    for (i, fiber) in g.fibers.iter().enumerate() {
        if fiber.scalars.len() != n_scalars || fiber.scalars.iter().any(|s| s.len() != fiber.len()) {
            return Err(TrkError::InvalidGeometry(format!("fiber {i}: scalar arrays misaligned")));
        }
        let n_points = i32::try_from(fiber.len())
            .map_err(|_| TrkError::InvalidGeometry(format!("fiber {i}: too many points")))?;
        out.extend_from_slice(&n_points.to_le_bytes());
        for (j, p) in fiber.points.iter().enumerate() {
            for c in p {
                out.extend_from_slice(&(*c as f32).to_le_bytes());
            }
            for column in &fiber.scalars {
                out.extend_from_slice(&(column[j] as f32).to_le_bytes());
            }
        }
        for column in &g.properties {
            out.extend_from_slice(&(column[i] as f32).to_le_bytes());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Builds the header + one 2-point track with scalar "fa" by hand,
    /// independently of `TrkHeader::to_bytes`.
    fn handcrafted() -> Vec<u8> {
        let mut b = vec![0u8; HEADER_SIZE];
        b[..6].copy_from_slice(b"TRACK\0");
        b[36..38].copy_from_slice(&1i16.to_le_bytes());
        b[38..40].copy_from_slice(b"fa");
        b[988..992].copy_from_slice(&1i32.to_le_bytes());
        b[992..996].copy_from_slice(&2i32.to_le_bytes());
        b[996..1000].copy_from_slice(&1000i32.to_le_bytes());
        b.extend_from_slice(&2i32.to_le_bytes());
        for v in [1.0f32, 2.0, 3.0, 0.25, 4.0, 5.0, 6.5, 0.75] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b
    }

    #[test]
    fn parses_handcrafted_file() {
        let g = parse_trk(&handcrafted()).unwrap();
        assert_eq!(g.scalar_names, vec!["fa"]);
        assert_eq!(g.fibers.len(), 1);
        assert_eq!(g.fibers[0].points, vec![[1.0, 2.0, 3.0], [4.0, 5.0, 6.5]]);
        assert_eq!(g.fibers[0].scalars, vec![vec![0.25, 0.75]]);
        assert!(g.property_names.is_empty());
    }

    #[test]
    fn unknown_track_count_reads_to_end() {
        let mut b = handcrafted();
        b[988..992].copy_from_slice(&0i32.to_le_bytes());
        let extra = b[HEADER_SIZE..].to_vec();
        b.extend_from_slice(&extra);
        assert_eq!(parse_trk(&b).unwrap().fibers.len(), 2);
    }

    #[test]
    fn rejects_bad_magic() {
        let mut b = handcrafted();
        b[..5].copy_from_slice(b"TRACX");
        assert!(matches!(parse_trk(&b), Err(TrkError::BadMagic(_))));
    }

    #[test]
    fn rejects_bad_header_size() {
        let mut b = handcrafted();
        b[996..1000].copy_from_slice(&1000i32.to_be_bytes());
        assert_eq!(parse_trk(&b), Err(TrkError::BadHeaderSize(1000i32.swap_bytes())));
    }

    #[test]
    fn rejects_too_many_scalars() {
        let mut b = handcrafted();
        b[36..38].copy_from_slice(&11i16.to_le_bytes());
        assert!(matches!(parse_trk(&b), Err(TrkError::CountOverflow { field: "n_scalars", value: 11 })));
        b[36..38].copy_from_slice(&(-1i16).to_le_bytes());
        assert!(matches!(parse_trk(&b), Err(TrkError::CountOverflow { .. })));
    }

    #[test]
    fn truncated_track_is_an_error() {
        let mut b = handcrafted();
        b[HEADER_SIZE..HEADER_SIZE + 4].copy_from_slice(&5i32.to_le_bytes());
        assert!(matches!(parse_trk(&b), Err(TrkError::Truncated { track: 0, .. })));
        assert!(matches!(parse_trk(&b[..999]), Err(TrkError::ShortHeader(999))));
    }

    #[test]
    fn huge_point_count_does_not_allocate() {
        let mut b = handcrafted();
        b[HEADER_SIZE..HEADER_SIZE + 4].copy_from_slice(&i32::MAX.to_le_bytes());
        assert!(matches!(parse_trk(&b), Err(TrkError::Truncated { .. })));
        b[HEADER_SIZE..HEADER_SIZE + 4].copy_from_slice(&(-3i32).to_le_bytes());
        assert!(matches!(parse_trk(&b), Err(TrkError::InvalidPointCount { points: -3, .. })));
    }

    #[test]
    fn minimal_write_length() {
        let g = ClusterGeometry {
            fibers: vec![FiberPolyline::new(vec![[0.0; 3], [1.0; 3]])],
            ..Default::default()
        };
        assert_eq!(write_trk(&g).unwrap().len(), 1000 + 4 + 2 * 3 * 4);
    }

    #[test]
    fn handcrafted_round_trips() {
        let g = parse_trk(&handcrafted()).unwrap();
        assert_eq!(parse_trk(&write_trk(&g).unwrap()).unwrap(), g);
    }

    #[test]
    fn write_limits() {
        let mut g = parse_trk(&handcrafted()).unwrap();
        g.fibers[0].scalars = vec![vec![0.0, 0.0]; 11];
        g.scalar_names = (0..11).map(|i| format!("s{i}")).collect();
        assert!(matches!(write_trk(&g), Err(TrkError::TooManyFields { count: 11, .. })));

        let mut g = parse_trk(&handcrafted()).unwrap();
        g.scalar_names = vec!["a_name_that_is_too_long".into()];
        assert!(matches!(write_trk(&g), Err(TrkError::NameTooLong(_))));
    }

    #[test]
    fn rewrite_preserves_reserved_block() {
        let mut b = handcrafted();
        b[948..952].copy_from_slice(b"LPS\0");
        b[600] = 0xAB;
        let (header, g) = read_trk(&b).unwrap();
        let out = write_trk_with_header(&header, &g).unwrap();
        assert_eq!(out, b);
        assert_eq!(&header.reserved()[948 - 504..952 - 504], b"LPS\0");
    }
}
