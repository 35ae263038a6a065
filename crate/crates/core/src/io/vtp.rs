//! VTK XML PolyData (`.vtp`) subset: inline `ascii` and `binary` (base64)
//! data arrays, no appended section, no compression.
//!
//! Each line cell becomes one fiber. `PointData` arrays are gathered per
//! fiber through the connectivity list; `CellData` arrays become per-fiber
//! properties. Only single-component arrays are kept as scalars.

use std::fmt::Write as _;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use thiserror::Error;

use crate::model::{ClusterGeometry, FiberPolyline};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VtpError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("missing element or attribute: {0}")]
    Missing(String),
    #[error("inconsistent line offsets: {0}")]
    InconsistentOffsets(String),
    #[error("array '{name}' has {found} values, expected {expected}")]
    ArityMismatch { name: String, found: usize, expected: usize },
    #[error("array '{name}': {reason}")]
    BadArray { name: String, reason: String },
}

fn malformed(msg: impl Into<String>) -> VtpError {
    VtpError::MalformedXml(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    I64,
    U64,
    F32,
    F64,
}

impl ScalarType {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "Int8" => Self::I8,
            "UInt8" => Self::U8,
            "Int16" => Self::I16,
            "UInt16" => Self::U16,
            "Int32" => Self::I32,
            "UInt32" => Self::U32,
            "Int64" => Self::I64,
            "UInt64" => Self::U64,
            "Float32" => Self::F32,
            "Float64" => Self::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::I64 | Self::U64 | Self::F64 => 8,
        }
    }

    fn is_float(self) -> bool {
        matches!(self, Self::F32 | Self::F64)
    }

    fn decode(self, chunk: &[u8], big_endian: bool) -> f64 {
        macro_rules! num {
            ($t:ty) => {{
                let arr = chunk.try_into().unwrap();
                (if big_endian { <$t>::from_be_bytes(arr) } else { <$t>::from_le_bytes(arr) }) as f64
            }};
        }
        match self {
            Self::I8 => num!(i8),
            Self::U8 => num!(u8),
            Self::I16 => num!(i16),
            Self::U16 => num!(u16),
            Self::I32 => num!(i32),
            Self::U32 => num!(u32),
            Self::I64 => num!(i64),
            Self::U64 => num!(u64),
            Self::F32 => num!(f32),
            Self::F64 => num!(f64),
        }
    }
}

struct FileSettings {
    big_endian: bool,
    header_type: ScalarType,
}

struct DataArray {
    name: String,
    components: usize,
    values: Vec<f64>,
}

fn read_array(node: roxmltree::Node, settings: &FileSettings) -> Result<DataArray, VtpError> {
    let name = node.attribute("Name").unwrap_or("").to_string();
    let bad = |reason: String| VtpError::BadArray { name: name.clone(), reason };
    let ty_name = node.attribute("type").ok_or_else(|| bad("missing type".into()))?;
    let ty = ScalarType::parse(ty_name).ok_or_else(|| bad(format!("unknown type {ty_name}")))?;
    let components = match node.attribute("NumberOfComponents") {
        None => 1,
        Some(s) => s
            .parse::<usize>()
            .ok()
            .filter(|&c| c > 0)
            .ok_or_else(|| bad(format!("bad NumberOfComponents {s}")))?,
    };
    let text: String = node
        .children()
        .filter(|c| c.is_text())
        .filter_map(|c| c.text())
        .collect();

    let values = match node.attribute("format").unwrap_or("ascii") {
        "ascii" => text
            .split_ascii_whitespace()
            .map(|tok| {
                let v: f64 = tok.parse().map_err(|_| bad(format!("bad number {tok:?}")))?;
                if !ty.is_float() && v.fract() != 0.0 {
                    return Err(bad(format!("non-integer {tok:?} in integer array")));
                }
                Ok(if ty == ScalarType::F32 { f64::from(v as f32) } else { v })
            })
            .collect::<Result<Vec<_>, _>>()?,
        "binary" => {
            let bytes = decode_inline_binary(&text, settings.header_type)
                .map_err(&bad)?;
            if bytes.len() % ty.size() != 0 {
                return Err(bad(format!("{} bytes is not a multiple of {}", bytes.len(), ty.size())));
            }
            bytes
                .chunks_exact(ty.size())
                .map(|c| ty.decode(c, settings.big_endian))
                .collect()
        }
        other => {
            return Err(VtpError::UnsupportedEncoding(format!("format=\"{other}\" on array '{name}'")));
        }
    };
    Ok(DataArray { name, components, values })
}

/// Inline binary arrays are base64 of `[byte count][payload]`. Some writers
/// encode the count header as its own base64 block; both are accepted.
fn decode_inline_binary(text: &str, header_type: ScalarType) -> Result<Vec<u8>, String> {
    let compact: String = text.chars().filter(|c| !c.is_ascii_whitespace()).collect();
    let hsize = header_type.size();
    let byte_count = |header: &[u8]| -> usize {
        let v = match hsize {
            4 => u32::from_le_bytes(header[..4].try_into().unwrap()) as u64,
            _ => u64::from_le_bytes(header[..8].try_into().unwrap()),
        };
        usize::try_from(v).unwrap_or(usize::MAX)
    };

    if let Ok(mut joint) = BASE64.decode(&compact) {
        if joint.len() >= hsize && byte_count(&joint) == joint.len() - hsize {
            joint.drain(..hsize);
            return Ok(joint);
        }
    }
    let head_chars = hsize.div_ceil(3) * 4;
    if compact.len() >= head_chars {
        let (head, body) = compact.split_at(head_chars);
        if let (Ok(head), Ok(body)) = (BASE64.decode(head), BASE64.decode(body)) {
            if head.len() >= hsize && byte_count(&head) == body.len() {
                return Ok(body);
            }
        }
    }
    Err("base64 payload does not match its byte-count header".into())
}

fn count_attr(node: roxmltree::Node, attr: &str) -> Result<usize, VtpError> {
    match node.attribute(attr) {
        None => Ok(0),
        Some(s) => s.trim().parse().map_err(|_| malformed(format!("{attr}=\"{s}\""))),
    }
}

fn child<'a, 'i>(node: roxmltree::Node<'a, 'i>, tag: &str) -> Option<roxmltree::Node<'a, 'i>> {
    node.children().find(|c| c.has_tag_name(tag))
}

fn arrays<'a, 'i>(node: roxmltree::Node<'a, 'i>) -> impl Iterator<Item = roxmltree::Node<'a, 'i>> {
    node.children().filter(|c| c.has_tag_name("DataArray"))
}

fn to_index(v: f64, what: &str) -> Result<usize, VtpError> {
    if v < 0.0 || v.fract() != 0.0 || v > usize::MAX as f64 {
        return Err(VtpError::InconsistentOffsets(format!("{what} entry {v} is not a valid index")));
    }
    Ok(v as usize)
}

/// Parses a PolyData file into a cluster (cluster id 0).
pub fn parse_vtp(bytes: &[u8]) -> Result<ClusterGeometry, VtpError> {
    let text = std::str::from_utf8(bytes).map_err(|e| malformed(e.to_string()))?;
    let doc = roxmltree::Document::parse(text).map_err(|e| malformed(e.to_string()))?;
    let root = doc.root_element();
    if !root.has_tag_name("VTKFile") {
        return Err(malformed(format!("root element is <{}>", root.tag_name().name())));
    }
    if root.attribute("type") != Some("PolyData") {
        return Err(malformed("VTKFile type is not PolyData"));
    }
    if let Some(c) = root.attribute("compressor") {
        return Err(VtpError::UnsupportedEncoding(format!("compressor {c}")));
    }
    if child(root, "AppendedData").is_some() {
        return Err(VtpError::UnsupportedEncoding("AppendedData section".into()));
    }
    let settings = FileSettings {
        big_endian: match root.attribute("byte_order").unwrap_or("LittleEndian") {
            "LittleEndian" => false,
            "BigEndian" => true,
            other => return Err(malformed(format!("byte_order {other}"))),
        },
        header_type: match root.attribute("header_type").unwrap_or("UInt32") {
            "UInt32" => ScalarType::U32,
            "UInt64" => ScalarType::U64,
            other => return Err(VtpError::UnsupportedEncoding(format!("header_type {other}"))),
        },
    };
    let polydata = child(root, "PolyData").ok_or_else(|| VtpError::Missing("PolyData".into()))?;

    let mut out = ClusterGeometry::default();
    let mut first = true;
    for piece in polydata.children().filter(|c| c.has_tag_name("Piece")) {
        let part = read_piece(piece, &settings)?;
        if first {
            out.scalar_names = part.scalar_names;
            out.property_names = part.property_names;
            out.properties = part.properties;
            out.fibers = part.fibers;
            first = false;
        } else {
            if part.scalar_names != out.scalar_names || part.property_names != out.property_names {
                return Err(malformed("pieces carry different data arrays"));
            }
            for (column, more) in out.properties.iter_mut().zip(part.properties) {
                column.extend(more);
            }
            out.fibers.extend(part.fibers);
        }
    }
    if first {
        return Err(VtpError::Missing("Piece".into()));
    }
    out.disambiguate_property_names();
    Ok(out)
}

fn read_piece(piece: roxmltree::Node, settings: &FileSettings) -> Result<ClusterGeometry, VtpError> {
    let n_points = count_attr(piece, "NumberOfPoints")?;
    let n_verts = count_attr(piece, "NumberOfVerts")?;
    let n_lines = count_attr(piece, "NumberOfLines")?;

    let coords = match child(piece, "Points").and_then(|p| arrays(p).next()) {
        Some(node) => read_array(node, settings)?,
        None if n_points == 0 => DataArray { name: "Points".into(), components: 3, values: vec![] },
        None => return Err(VtpError::Missing("Points/DataArray".into())),
    };
    if coords.components != 3 {
        return Err(VtpError::BadArray {
            name: "Points".into(),
            reason: format!("{} components, expected 3", coords.components),
        });
    }
    if coords.values.len() != 3 * n_points {
        return Err(VtpError::ArityMismatch {
            name: "Points".into(),
            found: coords.values.len() / 3,
            expected: n_points,
        });
    }

    let (connectivity, offsets) = match child(piece, "Lines") {
        Some(lines) => {
            let mut conn = None;
            let mut offs = None;
            for node in arrays(lines) {
                match node.attribute("Name") {
                    Some("connectivity") => conn = Some(read_array(node, settings)?.values),
                    Some("offsets") => offs = Some(read_array(node, settings)?.values),
                    _ => {}
                }
            }
            (
                conn.ok_or_else(|| VtpError::Missing("Lines connectivity".into()))?,
                offs.ok_or_else(|| VtpError::Missing("Lines offsets".into()))?,
            )
        }
        None => (Vec::new(), Vec::new()),
    };
    if offsets.len() != n_lines {
        return Err(VtpError::InconsistentOffsets(format!(
            "{} offsets for NumberOfLines={n_lines}",
            offsets.len()
        )));
    }

    // Offsets are end positions into connectivity.
    let mut spans = Vec::with_capacity(n_lines);
    let mut start = 0usize;
    for (i, &end) in offsets.iter().enumerate() {
        let end = to_index(end, "offsets")?;
        if end <= start {
            return Err(VtpError::InconsistentOffsets(format!(
                "offset {i} ({end}) does not increase past {start}"
            )));
        }
        if end > connectivity.len() {
            return Err(VtpError::InconsistentOffsets(format!(
                "offset {i} ({end}) exceeds connectivity length {}",
                connectivity.len()
            )));
        }
        spans.push(start..end);
        start = end;
    }
    let indices = connectivity
        .iter()
        .map(|&v| {
            let i = to_index(v, "connectivity")?;
            if i >= n_points {
                return Err(VtpError::InconsistentOffsets(format!(
                    "connectivity references point {i} of {n_points}"
                )));
            }
            Ok(i)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut scalar_names = Vec::new();
    let mut point_columns = Vec::new();
    if let Some(pd) = child(piece, "PointData") {
        for node in arrays(pd) {
            let array = read_array(node, settings)?;
            if array.components != 1 {
                log::warn!("skipping {}-component point array '{}'", array.components, array.name);
                continue;
            }
            if array.values.len() != n_points {
                return Err(VtpError::ArityMismatch {
                    name: array.name,
                    found: array.values.len(),
                    expected: n_points,
                });
            }
            scalar_names.push(array.name);
            point_columns.push(array.values);
        }
    }

    let mut property_names = Vec::new();
    let mut properties = Vec::new();
    if let Some(cd) = child(piece, "CellData") {
        let n_polys = count_attr(piece, "NumberOfPolys")?;
        let n_strips = count_attr(piece, "NumberOfStrips")?;
        let n_cells = n_verts + n_lines + n_polys + n_strips;
        for node in arrays(cd) {
            let array = read_array(node, settings)?;
            if array.components != 1 {
                log::warn!("skipping {}-component cell array '{}'", array.components, array.name);
                continue;
            }
            if array.values.len() != n_cells {
                return Err(VtpError::ArityMismatch {
                    name: array.name,
                    found: array.values.len(),
                    expected: n_cells,
                });
            }
            // Cell order is verts, lines, polys, strips.
            properties.push(array.values[n_verts..n_verts + n_lines].to_vec());
            property_names.push(array.name);
        }
    }

    let fibers = spans
        .into_iter()
        .map(|span| {
            let ids = &indices[span];
            let points = ids
                .iter()
                .map(|&i| [coords.values[3 * i], coords.values[3 * i + 1], coords.values[3 * i + 2]])
                .collect();
            let scalars = point_columns
                .iter()
                .map(|col| ids.iter().map(|&i| col[i]).collect())
                .collect();
            FiberPolyline::with_scalars(points, scalars)
        })
        .collect();

    Ok(ClusterGeometry { cluster_id: 0, scalar_names, property_names, fibers, properties })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VtpEncoding {
    Ascii,
    /// Inline base64 with a UInt64 byte-count header.
    Base64,
}

/// Writes `g` as PolyData with Float32 points and arrays and Int64 cells.
/// Test-oriented: values are rounded to f32.
pub fn write_vtp(g: &ClusterGeometry, encoding: VtpEncoding) -> String {
    let points: Vec<f64> = g.fibers.iter().flat_map(|f| f.points.iter().flatten().copied()).collect();
    let n_points = points.len() / 3;
    let connectivity: Vec<i64> = (0..n_points as i64).collect();
    let offsets: Vec<i64> = g
        .fibers
        .iter()
        .scan(0i64, |end, f| {
            *end += f.len() as i64;
            Some(*end)
        })
        .collect();

    let f32_array = |name: Option<&str>, comps: usize, vals: &[f64]| -> String {
        let name = name.map(|n| format!(" Name=\"{}\"", xml_escape(n))).unwrap_or_default();
        let body = match encoding {
            VtpEncoding::Ascii => vals.iter().map(|v| (*v as f32).to_string()).collect::<Vec<_>>().join(" "),
            VtpEncoding::Base64 => {
                encode_binary(vals.iter().flat_map(|v| (*v as f32).to_le_bytes()).collect())
            }
        };
        format!(
            "<DataArray type=\"Float32\"{name} NumberOfComponents=\"{comps}\" format=\"{}\">{body}</DataArray>\n",
            format_name(encoding)
        )
    };
    let i64_array = |name: &str, vals: &[i64]| -> String {
        let body = match encoding {
            VtpEncoding::Ascii => vals.iter().map(i64::to_string).collect::<Vec<_>>().join(" "),
            VtpEncoding::Base64 => encode_binary(vals.iter().flat_map(|v| v.to_le_bytes()).collect()),
        };
        format!(
            "<DataArray type=\"Int64\" Name=\"{name}\" format=\"{}\">{body}</DataArray>\n",
            format_name(encoding)
        )
    };

    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\"?>\n");
    s.push_str("<VTKFile type=\"PolyData\" version=\"1.0\" byte_order=\"LittleEndian\" header_type=\"UInt64\">\n");
    s.push_str("<PolyData>\n");
    let _ = writeln!(s, "<Piece NumberOfPoints=\"{n_points}\" NumberOfLines=\"{}\">", g.fibers.len());
    s.push_str("<Points>\n");
    s.push_str(&f32_array(Some("Points"), 3, &points));
    s.push_str("</Points>\n<Lines>\n");
    s.push_str(&i64_array("connectivity", &connectivity));
    s.push_str(&i64_array("offsets", &offsets));
    s.push_str("</Lines>\n<PointData>\n");
    for (i, name) in g.scalar_names.iter().enumerate() {
        let column: Vec<f64> = g.fibers.iter().flat_map(|f| f.scalars[i].iter().copied()).collect();
        s.push_str(&f32_array(Some(name), 1, &column));
    }
    s.push_str("</PointData>\n<CellData>\n");
    for (name, column) in g.property_names.iter().zip(&g.properties) {
        s.push_str(&f32_array(Some(name), 1, column));
    }
    s.push_str("</CellData>\n</Piece>\n</PolyData>\n</VTKFile>\n");
    s
}

fn format_name(encoding: VtpEncoding) -> &'static str {
    match encoding {
        VtpEncoding::Ascii => "ascii",
        VtpEncoding::Base64 => "binary",
    }
}

fn encode_binary(payload: Vec<u8>) -> String {
    let mut block = (payload.len() as u64).to_le_bytes().to_vec();
    block.extend(payload);
    BASE64.encode(block)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('"', "&quot;").replace('<', "&lt;").replace('>', "&gt;")
}
