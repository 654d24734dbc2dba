//! PLY reader (ASCII and binary little-endian) and writer. Vertex `x,y,z`
//! and the face index list are kept; every other property and element is
//! parsed and discarded. Faces with more than three indices are
//! fan-triangulated.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::Point3;

use super::{MeshError, TriangleMesh};

/// On-disk encoding for PLY output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlyEncoding {
    #[default]
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Ascii,
    BinaryLittleEndian,
}

pub fn load(path: &Path) -> Result<TriangleMesh, MeshError> {
    let bytes = fs::read(path).map_err(|source| MeshError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse(&bytes, &path.display().to_string())
}

pub fn parse(bytes: &[u8], path: &str) -> Result<TriangleMesh, MeshError> {
    let (format, elements, body_start, header_lines) = parse_header(bytes, path)?;
    match format {
        Format::Ascii => {
            let body = std::str::from_utf8(&bytes[body_start..]).map_err(|_| MeshError::Parse {
                path: path.to_string(),
                line: header_lines + 1,
                message: "ASCII body is not valid UTF-8".into(),
            })?;
            parse_ascii_body(body, &elements, path, header_lines)
        }
        Format::BinaryLittleEndian => parse_binary_body(&bytes[body_start..], &elements, path, body_start),
    }
}

fn parse_header(
    bytes: &[u8],
    path: &str,
) -> Result<(Format, Vec<Element>, usize, usize), MeshError> {
    let mut pos = 0usize;
    let mut lineno = 0usize;
    let mut format: Option<Format> = None;
    let mut elements: Vec<Element> = Vec::new();

    loop {
        let line_start = pos;
        let Some(rel) = bytes[pos..].iter().position(|&b| b == b'\n') else {
            return Err(MeshError::Parse {
                path: path.to_string(),
                line: lineno + 1,
                message: "header ended without end_header".into(),
            });
        };
        pos += rel + 1;
        lineno += 1;
        let line = std::str::from_utf8(&bytes[line_start..line_start + rel])
            .map_err(|_| MeshError::Parse {
                path: path.to_string(),
                line: lineno,
                message: "header is not valid UTF-8".into(),
            })?
            .trim_end_matches('\r')
            .trim();
        let err = |message: String| MeshError::Parse {
            path: path.to_string(),
            line: lineno,
            message,
        };

        if lineno == 1 {
            if line != "ply" {
                return Err(err("missing 'ply' magic".into()));
            }
            continue;
        }
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("format") => {
                format = Some(match tokens.next() {
                    Some("ascii") => Format::Ascii,
                    Some("binary_little_endian") => Format::BinaryLittleEndian,
                    Some(other) => {
                        return Err(err(format!("unsupported PLY format '{other}'")));
                    }
                    None => return Err(err("format line missing encoding".into())),
                });
            }
            Some("comment") | Some("obj_info") => {}
            Some("element") => {
                let name = tokens
                    .next()
                    .ok_or_else(|| err("element needs a name".into()))?;
                let count: usize = tokens
                    .next()
                    .ok_or_else(|| err("element needs a count".into()))?
                    .parse()
                    .map_err(|_| err("bad element count".into()))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| err("property before any element".into()))?;
                let kind = tokens
                    .next()
                    .ok_or_else(|| err("property needs a type".into()))?;
                if kind == "list" {
                    let count = tokens
                        .next()
                        .and_then(Scalar::from_name)
                        .ok_or_else(|| err("bad list count type".into()))?;
                    let item = tokens
                        .next()
                        .and_then(Scalar::from_name)
                        .ok_or_else(|| err("bad list item type".into()))?;
                    let name = tokens
                        .next()
                        .ok_or_else(|| err("list property needs a name".into()))?;
                    element.properties.push(Property::List {
                        name: name.to_string(),
                        count,
                        item,
                    });
                } else {
                    let ty = Scalar::from_name(kind)
                        .ok_or_else(|| err(format!("unknown property type '{kind}'")))?;
                    let name = tokens
                        .next()
                        .ok_or_else(|| err("property needs a name".into()))?;
                    element.properties.push(Property::Scalar {
                        name: name.to_string(),
                        ty,
                    });
                }
            }
            Some("end_header") => {
                let format = format.ok_or_else(|| err("no format line before end_header".into()))?;
                return Ok((format, elements, pos, lineno));
            }
            Some(other) => {
                return Err(err(format!("unknown header keyword '{other}'")));
            }
            None => {}
        }
    }
}

fn xyz_slots(element: &Element, path: &str) -> Result<[usize; 3], MeshError> {
    let mut slots = [usize::MAX; 3];
    for (i, prop) in element.properties.iter().enumerate() {
        if let Property::Scalar { name, ty } = prop {
            let slot = match name.as_str() {
                "x" => 0,
                "y" => 1,
                "z" => 2,
                _ => continue,
            };
            if !matches!(ty, Scalar::F32 | Scalar::F64) {
                return Err(MeshError::Parse {
                    path: path.to_string(),
                    line: 0,
                    message: format!("vertex property '{name}' must be float or double"),
                });
            }
            slots[slot] = i;
        }
    }
    if slots.contains(&usize::MAX) {
        return Err(MeshError::Parse {
            path: path.to_string(),
            line: 0,
            message: "vertex element lacks x/y/z properties".into(),
        });
    }
    Ok(slots)
}

fn index_list_slot(element: &Element) -> Option<usize> {
    element.properties.iter().position(|p| {
        matches!(p, Property::List { name, .. } if name == "vertex_indices" || name == "vertex_index")
    })
}

fn push_face(
    indices: &[i64],
    vertex_count: usize,
    triangles: &mut Vec<[u32; 3]>,
    mk_err: impl Fn(String) -> MeshError,
) -> Result<(), MeshError> {
    if indices.len() < 3 {
        return Err(mk_err(format!(
            "face has {} indices, needs >= 3",
            indices.len()
        )));
    }
    for &i in indices {
        if i < 0 || i >= vertex_count as i64 {
            return Err(mk_err(format!(
                "face references vertex {i} but only {vertex_count} vertices are defined"
            )));
        }
    }
    for k in 1..indices.len() - 1 {
        let tri = [indices[0] as u32, indices[k] as u32, indices[k + 1] as u32];
        if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            return Err(mk_err("face repeats a vertex index".into()));
        }
        triangles.push(tri);
    }
    Ok(())
}

fn parse_ascii_body(
    body: &str,
    elements: &[Element],
    path: &str,
    header_lines: usize,
) -> Result<TriangleMesh, MeshError> {
    // token stream with line tracking; PLY ASCII rows are whitespace-separated
    let mut tokens: Vec<(usize, &str)> = Vec::new();
    for (i, line) in body.lines().enumerate() {
        let lineno = header_lines + 1 + i;
        for tok in line.split_whitespace() {
            tokens.push((lineno, tok));
        }
    }
    let mut cursor = 0usize;
    let mut next = |expected: &str| -> Result<(usize, &str), MeshError> {
        let got = tokens.get(cursor).copied().ok_or_else(|| MeshError::Parse {
            path: path.to_string(),
            line: tokens.last().map(|t| t.0).unwrap_or(header_lines),
            message: format!("unexpected end of data while reading {expected}"),
        })?;
        cursor += 1;
        Ok(got)
    };

    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();

    for element in elements {
        match element.name.as_str() {
            "vertex" => {
                let slots = xyz_slots(element, path)?;
                for _ in 0..element.count {
                    let mut coords = [0.0f64; 3];
                    for (pi, prop) in element.properties.iter().enumerate() {
                        match prop {
                            Property::Scalar { name, .. } => {
                                let (line, tok) = next(name)?;
                                if let Some(slot) = slots.iter().position(|&s| s == pi) {
                                    coords[slot] =
                                        tok.parse().map_err(|_| MeshError::Parse {
                                            path: path.to_string(),
                                            line,
                                            message: format!("bad {name} value '{tok}'"),
                                        })?;
                                }
                            }
                            Property::List { name, .. } => {
                                let (line, tok) = next(name)?;
                                let n: usize = tok.parse().map_err(|_| MeshError::Parse {
                                    path: path.to_string(),
                                    line,
                                    message: format!("bad list count '{tok}'"),
                                })?;
                                for _ in 0..n {
                                    next(name)?;
                                }
                            }
                        }
                    }
                    vertices.push(Point3::new(coords[0], coords[1], coords[2]));
                }
            }
            "face" => {
                let list_slot = index_list_slot(element).ok_or_else(|| MeshError::Parse {
                    path: path.to_string(),
                    line: header_lines,
                    message: "face element lacks a vertex index list".into(),
                })?;
                for _ in 0..element.count {
                    for (pi, prop) in element.properties.iter().enumerate() {
                        match prop {
                            Property::Scalar { name, .. } => {
                                next(name)?;
                            }
                            Property::List { name, .. } => {
                                let (line, tok) = next(name)?;
                                let n: usize = tok.parse().map_err(|_| MeshError::Parse {
                                    path: path.to_string(),
                                    line,
                                    message: format!("bad face index count '{tok}'"),
                                })?;
                                let mut indices = Vec::with_capacity(n);
                                for _ in 0..n {
                                    let (line, tok) = next(name)?;
                                    let idx: i64 =
                                        tok.parse().map_err(|_| MeshError::Parse {
                                            path: path.to_string(),
                                            line,
                                            message: format!("bad face index '{tok}'"),
                                        })?;
                                    indices.push(idx);
                                }
                                if pi == list_slot {
                                    push_face(&indices, vertices.len(), &mut triangles, |message| {
                                        MeshError::Parse {
                                            path: path.to_string(),
                                            line,
                                            message,
                                        }
                                    })?;
                                }
                            }
                        }
                    }
                }
            }
            _ => {
                // skip unknown element rows token by token
                for _ in 0..element.count {
                    for prop in &element.properties {
                        match prop {
                            Property::Scalar { name, .. } => {
                                next(name)?;
                            }
                            Property::List { name, .. } => {
                                let (line, tok) = next(name)?;
                                let n: usize = tok.parse().map_err(|_| MeshError::Parse {
                                    path: path.to_string(),
                                    line,
                                    message: format!("bad list count '{tok}'"),
                                })?;
                                for _ in 0..n {
                                    next(name)?;
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    TriangleMesh::new(vertices, triangles, "")
}

struct BinCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    base: usize,
    path: &'a str,
}

impl<'a> BinCursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], MeshError> {
        if self.pos + n > self.bytes.len() {
            return Err(MeshError::ParseBinary {
                path: self.path.to_string(),
                offset: self.base + self.pos,
                message: format!("unexpected end of data while reading {what}"),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn scalar_f64(&mut self, ty: Scalar, what: &str) -> Result<f64, MeshError> {
        let raw = self.take(ty.size(), what)?;
        Ok(match ty {
            Scalar::I8 => raw[0] as i8 as f64,
            Scalar::U8 => raw[0] as f64,
            Scalar::I16 => i16::from_le_bytes([raw[0], raw[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([raw[0], raw[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes(raw.try_into().unwrap()) as f64,
            Scalar::U32 => u32::from_le_bytes(raw.try_into().unwrap()) as f64,
            Scalar::F32 => f32::from_le_bytes(raw.try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(raw.try_into().unwrap()),
        })
    }

    fn scalar_i64(&mut self, ty: Scalar, what: &str) -> Result<i64, MeshError> {
        let raw = self.take(ty.size(), what)?;
        Ok(match ty {
            Scalar::I8 => raw[0] as i8 as i64,
            Scalar::U8 => raw[0] as i64,
            Scalar::I16 => i16::from_le_bytes([raw[0], raw[1]]) as i64,
            Scalar::U16 => u16::from_le_bytes([raw[0], raw[1]]) as i64,
            Scalar::I32 => i32::from_le_bytes(raw.try_into().unwrap()) as i64,
            Scalar::U32 => u32::from_le_bytes(raw.try_into().unwrap()) as i64,
            Scalar::F32 | Scalar::F64 => {
                return Err(MeshError::ParseBinary {
                    path: self.path.to_string(),
                    offset: self.base + self.pos - ty.size(),
                    message: format!("{what} must be an integer type"),
                })
            }
        })
    }
}

fn parse_binary_body(
    body: &[u8],
    elements: &[Element],
    path: &str,
    body_start: usize,
) -> Result<TriangleMesh, MeshError> {
    let mut cur = BinCursor {
        bytes: body,
        pos: 0,
        base: body_start,
        path,
    };
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();

    for element in elements {
        let is_vertex = element.name == "vertex";
        let is_face = element.name == "face";
        let slots = if is_vertex {
            Some(xyz_slots(element, path)?)
        } else {
            None
        };
        let list_slot = if is_face {
            Some(index_list_slot(element).ok_or_else(|| MeshError::ParseBinary {
                path: path.to_string(),
                offset: body_start,
                message: "face element lacks a vertex index list".into(),
            })?)
        } else {
            None
        };

        for _ in 0..element.count {
            let mut coords = [0.0f64; 3];
            for (pi, prop) in element.properties.iter().enumerate() {
                match prop {
                    Property::Scalar { name, ty } => {
                        let v = cur.scalar_f64(*ty, name)?;
                        if let Some(slots) = &slots {
                            if let Some(slot) = slots.iter().position(|&s| s == pi) {
                                coords[slot] = v;
                            }
                        }
                    }
                    Property::List { name, count, item } => {
                        let offset = body_start + cur.pos;
                        let n = cur.scalar_i64(*count, name)?;
                        if n < 0 {
                            return Err(MeshError::ParseBinary {
                                path: path.to_string(),
                                offset,
                                message: format!("negative list count {n}"),
                            });
                        }
                        if list_slot == Some(pi) {
                            let mut indices = Vec::with_capacity(n as usize);
                            for _ in 0..n {
                                indices.push(cur.scalar_i64(*item, name)?);
                            }
                            push_face(&indices, vertices.len(), &mut triangles, |message| {
                                MeshError::ParseBinary {
                                    path: path.to_string(),
                                    offset,
                                    message,
                                }
                            })?;
                        } else {
                            cur.take(item.size() * n as usize, name)?;
                        }
                    }
                }
            }
            if is_vertex {
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
        }
    }

    TriangleMesh::new(vertices, triangles, "")
}

pub fn save(mesh: &TriangleMesh, path: &Path, encoding: PlyEncoding) -> Result<(), MeshError> {
    let io_err = |source| MeshError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out: Vec<u8> = Vec::new();
    let format = match encoding {
        PlyEncoding::Ascii => "ascii",
        PlyEncoding::BinaryLittleEndian => "binary_little_endian",
    };
    writeln!(out, "ply").map_err(io_err)?;
    writeln!(out, "format {format} 1.0").map_err(io_err)?;
    if !mesh.name.is_empty() {
        writeln!(out, "comment {}", mesh.name).map_err(io_err)?;
    }
    writeln!(out, "element vertex {}", mesh.vertex_count()).map_err(io_err)?;
    writeln!(out, "property float x").map_err(io_err)?;
    writeln!(out, "property float y").map_err(io_err)?;
    writeln!(out, "property float z").map_err(io_err)?;
    writeln!(out, "element face {}", mesh.triangle_count()).map_err(io_err)?;
    writeln!(out, "property list uchar int vertex_indices").map_err(io_err)?;
    writeln!(out, "end_header").map_err(io_err)?;

    match encoding {
        PlyEncoding::Ascii => {
            for p in mesh.vertices() {
                // stored as float per the header; print the f32 round trip
                writeln!(out, "{} {} {}", p.x as f32, p.y as f32, p.z as f32).map_err(io_err)?;
            }
            for t in mesh.triangles() {
                writeln!(out, "3 {} {} {}", t[0], t[1], t[2]).map_err(io_err)?;
            }
        }
        PlyEncoding::BinaryLittleEndian => {
            for p in mesh.vertices() {
                out.extend_from_slice(&(p.x as f32).to_le_bytes());
                out.extend_from_slice(&(p.y as f32).to_le_bytes());
                out.extend_from_slice(&(p.z as f32).to_le_bytes());
            }
            for t in mesh.triangles() {
                out.push(3u8);
                for &i in t {
                    out.extend_from_slice(&(i as i32).to_le_bytes());
                }
            }
        }
    }
    fs::write(path, out).map_err(io_err)
}
