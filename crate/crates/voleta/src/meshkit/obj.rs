//! Wavefront OBJ (ASCII) reader and writer. Only geometry is kept:
//! `v` positions and `f` faces (fan-triangulated). Texture and normal
//! references inside face entries are accepted and ignored.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::Point3;

use super::{MeshError, TriangleMesh};

pub fn load(path: &Path) -> Result<TriangleMesh, MeshError> {
    let text = fs::read_to_string(path).map_err(|source| MeshError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text, &path.display().to_string())
}

pub fn parse(text: &str, path: &str) -> Result<TriangleMesh, MeshError> {
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    let mut name = String::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let err = |message: String| MeshError::Parse {
            path: path.to_string(),
            line,
            message,
        };
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for c in &mut coords {
                    let tok = tokens
                        .next()
                        .ok_or_else(|| err("vertex needs 3 coordinates".into()))?;
                    *c = tok
                        .parse()
                        .map_err(|_| err(format!("bad coordinate '{tok}'")))?;
                }
                // optional w component is ignored
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut idx: Vec<u32> = Vec::new();
                for tok in tokens {
                    let first = tok.split('/').next().unwrap_or("");
                    let i: i64 = first
                        .parse()
                        .map_err(|_| err(format!("bad face index '{tok}'")))?;
                    let resolved = if i > 0 {
                        i - 1
                    } else if i < 0 {
                        vertices.len() as i64 + i
                    } else {
                        return Err(err("face index 0 is not valid in OBJ".into()));
                    };
                    if resolved < 0 || resolved >= vertices.len() as i64 {
                        return Err(err(format!(
                            "face references vertex {i} but only {} vertices are defined",
                            vertices.len()
                        )));
                    }
                    idx.push(resolved as u32);
                }
                if idx.len() < 3 {
                    return Err(err(format!("face has {} vertices, needs >= 3", idx.len())));
                }
                for k in 1..idx.len() - 1 {
                    let tri = [idx[0], idx[k], idx[k + 1]];
                    if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                        return Err(err("face repeats a vertex index".into()));
                    }
                    triangles.push(tri);
                }
            }
            Some("o" | "g") if name.is_empty() => {
                name = tokens.collect::<Vec<_>>().join(" ");
            }
            // vn, vt, usemtl, mtllib, s, ... carry no geometry we keep
            _ => {}
        }
    }

    TriangleMesh::new(vertices, triangles, name)
}

pub fn save(mesh: &TriangleMesh, path: &Path) -> Result<(), MeshError> {
    let io_err = |source| MeshError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = Vec::with_capacity(mesh.vertex_count() * 40 + mesh.triangle_count() * 16);
    if !mesh.name.is_empty() {
        writeln!(out, "o {}", mesh.name).map_err(io_err)?;
    }
    for p in mesh.vertices() {
        writeln!(out, "v {:.9e} {:.9e} {:.9e}", p.x, p.y, p.z).map_err(io_err)?;
    }
    for t in mesh.triangles() {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1).map_err(io_err)?;
    }
    fs::write(path, out).map_err(io_err)
}
