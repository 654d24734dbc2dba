//! Triangle-mesh ingestion, cleanup, and measurement.
//!
//! Meshes are indexed triangle soups. Operations never mutate their input;
//! they return new meshes. Volume uses the divergence theorem (signed
//! tetrahedra against the origin), so it is exact for closed, consistently
//! oriented surfaces and orientation-robust through the final absolute value.

mod obj;
mod ply;
pub mod primitives;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ply::PlyEncoding;

/// Unit annotation carried by a mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    /// Reconstruction-frame coordinates with no physical scale.
    #[default]
    Unitless,
    /// Metric coordinates.
    Meters,
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid mesh: {0}")]
    Invalid(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("parse error in {path} at byte offset {offset}: {message}")]
    ParseBinary {
        path: String,
        offset: usize,
        message: String,
    },
    #[error("unsupported mesh format: {0}")]
    UnknownFormat(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Indexed triangle mesh.
///
/// Invariants enforced at construction: every triangle index is in range and
/// no triangle repeats a vertex index. An empty mesh (no vertices, no
/// triangles) is valid and flows through every operation unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point3<f64>>,
    triangles: Vec<[u32; 3]>,
    pub name: String,
    pub unit: Unit,
}

impl TriangleMesh {
    pub fn new(
        vertices: Vec<Point3<f64>>,
        triangles: Vec<[u32; 3]>,
        name: impl Into<String>,
    ) -> Result<Self, MeshError> {
        let n = vertices.len() as u32;
        if !vertices.is_empty() && vertices.len() < 3 {
            return Err(MeshError::Invalid(format!(
                "nonempty mesh needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        for (i, t) in triangles.iter().enumerate() {
            if t[0] >= n || t[1] >= n || t[2] >= n {
                return Err(MeshError::Invalid(format!(
                    "triangle {i} references vertex out of range (max {})",
                    n.saturating_sub(1)
                )));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(MeshError::Invalid(format!(
                    "triangle {i} repeats a vertex index"
                )));
            }
        }
        Ok(Self {
            vertices,
            triangles,
            name: name.into(),
            unit: Unit::Unitless,
        })
    }

    pub fn empty(name: impl Into<String>) -> Self {
        Self {
            vertices: Vec::new(),
            triangles: Vec::new(),
            name: name.into(),
            unit: Unit::Unitless,
        }
    }

    pub fn with_unit(mut self, unit: Unit) -> Self {
        self.unit = unit;
        self
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Corner positions of triangle `t`.
    pub fn triangle_points(&self, t: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.triangles[t];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Axis-aligned bounding box over all vertices, `None` for an empty mesh.
    pub fn aabb(&self) -> Option<(Point3<f64>, Point3<f64>)> {
        aabb_of(self.vertices.iter().copied())
    }

    /// Length of the space diagonal of the bounding box (0 for empty meshes).
    pub fn aabb_diagonal(&self) -> f64 {
        self.aabb().map(|(lo, hi)| (hi - lo).norm()).unwrap_or(0.0)
    }

    /// Edges that belong to exactly one triangle. A watertight mesh has none;
    /// reconstructed meshes frequently have a few, which is why volume does
    /// not hard-fail on open surfaces.
    pub fn boundary_edge_count(&self) -> usize {
        let mut edges: HashMap<(u32, u32), u32> = HashMap::new();
        for t in &self.triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                let key = (a.min(b), a.max(b));
                *edges.entry(key).or_insert(0) += 1;
            }
        }
        edges.values().filter(|&&c| c == 1).count()
    }
}

impl fmt::Display for TriangleMesh {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} vertices, {} triangles",
            if self.name.is_empty() { "mesh" } else { &self.name },
            self.vertices.len(),
            self.triangles.len()
        )
    }
}

fn aabb_of(points: impl IntoIterator<Item = Point3<f64>>) -> Option<(Point3<f64>, Point3<f64>)> {
    let mut it = points.into_iter();
    let first = it.next()?;
    let mut lo = first;
    let mut hi = first;
    for p in it {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    Some((lo, hi))
}

/// One connected component of a mesh. Triangles connect through shared
/// vertex *indices*, so duplicated-vertex seams split components; run
/// [`weld_vertices`] first when that matters.
#[derive(Debug, Clone)]
pub struct ComponentInfo {
    pub component_id: usize,
    pub triangle_ids: Vec<usize>,
    pub vertex_count: usize,
    /// Space diagonal of the component's axis-aligned bounding box, in the
    /// same unit as the vertices.
    pub diameter: f64,
}

/// Load a mesh from an OBJ (ASCII) or PLY (ASCII or binary little-endian)
/// file; the extension picks the parser. Non-triangle faces are
/// fan-triangulated; normals and colors are ignored.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh, MeshError> {
    let path = path.as_ref();
    match extension_of(path)?.as_str() {
        "obj" => obj::load(path),
        "ply" => ply::load(path),
        other => Err(MeshError::UnknownFormat(format!(
            "unknown extension .{other} for {}",
            path.display()
        ))),
    }
}

/// Save a mesh; the extension picks the format. PLY defaults to ASCII, use
/// [`save_mesh_with`] to choose the binary little-endian encoding.
pub fn save_mesh(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    save_mesh_with(mesh, path, PlyEncoding::Ascii)
}

pub fn save_mesh_with(
    mesh: &TriangleMesh,
    path: impl AsRef<Path>,
    encoding: PlyEncoding,
) -> Result<(), MeshError> {
    let path = path.as_ref();
    match extension_of(path)?.as_str() {
        "obj" => obj::save(mesh, path),
        "ply" => ply::save(mesh, path, encoding),
        other => Err(MeshError::UnknownFormat(format!(
            "unknown extension .{other} for {}",
            path.display()
        ))),
    }
}

fn extension_of(path: &Path) -> Result<String, MeshError> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .ok_or_else(|| {
            MeshError::UnknownFormat(format!("no file extension on {}", path.display()))
        })
}

/// Connected components via union-find over triangles sharing at least one
/// vertex. Components are ordered by their smallest triangle id.
pub fn connected_components(mesh: &TriangleMesh) -> Vec<ComponentInfo> {
    let nt = mesh.triangle_count();
    if nt == 0 {
        return Vec::new();
    }
    let mut uf = UnionFind::new(nt);
    // first triangle seen per vertex; later triangles on the vertex join it
    let mut owner: Vec<u32> = vec![u32::MAX; mesh.vertex_count()];
    for (ti, tri) in mesh.triangles.iter().enumerate() {
        for &v in tri {
            let o = owner[v as usize];
            if o == u32::MAX {
                owner[v as usize] = ti as u32;
            } else {
                uf.union(o as usize, ti);
            }
        }
    }

    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for ti in 0..nt {
        groups.entry(uf.find(ti)).or_default().push(ti);
    }
    let mut comps: Vec<Vec<usize>> = groups.into_values().collect();
    comps.sort_by_key(|tris| tris[0]);

    comps
        .into_iter()
        .enumerate()
        .map(|(component_id, triangle_ids)| {
            let mut seen: HashMap<u32, ()> = HashMap::new();
            for &ti in &triangle_ids {
                for &v in &mesh.triangles[ti] {
                    seen.entry(v).or_insert(());
                }
            }
            let diameter = aabb_of(seen.keys().map(|&v| mesh.vertices[v as usize]))
                .map(|(lo, hi)| (hi - lo).norm())
                .unwrap_or(0.0);
            ComponentInfo {
                component_id,
                triangle_ids,
                vertex_count: seen.len(),
                diameter,
            }
        })
        .collect()
}

/// Delete every connected component whose diameter is at most
/// `diameter_fraction` times the whole mesh's bounding-box diagonal.
/// Unreferenced vertices are pruned and the result re-indexed. The empty
/// mesh is returned unchanged.
pub fn remove_isolated_pieces(
    mesh: &TriangleMesh,
    diameter_fraction: f64,
) -> Result<TriangleMesh, MeshError> {
    if !(0.0..=1.0).contains(&diameter_fraction) {
        return Err(MeshError::InvalidInput(format!(
            "diameter fraction must be in [0, 1], got {diameter_fraction}"
        )));
    }
    if mesh.is_empty() {
        return Ok(mesh.clone());
    }
    let threshold = diameter_fraction * mesh.aabb_diagonal();
    let mut keep: Vec<usize> = Vec::new();
    for comp in connected_components(mesh) {
        if comp.diameter > threshold {
            keep.extend(comp.triangle_ids);
        }
    }
    if keep.len() == mesh.triangle_count() {
        return Ok(mesh.clone());
    }
    keep.sort_unstable();

    // re-index, preserving original vertex order among survivors
    let mut remap: Vec<u32> = vec![u32::MAX; mesh.vertex_count()];
    let mut vertices = Vec::new();
    let mut triangles = Vec::with_capacity(keep.len());
    for ti in keep {
        let mut tri = [0u32; 3];
        for (k, &v) in mesh.triangles[ti].iter().enumerate() {
            if remap[v as usize] == u32::MAX {
                remap[v as usize] = vertices.len() as u32;
                vertices.push(mesh.vertices[v as usize]);
            }
            tri[k] = remap[v as usize];
        }
        triangles.push(tri);
    }
    Ok(TriangleMesh {
        vertices,
        triangles,
        name: mesh.name.clone(),
        unit: mesh.unit,
    })
}

/// Signed enclosed volume: sum of signed tetrahedra between each triangle
/// and a reference point. Negative when the surface is oriented inward.
///
/// On a closed surface the reference point cancels; it is pinned to the
/// vertex centroid so the sum stays well conditioned for meshes far from
/// the origin.
pub fn signed_mesh_volume(mesh: &TriangleMesh) -> f64 {
    if mesh.triangles.is_empty() {
        return 0.0;
    }
    let centroid: Vector3<f64> =
        mesh.vertices.iter().map(|p| p.coords).sum::<Vector3<f64>>() / mesh.vertices.len() as f64;
    mesh.triangles
        .iter()
        .map(|t| {
            let a = mesh.vertices[t[0] as usize].coords - centroid;
            let b = mesh.vertices[t[1] as usize].coords - centroid;
            let c = mesh.vertices[t[2] as usize].coords - centroid;
            a.dot(&b.cross(&c)) / 6.0
        })
        .sum()
}

/// Enclosed volume in the cube of the vertex unit. Watertightness is not
/// verified; use [`TriangleMesh::boundary_edge_count`] as the diagnostic.
pub fn mesh_volume(mesh: &TriangleMesh) -> f64 {
    signed_mesh_volume(mesh).abs()
}

/// Uniformly scale every vertex by `s > 0`. The unit annotation is
/// preserved; callers applying a metric factor should follow up with
/// [`TriangleMesh::with_unit`].
pub fn scale_mesh(mesh: &TriangleMesh, s: f64) -> Result<TriangleMesh, MeshError> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(MeshError::InvalidInput(format!(
            "scale factor must be positive and finite, got {s}"
        )));
    }
    Ok(TriangleMesh {
        vertices: mesh.vertices.iter().map(|p| Point3::from(p.coords * s)).collect(),
        triangles: mesh.triangles.clone(),
        name: mesh.name.clone(),
        unit: mesh.unit,
    })
}

/// Translate every vertex by `d`.
pub fn translate_mesh(mesh: &TriangleMesh, d: Vector3<f64>) -> TriangleMesh {
    TriangleMesh {
        vertices: mesh.vertices.iter().map(|p| p + d).collect(),
        triangles: mesh.triangles.clone(),
        name: mesh.name.clone(),
        unit: mesh.unit,
    }
}

/// Merge vertices closer than `eps` (first occurrence wins) and drop
/// triangles that degenerate in the process. Opt-in pre-step for meshes
/// with duplicated-vertex seams, which otherwise split components.
pub fn weld_vertices(mesh: &TriangleMesh, eps: f64) -> Result<TriangleMesh, MeshError> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(MeshError::InvalidInput(format!(
            "weld epsilon must be nonnegative and finite, got {eps}"
        )));
    }
    if mesh.is_empty() {
        return Ok(mesh.clone());
    }
    let cell = if eps > 0.0 { eps } else { f64::MIN_POSITIVE };
    let key = |p: &Point3<f64>| {
        [
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        ]
    };
    let mut grid: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
    let mut remap: Vec<u32> = Vec::with_capacity(mesh.vertex_count());
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    for p in &mesh.vertices {
        let k = key(p);
        let mut found = None;
        'probe: for dx in -1..=1i64 {
            for dy in -1..=1i64 {
                for dz in -1..=1i64 {
                    let nk = [k[0] + dx, k[1] + dy, k[2] + dz];
                    if let Some(cands) = grid.get(&nk) {
                        for &c in cands {
                            if (vertices[c as usize] - p).norm() <= eps {
                                found = Some(c);
                                break 'probe;
                            }
                        }
                    }
                }
            }
        }
        let idx = match found {
            Some(c) => c,
            None => {
                let idx = vertices.len() as u32;
                vertices.push(*p);
                grid.entry(k).or_default().push(idx);
                idx
            }
        };
        remap.push(idx);
    }
    let triangles: Vec<[u32; 3]> = mesh
        .triangles
        .iter()
        .map(|t| [remap[t[0] as usize], remap[t[1] as usize], remap[t[2] as usize]])
        .filter(|t| t[0] != t[1] && t[1] != t[2] && t[0] != t[2])
        .collect();
    Ok(TriangleMesh {
        vertices,
        triangles,
        name: mesh.name.clone(),
        unit: mesh.unit,
    })
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let gp = self.parent[self.parent[x] as usize];
            self.parent[x] = gp;
            x = gp as usize;
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo as u32;
        }
    }
}

#[cfg(test)]
mod tests;
