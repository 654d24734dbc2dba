//! Analytic mesh fixtures: a unit cube, the coordinate tetrahedron, and a
//! subdivided icosphere. All are closed and consistently outward-oriented,
//! so their enclosed volumes are known in closed form.

use nalgebra::Point3;

use super::TriangleMesh;

/// Axis-aligned unit cube spanning [0,1]^3, 8 vertices / 12 triangles,
/// outward orientation. Enclosed volume is exactly 1.
pub fn unit_cube() -> TriangleMesh {
    let v = vec![
        Point3::new(0.0, 0.0, 0.0),
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(1.0, 1.0, 0.0),
        Point3::new(0.0, 1.0, 0.0),
        Point3::new(0.0, 0.0, 1.0),
        Point3::new(1.0, 0.0, 1.0),
        Point3::new(1.0, 1.0, 1.0),
        Point3::new(0.0, 1.0, 1.0),
    ];
    let t = vec![
        // bottom (z = 0), normal -z
        [0, 2, 1],
        [0, 3, 2],
        // top (z = 1), normal +z
        [4, 5, 6],
        [4, 6, 7],
        // front (y = 0), normal -y
        [0, 1, 5],
        [0, 5, 4],
        // back (y = 1), normal +y
        [2, 3, 7],
        [2, 7, 6],
        // left (x = 0), normal -x
        [0, 4, 7],
        [0, 7, 3],
        // right (x = 1), normal +x
        [1, 2, 6],
        [1, 6, 5],
    ];
    TriangleMesh::new(v, t, "unit_cube").expect("static cube is valid")
}

/// Cube of edge `edge` with its minimum corner at `origin`.
pub fn cube_at(origin: Point3<f64>, edge: f64) -> TriangleMesh {
    let base = unit_cube();
    let vertices = base
        .vertices()
        .iter()
        .map(|p| Point3::from(origin.coords + p.coords * edge))
        .collect();
    TriangleMesh::new(vertices, base.triangles().to_vec(), "cube").expect("scaled cube is valid")
}

/// Tetrahedron with vertices (0,0,0), (1,0,0), (0,1,0), (0,0,1), outward
/// orientation. Enclosed volume is exactly 1/6.
pub fn tetrahedron() -> TriangleMesh {
    let v = vec![
        Point3::new(0.0, 0.0, 0.0),
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(0.0, 1.0, 0.0),
        Point3::new(0.0, 0.0, 1.0),
    ];
    let t = vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]];
    TriangleMesh::new(v, t, "tetrahedron").expect("static tetrahedron is valid")
}

/// Icosphere: a regular icosahedron with each triangle split 4-ways
/// `subdivisions` times and vertices projected onto the sphere of the given
/// radius. Subdivision 3 gives 642 vertices / 1280 triangles and encloses
/// a volume within 0.5% of the ball it inscribes.
pub fn icosphere(subdivisions: u32, radius: f64) -> TriangleMesh {
    assert!(radius > 0.0, "icosphere radius must be positive");
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut vertices: Vec<Point3<f64>> = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ]
    .iter()
    .map(|v| {
        let p = nalgebra::Vector3::new(v[0], v[1], v[2]).normalize();
        Point3::from(p)
    })
    .collect();

    let mut triangles: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoint: HashMapEdge = HashMapEdge::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for tri in &triangles {
            let ab = midpoint.get(tri[0], tri[1], &mut vertices);
            let bc = midpoint.get(tri[1], tri[2], &mut vertices);
            let ca = midpoint.get(tri[2], tri[0], &mut vertices);
            next.push([tri[0], ab, ca]);
            next.push([tri[1], bc, ab]);
            next.push([tri[2], ca, bc]);
            next.push([ab, bc, ca]);
        }
        triangles = next;
    }

    for p in &mut vertices {
        *p = Point3::from(p.coords.normalize() * radius);
    }
    TriangleMesh::new(vertices, triangles, "icosphere").expect("subdivision preserves validity")
}

struct HashMapEdge {
    map: std::collections::HashMap<(u32, u32), u32>,
}

impl HashMapEdge {
    fn new() -> Self {
        Self {
            map: std::collections::HashMap::new(),
        }
    }

    fn get(&mut self, a: u32, b: u32, vertices: &mut Vec<Point3<f64>>) -> u32 {
        let key = (a.min(b), a.max(b));
        if let Some(&m) = self.map.get(&key) {
            return m;
        }
        let mid = Point3::from((vertices[a as usize].coords + vertices[b as usize].coords) * 0.5);
        let idx = vertices.len() as u32;
        vertices.push(mid);
        self.map.insert(key, idx);
        idx
    }
}
