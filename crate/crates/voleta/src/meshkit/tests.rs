use std::f64::consts::PI;

use approx::assert_relative_eq;
use nalgebra::{Point3, Vector3};
use proptest::prelude::*;

use super::primitives::{cube_at, icosphere, tetrahedron, unit_cube};
use super::*;

fn merge(a: &TriangleMesh, b: &TriangleMesh) -> TriangleMesh {
    let mut vertices = a.vertices().to_vec();
    let offset = vertices.len() as u32;
    vertices.extend_from_slice(b.vertices());
    let mut triangles = a.triangles().to_vec();
    triangles.extend(b.triangles().iter().map(|t| [t[0] + offset, t[1] + offset, t[2] + offset]));
    TriangleMesh::new(vertices, triangles, "merged").unwrap()
}

#[test]
fn obj_unit_cube_loads() {
    let text = "\
# unit cube
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
f 1 3 2
f 1 4 3
f 5 6 7
f 5 7 8
f 1 2 6
f 1 6 5
f 3 4 8
f 3 8 7
f 1 5 8
f 1 8 4
f 2 3 7
f 2 7 6
";
    let mesh = obj::parse(text, "cube.obj").unwrap();
    assert_eq!(mesh.vertex_count(), 8);
    assert_eq!(mesh.triangle_count(), 12);
    assert_relative_eq!(mesh_volume(&mesh), 1.0, epsilon = 1e-12);
}

#[test]
fn obj_out_of_range_index_is_parse_error() {
    let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n";
    let err = obj::parse(text, "bad.obj").unwrap_err();
    match err {
        MeshError::Parse { line, .. } => assert_eq!(line, 4),
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn obj_face_slash_forms_and_negative_indices() {
    let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1/1 2//2 -1\n";
    let mesh = obj::parse(text, "slash.obj").unwrap();
    assert_eq!(mesh.triangle_count(), 1);
    assert_eq!(mesh.triangles()[0], [0, 1, 2]);
}

#[test]
fn ply_quad_face_fans_to_two_triangles() {
    let text = "\
ply
format ascii 1.0
element vertex 4
property float x
property float y
property float z
element face 1
property list uchar int vertex_indices
end_header
0 0 0
1 0 0
1 1 0
0 1 0
4 0 1 2 3
";
    let mesh = ply::parse(text.as_bytes(), "quad.ply").unwrap();
    assert_eq!(mesh.vertex_count(), 4);
    assert_eq!(mesh.triangle_count(), 2);
    assert_eq!(mesh.triangles(), &[[0, 1, 2], [0, 2, 3]]);
}

#[test]
fn ply_skips_extra_properties_and_elements() {
    let text = "\
ply
format ascii 1.0
comment exporter test
element vertex 3
property float x
property float y
property float z
property uchar red
property uchar green
property uchar blue
element edge 1
property int vertex1
property int vertex2
element face 1
property list uchar int vertex_indices
end_header
0 0 0 255 0 0
1 0 0 0 255 0
0 1 0 0 0 255
0 1
3 0 1 2
";
    let mesh = ply::parse(text.as_bytes(), "colors.ply").unwrap();
    assert_eq!(mesh.vertex_count(), 3);
    assert_eq!(mesh.triangle_count(), 1);
}

#[test]
fn ply_binary_round_trip_is_exact_for_f32() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cube.ply");
    let cube = unit_cube();
    save_mesh_with(&cube, &path, PlyEncoding::BinaryLittleEndian).unwrap();
    let back = load_mesh(&path).unwrap();
    assert_eq!(back.vertex_count(), 8);
    assert_eq!(back.triangles(), cube.triangles());
    for (a, b) in back.vertices().iter().zip(cube.vertices()) {
        assert_eq!(a, b); // cube coordinates are exact in f32
    }
}

#[test]
fn ply_binary_out_of_range_index_names_offset() {
    let mut bytes = b"ply\nformat binary_little_endian 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n".to_vec();
    for v in [[0f32, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]] {
        for c in v {
            bytes.extend_from_slice(&c.to_le_bytes());
        }
    }
    bytes.push(3);
    for i in [0i32, 1, 7] {
        bytes.extend_from_slice(&i.to_le_bytes());
    }
    let err = ply::parse(&bytes, "bad.ply").unwrap_err();
    assert!(matches!(err, MeshError::ParseBinary { .. }), "got {err:?}");
}

#[test]
fn save_then_load_round_trip_obj_and_ply() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = icosphere(1, 0.73);
    for name in ["m.obj", "m.ply"] {
        let path = dir.path().join(name);
        save_mesh(&mesh, &path).unwrap();
        let back = load_mesh(&path).unwrap();
        assert_eq!(back.vertex_count(), mesh.vertex_count());
        assert_eq!(back.triangles(), mesh.triangles());
        for (a, b) in back.vertices().iter().zip(mesh.vertices()) {
            assert!((a - b).norm() <= 1e-7, "{name}: {a:?} vs {b:?}");
        }
    }
}

#[test]
fn save_empty_mesh_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.ply");
    save_mesh(&TriangleMesh::empty("void"), &path).unwrap();
    let back = load_mesh(&path).unwrap();
    assert!(back.is_empty());
    assert_eq!(back.triangle_count(), 0);
}

#[test]
fn save_to_unwritable_path_is_io_error() {
    let err = save_mesh(&unit_cube(), "/proc/definitely/not/writable.ply").unwrap_err();
    assert!(matches!(err, MeshError::Io { .. }), "got {err:?}");
}

#[test]
fn unknown_extension_is_rejected() {
    let err = load_mesh("/tmp/whatever.stl").unwrap_err();
    assert!(matches!(err, MeshError::UnknownFormat(_)), "got {err:?}");
}

#[test]
fn single_cube_is_one_component_with_sqrt3_diameter() {
    let comps = connected_components(&unit_cube());
    assert_eq!(comps.len(), 1);
    assert_eq!(comps[0].vertex_count, 8);
    assert_relative_eq!(comps[0].diameter, 3.0f64.sqrt(), epsilon = 1e-12);
}

#[test]
fn disjoint_cubes_are_two_components() {
    let m = merge(&unit_cube(), &cube_at(Point3::new(10.0, 0.0, 0.0), 1.0));
    let comps = connected_components(&m);
    assert_eq!(comps.len(), 2);
    assert_eq!(comps.iter().map(|c| c.triangle_ids.len()).sum::<usize>(), 24);
}

#[test]
fn triangles_sharing_one_vertex_are_one_component() {
    let v = vec![
        Point3::new(0.0, 0.0, 0.0),
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(0.0, 1.0, 0.0),
        Point3::new(-1.0, 0.0, 0.0),
        Point3::new(0.0, -1.0, 0.0),
    ];
    let m = TriangleMesh::new(v, vec![[0, 1, 2], [0, 3, 4]], "bowtie").unwrap();
    assert_eq!(connected_components(&m).len(), 1);
}

#[test]
fn cleanup_drops_satellite_and_keeps_main_body() {
    // satellite diameter 0.01*sqrt(3) ~ 0.0173; whole-mesh AABB diagonal
    // ~ 2.458, so the 5% threshold ~ 0.123 removes exactly the satellite
    let satellite = cube_at(Point3::new(2.0, 0.0, 0.0), 0.01);
    let m = merge(&unit_cube(), &satellite);
    let sat_diameter = 0.01 * 3.0f64.sqrt();
    let threshold = 0.05 * m.aabb_diagonal();
    assert!(sat_diameter <= threshold, "fixture no longer matches intent");

    let cleaned = remove_isolated_pieces(&m, 0.05).unwrap();
    assert_eq!(connected_components(&cleaned).len(), 1);
    assert_eq!(cleaned.triangle_count(), 12);
    assert_eq!(cleaned.vertex_count(), 8);
    assert_relative_eq!(mesh_volume(&cleaned), 1.0, epsilon = 1e-12);
}

#[test]
fn cleanup_fraction_zero_changes_nothing() {
    let m = merge(&unit_cube(), &cube_at(Point3::new(2.0, 0.0, 0.0), 0.01));
    let cleaned = remove_isolated_pieces(&m, 0.0).unwrap();
    assert_eq!(cleaned.triangles(), m.triangles());
    assert_eq!(cleaned.vertices(), m.vertices());
}

#[test]
fn cleanup_keeps_two_moderately_separated_equal_cubes() {
    let m = merge(&unit_cube(), &cube_at(Point3::new(3.0, 0.0, 0.0), 1.0));
    // each cube's diameter sqrt(3) clearly exceeds 5% of the joint diagonal
    let threshold = 0.05 * m.aabb_diagonal();
    assert!(3.0f64.sqrt() > threshold);
    let cleaned = remove_isolated_pieces(&m, 0.05).unwrap();
    assert_eq!(connected_components(&cleaned).len(), 2);
    assert_eq!(cleaned.triangle_count(), 24);
}

#[test]
fn cleanup_of_empty_mesh_is_identity() {
    let m = TriangleMesh::empty("");
    let cleaned = remove_isolated_pieces(&m, 0.05).unwrap();
    assert!(cleaned.is_empty());
}

#[test]
fn volume_unit_cube_exact() {
    assert!((mesh_volume(&unit_cube()) - 1.0).abs() <= 1e-12);
}

#[test]
fn volume_tetrahedron_exact() {
    assert!((mesh_volume(&tetrahedron()) - 1.0 / 6.0).abs() <= 1e-12);
}

#[test]
fn volume_icosphere_approaches_ball_from_below() {
    let v = mesh_volume(&icosphere(3, 1.0));
    let ball = 4.0 * PI / 3.0;
    assert!(v < ball, "inscribed polyhedron must underestimate");
    assert!((ball - v) / ball < 0.02, "volume {v} not within 2% of {ball}");
}

#[test]
fn volume_of_empty_mesh_is_zero() {
    assert_eq!(mesh_volume(&TriangleMesh::empty("")), 0.0);
}

#[test]
fn signed_volume_flips_with_orientation() {
    let cube = unit_cube();
    let flipped: Vec<[u32; 3]> = cube.triangles().iter().map(|t| [t[0], t[2], t[1]]).collect();
    let inward = TriangleMesh::new(cube.vertices().to_vec(), flipped, "inward").unwrap();
    assert_relative_eq!(signed_mesh_volume(&inward), -signed_mesh_volume(&cube), epsilon = 1e-12);
    assert_relative_eq!(mesh_volume(&inward), 1.0, epsilon = 1e-12);
}

#[test]
fn scale_follows_cube_law() {
    let scaled = scale_mesh(&unit_cube(), 2.0).unwrap();
    assert_relative_eq!(mesh_volume(&scaled), 8.0, epsilon = 1e-12);
    let tet = scale_mesh(&tetrahedron(), 0.1).unwrap();
    assert_relative_eq!(mesh_volume(&tet), 1.0 / 6.0 * 1e-3, epsilon = 1e-15);
}

#[test]
fn scale_by_one_is_identity() {
    let m = icosphere(1, 1.0);
    let s = scale_mesh(&m, 1.0).unwrap();
    assert_eq!(s.vertices(), m.vertices());
}

#[test]
fn nonpositive_scale_is_rejected() {
    assert!(scale_mesh(&unit_cube(), 0.0).is_err());
    assert!(scale_mesh(&unit_cube(), -1.0).is_err());
    assert!(scale_mesh(&unit_cube(), f64::NAN).is_err());
}

#[test]
fn boundary_edges_zero_on_closed_meshes() {
    assert_eq!(unit_cube().boundary_edge_count(), 0);
    assert_eq!(icosphere(2, 1.0).boundary_edge_count(), 0);
    let v = vec![
        Point3::new(0.0, 0.0, 0.0),
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(0.0, 1.0, 0.0),
    ];
    let open = TriangleMesh::new(v, vec![[0, 1, 2]], "tri").unwrap();
    assert_eq!(open.boundary_edge_count(), 3);
}

#[test]
fn welding_merges_duplicated_seam() {
    // two triangles meeting along a duplicated edge: 2 components before
    // welding, 1 after
    let v = vec![
        Point3::new(0.0, 0.0, 0.0),
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(0.0, 1.0, 0.0),
        Point3::new(1e-9, 0.0, 0.0),
        Point3::new(1.0 + 1e-9, 0.0, 0.0),
        Point3::new(0.5, -1.0, 0.0),
    ];
    let m = TriangleMesh::new(v, vec![[0, 1, 2], [3, 4, 5]], "seam").unwrap();
    assert_eq!(connected_components(&m).len(), 2);
    let welded = weld_vertices(&m, 1e-7).unwrap();
    assert_eq!(welded.vertex_count(), 4);
    assert_eq!(connected_components(&welded).len(), 1);
}

#[test]
fn mesh_invariants_are_enforced() {
    let v = vec![
        Point3::new(0.0, 0.0, 0.0),
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(0.0, 1.0, 0.0),
    ];
    assert!(TriangleMesh::new(v.clone(), vec![[0, 1, 3]], "").is_err());
    assert!(TriangleMesh::new(v.clone(), vec![[0, 1, 1]], "").is_err());
    assert!(TriangleMesh::new(vec![Point3::origin()], vec![], "").is_err());
}

fn arbitrary_closed_mesh() -> impl Strategy<Value = TriangleMesh> {
    // closed fixtures of varying shape: scaled/translated spheres and cubes
    (0u32..3, 0.1f64..10.0, -5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0, prop::bool::ANY).prop_map(
        |(sub, r, x, y, z, cube)| {
            let base = if cube { cube_at(Point3::new(0.0, 0.0, 0.0), r) } else { icosphere(sub, r) };
            translate_mesh(&base, Vector3::new(x, y, z))
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prop_volume_scaling_law(mesh in arbitrary_closed_mesh(), s in 0.01f64..100.0) {
        let direct = mesh_volume(&scale_mesh(&mesh, s).unwrap());
        let law = s.powi(3) * mesh_volume(&mesh);
        prop_assert!((direct - law).abs() <= 1e-9 * law.max(1e-300));
    }

    #[test]
    fn prop_volume_translation_invariance(
        mesh in arbitrary_closed_mesh(),
        dx in -100.0f64..100.0,
        dy in -100.0f64..100.0,
        dz in -100.0f64..100.0,
    ) {
        let v0 = mesh_volume(&mesh);
        let v1 = mesh_volume(&translate_mesh(&mesh, Vector3::new(dx, dy, dz)));
        prop_assert!((v0 - v1).abs() <= 1e-9 * v0.max(1e-300), "v0={v0} v1={v1}");
    }

    #[test]
    fn prop_components_partition_triangles(
        n in 1usize..6,
        edge in 0.05f64..1.0,
        seed in any::<u64>(),
    ) {
        let mut rng = seed;
        let mut next = move || {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((rng >> 33) as f64) / (u32::MAX as f64)
        };
        let mut m = TriangleMesh::empty("scatter");
        for _ in 0..n {
            let p = Point3::new(next() * 20.0, next() * 20.0, next() * 20.0);
            m = merge(&m, &cube_at(p, edge));
        }
        let comps = connected_components(&m);
        let total: usize = comps.iter().map(|c| c.triangle_ids.len()).sum();
        prop_assert_eq!(total, m.triangle_count());
        let mut seen = vec![false; m.triangle_count()];
        for c in &comps {
            for &t in &c.triangle_ids {
                prop_assert!(!seen[t], "triangle {} in two components", t);
                seen[t] = true;
            }
        }
    }

    #[test]
    fn prop_cleanup_idempotent_and_monotone(
        sizes in prop::collection::vec(0.02f64..2.0, 1..6),
        frac1 in 0.0f64..1.0,
        frac2 in 0.0f64..1.0,
    ) {
        let mut m = TriangleMesh::empty("multi");
        for (i, edge) in sizes.iter().enumerate() {
            m = merge(&m, &cube_at(Point3::new(i as f64 * 5.0, 0.0, 0.0), *edge));
        }
        let (lo, hi) = if frac1 <= frac2 { (frac1, frac2) } else { (frac2, frac1) };

        let once = remove_isolated_pieces(&m, lo).unwrap();
        let twice = remove_isolated_pieces(&once, lo).unwrap();
        prop_assert_eq!(once.triangle_count(), twice.triangle_count());
        prop_assert_eq!(once.vertices(), twice.vertices());

        // survivors at the larger fraction are a subset of survivors at the
        // smaller one; with disjoint cubes, count comparison is sufficient
        let strict = remove_isolated_pieces(&m, hi).unwrap();
        prop_assert!(strict.triangle_count() <= once.triangle_count());
        let vol_strict = mesh_volume(&strict);
        let vol_loose = mesh_volume(&once);
        prop_assert!(vol_strict <= vol_loose + 1e-12);
    }

    #[test]
    fn prop_ply_ascii_round_trip(mesh in arbitrary_closed_mesh()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.ply");
        save_mesh(&mesh, &path).unwrap();
        let back = load_mesh(&path).unwrap();
        prop_assert_eq!(back.triangles(), mesh.triangles());
        for (a, b) in back.vertices().iter().zip(mesh.vertices()) {
            prop_assert!((a - b).norm() <= 1e-6 * (1.0 + b.coords.norm()));
        }
    }
}
