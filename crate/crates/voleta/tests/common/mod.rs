#![allow(dead_code)] // each test target uses a different subset

//! Shared fixture builders for the integration suites: synthetic frames,
//! masks, depth maps, and a fully populated scene directory whose volume
//! chain is known in closed form.

use std::fs;
use std::path::{Path, PathBuf};

use image::{GrayImage, ImageBuffer, Luma, Rgb, RgbImage};
use nalgebra::Point3;

use voleta::meshkit::primitives::{cube_at, icosphere};
use voleta::meshkit::{mesh_volume, save_mesh, TriangleMesh};

/// Crossed stripe pattern with deterministic noise; visually distinct per
/// `kind`, dense spectrum like a real capture.
pub fn pattern_rgb(kind: usize, w: u32, h: u32) -> Vec<u8> {
    let period = 4 + 3 * kind as u32;
    let mut state = (kind as u64).wrapping_mul(0x2545f4914f6cdd1d) | 1;
    let mut rgb = Vec::with_capacity((w * h * 3) as usize);
    for y in 0..h {
        for x in 0..w {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let noise = ((state >> 58) as i16) - 32;
            let a = ((x + kind as u32 * 5) / period).is_multiple_of(2);
            let b = ((y + kind as u32 * 3) / (period + 2)).is_multiple_of(2);
            let base: i16 = match (a, b) {
                (true, true) => 235,
                (true, false) => 160,
                (false, true) => 80,
                (false, false) => 15,
            };
            let v = (base + noise * 10 / 32).clamp(0, 255) as u8;
            rgb.extend_from_slice(&[v, v, v]);
        }
    }
    rgb
}

pub fn write_pattern_png(path: &Path, kind: usize, w: u32, h: u32) {
    let rgb = pattern_rgb(kind, w, h);
    let img: RgbImage = ImageBuffer::from_fn(w, h, |x, y| {
        let i = ((y * w + x) * 3) as usize;
        Rgb([rgb[i], rgb[i + 1], rgb[i + 2]])
    });
    img.save(path).unwrap();
}

pub fn write_mask_png(path: &Path, w: u32, h: u32, rect: (u32, u32, u32, u32)) {
    let (x0, y0, rw, rh) = rect;
    let img = GrayImage::from_fn(w, h, |x, y| {
        if x >= x0 && x < x0 + rw && y >= y0 && y < y0 + rh {
            Luma([255u8])
        } else {
            Luma([0u8])
        }
    });
    img.save(path).unwrap();
}

/// Depth raster: `base_raw` everywhere, `food_raw` inside the food rect.
pub fn write_depth_png(
    path: &Path,
    w: u32,
    h: u32,
    base_raw: u16,
    food_rect: (u32, u32, u32, u32),
    food_raw: u16,
) {
    let (x0, y0, rw, rh) = food_rect;
    let img: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_fn(w, h, |x, y| {
        if x >= x0 && x < x0 + rw && y >= y0 && y < y0 + rh {
            Luma([food_raw])
        } else {
            Luma([base_raw])
        }
    });
    img.save(path).unwrap();
}

/// Parameters of the closed-form synthetic scene.
pub struct SyntheticScene {
    pub dir: PathBuf,
    /// Mesh volume of the clean (debris-free) food mesh, mesh units cubed.
    pub unitless_volume: f64,
    /// The scale factor the block measurements encode.
    pub true_scale: f64,
    /// Closed-form predicted volume: true_scale^3 * unitless_volume.
    pub expected_volume_m3: f64,
    /// Depth-derived potential volume the fixture produces.
    pub expected_potential_m3: f64,
}

/// Build a complete scene directory under `root`:
///
/// * food mesh: icosphere (radius 40 mesh units) plus a debris cube that
///   cleanup must remove;
/// * ground truth: the same sphere at metric size (radius 0.1 m);
/// * blocks.json encoding exactly `l_real / 4.8 = 0.0025` m per unit;
/// * overhead depth/masks giving PPU 0.001 m/px, food footprint
///   145 x 145 px, height 0.2 m.
pub fn build_synthetic_scene(root: &Path, name: &str, scene_id: u32, frames: usize) -> SyntheticScene {
    let dir = root.join(name);
    let (w, h) = (400u32, 300u32);
    let food_rect = (220u32, 80u32, 145u32, 145u32);
    let ref_rect = (20u32, 40u32, 100u32, 100u32);

    fs::create_dir_all(dir.join("rgb")).unwrap();
    fs::create_dir_all(dir.join("depth")).unwrap();
    fs::create_dir_all(dir.join("mask_food")).unwrap();
    fs::create_dir_all(dir.join("mask_ref")).unwrap();
    fs::create_dir_all(dir.join("meshes")).unwrap();

    for i in 0..frames {
        let stem = format!("frame_{i:03}");
        write_pattern_png(&dir.join("rgb").join(format!("{stem}.png")), i, w, h);
        write_depth_png(
            &dir.join("depth").join(format!("{stem}.png")),
            w,
            h,
            600,
            food_rect,
            400,
        );
        write_mask_png(&dir.join("mask_food").join(format!("{stem}.png")), w, h, food_rect);
        write_mask_png(&dir.join("mask_ref").join(format!("{stem}.png")), w, h, ref_rect);
    }

    let clean_food = icosphere(3, 40.0);
    let unitless_volume = mesh_volume(&clean_food);
    let debris = cube_at(Point3::new(90.0, 0.0, 0.0), 0.8);
    let food_with_debris = merge_meshes(&clean_food, &debris);
    save_mesh(&food_with_debris, dir.join("meshes").join("food.ply")).unwrap();

    let gt = icosphere(3, 0.1);
    save_mesh(&gt, dir.join("meshes").join("gt.ply")).unwrap();

    fs::write(dir.join("blocks.json"), "[4.8, 4.8, 4.8]").unwrap();
    fs::write(
        dir.join("metadata.json"),
        format!(
            r#"{{
  "scene_id": {scene_id},
  "label": "{name}",
  "reference_real_w_m": 0.1,
  "reference_real_l_m": 0.1,
  "block_edge_m": 0.012,
  "overhead_index": 0
}}
"#
        ),
    )
    .unwrap();

    let true_scale = 0.012 / 4.8;
    SyntheticScene {
        dir,
        unitless_volume,
        true_scale,
        expected_volume_m3: true_scale.powi(3) * unitless_volume,
        expected_potential_m3: (145.0 * 0.001) * (145.0 * 0.001) * 0.2,
    }
}

pub fn merge_meshes(a: &TriangleMesh, b: &TriangleMesh) -> TriangleMesh {
    let mut vertices = a.vertices().to_vec();
    let offset = vertices.len() as u32;
    vertices.extend_from_slice(b.vertices());
    let mut triangles = a.triangles().to_vec();
    triangles.extend(
        b.triangles()
            .iter()
            .map(|t| [t[0] + offset, t[1] + offset, t[2] + offset]),
    );
    TriangleMesh::new(vertices, triangles, a.name.clone()).unwrap()
}
