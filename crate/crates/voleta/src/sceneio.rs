//! Scene-directory ingestion.
//!
//! A scene directory holds `rgb/` frames plus optional `depth/`,
//! `mask_food/`, `mask_ref/` rasters paired to frames by filename stem,
//! optional `meshes/{food,ref,gt}.{ply,obj}` produced by external
//! reconstruction, optional `blocks.json` with measured reference-block
//! lengths (mesh units), and an optional `metadata.json`. Frames are
//! ordered by natural sort of their stems. Dimension mismatches fail the
//! load before any record is constructed.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::{Frame, FrameError, FrameSet};
use crate::metrology::{mask_extent, BinaryMask, DepthMap, MaskKind, MetrologyError};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("empty scene: {0}")]
    EmptyScene(String),
    #[error("integrity error: {frame_file} and {other_file} disagree: {message}")]
    Integrity {
        frame_file: String,
        other_file: String,
        message: String,
    },
    #[error("format error in {path}: {message}")]
    Format { path: String, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Metrology(#[from] MetrologyError),
}

/// Capture difficulty, assigned from the frame count unless the metadata
/// overrides it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

impl Difficulty {
    fn from_frame_count(n: usize) -> Self {
        if n >= 100 {
            Difficulty::Easy
        } else if n >= 2 {
            Difficulty::Medium
        } else {
            Difficulty::Hard
        }
    }
}

/// `metadata.json` contents; every field is optional on disk.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct SceneMetadata {
    pub scene_id: Option<u32>,
    pub label: Option<String>,
    /// Real reference-object dimensions in meters.
    pub reference_real_w_m: Option<f64>,
    pub reference_real_l_m: Option<f64>,
    /// Real edge length of one reference block in meters.
    pub block_edge_m: Option<f64>,
    pub excluded: bool,
    /// Frame index used for depth metrology; defaults to the frame whose
    /// reference mask has the largest bounding box.
    pub overhead_index: Option<usize>,
    pub difficulty: Option<Difficulty>,
}

pub const DEFAULT_BLOCK_EDGE_M: f64 = 0.012;
pub const DEFAULT_DEPTH_SCALE: f64 = 0.001;

/// Knobs for scene loading.
#[derive(Debug, Clone)]
pub struct IngestConfig {
    /// Meters per raw 16-bit depth unit.
    pub depth_scale: f64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            depth_scale: DEFAULT_DEPTH_SCALE,
        }
    }
}

/// Paths of externally reconstructed meshes found in `meshes/`.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct MeshPaths {
    pub food: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub ground_truth: Option<PathBuf>,
}

/// Fully ingested scene.
#[derive(Debug)]
pub struct SceneRecord {
    pub scene_id: u32,
    pub label: String,
    pub difficulty: Difficulty,
    pub dir: PathBuf,
    pub frames: FrameSet,
    pub depth_maps: Vec<Option<DepthMap>>,
    pub food_masks: Vec<Option<BinaryMask>>,
    pub reference_masks: Vec<Option<BinaryMask>>,
    pub overhead_index: usize,
    pub meshes: MeshPaths,
    pub metadata: SceneMetadata,
    /// Measured reference-block lengths in mesh units, from `blocks.json`.
    pub block_lengths: Option<Vec<f64>>,
}

impl SceneRecord {
    pub fn is_single_frame(&self) -> bool {
        self.frames.len() == 1
    }

    pub fn block_edge_m(&self) -> f64 {
        self.metadata.block_edge_m.unwrap_or(DEFAULT_BLOCK_EDGE_M)
    }
}

/// One line of a dataset manifest.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SceneSummary {
    pub scene_id: u32,
    pub label: String,
    pub dir: PathBuf,
    pub difficulty: Difficulty,
    pub frame_count: usize,
    pub excluded: bool,
    pub depth_count: usize,
    pub food_mask_count: usize,
    pub reference_mask_count: usize,
    pub meshes: MeshPaths,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub scenes: Vec<SceneSummary>,
}

impl DatasetManifest {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SceneError> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, json + "\n").map_err(|source| SceneError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SceneError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| SceneError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| SceneError::Format {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// Load a 16-bit grayscale PNG depth map; raw values scale by
/// `depth_scale` and raw 0 stays 0 (invalid).
pub fn load_depth(path: impl AsRef<Path>, depth_scale: f64) -> Result<DepthMap, SceneError> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|e| SceneError::Format {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let gray16 = match img {
        image::DynamicImage::ImageLuma16(g) => g,
        other => {
            return Err(SceneError::Format {
                path: path.display().to_string(),
                message: format!(
                    "depth maps must be 16-bit grayscale PNG, got {:?}",
                    other.color()
                ),
            })
        }
    };
    let (w, h) = gray16.dimensions();
    let values: Vec<f32> = gray16
        .into_raw()
        .into_iter()
        .map(|raw| raw as f32 * depth_scale as f32)
        .collect();
    Ok(DepthMap::new(values, w, h)?)
}

/// Load an 8-bit (grayscale, paletted, or color) PNG mask; a pixel is set
/// when its luminance exceeds 127.
pub fn load_mask(path: impl AsRef<Path>, kind: MaskKind) -> Result<BinaryMask, SceneError> {
    let path = path.as_ref();
    let img = image::open(path)
        .map_err(|e| SceneError::Io {
            path: path.display().to_string(),
            source: std::io::Error::other(e.to_string()),
        })?
        .to_luma8();
    let (w, h) = img.dimensions();
    let bits: Vec<bool> = img.into_raw().into_iter().map(|v| v > 127).collect();
    Ok(BinaryMask::new(bits, w, h, kind)?)
}

/// Apply a mask to an RGB frame: alpha 255 and RGB passed through where
/// set, fully transparent black elsewhere. Returns RGBA bytes.
pub fn apply_mask_rgba(frame: &Frame, mask: &BinaryMask) -> Result<Vec<u8>, SceneError> {
    if frame.width() != mask.width() || frame.height() != mask.height() {
        return Err(SceneError::Integrity {
            frame_file: frame.id.clone(),
            other_file: format!("{:?} mask", mask.kind),
            message: format!(
                "frame {}x{} vs mask {}x{}",
                frame.width(),
                frame.height(),
                mask.width(),
                mask.height()
            ),
        });
    }
    let rgb = frame.rgb();
    let mut rgba = Vec::with_capacity(rgb.len() / 3 * 4);
    for (px, &set) in rgb.chunks_exact(3).zip(mask.bits()) {
        if set {
            rgba.extend_from_slice(&[px[0], px[1], px[2], 255]);
        } else {
            rgba.extend_from_slice(&[0, 0, 0, 0]);
        }
    }
    Ok(rgba)
}

/// Natural-sort comparison: digit runs compare numerically, so `img2`
/// precedes `img10`.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let ab = a.as_bytes();
    let bb = b.as_bytes();
    let (mut i, mut j) = (0, 0);
    while i < ab.len() && j < bb.len() {
        let (ca, cb) = (ab[i], bb[j]);
        if ca.is_ascii_digit() && cb.is_ascii_digit() {
            let si = i;
            while i < ab.len() && ab[i].is_ascii_digit() {
                i += 1;
            }
            let sj = j;
            while j < bb.len() && bb[j].is_ascii_digit() {
                j += 1;
            }
            let na = a[si..i].trim_start_matches('0');
            let nb = b[sj..j].trim_start_matches('0');
            let ord = na
                .len()
                .cmp(&nb.len())
                .then_with(|| na.cmp(nb))
                .then_with(|| (i - si).cmp(&(j - sj)));
            if ord != Ordering::Equal {
                return ord;
            }
        } else {
            let ord = ca.cmp(&cb);
            if ord != Ordering::Equal {
                return ord;
            }
            i += 1;
            j += 1;
        }
    }
    (ab.len() - i).cmp(&(bb.len() - j))
}

fn list_stems(dir: &Path, exts: &[&str]) -> Result<Vec<(String, PathBuf)>, SceneError> {
    let mut out = Vec::new();
    if !dir.is_dir() {
        return Ok(out);
    }
    let entries = fs::read_dir(dir).map_err(|source| SceneError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    for entry in entries {
        let entry = entry.map_err(|source| SceneError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        let path = entry.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        if let Some(ext) = ext {
            if exts.contains(&ext.as_str()) {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    out.push((stem.to_string(), path.clone()));
                }
            }
        }
    }
    out.sort_by(|a, b| natural_cmp(&a.0, &b.0));
    Ok(out)
}

fn find_mesh(dir: &Path, name: &str) -> Option<PathBuf> {
    for ext in ["ply", "obj"] {
        let p = dir.join(format!("{name}.{ext}"));
        if p.is_file() {
            return Some(p);
        }
    }
    None
}

/// Ingest one scene directory into a typed record.
pub fn load_scene(dir: impl AsRef<Path>, config: &IngestConfig) -> Result<SceneRecord, SceneError> {
    let dir = dir.as_ref();
    let rgb_entries = list_stems(&dir.join("rgb"), &["png", "jpg", "jpeg"])?;
    if rgb_entries.is_empty() {
        return Err(SceneError::EmptyScene(format!(
            "no RGB frames under {}",
            dir.join("rgb").display()
        )));
    }

    let metadata: SceneMetadata = {
        let path = dir.join("metadata.json");
        if path.is_file() {
            let text = fs::read_to_string(&path).map_err(|source| SceneError::Io {
                path: path.display().to_string(),
                source,
            })?;
            serde_json::from_str(&text).map_err(|e| SceneError::Format {
                path: path.display().to_string(),
                message: e.to_string(),
            })?
        } else {
            SceneMetadata::default()
        }
    };

    let block_lengths: Option<Vec<f64>> = {
        let path = dir.join("blocks.json");
        if path.is_file() {
            let text = fs::read_to_string(&path).map_err(|source| SceneError::Io {
                path: path.display().to_string(),
                source,
            })?;
            Some(
                serde_json::from_str(&text).map_err(|e| SceneError::Format {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?,
            )
        } else {
            None
        }
    };

    let depth_by_stem: BTreeMap<String, PathBuf> =
        list_stems(&dir.join("depth"), &["png"])?.into_iter().collect();
    let food_by_stem: BTreeMap<String, PathBuf> =
        list_stems(&dir.join("mask_food"), &["png"])?.into_iter().collect();
    let ref_by_stem: BTreeMap<String, PathBuf> =
        list_stems(&dir.join("mask_ref"), &["png"])?.into_iter().collect();

    let mut frames = Vec::with_capacity(rgb_entries.len());
    let mut depth_maps = Vec::with_capacity(rgb_entries.len());
    let mut food_masks = Vec::with_capacity(rgb_entries.len());
    let mut reference_masks = Vec::with_capacity(rgb_entries.len());

    for (index, (stem, path)) in rgb_entries.iter().enumerate() {
        let frame = Frame::load(path, index)?;

        let depth = match depth_by_stem.get(stem) {
            Some(dp) => {
                let d = load_depth(dp, config.depth_scale)?;
                if d.width() != frame.width() || d.height() != frame.height() {
                    return Err(SceneError::Integrity {
                        frame_file: path.display().to_string(),
                        other_file: dp.display().to_string(),
                        message: format!(
                            "frame {}x{} vs depth {}x{}",
                            frame.width(),
                            frame.height(),
                            d.width(),
                            d.height()
                        ),
                    });
                }
                Some(d)
            }
            None => None,
        };

        let load_paired_mask = |map: &BTreeMap<String, PathBuf>,
                                    kind: MaskKind|
         -> Result<Option<BinaryMask>, SceneError> {
            match map.get(stem) {
                Some(mp) => {
                    let m = load_mask(mp, kind)?;
                    if m.width() != frame.width() || m.height() != frame.height() {
                        return Err(SceneError::Integrity {
                            frame_file: path.display().to_string(),
                            other_file: mp.display().to_string(),
                            message: format!(
                                "frame {}x{} vs mask {}x{}",
                                frame.width(),
                                frame.height(),
                                m.width(),
                                m.height()
                            ),
                        });
                    }
                    Ok(Some(m))
                }
                None => Ok(None),
            }
        };

        let food = load_paired_mask(&food_by_stem, MaskKind::Food)?;
        let reference = load_paired_mask(&ref_by_stem, MaskKind::Reference)?;

        frames.push(frame);
        depth_maps.push(depth);
        food_masks.push(food);
        reference_masks.push(reference);
    }

    let overhead_index = match metadata.overhead_index {
        Some(i) if i < frames.len() => i,
        Some(i) => {
            return Err(SceneError::Format {
                path: dir.join("metadata.json").display().to_string(),
                message: format!("overhead_index {i} out of range for {} frames", frames.len()),
            })
        }
        // most fronto-parallel view heuristic: largest reference-mask box
        None => reference_masks
            .iter()
            .enumerate()
            .filter_map(|(i, m)| {
                m.as_ref()
                    .and_then(|m| mask_extent(m).ok())
                    .map(|e| (i, e.bbox.area()))
            })
            .max_by_key(|&(i, area)| (area, std::cmp::Reverse(i)))
            .map(|(i, _)| i)
            .unwrap_or(0),
    };

    let label = metadata.label.clone().unwrap_or_else(|| {
        dir.file_name()
            .and_then(|s| s.to_str())
            .unwrap_or("scene")
            .to_string()
    });
    let scene_id = metadata
        .scene_id
        .or_else(|| leading_integer(&label))
        .unwrap_or(0);
    let difficulty = metadata
        .difficulty
        .unwrap_or_else(|| Difficulty::from_frame_count(frames.len()));

    let meshes_dir = dir.join("meshes");
    let meshes = MeshPaths {
        food: find_mesh(&meshes_dir, "food"),
        reference: find_mesh(&meshes_dir, "ref"),
        ground_truth: find_mesh(&meshes_dir, "gt"),
    };

    Ok(SceneRecord {
        scene_id,
        label,
        difficulty,
        dir: dir.to_path_buf(),
        frames: FrameSet::new(frames)?,
        depth_maps,
        food_masks,
        reference_masks,
        overhead_index,
        meshes,
        metadata,
        block_lengths,
    })
}

fn leading_integer(s: &str) -> Option<u32> {
    let digits: String = s.chars().take_while(|c| c.is_ascii_digit()).collect();
    digits.parse().ok()
}

/// Scan a dataset root for scene directories (any subdirectory with an
/// `rgb/` folder), load each, and summarize into a manifest. Scene ids
/// missing from metadata are assigned ordinally.
pub fn scan_dataset(
    root: impl AsRef<Path>,
    config: &IngestConfig,
) -> Result<(DatasetManifest, Vec<SceneRecord>), SceneError> {
    let root = root.as_ref();
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|source| SceneError::Io {
            path: root.display().to_string(),
            source,
        })?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir() && p.join("rgb").is_dir())
        .collect();
    dirs.sort_by(|a, b| {
        natural_cmp(
            a.file_name().and_then(|s| s.to_str()).unwrap_or(""),
            b.file_name().and_then(|s| s.to_str()).unwrap_or(""),
        )
    });
    if dirs.is_empty() {
        return Err(SceneError::EmptyScene(format!(
            "no scene directories under {}",
            root.display()
        )));
    }

    let mut scenes = Vec::new();
    for (ordinal, dir) in dirs.iter().enumerate() {
        let mut scene = load_scene(dir, config)?;
        if scene.metadata.scene_id.is_none() && scene.scene_id == 0 {
            scene.scene_id = ordinal as u32 + 1;
        }
        scenes.push(scene);
    }
    scenes.sort_by_key(|s| s.scene_id);

    let summaries = scenes
        .iter()
        .map(|s| SceneSummary {
            scene_id: s.scene_id,
            label: s.label.clone(),
            dir: s.dir.clone(),
            difficulty: s.difficulty,
            frame_count: s.frames.len(),
            excluded: s.metadata.excluded,
            depth_count: s.depth_maps.iter().flatten().count(),
            food_mask_count: s.food_masks.iter().flatten().count(),
            reference_mask_count: s.reference_masks.iter().flatten().count(),
            meshes: s.meshes.clone(),
        })
        .collect();

    Ok((
        DatasetManifest {
            root: root.to_path_buf(),
            scenes: summaries,
        },
        scenes,
    ))
}
