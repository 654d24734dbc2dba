//! End-to-end orchestration over a dataset of scenes.
//!
//! Each scene flows through keyframe selection, mesh cleanup, scale
//! recovery, and volume measurement; scenes with a ground-truth mesh are
//! additionally registered and scored with the Chamfer distance. Scenes
//! with exactly one keyframe take the one-shot path: instead of measuring
//! reference blocks, they reuse scaling factors recovered by the few-shot
//! scenes of the same run (plus any configured extras) and keep whichever
//! lands closest to the depth-derived potential volume.
//!
//! Neural reconstruction and segmentation are consumed as files; their
//! settings ride along in `reconstruction_provenance` untouched for report
//! traceability.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evalreg::{evaluate_pair, EvalError, IcpParams};
use crate::frames::{select_keyframes, FrameError, KeyframeSelection};
use crate::meshkit::{
    load_mesh, mesh_volume, remove_isolated_pieces, scale_mesh, MeshError, Unit,
};
use crate::metrology::{
    fine_tune_scale, food_height, mask_extent, masked_mean_depth, pixels_per_unit,
    potential_volume, scale_from_reference_blocks, select_scale_one_shot, MetrologyError,
    ScaleEstimate, ScaleMethod,
};
use crate::sceneio::{scan_dataset, IngestConfig, SceneError, SceneRecord};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Metrology(#[from] MetrologyError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("report error: {0}")]
    Report(String),
}

fn default_hamming() -> u32 {
    12
}

fn default_radii() -> Vec<u32> {
    (0..=30).step_by(2).collect()
}

fn default_diameter_fraction() -> f64 {
    0.05
}

fn default_fine_tune_tolerance() -> f64 {
    0.25
}

fn default_samples() -> usize {
    100_000
}

fn default_depth_scale() -> f64 {
    crate::sceneio::DEFAULT_DEPTH_SCALE
}

fn default_icp_max_iterations() -> usize {
    50
}

fn default_icp_eps() -> f64 {
    1e-6
}

/// Run-wide configuration; every field has a default and the JSON config
/// file may set any subset.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub hamming_threshold: u32,
    /// Gaussian radii for blur scoring; even values in [0, 30].
    pub blur_radii: Vec<u32>,
    /// Frames scoring below this are rejected; 0 keeps everything.
    pub blur_threshold: f64,
    pub diameter_fraction: f64,
    pub fine_tune_tolerance: f64,
    /// Surface samples per mesh for evaluation.
    pub samples: usize,
    pub seed: u64,
    /// Meters per raw 16-bit depth unit.
    pub depth_scale: f64,
    /// Scene ids excluded from aggregates.
    pub exclusions: Vec<u32>,
    /// Extra scaling-factor candidates for the one-shot path, on top of
    /// the factors recovered by few-shot scenes in the same run.
    pub one_shot_candidates: Vec<f64>,
    pub icp_max_iterations: usize,
    pub icp_convergence_eps: f64,
    /// Free-form description of the external reconstruction settings;
    /// copied into the report untouched.
    pub reconstruction_provenance: serde_json::Value,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            hamming_threshold: default_hamming(),
            blur_radii: default_radii(),
            blur_threshold: 0.0,
            diameter_fraction: default_diameter_fraction(),
            fine_tune_tolerance: default_fine_tune_tolerance(),
            samples: default_samples(),
            seed: 0,
            depth_scale: default_depth_scale(),
            exclusions: Vec::new(),
            one_shot_candidates: Vec::new(),
            icp_max_iterations: default_icp_max_iterations(),
            icp_convergence_eps: default_icp_eps(),
            reconstruction_provenance: serde_json::Value::Null,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let config: Self = serde_json::from_str(&text)
            .map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.hamming_threshold > 64 {
            return Err(PipelineError::InvalidConfig(format!(
                "hamming_threshold must be in [0, 64], got {}",
                self.hamming_threshold
            )));
        }
        if self.blur_radii.is_empty() {
            return Err(PipelineError::InvalidConfig("blur_radii is empty".into()));
        }
        for &r in &self.blur_radii {
            if r > 30 || !r.is_multiple_of(2) {
                return Err(PipelineError::InvalidConfig(format!(
                    "blur radii must be even and within [0, 30], got {r}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.diameter_fraction) {
            return Err(PipelineError::InvalidConfig(format!(
                "diameter_fraction must be in [0, 1], got {}",
                self.diameter_fraction
            )));
        }
        if !(self.fine_tune_tolerance > 0.0 && self.fine_tune_tolerance <= 1.0) {
            return Err(PipelineError::InvalidConfig(format!(
                "fine_tune_tolerance must be in (0, 1], got {}",
                self.fine_tune_tolerance
            )));
        }
        if self.samples == 0 {
            return Err(PipelineError::InvalidConfig("samples must be >= 1".into()));
        }
        Ok(())
    }

    fn icp_params(&self) -> IcpParams {
        IcpParams {
            max_iterations: self.icp_max_iterations,
            convergence_eps: self.icp_convergence_eps,
            ..IcpParams::default()
        }
    }

    fn ingest(&self) -> IngestConfig {
        IngestConfig {
            depth_scale: self.depth_scale,
        }
    }
}

/// Which branch a scene took; exactly one per scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowStatus {
    FewShot,
    OneShot,
    AwaitingReconstruction,
    Excluded,
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RowStatus::FewShot => "few-shot",
            RowStatus::OneShot => "one-shot",
            RowStatus::AwaitingReconstruction => "awaiting-reconstruction",
            RowStatus::Excluded => "excluded",
        };
        write!(f, "{s}")
    }
}

/// Keyframe-selection summary carried per row.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct KeyframeStats {
    pub total: usize,
    pub kept: usize,
    pub retention_ratio: f64,
    pub all_blurry: bool,
}

impl From<(&KeyframeSelection, usize)> for KeyframeStats {
    fn from((sel, total): (&KeyframeSelection, usize)) -> Self {
        Self {
            total,
            kept: sel.kept.len(),
            retention_ratio: sel.retention_ratio,
            all_blurry: sel.all_blurry,
        }
    }
}

/// Everything measured for one scene. Internal quantities are SI (meters,
/// cubic meters, squared meters); the CSV renderer converts to the
/// centimeter-based reporting units.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportRow {
    pub scene_id: u32,
    pub label: String,
    pub difficulty: crate::sceneio::Difficulty,
    pub status: RowStatus,
    pub excluded: bool,
    pub keyframes: Option<KeyframeStats>,
    pub scale: Option<ScaleEstimate>,
    pub ref_extent_px: Option<(u32, u32)>,
    pub food_extent_px: Option<(u32, u32)>,
    pub food_height_m: Option<f64>,
    pub potential_volume_m3: Option<f64>,
    pub predicted_volume_m3: Option<f64>,
    pub gt_volume_m3: Option<f64>,
    pub chamfer_with_transform: Option<f64>,
    pub chamfer_without_transform: Option<f64>,
    pub icp_rmse: Option<f64>,
    pub icp_iterations: Option<usize>,
    /// Diagnostic for rows that could not complete a stage.
    pub note: Option<String>,
}

/// Aggregates over the rows that carry both volumes and are not excluded.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Aggregates {
    pub evaluated_scenes: usize,
    pub mape_percent: Option<f64>,
    pub chamfer_with_sum: Option<f64>,
    pub chamfer_with_mean: Option<f64>,
    pub chamfer_without_sum: Option<f64>,
    pub chamfer_without_mean: Option<f64>,
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct VolumeReport {
    pub rows: Vec<ReportRow>,
    pub aggregates: Aggregates,
    pub reconstruction_provenance: serde_json::Value,
}

/// A scene that failed to produce a row, with the reason.
#[derive(Debug)]
pub struct SceneFailure {
    pub scene_id: u32,
    pub label: String,
    pub error: PipelineError,
}

/// Result of a dataset run: the report plus any scenes that failed
/// outright (the CLI exits nonzero when `failures` is nonempty).
#[derive(Debug)]
pub struct DatasetOutcome {
    pub report: VolumeReport,
    pub failures: Vec<SceneFailure>,
}

/// Run one scene. `extra_candidates` augments the configured one-shot
/// candidate pool; `run_dataset` passes the factors recovered by the
/// few-shot scenes of the same run.
pub fn run_scene(
    scene: &SceneRecord,
    config: &PipelineConfig,
    extra_candidates: &[f64],
) -> Result<ReportRow, PipelineError> {
    config.validate()?;
    let excluded = scene.metadata.excluded || config.exclusions.contains(&scene.scene_id);

    let selection = select_keyframes(
        &scene.frames,
        config.hamming_threshold,
        config.blur_threshold,
        &config.blur_radii,
    )?;
    let keyframes = KeyframeStats::from((&selection, scene.frames.len()));
    let one_shot = selection.kept.len() == 1;

    let mut row = ReportRow {
        scene_id: scene.scene_id,
        label: scene.label.clone(),
        difficulty: scene.difficulty,
        status: RowStatus::AwaitingReconstruction,
        excluded,
        keyframes: Some(keyframes),
        scale: None,
        ref_extent_px: None,
        food_extent_px: None,
        food_height_m: None,
        potential_volume_m3: None,
        predicted_volume_m3: None,
        gt_volume_m3: None,
        chamfer_with_transform: None,
        chamfer_without_transform: None,
        icp_rmse: None,
        icp_iterations: None,
        note: None,
    };

    // depth metrology from the overhead frame; every piece is optional
    let oi = scene.overhead_index;
    let ref_mask = scene.reference_masks.get(oi).and_then(|m| m.as_ref());
    let food_mask = scene.food_masks.get(oi).and_then(|m| m.as_ref());
    let depth = scene.depth_maps.get(oi).and_then(|d| d.as_ref());

    let ppu = match (ref_mask, scene.metadata.reference_real_w_m, scene.metadata.reference_real_l_m)
    {
        (Some(mask), Some(w), Some(l)) => {
            let e = mask_extent(mask)?;
            row.ref_extent_px = Some((e.w, e.l));
            Some(pixels_per_unit(mask, w, l)?)
        }
        _ => None,
    };

    let food_extent = match food_mask {
        Some(mask) => {
            let e = mask_extent(mask)?;
            row.food_extent_px = Some((e.w, e.l));
            Some(e)
        }
        None => None,
    };

    let f_h = match (depth, ref_mask, food_mask) {
        (Some(d), Some(rm), Some(fm)) => {
            let d_r = masked_mean_depth(d, rm)?;
            let d_f = masked_mean_depth(d, fm)?;
            Some(food_height(d_r, d_f))
        }
        _ => None,
    };
    row.food_height_m = f_h;

    let potential = match (ppu, food_extent, f_h) {
        (Some(ppu), Some(e), Some(h)) if h > 0.0 => {
            let v = potential_volume(e.w as f64, e.l as f64, h, ppu);
            row.potential_volume_m3 = Some(v);
            Some(v)
        }
        _ => None,
    };

    let Some(food_path) = scene.meshes.food.as_ref() else {
        row.status = if excluded {
            RowStatus::Excluded
        } else {
            RowStatus::AwaitingReconstruction
        };
        row.note = Some("food mesh not reconstructed yet".into());
        return Ok(row);
    };

    let raw_mesh = load_mesh(food_path)?;
    let clean = remove_isolated_pieces(&raw_mesh, config.diameter_fraction)?;
    let boundary_edges = clean.boundary_edge_count();
    if boundary_edges > 0 {
        row.note = Some(format!(
            "food mesh has {boundary_edges} boundary edges; volume assumes a closed surface"
        ));
    }
    let unitless_volume = mesh_volume(&clean);
    if !(unitless_volume > 0.0) {
        row.status = if excluded { RowStatus::Excluded } else { RowStatus::FewShot };
        row.note = Some("cleaned food mesh has zero volume".into());
        return Ok(row);
    }

    // scale recovery
    let block_scale = match scene.block_lengths.as_deref() {
        Some(lengths) if !lengths.is_empty() => Some((
            scale_from_reference_blocks(lengths, scene.block_edge_m())?,
            lengths.iter().sum::<f64>() / lengths.len() as f64,
        )),
        _ => None,
    };

    let mut candidates: Vec<f64> = config.one_shot_candidates.clone();
    candidates.extend_from_slice(extra_candidates);

    let estimate: Option<ScaleEstimate> = if let (true, Some(potential), false) =
        (one_shot, potential, candidates.is_empty())
    {
        let s = select_scale_one_shot(&candidates, unitless_volume, potential)?;
        Some(ScaleEstimate {
            s_initial: s,
            s_fine: s,
            l_avg: None,
            ppu,
            potential_volume: Some(potential),
            method: ScaleMethod::DepthCorrected,
        })
    } else {
        match (block_scale, potential) {
            (Some((s, l_avg)), Some(p)) => {
                let s_fine = fine_tune_scale(s, unitless_volume, p, config.fine_tune_tolerance)?;
                let method = if s_fine == s {
                    ScaleMethod::Blocks
                } else {
                    ScaleMethod::DepthCorrected
                };
                Some(ScaleEstimate {
                    s_initial: s,
                    s_fine,
                    l_avg: Some(l_avg),
                    ppu,
                    potential_volume: Some(p),
                    method,
                })
            }
            (Some((s, l_avg)), None) => Some(ScaleEstimate {
                s_initial: s,
                s_fine: s,
                l_avg: Some(l_avg),
                ppu,
                potential_volume: None,
                method: ScaleMethod::Blocks,
            }),
            (None, Some(p)) => {
                let s = (p / unitless_volume).cbrt();
                Some(ScaleEstimate {
                    s_initial: s,
                    s_fine: s,
                    l_avg: None,
                    ppu,
                    potential_volume: Some(p),
                    method: ScaleMethod::DepthCorrected,
                })
            }
            (None, None) => None,
        }
    };

    row.status = if excluded {
        RowStatus::Excluded
    } else if one_shot {
        RowStatus::OneShot
    } else {
        RowStatus::FewShot
    };

    let Some(estimate) = estimate else {
        row.note = Some("no scale inputs (neither block lengths nor depth metrology)".into());
        return Ok(row);
    };

    let scaled = scale_mesh(&clean, estimate.s_fine)?.with_unit(Unit::Meters);
    row.predicted_volume_m3 = Some(mesh_volume(&scaled));
    row.scale = Some(estimate);

    if let Some(gt_path) = scene.meshes.ground_truth.as_ref() {
        let gt = load_mesh(gt_path)?.with_unit(Unit::Meters);
        row.gt_volume_m3 = Some(mesh_volume(&gt));
        let eval = evaluate_pair(&scaled, &gt, config.samples, config.seed, &config.icp_params())?;
        row.chamfer_with_transform = Some(eval.chamfer_with_transform);
        row.chamfer_without_transform = Some(eval.chamfer_without_transform);
        row.icp_rmse = Some(eval.icp_rmse);
        row.icp_iterations = Some(eval.iterations_used);
    }

    Ok(row)
}

/// Run every scene: few-shot scenes first (collecting their recovered
/// factors as the one-shot candidate pool), then the single-keyframe
/// scenes. Rows are ordered by scene id regardless of processing order.
pub fn run_dataset(scenes: &[SceneRecord], config: &PipelineConfig) -> DatasetOutcome {
    let mut rows: Vec<ReportRow> = Vec::new();
    let mut failures: Vec<SceneFailure> = Vec::new();
    let mut pool: Vec<f64> = Vec::new();
    let mut deferred: Vec<&SceneRecord> = Vec::new();

    for scene in scenes {
        if scene.is_single_frame() {
            deferred.push(scene);
            continue;
        }
        match run_scene(scene, config, &[]) {
            Ok(row) => {
                if row.status == RowStatus::OneShot {
                    // multi-frame capture that deduplicated down to one
                    // keyframe: its factor came from the shared pool, so
                    // do not feed it back
                } else if let Some(scale) = &row.scale {
                    pool.push(scale.s_fine);
                }
                rows.push(row);
            }
            Err(error) => failures.push(SceneFailure {
                scene_id: scene.scene_id,
                label: scene.label.clone(),
                error,
            }),
        }
    }

    for scene in deferred {
        match run_scene(scene, config, &pool) {
            Ok(row) => rows.push(row),
            Err(error) => failures.push(SceneFailure {
                scene_id: scene.scene_id,
                label: scene.label.clone(),
                error,
            }),
        }
    }

    rows.sort_by_key(|r| r.scene_id);
    let aggregates = compute_aggregates(&rows);
    DatasetOutcome {
        report: VolumeReport {
            rows,
            aggregates,
            reconstruction_provenance: config.reconstruction_provenance.clone(),
        },
        failures,
    }
}

/// Scan a dataset root and run it.
pub fn run_dataset_at(
    root: impl AsRef<Path>,
    config: &PipelineConfig,
) -> Result<DatasetOutcome, PipelineError> {
    let (_, scenes) = scan_dataset(root, &config.ingest())?;
    Ok(run_dataset(&scenes, config))
}

/// Aggregates over included rows: MAPE over rows with both volumes,
/// Chamfer sums and means over rows with Chamfer values.
pub fn compute_aggregates(rows: &[ReportRow]) -> Aggregates {
    let volume_pairs: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| !r.excluded)
        .filter_map(|r| match (r.gt_volume_m3, r.predicted_volume_m3) {
            (Some(t), Some(p)) => Some((t, p)),
            _ => None,
        })
        .collect();

    let mape_percent = if volume_pairs.is_empty() {
        None
    } else {
        let truth: Vec<f64> = volume_pairs.iter().map(|p| p.0).collect();
        let pred: Vec<f64> = volume_pairs.iter().map(|p| p.1).collect();
        crate::evalreg::mape(&truth, &pred).ok()
    };

    let with: Vec<f64> = rows
        .iter()
        .filter(|r| !r.excluded)
        .filter_map(|r| r.chamfer_with_transform)
        .collect();
    let without: Vec<f64> = rows
        .iter()
        .filter(|r| !r.excluded)
        .filter_map(|r| r.chamfer_without_transform)
        .collect();

    let sum_mean = |v: &[f64]| {
        if v.is_empty() {
            (None, None)
        } else {
            let s: f64 = v.iter().sum();
            (Some(s), Some(s / v.len() as f64))
        }
    };
    let (chamfer_with_sum, chamfer_with_mean) = sum_mean(&with);
    let (chamfer_without_sum, chamfer_without_mean) = sum_mean(&without);

    let diagnostic = if volume_pairs.is_empty() {
        Some("no evaluable scenes (need both predicted and ground-truth volumes)".into())
    } else {
        None
    };

    Aggregates {
        evaluated_scenes: volume_pairs.len(),
        mape_percent,
        chamfer_with_sum,
        chamfer_with_mean,
        chamfer_without_sum,
        chamfer_without_mean,
        diagnostic,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn from_path(path: &Path) -> Result<Self, PipelineError> {
        match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
            Some(ext) if ext == "csv" => Ok(ReportFormat::Csv),
            Some(ext) if ext == "json" => Ok(ReportFormat::Json),
            other => Err(PipelineError::Report(format!(
                "cannot infer report format from extension {other:?}; use .csv or .json"
            ))),
        }
    }
}

const CSV_HEADER: &str = "level,scene_id,label,s_fine,ppu_cm_per_px,ref_w_px,ref_l_px,food_w_px,food_l_px,food_h_cm,potential_volume_cm3,predicted_volume_cm3,gt_volume_cm3,chamfer_with_tm_x1e3,chamfer_without_tm_x1e3,status,excluded,frames_total,keyframes_kept";

/// Render the report: CSV in the centimeter-based units the tables use
/// (volumes in cm^3 to 2 decimals, Chamfer in thousandths to 2 decimals),
/// JSON at full precision.
pub fn render_report(report: &VolumeReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            serde_json::to_string_pretty(report).expect("report serializes") + "\n"
        }
        ReportFormat::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for r in &report.rows {
                let level = match r.difficulty {
                    crate::sceneio::Difficulty::Easy => "easy",
                    crate::sceneio::Difficulty::Medium => "medium",
                    crate::sceneio::Difficulty::Hard => "hard",
                };
                let opt = |v: Option<String>| v.unwrap_or_default();
                let cm3 = |v: Option<f64>| opt(v.map(|v| format!("{:.2}", v * 1e6)));
                let milli = |v: Option<f64>| opt(v.map(|v| format!("{:.2}", v * 1e3)));
                let line = [
                    level.to_string(),
                    r.scene_id.to_string(),
                    csv_quote(&r.label),
                    opt(r.scale.as_ref().map(|s| format!("{}", s.s_fine))),
                    opt(r.scale.as_ref().and_then(|s| s.ppu).map(|p| format!("{:.5}", p * 100.0))),
                    opt(r.ref_extent_px.map(|(w, _)| w.to_string())),
                    opt(r.ref_extent_px.map(|(_, l)| l.to_string())),
                    opt(r.food_extent_px.map(|(w, _)| w.to_string())),
                    opt(r.food_extent_px.map(|(_, l)| l.to_string())),
                    opt(r.food_height_m.map(|h| format!("{:.3}", h * 100.0))),
                    cm3(r.potential_volume_m3),
                    cm3(r.predicted_volume_m3),
                    cm3(r.gt_volume_m3),
                    milli(r.chamfer_with_transform),
                    milli(r.chamfer_without_transform),
                    r.status.to_string(),
                    r.excluded.to_string(),
                    opt(r.keyframes.as_ref().map(|k| k.total.to_string())),
                    opt(r.keyframes.as_ref().map(|k| k.kept.to_string())),
                ]
                .join(",");
                out.push_str(&line);
                out.push('\n');
            }
            out
        }
    }
}

fn csv_quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Write the report to disk in the requested format.
pub fn emit_report(
    report: &VolumeReport,
    format: ReportFormat,
    path: impl AsRef<Path>,
) -> Result<(), PipelineError> {
    let path = path.as_ref();
    fs::write(path, render_report(report, format)).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Load a JSON report back; used by the standalone `report` subcommand
/// and the aggregate-consistency check.
pub fn load_report(path: impl AsRef<Path>) -> Result<VolumeReport, PipelineError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Report(e.to_string()))
}

/// Check that the report's aggregates match a recomputation from its rows.
pub fn verify_aggregates(report: &VolumeReport, tol: f64) -> Result<(), PipelineError> {
    let fresh = compute_aggregates(&report.rows);
    let close = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (None, None) => true,
        (Some(a), Some(b)) => (a - b).abs() <= tol * a.abs().max(1.0),
        _ => false,
    };
    let ok = fresh.evaluated_scenes == report.aggregates.evaluated_scenes
        && close(fresh.mape_percent, report.aggregates.mape_percent)
        && close(fresh.chamfer_with_sum, report.aggregates.chamfer_with_sum)
        && close(fresh.chamfer_with_mean, report.aggregates.chamfer_with_mean)
        && close(fresh.chamfer_without_sum, report.aggregates.chamfer_without_sum)
        && close(fresh.chamfer_without_mean, report.aggregates.chamfer_without_mean);
    if ok {
        Ok(())
    } else {
        Err(PipelineError::Report(format!(
            "aggregates do not match their rows: stored {:?}, recomputed {fresh:?}",
            report.aggregates
        )))
    }
}
