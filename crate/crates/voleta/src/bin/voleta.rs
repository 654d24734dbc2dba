//! Command-line interface exposing each pipeline stage standalone plus the
//! end-to-end dataset run.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use voleta::evalreg::{evaluate_pair, IcpParams};
use voleta::frames::{analyze_frames, select_from_analyses, Frame, FrameSet};
use voleta::meshkit::{
    load_mesh, mesh_volume, remove_isolated_pieces, save_mesh_with, scale_mesh, PlyEncoding,
};
use voleta::pipeline::{
    emit_report, load_report, run_dataset, run_scene, verify_aggregates, PipelineConfig,
    ReportFormat,
};
use voleta::sceneio::{load_scene, natural_cmp, scan_dataset, IngestConfig};

#[derive(Parser)]
#[command(
    name = "voleta",
    about = "Food volume estimation from RGBD captures, reference objects, and reconstructed meshes",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select keyframes from a directory of RGB frames
    Keyframes {
        /// Directory of PNG/JPEG frames (ordered by natural filename sort)
        #[arg(long)]
        input: PathBuf,
        /// Hamming distance at or below which a frame is a duplicate
        #[arg(long, default_value_t = 12)]
        hamming: u32,
        /// Frames scoring below this are rejected as blurry
        #[arg(long, default_value_t = 0.0)]
        blur_threshold: f64,
        /// Gaussian radii as start:end:step (inclusive), e.g. 0:30:2
        #[arg(long, default_value = "0:30:2")]
        radii: String,
        /// Output JSON path
        #[arg(long)]
        out: PathBuf,
    },
    /// Remove isolated pieces below a diameter fraction of the mesh size
    CleanMesh {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        diameter_frac: f64,
        /// Weld vertices closer than this before splitting components
        /// (repairs duplicated-vertex seams)
        #[arg(long)]
        weld_eps: Option<f64>,
        /// Write binary little-endian PLY instead of ASCII
        #[arg(long, default_value_t = false)]
        binary: bool,
    },
    /// Enclosed volume of a mesh, printed in cubic centimeters
    Volume {
        #[arg(long = "in")]
        input: PathBuf,
        /// Uniform scale applied before measuring (e.g. a recovered factor)
        #[arg(long)]
        scale: Option<f64>,
    },
    /// Recover the metric scaling factor for one scene
    Scale {
        /// Scene directory (rgb/, depth/, mask_food/, mask_ref/, metadata.json)
        #[arg(long)]
        scene: PathBuf,
        /// JSON array of measured block lengths in mesh units
        /// (defaults to <scene>/blocks.json when present)
        #[arg(long)]
        blocks: Option<PathBuf>,
        /// Food mesh (defaults to <scene>/meshes/food.{ply,obj})
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long, default_value_t = 0.25)]
        tolerance: f64,
        /// Output JSON path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Register a reconstructed mesh against ground truth and score it
    Evaluate {
        #[arg(long)]
        ours: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-render a JSON report (verifies aggregates first)
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full pipeline over a dataset root
    Run {
        #[arg(long)]
        dataset: PathBuf,
        /// JSON config; defaults apply when omitted
        #[arg(long)]
        config: Option<PathBuf>,
        /// Report path; .csv or .json picks the format
        #[arg(long)]
        out: PathBuf,
        /// Where to write the dataset manifest
        #[arg(long)]
        manifest_out: Option<PathBuf>,
    },
}

fn parse_radii(spec: &str) -> Result<Vec<u32>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let radii: Vec<u32> = match parts.as_slice() {
        [start, end, step] => {
            let (start, end, step): (u32, u32, u32) = (
                start.parse().context("bad radii start")?,
                end.parse().context("bad radii end")?,
                step.parse().context("bad radii step")?,
            );
            if step == 0 {
                bail!("radii step must be nonzero");
            }
            (start..=end).step_by(step as usize).collect()
        }
        _ => spec
            .split(',')
            .map(|t| t.trim().parse().context("bad radius"))
            .collect::<Result<_>>()?,
    };
    if radii.is_empty() {
        bail!("radii specification '{spec}' produced no radii");
    }
    Ok(radii)
}

fn load_frames_dir(dir: &Path) -> Result<FrameSet> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot read {}", dir.display()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
                .unwrap_or(false)
        })
        .collect();
    entries.sort_by(|a, b| {
        natural_cmp(
            a.file_stem().and_then(|s| s.to_str()).unwrap_or(""),
            b.file_stem().and_then(|s| s.to_str()).unwrap_or(""),
        )
    });
    if entries.is_empty() {
        bail!("no PNG/JPEG frames under {}", dir.display());
    }
    let frames = entries
        .iter()
        .enumerate()
        .map(|(i, p)| Frame::load(p, i).map_err(anyhow::Error::from))
        .collect::<Result<Vec<_>>>()?;
    Ok(FrameSet::new(frames)?)
}

fn cmd_keyframes(
    input: &Path,
    hamming: u32,
    blur_threshold: f64,
    radii_spec: &str,
    out: &Path,
) -> Result<()> {
    let radii = parse_radii(radii_spec)?;
    let frames = load_frames_dir(input)?;
    let analyses = analyze_frames(&frames, &radii)?;
    let selection = select_from_analyses(&analyses, hamming, blur_threshold);

    let id_of = |idx: &usize| analyses[*idx].id.clone();
    let report = serde_json::json!({
        "input": input.display().to_string(),
        "hamming_threshold": hamming,
        "blur_threshold": blur_threshold,
        "radii": radii,
        "kept": selection.kept.iter().map(id_of).collect::<Vec<_>>(),
        "rejected_blurry": selection.rejected_blurry.iter().map(id_of).collect::<Vec<_>>(),
        "rejected_duplicate": selection.rejected_duplicate.iter().map(id_of).collect::<Vec<_>>(),
        "retention_ratio": selection.retention_ratio,
        "all_blurry": selection.all_blurry,
        "frames": analyses.iter().map(|a| serde_json::json!({
            "index": a.index,
            "id": a.id,
            "hash": a.hash.to_hex(),
            "blur_score": a.blur_score,
        })).collect::<Vec<_>>(),
    });
    std::fs::write(out, serde_json::to_string_pretty(&report)? + "\n")
        .with_context(|| format!("cannot write {}", out.display()))?;
    println!(
        "kept {} of {} frames ({:.1}%)",
        selection.kept.len(),
        frames.len(),
        selection.retention_ratio * 100.0
    );
    Ok(())
}

fn cmd_clean_mesh(
    input: &Path,
    out: &Path,
    diameter_frac: f64,
    weld_eps: Option<f64>,
    binary: bool,
) -> Result<()> {
    let mut mesh = load_mesh(input)?;
    if let Some(eps) = weld_eps {
        mesh = voleta::meshkit::weld_vertices(&mesh, eps)?;
    }
    let before = mesh.triangle_count();
    let cleaned = remove_isolated_pieces(&mesh, diameter_frac)?;
    let encoding = if binary {
        PlyEncoding::BinaryLittleEndian
    } else {
        PlyEncoding::Ascii
    };
    save_mesh_with(&cleaned, out, encoding)?;
    println!(
        "kept {} of {before} triangles; wrote {}",
        cleaned.triangle_count(),
        out.display()
    );
    Ok(())
}

fn cmd_volume(input: &Path, scale: Option<f64>) -> Result<()> {
    let mesh = load_mesh(input)?;
    let mesh = match scale {
        Some(s) => scale_mesh(&mesh, s)?,
        None => mesh,
    };
    let boundary = mesh.boundary_edge_count();
    if boundary > 0 {
        eprintln!("warning: mesh has {boundary} boundary edges; volume assumes a closed surface");
    }
    println!("{:.2}", mesh_volume(&mesh) * 1e6);
    Ok(())
}

fn cmd_scale(
    scene_dir: &Path,
    blocks: Option<&Path>,
    mesh: Option<&Path>,
    tolerance: f64,
    out: Option<&Path>,
) -> Result<()> {
    let config = PipelineConfig {
        fine_tune_tolerance: tolerance,
        ..PipelineConfig::default()
    };
    let mut scene = load_scene(scene_dir, &IngestConfig::default())?;
    if let Some(path) = blocks {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        scene.block_lengths =
            Some(serde_json::from_str(&text).context("blocks file must be a JSON array")?);
    }
    if let Some(path) = mesh {
        scene.meshes.food = Some(path.to_path_buf());
    }
    if scene.meshes.food.is_none() {
        bail!("no food mesh: pass --mesh or place meshes/food.ply in the scene");
    }

    let row = run_scene(&scene, &config, &[])?;
    let estimate = row
        .scale
        .ok_or_else(|| anyhow::anyhow!("could not recover a scale: {}", row.note.unwrap_or_default()))?;
    let json = serde_json::to_string_pretty(&estimate)? + "\n";
    match out {
        Some(path) => std::fs::write(path, json)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{json}"),
    }
    Ok(())
}

fn cmd_evaluate(ours: &Path, gt: &Path, samples: usize, seed: u64, out: &Path) -> Result<()> {
    let mesh_ours = load_mesh(ours)?;
    let mesh_gt = load_mesh(gt)?;
    let result = evaluate_pair(&mesh_ours, &mesh_gt, samples, seed, &IcpParams::default())?;
    let report = serde_json::json!({
        "ours": ours.display().to_string(),
        "gt": gt.display().to_string(),
        "samples": samples,
        "seed": seed,
        "chamfer_with_transform": result.chamfer_with_transform,
        "chamfer_with_transform_x1e3": result.chamfer_with_transform_milli(),
        "chamfer_without_transform": result.chamfer_without_transform,
        "chamfer_without_transform_x1e3": result.chamfer_without_transform_milli(),
        "icp_rmse": result.icp_rmse,
        "iterations": result.iterations_used,
        "transform": result.transform.to_homogeneous_rows(),
    });
    std::fs::write(out, serde_json::to_string_pretty(&report)? + "\n")
        .with_context(|| format!("cannot write {}", out.display()))?;
    println!(
        "chamfer with transform {:.6e}, without {:.6e} ({} iterations)",
        result.chamfer_with_transform, result.chamfer_without_transform, result.iterations_used
    );
    Ok(())
}

fn cmd_report(input: &Path, out: &Path) -> Result<()> {
    let report = load_report(input)?;
    verify_aggregates(&report, 1e-9)?;
    let format = ReportFormat::from_path(out)?;
    emit_report(&report, format, out)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_run(
    dataset: &Path,
    config: Option<&Path>,
    out: &Path,
    manifest_out: Option<&Path>,
) -> Result<bool> {
    let config = match config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    config.validate()?;
    let format = ReportFormat::from_path(out)?;

    let (manifest, scenes) = scan_dataset(
        dataset,
        &IngestConfig {
            depth_scale: config.depth_scale,
        },
    )?;
    let manifest_path = manifest_out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| dataset.join("manifest.json"));
    manifest.save(&manifest_path)?;

    let outcome = run_dataset(&scenes, &config);
    emit_report(&outcome.report, format, out)?;

    for row in &outcome.report.rows {
        let volume = row
            .predicted_volume_m3
            .map(|v| format!("{:.2} cm^3", v * 1e6))
            .unwrap_or_else(|| "-".into());
        println!(
            "scene {:>3} {:<24} {:<12} volume {}",
            row.scene_id,
            row.label,
            row.status.to_string(),
            volume
        );
    }
    if let Some(mape) = outcome.report.aggregates.mape_percent {
        println!("MAPE over {} scenes: {mape:.3}%", outcome.report.aggregates.evaluated_scenes);
    }
    for failure in &outcome.failures {
        eprintln!(
            "error: scene {} ({}) failed: {}",
            failure.scene_id, failure.label, failure.error
        );
    }
    println!("wrote {}", out.display());
    Ok(outcome.failures.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Keyframes {
            input,
            hamming,
            blur_threshold,
            radii,
            out,
        } => cmd_keyframes(input, *hamming, *blur_threshold, radii, out).map(|_| true),
        Command::CleanMesh {
            input,
            out,
            diameter_frac,
            weld_eps,
            binary,
        } => cmd_clean_mesh(input, out, *diameter_frac, *weld_eps, *binary).map(|_| true),
        Command::Volume { input, scale } => cmd_volume(input, *scale).map(|_| true),
        Command::Scale {
            scene,
            blocks,
            mesh,
            tolerance,
            out,
        } => cmd_scale(scene, blocks.as_deref(), mesh.as_deref(), *tolerance, out.as_deref())
            .map(|_| true),
        Command::Evaluate {
            ours,
            gt,
            samples,
            seed,
            out,
        } => cmd_evaluate(ours, gt, *samples, *seed, out).map(|_| true),
        Command::Report { input, out } => cmd_report(input, out).map(|_| true),
        Command::Run {
            dataset,
            config,
            out,
            manifest_out,
        } => cmd_run(dataset, config.as_deref(), out, manifest_out.as_deref()),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
