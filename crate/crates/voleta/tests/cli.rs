//! CLI smoke tests driving the compiled binary.

mod common;

use std::process::Command;

use voleta::meshkit::primitives::{cube_at, unit_cube};
use voleta::meshkit::save_mesh;

fn voleta_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_voleta"))
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "command failed: {}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn volume_prints_cubic_centimeters_with_two_decimals() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("cube.ply");
    save_mesh(&unit_cube(), &path).unwrap();
    let stdout = run_ok(voleta_bin().args(["volume", "--in"]).arg(&path));
    assert_eq!(stdout.trim(), "1000000.00");

    let stdout = run_ok(
        voleta_bin()
            .args(["volume", "--in"])
            .arg(&path)
            .args(["--scale", "0.1"]),
    );
    assert_eq!(stdout.trim(), "1000.00");
}

#[test]
fn clean_mesh_removes_satellite_via_cli() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in.ply");
    let output = tmp.path().join("out.ply");
    let mesh = common::merge_meshes(
        &unit_cube(),
        &cube_at(nalgebra::Point3::new(2.0, 0.0, 0.0), 0.01),
    );
    save_mesh(&mesh, &input).unwrap();

    run_ok(
        voleta_bin()
            .args(["clean-mesh", "--in"])
            .arg(&input)
            .arg("--out")
            .arg(&output)
            .args(["--diameter-frac", "0.05"]),
    );
    let cleaned = voleta::meshkit::load_mesh(&output).unwrap();
    assert_eq!(cleaned.triangle_count(), 12);
}

#[test]
fn keyframes_emits_selection_json() {
    let tmp = tempfile::tempdir().unwrap();
    let frames_dir = tmp.path().join("frames");
    std::fs::create_dir_all(&frames_dir).unwrap();
    for i in 0..6 {
        // three distinct patterns, each twice
        common::write_pattern_png(
            &frames_dir.join(format!("img_{i:02}.png")),
            i / 2,
            64,
            48,
        );
    }
    let out = tmp.path().join("selection.json");
    run_ok(
        voleta_bin()
            .args(["keyframes", "--input"])
            .arg(&frames_dir)
            .args(["--hamming", "12", "--radii", "0:30:2", "--out"])
            .arg(&out),
    );
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let kept = json["kept"].as_array().unwrap();
    assert_eq!(kept.len(), 3, "duplicates should collapse: {json}");
    assert_eq!(json["frames"].as_array().unwrap().len(), 6);
    let hash = json["frames"][0]["hash"].as_str().unwrap();
    assert_eq!(hash.len(), 16, "hash should be 16 hex digits: {hash}");
}

#[test]
fn evaluate_writes_transform_and_chamfer_json() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a.ply");
    let b = tmp.path().join("b.ply");
    let sphere = voleta::meshkit::primitives::icosphere(2, 0.5);
    save_mesh(&sphere, &a).unwrap();
    save_mesh(
        &voleta::meshkit::translate_mesh(&sphere, nalgebra::Vector3::new(0.002, 0.0, 0.0)),
        &b,
    )
    .unwrap();
    let out = tmp.path().join("eval.json");
    run_ok(
        voleta_bin()
            .args(["evaluate", "--ours"])
            .arg(&a)
            .arg("--gt")
            .arg(&b)
            .args(["--samples", "3000", "--seed", "42", "--out"])
            .arg(&out),
    );
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(json["chamfer_with_transform"].as_f64().unwrap() < 1e-8);
    assert!(json["chamfer_without_transform"].as_f64().unwrap() > 0.0);
    let transform = json["transform"].as_array().unwrap();
    assert_eq!(transform.len(), 4);
    assert_eq!(transform[0].as_array().unwrap().len(), 4);
    assert_eq!(json["transform"][3][3], 1.0);
}

#[test]
fn run_and_report_round_trip_with_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dataset = tmp.path().join("dataset");
    std::fs::create_dir_all(&dataset).unwrap();
    common::build_synthetic_scene(&dataset, "1_sphere", 1, 2);

    let json_out = tmp.path().join("report.json");
    let config = tmp.path().join("config.json");
    std::fs::write(&config, r#"{ "samples": 4000, "seed": 7 }"#).unwrap();

    let stdout = run_ok(
        voleta_bin()
            .args(["run", "--dataset"])
            .arg(&dataset)
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(&json_out),
    );
    assert!(stdout.contains("few-shot"), "{stdout}");
    assert!(dataset.join("manifest.json").is_file());

    // re-render to CSV through the standalone report stage
    let csv_out = tmp.path().join("report.csv");
    run_ok(
        voleta_bin()
            .args(["report", "--in"])
            .arg(&json_out)
            .arg("--out")
            .arg(&csv_out),
    );
    let csv = std::fs::read_to_string(&csv_out).unwrap();
    assert!(csv.starts_with("level,scene_id,label"));
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().contains("few-shot"));

    // a dataset whose only scene cannot load exits nonzero
    let broken = tmp.path().join("broken");
    std::fs::create_dir_all(broken.join("1_scene").join("rgb")).unwrap();
    std::fs::write(broken.join("1_scene").join("rgb").join("bad.png"), b"not a png").unwrap();
    let status = voleta_bin()
        .args(["run", "--dataset"])
        .arg(&broken)
        .arg("--out")
        .arg(tmp.path().join("broken.json"))
        .output()
        .unwrap();
    assert!(!status.status.success());
}

#[test]
fn scale_subcommand_recovers_factor() {
    let tmp = tempfile::tempdir().unwrap();
    let fixture = common::build_synthetic_scene(tmp.path(), "1_scale", 1, 2);
    let out = tmp.path().join("scale.json");
    run_ok(
        voleta_bin()
            .args(["scale", "--scene"])
            .arg(&fixture.dir)
            .args(["--tolerance", "0.25", "--out"])
            .arg(&out),
    );
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let s_fine = json["s_fine"].as_f64().unwrap();
    assert!((s_fine - fixture.true_scale).abs() < 1e-12, "{s_fine}");
    assert_eq!(json["method"], "blocks");
    assert!(json["ppu"].as_f64().unwrap() > 0.0);
}

