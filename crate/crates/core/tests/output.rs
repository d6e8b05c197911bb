use std::fs;

use biconservative::io::{write_mesh, write_text, CsvTable};
use biconservative::mesh::{sample_mesh, Projection};
use biconservative::pipeline::{run_surface, Model, PipelineConfig};
use biconservative::surface::fixtures;

fn coarse(model: Model) -> PipelineConfig {
    let mut cfg = PipelineConfig::new(model);
    cfg.nu = 6;
    cfg.nv = 5;
    cfg
}

#[test]
fn obj_gets_a_channel_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let (_, mesh) = run_surface(&coarse(Model::R3)).unwrap();
    let path = dir.path().join("nested/r3.obj");
    let written = write_mesh(&path, &mesh).unwrap();
    assert_eq!(written, [path.clone(), path.with_extension("csv")]);

    let obj = fs::read_to_string(&path).unwrap();
    assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 30);
    assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 20);

    let side = CsvTable::parse(&fs::read_to_string(path.with_extension("csv")).unwrap()).unwrap();
    assert_eq!(side.rows.len(), 30);
    assert!(side.column("f").is_some() && side.column("K").is_some());
}

#[test]
fn ply_declares_counts_and_channels() {
    let dir = tempfile::tempdir().unwrap();
    let (_, mesh) = run_surface(&coarse(Model::S3)).unwrap();
    let path = dir.path().join("s3.ply");
    assert_eq!(write_mesh(&path, &mesh).unwrap(), [path.clone()]);
    let ply = fs::read_to_string(&path).unwrap();
    assert!(ply.starts_with("ply\n"));
    assert!(ply.contains("element vertex 30\n"));
    assert!(ply.contains("property double f\n"));
    assert!(ply.contains("end_header\n"));
}

#[test]
fn unknown_extension_is_rejected_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let (_, mesh) = run_surface(&coarse(Model::R3)).unwrap();
    let path = dir.path().join("mesh.stl");
    assert_eq!(write_mesh(&path, &mesh).unwrap_err().exit_code(), 2);
    assert!(!path.exists());
}

#[test]
fn write_text_reports_the_failing_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    write_text(&blocker, "x").unwrap();
    let err = write_text(&blocker.join("below.csv"), "y").unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("file"), "{err}");
}

#[test]
fn stereographic_pole_on_the_surface_suggests_another() {
    let proj: Projection = "stereographic:+e1".parse().unwrap();
    let err = sample_mesh(&fixtures::great_sphere(), 9, 8, proj).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("try pole"), "{msg}");
    let ok: Projection = "stereographic:-e4".parse().unwrap();
    let mesh = sample_mesh(&fixtures::great_sphere(), 8, 8, ok).unwrap();
    assert!(mesh.vertices.iter().flatten().all(|x| x.is_finite()));
}

#[test]
fn poincare_ball_keeps_h3_inside_the_unit_ball() {
    let (_, mesh) = run_surface(&coarse(Model::H3)).unwrap();
    assert_eq!(mesh.projection, Projection::PoincareBall);
    for v in &mesh.vertices {
        assert!(v.iter().map(|x| x * x).sum::<f64>() < 1.0);
    }
}
