use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use photon_stats::{PhotonError, PowerFit};
use plasmofiber_cli::analysis::{analyze, analyze_g2, load_stream, synthesize, G2Report, PowerReport};
use plasmofiber_cli::config::{AnalysisKind, Mode, SynthKind};
use plasmofiber_cli::pipeline::{point_dir, run_sweep};
use plasmofiber_cli::{CliError, RunConfig};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_plasmofiber"))
}

#[test]
fn shipped_configs_are_canonical() {
    let mut seen = 0;
    for entry in fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "toml") {
            continue;
        }
        let text = fs::read_to_string(&path).unwrap();
        let cfg = RunConfig::parse(&text).unwrap();
        cfg.validate().unwrap();
        let written: toml::Value = toml::from_str(&cfg.to_toml()).unwrap();
        let original: toml::Value = toml::from_str(&text).unwrap();
        assert_eq!(written, original, "{}", path.display());
        seen += 1;
    }
    assert!(seen >= 3);
}

#[test]
fn config_subcommand_prints_a_parseable_document() {
    let out = bin().args(["config", "--mode", "sweep"]).output().unwrap();
    assert!(out.status.success());
    let cfg = RunConfig::parse(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(cfg, RunConfig::new(Mode::Sweep));
}

fn synth_config(dir: &Path, kind: SynthKind) -> RunConfig {
    let mut c = RunConfig::new(Mode::Synthesize);
    c.output_dir = dir.to_path_buf();
    c.synth.kind = kind;
    c
}

#[test]
fn synthetic_stream_rise_time_is_recovered() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = synth_config(dir.path(), SynthKind::Stream);
    c.seed = 1;
    let files = synthesize(&c).unwrap();

    c.mode = Mode::Analyze;
    c.analyze.inputs = files;
    let report: Vec<G2Report> = serde_json::from_value(analyze(&c).unwrap()).unwrap();
    let t = report[0].fit.t_ns;
    assert!((t / 10.0 - 1.0).abs() < 0.05, "T = {t}");
    assert!(dir.path().join("g2_report.json").exists());
    assert!(dir.path().join("stream_g2.csv").exists());
}

#[test]
fn power_series_directory_recovers_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let (alpha, tau1) = (0.001, 280.0);
    let mut c = synth_config(dir.path(), SynthKind::PowerSeries);
    c.synth.alpha = alpha;
    c.synth.tau1_ns = tau1;
    c.synth.duration_s = 1.0;
    c.seed = 20;
    let files = synthesize(&c).unwrap();
    assert_eq!(files.len(), 5);

    c.mode = Mode::Analyze;
    c.analyze.kind = AnalysisKind::Power;
    c.analyze.inputs = vec![dir.path().join("power_series")];
    c.analyze.bin_width_ps = 10_000;
    c.analyze.max_lag_ps = 2_000_000;
    let report: PowerReport = serde_json::from_value(analyze(&c).unwrap()).unwrap();
    assert_eq!(report.points.len(), 5);
    let PowerFit {
        alpha: a,
        alpha_sigma,
        tau1_ns,
        tau1_sigma_ns,
        ..
    } = report.fit;
    assert!((a - alpha).abs() < 3.0 * alpha_sigma, "{a} ± {alpha_sigma}");
    assert!((tau1_ns - tau1).abs() < 3.0 * tau1_sigma_ns, "{tau1_ns} ± {tau1_sigma_ns}");
}

#[test]
fn hwp_scan_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = synth_config(dir.path(), SynthKind::Hwp);
    c.synth.p_true = 0.39;
    c.synth.samples_per_angle = 50;
    let files = synthesize(&c).unwrap();
    let out = bin()
        .arg("--output-dir")
        .arg(dir.path())
        .arg("analyze")
        .arg("hwp")
        .args(&files)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let p = v[0]["fit"]["p"].as_f64().unwrap();
    assert!((p - 0.39).abs() < 0.03, "P = {p}");
}

#[test]
fn empty_stream_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.pstm");
    fs::write(&path, b"").unwrap();
    match load_stream(&path) {
        Err(CliError::Parse { offset, .. }) => assert_eq!(offset, 0),
        other => panic!("expected a parse error, got {other:?}"),
    }
    let c = RunConfig::new(Mode::Analyze);
    assert!(matches!(analyze_g2(&path, &c.analyze, None), Err(CliError::Parse { .. })));

    let out = bin().args(["analyze", "g2"]).arg(&path).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("parse error at byte 0"));
}

#[test]
fn truncated_record_reports_its_offset() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = synth_config(dir.path(), SynthKind::Stream);
    c.synth.duration_s = 1e-4;
    let path = synthesize(&c).unwrap().remove(0);
    let mut bytes = fs::read(&path).unwrap();
    let n = bytes.len();
    bytes.truncate(n - 4);
    fs::write(&path, &bytes).unwrap();
    match load_stream(&path) {
        Err(CliError::Parse { offset, .. }) => assert_eq!(offset, (n - 9) as u64),
        Err(CliError::Photon(PhotonError::Parse { offset, .. })) => panic!("path not attached at {offset}"),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn bad_thread_override_is_rejected() {
    let out = bin()
        .env(plasmofiber_cli::THREADS_ENV, "zero")
        .args(["config"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

/// Tiny, deliberately unconverged sweep: cheap enough to run twice.
fn toy_sweep(dir: &Path) -> RunConfig {
    let mut c = RunConfig::new(Mode::Sweep);
    c.output_dir = dir.to_path_buf();
    let s = &mut c.scene;
    s.resolution_nm = 20.0;
    s.fiber_diameter_nm = 300.0;
    s.margin_nm = 60.0;
    s.plane_distance_nm = 200.0;
    s.vacuum_half_width_nm = 120.0;
    s.cpml_cells = 8;
    s.max_steps = 60;
    s.wavelength_min_nm = 700.0;
    s.wavelength_max_nm = 800.0;
    s.wavelength_step_nm = 50.0;
    c.qd.center_nm = 750.0;
    c.sweep.d_nm = vec![0.0, 20.0];
    c.sweep.rod_length_nm = vec![60.0];
    c.sweep.workers = 2;
    c
}

#[test]
fn sweep_resumes_to_the_same_table() {
    let dir = tempfile::tempdir().unwrap();
    let c = toy_sweep(dir.path());
    let first = run_sweep(&c).unwrap();
    assert!(first.failed.is_empty(), "{:?}", first.failed);
    assert_eq!((first.computed, first.skipped, first.rows), (2, 0, 2));
    let table = fs::read(dir.path().join("sweep.csv")).unwrap();
    let header = String::from_utf8_lossy(&table).lines().next().unwrap().to_string();
    assert!(header.starts_with("d_nm,L_nm,F_Pz,lambda_at_max_nm,P,E"), "{header}");

    // Interrupted after the first point: the second point's record and the
    // aggregate are missing, and a half-written temporary is left behind.
    let second = point_dir(dir.path(), 20.0, 60.0);
    fs::remove_file(second.join("result.json")).unwrap();
    fs::write(second.join("result.json.tmp"), b"{\"trunc").unwrap();
    fs::remove_file(dir.path().join("sweep.csv")).unwrap();
    let cached = fs::read_dir(dir.path().join("cache")).unwrap().count();

    let again = run_sweep(&c).unwrap();
    assert_eq!((again.computed, again.skipped), (1, 1));
    assert_eq!(fs::read(dir.path().join("sweep.csv")).unwrap(), table);
    // every run came from the cache
    assert_eq!(fs::read_dir(dir.path().join("cache")).unwrap().count(), cached);
    assert!(second.join("spectra.csv").exists());
}

#[test]
fn failed_points_are_recorded_and_the_rest_complete() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = toy_sweep(dir.path());
    c.sweep.d_nm = vec![0.0];
    // shorter than the rod diameter
    c.sweep.rod_length_nm = vec![10.0, 60.0];
    c.sweep.workers = 1;
    let r = run_sweep(&c).unwrap();
    assert_eq!(r.rows, 1);
    assert_eq!(r.failed.len(), 1);
    assert_eq!(r.failed[0].1, 10.0);
    let failures = fs::read_to_string(dir.path().join("failures.csv")).unwrap();
    assert!(failures.contains("rod length"), "{failures}");
    assert!(point_dir(dir.path(), 0.0, 10.0).join("error.txt").exists());

    // the binary signals the partial failure through its exit code
    let cfg_path = dir.path().join("run.toml");
    fs::write(&cfg_path, c.to_toml()).unwrap();
    let out = bin().arg("--config").arg(&cfg_path).arg("sweep").output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn vacuum_references_are_shared_between_separations() {
    use plasmofiber::Axis;
    use plasmofiber_cli::pipeline::{point_scene, vacuum_scene, RunCache};
    let c = toy_sweep(Path::new("."));
    let key = |d: f64| {
        let s = point_scene(&c.scene, d, Some(60.0), Axis::Z.unit()).unwrap();
        RunCache::key(&vacuum_scene(&s, 120.0).unwrap(), c.scene.precision, false)
    };
    // same sub-cell offset
    assert_eq!(key(0.0), key(40.0));
    assert_ne!(key(0.0), key(10.0));
}
