//! `analyze` and `synth`: photon-statistics fits on stream files and the
//! Monte Carlo generator that produces them.

use std::fs;
use std::path::{Path, PathBuf};

use photon_stats::{
    correlate, dop_from_hwp_scan, fit_antibunching_with, fit_power_dependence, generate_stream, synthesize_hwp_scan,
    AntibunchFit, DetectorModel, EmitterModel, FitOptions, HwpFit, HwpScan, PhotonError, PowerFit, PowerPoint,
    TimestampStream,
};
use serde::{Deserialize, Serialize};

use crate::config::{AnalysisKind, AnalyzeParams, RunConfig, SynthKind, SynthParams};
use crate::{write_atomic, CliError};

/// Extension of binary stream files.
pub const STREAM_EXT: &str = "pstm";

/// Loads a stream, attaching the path to parse errors.
pub fn load_stream(path: &Path) -> Result<TimestampStream, CliError> {
    TimestampStream::load(path).map_err(|e| match e {
        PhotonError::Parse { offset, message } => CliError::Parse {
            path: path.to_path_buf(),
            offset,
            message,
        },
        PhotonError::Io(source) => CliError::io(path, source),
        e => e.into(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct G2Report {
    pub input: PathBuf,
    pub events_plus: usize,
    pub events_minus: usize,
    pub duration_s: f64,
    pub bin_width_ps: u64,
    pub fit: AntibunchFit,
    pub t_sigma_ns: f64,
    pub g2_0_sigma: f64,
}

fn g2_fit(stream: &TimestampStream, p: &AnalyzeParams) -> Result<(photon_stats::CorrelationHistogram, AntibunchFit), CliError> {
    let hist = correlate(stream, p.bin_width_ps, p.max_lag_ps)?;
    let opts = FitOptions {
        jitter_sigma_ps: p.jitter_sigma_ps,
        ..FitOptions::default()
    };
    let fit = fit_antibunching_with(&hist, &opts)?;
    Ok((hist, fit))
}

/// Antibunching fit of one stream. The histogram is written next to the
/// report when `histogram_csv` is given.
pub fn analyze_g2(path: &Path, p: &AnalyzeParams, histogram_csv: Option<&Path>) -> Result<G2Report, CliError> {
    use photon_stats::Channel;
    let stream = load_stream(path)?;
    let (hist, fit) = g2_fit(&stream, p)?;
    if let Some(csv) = histogram_csv {
        let mut buf = Vec::new();
        hist.write_csv(&mut buf).map_err(|e| CliError::io(csv, e))?;
        write_atomic(csv, &buf)?;
    }
    Ok(G2Report {
        input: path.to_path_buf(),
        events_plus: stream.count(Channel::Plus),
        events_minus: stream.count(Channel::Minus),
        duration_s: stream.duration_ps as f64 * 1e-12,
        bin_width_ps: p.bin_width_ps,
        t_sigma_ns: fit.t_sigma_ns(),
        g2_0_sigma: fit.g2_0_sigma(),
        fit,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerEntry {
    pub input: PathBuf,
    pub power_uw: f64,
    pub t_ns: f64,
    pub t_sigma_ns: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub points: Vec<PowerEntry>,
    pub fit: PowerFit,
}

/// Stream files among `inputs`, expanding directories (sorted by name).
pub fn stream_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| CliError::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == STREAM_EXT))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

/// Rise time against pump power. Each stream's power comes from its sidecar.
pub fn analyze_power(p: &AnalyzeParams) -> Result<PowerReport, CliError> {
    let mut points = Vec::new();
    for f in stream_files(&p.inputs)? {
        let stream = load_stream(&f)?;
        let power_uw = stream
            .metadata
            .excitation_power_uw
            .ok_or_else(|| CliError::Config(format!("{} has no excitation power in its sidecar", f.display())))?;
        let (_, fit) = g2_fit(&stream, p)?;
        points.push(PowerEntry {
            input: f,
            power_uw,
            t_ns: fit.t_ns,
            t_sigma_ns: fit.t_sigma_ns(),
        });
    }
    let series: Vec<PowerPoint> = points
        .iter()
        .map(|e| PowerPoint {
            power_uw: e.power_uw,
            t_ns: e.t_ns,
            t_sigma_ns: e.t_sigma_ns,
        })
        .collect();
    let fit = fit_power_dependence(&series)?;
    Ok(PowerReport { points, fit })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HwpReport {
    pub input: PathBuf,
    pub fit: HwpFit,
}

/// Degree of polarization from a JSON HWP scan.
pub fn analyze_hwp(path: &Path) -> Result<HwpReport, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let scan: HwpScan = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        offset: byte_offset(&text, e.line(), e.column()),
        message: e.to_string(),
    })?;
    let fit = dop_from_hwp_scan(&scan)?;
    if fit.min_clipped {
        eprintln!("warning: fitted minimum below zero, clipped");
    }
    Ok(HwpReport {
        input: path.to_path_buf(),
        fit,
    })
}

/// Byte offset of a 1-based line and column.
fn byte_offset(text: &str, line: usize, column: usize) -> u64 {
    let start: usize = text.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum();
    (start + column.saturating_sub(1)) as u64
}

/// Runs the configured analysis, writes `<kind>_report.json` into the
/// output directory and returns the report.
pub fn analyze(cfg: &RunConfig) -> Result<serde_json::Value, CliError> {
    cfg.validate()?;
    let p = &cfg.analyze;
    let out = &cfg.output_dir;
    let (name, report) = match p.kind {
        AnalysisKind::G2 => {
            let mut reports = Vec::new();
            for f in stream_files(&p.inputs)? {
                let stem = f.file_stem().map_or("stream".into(), |s| s.to_string_lossy().into_owned());
                let csv = out.join(format!("{stem}_g2.csv"));
                reports.push(analyze_g2(&f, p, Some(&csv))?);
            }
            ("g2", serde_json::to_value(reports)?)
        }
        AnalysisKind::Power => ("power", serde_json::to_value(analyze_power(p)?)?),
        AnalysisKind::Hwp => {
            let reports = p.inputs.iter().map(|f| analyze_hwp(f)).collect::<Result<Vec<_>, _>>()?;
            ("hwp", serde_json::to_value(reports)?)
        }
    };
    write_atomic(
        &out.join(format!("{name}_report.json")),
        serde_json::to_string_pretty(&report)?.as_bytes(),
    )?;
    Ok(report)
}

pub fn emitter_model(s: &SynthParams, p_exc_uw: f64) -> EmitterModel {
    EmitterModel {
        tau1_ns: s.tau1_ns,
        alpha: s.alpha,
        p_exc_uw,
        emitters: s.emitters,
        polarization_deg: s.polarization_deg,
    }
}

pub fn detector_model(s: &SynthParams) -> DetectorModel {
    DetectorModel {
        efficiency: s.efficiency,
        dark_rate_hz: s.dark_rate_hz,
        jitter_sigma_ps: s.jitter_sigma_ps,
        ..DetectorModel::default()
    }
}

/// Writes synthetic data into the output directory and returns the files.
///
/// `stream` writes `stream.pstm`; `power_series` writes one stream per
/// power into `power_series/`, seeded `seed + i`; `hwp` writes
/// `hwp_scan.json`.
pub fn synthesize(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    cfg.validate()?;
    let s = &cfg.synth;
    let out = &cfg.output_dir;
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let det = detector_model(s);
    match s.kind {
        SynthKind::Stream => {
            let path = out.join(format!("stream.{STREAM_EXT}"));
            generate_stream(&emitter_model(s, s.p_exc_uw), &det, s.duration_s, cfg.seed).save(&path)?;
            Ok(vec![path])
        }
        SynthKind::PowerSeries => {
            let dir = out.join("power_series");
            fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
            let mut files = Vec::new();
            for (i, &pw) in s.powers_uw.iter().enumerate() {
                let path = dir.join(format!("p{i:02}_{pw}uW.{STREAM_EXT}"));
                generate_stream(&emitter_model(s, pw), &det, s.duration_s, cfg.seed + i as u64).save(&path)?;
                files.push(path);
            }
            Ok(files)
        }
        SynthKind::Hwp => {
            let path = out.join("hwp_scan.json");
            let scan =
                synthesize_hwp_scan(&emitter_model(s, s.p_exc_uw), s.p_true, &s.angles_deg, s.samples_per_angle, cfg.seed);
            write_atomic(&path, serde_json::to_string_pretty(&scan)?.as_bytes())?;
            Ok(vec![path])
        }
    }
}
