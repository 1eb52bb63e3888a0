//! The run configuration file: one TOML document, flat tables per concern.

use std::path::{Path, PathBuf};

use plasmofiber::fdtd::Axis;
use plasmofiber::geometry::RunControl;
use plasmofiber::units::wavelength_grid;
use plasmofiber::{CpmlParams, SceneOptions};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const RESOLUTION_RANGE: (f64, f64) = (1.0, 20.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Simulate,
    Sweep,
    Analyze,
    Synthesize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

/// A coordinate axis or an arbitrary direction, normalized on use.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Orientation {
    Axis(Axis),
    Vector([f64; 3]),
}

impl Orientation {
    pub fn unit(self) -> Result<[f64; 3], CliError> {
        match self {
            Orientation::Axis(a) => Ok(a.unit()),
            Orientation::Vector(v) => {
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if !(n > 0.0 && n.is_finite()) {
                    return Err(CliError::Config(format!("orientation {v:?} has no direction")));
                }
                Ok(v.map(|x| x / n))
            }
        }
    }
}

impl std::str::FromStr for Orientation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "x" => Ok(Orientation::Axis(Axis::X)),
            "y" => Ok(Orientation::Axis(Axis::Y)),
            "z" => Ok(Orientation::Axis(Axis::Z)),
            _ => {
                let v: Vec<f64> = s
                    .split(',')
                    .map(|t| t.trim().parse::<f64>().map_err(|e| e.to_string()))
                    .collect::<Result<_, _>>()?;
                let v: [f64; 3] = v
                    .try_into()
                    .map_err(|_| format!("expected x, y, z or three comma-separated numbers, got {s:?}"))?;
                Ok(Orientation::Vector(v))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneParams {
    /// Rod tip to dipole, nm.
    pub d_nm: f64,
    /// Rod length, nm. Absent for the bare fiber.
    pub rod_length_nm: Option<f64>,
    pub fiber_diameter_nm: f64,
    pub resolution_nm: f64,
    pub orientation: Orientation,
    pub precision: Precision,
    pub margin_nm: f64,
    pub plane_distance_nm: f64,
    pub mode_half_width_nm: Option<f64>,
    pub radiation_box_margin_nm: f64,
    /// Rod axis displacement into the fiber from tangent contact, nm.
    pub rod_inset_nm: f64,
    /// Free space around the dipole in the vacuum reference run, nm.
    pub vacuum_half_width_nm: f64,
    pub wavelength_min_nm: f64,
    pub wavelength_max_nm: f64,
    pub wavelength_step_nm: f64,
    pub max_steps: usize,
    pub decay_threshold: f64,
    pub courant_safety: f64,
    pub cpml_cells: usize,
}

impl Default for SceneParams {
    fn default() -> Self {
        let opts = SceneOptions::default();
        let run = RunControl::default();
        Self {
            d_nm: 25.0,
            rod_length_nm: Some(160.0),
            fiber_diameter_nm: 530.0,
            resolution_nm: opts.resolution,
            orientation: Orientation::Axis(Axis::Z),
            precision: Precision::F32,
            margin_nm: opts.margin_nm,
            plane_distance_nm: opts.plane_distance_nm,
            mode_half_width_nm: opts.mode_half_width_nm,
            radiation_box_margin_nm: opts.radiation_box_margin_nm,
            rod_inset_nm: opts.rod_inset_nm,
            vacuum_half_width_nm: 300.0,
            wavelength_min_nm: 600.0,
            wavelength_max_nm: 900.0,
            wavelength_step_nm: 5.0,
            max_steps: run.max_steps,
            decay_threshold: run.decay_threshold,
            courant_safety: run.courant_safety,
            cpml_cells: CpmlParams::default().thickness,
        }
    }
}

impl SceneParams {
    pub fn wavelengths(&self) -> Vec<f64> {
        wavelength_grid(self.wavelength_min_nm, self.wavelength_max_nm, self.wavelength_step_nm)
    }

    pub fn scene_options(&self) -> SceneOptions {
        SceneOptions {
            resolution: self.resolution_nm,
            margin_nm: self.margin_nm,
            plane_distance_nm: self.plane_distance_nm,
            mode_half_width_nm: self.mode_half_width_nm,
            dipole_gap_nm: None,
            rod_inset_nm: self.rod_inset_nm,
            radiation_box_margin_nm: self.radiation_box_margin_nm,
            wavelengths: self.wavelengths(),
            cpml: CpmlParams {
                thickness: self.cpml_cells,
                ..CpmlParams::default()
            },
            run: RunControl {
                courant_safety: self.courant_safety,
                max_steps: self.max_steps,
                decay_threshold: self.decay_threshold,
                ..RunControl::default()
            },
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let (lo, hi) = RESOLUTION_RANGE;
        if !(lo..=hi).contains(&self.resolution_nm) {
            return Err(CliError::Config(format!(
                "resolution {} nm outside [{lo}, {hi}]",
                self.resolution_nm
            )));
        }
        if !(self.wavelength_step_nm > 0.0 && self.wavelength_min_nm > 0.0 && self.wavelength_max_nm >= self.wavelength_min_nm)
        {
            return Err(CliError::Config("wavelength grid must be positive and increasing".into()));
        }
        if self.max_steps == 0 {
            return Err(CliError::Config("max_steps must be positive".into()));
        }
        self.orientation.unit()?;
        Ok(())
    }
}

/// Emitter spectrum used to average the observables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QdParams {
    pub center_nm: f64,
    pub fwhm_nm: f64,
}

impl Default for QdParams {
    fn default() -> Self {
        Self {
            center_nm: 760.0,
            fwhm_nm: 50.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepParams {
    pub d_nm: Vec<f64>,
    pub rod_length_nm: Vec<f64>,
    /// Sweep points run concurrently.
    pub workers: usize,
}

impl Default for SweepParams {
    fn default() -> Self {
        Preset::Fig1c.sweep()
    }
}

/// Ready-made sweep grids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// `d` from 0 to 100 nm in 5 nm steps at `L` = 160 nm.
    Fig1c,
    /// `d` from 5 to 50 nm at `L` of 150, 160 and 170 nm.
    Fig3,
}

impl Preset {
    pub fn sweep(self) -> SweepParams {
        match self {
            Preset::Fig1c => SweepParams {
                d_nm: (0..=20).map(|i| 5.0 * i as f64).collect(),
                rod_length_nm: vec![160.0],
                workers: 1,
            },
            Preset::Fig3 => SweepParams {
                d_nm: (1..=10).map(|i| 5.0 * i as f64).collect(),
                rod_length_nm: vec![150.0, 160.0, 170.0],
                workers: 1,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisKind {
    G2,
    Power,
    Hwp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeParams {
    pub kind: AnalysisKind,
    /// Stream files, or for `power` also directories of streams.
    pub inputs: Vec<PathBuf>,
    pub bin_width_ps: u64,
    pub max_lag_ps: u64,
    /// Detector timing jitter; bins within two sigma of zero lag are not fitted.
    pub jitter_sigma_ps: f64,
}

impl Default for AnalyzeParams {
    fn default() -> Self {
        Self {
            kind: AnalysisKind::G2,
            inputs: Vec::new(),
            bin_width_ps: 500,
            max_lag_ps: 100_000,
            jitter_sigma_ps: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    Stream,
    PowerSeries,
    Hwp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub kind: SynthKind,
    pub tau1_ns: f64,
    /// Excitation rate per unit power, 1/(ns·µW).
    pub alpha: f64,
    pub p_exc_uw: f64,
    /// Pump powers of a power series, µW.
    pub powers_uw: Vec<f64>,
    pub emitters: usize,
    pub duration_s: f64,
    pub efficiency: f64,
    pub dark_rate_hz: f64,
    pub jitter_sigma_ps: f64,
    /// Degree of polarization of an HWP scan.
    pub p_true: f64,
    pub polarization_deg: f64,
    pub angles_deg: Vec<f64>,
    pub samples_per_angle: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            kind: SynthKind::Stream,
            tau1_ns: 20.0,
            alpha: 1.0,
            p_exc_uw: 0.05,
            powers_uw: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            emitters: 1,
            duration_s: 0.1,
            efficiency: 1.0,
            dark_rate_hz: 0.0,
            jitter_sigma_ps: 0.0,
            p_true: 0.86,
            polarization_deg: 0.0,
            angles_deg: (0..=18).map(|k| 10.0 * k as f64).collect(),
            samples_per_angle: 20,
        }
    }
}

impl SynthParams {
    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(format!("synth: {m}")));
        if !(self.tau1_ns > 0.0) || !(self.alpha > 0.0) {
            return bad("tau1_ns and alpha must be positive");
        }
        if !(self.p_exc_uw > 0.0) || self.powers_uw.iter().any(|p| !(*p > 0.0)) {
            return bad("pump powers must be positive");
        }
        if self.emitters == 0 {
            return bad("need at least one emitter");
        }
        if !(self.duration_s > 0.0) {
            return bad("duration must be positive");
        }
        if !(0.0..=1.0).contains(&self.efficiency) || !(self.dark_rate_hz >= 0.0) || !(self.jitter_sigma_ps >= 0.0) {
            return bad("detector needs efficiency in [0, 1] and nonnegative dark rate and jitter");
        }
        if !(0.0..=1.0).contains(&self.p_true) {
            return bad("p_true must lie in [0, 1]");
        }
        match self.kind {
            SynthKind::PowerSeries if self.powers_uw.is_empty() => bad("powers_uw is empty"),
            SynthKind::Hwp if self.angles_deg.is_empty() || self.samples_per_angle == 0 => {
                bad("HWP scan needs angles and samples")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub scene: SceneParams,
    #[serde(default)]
    pub qd: QdParams,
    #[serde(default)]
    pub sweep: SweepParams,
    #[serde(default)]
    pub analyze: AnalyzeParams,
    #[serde(default)]
    pub synth: SynthParams,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("plasmofiber-out")
}

fn default_seed() -> u64 {
    1
}

impl RunConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            output_dir: default_output_dir(),
            seed: default_seed(),
            scene: SceneParams::default(),
            qd: QdParams::default(),
            sweep: SweepParams::default(),
            analyze: AnalyzeParams::default(),
            synth: SynthParams::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CliError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// Canonical text: every field written out, tables in declaration order.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.scene.validate()?;
        if !(self.qd.fwhm_nm > 0.0) {
            return Err(CliError::Config("qd.fwhm_nm must be positive".into()));
        }
        match self.mode {
            Mode::Sweep => {
                if self.sweep.d_nm.is_empty() || self.sweep.rod_length_nm.is_empty() {
                    return Err(CliError::Config("sweep lists must be nonempty".into()));
                }
                if self.sweep.d_nm.iter().any(|d| !(*d >= 0.0)) {
                    return Err(CliError::Config("sweep d values must be >= 0".into()));
                }
            }
            Mode::Analyze if self.analyze.inputs.is_empty() => {
                return Err(CliError::Config("analyze needs at least one input".into()));
            }
            Mode::Analyze if self.analyze.bin_width_ps == 0 || self.analyze.max_lag_ps < self.analyze.bin_width_ps => {
                return Err(CliError::Config("analyze needs 0 < bin_width_ps <= max_lag_ps".into()));
            }
            Mode::Synthesize => self.synth.validate()?,
            _ => {}
        }
        Ok(())
    }
}
