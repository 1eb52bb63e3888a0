//! Emitter-level observables from monitor outputs: Purcell spectra, guided
//! coupling fractions, degree of polarization and guided intensity
//! enhancement, all averaged over the emitter's spectrum.
//!
//! Orientation-indexed arrays are ordered `[x, y, z]`. With the rod along
//! the fiber axis (`z`) and the emitter on the `x = 0` mirror plane, the `x`
//! and `z` dipoles excite orthogonal HE11 polarizations and have no cross
//! term in their total power, so a dipole tilted in the `x`–`z` plane is an
//! incoherent mix of the two.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fiber::{overlap_coupling, Direction, FiberError, GuidedMode};
use crate::geometry::{MODE_PLANE_MINUS, MODE_PLANE_PLUS, RADIATION_BOX};
use crate::monitors::{MonitorSet, Spectrum, Termination};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservablesError {
    #[error("wavelength grid mismatch: {0}")]
    GridMismatch(String),
    #[error("all weighted couplings vanish")]
    ZeroDenominator,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("monitor {0} missing from run")]
    MissingMonitor(String),
    #[error(transparent)]
    Fiber(#[from] FiberError),
}

type Result<T> = std::result::Result<T, ObservablesError>;

fn same_grid(a: &[f64], b: &[f64], what: &str) -> Result<()> {
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| (x - y).abs() > 1e-9) {
        return Err(ObservablesError::GridMismatch(what.into()));
    }
    Ok(())
}

/// Gaussian emission spectrum sampled on a wavelength grid, weights summing to 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QdSpectrum {
    pub center: f64,
    pub fwhm: f64,
    pub wavelengths: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QdSpectrum {
    pub fn gaussian(center: f64, fwhm: f64, wavelengths: &[f64]) -> Result<Self> {
        if !(fwhm > 0.0) || wavelengths.is_empty() {
            return Err(ObservablesError::Invalid(format!(
                "need FWHM > 0 and a nonempty grid, got FWHM {fwhm}"
            )));
        }
        let sigma = fwhm / (8.0 * std::f64::consts::LN_2).sqrt();
        let raw: Vec<f64> = wavelengths
            .iter()
            .map(|l| (-0.5 * ((l - center) / sigma).powi(2)).exp())
            .collect();
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) {
            return Err(ObservablesError::Invalid(format!(
                "spectrum centred at {center} nm has no weight on the grid"
            )));
        }
        Ok(Self {
            center,
            fwhm,
            wavelengths: wavelengths.to_vec(),
            weights: raw.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn average(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// Guided fraction of the emitted power for `x`, `y` and `z` dipoles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingTriple {
    pub wavelengths: Vec<f64>,
    pub t: [Vec<f64>; 3],
}

impl CouplingTriple {
    pub fn new(wavelengths: Vec<f64>, t: [Vec<f64>; 3]) -> Result<Self> {
        for (i, ti) in t.iter().enumerate() {
            if ti.len() != wavelengths.len() {
                return Err(ObservablesError::GridMismatch(format!("coupling {i}")));
            }
            if let Some(v) = ti.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(ObservablesError::Invalid(format!("coupling {v} outside [0, 1]")));
            }
        }
        Ok(Self { wavelengths, t })
    }
}

/// Emitted power relative to the vacuum reference, one orientation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PurcellSpectrum {
    pub wavelengths: Vec<f64>,
    /// Total (radiated + absorbed) enhancement.
    pub total: Vec<f64>,
    /// Share of the emitted power leaving the radiation box, when recorded.
    pub radiative_efficiency: Option<Vec<f64>>,
}

impl PurcellSpectrum {
    pub fn constant(wavelengths: Vec<f64>, f: f64) -> Self {
        let total = vec![f; wavelengths.len()];
        Self {
            wavelengths,
            total,
            radiative_efficiency: None,
        }
    }
}

/// The spectra a finished run contributes to the observables, small enough
/// to cache on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub wavelengths: Vec<f64>,
    pub resolution: f64,
    pub steps: usize,
    pub decayed: bool,
    /// Emitted (radiated + absorbed) power.
    pub source_power: Vec<f64>,
    /// `|J̃|²` of the source current.
    pub current_norm_sqr: Vec<f64>,
    pub radiated: Option<Vec<f64>>,
    pub absorbed: Vec<f64>,
    /// Guided fraction of the emitted power, both directions.
    pub guided_fraction: Option<Vec<f64>>,
}

impl RunSummary {
    /// `modes` projects the mode planes when given, with the distance from
    /// the planes to the scatterer.
    pub fn from_run(run: &MonitorSet, modes: Option<(&[GuidedMode], Option<f64>)>) -> Result<Self> {
        let guided_fraction = match modes {
            Some((m, dist)) => Some(coupled_fraction(run, m, dist)?.values),
            None => None,
        };
        Ok(Self {
            wavelengths: run.wavelengths.clone(),
            resolution: run.resolution,
            steps: run.steps,
            decayed: run.termination == Some(Termination::Decayed),
            source_power: run.source.power(),
            current_norm_sqr: run.source.j.iter().map(|j| j.norm_sqr()).collect(),
            radiated: run.flux(RADIATION_BOX).map(|f| f.values),
            absorbed: run.absorbed_power().values,
            guided_fraction,
        })
    }

    /// Power per unit `|J̃|²`, which removes the pulse spectrum.
    fn normalized_power(&self) -> Vec<f64> {
        self.source_power
            .iter()
            .zip(&self.current_norm_sqr)
            .map(|(p, j)| p / j)
            .collect()
    }
}

/// Ratio of the dipole's emitted power in `coupled` to that in `vacuum`.
pub fn purcell_spectrum(coupled: &MonitorSet, vacuum: &MonitorSet) -> Result<PurcellSpectrum> {
    purcell_from_summaries(&RunSummary::from_run(coupled, None)?, &RunSummary::from_run(vacuum, None)?)
}

pub fn purcell_from_summaries(coupled: &RunSummary, vacuum: &RunSummary) -> Result<PurcellSpectrum> {
    same_grid(&coupled.wavelengths, &vacuum.wavelengths, "coupled vs vacuum")?;
    if (coupled.resolution - vacuum.resolution).abs() > 1e-12 {
        return Err(ObservablesError::GridMismatch(format!(
            "resolution {} vs {}",
            coupled.resolution, vacuum.resolution
        )));
    }
    let total = coupled
        .normalized_power()
        .iter()
        .zip(vacuum.normalized_power())
        .map(|(c, v)| c / v)
        .collect();
    let radiative_efficiency = coupled.radiated.as_ref().map(|r| {
        r.iter()
            .zip(&coupled.source_power)
            .map(|(r, s)| r / s)
            .collect()
    });
    Ok(PurcellSpectrum {
        wavelengths: coupled.wavelengths.clone(),
        total,
        radiative_efficiency,
    })
}

/// Largest enhancement and the wavelength where it occurs.
pub fn max_purcell(spec: &PurcellSpectrum) -> (f64, f64) {
    spec.total
        .iter()
        .zip(&spec.wavelengths)
        .fold((f64::NEG_INFINITY, f64::NAN), |acc, (&f, &l)| if f > acc.0 { (f, l) } else { acc })
}

/// Guided fraction of the emitted power in one run, both fiber directions.
pub fn coupled_fraction(
    run: &MonitorSet,
    modes: &[GuidedMode],
    scatterer_distance_nm: Option<f64>,
) -> Result<Spectrum> {
    let source = run.source_power();
    let mut total = vec![0.0; run.wavelengths.len()];
    for (name, dir) in [(MODE_PLANE_PLUS, Direction::Forward), (MODE_PLANE_MINUS, Direction::Backward)] {
        let plane = run
            .surface(name)
            .ok_or_else(|| ObservablesError::MissingMonitor(name.into()))?;
        let p = overlap_coupling(plane, modes, dir, run.resolution, &source, scatterer_distance_nm)?;
        for (t, f) in total.iter_mut().zip(&p.fraction.values) {
            *t += f;
        }
    }
    Ok(Spectrum::new(run.wavelengths.clone(), total))
}

/// Couplings and Purcell spectra of the three orientation runs of one scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmitterCoupling {
    pub coupling: CouplingTriple,
    pub purcell: [PurcellSpectrum; 3],
}

impl EmitterCoupling {
    pub fn new(coupling: CouplingTriple, purcell: [PurcellSpectrum; 3]) -> Result<Self> {
        for f in &purcell {
            same_grid(&coupling.wavelengths, &f.wavelengths, "coupling vs Purcell")?;
        }
        Ok(Self { coupling, purcell })
    }

    /// From `[x, y, z]` runs and a shared vacuum reference.
    pub fn from_runs(
        runs: [&MonitorSet; 3],
        vacuum: &MonitorSet,
        modes: &[GuidedMode],
        scatterer_distance_nm: Option<f64>,
    ) -> Result<Self> {
        let mut s = Vec::with_capacity(3);
        for run in runs {
            s.push(RunSummary::from_run(run, Some((modes, scatterer_distance_nm)))?);
        }
        Self::from_summaries([&s[0], &s[1], &s[2]], &RunSummary::from_run(vacuum, None)?)
    }

    /// From cached `[x, y, z]` summaries with guided fractions.
    pub fn from_summaries(runs: [&RunSummary; 3], vacuum: &RunSummary) -> Result<Self> {
        let mut t: [Vec<f64>; 3] = Default::default();
        let mut f = Vec::with_capacity(3);
        for (i, run) in runs.into_iter().enumerate() {
            let g = run
                .guided_fraction
                .as_ref()
                .ok_or_else(|| ObservablesError::MissingMonitor("guided fraction".into()))?;
            t[i] = g.iter().map(|v| v.clamp(0.0, 1.0)).collect();
            f.push(purcell_from_summaries(run, vacuum)?);
        }
        let purcell: [PurcellSpectrum; 3] = f.try_into().expect("three orientations");
        Self::new(CouplingTriple::new(runs[0].wavelengths.clone(), t)?, purcell)
    }

    /// Guided emission `F_i T_i` per wavelength.
    fn guided(&self, i: usize) -> Vec<f64> {
        self.coupling.t[i]
            .iter()
            .zip(&self.purcell[i].total)
            .map(|(t, f)| t * f)
            .collect()
    }

    /// Emitter-spectrum averaged guided fraction of a randomly oriented dipole.
    pub fn averaged_coupling(&self, qd: &QdSpectrum) -> Result<f64> {
        self.mixed_coupling([1.0, 1.0, 1.0], qd)
    }

    /// Same for a dipole tilted by `angle_deg` from `z` towards `x`.
    pub fn tilted_coupling(&self, angle_deg: f64, qd: &QdSpectrum) -> Result<f64> {
        let (s, c) = angle_deg.to_radians().sin_cos();
        self.mixed_coupling([s * s, 0.0, c * c], qd)
    }

    fn mixed_coupling(&self, w: [f64; 3], qd: &QdSpectrum) -> Result<f64> {
        same_grid(&qd.wavelengths, &self.coupling.wavelengths, "emitter spectrum")?;
        let (mut num, mut den) = (0.0, 0.0);
        for (i, w) in w.iter().enumerate() {
            num += w * qd.average(&self.guided(i));
            den += w * qd.average(&self.purcell[i].total);
        }
        if den <= 0.0 {
            return Err(ObservablesError::ZeroDenominator);
        }
        Ok(num / den)
    }
}

fn dop_from_numerators(n: [f64; 3]) -> Result<f64> {
    let den = n[0] + n[1] + n[2];
    if !(den > 0.0) {
        return Err(ObservablesError::ZeroDenominator);
    }
    Ok((n[1] + n[2] - n[0]) / den)
}

/// Degree of polarization from the couplings alone.
pub fn dop_from_triple(t: &CouplingTriple, qd: &QdSpectrum) -> Result<f64> {
    same_grid(&qd.wavelengths, &t.wavelengths, "emitter spectrum")?;
    dop_from_numerators([0, 1, 2].map(|i| qd.average(&t.t[i])))
}

/// Degree of polarization with each orientation weighted by its enhanced
/// emission rate, `F_i T_i`.
pub fn dop_weighted(c: &EmitterCoupling, qd: &QdSpectrum) -> Result<f64> {
    same_grid(&qd.wavelengths, &c.coupling.wavelengths, "emitter spectrum")?;
    dop_from_numerators([0, 1, 2].map(|i| qd.average(&c.guided(i))))
}

/// Orientation-averaged guided emission with the rod over that without.
pub fn intensity_enhancement(coupled: &EmitterCoupling, bare: &EmitterCoupling, qd: &QdSpectrum) -> Result<f64> {
    guided_ratio(coupled, bare, qd, |c, i| c.guided(i))
}

/// Same ratio without the emission-rate weighting.
pub fn intensity_enhancement_unweighted(
    coupled: &EmitterCoupling,
    bare: &EmitterCoupling,
    qd: &QdSpectrum,
) -> Result<f64> {
    guided_ratio(coupled, bare, qd, |c, i| c.coupling.t[i].clone())
}

fn guided_ratio(
    coupled: &EmitterCoupling,
    bare: &EmitterCoupling,
    qd: &QdSpectrum,
    g: impl Fn(&EmitterCoupling, usize) -> Vec<f64>,
) -> Result<f64> {
    same_grid(&qd.wavelengths, &coupled.coupling.wavelengths, "emitter spectrum")?;
    same_grid(&qd.wavelengths, &bare.coupling.wavelengths, "bare reference")?;
    let num: f64 = (0..3).map(|i| qd.average(&g(coupled, i))).sum();
    let den: f64 = (0..3).map(|i| qd.average(&g(bare, i))).sum();
    if !(den > 0.0) {
        return Err(ObservablesError::ZeroDenominator);
    }
    Ok(num / den)
}

/// One row of a sweep table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservablesResult {
    pub d_nm: f64,
    #[serde(rename = "L_nm")]
    pub rod_length_nm: Option<f64>,
    #[serde(rename = "F_Pz")]
    pub f_pz: f64,
    pub lambda_at_max_nm: f64,
    #[serde(rename = "P")]
    pub dop: f64,
    #[serde(rename = "E")]
    pub enhancement: f64,
    #[serde(rename = "P_unweighted")]
    pub dop_unweighted: f64,
    #[serde(rename = "E_unweighted")]
    pub enhancement_unweighted: f64,
    pub coupling_avg: f64,
    pub coupling_tilted: f64,
    pub resolution_nm: f64,
}

/// Angle of the emitter dipole from the fiber axis used for the tilted coupling.
pub const TILT_DEG: f64 = 23.0;

impl ObservablesResult {
    pub fn compute(
        d_nm: f64,
        rod_length_nm: Option<f64>,
        resolution_nm: f64,
        coupled: &EmitterCoupling,
        bare: &EmitterCoupling,
        qd: &QdSpectrum,
    ) -> Result<Self> {
        let (f_pz, lambda_at_max_nm) = max_purcell(&coupled.purcell[2]);
        Ok(Self {
            d_nm,
            rod_length_nm,
            f_pz,
            lambda_at_max_nm,
            dop: dop_weighted(coupled, qd)?,
            enhancement: intensity_enhancement(coupled, bare, qd)?,
            dop_unweighted: dop_from_triple(&coupled.coupling, qd)?,
            enhancement_unweighted: intensity_enhancement_unweighted(coupled, bare, qd)?,
            coupling_avg: coupled.averaged_coupling(qd)?,
            coupling_tilted: coupled.tilted_coupling(TILT_DEG, qd)?,
            resolution_nm,
        })
    }

    /// Writes rows with a header line.
    pub fn write_csv<W: Write>(rows: &[Self], w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for r in rows {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }
}
