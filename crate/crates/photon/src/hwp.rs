//! Degree of polarization from the PBS transmission ratio versus HWP angle.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::{PhotonError, Result};

/// Samples of `I₋/I₊` per HWP angle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HwpScan {
    pub angles_deg: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
}

/// Fit `A + B cos 4θ + C sin 4θ` and the resulting contrast.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HwpFit {
    pub offset: f64,
    pub amplitude: f64,
    /// Phase `φ` of `A + R cos(4θ + φ)`, rad.
    pub phase_rad: f64,
    pub max: f64,
    pub min: f64,
    pub p: f64,
    pub p_sigma: f64,
    /// The fitted minimum was negative and has been clipped to zero.
    pub min_clipped: bool,
}

fn mean_and_error(s: &[f64]) -> (f64, f64) {
    let n = s.len() as f64;
    let m = s.iter().sum::<f64>() / n;
    if s.len() < 2 {
        return (m, 0.0);
    }
    let var = s.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Fits the scan and reports `P = (max - min)/(max + min)`.
///
/// Each angle is weighted by the standard error of its mean; if any angle
/// has no scatter the fit is unweighted.
pub fn dop_from_hwp_scan(scan: &HwpScan) -> Result<HwpFit> {
    let n = scan.angles_deg.len();
    if n != scan.samples.len() {
        return Err(PhotonError::InvalidParameter("one sample list per angle".into()));
    }
    if n < 5 {
        return Err(PhotonError::InsufficientData(format!("{n} angles, need 5")));
    }
    let lo = scan.angles_deg.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scan.angles_deg.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 90.0 - 1e-9 {
        return Err(PhotonError::InsufficientCoverage(hi - lo));
    }
    if scan.samples.iter().any(|s| s.is_empty()) {
        return Err(PhotonError::InsufficientData("angle without samples".into()));
    }
    if scan.samples.iter().flatten().any(|v| !(*v >= 0.0)) {
        return Err(PhotonError::InvalidParameter("transmission ratios must be >= 0".into()));
    }
    let stats: Vec<(f64, f64)> = scan.samples.iter().map(|s| mean_and_error(s)).collect();
    let weighted = stats.iter().all(|s| s.1 > 0.0);
    let mut normal = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    let mut rows = Vec::with_capacity(n);
    for (theta, &(m, e)) in scan.angles_deg.iter().zip(&stats) {
        let x = 4.0 * theta.to_radians();
        let row = Vector3::new(1.0, x.cos(), x.sin());
        let w = if weighted { 1.0 / (e * e) } else { 1.0 };
        normal += w * row * row.transpose();
        rhs += w * m * row;
        rows.push((row, m, w));
    }
    let inv = normal
        .try_inverse()
        .ok_or_else(|| PhotonError::InsufficientData("angles do not resolve the 90 deg period".into()))?;
    let beta = inv * rhs;
    let scale = if weighted {
        1.0
    } else {
        let chi2: f64 = rows.iter().map(|(r, m, _)| (m - r.dot(&beta)).powi(2)).sum();
        chi2 / (n - 3).max(1) as f64
    };
    let cov = inv * scale;
    let (a, b, c) = (beta[0], beta[1], beta[2]);
    let r = b.hypot(c);
    let max = a + r;
    let raw_min = a - r;
    let min_clipped = raw_min < 0.0;
    let min = raw_min.max(0.0);
    let p = if max + min > 0.0 { (max - min) / (max + min) } else { 0.0 };
    // Gradient of R/A; at R = 0 use the radial spread of (B, C).
    let p_sigma = if min_clipped {
        0.0
    } else if r > 0.0 {
        let g = Vector3::new(-r / (a * a), b / (r * a), c / (r * a));
        (g.transpose() * cov * g)[(0, 0)].max(0.0).sqrt()
    } else {
        ((cov[(1, 1)] + cov[(2, 2)]).max(0.0)).sqrt() / a
    };
    Ok(HwpFit {
        offset: a,
        amplitude: r,
        phase_rad: (-c).atan2(b),
        max,
        min,
        p,
        p_sigma,
        min_clipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scan(p: f64, shift: f64) -> HwpScan {
        let angles: Vec<f64> = (0..=18).map(|k| k as f64 * 10.0 + shift).collect();
        let samples = angles
            .iter()
            .map(|t| vec![0.7 * (1.0 + p * (4.0 * t.to_radians() + 0.3).cos())])
            .collect();
        HwpScan { angles_deg: angles, samples }
    }

    #[test]
    fn contrast_limits() {
        assert!(dop_from_hwp_scan(&scan(0.0, 0.0)).unwrap().p.abs() < 1e-12);
        assert!((dop_from_hwp_scan(&scan(1.0, 0.0)).unwrap().p - 1.0).abs() < 1e-9);
        assert!((dop_from_hwp_scan(&scan(0.86, 0.0)).unwrap().p - 0.86).abs() < 1e-9);
    }

    #[test]
    fn period_shift_is_harmless() {
        let a = dop_from_hwp_scan(&scan(0.39, 0.0)).unwrap().p;
        let b = dop_from_hwp_scan(&scan(0.39, 90.0)).unwrap().p;
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn needs_a_full_period() {
        let mut s = scan(0.5, 0.0);
        s.angles_deg.truncate(8);
        s.samples.truncate(8);
        assert!(matches!(dop_from_hwp_scan(&s), Err(PhotonError::InsufficientCoverage(_))));
    }
}
