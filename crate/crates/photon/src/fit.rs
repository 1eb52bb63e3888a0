//! Antibunching and excitation-power fits, and lifetime ratios.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::storage::Owned;
use nalgebra::{DMatrix, Dyn, Matrix2, OMatrix, OVector, Vector2, U2};
use serde::{Deserialize, Serialize};

use crate::correlate::CorrelationHistogram;
use crate::{PhotonError, Result};

/// Minimum histogram length accepted by the antibunching fit.
pub const MIN_BINS: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AntibunchFit {
    /// Rise time, ns.
    pub t_ns: f64,
    pub g2_0: f64,
    /// Uncorrelated fraction of the counts implied by `g2_0` for one emitter.
    pub background: f64,
    /// Covariance of `(T, g2_0)`.
    pub covariance: [[f64; 2]; 2],
    /// Norm of the weighted residuals.
    pub residual_norm: f64,
    pub points: usize,
}

impl AntibunchFit {
    pub fn t_sigma_ns(&self) -> f64 {
        self.covariance[0][0].sqrt()
    }

    pub fn g2_0_sigma(&self) -> f64 {
        self.covariance[1][1].sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Detector timing jitter σ; bins with `|τ| < 2σ` are left out.
    pub jitter_sigma_ps: f64,
    pub max_iterations: usize,
    pub xtol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            jitter_sigma_ps: 0.0,
            max_iterations: 500,
            xtol: 1e-9,
        }
    }
}

/// `g²(τ) = 1 - (1 - g0) exp(-|τ|/T)` averaged over each bin, with
/// `T = e^θ₀` and `g0 = θ₁²`.
struct Antibunching {
    lag: Vec<f64>,
    value: Vec<f64>,
    inv_sigma: Vec<f64>,
    /// Half bin width, ns; zero samples the model pointwise.
    half: f64,
    p: Vector2<f64>,
}

impl Antibunching {
    /// Bin average of `exp(-|τ|/T)` and its derivative with respect to `ln T`.
    fn decay(&self, lag: f64) -> (f64, f64) {
        let t = self.p[0].exp();
        let a = lag.abs();
        let x = self.half / t;
        if x < 1e-8 {
            let e = (-a / t).exp();
            return (e, e * a / t);
        }
        if a < 0.5 * self.half {
            // bin straddling zero lag
            let v = (1.0 - (-x).exp()) / x;
            return (v, v - (-x).exp());
        }
        let v = (-a / t).exp() * x.sinh() / x;
        (v, v * (a / t + 1.0 - x / x.tanh()))
    }
}

impl LeastSquaresProblem<f64, Dyn, U2> for Antibunching {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, U2>;
    type ParameterStorage = Owned<f64, U2>;

    fn set_params(&mut self, x: &Vector2<f64>) {
        self.p = *x;
    }

    fn params(&self) -> Vector2<f64> {
        self.p
    }

    fn residuals(&self) -> Option<OVector<f64, Dyn>> {
        let g0 = self.p[1] * self.p[1];
        Some(OVector::<f64, Dyn>::from_iterator(
            self.lag.len(),
            (0..self.lag.len()).map(|k| (1.0 - (1.0 - g0) * self.decay(self.lag[k]).0 - self.value[k]) * self.inv_sigma[k]),
        ))
    }

    fn jacobian(&self) -> Option<OMatrix<f64, Dyn, U2>> {
        let s = self.p[1];
        let g0 = s * s;
        let mut j = OMatrix::<f64, Dyn, U2>::zeros(self.lag.len());
        for k in 0..self.lag.len() {
            let (e, de) = self.decay(self.lag[k]);
            j[(k, 0)] = -(1.0 - g0) * de * self.inv_sigma[k];
            j[(k, 1)] = 2.0 * s * e * self.inv_sigma[k];
        }
        Some(j)
    }
}

/// Fits the normalized histogram with Poisson weights.
pub fn fit_antibunching(hist: &CorrelationHistogram) -> Result<AntibunchFit> {
    fit_antibunching_with(hist, &FitOptions::default())
}

pub fn fit_antibunching_with(hist: &CorrelationHistogram, opts: &FitOptions) -> Result<AntibunchFit> {
    if hist.counts.len() < MIN_BINS {
        return Err(PhotonError::InsufficientData(format!(
            "{} bins, need {MIN_BINS}",
            hist.counts.len()
        )));
    }
    let cut_ns = 2.0 * opts.jitter_sigma_ps * 1e-3;
    let (mut lag, mut value, mut sigma) = (Vec::new(), Vec::new(), Vec::new());
    for ((l, g), s) in hist.lags_ns().into_iter().zip(hist.g2()).zip(hist.g2_sigma()) {
        if l.abs() >= cut_ns {
            lag.push(l);
            value.push(g);
            sigma.push(s);
        }
    }
    fit_g2_curve(&lag, &value, &sigma, hist.bin_width_ps as f64 * 1e-3, opts)
}

/// Fits `(lag ns, g², σ)` samples directly; `bin_width_ns` is zero for
/// point samples of the curve.
pub fn fit_g2_curve(lag_ns: &[f64], g2: &[f64], sigma: &[f64], bin_width_ns: f64, opts: &FitOptions) -> Result<AntibunchFit> {
    let n = lag_ns.len();
    if n < MIN_BINS || g2.len() != n || sigma.len() != n {
        return Err(PhotonError::InsufficientData(format!("{n} usable points")));
    }
    if sigma.iter().any(|s| !(*s > 0.0)) {
        return Err(PhotonError::InvalidParameter("sigmas must be positive".into()));
    }
    let spread = g2.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - g2.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread <= 1e-12 {
        return Err(PhotonError::DegenerateHistogram);
    }
    // Start from the deepest bin and the half-recovery lag.
    let kmin = (0..n).min_by(|&a, &b| g2[a].total_cmp(&g2[b])).unwrap();
    let g0 = g2[kmin].clamp(0.0, 0.95);
    let half = 0.5 * (1.0 + g0);
    let max_lag = lag_ns.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let t_half = (0..n)
        .filter(|&k| g2[k] >= half)
        .map(|k| lag_ns[k].abs())
        .fold(f64::INFINITY, f64::min);
    let t0 = if t_half.is_finite() && t_half > 0.0 { t_half / std::f64::consts::LN_2 } else { 0.1 * max_lag };

    let problem = Antibunching {
        lag: lag_ns.to_vec(),
        value: g2.to_vec(),
        inv_sigma: sigma.iter().map(|s| 1.0 / s).collect(),
        half: 0.5 * bin_width_ns.max(0.0),
        p: Vector2::new(t0.max(1e-6).ln(), g0.sqrt()),
    };
    let lm = LevenbergMarquardt::new()
        .with_xtol(opts.xtol)
        .with_ftol(1e-15)
        .with_patience(opts.max_iterations.max(1));
    let (problem, report) = lm.minimize(problem);
    if !report.termination.was_successful() {
        return Err(PhotonError::NoConvergence(format!("{:?}", report.termination)));
    }
    let (t, s) = (problem.p[0].exp(), problem.p[1]);
    let g0 = s * s;
    let j = problem.jacobian().expect("jacobian");
    let jtj: Matrix2<f64> = j.transpose() * &j;
    let cov_p = jtj.try_inverse().ok_or(PhotonError::DegenerateHistogram)?;
    let d = Matrix2::new(t, 0.0, 0.0, 2.0 * s);
    let cov = d * cov_p * d;
    let amplitude = 1.0 - g0;
    if !(amplitude > 0.0) || !(t < 10.0 * max_lag) || !(cov[(0, 0)].sqrt() < t) {
        return Err(PhotonError::DegenerateHistogram);
    }
    let residual_norm = problem.residuals().map(|r| r.norm()).unwrap_or(f64::NAN);
    Ok(AntibunchFit {
        t_ns: t,
        g2_0: g0,
        background: (1.0 - amplitude.sqrt()).clamp(0.0, 1.0),
        covariance: [[cov[(0, 0)], cov[(0, 1)]], [cov[(1, 0)], cov[(1, 1)]]],
        residual_norm,
        points: n,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerPoint {
    pub power_uw: f64,
    pub t_ns: f64,
    /// Uncertainty of `T`; zero for unweighted fits.
    pub t_sigma_ns: f64,
}

pub type PowerSeries = Vec<PowerPoint>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    /// Slope of `1/T` against power, 1/(ns·µW).
    pub alpha: f64,
    pub alpha_sigma: f64,
    /// Low-power lifetime, ns; infinite when the intercept is not positive.
    pub tau1_ns: f64,
    pub tau1_sigma_ns: f64,
    /// `1/τ₁`, 1/ns.
    pub intercept: f64,
    pub intercept_sigma: f64,
    pub negative_intercept: bool,
    pub chi2: f64,
}

/// Weighted straight-line fit of `1/T = α P + 1/τ₁`.
pub fn fit_power_dependence(series: &[PowerPoint]) -> Result<PowerFit> {
    let mut powers: Vec<f64> = series.iter().map(|p| p.power_uw).collect();
    powers.sort_by(f64::total_cmp);
    powers.dedup();
    if powers.len() < 3 {
        return Err(PhotonError::InsufficientData(format!(
            "{} distinct powers, need 3",
            powers.len()
        )));
    }
    if series.iter().any(|p| !(p.power_uw > 0.0) || !(p.t_ns > 0.0)) {
        return Err(PhotonError::InvalidParameter("powers and rise times must be positive".into()));
    }
    let weighted = series.iter().all(|p| p.t_sigma_ns > 0.0);
    if !weighted && series.iter().any(|p| p.t_sigma_ns > 0.0) {
        return Err(PhotonError::InvalidParameter("give uncertainties for all points or none".into()));
    }
    let n = series.len();
    let mut x = DMatrix::zeros(n, 2);
    let mut y = nalgebra::DVector::zeros(n);
    let mut w = nalgebra::DVector::zeros(n);
    for (i, p) in series.iter().enumerate() {
        x[(i, 0)] = p.power_uw;
        x[(i, 1)] = 1.0;
        y[i] = 1.0 / p.t_ns;
        // σ(1/T) = σ_T / T²
        w[i] = if weighted { (p.t_ns * p.t_ns / p.t_sigma_ns).powi(2) } else { 1.0 };
    }
    let xtw = x.transpose() * DMatrix::from_diagonal(&w);
    let normal = &xtw * &x;
    let inv = normal
        .try_inverse()
        .ok_or_else(|| PhotonError::InsufficientData("singular design".into()))?;
    let beta = &inv * (&xtw * &y);
    let resid = &y - &x * &beta;
    let chi2: f64 = resid.iter().zip(w.iter()).map(|(r, w)| w * r * r).sum();
    // Unweighted fits take their scale from the scatter.
    let scale = if weighted { 1.0 } else { chi2 / (n - 2).max(1) as f64 };
    let (alpha, intercept) = (beta[0], beta[1]);
    let alpha_sigma = (inv[(0, 0)] * scale).sqrt();
    let intercept_sigma = (inv[(1, 1)] * scale).sqrt();
    let negative_intercept = intercept <= 0.0;
    let (tau1_ns, tau1_sigma_ns) = if negative_intercept {
        (f64::INFINITY, f64::INFINITY)
    } else {
        (1.0 / intercept, intercept_sigma / (intercept * intercept))
    };
    Ok(PowerFit {
        alpha,
        alpha_sigma,
        tau1_ns,
        tau1_sigma_ns,
        intercept,
        intercept_sigma,
        negative_intercept,
        chi2,
    })
}

/// Purcell factor `τ₀/τ₁` and its uncertainty.
///
/// Both lifetimes come from the same kind of power-series fit, so each is
/// given the relative uncertainty of `τ₀` and the two add in quadrature.
/// Nonpositive lifetimes give NaN.
pub fn purcell_from_lifetimes(tau0_ns: f64, tau1_ns: f64, relative_uncertainty: f64) -> (f64, f64) {
    if !(tau0_ns > 0.0 && tau1_ns > 0.0) {
        return (f64::NAN, f64::NAN);
    }
    let f = tau0_ns / tau1_ns;
    (f, f * relative_uncertainty * std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_fit_uncertainty_matches_closed_form() {
        // constant σ(1/T) = s, so σ_α² = s² / Σ(P − P̄)²
        let s = 1e-4;
        let powers = [1.0, 2.0, 4.0, 8.0, 16.0];
        let series: Vec<PowerPoint> = powers
            .iter()
            .map(|&p| {
                let t = 1.0 / (0.001 * p + 1.0 / 280.0);
                PowerPoint { power_uw: p, t_ns: t, t_sigma_ns: s * t * t }
            })
            .collect();
        let f = fit_power_dependence(&series).unwrap();
        let mean = powers.iter().sum::<f64>() / 5.0;
        let sxx: f64 = powers.iter().map(|p| (p - mean).powi(2)).sum();
        assert!((f.alpha_sigma / (s / sxx.sqrt()) - 1.0).abs() < 1e-9, "{}", f.alpha_sigma);
        assert!((f.alpha / 0.001 - 1.0).abs() < 1e-9);
        assert!(f.chi2 < 1e-12);
    }

    #[test]
    fn recovers_exact_curves() {
        for (t, g0) in [(210.0, 0.02), (4.4, 0.42)] {
            let lag: Vec<f64> = (-200..=200).map(|k| k as f64 * t / 40.0).collect();
            let g: Vec<f64> = lag.iter().map(|l| 1.0 - (1.0 - g0) * (-l.abs() / t).exp()).collect();
            let f = fit_g2_curve(&lag, &g, &vec![0.01; lag.len()], 0.0, &FitOptions::default()).unwrap();
            assert!((f.t_ns / t - 1.0).abs() < 1e-4, "{}", f.t_ns);
            assert!((f.g2_0 / g0 - 1.0).abs() < 1e-4, "{}", f.g2_0);
        }
    }

    #[test]
    fn flat_histogram_is_degenerate() {
        let lag: Vec<f64> = (0..40).map(|k| k as f64).collect();
        let g = vec![1.0; 40];
        assert!(matches!(
            fit_g2_curve(&lag, &g, &vec![0.01; 40], 0.0, &FitOptions::default()),
            Err(PhotonError::DegenerateHistogram)
        ));
    }

    #[test]
    fn power_series_round_trip() {
        let (alpha, tau1) = (0.001, 280.0);
        let series: Vec<PowerPoint> = [1.0, 5.0, 20.0, 50.0, 100.0]
            .iter()
            .map(|&p| PowerPoint {
                power_uw: p,
                t_ns: 1.0 / (alpha * p + 1.0 / tau1),
                t_sigma_ns: 0.0,
            })
            .collect();
        let f = fit_power_dependence(&series).unwrap();
        assert!((f.alpha / alpha - 1.0).abs() < 1e-10);
        assert!((f.tau1_ns / tau1 - 1.0).abs() < 1e-10);
        assert!(!f.negative_intercept);
    }

    #[test]
    fn negative_intercept_is_flagged() {
        let series: Vec<PowerPoint> = [(1.0, 10.0), (2.0, 4.0), (3.0, 2.5)]
            .iter()
            .map(|&(p, t)| PowerPoint { power_uw: p, t_ns: t, t_sigma_ns: 0.0 })
            .collect();
        let f = fit_power_dependence(&series).unwrap();
        assert!(f.negative_intercept && f.tau1_ns.is_infinite());
    }

    #[test]
    fn lifetime_ratio() {
        let (f, df) = purcell_from_lifetimes(280.0, 4.5, 0.30);
        assert!((f - 62.2).abs() < 0.05 && (df - 26.4).abs() < 0.05, "{f} {df}");
        assert_eq!(purcell_from_lifetimes(280.0, 280.0, 0.0), (1.0, 0.0));
    }
}
