//! Dispersive permittivity models and their auxiliary-differential-equation
//! time stepping.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::units::{omega_rad_per_fs, rad_per_fs_to_internal, wavelength_to_ev};

/// One Lorentz oscillator: `strength * w0^2 / (w0^2 - w^2 - i*gamma*w)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorentzPole {
    pub strength: f64,
    /// Resonance angular frequency, rad/fs.
    pub resonance: f64,
    /// Damping rate, rad/fs.
    pub damping: f64,
}

/// Free-electron term: `-plasma^2 / (w^2 + i*collision*w)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrudeTerm {
    /// Plasma angular frequency, rad/fs.
    pub plasma: f64,
    /// Collision rate, rad/fs.
    pub collision: f64,
}

/// Drude–Lorentz permittivity, `e^{-iwt}` convention (lossy media have Im > 0).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrudeLorentzModel {
    pub eps_inf: f64,
    pub drude: DrudeTerm,
    pub lorentz_poles: Vec<LorentzPole>,
}

/// Johnson & Christy (1972) gold: photon energy (eV), n, k.
///
/// Rows bracketing 600–900 nm plus one on either side.
pub const JOHNSON_CHRISTY_GOLD: [(f64, f64, f64); 11] = [
    (1.26, 0.22, 6.35),
    (1.39, 0.17, 5.66),
    (1.51, 0.16, 5.083),
    (1.64, 0.14, 4.542),
    (1.76, 0.13, 4.103),
    (1.88, 0.14, 3.697),
    (2.01, 0.21, 3.272),
    (2.13, 0.29, 2.863),
    (2.26, 0.43, 2.455),
    (2.38, 0.62, 2.081),
    (2.50, 1.04, 1.833),
];

/// Tabulated gold permittivity at a tabulated energy: `(wavelength nm, eps)`.
pub fn johnson_christy_gold() -> Vec<(f64, Complex64)> {
    JOHNSON_CHRISTY_GOLD
        .iter()
        .map(|&(ev, n, k)| {
            let nk = Complex64::new(n, k);
            (1_239.841_984 / ev, nk * nk)
        })
        .collect()
}

impl DrudeLorentzModel {
    /// Drude + two Lorentz poles, least-squares fitted to the Johnson & Christy
    /// table between 496 and 984 nm. Worst-case |Δε| is 0.19 inside 600–900 nm.
    pub fn gold() -> Self {
        Self {
            eps_inf: 5.130_196_42,
            drude: DrudeTerm {
                plasma: 13.169_648_94,
                collision: 0.100_578_10,
            },
            lorentz_poles: vec![
                LorentzPole {
                    strength: 0.187_196_77,
                    resonance: 3.657_138_24,
                    damping: 0.747_330_27,
                },
                LorentzPole {
                    strength: 1.153_613_64,
                    resonance: 4.193_171_80,
                    damping: 0.452_495_65,
                },
            ],
        }
    }

    /// Relative permittivity at angular frequency `w` (rad/fs).
    pub fn permittivity(&self, w: f64) -> Complex64 {
        let i = Complex64::i();
        let mut eps = Complex64::new(self.eps_inf, 0.0);
        let wp = self.drude.plasma;
        if wp != 0.0 {
            eps -= wp * wp / (w * w + i * self.drude.collision * w);
        }
        for p in &self.lorentz_poles {
            let w0 = p.resonance;
            eps += p.strength * w0 * w0 / (w0 * w0 - w * w - i * p.damping * w);
        }
        eps
    }

    pub fn permittivity_at_wavelength(&self, wavelength_nm: f64) -> Complex64 {
        self.permittivity(omega_rad_per_fs(wavelength_nm))
    }

    /// Largest |Δε| against the tabulated gold data inside `[lo, hi]` nm.
    pub fn max_deviation_from_table(&self, lo_nm: f64, hi_nm: f64) -> f64 {
        johnson_christy_gold()
            .into_iter()
            .filter(|(l, _)| *l >= lo_nm && *l <= hi_nm)
            .map(|(l, e)| (self.permittivity_at_wavelength(l) - e).norm())
            .fold(0.0, f64::max)
    }

    pub fn pole_count(&self) -> usize {
        self.lorentz_poles.len() + usize::from(self.drude.plasma != 0.0)
    }

    /// Central-difference recursion coefficients for every pole at time step
    /// `dt` (internal units):
    /// `P^{n+1} = c1 P^n + c2 P^{n-1} + c3 E^n`.
    pub fn ade_coefficients(&self, dt: f64) -> Vec<[f64; 3]> {
        let mut out = Vec::with_capacity(self.pole_count());
        let mut push = |w0: f64, gamma: f64, drive: f64| {
            let den = 1.0 + 0.5 * gamma * dt;
            out.push([
                (2.0 - w0 * w0 * dt * dt) / den,
                -(1.0 - 0.5 * gamma * dt) / den,
                drive * dt * dt / den,
            ]);
        };
        if self.drude.plasma != 0.0 {
            let wp = rad_per_fs_to_internal(self.drude.plasma);
            push(0.0, rad_per_fs_to_internal(self.drude.collision), wp * wp);
        }
        for p in &self.lorentz_poles {
            let w0 = rad_per_fs_to_internal(p.resonance);
            push(
                w0,
                rad_per_fs_to_internal(p.damping),
                p.strength * w0 * w0,
            );
        }
        out
    }

    /// Every pole must be passive and resolved by the time step.
    pub fn validate(&self, dt: f64) -> Result<(), String> {
        if !(self.eps_inf >= 1.0) {
            return Err(format!("eps_inf must be >= 1, got {}", self.eps_inf));
        }
        if self.drude.collision < 0.0 {
            return Err("negative Drude collision rate".into());
        }
        for p in &self.lorentz_poles {
            if p.strength < 0.0 || p.damping < 0.0 || p.resonance <= 0.0 {
                return Err(format!("non-passive Lorentz pole {p:?}"));
            }
            if rad_per_fs_to_internal(p.resonance) * dt >= 2.0 {
                return Err(format!("Lorentz pole {p:?} unresolved by dt"));
            }
        }
        Ok(())
    }
}

/// Photon energy helper re-exported for tables and reports.
pub fn ev(wavelength_nm: f64) -> f64 {
    wavelength_to_ev(wavelength_nm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gold_fit_tracks_tabulated_data() {
        let gold = DrudeLorentzModel::gold();
        let dev = gold.max_deviation_from_table(600.0, 900.0);
        assert!(dev < 0.3, "max |Δε| = {dev}");
    }

    #[test]
    fn gold_is_metallic_and_lossy_in_band() {
        let gold = DrudeLorentzModel::gold();
        for l in (600..=900).step_by(10) {
            let e = gold.permittivity_at_wavelength(l as f64);
            assert!(e.re < 0.0, "{l} nm: {e}");
            assert!(e.im > 0.0, "{l} nm: {e}");
        }
    }

    #[test]
    fn passive_everywhere() {
        let gold = DrudeLorentzModel::gold();
        for l in [200.0, 350.0, 500.0, 1500.0, 5000.0, 1.0e5] {
            assert!(gold.permittivity_at_wavelength(l).im > 0.0);
        }
    }

    #[test]
    fn ade_recursion_matches_permittivity() {
        // Drive each pole with a slow harmonic and compare P/E with the model.
        let gold = DrudeLorentzModel::gold();
        let dt = 0.2;
        let coeffs = gold.ade_coefficients(dt);
        let lambda = 700.0;
        let w = crate::units::omega_internal(lambda);
        let steps = 400_000usize;
        let mut p = vec![[0.0f64; 2]; coeffs.len()];
        let mut acc_p = Complex64::new(0.0, 0.0);
        let mut acc_e = Complex64::new(0.0, 0.0);
        let ramp = 60_000.0;
        for n in 0..steps {
            let t = n as f64 * dt;
            let env = 1.0 - (-(t / ramp).powi(2)).exp();
            let e = env * (w * t).sin();
            let mut total = 0.0;
            for (c, st) in coeffs.iter().zip(p.iter_mut()) {
                let next = c[0] * st[0] + c[1] * st[1] + c[2] * e;
                st[1] = st[0];
                st[0] = next;
                total += next;
            }
            if n > steps / 2 {
                let ph = Complex64::from_polar(1.0, w * (t + dt));
                acc_p += total * ph;
                let e_next = env * (w * (t + dt)).sin();
                acc_e += e_next * ph;
            }
        }
        let chi = acc_p / acc_e;
        let eps = gold.eps_inf + chi;
        let exact = gold.permittivity_at_wavelength(lambda);
        assert!((eps - exact).norm() / exact.norm() < 0.01, "{eps} vs {exact}");
    }
}
