//! Unit conventions.
//!
//! Lengths are in nanometres and the solver works with `c = 1`, so one
//! internal time unit is the light transit time over 1 nm. Times crossing
//! the public interface are in femtoseconds.

use std::f64::consts::PI;

/// Speed of light in nm/fs.
pub const C_NM_PER_FS: f64 = 299.792_458;

/// Converts an internal time (nm/c) to femtoseconds.
pub fn internal_to_fs(t: f64) -> f64 {
    t / C_NM_PER_FS
}

/// Converts femtoseconds to internal time (nm/c).
pub fn fs_to_internal(t_fs: f64) -> f64 {
    t_fs * C_NM_PER_FS
}

/// Angular frequency in internal units (rad per nm/c) of a vacuum wavelength in nm.
pub fn omega_internal(wavelength_nm: f64) -> f64 {
    2.0 * PI / wavelength_nm
}

/// Angular frequency in rad/fs of a vacuum wavelength in nm.
pub fn omega_rad_per_fs(wavelength_nm: f64) -> f64 {
    2.0 * PI * C_NM_PER_FS / wavelength_nm
}

/// Converts rad/fs to internal angular frequency.
pub fn rad_per_fs_to_internal(w: f64) -> f64 {
    w / C_NM_PER_FS
}

/// Photon energy in eV of a vacuum wavelength in nm.
pub fn wavelength_to_ev(wavelength_nm: f64) -> f64 {
    1_239.841_984 / wavelength_nm
}

/// Evenly spaced wavelength grid, inclusive of both ends.
pub fn wavelength_grid(start_nm: f64, stop_nm: f64, step_nm: f64) -> Vec<f64> {
    let n = ((stop_nm - start_nm) / step_nm).round() as usize + 1;
    (0..n).map(|i| start_nm + i as f64 * step_nm).collect()
}

/// The default monitor grid: 600–900 nm in 5 nm steps.
pub fn default_wavelengths() -> Vec<f64> {
    wavelength_grid(600.0, 900.0, 5.0)
}
