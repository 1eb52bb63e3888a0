//! Independent reference models shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Square band matrix with partial-pivot LU.
struct Band {
    n: usize,
    kl: usize,
    ku: usize,
    w: usize,
    a: Vec<f64>,
    piv: Vec<usize>,
}

impl Band {
    fn new(n: usize, kl: usize, ku: usize) -> Self {
        // room for the fill-in produced by pivoting
        let w = 2 * kl + ku + 1;
        Self { n, kl, ku, w, a: vec![0.0; n * w], piv: vec![0; n] }
    }

    fn at(&mut self, i: usize, j: usize) -> &mut f64 {
        assert!(j + self.kl >= i && j <= i + self.kl + self.ku, "({i},{j}) outside band");
        &mut self.a[i * self.w + j + self.kl - i]
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.kl + self.ku {
            0.0
        } else {
            self.a[i * self.w + j + self.kl - i]
        }
    }

    fn factor(&mut self) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let p = (k..=last)
                .max_by(|&x, &y| self.get(x, k).abs().total_cmp(&self.get(y, k).abs()))
                .unwrap();
            self.piv[k] = p;
            let jmax = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let t = self.get(k, j);
                    *self.at(k, j) = self.get(p, j);
                    *self.at(p, j) = t;
                }
            }
            let d = self.get(k, k);
            assert!(d != 0.0, "singular band matrix");
            for i in k + 1..=last {
                let l = self.get(i, k) / d;
                *self.at(i, k) = l;
                if l != 0.0 {
                    for j in k + 1..=jmax {
                        let v = self.get(k, j);
                        *self.at(i, j) -= l * v;
                    }
                }
            }
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            b.swap(k, self.piv[k]);
            for i in k + 1..=(k + kl).min(n - 1) {
                b[i] -= self.get(i, k) * b[k];
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            let hi = (k + kl + ku).min(n - 1);
            for (j, bj) in b.iter().enumerate().take(hi + 1).skip(k + 1) {
                s -= self.get(k, j) * bj;
            }
            b[k] = s / self.get(k, k);
        }
    }
}

/// HE11 effective index from a finite-difference discretization of the
/// vector wave equation for the transverse magnetic field, written for
/// the circular components `a = H_r + iH_φ`-like pair of an `l = 1` mode.
/// `cells_per_radius` sets the radial step; the domain extends
/// `clearance_wavelengths` beyond the core. The eigenvalue closest below
/// `k²n1²` is found by shift-invert inverse iteration.
pub fn fd_he11_neff(wavelength: f64, radius: f64, n1: f64, cells_per_radius: usize, clearance_wavelengths: f64) -> f64 {
    let k = 2.0 * PI / wavelength;
    let dr = radius / cells_per_radius as f64;
    let m = ((radius + clearance_wavelengths * wavelength) / dr) as usize;
    let r = |j: usize| (j as f64 + 0.5) * dr;
    let eps = |j: usize| if r(j) < radius { n1 * n1 } else { 1.0 };
    // permittivity at half points j·dr
    let eps_h = |j: usize| {
        let x = j as f64 * dr;
        if x < radius - 1e-9 {
            n1 * n1
        } else if (x - radius).abs() < 1e-9 {
            0.5 * (n1 * n1 + 1.0)
        } else {
            1.0
        }
    };
    let sigma = k * k * n1 * n1;
    let n = 2 * m;
    let mut a = Band::new(n, 3, 2);
    for j in 0..m {
        let (ia, ib) = (2 * j, 2 * j + 1);
        let rj = r(j);
        let (rp, rm) = ((j + 1) as f64 * dr, j as f64 * dr);
        let c = 1.0 / (rj * dr * dr);
        *a.at(ia, ia) += -c * (rp + rm) - 2.0 / (rj * rj) + k * k * eps(j) - sigma;
        if j + 1 < m {
            *a.at(ia, ia + 2) += c * rp;
        }
        if j > 0 {
            *a.at(ia, ia - 2) += c * rm;
        }
        *a.at(ia, ib) += -2.0 / (rj * rj);
        for (s, idx) in [(1.0, j + 1), (-1.0, j)] {
            let rr = idx as f64 * dr;
            if rr == 0.0 {
                continue;
            }
            let coef = s * eps(j) / dr / eps_h(idx) / rr;
            if idx < m {
                *a.at(ib, 2 * idx + 1) += coef * r(idx) / dr;
                *a.at(ib, 2 * idx) += coef * 0.5;
            }
            if idx >= 1 {
                let lo = idx - 1;
                *a.at(ib, 2 * lo + 1) -= coef * r(lo) / dr;
                *a.at(ib, 2 * lo) += coef * 0.5;
            }
        }
        if j + 1 < m {
            *a.at(ib, ia + 2) += -1.0 / (2.0 * dr * rj);
        }
        if j > 0 {
            *a.at(ib, ia - 2) += 1.0 / (2.0 * dr * rj);
        } else {
            *a.at(ib, ia) += 1.0 / (2.0 * dr * rj);
        }
        *a.at(ib, ia) += -1.0 / (rj * rj);
        *a.at(ib, ib) += -1.0 / (rj * rj) + k * k * eps(j) - sigma;
    }
    a.factor();
    let mut x = vec![1.0; n];
    let mut lambda = f64::NAN;
    for _ in 0..500 {
        let mut y = x.clone();
        a.solve(&mut y);
        let mu = y.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() / x.iter().map(|q| q * q).sum::<f64>();
        let next = sigma + 1.0 / mu;
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        x = y.into_iter().map(|v| v / norm).collect();
        if (next - lambda).abs() < 1e-14 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.sqrt() / k
}

use plasmofiber::fdtd::DipoleSource;
use plasmofiber::geometry::{Material, MonitorSpec, SceneShape, RADIATION_BOX};
use plasmofiber::{Axis, SceneConfig, Shape, YeeGrid};

/// Wavelengths used by the short engine runs.
pub fn short_wavelengths() -> Vec<f64> {
    vec![650.0, 700.0, 750.0, 800.0, 850.0]
}

/// Gold capsule along z at the origin with a dipole `gap` beyond its `+z` tip,
/// inside a box of free space `half` nm wide. The grid is mirror-symmetric in x.
pub fn rod_scene(resolution: f64, half: f64, length: f64, gap: f64, orientation: [f64; 3]) -> SceneConfig {
    let grid = YeeGrid::covering([-half; 3], [half; 3], resolution, 15, [0.0; 3]).unwrap();
    let dipole = DipoleSource::new([0.0, 1.3, 0.5 * length + gap], orientation);
    let mut scene = SceneConfig::vacuum(grid, dipole);
    scene.shapes.push(SceneShape {
        shape: Shape::Capsule {
            axis: Axis::Z,
            center: [0.0; 3],
            length,
            diameter: 25.0,
        },
        material: Material::gold(),
    });
    let m = half - 10.0;
    scene.monitors.push(MonitorSpec::FluxBox {
        name: RADIATION_BOX.into(),
        lo: [-m; 3],
        hi: [m; 3],
    });
    scene.wavelengths = short_wavelengths();
    scene
}
