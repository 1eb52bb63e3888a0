//! Monte Carlo photon streams from independent two-level emitters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::hwp::HwpScan;
use crate::stream::{Channel, Event, StreamMetadata, TimestampStream};

/// Integration time of one HWP-scan sample, s.
pub const HWP_SAMPLE_SECONDS: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmitterModel {
    pub tau1_ns: f64,
    /// Excitation rate per unit power, 1/(ns·µW).
    pub alpha: f64,
    pub p_exc_uw: f64,
    pub emitters: usize,
    /// Orientation of the emitted linear polarization, deg.
    pub polarization_deg: f64,
}

impl EmitterModel {
    /// Emitter with rise time `t_ns`, split evenly between pump and decay.
    pub fn with_rise_time(t_ns: f64) -> Self {
        Self {
            tau1_ns: 2.0 * t_ns,
            alpha: 1.0,
            p_exc_uw: 1.0 / (2.0 * t_ns),
            emitters: 1,
            polarization_deg: 0.0,
        }
    }

    pub fn excitation_rate(&self) -> f64 {
        self.alpha * self.p_exc_uw
    }

    /// `(αP + 1/τ₁)⁻¹`, ns.
    pub fn rise_time_ns(&self) -> f64 {
        1.0 / (self.excitation_rate() + 1.0 / self.tau1_ns)
    }

    /// Photons per ns from all emitters.
    pub fn emission_rate(&self) -> f64 {
        self.emitters as f64 / (1.0 / self.excitation_rate() + self.tau1_ns)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub efficiency: f64,
    /// Dark counts per channel, Hz.
    pub dark_rate_hz: f64,
    pub jitter_sigma_ps: f64,
    /// Fraction routed to the plus channel.
    pub split_plus: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            efficiency: 1.0,
            dark_rate_hz: 0.0,
            jitter_sigma_ps: 0.0,
            split_plus: 0.5,
        }
    }
}

fn check_models(e: &EmitterModel, d: &DetectorModel) {
    assert!(e.tau1_ns > 0.0 && e.emitters >= 1, "need tau1 > 0 and at least one emitter");
    assert!(e.excitation_rate() > 0.0, "excitation rate must be positive");
    assert!(d.efficiency > 0.0 && d.efficiency <= 1.0, "efficiency outside (0, 1]");
    assert!((0.0..=1.0).contains(&d.split_plus), "split ratio outside [0, 1]");
    assert!(d.dark_rate_hz >= 0.0 && d.jitter_sigma_ps >= 0.0);
}

/// Two-channel stream of `duration_s`, reproducible from `seed`.
///
/// Each emitter alternates an excitation wait `Exp(αP)` and a decay wait
/// `Exp(1/τ₁)`; emissions are thinned by the efficiency, routed by the
/// split ratio and blurred by Gaussian jitter. Poisson dark counts are
/// added to both channels.
pub fn generate_stream(emitter: &EmitterModel, detector: &DetectorModel, duration_s: f64, seed: u64) -> TimestampStream {
    check_models(emitter, detector);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let end_ps = duration_s * 1e12;
    let excite = Exp::new(emitter.excitation_rate() * 1e-3).unwrap();
    let decay = Exp::new(1e-3 / emitter.tau1_ns).unwrap();
    let jitter = Normal::new(0.0, detector.jitter_sigma_ps).unwrap();
    let mut events = Vec::new();
    for _ in 0..emitter.emitters {
        let mut t = 0.0;
        loop {
            t += excite.sample(&mut rng) + decay.sample(&mut rng);
            if t >= end_ps {
                break;
            }
            if rng.random::<f64>() >= detector.efficiency {
                continue;
            }
            let channel = if rng.random::<f64>() < detector.split_plus { Channel::Plus } else { Channel::Minus };
            let tj = t + jitter.sample(&mut rng);
            if (0.0..end_ps).contains(&tj) {
                events.push(Event {
                    time_ps: tj.round() as u64,
                    channel,
                });
            }
        }
    }
    if detector.dark_rate_hz > 0.0 {
        let gap = Exp::new(detector.dark_rate_hz * 1e-12).unwrap();
        for channel in [Channel::Plus, Channel::Minus] {
            let mut t = gap.sample(&mut rng);
            while t < end_ps {
                events.push(Event {
                    time_ps: t.round() as u64,
                    channel,
                });
                t += gap.sample(&mut rng);
            }
        }
    }
    let metadata = StreamMetadata {
        excitation_power_uw: Some(emitter.p_exc_uw),
        hwp_angle_deg: None,
    };
    TimestampStream::new(events, end_ps.round() as u64, metadata).expect("events lie inside the duration")
}

/// Shot-noise-limited `I₋/I₊` samples for a source of linear-polarization
/// degree `p_true`.
///
/// The plus arm counts the unfiltered half of the light; the minus arm
/// counts the half passing the HWP and PBS, `½(1 + P cos(4θ - 2ψ))` of it.
pub fn synthesize_hwp_scan(
    emitter: &EmitterModel,
    p_true: f64,
    angles_deg: &[f64],
    samples_per_angle: usize,
    seed: u64,
) -> HwpScan {
    assert!((0.0..=1.0).contains(&p_true), "P must lie in [0, 1]");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean = 0.5 * emitter.emission_rate() * 1e9 * HWP_SAMPLE_SECONDS;
    let psi = emitter.polarization_deg.to_radians();
    let plus = Poisson::new(mean).unwrap();
    let samples = angles_deg
        .iter()
        .map(|theta| {
            let frac = 0.5 * (1.0 + p_true * (4.0 * theta.to_radians() - 2.0 * psi).cos());
            let minus = Poisson::new((mean * frac).max(1e-12)).unwrap();
            (0..samples_per_angle)
                .map(|_| {
                    let den = loop {
                        let n: f64 = plus.sample(&mut rng);
                        if n > 0.0 {
                            break n;
                        }
                    };
                    minus.sample(&mut rng) / den
                })
                .collect()
        })
        .collect();
    HwpScan {
        angles_deg: angles_deg.to_vec(),
        samples,
    }
}
