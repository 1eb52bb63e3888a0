use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

use photon_stats::*;

fn poisson_stream(rate_hz: f64, duration_s: f64, seed: u64) -> TimestampStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gap = Exp::new(rate_hz * 1e-12).unwrap();
    let end = duration_s * 1e12;
    let mut events = Vec::new();
    for ch in [Channel::Plus, Channel::Minus] {
        let mut t = gap.sample(&mut rng);
        while t < end {
            events.push(Event { time_ps: t as u64, channel: ch });
            t += gap.sample(&mut rng);
        }
    }
    TimestampStream::new(events, end as u64, StreamMetadata::default()).unwrap()
}

#[test]
fn independent_poisson_channels_are_flat() {
    let s = poisson_stream(5e5, 1.0, 11);
    assert!(s.events.len() > 900_000);
    let h = correlate(&s, 20_000, 400_000).unwrap();
    for (g, e) in h.g2().iter().zip(h.g2_sigma()) {
        assert!((g - 1.0).abs() < 3.0 * e, "{g} ± {e}");
    }
}

fn fit_stream(s: &TimestampStream, bin_ps: u64, lag_ps: u64) -> AntibunchFit {
    fit_antibunching(&correlate(s, bin_ps, lag_ps).unwrap()).unwrap()
}

#[test]
fn single_emitter_rise_time() {
    let e = EmitterModel::with_rise_time(10.0);
    let s = generate_stream(&e, &DetectorModel::default(), 0.01, 1);
    let h = correlate(&s, 500, 100_000).unwrap();
    assert!(h.g2()[h.half_bins] < 0.05, "{}", h.g2()[h.half_bins]);
    let f = fit_antibunching(&h).unwrap();
    assert!((f.t_ns / 10.0 - 1.0).abs() < 0.05, "{}", f.t_ns);
}

#[test]
fn two_emitters_halve_the_dip() {
    let e = EmitterModel {
        emitters: 2,
        ..EmitterModel::with_rise_time(10.0)
    };
    let d = DetectorModel {
        efficiency: 0.5,
        ..Default::default()
    };
    let f = fit_stream(&generate_stream(&e, &d, 0.02, 2), 500, 100_000);
    assert!((f.g2_0 - 0.5).abs() < 0.05, "{}", f.g2_0);
}

#[test]
fn jittered_detectors_fit_outside_the_jitter() {
    let e = EmitterModel::with_rise_time(10.0);
    let d = DetectorModel {
        jitter_sigma_ps: 400.0,
        dark_rate_hz: 2e4,
        ..Default::default()
    };
    let h = correlate(&generate_stream(&e, &d, 0.01, 5), 500, 100_000).unwrap();
    let opts = FitOptions {
        jitter_sigma_ps: 400.0 * std::f64::consts::SQRT_2,
        ..Default::default()
    };
    let f = fit_antibunching_with(&h, &opts).unwrap();
    assert!((f.t_ns / 10.0 - 1.0).abs() < 0.05, "{}", f.t_ns);
}

#[test]
fn weak_pump_rise_time_approaches_lifetime() {
    let e = EmitterModel {
        tau1_ns: 280.0,
        alpha: 1.0,
        p_exc_uw: 1.0 / 28_000.0,
        emitters: 1,
        polarization_deg: 0.0,
    };
    let f = fit_stream(&generate_stream(&e, &DetectorModel::default(), 100.0, 3), 50_000, 5_000_000);
    assert!((f.t_ns - e.rise_time_ns()).abs() < 3.0 * f.t_sigma_ns(), "{} ± {}", f.t_ns, f.t_sigma_ns());
    assert!((f.t_ns / 280.0 - 1.0).abs() < 0.05, "{} ± {}", f.t_ns, f.t_sigma_ns());
}

#[test]
fn forged_power_series_recovers_parameters() {
    let (alpha, tau1) = (0.001, 280.0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let series: Vec<PowerPoint> = [1.0, 2.0, 4.0, 8.0, 16.0]
        .iter()
        .map(|&p| {
            let t = 1.0 / (alpha * p + 1.0 / tau1);
            let sigma = 0.02 * t;
            PowerPoint {
                power_uw: p,
                t_ns: t + sigma * noise.sample(&mut rng),
                t_sigma_ns: sigma,
            }
        })
        .collect();
    let f = fit_power_dependence(&series).unwrap();
    assert!((f.alpha - alpha).abs() < 3.0 * f.alpha_sigma, "{} ± {}", f.alpha, f.alpha_sigma);
    assert!((f.tau1_ns - tau1).abs() < 3.0 * f.tau1_sigma_ns, "{} ± {}", f.tau1_ns, f.tau1_sigma_ns);
}

#[test]
fn streamed_power_series_recovers_parameters() {
    let (alpha, tau1) = (0.001, 280.0);
    let series: Vec<PowerPoint> = [1.0, 2.0, 4.0, 8.0, 16.0]
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let e = EmitterModel {
                tau1_ns: tau1,
                alpha,
                p_exc_uw: p,
                emitters: 1,
                polarization_deg: 0.0,
            };
            let f = fit_stream(&generate_stream(&e, &DetectorModel::default(), 1.0, 20 + i as u64), 10_000, 2_000_000);
            PowerPoint {
                power_uw: p,
                t_ns: f.t_ns,
                t_sigma_ns: f.t_sigma_ns(),
            }
        })
        .collect();
    let f = fit_power_dependence(&series).unwrap();
    assert!((f.alpha - alpha).abs() < 3.0 * f.alpha_sigma, "{} ± {}", f.alpha, f.alpha_sigma);
    assert!((f.tau1_ns - tau1).abs() < 3.0 * f.tau1_sigma_ns, "{} ± {}", f.tau1_ns, f.tau1_sigma_ns);
}

#[test]
fn detection_intervals_have_the_cycle_mean() {
    let e = EmitterModel {
        tau1_ns: 20.0,
        alpha: 0.05,
        p_exc_uw: 1.0,
        emitters: 1,
        polarization_deg: 0.0,
    };
    let s = generate_stream(&e, &DetectorModel::default(), 0.05, 8);
    assert!(s.events.len() > 1_000_000);
    let t = &s.events;
    let mean_ns = (t.last().unwrap().time_ps - t[0].time_ps) as f64 / (t.len() - 1) as f64 * 1e-3;
    let expect = 1.0 / (e.alpha * e.p_exc_uw) + e.tau1_ns;
    assert!((mean_ns / expect - 1.0).abs() < 0.01, "{mean_ns} vs {expect}");
}

#[test]
fn hwp_scans_recover_the_degree_of_polarization() {
    let angles: Vec<f64> = (0..=18).map(|k| 10.0 * k as f64).collect();
    let e = EmitterModel {
        polarization_deg: 23.0,
        ..EmitterModel::with_rise_time(10.0)
    };
    for (k, p) in [0.0, 0.39, 0.86, 1.0].into_iter().enumerate() {
        let n = if p == 0.0 { 10_000 } else { 200 };
        let f = dop_from_hwp_scan(&synthesize_hwp_scan(&e, p, &angles, n, 30 + k as u64)).unwrap();
        assert!((f.p - p).abs() < 0.03, "{p}: {}", f.p);
        if p == 0.0 {
            assert!(f.p < 0.05);
        }
        if p == 1.0 {
            assert!(f.p > 0.95);
        }
    }
}

#[test]
fn file_round_trip_preserves_the_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.pstm");
    let s = generate_stream(&EmitterModel::with_rise_time(10.0), &DetectorModel::default(), 1e-3, 6);
    s.save(&path).unwrap();
    let back = TimestampStream::load(&path).unwrap();
    assert_eq!(correlate(&s, 500, 50_000).unwrap(), correlate(&back, 500, 50_000).unwrap());
}
