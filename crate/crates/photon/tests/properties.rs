use proptest::prelude::*;

use photon_stats::*;

proptest! {
    #[test]
    fn lifetime_ratio_is_scale_free(t0 in 1.0..1e3f64, t1 in 0.1..1e3f64, a in 1e-3..1e3f64, r in 0.0..1.0f64) {
        let (f, df) = purcell_from_lifetimes(t0, t1, r);
        let (g, dg) = purcell_from_lifetimes(a * t0, a * t1, r);
        prop_assert!((f - g).abs() <= 1e-12 * f);
        prop_assert!((df - dg).abs() <= 1e-12 * df.max(1e-300));
    }

    #[test]
    fn hwp_contrast_ignores_overall_scale(p in 0.0..0.95f64, phase in 0.0..std::f64::consts::TAU, k in 0.01..100.0f64) {
        let angles: Vec<f64> = (0..=12).map(|i| 7.5 * i as f64).collect();
        let make = |s: f64| HwpScan {
            angles_deg: angles.clone(),
            samples: angles
                .iter()
                .map(|t| vec![s * (1.0 + p * (4.0 * t.to_radians() + phase).cos())])
                .collect(),
        };
        let a = dop_from_hwp_scan(&make(1.0)).unwrap().p;
        let b = dop_from_hwp_scan(&make(k)).unwrap().p;
        prop_assert!((a - b).abs() < 1e-9);
        prop_assert!((a - p).abs() < 1e-9);
    }

    #[test]
    fn power_fit_ignores_point_order(seed in 0u64..1000) {
        let mut pts: Vec<PowerPoint> = [1.0, 3.0, 7.0, 12.0, 20.0]
            .iter()
            .map(|&p| PowerPoint { power_uw: p, t_ns: 1.0 / (0.002 * p + 0.01) * (1.0 + 0.01 * (p * 1.7).sin()), t_sigma_ns: 0.5 })
            .collect();
        let a = fit_power_dependence(&pts).unwrap();
        let n = pts.len();
        pts.rotate_left((seed as usize) % n);
        pts.swap(0, (seed as usize / 7) % n);
        let b = fit_power_dependence(&pts).unwrap();
        prop_assert!((a.alpha - b.alpha).abs() <= 1e-12 * a.alpha.abs());
        prop_assert!((a.intercept - b.intercept).abs() <= 1e-12 * a.intercept.abs());
    }
}
