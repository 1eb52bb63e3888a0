use proptest::prelude::*;

use plasmofiber::observables::{dop_from_triple, CouplingTriple, QdSpectrum};
use plasmofiber::{Axis, Shape, Spectrum};

fn wavelengths() -> Vec<f64> {
    (0..61).map(|i| 600.0 + 5.0 * i as f64).collect()
}

proptest! {
    #[test]
    fn capsule_distance_sign_matches_containment(
        x in -60.0..60.0f64, y in -60.0..60.0f64, z in -120.0..120.0f64,
        len in 30.0..200.0f64, dia in 5.0..29.0f64,
    ) {
        let s = Shape::Capsule { axis: Axis::Z, center: [0.0; 3], length: len, diameter: dia };
        let d = s.signed_distance([x, y, z]);
        prop_assert_eq!(d < 0.0, s.contains([x, y, z]));
        // distance is 1-Lipschitz
        let d2 = s.signed_distance([x + 1.0, y, z]);
        prop_assert!((d2 - d).abs() <= 1.0 + 1e-9);
    }

    #[test]
    fn qd_weights_are_normalized(center in 650.0..850.0f64, fwhm in 5.0..200.0f64) {
        let q = QdSpectrum::gaussian(center, fwhm, &wavelengths()).unwrap();
        prop_assert!((q.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(q.weights.iter().all(|w| *w >= 0.0));
    }

    #[test]
    fn dop_is_scale_invariant_and_bounded(
        tx in 0.0..0.5f64, ty in 0.0..0.5f64, tz in 0.001..0.5f64, k in 0.01..1.9f64,
    ) {
        let wl = wavelengths();
        let n = wl.len();
        let q = QdSpectrum::gaussian(760.0, 50.0, &wl).unwrap();
        let t = |s: f64| CouplingTriple::new(wl.clone(), [vec![tx * s; n], vec![ty * s; n], vec![tz * s; n]]).unwrap();
        let p = dop_from_triple(&t(1.0), &q).unwrap();
        let ps = dop_from_triple(&t(k), &q).unwrap();
        prop_assert!((p - ps).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&p));
    }

    #[test]
    fn spectrum_csv_has_one_row_per_wavelength(vals in proptest::collection::vec(-1e3..1e3f64, 1..40)) {
        let wl: Vec<f64> = (0..vals.len()).map(|i| 600.0 + i as f64).collect();
        let s = Spectrum::new(wl, vals.clone());
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        prop_assert_eq!(text.lines().count(), vals.len() + 1);
        for (line, v) in text.lines().skip(1).zip(&vals) {
            let back: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            prop_assert!((back - v).abs() <= 1e-12 * v.abs().max(1.0));
        }
    }
}
