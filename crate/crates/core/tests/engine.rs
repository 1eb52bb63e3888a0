mod support;

use plasmofiber::fdtd::DipoleSource;
use plasmofiber::geometry::{Material, MonitorSpec, SceneShape, RADIATION_BOX};
use plasmofiber::{
    purcell_spectrum, rasterize, run, vacuum_reference, Axis, MonitorSet, RunError, SceneConfig, Shape,
    Simulation, Termination, YeeGrid,
};

fn capped(scene: &SceneConfig, steps: usize) -> MonitorSet {
    let mut s = scene.clone();
    s.run.max_steps = steps;
    match run::<f64>(&s) {
        Err(RunError::NotConverged(m)) => *m,
        Ok(m) => m,
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn rod_energy_bookkeeping() {
    let scene = support::rod_scene(5.0, 80.0, 80.0, 10.0, [0.0, 0.0, 1.0]);
    let m = run::<f32>(&scene).unwrap();
    assert_eq!(m.termination, Some(Termination::Decayed));
    let src = m.source_power();
    let rad = m.flux(RADIATION_BOX).unwrap();
    let abs = m.absorbed_power();
    for i in 0..src.len() {
        let r = (rad.values[i] + abs.values[i]) / src.values[i];
        assert!((r - 1.0).abs() < 0.02, "{}: {r}", src.wavelengths[i]);
        assert!(abs.values[i] > 0.0);
    }
}

#[test]
fn zero_state_stays_zero() {
    let scene = support::rod_scene(10.0, 60.0, 60.0, 10.0, [0.0, 0.0, 1.0]);
    let mut sim = Simulation::<f64>::new(&scene).unwrap();
    sim.sources.clear();
    for _ in 0..300 {
        sim.advance().unwrap();
    }
    assert!(sim.state.e.iter().chain(&sim.state.h).all(|f| f.iter().all(|&v| v == 0.0)));
    assert_eq!(sim.energy(), 0.0);
}

#[test]
fn cpml_absorbs_60_db() {
    let grid = YeeGrid::new([40; 3], 5.0, [0.0; 3]).unwrap();
    let mut scene = SceneConfig::vacuum(grid, DipoleSource::new([0.4, 1.1, 2.3], [1.0, 0.0, 0.0]));
    scene.wavelengths = support::short_wavelengths();
    let vac = vacuum_reference(&scene, 60.0).unwrap();
    let m = run::<f64>(&vac).unwrap();
    assert_eq!(m.termination, Some(Termination::Decayed));
    let db = 10.0 * (m.peak_energy / m.final_energy).log10();
    assert!(db > 60.0, "{db} dB");
    let f = purcell_spectrum(&m, &m).unwrap();
    assert!(f.total.iter().all(|&v| v == 1.0));
}

#[test]
fn monitors_are_identical_across_thread_counts() {
    let scene = support::rod_scene(5.0, 60.0, 60.0, 5.0, [0.0, 0.6, 0.8]);
    let go = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| capped(&scene, 400))
    };
    let (a, b) = (go(1), go(3));
    assert_eq!(a.source.j, b.source.j);
    assert_eq!(a.source.e, b.source.e);
    assert_eq!(a.absorption.e, b.absorption.e);
    for (x, y) in a.surfaces.iter().zip(&b.surfaces) {
        for (fx, fy) in x.faces.iter().zip(&y.faces) {
            for s in 0..2 {
                assert_eq!(fx.sets[s].e, fy.sets[s].e);
                assert_eq!(fx.sets[s].h, fy.sets[s].h);
            }
        }
    }
}

#[test]
fn mirror_symmetric_scene_gives_mirror_fields() {
    let mut scene = support::rod_scene(5.0, 60.0, 60.0, 5.0, [0.0, 0.0, 1.0]);
    scene.dipole.position[1] = 0.0;
    for (name, x, o) in [("zp", 20.0, [0.0, 0.0, 1.0]), ("zm", -20.0, [0.0, 0.0, 1.0]), ("xp", 20.0, [1.0, 0.0, 0.0]), ("xm", -20.0, [1.0, 0.0, 0.0])] {
        scene.monitors.push(MonitorSpec::Probe {
            name: name.into(),
            position: [x, 7.0, 30.0],
            orientation: o,
        });
    }
    let m = capped(&scene, 500);
    let g = |n: &str| m.green(n).unwrap();
    for (p, q) in g("zp").iter().zip(g("zm")) {
        assert!((p - q).norm() <= 1e-9 * p.norm(), "{p} vs {q}");
    }
    for (p, q) in g("xp").iter().zip(g("xm")) {
        assert!((p + q).norm() <= 1e-9 * p.norm(), "{p} vs {q}");
    }
}

#[test]
fn green_function_is_reciprocal() {
    let r1 = [12.0, -7.0, 3.0];
    let r2 = [-21.0, 16.0, 28.0];
    let (a, b) = ([1.0, 0.0, 0.0], [0.0, 0.6, 0.8]);
    let scene = |src: [f64; 3], o: [f64; 3], at: [f64; 3], po: [f64; 3]| {
        let grid = YeeGrid::covering([-100.0; 3], [100.0; 3], 5.0, 15, [0.0; 3]).unwrap();
        let mut s = SceneConfig::vacuum(grid, DipoleSource::new(src, o));
        s.shapes.push(SceneShape {
            shape: Shape::Block {
                corner: [-40.0, 0.0, -30.0],
                size: [80.0, 30.0, 50.0],
            },
            material: Material::silica(),
        });
        s.monitors.push(MonitorSpec::Probe {
            name: "p".into(),
            position: at,
            orientation: po,
        });
        s.wavelengths = support::short_wavelengths();
        s
    };
    let g12 = run::<f64>(&scene(r1, a, r2, b)).unwrap().green("p").unwrap();
    let g21 = run::<f64>(&scene(r2, b, r1, a)).unwrap().green("p").unwrap();
    for (x, y) in g12.iter().zip(&g21) {
        assert!((x - y).norm() < 2e-3 * x.norm(), "{x} vs {y}");
    }
}

#[test]
fn touching_dipole_stays_stable() {
    let mut scene = support::rod_scene(5.0, 60.0, 60.0, 0.0, [0.0, 0.0, 1.0]);
    scene.dipole.position[1] = 0.0;
    let m = capped(&scene, 6000);
    assert!(m.final_energy.is_finite());
    assert!(m.final_energy < m.peak_energy);
    assert!(m.source_power().values.iter().all(|v| v.is_finite() && *v > 0.0));
}

#[test]
fn rod_volume_converges() {
    let l = 160.0;
    let grid = YeeGrid::covering([-30.0, -30.0, -100.0], [30.0, 30.0, 100.0], 2.5, 10, [0.0; 3]).unwrap();
    let mut scene = SceneConfig::vacuum(grid, DipoleSource::new([0.0, 0.0, 95.0], [0.0, 0.0, 1.0]));
    let rod = Shape::Capsule {
        axis: Axis::Z,
        center: [0.0; 3],
        length: l,
        diameter: 25.0,
    };
    let exact = rod.volume().unwrap();
    scene.shapes.push(SceneShape {
        shape: rod,
        material: Material::gold(),
    });
    let m = rasterize::<f64>(&scene).unwrap();
    let v = m.metal_volume(2.5);
    assert!((v / exact - 1.0).abs() < 0.03, "{v} vs {exact}");
}

#[test]
fn fiber_cross_section_area() {
    let grid = YeeGrid::covering([-300.0, -300.0, 0.0], [300.0, 300.0, 100.0], 5.0, 0, [0.0; 3]).unwrap();
    let mut scene = SceneConfig::vacuum(grid.clone(), DipoleSource::new([0.0, 290.0, 50.0], [0.0, 0.0, 1.0]));
    scene.shapes.push(SceneShape {
        shape: Shape::Cylinder {
            axis: Axis::Z,
            center: [0.0; 3],
            radius: 265.0,
            length: None,
        },
        material: Material::silica(),
    });
    let m = rasterize::<f64>(&scene).unwrap();
    let depth = grid.extent[2] as f64 * 5.0;
    let area = m.dielectric_volume(1.4537f64.powi(2), 5.0) / depth;
    let exact = std::f64::consts::PI * 265.0 * 265.0;
    assert!((area / exact - 1.0).abs() < 0.02, "{area} vs {exact}");
}

#[test]
fn purcell_is_amplitude_invariant() {
    let scene = support::rod_scene(10.0, 60.0, 60.0, 10.0, [0.0, 0.0, 1.0]);
    let mut loud = scene.clone();
    loud.dipole.pulse.amplitude = 7.5;
    let (a, b) = (capped(&scene, 600), capped(&loud, 600));
    let f = purcell_spectrum(&b, &a).unwrap();
    for v in f.total {
        assert!((v - 1.0).abs() < 1e-9, "{v}");
    }
}
