use fracture_core::deck::Loading;
use fracture_core::initcond::ConfigSampler;
use fracture_core::phasefield::*;
use fracture_core::{CartesianGrid, FractureConfig, FractureSegment, MaterialRegistry, MaterialSpec, SeededRng};

fn material(name: &str) -> MaterialSpec {
    MaterialRegistry::with_defaults().get(name).unwrap().clone()
}

fn patch_test(mat: &MaterialSpec) {
    let grid = CartesianGrid::square(6, 1.0).unwrap();
    let mut body = ElasticBody::new(Mesh::new(grid), mat).unwrap();
    let (gxx, gxy, gyx, gyy) = (1e-4, 3e-5, -2e-5, 2e-4);
    let u = body
        .solve_static(|p| [gxx * p[0] + gxy * p[1], gyx * p[0] + gyy * p[1]], 1e-14, 10_000)
        .unwrap();
    let c = mat.plane_strain_stiffness();
    let e = [gxx, gyy, gxy + gyx];
    let want: Vec<f64> = (0..3).map(|i| (0..3).map(|j| c[i][j] * e[j]).sum()).collect();
    let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for s in body.stresses(&u) {
        for i in 0..3 {
            assert!((s[i] - want[i]).abs() <= 1e-8 * scale, "{} vs {}", s[i], want[i]);
        }
    }
}

#[test]
fn patch_test_isotropic() {
    patch_test(&material("pbx"));
    patch_test(&material("concrete"));
}

#[test]
fn patch_test_transversely_isotropic() {
    patch_test(&material("shale"));
}

#[test]
fn unloaded_elastic_block_conserves_energy() {
    let grid = CartesianGrid::square(12, 0.25).unwrap();
    let mat = material("pbx");
    let mut body = ElasticBody::new(Mesh::new(grid), &mat).unwrap();
    let mut st = DynamicState::at_rest(2 * grid.n_nodes());
    let l = grid.side_length;
    for j in 0..=grid.ny {
        for i in 0..=grid.nx {
            let p = grid.node_position(i, j);
            let n = grid.node_index(i, j);
            let s = (std::f64::consts::PI * p[0] / l).sin() * (std::f64::consts::PI * p[1] / l).cos();
            st.v[2 * n] = 0.3 * s;
            st.v[2 * n + 1] = -0.2 * s;
        }
    }
    let dt = 0.5 * grid.cell_size() / mat.p_wave_speed();
    let scheme = Newmark::trapezoidal(dt);
    let controls = SolverControls {
        cg_tol: 1e-12,
        ..Default::default()
    };
    let total = |b: &ElasticBody, s: &DynamicState| s.kinetic_energy(b.lumped_mass()) + b.strain_energy(&s.u);
    let e0 = total(&body, &st);
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        newmark_step(&mut body, &mut st, &scheme, &[], &controls, k).unwrap();
        worst = worst.max(((total(&body, &st) - e0) / e0).abs());
    }
    assert!(worst < 0.01, "energy drift {worst}");
}

#[test]
fn tiny_loading_is_pure_elastodynamics() {
    let grid = CartesianGrid::square(10, 0.25).unwrap();
    let mat = material("pbx");
    let params = PhaseFieldParams {
        boundary_speed: 1e-6,
        cg_tol: 1e-13,
        ..Default::default()
    };
    let config = FractureConfig::empty(0.25);
    let mut solver = PhaseFieldSolver::new(&config, &mat, &params, &grid, false).unwrap();

    let mut body = ElasticBody::new(Mesh::new(grid), &mat).unwrap();
    let mut st = DynamicState::at_rest(2 * grid.n_nodes());
    let mut rates = Vec::new();
    for i in 0..=grid.nx {
        rates.push((2 * grid.node_index(i, 0) + 1, -1e-6));
        rates.push((2 * grid.node_index(i, grid.ny) + 1, 1e-6));
    }
    for &(d, r) in &rates {
        st.v[d] = r;
    }
    let scheme = Newmark::trapezoidal(solver.dt());
    let controls = SolverControls {
        cg_tol: 1e-13,
        ..Default::default()
    };
    for k in 1..=10 {
        solver.step().unwrap();
        let t = k as f64 * solver.dt();
        let bc: Vec<(usize, f64)> = rates.iter().map(|&(d, r)| (d, r * t)).collect();
        newmark_step(&mut body, &mut st, &scheme, &bc, &controls, k).unwrap();
    }
    assert!(solver.psi().iter().all(|&p| p.abs() < 1e-12));
    let scale = st.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (a, b) in solver.displacement().iter().zip(&st.u) {
        assert!((a - b).abs() <= 1e-12 * scale, "{a} vs {b} (scale {scale})");
    }
}

fn seeded_run(speed: f64) -> PhaseFieldRun {
    let grid = CartesianGrid::square(32, 0.25).unwrap();
    let config = FractureConfig::new(0.25, vec![FractureSegment::horizontal([0.125, 0.125], 0.06, 0.002)]).unwrap();
    let params = PhaseFieldParams {
        boundary_speed: speed,
        max_steps: 3000,
        ..Default::default()
    };
    run_phasefield(&config, &material("pbx"), &params, &grid, true).unwrap()
}

#[test]
fn centered_seed_cracks_horizontally() {
    let run = seeded_run(1.0);
    assert!(!run.censored());
    let grid = run.psi_final.grid;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for j in 0..=grid.ny {
        for i in 0..=grid.nx {
            if run.psi_final.values[grid.node_index(i, j)] >= 0.99 {
                xs.push(i as f64);
                ys.push(j as f64);
            }
        }
    }
    let var = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
    };
    let mean_y = ys.iter().sum::<f64>() / ys.len() as f64;
    assert!((mean_y - 16.0).abs() <= 2.0, "band centred at row {mean_y}");
    assert!(var(&xs) > 10.0 * var(&ys), "band is not horizontal");
    let snaps = run.snapshots.as_ref().unwrap();
    assert_eq!(snaps.len(), 10);
    assert_eq!(snaps[9].values, run.psi_final.values);
    for w in snaps.windows(2) {
        assert!(w[1].values.iter().zip(&w[0].values).all(|(b, a)| *b >= a - 1e-6));
    }
}

#[test]
fn identical_runs_are_bit_identical() {
    let a = seeded_run(1.0);
    let b = seeded_run(1.0);
    assert_eq!(a.failure_time.map(f64::to_bits), b.failure_time.map(f64::to_bits));
    assert!(a.psi_final.values.iter().zip(&b.psi_final.values).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn damage_and_history_are_monotone_and_bounded() {
    let grid = CartesianGrid::square(16, 0.25).unwrap();
    let mut rng = SeededRng::new(9, 0);
    let config = ConfigSampler::default().sample(&mut rng);
    for loading in [Loading::Axial, Loading::Biaxial] {
        let params = PhaseFieldParams {
            loading,
            ..Default::default()
        };
        let mut solver = PhaseFieldSolver::new(&config, &material("pbx"), &params, &grid, false).unwrap();
        let mut psi = solver.psi().to_vec();
        let mut h = solver.hplus().to_vec();
        while solver.failed_at().is_none() && solver.step_index() < 400 {
            solver.step().unwrap();
            assert!(solver.psi().iter().zip(&psi).all(|(n, o)| *n >= o - 1e-12));
            assert!(solver.psi().iter().all(|&p| (-1e-10..=1.0 + 1e-10).contains(&p)));
            assert!(solver.hplus().iter().zip(&h).all(|(n, o)| n >= o && *n >= 0.0));
            psi = solver.psi().to_vec();
            h = solver.hplus().to_vec();
        }
    }
}

#[test]
fn elastoplastic_run_keeps_plastic_strain_monotone() {
    let grid = CartesianGrid::square(12, 0.25).unwrap();
    let config = FractureConfig::new(0.25, vec![FractureSegment::vertical([0.1, 0.12], 0.05, 0.002)]).unwrap();
    let params = PhaseFieldParams {
        loading: Loading::Biaxial,
        boundary_speed: 20.0,
        ..Default::default()
    };
    let mut solver = PhaseFieldSolver::new(&config, &material("aluminum"), &params, &grid, false).unwrap();
    let mut alpha: Vec<f64> = solver.state().plastic.iter().map(|p| p.alpha).collect();
    for _ in 0..150 {
        solver.step().unwrap();
        let next: Vec<f64> = solver.state().plastic.iter().map(|p| p.alpha).collect();
        assert!(next.iter().zip(&alpha).all(|(n, o)| n >= o));
        alpha = next;
    }
    assert!(alpha.iter().any(|&a| a > 0.0), "block never yielded");
}

#[test]
fn params_resolve_and_reject() {
    let grid = CartesianGrid::square(32, 0.25).unwrap();
    let mat = material("pbx");
    let (w0, dt) = PhaseFieldParams::default().resolve(&grid, &mat).unwrap();
    assert!((w0 - 2.0 * 0.25 / 32.0).abs() < 1e-15);
    assert!((dt - 0.5 * (0.25 / 32.0) / mat.p_wave_speed()).abs() < 1e-18);
    let narrow = PhaseFieldParams {
        w0: Some(0.25 / 32.0),
        ..Default::default()
    };
    assert!(narrow.resolve(&grid, &mat).is_err());
    let neg = PhaseFieldParams {
        dt: Some(-1.0),
        ..Default::default()
    };
    assert!(neg.resolve(&grid, &mat).is_err());
    let json = serde_json::to_string(&PhaseFieldParams::default()).unwrap();
    let back: PhaseFieldParams = serde_json::from_str(&json).unwrap();
    assert_eq!(back, PhaseFieldParams::default());
    assert!(serde_json::from_str::<PhaseFieldParams>(r#"{"bogus": 1}"#).is_err());
    let pts = PhaseFieldParams::default().progression_points();
    assert!((pts[0] - 0.3).abs() < 1e-15 && (pts[9] - 1.0).abs() < 1e-15);
}

#[test]
fn energy_trace_csv() {
    let rows = [EnergyRow {
        step: 3,
        time: 1e-6,
        kinetic: 2.0,
        strain: 0.5,
        max_psi: 0.25,
    }];
    let mut buf = Vec::new();
    write_energy_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), "step,time,kinetic,strain,max_psi");
    assert!(text.lines().nth(1).unwrap().starts_with("3,1e-6,2e0,5e-1,0.25"));
}
