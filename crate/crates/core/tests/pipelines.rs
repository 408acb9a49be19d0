use quarton::circuit::CircuitParams;
use quarton::config::RunConfig;
use quarton::dissipation::{build_dissipators, dominant_partition, transitions};
use quarton::dynamics::{run_trajectory, ReadoutConfig};
use quarton::exec::Exec;
use quarton::pipeline::{analyze, readout_setup};
use quarton::sweep::{run_sweep, Axis, Constraint, SweepSpec};
use quarton::units::ang;

#[test]
fn single_point_sweep_matches_direct_analysis() {
    let cfg = RunConfig::default();
    let direct = analyze(&cfg).unwrap();
    let spec = SweepSpec {
        axis1: Axis { param: "e_q".into(), values: vec![cfg.circuit.e_q()] },
        axis2: None,
        constraints: Vec::new(),
        point: cfg.solver.clone(),
    };
    let rows = run_sweep(&cfg.circuit, &spec, Exec::Sequential).unwrap();
    assert_eq!(rows.len(), 1);
    let m = rows[0].metrics.as_ref().unwrap();
    // Setting E_Q back through E_J perturbs the last bit of E_J.
    assert!((m.cross_kerr_2chi / direct.metrics.cross_kerr_2chi - 1.0).abs() < 1e-9);
    assert!((m.self_kerr_kb / direct.metrics.self_kerr_kb - 1.0).abs() < 1e-9);
    assert!((rows[0].qbar0.unwrap() - direct.qnd[0].qbar).abs() < 1e-9);
}

#[test]
fn sweep_independent_of_execution_mode() {
    let base = CircuitParams::nominal();
    let spec = SweepSpec {
        axis1: Axis::linspace("e_q", 60.0, 80.0, 2),
        axis2: Some(Axis::linspace("e_ja_eff", 250.0, 290.0, 2)),
        constraints: vec![Constraint::ResonatorFrequency(base.omega_a_harmonic())],
        point: Default::default(),
    };
    let seq = run_sweep(&base, &spec, Exec::Sequential).unwrap();
    let par = run_sweep(&base, &spec, Exec::Parallel).unwrap();
    assert_eq!(seq, par);
    for r in &seq {
        assert!(r.ok(), "{:?}", r.message);
        // The constraint keeps the dressed resonator near its nominal frequency.
        let w10 = r.metrics.as_ref().unwrap().omega_10;
        assert!((w10 / 16.0 - 1.0).abs() < 0.02, "omega_10 {w10}");
    }
}

#[test]
fn failed_points_keep_their_row() {
    let base = CircuitParams::nominal();
    let spec = SweepSpec {
        axis1: Axis { param: "e_q".into(), values: vec![70.0, -5.0] },
        axis2: None,
        constraints: Vec::new(),
        point: Default::default(),
    };
    let rows = run_sweep(&base, &spec, Exec::Sequential).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].ok());
    assert!(!rows[1].ok());
    assert!(rows[1].metrics.is_none());
}

#[test]
fn trajectories_reproducible_per_index() {
    let cfg = RunConfig { readout: ReadoutConfig { eps0: Some(0.27), ..Default::default() }, ..Default::default() };
    let s = readout_setup(&cfg).unwrap();
    let a = run_trajectory(&s.model, s.eps0, 1, &cfg.readout, 1.0, 3).unwrap();
    let b = run_trajectory(&s.model, s.eps0, 1, &cfg.readout, 1.0, 3).unwrap();
    let c = run_trajectory(&s.model, s.eps0, 1, &cfg.readout, 1.0, 4).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.bins, c.bins);
}

#[test]
fn dominant_baths_stable_under_cluster_factor() {
    let cfg = RunConfig { readout: ReadoutConfig { eps0: Some(0.27), ..Default::default() }, ..Default::default() };
    let s = readout_setup(&cfg).unwrap();
    let ts = transitions(&s.model.energies, &s.model.x, &s.model.kappa);
    let min_rate = 0.01 * ang(cfg.circuit.kappa_r);
    let part = |c: f64| {
        let set = build_dissipators(&ts, cfg.readout.prune_threshold, c, cfg.circuit.kappa_r).unwrap();
        dominant_partition(&set, min_rate)
    };
    let reference = part(1.0);
    assert_eq!(reference.len(), 1);
    for c in [0.8, 0.9, 1.5, 2.0] {
        assert_eq!(part(c), reference, "cluster factor {c}");
    }
    // Below c·κ_r ≈ 2χ the resonator lines of different qubit states separate.
    assert!(part(0.5).len() > 1);
}
