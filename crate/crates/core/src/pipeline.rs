//! End-to-end pipelines shared by the command-line driver and the tests.

use num_complex::Complex64;
use serde::Serialize;

use crate::basis::BasisChoice;
use crate::circuit::{build_hamiltonian, capacitance_transform, CircuitParams, HamiltonianMode, NodeCapacitances};
use crate::config::RunConfig;
use crate::decoherence::{budget, DecoherenceBudget, QubitStates};
use crate::dynamics::{calibrate_drive, run_lindblad, Calibration, LindbladOptions, ReadoutModel};
use crate::exec::Exec;
use crate::ops::{build_annihilation, normal_order, FockSpace, Ladder, LadderPolynomial, Mode};
use crate::sweep::{analyze_point, PointAnalysis};
use crate::Result;

pub fn analyze(cfg: &RunConfig) -> Result<PointAnalysis> {
    analyze_point(&cfg.circuit, &cfg.solver)
}

pub struct ReadoutSetup {
    pub analysis: PointAnalysis,
    pub model: ReadoutModel,
    /// Drive amplitude, GHz.
    pub eps0: f64,
    /// Present when the amplitude was calibrated rather than given.
    pub calibration: Option<Calibration>,
}

pub fn readout_setup(cfg: &RunConfig) -> Result<ReadoutSetup> {
    let analysis = analyze(cfg)?;
    let model = ReadoutModel::new(&analysis.spectrum, &analysis.params, &cfg.readout)?;
    let (eps0, calibration) = match cfg.readout.eps0 {
        Some(e) => (e, None),
        None => {
            let c = calibrate_drive(&model, cfg.readout.n_bar_target, cfg.readout.pulse_len, &LindbladOptions::from(&cfg.readout))?;
            (c.eps0, Some(c))
        }
    };
    Ok(ReadoutSetup { analysis, model, eps0, calibration })
}

pub fn decoherence_budget(cfg: &RunConfig, analysis: &PointAnalysis, echo: bool, exec: Exec) -> Result<DecoherenceBudget> {
    let qs = QubitStates::new(&analysis.params, &analysis.bundle, &analysis.spectrum)?;
    budget(&qs, &cfg.environment, &analysis.kappa, echo.then_some(&cfg.echo), exec)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    fn below(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), passed: value.is_finite() && value <= tolerance, value, tolerance }
    }
}

fn ladder_commutator_error() -> f64 {
    let space = FockSpace::new(12, 12).expect("valid space");
    let mut worst: f64 = 0.0;
    for mode in [Mode::A, Mode::B] {
        let a = build_annihilation(space, mode);
        let comm = a.commutator(&a.dagger());
        for i in 0..space.dim() {
            let (ia, ib) = space.levels(i);
            let top = match mode {
                Mode::A => ia + 1 == space.na,
                Mode::B => ib + 1 == space.nb,
            };
            if top {
                continue;
            }
            for j in 0..space.dim() {
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((comm.matrix[(i, j)] - expect).norm());
            }
        }
    }
    worst
}

fn normal_order_error() -> Result<f64> {
    let one = Complex64::new(1.0, 0.0);
    let mut worst: f64 = 0.0;
    for mode in [Mode::A, Mode::B] {
        let lhs = normal_order(&[(one, vec![Ladder::Annihilate(mode), Ladder::Create(mode)])])?;
        let rhs = normal_order(&[(one, vec![Ladder::Create(mode), Ladder::Annihilate(mode)])])?.add(&LadderPolynomial::constant(one));
        let diff = lhs.sub(&rhs);
        worst = worst.max(diff.terms().map(|t| t.coeff.norm()).fold(0.0, f64::max));
    }
    Ok(worst)
}

fn capacitance_error() -> Result<f64> {
    let reference = [(0, 0, 223.6), (0, 1, 9.2), (1, 0, 9.2), (1, 1, 265.7), (2, 2, 1291.3), (3, 3, 3228.4)];
    let r = capacitance_transform(&NodeCapacitances::new(3.0, 7.5, 80.0, 70.0), 538.0, 186.7)?;
    Ok(reference
        .iter()
        .map(|&(i, j, v)| (r.e_c_matrix[(i, j)] - v).abs() / v)
        .fold(0.0, f64::max))
}

fn hermiticity_error(params: &CircuitParams) -> Result<f64> {
    let space = FockSpace::square(12)?;
    let h = build_hamiltonian(params, &BasisChoice::harmonic(params), space, HamiltonianMode::Exact)?;
    Ok((&h.matrix - h.matrix.transpose()).amax())
}

/// Built-in invariant suite.
pub fn self_test(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut checks = vec![
        Check::below("ladder_commutator", ladder_commutator_error(), 1e-12),
        Check::below("normal_ordering", normal_order_error()?, 1e-12),
        Check::below("hamiltonian_hermitian", hermiticity_error(&cfg.circuit)?, 1e-10),
        Check::below("capacitance_matrix_rel_error", capacitance_error()?, 5e-3),
    ];
    let setup_cfg = RunConfig { readout: crate::dynamics::ReadoutConfig { eps0: Some(0.27), ..cfg.readout.clone() }, ..cfg.clone() };
    let setup = readout_setup(&setup_cfg)?;
    let opts = LindbladOptions::from(&cfg.readout);
    let run = run_lindblad(&setup.model, setup.eps0, 0, 1.0, 1.0, &opts)?;
    checks.push(Check::below("lindblad_trace_preservation", run.max_trace_deviation, 1e-6));
    checks.push(Check::below("lindblad_hermiticity", run.max_hermiticity_deviation, 1e-8));
    checks.push(Check::below("lindblad_positivity", (-run.min_eigenvalue).max(0.0), 1e-8));
    let closed = run_lindblad(&setup.model.without_dissipation(), setup.eps0, 0, 1.0, 1.0, &opts)?;
    let purity_drift = closed.purity.iter().map(|p| (1.0 - p).abs()).fold(0.0, f64::max);
    checks.push(Check::below("unitary_purity", purity_drift, 1e-6));
    Ok(checks)
}
