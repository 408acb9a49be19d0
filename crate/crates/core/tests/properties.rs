use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use quarton::basis::{optimize_basis, BasisChoice, BasisSettings, Heuristic};
use quarton::circuit::CircuitParams;
use quarton::config::RunConfig;
use quarton::dynamics::{equal_likelihood_threshold, GaussianFit};
use quarton::ops::{build_annihilation, normal_order, FockSpace, Ladder, Mode};
use quarton::spectrum::squeezing_toy_check;

const N: usize = 9;

fn ladder_strategy() -> impl Strategy<Value = Ladder> {
    prop_oneof![
        Just(Ladder::Create(Mode::A)),
        Just(Ladder::Annihilate(Mode::A)),
        Just(Ladder::Create(Mode::B)),
        Just(Ladder::Annihilate(Mode::B)),
    ]
}

/// Dense product of the word's truncated matrices.
fn word_matrix(space: FockSpace, word: &[Ladder]) -> DMatrix<Complex64> {
    let a = build_annihilation(space, Mode::A).matrix;
    let b = build_annihilation(space, Mode::B).matrix;
    word.iter().fold(DMatrix::identity(space.dim(), space.dim()), |acc, op| {
        let m = match op {
            Ladder::Create(Mode::A) => a.adjoint(),
            Ladder::Annihilate(Mode::A) => a.clone(),
            Ladder::Create(Mode::B) => b.adjoint(),
            Ladder::Annihilate(Mode::B) => b.clone(),
        };
        acc * m
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normal_ordering_matches_matrix_products(
        word in prop::collection::vec(ladder_strategy(), 1..6),
        re in -2.0f64..2.0,
        im in -2.0f64..2.0,
    ) {
        let space = FockSpace::square(N).unwrap();
        let c = Complex64::new(re, im);
        let poly = normal_order(&[(c, word.clone())]).unwrap();
        let got = poly.to_matrix(space);
        let want = word_matrix(space, &word) * c;
        // Truncation only corrupts elements within `len` levels of the top.
        let safe = N - word.len();
        for i in 0..space.dim() {
            for j in 0..space.dim() {
                let (ia, ib) = space.levels(i);
                let (ja, jb) = space.levels(j);
                if ia.max(ja) >= safe || ib.max(jb) >= safe {
                    continue;
                }
                prop_assert!((got[(i, j)] - want[(i, j)]).norm() < 1e-9, "word {:?} at ({}, {})", word, i, j);
            }
        }
    }

    #[test]
    fn squeezing_toy_within_ten_percent(
        omega_a in 12.0f64..20.0,
        omega_b in 5.0f64..9.0,
        ratio in 0.002f64..0.015,
    ) {
        let zeta = ratio * omega_b;
        let c = squeezing_toy_check(omega_a, omega_b, zeta).unwrap();
        prop_assert!(((c.cross_kerr_exact - c.cross_kerr_analytic) / c.cross_kerr_analytic).abs() < 0.1);
    }

    #[test]
    fn threshold_lies_between_means(
        m0 in -5.0f64..5.0,
        gap in 0.1f64..5.0,
        s0 in 0.05f64..2.0,
        s1 in 0.05f64..2.0,
    ) {
        let f0 = GaussianFit { mean: m0, std: s0 };
        let f1 = GaussianFit { mean: m0 + gap, std: s1 };
        let t = equal_likelihood_threshold(f0, f1);
        prop_assert!(t > m0 && t < m0 + gap, "threshold {} outside ({}, {})", t, m0, m0 + gap);
    }

    #[test]
    fn config_write_then_read_is_identity(
        seed in any::<u64>(),
        e_ja in 100.0f64..900.0,
        c_a in 10.0f64..400.0,
        temperature in 1.0f64..200.0,
        pulse in 0.5f64..20.0,
        n_traj in 2usize..5000,
        optimize in any::<bool>(),
    ) {
        let mut cfg = RunConfig::default();
        cfg.set_override("seed", &seed.to_string()).unwrap();
        cfg.circuit.e_ja = e_ja;
        cfg.circuit.c_a = c_a;
        cfg.environment.temperature = temperature;
        cfg.readout.pulse_len = pulse;
        cfg.readout.n_traj = n_traj;
        cfg.set_override("solver.tilt.optimize", &optimize.to_string()).unwrap();
        let back = RunConfig::parse(&cfg.to_text()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

#[test]
fn ladder_commutator_on_interior_levels() {
    let space = FockSpace::square(N).unwrap();
    for mode in [Mode::A, Mode::B] {
        let a = build_annihilation(space, mode);
        let c = a.commutator(&a.dagger());
        for i in 0..space.dim() {
            let (ia, ib) = space.levels(i);
            let lvl = if mode == Mode::A { ia } else { ib };
            if lvl + 1 < N {
                assert!((c.matrix[(i, i)] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn harmonic_limit_recovers_harmonic_zpf() {
    // With the quarton switched off and a quadratic expansion, both modes are
    // harmonic and the a†² coefficient vanishes at (2 E_C / E_J_eff)^(1/4).
    let mut p = CircuitParams::nominal();
    p.e_j = 1e-9;
    p.alpha = 0.5;
    let s = BasisSettings { heuristic: Heuristic::MinAdagAdag, taylor_order: 2, ..Default::default() };
    let got = optimize_basis(&p, &s).unwrap();
    let want = BasisChoice::harmonic(&p);
    assert!((got.zpf_a / want.zpf_a - 1.0).abs() < 1e-4, "{} vs {}", got.zpf_a, want.zpf_a);
    assert!((got.zpf_b / want.zpf_b - 1.0).abs() < 1e-4, "{} vs {}", got.zpf_b, want.zpf_b);
    let closed = (2.0 * p.e_ca / (p.e_ja / f64::from(p.n_ja))).powf(0.25);
    assert!((want.zpf_a - closed).abs() < 1e-15);
}
