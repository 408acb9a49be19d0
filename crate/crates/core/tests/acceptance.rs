//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Failing criteria are reported, not hidden; the process exits 0 so the
//! report is always produced in full.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use quarton::basis::{optimize_basis, optimize_tilt, BasisChoice, BasisSettings, Heuristic, DEFAULT_TILT_RANGE};
use quarton::circuit::{capacitance_transform, CircuitParams, NodeCapacitances};
use quarton::config::RunConfig;
use quarton::dissipation::{build_dissipators, dominant_partition, transitions};
use quarton::dynamics::{run_lindblad, run_trajectories, run_trajectory, LindbladOptions, ReadoutConfig};
use quarton::exec::Exec;
use quarton::ops::{build_annihilation, normal_order, FockSpace, Ladder, Mode};
use quarton::pipeline::{analyze, decoherence_budget, readout_setup};
use quarton::spectrum::squeezing_toy_check;
use quarton::sweep::{run_sweep, spread_minimum, SweepSpec};
use quarton::units::ang;

struct Report {
    passed: usize,
    failed: usize,
}

impl Report {
    fn line(&mut self, id: &str, ok: bool, detail: String) {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
        println!("{} [{id}] {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn rel(got: f64, want: f64) -> f64 {
    (got / want - 1.0).abs()
}

fn within(got: f64, want: f64, tol: f64) -> bool {
    rel(got, want) <= tol
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn capacitance(r: &mut Report) {
    let start = Instant::now();
    let res = capacitance_transform(&NodeCapacitances::new(3.0, 7.5, 80.0, 70.0), 538.0, 186.7).unwrap();
    let el = start.elapsed();
    let reference = [(0, 0, 223.6), (0, 1, 9.2), (1, 0, 9.2), (1, 1, 265.7), (2, 2, 1291.3), (3, 3, 3228.4)];
    let worst = reference.iter().map(|&(i, j, v)| rel(res.e_c_matrix[(i, j)], v)).fold(0.0, f64::max);
    r.line("1", worst <= 5e-3 && secs(el) < 1.0, format!("capacitance matrix worst rel error {worst:.2e} (tol 5e-3), {:.3} s", secs(el)));
}

fn spectrum(r: &mut Report) {
    let start = Instant::now();
    let a = analyze(&RunConfig::default()).unwrap();
    let el = secs(start.elapsed());
    let m = &a.metrics;
    let checks = [
        ("omega_10", m.omega_10, 16.1, 0.01),
        ("omega_01", m.omega_01, 7.78, 0.01),
        ("2chi", m.cross_kerr_2chi, 252.0, 0.05),
        ("K_b", m.self_kerr_kb, 475.0, 0.05),
        ("S0_7", m.spread_q0, 21.9, 0.20),
        ("S1_7", m.spread_q1, 15.7, 0.20),
    ];
    for (name, got, want, tol) in checks {
        r.line("2", within(got, want, tol), format!("{name} = {got:.4} vs {want} (±{:.0}%)", tol * 100.0));
    }
    r.line("2", el < 60.0, format!("spectrum runtime {el:.2} s (< 60 s)"));
}

fn tilt(r: &mut Report) {
    let t = optimize_tilt(&CircuitParams::nominal(), &BasisSettings::default(), DEFAULT_TILT_RANGE).unwrap();
    r.line("3", (t.tilt - 1.02).abs() <= 0.02, format!("optimal tilt {:.4} vs 1.02 ± 0.02", t.tilt));
}

fn line_cut(r: &mut Report) {
    let start = Instant::now();
    let spec = SweepSpec::line_cut(50.0, 90.0, 10);
    let rows = run_sweep(&CircuitParams::nominal(), &spec, Exec::Parallel).unwrap();
    let el = secs(start.elapsed());
    let step = spec.axis1.values[1] - spec.axis1.values[0];
    let best = spread_minimum(&rows).expect("successful points");
    r.line("4", (best.e_q - 70.0).abs() <= step, format!("spread minimum at E_Q = {:.2} GHz (70 ± {step:.2})", best.e_q));
    let (q0, q1) = (best.qbar0.unwrap(), best.qbar1.unwrap());
    r.line("4", q0 > 0.99 && q1 > 0.99, format!("Qbar at minimum {:.4} / {:.4} (> 0.99)", q0, q1));
    let metric = |f: fn(&quarton::spectrum::SpectrumMetrics) -> f64| -> Vec<f64> {
        rows.iter().map(|row| f(row.metrics.as_ref().unwrap())).collect()
    };
    let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
    r.line("4", increasing(&metric(|m| m.cross_kerr_2chi)) && increasing(&metric(|m| m.self_kerr_kb)), "2chi and K_b monotone along the cut".into());
    r.line("4", el < 600.0, format!("line-cut runtime {el:.1} s (< 600 s)"));
}

fn lindblad(r: &mut Report) -> (RunConfig, f64) {
    let start = Instant::now();
    let cfg = RunConfig::default();
    let s = readout_setup(&cfg).unwrap();
    let opts = LindbladOptions::from(&cfg.readout);
    let want = [0.9913, 0.9998];
    for (k, w) in want.iter().enumerate() {
        let res = run_lindblad(&s.model, s.eps0, k, cfg.readout.pulse_len, cfg.readout.ringdown, &opts).unwrap();
        let pp = (res.qnd_fidelity - w) * 100.0;
        r.line("5", pp.abs() <= 0.5, format!("QND |{k}> {:.3}% vs {:.2}% (±0.5 pp)", res.qnd_fidelity * 100.0, w * 100.0));
        r.line("5", res.max_trace_deviation <= 1e-8, format!("trace deviation |{k}> {:.1e} (≤ 1e-8)", res.max_trace_deviation));
    }
    let el = secs(start.elapsed());
    r.line("5", el < 1800.0, format!("Lindblad runtime {el:.1} s (< 1800 s), eps0 {:.4} GHz", s.eps0));
    (cfg, s.eps0)
}

fn trajectories(r: &mut Report, cfg: &RunConfig, eps0: f64) {
    let start = Instant::now();
    let s = readout_setup(&RunConfig { readout: ReadoutConfig { eps0: Some(eps0), ..cfg.readout.clone() }, ..cfg.clone() }).unwrap();
    let windows = [1.0, 2.0, 3.0, 4.0, 5.0];
    let ens = run_trajectories(&s.model, eps0, &cfg.readout, &windows, Exec::Parallel).unwrap();
    let el = secs(start.elapsed());
    let last = ens.final_stats();
    for (k, (got, want)) in [(last.fidelity0, 0.9952), (last.fidelity1, 0.9969)].into_iter().enumerate() {
        let pp = (got - want) * 100.0;
        r.line("6", pp.abs() <= 1.0, format!("readout fidelity |{k}> {:.3}% vs {:.2}% (±1 pp, {} traj)", got * 100.0, want * 100.0, cfg.readout.n_traj));
    }
    let snr: Vec<f64> = ens.stats.iter().map(|s| s.snr).collect();
    let fid: Vec<f64> = ens.stats.iter().map(|s| 0.5 * (s.fidelity0 + s.fidelity1)).collect();
    let mono = |v: &[f64]| v.windows(2).all(|w| w[1] >= w[0] - 1e-9);
    r.line("6", mono(&snr), format!("SNR monotone over 1-5 ns: {:?}", snr.iter().map(|x| (x * 100.0).round() / 100.0).collect::<Vec<_>>()));
    r.line("6", mono(&fid), format!("fidelity monotone over 1-5 ns: {:?}", fid.iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>()));
    println!("     trajectory runtime {el:.1} s");

    // Seed determinism: individual trajectories replay bit-for-bit.
    let duration = windows[windows.len() - 1];
    let replay = [(0, 0), (0, 517), (1, 3), (1, cfg.readout.n_traj - 1)];
    let same = replay.iter().all(|&(q, i)| {
        run_trajectory(&s.model, eps0, q, &cfg.readout, duration, i).unwrap() == ens.records[q][i]
    });
    r.line("8", same, "trajectory replay from (seed, stream) is bit-identical".into());
}

fn decoherence(r: &mut Report) {
    let cfg = RunConfig::default();
    let a = analyze(&cfg).unwrap();
    let start = Instant::now();
    let b = decoherence_budget(&cfg, &a, false, Exec::Parallel).unwrap();
    let el = secs(start.elapsed());
    let time = |n: &str| b.channel(n).unwrap().time;
    let checks = [
        ("resistor 1/Γ", b.resistor.total.recip(), 0.113, 0.05),
        ("resistor charge part", b.resistor.charge.recip(), 0.871, 0.05),
        ("resistor phase part", b.resistor.phase.recip(), 0.130, 0.05),
        ("quasiparticle T1", time("quasiparticle"), 0.42e-3, 0.10),
        ("dielectric T1", time("dielectric"), 72e-6, 0.10),
        ("flux-noise T1", time("flux_t1"), 3.9e-3, 0.20),
        ("thermal-photon T2", time("thermal_photon"), 0.51e-3, 0.10),
    ];
    for (name, got, want, tol) in checks {
        r.line("7", within(got, want, tol), format!("{name} = {got:.4e} s vs {want:.3e} s (±{:.0}%)", tol * 100.0));
    }
    r.line("7", el < 300.0, format!("budget runtime without echo {el:.2} s (< 300 s)"));

    let start = Instant::now();
    let e = decoherence_budget(&cfg, &a, true, Exec::Parallel).unwrap();
    let el = secs(start.elapsed());
    let echo = e.echo.as_ref().unwrap();
    let ratio = echo.t2 / 1.8e-3;
    let bound = if echo.lower_bound { " (lower bound)" } else { "" };
    r.line("7", (0.5..=2.0).contains(&ratio), format!("flux echo T2 = {:.3e} s{bound} vs 1.8e-3 s (factor 2)", echo.t2));
    r.line("7", el < 1200.0, format!("echo runtime {el:.1} s (< 1200 s)"));
}

fn properties(r: &mut Report) {
    // Normal ordering against dense matrix products on interior levels.
    let n = 10;
    let space = FockSpace::square(n).unwrap();
    let a = build_annihilation(space, Mode::A).matrix;
    let b = build_annihilation(space, Mode::B).matrix;
    use Ladder::*;
    let words = [
        vec![Annihilate(Mode::A), Create(Mode::A)],
        vec![Annihilate(Mode::A), Annihilate(Mode::A), Create(Mode::A), Create(Mode::A)],
        vec![Annihilate(Mode::B), Create(Mode::A), Create(Mode::B), Annihilate(Mode::A)],
        vec![Annihilate(Mode::B), Annihilate(Mode::B), Create(Mode::B), Annihilate(Mode::A), Create(Mode::A)],
    ];
    let mut worst: f64 = 0.0;
    for w in &words {
        let poly = normal_order(&[(Complex64::new(1.0, 0.0), w.clone())]).unwrap().to_matrix(space);
        let dense = w.iter().fold(nalgebra::DMatrix::<Complex64>::identity(space.dim(), space.dim()), |acc, op| {
            acc * match op {
                Create(Mode::A) => a.adjoint(),
                Annihilate(Mode::A) => a.clone(),
                Create(Mode::B) => b.adjoint(),
                Annihilate(Mode::B) => b.clone(),
            }
        });
        let safe = n - w.len();
        for i in 0..space.dim() {
            for j in 0..space.dim() {
                let (ia, ib) = space.levels(i);
                let (ja, jb) = space.levels(j);
                if ia.max(ja) < safe && ib.max(jb) < safe {
                    worst = worst.max((poly[(i, j)] - dense[(i, j)]).norm());
                }
            }
        }
    }
    r.line("8", worst <= 1e-9, format!("normal ordering vs matrix oracle max error {worst:.1e} (≤ 1e-9)"));

    let mut comm_err: f64 = 0.0;
    for mode in [Mode::A, Mode::B] {
        let op = build_annihilation(space, mode);
        let c = op.commutator(&op.dagger());
        for i in 0..space.dim() {
            let (ia, ib) = space.levels(i);
            let lvl = if mode == Mode::A { ia } else { ib };
            if lvl + 1 < n {
                comm_err = comm_err.max((c.matrix[(i, i)] - Complex64::new(1.0, 0.0)).norm());
            }
        }
    }
    r.line("8", comm_err <= 1e-12, format!("[a, a†] = 1 on interior levels, error {comm_err:.1e}"));

    let mut p = CircuitParams::nominal();
    p.e_j = 1e-9;
    p.alpha = 0.5;
    let s = BasisSettings { heuristic: Heuristic::MinAdagAdag, taylor_order: 2, ..Default::default() };
    let got = optimize_basis(&p, &s).unwrap();
    let want = BasisChoice::harmonic(&p);
    let zerr = rel(got.zpf_a, want.zpf_a).max(rel(got.zpf_b, want.zpf_b));
    r.line("8", zerr <= 1e-4, format!("harmonic-limit zpf rel error {zerr:.1e} (optimizer tolerance 1e-4)"));

    let sq = squeezing_toy_check(16.0, 7.5, 0.1).unwrap();
    let serr = rel(sq.cross_kerr_exact, sq.cross_kerr_analytic);
    r.line("8", serr <= 0.1, format!("squeezing toy model vs -2ζ²/ω_b rel error {serr:.3} (≤ 0.1)"));

    let cfg = RunConfig { readout: ReadoutConfig { eps0: Some(0.27), ..Default::default() }, ..Default::default() };
    let setup = readout_setup(&cfg).unwrap();
    let opts = LindbladOptions { rtol: 1e-10, atol: 1e-12, ..LindbladOptions::from(&cfg.readout) };
    let closed = run_lindblad(&setup.model.without_dissipation(), 0.27, 0, 5.0, 5.0, &opts).unwrap();
    let drift = closed.purity.iter().map(|x| (1.0 - x).abs()).fold(0.0, f64::max);
    r.line("8", drift <= 1e-8, format!("unitary purity drift {drift:.1e} (≤ 1e-8, rtol 1e-10)"));

    let ts = transitions(&setup.model.energies, &setup.model.x, &setup.model.kappa);
    let min_rate = 0.01 * ang(cfg.circuit.kappa_r);
    let part = |c: f64| {
        let set = build_dissipators(&ts, cfg.readout.prune_threshold, c, cfg.circuit.kappa_r).unwrap();
        dominant_partition(&set, min_rate)
    };
    let reference = part(1.0);
    for c in [0.5, 2.0] {
        let p = part(c);
        r.line(
            "8",
            p == reference,
            format!("dominant bath partition at c = {c}: {} bath(s) vs {} at c = 1", p.len(), reference.len()),
        );
    }
}

fn main() {
    let mut r = Report { passed: 0, failed: 0 };
    let start = Instant::now();
    capacitance(&mut r);
    spectrum(&mut r);
    tilt(&mut r);
    line_cut(&mut r);
    let (cfg, eps0) = lindblad(&mut r);
    trajectories(&mut r, &cfg, eps0);
    decoherence(&mut r);
    properties(&mut r);
    println!(
        "acceptance: {} passed, {} failed in {:.0} s",
        r.passed,
        r.failed,
        start.elapsed().as_secs_f64()
    );
}
