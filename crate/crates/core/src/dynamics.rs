//! Readout dynamics in a truncated eigenbasis: lab-frame Lindblad evolution
//! and diffusive heterodyne trajectories.
//!
//! Internally all frequencies are angular (rad/ns) and times are in ns. The
//! drive couples through `n₀ = i X` with `X = <e_i|(a† - a)|e_j>`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::circuit::CircuitParams;
use crate::dissipation::{build_dissipators, transitions, DissipatorSet, KappaModel, DEFAULT_PRUNE_THRESHOLD};
use crate::exec::{map_indexed, Exec};
use crate::qnd::project_resonator_quadrature;
use crate::spectrum::{Label, LabeledSpectrum};
use crate::units::ang;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutConfig {
    /// Drive frequency, GHz. `None` uses the midpoint of the pulled resonator frequencies.
    pub omega_d: Option<f64>,
    /// Drive amplitude, GHz. `None` calibrates to `n_bar_target`.
    pub eps0: Option<f64>,
    pub pulse_len: f64,
    pub ringdown: f64,
    pub n_bar_target: f64,
    pub eta: f64,
    pub n_traj: usize,
    /// Trajectory time step, ns.
    pub sse_dt: f64,
    /// Width of the demodulated record bins, ns.
    pub record_bin: f64,
    pub seed: u64,
    /// Kept labels `n_a < .0`, `n_b < .1`.
    pub truncation: (usize, usize),
    pub cluster_factor: f64,
    /// Jump rates below this are dropped, rad/ns.
    pub prune_threshold: f64,
    pub filter: bool,
    pub rtol: f64,
    pub atol: f64,
    /// Output sampling interval for the master equation, ns.
    pub output_step: f64,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        Self {
            omega_d: None,
            eps0: None,
            pulse_len: 5.0,
            ringdown: 5.0,
            n_bar_target: 2.0,
            eta: 1.0,
            n_traj: 1000,
            sse_dt: 5e-4,
            record_bin: 0.01,
            seed: 7,
            truncation: (9, 5),
            cluster_factor: 1.0,
            prune_threshold: DEFAULT_PRUNE_THRESHOLD,
            filter: true,
            rtol: 1e-8,
            atol: 1e-10,
            output_step: 0.05,
        }
    }
}

impl ReadoutConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::param("eta", "must lie in (0, 1]"));
        }
        for (name, v) in [
            ("pulse_len", self.pulse_len),
            ("sse_dt", self.sse_dt),
            ("record_bin", self.record_bin),
            ("output_step", self.output_step),
        ] {
            if !(v > 0.0) {
                return Err(Error::param(name, "must be positive"));
            }
        }
        if self.ringdown < 0.0 || self.n_bar_target < 0.0 {
            return Err(Error::param("ringdown/n_bar_target", "must be non-negative"));
        }
        if self.truncation.0 < 2 || self.truncation.1 < 2 {
            return Err(Error::param("truncation", "need at least two levels per mode"));
        }
        Ok(())
    }
}

/// Real sparse jump operator entries `(row, col, amplitude)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseJump {
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseJump {
    fn from_dense(l: &DMatrix<f64>) -> Self {
        let mut entries = Vec::new();
        for j in 0..l.ncols() {
            for i in 0..l.nrows() {
                if l[(i, j)] != 0.0 {
                    entries.push((i, j, l[(i, j)]));
                }
            }
        }
        Self { entries }
    }
}

/// Readout model on a truncated set of labeled eigenstates.
#[derive(Clone, Debug)]
pub struct ReadoutModel {
    pub labels: Vec<Label>,
    /// Energies, GHz.
    pub energies: Vec<f64>,
    /// `<e_i|(a† - a)|e_j>` on gauge-fixed states.
    pub x: DMatrix<f64>,
    pub dissipators: DissipatorSet,
    pub jumps: Vec<SparseJump>,
    /// `Σ L†L`.
    pub decay: DMatrix<f64>,
    /// Drive frequency, GHz.
    pub omega_d: f64,
    /// Half the difference of the pulled resonator frequencies, GHz.
    pub chi: f64,
    pub kappa_r: f64,
    pub kappa: KappaModel,
}

impl ReadoutModel {
    pub fn new(spec: &LabeledSpectrum, params: &CircuitParams, cfg: &ReadoutConfig) -> Result<Self> {
        cfg.validate()?;
        let (ti, tj) = cfg.truncation;
        let labels: Vec<Label> = (0..ti).flat_map(|i| (0..tj).map(move |j| (i, j))).collect();
        let missing: Vec<Label> = labels.iter().copied().filter(|l| !spec.labels.contains_key(l)).collect();
        if !missing.is_empty() {
            return Err(Error::MissingLabels(missing));
        }
        spec.require(&[(0, 0), (1, 0), (0, 1), (1, 1)])?;
        let (energies, x) = project_resonator_quadrature(spec, &labels)?;
        let e = |l: Label| spec.energy(l);
        let w0 = e((1, 0))? - e((0, 0))?;
        let w1 = e((1, 1))? - e((0, 1))?;
        let omega_d = cfg.omega_d.unwrap_or((w0 + w1) / 2.0);
        let mut kappa = KappaModel::new(params.kappa_r, omega_d);
        if cfg.filter {
            kappa = kappa.with_filter(omega_d, params.kappa_f);
        }
        let ts = transitions(&energies, &x, &kappa);
        let dissipators = build_dissipators(&ts, cfg.prune_threshold, cfg.cluster_factor, params.kappa_r)?;
        Ok(Self::assemble(labels, energies, x, dissipators, omega_d, (w1 - w0) / 2.0, params.kappa_r, kappa))
    }

    fn assemble(
        labels: Vec<Label>,
        energies: Vec<f64>,
        x: DMatrix<f64>,
        dissipators: DissipatorSet,
        omega_d: f64,
        chi: f64,
        kappa_r: f64,
        kappa: KappaModel,
    ) -> Self {
        let n = energies.len();
        let dense: Vec<DMatrix<f64>> = dissipators.baths.iter().map(|b| b.jump_operator(n)).collect();
        let mut decay = DMatrix::zeros(n, n);
        for l in &dense {
            decay += l.transpose() * l;
        }
        let jumps = dense.iter().map(SparseJump::from_dense).collect();
        Self { labels, energies, x, dissipators, jumps, decay, omega_d, chi, kappa_r, kappa }
    }

    /// Same model with every dissipator removed.
    pub fn without_dissipation(&self) -> Self {
        let empty = DissipatorSet { baths: Vec::new(), k_star: None, threshold: f64::INFINITY, dropped: Vec::new() };
        Self::assemble(
            self.labels.clone(),
            self.energies.clone(),
            self.x.clone(),
            empty,
            self.omega_d,
            self.chi,
            self.kappa_r,
            self.kappa,
        )
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn index_of(&self, l: Label) -> Result<usize> {
        self.labels.iter().position(|&m| m == l).ok_or_else(|| Error::MissingLabels(vec![l]))
    }

    fn photon_numbers(&self) -> Vec<f64> {
        self.labels.iter().map(|l| l.0 as f64).collect()
    }

    /// `sqrt(n̄ (χ² + κ²/4))` in GHz.
    pub fn initial_drive_amplitude(&self, n_bar: f64) -> f64 {
        initial_drive_amplitude(self.chi, self.kappa_r, n_bar)
    }
}

/// Classical steady-state drive for a resonator detuned by `χ` (GHz units).
pub fn initial_drive_amplitude(chi: f64, kappa: f64, n_bar: f64) -> f64 {
    (n_bar * (chi * chi + kappa * kappa / 4.0)).sqrt()
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Adaptive Dormand-Prince integration of `y' = f(t, y)` from `t0` through
/// the sorted `outputs`, calling `observe` at each output time.
fn dopri5<F, O>(
    f: F,
    t0: f64,
    y: &mut Vec<f64>,
    outputs: &[f64],
    rtol: f64,
    atol: f64,
    max_step: f64,
    mut observe: O,
) -> Result<()>
where
    F: Fn(f64, &[f64], &mut [f64]),
    O: FnMut(f64, &[f64]) -> Result<()>,
{
    let n = y.len();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut t = t0;
    let mut h = max_step.min(1e-3);
    f(t, y, &mut k[0]);
    for &t_out in outputs {
        while t_out - t > 1e-12 {
            let step = h.min(t_out - t).min(max_step);
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        let a = A[s][j];
                        if a != 0.0 {
                            acc += step * a * kj[i];
                        }
                    }
                    tmp[i] = acc;
                }
                let (head, tail) = k.split_at_mut(s);
                let _ = head;
                f(t + C[s] * step, &tmp, &mut tail[0]);
            }
            // tmp holds the 5th-order solution (stage 7 input).
            let mut err = 0.0;
            for i in 0..n {
                let mut e = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    e += E[j] * kj[i];
                }
                let sc = atol + rtol * y[i].abs().max(tmp[i].abs());
                err += (step * e / sc).powi(2);
            }
            let err = (err / n as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::Integration(format!("non-finite error estimate at t = {t}")));
            }
            if err <= 1.0 {
                t += step;
                y.copy_from_slice(&tmp);
                let last = k.pop().expect("seven stages");
                k.insert(0, last);
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                h = (step * factor).min(max_step);
            } else {
                h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                if h < 1e-12 {
                    return Err(Error::Integration(format!("step size underflow at t = {t}")));
                }
            }
        }
        observe(t_out, y)?;
    }
    Ok(())
}

/// Density matrix packed as `[re (column-major) | im (column-major)]`.
struct Packed<'a> {
    n: usize,
    data: &'a [f64],
}

impl Packed<'_> {
    fn re(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n + i]
    }
    fn im(&self, i: usize, j: usize) -> f64 {
        self.data[self.n * self.n + j * self.n + i]
    }
}

fn unpack(n: usize, y: &[f64]) -> DMatrix<Complex64> {
    let p = Packed { n, data: y };
    DMatrix::from_fn(n, n, |i, j| Complex64::new(p.re(i, j), p.im(i, j)))
}

/// Lindblad right-hand side in the frame rotating with the diagonal `H0`.
///
/// The state is `ρ̃ = e^{iH0 t} ρ e^{-iH0 t}`, so the fast diagonal phases are
/// applied exactly and only `Mρ + ρMᵀ + Σ LρLᵀ` is integrated, with
/// `M = ε(t) X - ½ Σ L†L` (all real matrices).
fn lindblad_rhs(model: &ReadoutModel, h0: &[f64], eps: f64, t: f64, y: &[f64], dy: &mut [f64]) {
    let n = h0.len();
    let nn = n * n;
    let (c, s): (Vec<f64>, Vec<f64>) = h0.iter().map(|h| ((h * t).cos(), (h * t).sin())).unzip();
    // ρ_ij = ρ̃_ij e^{-i(h_i - h_j)t}
    let mut re = DMatrix::zeros(n, n);
    let mut im = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            let (pc, ps) = (c[i] * c[j] + s[i] * s[j], s[i] * c[j] - c[i] * s[j]);
            let (r, q) = (y[j * n + i], y[nn + j * n + i]);
            re[(i, j)] = r * pc + q * ps;
            im[(i, j)] = q * pc - r * ps;
        }
    }
    let m = &model.x * eps - &model.decay * 0.5;
    let mut dre = &m * &re + &re * m.transpose();
    let mut dim = &m * &im + &im * m.transpose();
    for jump in &model.jumps {
        for &(r, c, a) in &jump.entries {
            for &(r2, c2, a2) in &jump.entries {
                let w = a * a2;
                dre[(r, r2)] += w * re[(c, c2)];
                dim[(r, r2)] += w * im[(c, c2)];
            }
        }
    }
    for j in 0..n {
        for i in 0..n {
            let (pc, ps) = (c[i] * c[j] + s[i] * s[j], s[i] * c[j] - c[i] * s[j]);
            let (r, q) = (dre[(i, j)], dim[(i, j)]);
            dy[j * n + i] = r * pc - q * ps;
            dy[nn + j * n + i] = q * pc + r * ps;
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LindbladResult {
    pub times: Vec<f64>,
    /// Eigenstate populations per output time, ordered like `labels`.
    pub populations: Vec<Vec<f64>>,
    pub photons: Vec<f64>,
    pub purity: Vec<f64>,
    pub labels: Vec<Label>,
    pub max_trace_deviation: f64,
    pub max_hermiticity_deviation: f64,
    pub min_eigenvalue: f64,
    /// Probability of remaining in the prepared qubit state at the final time.
    pub qnd_fidelity: f64,
    /// Final population per qubit level.
    pub qubit_distribution: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LindbladOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub output_step: f64,
    /// Compute the minimum eigenvalue of ρ at every output.
    pub check_positivity: bool,
}

impl From<&ReadoutConfig> for LindbladOptions {
    fn from(c: &ReadoutConfig) -> Self {
        Self { rtol: c.rtol, atol: c.atol, max_step: 0.01, output_step: c.output_step, check_positivity: true }
    }
}

const TRACE_TOL: f64 = 1e-6;

/// Evolve `|0, k>` under a square pulse `2 ε₀ cos(ω_d t)` of length
/// `pulse_len` followed by a free ring-down. `eps0` in GHz.
pub fn run_lindblad(
    model: &ReadoutModel,
    eps0: f64,
    qubit: usize,
    pulse_len: f64,
    ringdown: f64,
    opts: &LindbladOptions,
) -> Result<LindbladResult> {
    let n = model.dim();
    let h0: Vec<f64> = model.energies.iter().map(|&e| ang(e)).collect();
    let wd = ang(model.omega_d);
    let eps_amp = 2.0 * ang(eps0);
    let start = model.index_of((0, qubit))?;
    let mut y = vec![0.0; 2 * n * n];
    y[start * n + start] = 1.0;
    let photons_op = model.photon_numbers();

    let mut res = LindbladResult {
        times: Vec::new(),
        populations: Vec::new(),
        photons: Vec::new(),
        purity: Vec::new(),
        labels: model.labels.clone(),
        max_trace_deviation: 0.0,
        max_hermiticity_deviation: 0.0,
        min_eigenvalue: 1.0,
        qnd_fidelity: 0.0,
        qubit_distribution: Vec::new(),
    };
    let mut observe = |t: f64, y: &[f64]| -> Result<()> {
        let rho = unpack(n, y);
        let tr: Complex64 = rho.trace();
        let dev = (tr - Complex64::new(1.0, 0.0)).norm();
        if dev > TRACE_TOL {
            return Err(Error::TraceDrift { time: t, deviation: dev });
        }
        res.max_trace_deviation = res.max_trace_deviation.max(dev);
        let herm = (&rho - rho.adjoint()).norm();
        res.max_hermiticity_deviation = res.max_hermiticity_deviation.max(herm);
        if opts.check_positivity {
            let h = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
            let ev = h.symmetric_eigenvalues();
            res.min_eigenvalue = res.min_eigenvalue.min(ev.min());
        }
        let pops: Vec<f64> = (0..n).map(|i| rho[(i, i)].re).collect();
        res.photons.push(pops.iter().zip(&photons_op).map(|(p, m)| p * m).sum());
        res.purity.push((&rho * &rho).trace().re);
        res.populations.push(pops);
        res.times.push(t);
        Ok(())
    };

    let grid = |a: f64, b: f64| -> Vec<f64> {
        let steps = ((b - a) / opts.output_step).round().max(1.0) as usize;
        (1..=steps).map(|i| a + (b - a) * i as f64 / steps as f64).collect()
    };
    observe(0.0, &y)?;
    dopri5(
        |t, y, dy| lindblad_rhs(model, &h0, eps_amp * (wd * t).cos(), t, y, dy),
        0.0,
        &mut y,
        &grid(0.0, pulse_len),
        opts.rtol,
        opts.atol,
        opts.max_step,
        &mut observe,
    )?;
    if ringdown > 0.0 {
        dopri5(
            |t, y, dy| lindblad_rhs(model, &h0, 0.0, t, y, dy),
            pulse_len,
            &mut y,
            &grid(pulse_len, pulse_len + ringdown),
            opts.rtol,
            opts.atol,
            opts.max_step,
            &mut observe,
        )?;
    }
    let last = res.populations.last().cloned().unwrap_or_default();
    let n_qubit = model.labels.iter().map(|l| l.1).max().unwrap_or(0) + 1;
    let mut dist = vec![0.0; n_qubit];
    for (p, l) in last.iter().zip(&model.labels) {
        dist[l.1] += p;
    }
    res.qnd_fidelity = dist[qubit];
    res.qubit_distribution = dist;
    Ok(res)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Calibration {
    /// GHz.
    pub eps0: f64,
    pub photons: [f64; 2],
    pub iterations: usize,
}

const CALIBRATION_TOL: f64 = 0.05;
const CALIBRATION_ITERS: usize = 10;

fn late_pulse_photons(r: &LindbladResult, pulse_len: f64) -> f64 {
    let sel: Vec<f64> = r
        .times
        .iter()
        .zip(&r.photons)
        .filter(|(t, _)| **t > pulse_len - 1.0 - 1e-9 && **t <= pulse_len + 1e-9)
        .map(|(_, p)| *p)
        .collect();
    sel.iter().sum::<f64>() / sel.len().max(1) as f64
}

/// Refine the drive amplitude until the late-pulse photon number, averaged
/// over both qubit preparations, is within 5% of `n_bar_target`.
pub fn calibrate_drive(model: &ReadoutModel, n_bar_target: f64, pulse_len: f64, opts: &LindbladOptions) -> Result<Calibration> {
    if n_bar_target == 0.0 {
        return Ok(Calibration { eps0: 0.0, photons: [0.0, 0.0], iterations: 0 });
    }
    let opts = LindbladOptions { check_positivity: false, ..*opts };
    let mut eps = model.initial_drive_amplitude(n_bar_target);
    let mut photons = [0.0; 2];
    for it in 1..=CALIBRATION_ITERS {
        for q in 0..2 {
            let r = run_lindblad(model, eps, q, pulse_len, 0.0, &opts)?;
            photons[q] = late_pulse_photons(&r, pulse_len);
        }
        let mean = (photons[0] + photons[1]) / 2.0;
        if (mean / n_bar_target - 1.0).abs() < CALIBRATION_TOL {
            return Ok(Calibration { eps0: eps, photons, iterations: it });
        }
        if mean <= 0.0 {
            break;
        }
        eps *= (n_bar_target / mean).sqrt();
    }
    Err(Error::Calibration { iterations: CALIBRATION_ITERS, photons: photons.to_vec() })
}

/// Per-trajectory output: demodulated record binned in time, plus the final
/// eigenstate populations.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub bins: Vec<Complex64>,
    pub final_populations: Vec<f64>,
}

const NORM_DRIFT_TOL: f64 = 0.05;

fn matvec_real(m: &DMatrix<f64>, v: &[Complex64], out: &mut [Complex64]) {
    let n = v.len();
    out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
    let data = m.as_slice();
    for (j, &vj) in v.iter().enumerate() {
        if vj.re == 0.0 && vj.im == 0.0 {
            continue;
        }
        let col = &data[j * n..(j + 1) * n];
        for (o, &c) in out.iter_mut().zip(col) {
            *o += vj * c;
        }
    }
}

/// Stream index for trajectory `idx` of preparation `qubit`.
pub fn trajectory_stream(qubit: usize, idx: usize) -> u64 {
    ((qubit as u64) << 40) | idx as u64
}

/// One heterodyne trajectory of length `duration` ns starting in `|0, qubit>`.
pub fn run_trajectory(
    model: &ReadoutModel,
    eps0: f64,
    qubit: usize,
    cfg: &ReadoutConfig,
    duration: f64,
    idx: usize,
) -> Result<TrajectoryRecord> {
    let n = model.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(trajectory_stream(qubit, idx));
    let dt = cfg.sse_dt;
    let sdt = dt.sqrt();
    let steps = (duration / dt).round() as usize;
    let per_bin = ((cfg.record_bin / dt).round() as usize).max(1);
    let n_bins = steps.div_ceil(per_bin);
    let wd = ang(model.omega_d);
    let eps_amp = 2.0 * ang(eps0);
    let phase: Vec<Complex64> = model.energies.iter().map(|&e| Complex64::from_polar(1.0, -ang(e) * dt)).collect();
    let record_scale = 1.0 / cfg.eta.sqrt();
    let k_star = model.dissipators.k_star;
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;

    let mut psi = vec![Complex64::new(0.0, 0.0); n];
    psi[model.index_of((0, qubit))?] = Complex64::new(1.0, 0.0);
    let mut xpsi = vec![Complex64::new(0.0, 0.0); n];
    let mut gpsi = vec![Complex64::new(0.0, 0.0); n];
    let mut lpsi = vec![Complex64::new(0.0, 0.0); n];
    let mut incr = vec![Complex64::new(0.0, 0.0); n];
    let mut bins = vec![Complex64::new(0.0, 0.0); n_bins];

    for s in 0..steps {
        let t = s as f64 * dt;
        let eps = if t < cfg.pulse_len { eps_amp * (wd * t).cos() } else { 0.0 };
        matvec_real(&model.x, &psi, &mut xpsi);
        matvec_real(&model.decay, &psi, &mut gpsi);
        for i in 0..n {
            incr[i] = (xpsi[i] * eps - gpsi[i] * 0.5) * dt;
        }
        for (kb, jump) in model.jumps.iter().enumerate() {
            lpsi.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            for &(r, c, a) in &jump.entries {
                lpsi[r] += psi[c] * a;
            }
            let ev: Complex64 = psi.iter().zip(&lpsi).map(|(p, l)| p.conj() * l).sum();
            let dw1: f64 = StandardNormal.sample(&mut rng);
            let dw2: f64 = StandardNormal.sample(&mut rng);
            let (dw1, dw2) = (dw1 * sdt, dw2 * sdt);
            let x1 = ev.re * inv_sqrt2;
            let x2 = ev.im * inv_sqrt2;
            let drift_l = ev.conj() * 0.5 * dt;
            let drift_p = -0.25 * ev.norm_sqr() * dt - (x1 * dw1 + x2 * dw2);
            let noise_l = Complex64::new(dw1, -dw2) * inv_sqrt2;
            for i in 0..n {
                incr[i] += lpsi[i] * (drift_l + noise_l) + psi[i] * drift_p;
            }
            if Some(kb) == k_star {
                let r = ev * (std::f64::consts::SQRT_2 * dt) + Complex64::new(dw1, dw2) * record_scale;
                bins[s / per_bin] += r * Complex64::from_polar(1.0, wd * t);
            }
        }
        let mut norm = 0.0;
        for i in 0..n {
            psi[i] = (psi[i] + incr[i]) * phase[i];
            norm += psi[i].norm_sqr();
        }
        if (norm - 1.0).abs() > NORM_DRIFT_TOL {
            return Err(Error::NormDrift { drift: norm - 1.0 });
        }
        let inv = 1.0 / norm.sqrt();
        psi.iter_mut().for_each(|p| *p *= inv);
    }
    Ok(TrajectoryRecord { bins, final_populations: psi.iter().map(|p| p.norm_sqr()).collect() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaussianFit {
    pub mean: f64,
    pub std: f64,
}

impl GaussianFit {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len().max(1) as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReadoutStats {
    pub window: f64,
    pub fit0: GaussianFit,
    pub fit1: GaussianFit,
    pub threshold: f64,
    pub fidelity0: f64,
    pub fidelity1: f64,
    /// Fraction of trajectories on the correct side of the threshold.
    pub empirical0: f64,
    pub empirical1: f64,
    pub snr: f64,
    pub low_separation: bool,
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

/// Point between the means where the two fitted Gaussians have equal density.
pub fn equal_likelihood_threshold(f0: GaussianFit, f1: GaussianFit) -> f64 {
    let (m0, s0, m1, s1) = (f0.mean, f0.std, f1.mean, f1.std);
    let mid = (m0 * s1 + m1 * s0) / (s0 + s1);
    if s0 <= 0.0 || s1 <= 0.0 || ((s0 - s1) / (s0 + s1)).abs() < 1e-9 {
        return if s0 + s1 > 0.0 { mid } else { (m0 + m1) / 2.0 };
    }
    let a = 1.0 / (s0 * s0) - 1.0 / (s1 * s1);
    let b = -2.0 * (m0 / (s0 * s0) - m1 / (s1 * s1));
    let c = m0 * m0 / (s0 * s0) - m1 * m1 / (s1 * s1) + 2.0 * (s0 / s1).ln();
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return mid;
    }
    let r1 = (-b + disc.sqrt()) / (2.0 * a);
    let r2 = (-b - disc.sqrt()) / (2.0 * a);
    let (lo, hi) = (m0.min(m1), m0.max(m1));
    [r1, r2]
        .into_iter()
        .filter(|r| *r >= lo && *r <= hi)
        .min_by(|x, y| (x - mid).abs().total_cmp(&(y - mid).abs()))
        .unwrap_or(mid)
}

/// Project IQ points onto the axis through the two blob means and compute
/// assignment fidelities and SNR from Gaussian fits.
pub fn readout_statistics(iq0: &[(f64, f64)], iq1: &[(f64, f64)], window: f64) -> ReadoutStats {
    let mean = |pts: &[(f64, f64)]| {
        let n = pts.len().max(1) as f64;
        (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n)
    };
    let (a0, a1) = (mean(iq0), mean(iq1));
    let (dx, dy) = (a1.0 - a0.0, a1.1 - a0.1);
    let len = (dx * dx + dy * dy).sqrt();
    let (ux, uy) = if len > 0.0 { (dx / len, dy / len) } else { (1.0, 0.0) };
    let proj = |pts: &[(f64, f64)]| pts.iter().map(|p| p.0 * ux + p.1 * uy).collect::<Vec<f64>>();
    let (x0, x1) = (proj(iq0), proj(iq1));
    let (f0, f1) = (GaussianFit::of(&x0), GaussianFit::of(&x1));
    let th = equal_likelihood_threshold(f0, f1);
    let sigma = (f0.std + f1.std) / 2.0;
    let sep = (f1.mean - f0.mean).abs();
    let low_separation = sep < 0.1 * sigma || sigma == 0.0 && sep == 0.0;
    if low_separation {
        log::warn!("readout blobs barely separated (|Δμ| = {sep:.3e}, σ = {sigma:.3e})");
    }
    let fid = |f: GaussianFit, below: bool| {
        if f.std == 0.0 {
            return if (f.mean < th) == below { 1.0 } else { 0.5 };
        }
        let z = (th - f.mean) / f.std;
        if below { normal_cdf(z) } else { 1.0 - normal_cdf(z) }
    };
    let frac = |xs: &[f64], below: bool| xs.iter().filter(|&&x| (x < th) == below).count() as f64 / xs.len().max(1) as f64;
    ReadoutStats {
        window,
        fit0: f0,
        fit1: f1,
        threshold: th,
        fidelity0: fid(f0, true),
        fidelity1: fid(f1, false),
        empirical0: frac(&x0, true),
        empirical1: frac(&x1, false),
        snr: if sigma > 0.0 { sep / sigma } else { 0.0 },
        low_separation,
    }
}

#[derive(Clone, Debug)]
pub struct TrajectoryEnsemble {
    pub records: [Vec<TrajectoryRecord>; 2],
    pub record_bin: f64,
    /// Integration weights per bin over the full record.
    pub weights: (Vec<f64>, Vec<f64>),
    /// Integrated IQ points over the full record, per preparation.
    pub iq: [Vec<(f64, f64)>; 2],
    pub stats: Vec<ReadoutStats>,
    /// Ensemble-mean final populations and their standard errors.
    pub mean_populations: [Vec<f64>; 2],
    pub population_stderr: [Vec<f64>; 2],
    pub eps0: f64,
}

impl TrajectoryEnsemble {
    pub fn final_stats(&self) -> &ReadoutStats {
        self.stats.last().expect("at least one window")
    }
}

/// Mean-difference weights over the first `n_bins` bins.
pub fn integration_weights(records: &[Vec<TrajectoryRecord>; 2], n_bins: usize) -> (Vec<f64>, Vec<f64>) {
    let mean_bins = |rs: &[TrajectoryRecord]| {
        let mut m = vec![Complex64::new(0.0, 0.0); n_bins];
        for r in rs {
            for (acc, b) in m.iter_mut().zip(&r.bins) {
                *acc += b;
            }
        }
        let inv = 1.0 / rs.len().max(1) as f64;
        m.iter().map(|c| c * inv).collect::<Vec<_>>()
    };
    let (m0, m1) = (mean_bins(&records[0]), mean_bins(&records[1]));
    let wi = m0.iter().zip(&m1).map(|(a, b)| (b.re - a.re).abs()).collect();
    let wq = m0.iter().zip(&m1).map(|(a, b)| (b.im - a.im).abs()).collect();
    (wi, wq)
}

pub fn integrate_iq(records: &[TrajectoryRecord], weights: &(Vec<f64>, Vec<f64>)) -> Vec<(f64, f64)> {
    records
        .iter()
        .map(|r| {
            let i = r.bins.iter().zip(&weights.0).map(|(b, w)| w * b.re).sum();
            let q = r.bins.iter().zip(&weights.1).map(|(b, w)| w * b.im).sum();
            (i, q)
        })
        .collect()
}

fn population_moments(records: &[TrajectoryRecord], n: usize) -> (Vec<f64>, Vec<f64>) {
    let m = records.len().max(1) as f64;
    let mut mean = vec![0.0; n];
    let mut sq = vec![0.0; n];
    for r in records {
        for (i, &p) in r.final_populations.iter().enumerate() {
            mean[i] += p;
            sq[i] += p * p;
        }
    }
    let stderr = mean
        .iter_mut()
        .zip(&sq)
        .map(|(mu, s)| {
            *mu /= m;
            ((s / m - *mu * *mu).max(0.0) / m).sqrt()
        })
        .collect();
    (mean, stderr)
}

/// Run `cfg.n_traj` trajectories per qubit preparation over `windows.last()`
/// ns and evaluate readout statistics for every integration window.
pub fn run_trajectories(
    model: &ReadoutModel,
    eps0: f64,
    cfg: &ReadoutConfig,
    windows: &[f64],
    exec: Exec,
) -> Result<TrajectoryEnsemble> {
    cfg.validate()?;
    if windows.is_empty() || cfg.n_traj < 2 {
        return Err(Error::param("windows/n_traj", "need at least one window and two trajectories"));
    }
    if model.dissipators.k_star.is_none() {
        return Err(Error::param("dissipators", "no monitored bath"));
    }
    let duration = windows.iter().cloned().fold(0.0, f64::max);
    let n = cfg.n_traj;
    let results = map_indexed(2 * n, exec, |task| run_trajectory(model, eps0, task / n, cfg, duration, task % n));
    let mut all: Vec<TrajectoryRecord> = results.into_iter().collect::<Result<_>>()?;
    let ones = all.split_off(n);
    let records = [all, ones];
    let per_bin = ((cfg.record_bin / cfg.sse_dt).round() as usize).max(1);
    let bin = per_bin as f64 * cfg.sse_dt;
    let mut stats = Vec::new();
    for &w in windows {
        let nb = ((w / bin).round() as usize).max(1);
        let weights = integration_weights(&records, nb);
        let iq0 = integrate_iq(&records[0], &weights);
        let iq1 = integrate_iq(&records[1], &weights);
        stats.push(readout_statistics(&iq0, &iq1, w));
    }
    let total_bins = records[0][0].bins.len();
    let weights = integration_weights(&records, total_bins);
    let iq = [integrate_iq(&records[0], &weights), integrate_iq(&records[1], &weights)];
    let dim = model.dim();
    let (m0, s0) = population_moments(&records[0], dim);
    let (m1, s1) = population_moments(&records[1], dim);
    Ok(TrajectoryEnsemble {
        records,
        record_bin: bin,
        weights,
        iq,
        stats,
        mean_populations: [m0, m1],
        population_stderr: [s0, s1],
        eps0,
    })
}

/// Photon number `Σ n_a P` for a population vector of the model.
pub fn mean_photons(model: &ReadoutModel, pops: &[f64]) -> f64 {
    model.photon_numbers().iter().zip(pops).map(|(n, p)| n * p).sum()
}

/// Pure state vector helper for tests: `|0, qubit>` in the model basis.
pub fn basis_state(model: &ReadoutModel, l: Label) -> Result<DVector<f64>> {
    let mut v = DVector::zeros(model.dim());
    v[model.index_of(l)?] = 1.0;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_blobs() {
        let pts: Vec<(f64, f64)> = (0..200).map(|i| ((i as f64 * 0.37).sin(), (i as f64 * 0.91).cos())).collect();
        let s = readout_statistics(&pts, &pts, 1.0);
        assert!((s.fidelity0 - 0.5).abs() < 1e-9 || s.low_separation);
        assert!(s.snr < 1e-12);
    }

    #[test]
    fn four_sigma_separation() {
        let f0 = GaussianFit { mean: 0.0, std: 1.0 };
        let f1 = GaussianFit { mean: 4.0, std: 1.0 };
        let th = equal_likelihood_threshold(f0, f1);
        assert!((th - 2.0).abs() < 1e-12);
        assert!((normal_cdf(th) - 0.977_249_868).abs() < 1e-8);
    }

    #[test]
    fn unequal_widths_threshold_balances_density() {
        let f0 = GaussianFit { mean: 0.0, std: 1.0 };
        let f1 = GaussianFit { mean: 5.0, std: 2.0 };
        let th = equal_likelihood_threshold(f0, f1);
        let pdf = |f: GaussianFit, x: f64| (-(x - f.mean).powi(2) / (2.0 * f.std * f.std)).exp() / f.std;
        assert!((pdf(f0, th) - pdf(f1, th)).abs() < 1e-12);
        assert!(th > 0.0 && th < 5.0);
    }

    #[test]
    fn resonant_drive_amplitude() {
        assert!((initial_drive_amplitude(0.0, 0.3, 2.0) - 0.3 * 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(initial_drive_amplitude(0.1, 0.3, 0.0), 0.0);
    }

    #[test]
    fn dopri_exponential() {
        let mut y = vec![1.0];
        let mut last = 0.0;
        dopri5(|_, y, dy| dy[0] = -y[0], 0.0, &mut y, &[1.0, 2.0], 1e-10, 1e-12, 0.1, |_, y| {
            last = y[0];
            Ok(())
        })
        .unwrap();
        assert!((last - (-2f64).exp()).abs() < 1e-9);
    }
}
