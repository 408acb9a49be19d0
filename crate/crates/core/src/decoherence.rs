//! Qubit decoherence budget: thermal-photon dephasing, resistor loss,
//! quasiparticle tunnelling, dielectric loss, flux noise (T1 and echo T2) and
//! Purcell decay.
//!
//! All channel rates are returned in 1/s.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::circuit::{
    charge_factors, potential_derivative, qubit_phase, shifted_hamiltonian, trig_matrices, CircuitParams,
    HamiltonianBundle, TermOffsets,
};
use crate::dissipation::KappaModel;
use crate::exec::{map_indexed, Exec};
use crate::qnd::apply_resonator_quadrature;
use crate::spectrum::{sorted_eigen, LabeledSpectrum};
use crate::units::{bose_einstein, E_CHARGE, HBAR, K_B, PLANCK, TWO_PI};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentParams {
    /// mK.
    pub temperature: f64,
    /// µΩ.
    pub resistance: f64,
    pub x_qp: f64,
    /// Superconducting gap, GHz.
    pub delta: f64,
    pub q_diel: f64,
    /// Flux-noise amplitudes at 1 Hz, µΦ₀/√Hz.
    pub a_phi_quarton: f64,
    pub a_phi_ground: f64,
    pub gamma_phi: f64,
}

impl Default for EnvironmentParams {
    fn default() -> Self {
        Self {
            temperature: 45.0,
            resistance: 10.0,
            x_qp: 5e-9,
            delta: 82.0,
            q_diel: 7e6,
            a_phi_quarton: 1.0,
            a_phi_ground: 5.0,
            gamma_phi: 1.0,
        }
    }
}

impl EnvironmentParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("temperature", self.temperature),
            ("resistance", self.resistance),
            ("x_qp", self.x_qp),
            ("delta", self.delta),
            ("q_diel", self.q_diel),
            ("a_phi_quarton", self.a_phi_quarton),
            ("a_phi_ground", self.a_phi_ground),
        ] {
            if !(v >= 0.0) {
                return Err(Error::param(name, "must be non-negative"));
            }
        }
        if !(0.8..=1.0).contains(&self.gamma_phi) {
            return Err(Error::param("gamma_phi", "must lie in [0.8, 1.0]"));
        }
        Ok(())
    }

    fn kelvin(&self) -> f64 {
        self.temperature * 1e-3
    }

    fn ohm(&self) -> f64 {
        self.resistance * 1e-6
    }

    /// One-sided flux noise PSD `A²/f^γ` in Φ₀²/Hz.
    pub fn flux_psd(&self, amplitude: f64, f_hz: f64) -> f64 {
        (amplitude * 1e-6).powi(2) / f_hz.powf(self.gamma_phi)
    }
}

/// Ground, first qubit and first resonator eigenstates with the Hamiltonian
/// they came from.
#[derive(Clone, Debug)]
pub struct QubitStates {
    pub params: CircuitParams,
    pub bundle: HamiltonianBundle,
    pub ground: DVector<f64>,
    pub qubit: DVector<f64>,
    pub resonator: DVector<f64>,
    /// GHz.
    pub omega_q: f64,
    pub omega_r: f64,
    /// `ω₁₁ - ω₀₁ - ω₁₀`, GHz.
    pub cross_kerr: f64,
}

impl QubitStates {
    pub fn new(params: &CircuitParams, bundle: &HamiltonianBundle, spec: &LabeledSpectrum) -> Result<Self> {
        spec.require(&[(0, 0), (0, 1), (1, 0), (1, 1)])?;
        let e = |l| spec.energy(l);
        Ok(Self {
            params: params.clone(),
            bundle: bundle.clone(),
            ground: spec.gauge_fixed_state((0, 0))?,
            qubit: spec.gauge_fixed_state((0, 1))?,
            resonator: spec.gauge_fixed_state((1, 0))?,
            omega_q: e((0, 1))? - e((0, 0))?,
            omega_r: e((1, 0))? - e((0, 0))?,
            cross_kerr: e((1, 1))? - e((0, 1))? - e((1, 0))?,
        })
    }

    fn element(&self, op: &DMatrix<f64>, upper: &DVector<f64>) -> f64 {
        upper.dot(&(op * &self.ground)).abs()
    }

    fn qubit_element(&self, op: &DMatrix<f64>) -> f64 {
        self.element(op, &self.qubit)
    }

    fn sine(&self, k_a: f64, k_b: f64) -> DMatrix<f64> {
        trig_matrices(&self.bundle.basis, self.bundle.space, k_a, k_b).1
    }
}

/// Thermal-photon shot-noise dephasing `n̄(n̄+1)(2χ)²/κ` (all in GHz, cycles).
pub fn thermal_dephasing(cross_kerr: f64, kappa_r: f64, omega_r: f64, env: &EnvironmentParams) -> f64 {
    let n = bose_einstein(omega_r, env.kelvin());
    n * (n + 1.0) * (TWO_PI * cross_kerr * 1e9).powi(2) / (TWO_PI * kappa_r * 1e9)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResistorLoss {
    pub total: f64,
    pub charge: f64,
    pub phase: f64,
    pub charge_element: f64,
    pub phase_element: f64,
}

/// Charge operator coupling the normal-metal resistor across the quarton.
fn resistor_charge_operator(qs: &QubitStates) -> DMatrix<f64> {
    let p = &qs.params;
    let (ca, cb, cj) = (p.c_a, p.c_b, p.c_j);
    let sigma = ca * cb + cj * ca + cj * cb;
    let (ma, mb) = charge_factors(&qs.bundle.basis, qs.bundle.space);
    let wa = cj / (ca + cj * cb / (cb + cj)) - cj * cj / sigma;
    let wb = cj / (cb + cj * ca / (ca + cj)) + cj * cj / sigma;
    ma * wa + mb * wb
}

/// Resistor loss on the qubit (`resonator = false`) or resonator transition.
pub fn resistor_loss(qs: &QubitStates, env: &EnvironmentParams, resonator: bool) -> ResistorLoss {
    let p = &qs.params;
    let (upper, f) = if resonator { (&qs.resonator, qs.omega_r) } else { (&qs.qubit, qs.omega_q) };
    let omega = TWO_PI * f * 1e9;
    let pref = 8.0 * E_CHARGE * E_CHARGE * env.ohm() / HBAR;
    let mc = qs.element(&resistor_charge_operator(qs), upper);
    let ns = f64::from(p.n_s);
    let phase_op = qs.sine(1.0, -1.0) * p.alpha - qs.sine(1.0 / ns, -1.0 / ns);
    let mq = qs.element(&phase_op, upper);
    let charge = pref * omega * mc * mc;
    let phase = pref * (TWO_PI * p.e_j * 1e9).powi(2) / omega * mq * mq;
    ResistorLoss { total: charge + phase, charge, phase, charge_element: mc, phase_element: mq }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JunctionRate {
    pub name: String,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuasiparticleDecay {
    pub total: f64,
    pub junctions: Vec<JunctionRate>,
}

impl QuasiparticleDecay {
    /// Total rate with the quarton junctions left out.
    pub fn without_quarton(&self) -> f64 {
        self.junctions.iter().filter(|j| !j.name.starts_with("quarton")).map(|j| j.rate).sum()
    }
}

/// Quasiparticle tunnelling summed over every junction.
pub fn quasiparticle_decay(qs: &QubitStates, env: &EnvironmentParams) -> QuasiparticleDecay {
    let p = &qs.params;
    let wq = qs.omega_q;
    let per = |e_j: f64, k_a: f64, k_b: f64| {
        let m = qs.qubit_element(&qs.sine(k_a, k_b));
        m * m * 8.0 * TWO_PI * e_j * 1e9 / std::f64::consts::PI * env.x_qp * (2.0 * env.delta / wq).sqrt()
    };
    let (ns, na, nb) = (f64::from(p.n_s), f64::from(p.n_ja), f64::from(p.n_jb));
    // sin(φ/2) with φ the branch phase of each junction.
    let junctions = vec![
        JunctionRate { name: "qubit".into(), rate: nb * per(p.e_jb, 0.0, 0.5 / nb) },
        JunctionRate { name: "resonator".into(), rate: na * per(p.e_ja, 0.5 / na, 0.0) },
        JunctionRate { name: "quarton_series".into(), rate: ns * per(p.e_j, 0.5 / ns, -0.5 / ns) },
        JunctionRate { name: "quarton_lone".into(), rate: per(p.alpha * p.e_j, 0.5, -0.5) },
    ];
    QuasiparticleDecay { total: junctions.iter().map(|j| j.rate).sum(), junctions }
}

/// Dielectric loss `ħω²/(4E_C Q)|<0|φ_b|1>|²(coth(ħω/2kT) + 1)`.
pub fn dielectric_loss(qs: &QubitStates, env: &EnvironmentParams) -> f64 {
    if env.q_diel.is_infinite() {
        return 0.0;
    }
    let omega = TWO_PI * qs.omega_q * 1e9;
    let m = qs.qubit_element(&qubit_phase(&qs.bundle.basis, qs.bundle.space));
    let e_c = PLANCK * qs.params.e_cb * 1e9;
    let t = env.kelvin();
    let bracket = if t > 0.0 { 1.0 / (HBAR * omega / (2.0 * K_B * t)).tanh() + 1.0 } else { 2.0 };
    HBAR * omega * omega / (4.0 * e_c * env.q_diel) * m * m * bracket
}

/// Flux loops threading the circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FluxLoop {
    Quarton,
    Ground,
}

impl FluxLoop {
    pub const ALL: [FluxLoop; 2] = [FluxLoop::Quarton, FluxLoop::Ground];

    pub fn name(self) -> &'static str {
        match self {
            FluxLoop::Quarton => "quarton",
            FluxLoop::Ground => "ground",
        }
    }

    pub fn amplitude(self, env: &EnvironmentParams) -> f64 {
        match self {
            FluxLoop::Quarton => env.a_phi_quarton,
            FluxLoop::Ground => env.a_phi_ground,
        }
    }
}

/// Per-term phase shift per radian of loop flux, from the irrotational flux
/// allocation of each loop.
pub fn loop_weights(p: &CircuitParams, lp: FluxLoop) -> TermOffsets {
    let (ns, na, nb) = (f64::from(p.n_s), f64::from(p.n_ja), f64::from(p.n_jb));
    let (res, qub, series, lone) = match lp {
        FluxLoop::Quarton => {
            let den = 2.0 * p.c_a * p.c_b + (p.c_a + p.c_b) * (p.c_alpha + p.c_s);
            let a = p.c_b * p.c_s / den;
            let b = p.c_a * p.c_s / den;
            (a, b, b - a + 1.0, b - a)
        }
        FluxLoop::Ground => {
            let c_q = p.c_s + p.c_alpha;
            let s = 1.0 / p.c_a + 1.0 / p.c_b + 1.0 / c_q;
            let (fa, fb, fq) = (1.0 / p.c_a / s, 1.0 / p.c_b / s, 1.0 / c_q / s);
            (-fa, fb, -fq, -fq)
        }
    };
    [res / na, qub / nb, -series / ns, -lone]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FluxT1 {
    pub total: f64,
    /// `(loop, |<0|∂H/∂φ|1>| in GHz/rad, rate)`.
    pub loops: Vec<(FluxLoop, f64, f64)>,
}

/// Flux-noise relaxation `|<0|∂H/∂Φ|1>|² S_Φ(ω_q)` summed over both loops.
pub fn flux_t1(qs: &QubitStates, env: &EnvironmentParams) -> FluxT1 {
    let f_q = qs.omega_q * 1e9;
    let loops: Vec<(FluxLoop, f64, f64)> = FluxLoop::ALL
        .iter()
        .map(|&lp| {
            let d = potential_derivative(&qs.params, &qs.bundle.basis, qs.bundle.space, &loop_weights(&qs.params, lp));
            let m = qs.qubit_element(&d);
            // GHz per radian of loop phase to rad/s per flux quantum.
            let m_si = m * TWO_PI * 1e9 * TWO_PI;
            (lp, m, m_si * m_si * env.flux_psd(lp.amplitude(env), f_q))
        })
        .collect();
    FluxT1 { total: loops.iter().map(|l| l.2).sum(), loops }
}

/// Qubit frequency vs static loop flux, `f(Φ) ≈ f₀ + s1 Φ + ½ s2 Φ²`
/// with `f` in Hz and `Φ` in flux quanta.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FluxDispersion {
    pub f0: f64,
    pub slope: f64,
    pub curvature: f64,
    pub fit_residual: f64,
}

impl FluxDispersion {
    pub fn deviation(&self, phi: f64) -> f64 {
        self.slope * phi + 0.5 * self.curvature * phi * phi
    }
}

/// Least-squares quadratic fit `y ≈ c0 + c1 x + c2 x²`.
pub fn quadratic_fit(xs: &[f64], ys: &[f64]) -> Result<[f64; 3]> {
    let mut ata = Matrix3::zeros();
    let mut aty = Vector3::zeros();
    for (&x, &y) in xs.iter().zip(ys) {
        let row = Vector3::new(1.0, x, x * x);
        ata += row * row.transpose();
        aty += row * y;
    }
    let c = ata
        .cholesky()
        .ok_or_else(|| Error::LinearAlgebra("singular quadratic fit".into()))?
        .solve(&aty);
    Ok([c[0], c[1], c[2]])
}

pub const DISPERSION_POINTS: usize = 7;
/// Half-width of the static flux scan, flux quanta.
pub const DISPERSION_SPAN: f64 = 0.02;

/// Fit the qubit frequency against loop flux from a few eigensolves, tracking
/// the ground and qubit states by overlap.
pub fn flux_dispersion(qs: &QubitStates, lp: FluxLoop) -> Result<FluxDispersion> {
    let w = loop_weights(&qs.params, lp);
    let xs: Vec<f64> = (0..DISPERSION_POINTS)
        .map(|i| -DISPERSION_SPAN + 2.0 * DISPERSION_SPAN * i as f64 / (DISPERSION_POINTS - 1) as f64)
        .collect();
    let mut ys = Vec::with_capacity(xs.len());
    for &phi in &xs {
        let rad = TWO_PI * phi;
        let offsets = w.map(|o| o * rad);
        let h = shifted_hamiltonian(&qs.params, &qs.bundle.basis, qs.bundle.space, &offsets)?;
        let (e, v) = sorted_eigen(&h);
        let track = |s: &DVector<f64>| {
            let ov = v.transpose() * s;
            ov.iamax()
        };
        let (i0, i1) = (track(&qs.ground), track(&qs.qubit));
        ys.push((e[i1] - e[i0]) * 1e9);
    }
    let c = quadratic_fit(&xs, &ys)?;
    let fit_residual = xs.iter().zip(&ys).map(|(x, y)| (c[0] + c[1] * x + c[2] * x * x - y).abs()).fold(0.0, f64::max);
    Ok(FluxDispersion { f0: c[0], slope: c[1], curvature: 2.0 * c[2], fit_residual })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EchoSettings {
    pub segments: usize,
    /// Segment length, s.
    pub segment_len: f64,
    /// Sample spacing, s.
    pub dt: f64,
    /// Echo delays, s.
    pub taus: Vec<f64>,
    pub seed: u64,
}

impl Default for EchoSettings {
    fn default() -> Self {
        Self {
            segments: 10_000,
            segment_len: 1e-4,
            dt: 1e-7,
            taus: (1..=10).map(|i| i as f64 * 1e-5).collect(),
            seed: 1,
        }
    }
}

impl EchoSettings {
    pub fn validate(&self) -> Result<()> {
        if self.segments == 0 || !(self.segment_len > 0.0) || !(self.dt > 0.0) {
            return Err(Error::param("echo", "segments, segment length and dt must be positive"));
        }
        if self.taus.is_empty() || self.taus.iter().any(|&t| !(t > 0.0) || t > self.segment_len) {
            return Err(Error::param("echo.taus", "delays must be positive and fit in a segment"));
        }
        Ok(())
    }

    fn samples(&self) -> usize {
        (self.segment_len / self.dt).round() as usize * self.segments
    }
}

/// Gaussian time series with one-sided PSD `psd(f)` via random-phase spectral
/// synthesis. The DC bin is zero.
pub fn synthesize_noise(psd: impl Fn(f64) -> f64, n: usize, dt: f64, rng: &mut impl Rng) -> Vec<f64> {
    let total = n as f64 * dt;
    let df = 1.0 / total;
    let half = n / 2;
    let mut spec = vec![Complex64::new(0.0, 0.0); n];
    for k in 1..=half {
        let f = k as f64 * df;
        let amp = n as f64 * (psd(f) * df / 2.0).sqrt();
        let theta = TWO_PI * rng.random::<f64>();
        let c = Complex64::from_polar(amp, theta);
        if 2 * k == n {
            spec[k] = Complex64::new(c.re, 0.0);
        } else {
            spec[k] = c;
            spec[n - k] = c.conj();
        }
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(n).process(&mut spec);
    spec.into_iter().map(|c| c.re / n as f64).collect()
}

/// Echo coherence `|<exp(i φ)>|` per delay, with the accumulated phase
/// sign-flipped at the midpoint of each segment. `freq` is in Hz.
pub fn echo_coherence(freq: &[f64], dt: f64, segment_len: f64, taus: &[f64], exec: Exec) -> Vec<f64> {
    let per = (segment_len / dt).round() as usize;
    let nseg = freq.len() / per;
    let phases: Vec<Vec<Complex64>> = map_indexed(nseg, exec, |s| {
        let seg = &freq[s * per..(s + 1) * per];
        let mut cum = Vec::with_capacity(per + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for f in seg {
            acc += f * dt;
            cum.push(acc);
        }
        taus.iter()
            .map(|&tau| {
                let m = ((tau / dt).round() as usize).min(per);
                let h = m / 2;
                let ph = TWO_PI * ((cum[h] - cum[0]) - (cum[m] - cum[h]));
                Complex64::from_polar(1.0, ph)
            })
            .collect()
    });
    (0..taus.len())
        .map(|i| {
            let s: Complex64 = phases.iter().map(|p| p[i]).sum();
            s.norm() / nseg.max(1) as f64
        })
        .collect()
}

/// Rate `k` of `C = exp(-k τ)` fitted through the origin.
pub fn fit_decay_rate(taus: &[f64], coherence: &[f64]) -> f64 {
    let num: f64 = taus.iter().zip(coherence).map(|(t, c)| -c.max(f64::MIN_POSITIVE).ln() * t).sum();
    let den: f64 = taus.iter().map(|t| t * t).sum();
    num / den
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EchoT2 {
    /// s. A lower bound when `lower_bound` is set.
    pub t2: f64,
    pub lower_bound: bool,
    pub taus: Vec<f64>,
    pub coherence: Vec<f64>,
    pub loops: Vec<(FluxLoop, f64, FluxDispersion)>,
}

/// T2 from the decay rate, or the longest delay as a lower bound when the
/// coherence does not decay within the window.
fn t2_from_rate(rate: f64, taus: &[f64], coherence: &[f64]) -> (f64, bool) {
    let last = *coherence.last().unwrap_or(&1.0);
    if !(rate > 0.0) || !rate.is_finite() || last > 1.0 - 1e-12 {
        (taus.iter().cloned().fold(0.0, f64::max), true)
    } else {
        (1.0 / rate, false)
    }
}

/// Echo T2 from independent 1/f flux noise in each loop through the fitted
/// quadratic dispersion.
pub fn flux_t2_echo(qs: &QubitStates, env: &EnvironmentParams, s: &EchoSettings, exec: Exec) -> Result<EchoT2> {
    s.validate()?;
    let n = s.samples();
    let mut combined = vec![1.0; s.taus.len()];
    let mut loops = Vec::new();
    for (li, &lp) in FluxLoop::ALL.iter().enumerate() {
        let disp = flux_dispersion(qs, lp)?;
        let amp = lp.amplitude(env);
        let coherence = if amp == 0.0 {
            vec![1.0; s.taus.len()]
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
            rng.set_stream(li as u64);
            let x = synthesize_noise(|f| env.flux_psd(amp, f), n, s.dt, &mut rng);
            let freq: Vec<f64> = x.iter().map(|&p| disp.deviation(p)).collect();
            echo_coherence(&freq, s.dt, s.segment_len, &s.taus, exec)
        };
        let (t2, _) = t2_from_rate(fit_decay_rate(&s.taus, &coherence), &s.taus, &coherence);
        for (c, v) in combined.iter_mut().zip(&coherence) {
            *c *= v;
        }
        loops.push((lp, t2, disp));
    }
    let (t2, lower_bound) = t2_from_rate(fit_decay_rate(&s.taus, &combined), &s.taus, &combined);
    Ok(EchoT2 { t2, lower_bound, taus: s.taus.clone(), coherence: combined, loops })
}

/// Purcell decay `κ(ω_q)|<0,0|(a† - a)|0,1>|²`, 1/s.
pub fn purcell_decay(qs: &QubitStates, kappa: &KappaModel) -> f64 {
    let xq = apply_resonator_quadrature(qs.bundle.space, &qs.qubit);
    let m = qs.ground.dot(&xq);
    kappa.rate(qs.omega_q) * m * m * 1e9
}

/// Relative SNR scaling `sqrt(η κ n̄ t)|sin 2θ|` with
/// `|sin 2θ| = χκ/(χ² + κ²/4)` (GHz, ns).
pub fn snr_scaling(chi: f64, kappa: f64, n_bar: f64, eta: f64, t: f64) -> f64 {
    let sin2 = if chi == 0.0 { 0.0 } else { (chi * kappa / (chi * chi + kappa * kappa / 4.0)).abs() };
    (eta * TWO_PI * kappa * n_bar * t).sqrt() * sin2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ChannelKind {
    Relaxation,
    Dephasing,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Channel {
    pub name: String,
    pub kind: ChannelKind,
    /// 1/s.
    pub rate: f64,
    /// s.
    pub time: f64,
    /// The time is a lower bound (no decay resolved).
    pub lower_bound: bool,
}

impl Channel {
    fn new(name: &str, kind: ChannelKind, rate: f64) -> Self {
        Self { name: name.into(), kind, rate, time: 1.0 / rate, lower_bound: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecoherenceBudget {
    pub channels: Vec<Channel>,
    pub total_rate: f64,
    pub t1: f64,
    pub t2: f64,
    pub resistor: ResistorLoss,
    pub resistor_resonator: ResistorLoss,
    pub quasiparticle: QuasiparticleDecay,
    pub flux_t1: FluxT1,
    pub echo: Option<EchoT2>,
}

impl DecoherenceBudget {
    pub fn channel(&self, name: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.name == name)
    }
}

/// Every channel at once; the echo simulation runs only when `echo` is given.
pub fn budget(
    qs: &QubitStates,
    env: &EnvironmentParams,
    kappa: &KappaModel,
    echo: Option<&EchoSettings>,
    exec: Exec,
) -> Result<DecoherenceBudget> {
    env.validate()?;
    let resistor = resistor_loss(qs, env, false);
    let resistor_resonator = resistor_loss(qs, env, true);
    let quasiparticle = quasiparticle_decay(qs, env);
    let flux = flux_t1(qs, env);
    use ChannelKind::*;
    let mut channels = vec![
        Channel::new("thermal_photon", Dephasing, thermal_dephasing(qs.cross_kerr, qs.params.kappa_r, qs.omega_r, env)),
        Channel::new("resistor", Relaxation, resistor.total),
        Channel::new("quasiparticle", Relaxation, quasiparticle.total),
        Channel::new("dielectric", Relaxation, dielectric_loss(qs, env)),
        Channel::new("flux_t1", Relaxation, flux.total),
        Channel::new("purcell", Relaxation, purcell_decay(qs, kappa)),
    ];
    let echo = match echo {
        Some(s) => {
            let e = flux_t2_echo(qs, env, s, exec)?;
            let rate = if e.lower_bound { 0.0 } else { 1.0 / e.t2 };
            channels.push(Channel { name: "flux_echo".into(), kind: Dephasing, rate, time: e.t2, lower_bound: e.lower_bound });
            Some(e)
        }
        None => None,
    };
    let total_rate = channels.iter().map(|c| c.rate).sum();
    let g1: f64 = channels.iter().filter(|c| c.kind == Relaxation).map(|c| c.rate).sum();
    let gphi: f64 = channels.iter().filter(|c| c.kind == Dephasing).map(|c| c.rate).sum();
    Ok(DecoherenceBudget {
        channels,
        total_rate,
        t1: 1.0 / g1,
        t2: 1.0 / (g1 / 2.0 + gphi),
        resistor,
        resistor_resonator,
        quasiparticle,
        flux_t1: flux,
        echo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thermal_vanishes_at_zero_temperature() {
        let env = EnvironmentParams { temperature: 0.0, ..Default::default() };
        assert_eq!(thermal_dephasing(0.252, 0.3, 16.1, &env), 0.0);
    }

    #[test]
    fn quadratic_fit_recovers_coefficients() {
        let xs: Vec<f64> = (0..7).map(|i| i as f64 - 3.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.5 - 0.25 * x + 0.75 * x * x).collect();
        let c = quadratic_fit(&xs, &ys).unwrap();
        assert!((c[0] - 1.5).abs() < 1e-12 && (c[1] + 0.25).abs() < 1e-12 && (c[2] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn synthesized_noise_has_requested_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (n, dt, s) = (1 << 16, 1e-3, 2e-4);
        let x = synthesize_noise(|_| s, n, dt, &mut rng);
        let var = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
        // One-sided white PSD integrates to s · f_Nyquist.
        let expect = s / (2.0 * dt);
        assert!((var / expect - 1.0).abs() < 0.02, "{var} vs {expect}");
    }

    #[test]
    fn white_noise_echo_matches_closed_form() {
        // Γ = ½ (2π s1)² S with S the two-sided flux PSD.
        let (s1, gamma) = (1e6, 1e4);
        let s_two = 2.0 * gamma / (TWO_PI * s1).powi(2);
        let s = EchoSettings { segments: 2000, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = synthesize_noise(|_| 2.0 * s_two, s.samples(), s.dt, &mut rng);
        let freq: Vec<f64> = x.iter().map(|p| s1 * p).collect();
        let c = echo_coherence(&freq, s.dt, s.segment_len, &s.taus, Exec::Parallel);
        let t2 = 1.0 / fit_decay_rate(&s.taus, &c);
        assert!((t2 * gamma - 1.0).abs() < 0.2, "T2 {t2}");
    }

    #[test]
    fn zero_noise_is_lower_bound() {
        let taus = [1e-5, 2e-5];
        let c = [1.0, 1.0];
        let (t, lb) = t2_from_rate(fit_decay_rate(&taus, &c), &taus, &c);
        assert!(lb);
        assert_eq!(t, 2e-5);
    }

    #[test]
    fn snr_peaks_at_matched_linewidth() {
        let at = |k| snr_scaling(0.126, k, 2.0, 1.0, 5.0) / (k as f64).sqrt();
        assert!((at(0.252) - at(0.252).max(at(0.2)).max(at(0.3))).abs() < 1e-12);
        assert_eq!(snr_scaling(0.0, 0.3, 2.0, 1.0, 5.0), 0.0);
    }
}
