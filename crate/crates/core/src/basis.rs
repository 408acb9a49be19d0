//! Fock-basis selection: per-mode zero-point amplitudes and quarton tilt.
//!
//! The Taylor-truncated normal-ordered coefficients used by the heuristics
//! have closed forms. For `A cos(u_a (a + a†) + u_b (b + b†) + θ)` expanded to
//! order `2K`, the coefficient of `:x²:` is `-A cosθ T_K(σ²) / 2` with
//! `σ² = u_a² + u_b²` and `T_K(s) = Σ_{m<K} (-s/2)^m / m!`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::circuit::{build_hamiltonian, CircuitParams, HamiltonianMode, COSINE_PADDING};
use crate::ops::{annihilation, padded_trig, FockSpace, Mode};
use crate::{Error, Result};

pub const GOLDEN_REL_TOL: f64 = 1e-4;
/// Fock dimension used to evaluate the linear coupling element.
pub const TILT_TRUNCATION: usize = 12;
pub const DEFAULT_TILT_RANGE: (f64, f64) = (0.8, 1.3);
const SCAN_POINTS: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisChoice {
    pub zpf_a: f64,
    pub zpf_b: f64,
    /// Mean `|<k|e_k>|²` over the scored levels of each pure-mode Hamiltonian.
    pub overlap_scores: Option<(f64, f64)>,
}

impl BasisChoice {
    pub fn new(zpf_a: f64, zpf_b: f64) -> Self {
        Self { zpf_a, zpf_b, overlap_scores: None }
    }

    /// Harmonic guess `(2 E_C / E_J_eff)^(1/4)` per mode.
    pub fn harmonic(p: &CircuitParams) -> Self {
        Self::new((2.0 * p.e_ca / p.e_ja_eff()).powf(0.25), (2.0 * p.e_cb / p.e_jb_eff()).powf(0.25))
    }

    pub fn zpf(&self, mode: Mode) -> f64 {
        match mode {
            Mode::A => self.zpf_a,
            Mode::B => self.zpf_b,
        }
    }

    fn with_zpf(&self, mode: Mode, z: f64) -> Self {
        match mode {
            Mode::A => Self { zpf_a: z, ..self.clone() },
            Mode::B => Self { zpf_b: z, ..self.clone() },
        }
    }

    /// Charge scale `1 / (2 zpf)`.
    pub fn n_zpf(&self, mode: Mode) -> f64 {
        0.5 / self.zpf(mode)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Heuristic {
    #[default]
    MinAdagA,
    MinAdagAdag,
    MaxOverlap,
}

impl std::str::FromStr for Heuristic {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min_adag_a" => Ok(Self::MinAdagA),
            "min_adag_adag" => Ok(Self::MinAdagAdag),
            "max_overlap" => Ok(Self::MaxOverlap),
            _ => Err(Error::param("heuristic", format!("unknown heuristic `{s}`"))),
        }
    }
}

impl std::fmt::Display for Heuristic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::MinAdagA => "min_adag_a",
            Self::MinAdagAdag => "min_adag_adag",
            Self::MaxOverlap => "max_overlap",
        })
    }
}

/// Golden-section minimization on `[lo, hi]` to relative tolerance `rel_tol`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, rel_tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (hi - lo) > rel_tol * (x1.abs() + x2.abs()) / 2.0 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 < f2 { (x1, f1) } else { (x2, f2) }
}

/// Coarse scan locating an interior minimum, then golden-section refinement.
/// Returns the minimizer, the objective, and whether the scan minimum lay on
/// the interval boundary.
fn bracketed_minimum(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64, bool) {
    let xs: Vec<f64> = (0..SCAN_POINTS).map(|i| lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let best = ys
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let on_edge = best == 0 || best == SCAN_POINTS - 1;
    let l = xs[best.saturating_sub(1)];
    let h = xs[(best + 1).min(SCAN_POINTS - 1)];
    let (x, y) = golden_section(&f, l, h, GOLDEN_REL_TOL);
    (x, y, on_edge)
}

fn truncated_gaussian(s: f64, order: u32) -> f64 {
    let k = order / 2;
    let mut term = 1.0;
    let mut sum = 0.0;
    for m in 0..k {
        sum += term;
        term *= -s / 2.0 / f64::from(m + 1);
    }
    sum
}

fn own(mode: Mode, k_a: f64, k_b: f64) -> f64 {
    match mode {
        Mode::A => k_a,
        Mode::B => k_b,
    }
}

fn charging(p: &CircuitParams, mode: Mode) -> f64 {
    match mode {
        Mode::A => p.e_ca,
        Mode::B => p.e_cb,
    }
}

/// Normal-ordered `x†x` coefficient of the pure-`mode` part of the Taylor
/// Hamiltonian of the given order.
pub fn adag_a_coefficient(p: &CircuitParams, basis: &BasisChoice, mode: Mode, order: u32) -> f64 {
    let z = basis.zpf(mode);
    let mut c = 2.0 * charging(p, mode) / (z * z);
    for t in p.cosine_terms() {
        let u = own(mode, t.k_a, t.k_b) * z;
        let s = (t.k_a * basis.zpf_a).powi(2) + (t.k_b * basis.zpf_b).powi(2);
        c -= t.amp * t.phase.cos() * u * u * truncated_gaussian(s, order);
    }
    c
}

/// Normal-ordered `x†²` coefficient of the pure-`mode` part.
pub fn adag_adag_coefficient(p: &CircuitParams, basis: &BasisChoice, mode: Mode, order: u32) -> f64 {
    let z = basis.zpf(mode);
    let mut c = -charging(p, mode) / (z * z);
    for t in p.cosine_terms() {
        let u = own(mode, t.k_a, t.k_b) * z;
        let s = (t.k_a * basis.zpf_a).powi(2) + (t.k_b * basis.zpf_b).powi(2);
        c -= 0.5 * t.amp * t.phase.cos() * u * u * truncated_gaussian(s, order);
    }
    c
}

/// `<0_other| H |0_other>` restricted to `mode`, with exact cosines, on `n` levels.
pub fn pure_mode_matrix(p: &CircuitParams, basis: &BasisChoice, mode: Mode, n: usize) -> DMatrix<f64> {
    let z = basis.zpf(mode);
    let a = annihilation(n);
    let mom = a.transpose() - &a;
    let mut h = (&mom * &mom) * (-charging(p, mode) / (z * z));
    let other = match mode {
        Mode::A => Mode::B,
        Mode::B => Mode::A,
    };
    for t in p.cosine_terms() {
        let k_own = own(mode, t.k_a, t.k_b);
        if k_own == 0.0 {
            continue;
        }
        let k_other = own(other, t.k_a, t.k_b);
        let damp = (-(k_other * basis.zpf(other)).powi(2) / 2.0).exp();
        let (c, s) = padded_trig(n, z, k_own, COSINE_PADDING);
        h += c * (t.amp * damp * t.phase.cos());
        let sth = t.phase.sin();
        if sth.abs() > 1e-12 {
            h -= s * (t.amp * damp * sth);
        }
    }
    h
}

/// Mean `|<k|e_k>|²` over the lowest `n_levels` eigenstates of the pure-mode
/// Hamiltonian evaluated on `truncation` levels.
pub fn overlap_score(p: &CircuitParams, basis: &BasisChoice, mode: Mode, n_levels: usize, truncation: usize) -> f64 {
    let h = pure_mode_matrix(p, basis, mode, truncation);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..truncation).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let n = n_levels.min(truncation);
    let sum: f64 = (0..n).map(|k| eig.eigenvectors[(k, order[k])].powi(2)).sum();
    sum / n as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZpfResult {
    pub zpf: f64,
    pub score: f64,
}

/// Settings shared by the zpf searches.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisSettings {
    pub heuristic: Heuristic,
    pub taylor_order: u32,
    /// Levels scored by the overlap metric.
    pub n_levels: usize,
    /// Fock truncation of the pure-mode overlap evaluation.
    pub truncation: usize,
    pub rounds: usize,
}

impl Default for BasisSettings {
    fn default() -> Self {
        Self { heuristic: Heuristic::MinAdagA, taylor_order: 8, n_levels: 10, truncation: 25, rounds: 2 }
    }
}

/// One-dimensional zpf search for `mode` with the other mode's zpf fixed.
pub fn optimize_zpf(p: &CircuitParams, basis: &BasisChoice, mode: Mode, s: &BasisSettings) -> Result<ZpfResult> {
    if s.n_levels + 2 > s.truncation {
        return Err(Error::param("n_levels", "must leave at least two levels of truncation margin"));
    }
    if s.taylor_order % 2 == 1 || s.taylor_order < 2 {
        return Err(Error::OddTaylorOrder(s.taylor_order));
    }
    let z0 = basis.zpf(mode);
    let (lo, hi) = (z0 / 2.0, 2.0 * z0);
    let objective = |z: f64| {
        let trial = basis.with_zpf(mode, z);
        match s.heuristic {
            Heuristic::MinAdagA => adag_a_coefficient(p, &trial, mode, s.taylor_order),
            Heuristic::MinAdagAdag => adag_adag_coefficient(p, &trial, mode, s.taylor_order).abs(),
            Heuristic::MaxOverlap => -overlap_score(p, &trial, mode, s.n_levels, s.truncation),
        }
    };
    let (zpf, _, on_edge) = bracketed_minimum(objective, lo, hi);
    if on_edge {
        return Err(Error::NoBracket { lo, hi });
    }
    let score = overlap_score(p, &basis.with_zpf(mode, zpf), mode, s.n_levels, s.truncation);
    Ok(ZpfResult { zpf, score })
}

/// Alternating zpf optimization starting from the harmonic guess.
pub fn optimize_basis(p: &CircuitParams, s: &BasisSettings) -> Result<BasisChoice> {
    p.validate()?;
    let mut basis = BasisChoice::harmonic(p);
    let mut scores = (0.0, 0.0);
    for _ in 0..s.rounds.max(1) {
        let ra = optimize_zpf(p, &basis, Mode::A, s)?;
        basis.zpf_a = ra.zpf;
        scores.0 = ra.score;
        let rb = optimize_zpf(p, &basis, Mode::B, s)?;
        basis.zpf_b = rb.zpf;
        scores.1 = rb.score;
    }
    scores.0 = overlap_score(p, &basis, Mode::A, s.n_levels, s.truncation);
    basis.overlap_scores = Some(scores);
    Ok(basis)
}

/// `<0_a 1_b| H |1_a 0_b>` in GHz from the exact Hamiltonian.
pub fn linear_coupling(p: &CircuitParams, basis: &BasisChoice) -> Result<f64> {
    let space = FockSpace::square(TILT_TRUNCATION)?;
    let h = build_hamiltonian(p, basis, space, HamiltonianMode::Exact)?;
    Ok(h.matrix[(space.index(0, 1), space.index(1, 0))])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TiltResult {
    pub tilt: f64,
    /// Linear coupling element at the optimum, GHz.
    pub residual: f64,
    /// Linear coupling element at `t = 1`, GHz.
    pub untilted_residual: f64,
    pub boundary_hit: bool,
    pub basis: BasisChoice,
}

/// Minimize `|<01|H|10>|²` over the tilt, re-optimizing the basis at every trial.
pub fn optimize_tilt(p: &CircuitParams, s: &BasisSettings, range: (f64, f64)) -> Result<TiltResult> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::param("tilt_range", format!("invalid interval [{lo}, {hi}]")));
    }
    let coupling_at = |t: f64| -> Result<(f64, BasisChoice)> {
        let q = p.with_tilt(t);
        let b = optimize_basis(&q, s)?;
        Ok((linear_coupling(&q, &b)?, b))
    };
    let objective = |t: f64| coupling_at(t).map(|(g, _)| g * g).unwrap_or(f64::INFINITY);
    let (tilt, _, boundary_hit) = bracketed_minimum(objective, lo, hi);
    if boundary_hit {
        log::warn!("tilt optimum at the search boundary [{lo}, {hi}]; widen the range");
    }
    let (residual, basis) = coupling_at(tilt)?;
    let (untilted_residual, _) = coupling_at(1.0)?;
    Ok(TiltResult { tilt, residual, untilted_residual, boundary_hit, basis })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::taylor_polynomial;
    use num_complex::Complex64;

    #[test]
    fn golden_section_quadratic() {
        let (x, _) = golden_section(|x| (x - 1.234).powi(2), 0.0, 3.0, 1e-8);
        assert!((x - 1.234).abs() < 1e-6);
    }

    #[test]
    fn closed_forms_match_symbolic_engine() {
        let p = CircuitParams::nominal();
        let basis = BasisChoice::new(0.21, 0.47);
        for order in [4, 6, 8] {
            let poly = taylor_polynomial(&p, &basis, order).unwrap();
            let ca = adag_a_coefficient(&p, &basis, Mode::A, order);
            let cb = adag_a_coefficient(&p, &basis, Mode::B, order);
            let da = adag_adag_coefficient(&p, &basis, Mode::A, order);
            let got_a = poly.coefficient([1, 1, 0, 0]);
            let got_b = poly.coefficient([0, 0, 1, 1]);
            let got_da = poly.coefficient([2, 0, 0, 0]);
            assert!((got_a - Complex64::new(ca, 0.0)).norm() < 1e-9 * ca.abs(), "order {order}");
            assert!((got_b - Complex64::new(cb, 0.0)).norm() < 1e-9 * cb.abs());
            assert!((got_da - Complex64::new(da, 0.0)).norm() < 1e-9 * da.abs().max(1.0));
        }
    }

    #[test]
    fn truncated_gaussian_limits() {
        assert_eq!(truncated_gaussian(0.3, 2), 1.0);
        assert!((truncated_gaussian(0.3, 40) - (-0.15f64).exp()).abs() < 1e-15);
    }
}
