//! Circuit parameters, the two-mode Hamiltonian and the node capacitance
//! transform.

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::BasisChoice;
use crate::ops::{
    cosine_series, padded_trig, sine_series, FockOperator, FockSpace, LadderPolynomial, Mode, HERMITIAN_TOL,
};
use crate::units::{CHARGING_GHZ_FF, TWO_PI};
use crate::{Error, Result};

/// Levels added before evaluating matrix cosines, then truncated away.
pub const COSINE_PADDING: usize = 30;

/// Default Taylor order for the heuristics and the decomposition.
pub const DEFAULT_TAYLOR_ORDER: u32 = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    /// Resonator junction energy (per junction), GHz.
    pub e_ja: f64,
    /// Qubit junction energy, GHz.
    pub e_jb: f64,
    /// Quarton series junction energy, GHz.
    pub e_j: f64,
    pub e_ca: f64,
    pub e_cb: f64,
    /// Cross charging energy. `None` derives it from the capacitances.
    pub e_cab: Option<f64>,
    /// Lone quarton junction energy as a fraction of `e_j`; tilt is `2 alpha`.
    pub alpha: f64,
    pub n_s: u32,
    pub n_ja: u32,
    pub n_jb: u32,
    /// Capacitances in fF.
    pub c_a: f64,
    pub c_b: f64,
    pub c_j: f64,
    pub c_s: f64,
    pub c_alpha: f64,
    /// Resonator linewidth, GHz.
    pub kappa_r: f64,
    /// Purcell filter linewidth, GHz.
    pub kappa_f: f64,
    /// Quarton-loop flux in units of the flux quantum.
    pub flux_bias: f64,
}

impl Default for CircuitParams {
    fn default() -> Self {
        Self::nominal()
    }
}

/// `amp · cos(k_a φ_a + k_b φ_b + phase)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CosineTerm {
    pub amp: f64,
    pub k_a: f64,
    pub k_b: f64,
    pub phase: f64,
}

impl CircuitParams {
    /// The reference design point.
    pub fn nominal() -> Self {
        let e_j = 186.7;
        Self {
            e_ja: 538.0,
            e_jb: 20.3,
            e_j,
            e_ca: 0.119,
            e_cb: 0.325,
            e_cab: None,
            alpha: 95.2 / e_j,
            n_s: 2,
            n_ja: 2,
            n_jb: 1,
            c_a: 163.0,
            c_b: 59.6,
            c_j: 5.2,
            c_s: 2.6,
            c_alpha: 5.2,
            kappa_r: 0.3,
            kappa_f: 1.2,
            flux_bias: 0.5,
        }
    }

    /// Tilt `t = 2 alpha`.
    pub fn tilt(&self) -> f64 {
        2.0 * self.alpha
    }

    pub fn with_tilt(&self, t: f64) -> Self {
        Self { alpha: t / 2.0, ..self.clone() }
    }

    /// Quartic coupling energy `E_J (n_S² - 1) / n_S³`.
    pub fn e_q(&self) -> f64 {
        let n = f64::from(self.n_s);
        self.e_j * (n * n - 1.0) / (n * n * n)
    }

    /// Set `e_j` so that `e_q()` returns `e_q`. Keeps the lone-junction energy
    /// ratio `alpha` fixed.
    pub fn set_e_q(&mut self, e_q: f64) -> Result<()> {
        if self.n_s < 2 {
            return Err(Error::param("n_s", "quartic energy needs at least two series junctions"));
        }
        let n = f64::from(self.n_s);
        self.e_j = e_q * n * n * n / (n * n - 1.0);
        Ok(())
    }

    pub fn e_ja_eff(&self) -> f64 {
        self.e_ja / f64::from(self.n_ja)
    }

    pub fn e_jb_eff(&self) -> f64 {
        self.e_jb / f64::from(self.n_jb)
    }

    /// Harmonic resonator frequency `sqrt(8 E_Ca E_Ja_eff)`.
    pub fn omega_a_harmonic(&self) -> f64 {
        (8.0 * self.e_ca * self.e_ja_eff()).sqrt()
    }

    /// `e_cab` if set, otherwise `K·C_J/(C_a C_b + C_J (C_a + C_b))`.
    pub fn e_cab_value(&self) -> f64 {
        self.e_cab.unwrap_or_else(|| {
            let sigma = self.c_a * self.c_b + self.c_j * (self.c_a + self.c_b);
            CHARGING_GHZ_FF * self.c_j / sigma
        })
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("e_ja", self.e_ja),
            ("e_jb", self.e_jb),
            ("e_ca", self.e_ca),
            ("e_cb", self.e_cb),
            ("c_a", self.c_a),
            ("c_b", self.c_b),
            ("c_j", self.c_j),
            ("c_s", self.c_s),
            ("c_alpha", self.c_alpha),
            ("kappa_r", self.kappa_r),
            ("kappa_f", self.kappa_f),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        for (name, v) in [("e_j", self.e_j), ("alpha", self.alpha)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be non-negative, got {v}")));
            }
        }
        if let Some(v) = self.e_cab {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param("e_cab", format!("must be non-negative, got {v}")));
            }
        }
        if self.n_s == 0 || self.n_ja == 0 || self.n_jb == 0 {
            return Err(Error::param("junction_count", "series junction counts must be positive"));
        }
        if !self.flux_bias.is_finite() {
            return Err(Error::param("flux_bias", "must be finite"));
        }
        Ok(())
    }

    /// Potential terms with the constant offset kept implicit.
    pub fn cosine_terms(&self) -> Vec<CosineTerm> {
        let (ns, na, nb) = (f64::from(self.n_s), f64::from(self.n_ja), f64::from(self.n_jb));
        vec![
            CosineTerm { amp: -na * self.e_ja, k_a: 1.0 / na, k_b: 0.0, phase: 0.0 },
            CosineTerm { amp: -nb * self.e_jb, k_a: 0.0, k_b: 1.0 / nb, phase: 0.0 },
            CosineTerm { amp: -ns * self.e_j, k_a: 1.0 / ns, k_b: -1.0 / ns, phase: 0.0 },
            CosineTerm { amp: -self.alpha * self.e_j, k_a: 1.0, k_b: -1.0, phase: TWO_PI * self.flux_bias },
        ]
    }

    /// Swap the roles of the two modes (including junction counts and
    /// capacitances). The spectrum is unchanged up to relabeling.
    pub fn swapped(&self) -> Self {
        Self {
            e_ja: self.e_jb,
            e_jb: self.e_ja,
            e_ca: self.e_cb,
            e_cb: self.e_ca,
            n_ja: self.n_jb,
            n_jb: self.n_ja,
            c_a: self.c_b,
            c_b: self.c_a,
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HamiltonianMode {
    Exact,
    Taylor(u32),
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub h_a: LadderPolynomial,
    pub h_b: LadderPolynomial,
    pub h_coup: LadderPolynomial,
}

#[derive(Clone, Debug)]
pub struct HamiltonianBundle {
    pub space: FockSpace,
    /// Real symmetric Hamiltonian in GHz (zero-point constants dropped).
    pub matrix: DMatrix<f64>,
    pub decomposition: Option<Decomposition>,
    pub basis: BasisChoice,
}

impl HamiltonianBundle {
    pub fn operator(&self) -> FockOperator {
        FockOperator::from_real(self.space, &self.matrix)
    }
}

const PHASE_EPS: f64 = 1e-12;

fn trig_or_identity(n: usize, zpf: f64, k: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    if k == 0.0 {
        (DMatrix::identity(n, n), DMatrix::zeros(n, n))
    } else {
        padded_trig(n, zpf, k, COSINE_PADDING)
    }
}

/// Quadrature `p = x† - x` on `n` levels.
fn momentum(n: usize) -> DMatrix<f64> {
    let a = crate::ops::annihilation(n);
    a.transpose() - a
}

/// Charging part `4E_Ca n_a² + 4E_Cb n_b² + 8E_Cab n_a n_b` as a real matrix.
fn charge_matrix(params: &CircuitParams, basis: &BasisChoice, space: FockSpace) -> DMatrix<f64> {
    let pa = momentum(space.na);
    let pb = momentum(space.nb);
    let (za, zb) = (basis.zpf_a, basis.zpf_b);
    let ia = DMatrix::<f64>::identity(space.na, space.na);
    let ib = DMatrix::<f64>::identity(space.nb, space.nb);
    // n = i p / (2z): n² = -p²/(4z²), n_a n_b = -p_a p_b / (4 z_a z_b).
    let mut h = (&pa * &pa).kronecker(&ib) * (-params.e_ca / (za * za));
    h += ia.kronecker(&(&pb * &pb)) * (-params.e_cb / (zb * zb));
    h += pa.kronecker(&pb) * (-2.0 * params.e_cab_value() / (za * zb));
    h
}

/// Phase offsets added to each cosine argument, in `cosine_terms` order.
pub type TermOffsets = [f64; 4];

/// `(cos, sin)` of `k_a φ_a + k_b φ_b` on `space`, from exact matrix functions.
pub fn trig_matrices(basis: &BasisChoice, space: FockSpace, k_a: f64, k_b: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let (ca, sa) = trig_or_identity(space.na, basis.zpf_a, k_a);
    let (cb, sb) = trig_or_identity(space.nb, basis.zpf_b, k_b);
    (ca.kronecker(&cb) - sa.kronecker(&sb), sa.kronecker(&cb) + ca.kronecker(&sb))
}

/// Charge operators `(n_a, n_b)` as imaginary-valued matrices, returned as
/// their real factors `n = i · m`.
pub fn charge_factors(basis: &BasisChoice, space: FockSpace) -> (DMatrix<f64>, DMatrix<f64>) {
    let ia = DMatrix::<f64>::identity(space.na, space.na);
    let ib = DMatrix::<f64>::identity(space.nb, space.nb);
    let ma = momentum(space.na).kronecker(&ib) / (2.0 * basis.zpf_a);
    let mb = ia.kronecker(&momentum(space.nb)) / (2.0 * basis.zpf_b);
    (ma, mb)
}

/// Phase operator `φ_b` on `space`.
pub fn qubit_phase(basis: &BasisChoice, space: FockSpace) -> DMatrix<f64> {
    let a = crate::ops::annihilation(space.nb);
    let ia = DMatrix::<f64>::identity(space.na, space.na);
    ia.kronecker(&((&a + a.transpose()) * basis.zpf_b))
}

/// Full potential `Σ A cos(k·φ + θ + offset)` with exact cosines.
pub fn potential_matrix(params: &CircuitParams, basis: &BasisChoice, space: FockSpace, offsets: &TermOffsets) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(space.dim(), space.dim());
    for (term, off) in params.cosine_terms().iter().zip(offsets) {
        if term.amp == 0.0 {
            continue;
        }
        let phase = term.phase + off;
        let (cos_sum, sin_sum) = trig_matrices(basis, space, term.k_a, term.k_b);
        h += cos_sum * (term.amp * phase.cos());
        if phase.sin().abs() > PHASE_EPS {
            h -= sin_sum * (term.amp * phase.sin());
        }
    }
    h
}

/// `d/dλ Σ A cos(k·φ + θ + λ·o)` at `λ = 0` for per-term weights `o`.
pub fn potential_derivative(params: &CircuitParams, basis: &BasisChoice, space: FockSpace, weights: &TermOffsets) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(space.dim(), space.dim());
    for (term, w) in params.cosine_terms().iter().zip(weights) {
        if term.amp == 0.0 || *w == 0.0 {
            continue;
        }
        let (cos_sum, sin_sum) = trig_matrices(basis, space, term.k_a, term.k_b);
        // -A o sin(X + θ) = -A o (sin X cos θ + cos X sin θ)
        d -= sin_sum * (term.amp * w * term.phase.cos());
        if term.phase.sin().abs() > PHASE_EPS {
            d -= cos_sum * (term.amp * w * term.phase.sin());
        }
    }
    d
}

/// Exact Hamiltonian with per-term phase offsets, e.g. a static loop flux.
pub fn shifted_hamiltonian(
    params: &CircuitParams,
    basis: &BasisChoice,
    space: FockSpace,
    offsets: &TermOffsets,
) -> Result<DMatrix<f64>> {
    params.validate()?;
    Ok(charge_matrix(params, basis, space) + potential_matrix(params, basis, space, offsets))
}

/// Normal-ordered Taylor polynomial of the full Hamiltonian.
pub fn taylor_polynomial(params: &CircuitParams, basis: &BasisChoice, order: u32) -> Result<LadderPolynomial> {
    let (za, zb) = (basis.zpf_a, basis.zpf_b);
    let qa = LadderPolynomial::charge(Mode::A, za);
    let qb = LadderPolynomial::charge(Mode::B, zb);
    let mut h = qa.mul(&qa)?.scale_re(4.0 * params.e_ca);
    h = h.add(&qb.mul(&qb)?.scale_re(4.0 * params.e_cb));
    h = h.add(&qa.mul(&qb)?.scale_re(8.0 * params.e_cab_value()));
    for term in params.cosine_terms() {
        if term.amp == 0.0 {
            continue;
        }
        let arg = LadderPolynomial::quadrature(Mode::A, za * term.k_a)
            .add(&LadderPolynomial::quadrature(Mode::B, zb * term.k_b));
        let (cth, sth) = (term.phase.cos(), term.phase.sin());
        h = h.add(&cosine_series(term.amp * cth, &arg, order)?);
        if sth.abs() > PHASE_EPS {
            h = h.add(&sine_series(-term.amp * sth, &arg, order)?);
        }
    }
    Ok(h.without_constant())
}

/// Build the Hamiltonian in the Fock basis defined by `basis`.
pub fn build_hamiltonian(
    params: &CircuitParams,
    basis: &BasisChoice,
    space: FockSpace,
    mode: HamiltonianMode,
) -> Result<HamiltonianBundle> {
    params.validate()?;
    if !(basis.zpf_a > 0.0 && basis.zpf_b > 0.0) {
        return Err(Error::param("zpf", "zero-point amplitudes must be positive"));
    }
    let (matrix, decomposition) = match mode {
        HamiltonianMode::Exact => {
            let h = charge_matrix(params, basis, space) + potential_matrix(params, basis, space, &[0.0; 4]);
            (h, None)
        }
        HamiltonianMode::Taylor(order) => {
            let poly = taylor_polynomial(params, basis, order)?;
            let m = poly.to_matrix(space);
            let dec = Decomposition {
                h_a: poly.pure_mode(Mode::A),
                h_b: poly.pure_mode(Mode::B),
                h_coup: poly.coupling_part(),
            };
            (m.map(|c| c.re), Some(dec))
        }
    };
    let dev = crate::ops::hermiticity_error(&matrix.map(|x| Complex64::new(x, 0.0)));
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(HamiltonianBundle { space, matrix, decomposition, basis: basis.clone() })
}

/// Capacitances (fF) entering the four-node transform.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeCapacitances {
    /// Quarton series-junction capacitance.
    pub c_jq: f64,
    /// Resonator series-junction capacitance.
    pub c_jr: f64,
    pub c_a: f64,
    pub c_b: f64,
    /// Lone quarton junction capacitance relative to `c_jq`.
    pub alpha_ratio: f64,
}

impl NodeCapacitances {
    pub fn new(c_jq: f64, c_jr: f64, c_a: f64, c_b: f64) -> Self {
        Self { c_jq, c_jr, c_a, c_b, alpha_ratio: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacitanceMatrixResult {
    /// Charging-energy matrix over (a, b, internal resonator, internal quarton), MHz.
    pub e_c_matrix: Matrix4<f64>,
    /// Internal-mode frequency estimates (resonator chain, quarton chain), GHz.
    pub internal_mode_freqs: (f64, f64),
}

/// Node capacitance matrix for nodes (a, b, r, q) with ground implicit.
pub fn node_capacitance_matrix(c: &NodeCapacitances) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    let mut link = |i: usize, j: Option<usize>, cap: f64| {
        m[(i, i)] += cap;
        if let Some(j) = j {
            m[(j, j)] += cap;
            m[(i, j)] -= cap;
            m[(j, i)] -= cap;
        }
    };
    let (a, b, r, q) = (0, 1, 2, 3);
    link(a, None, c.c_a);
    link(b, None, c.c_b);
    link(a, Some(r), c.c_jr);
    link(r, None, c.c_jr);
    link(a, Some(q), c.c_jq);
    link(q, Some(b), c.c_jq);
    link(a, Some(b), c.alpha_ratio * c.c_jq);
    m
}

/// Transform the node capacitance matrix into mode charging energies and
/// estimate the internal-mode frequencies from the junction energies
/// `e_jr` (resonator chain) and `e_jq` (quarton chain), both in GHz.
pub fn capacitance_transform(c: &NodeCapacitances, e_jr: f64, e_jq: f64) -> Result<CapacitanceMatrixResult> {
    for (name, v) in [("c_jq", c.c_jq), ("c_jr", c.c_jr), ("c_a", c.c_a), ("c_b", c.c_b)] {
        if !(v > 0.0) {
            return Err(Error::param(name, "capacitance must be positive"));
        }
    }
    let node = node_capacitance_matrix(c);
    let inv = node
        .try_inverse()
        .ok_or_else(|| Error::LinearAlgebra("singular capacitance matrix".into()))?;
    #[rustfmt::skip]
    let w = Matrix4::new(
        1.0, 0.0, 0.0, 0.0,
        0.0, 1.0, 0.0, 0.0,
        0.5, 0.0, -1.0, 0.0,
        0.5, 0.5, 0.0, -1.0,
    );
    let e = w * inv * w.transpose() * (CHARGING_GHZ_FF * 1e3);
    let f_r = (8.0 * e[(2, 2)] * 1e-3 * 2.0 * e_jr).sqrt();
    let f_q = (8.0 * e[(3, 3)] * 1e-3 * 2.0 * e_jq).sqrt();
    Ok(CapacitanceMatrixResult { e_c_matrix: e, internal_mode_freqs: (f_r, f_q) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisChoice;

    #[test]
    fn e_q_reference() {
        let p = CircuitParams::nominal();
        assert!((p.e_q() - 70.0125).abs() < 1e-9);
        let mut q = p.clone();
        q.set_e_q(50.0).unwrap();
        assert!((q.e_q() - 50.0).abs() < 1e-12);
    }

    #[test]
    fn derived_cross_charging() {
        let p = CircuitParams::nominal();
        assert!((p.e_cab_value() - 0.009_264_4).abs() < 1e-6);
    }

    #[test]
    fn decoupled_hamiltonian_is_separable() {
        let mut p = CircuitParams::nominal();
        p.e_j = 0.0;
        p.e_cab = Some(0.0);
        let basis = BasisChoice::harmonic(&p);
        let space = FockSpace::new(6, 5).unwrap();
        let bundle = build_hamiltonian(&p, &basis, space, HamiltonianMode::Taylor(6)).unwrap();
        let dec = bundle.decomposition.unwrap();
        assert!(dec.h_coup.is_empty());
    }

    #[test]
    fn capacitance_reference_matrix() {
        let r = capacitance_transform(&NodeCapacitances::new(3.0, 7.5, 80.0, 70.0), 538.0, 186.7).unwrap();
        let e = r.e_c_matrix;
        assert!((e[(0, 0)] - 223.6).abs() < 0.5);
        assert!((e[(0, 1)] - 9.19).abs() < 0.05);
        assert!((e - e.transpose()).norm() < 1e-9);
        assert!(r.internal_mode_freqs.0 > 35.0 && r.internal_mode_freqs.1 > 35.0);
    }

    #[test]
    fn no_quarton_capacitance_no_cross_term() {
        let r = capacitance_transform(&NodeCapacitances::new(1e-9, 7.5, 80.0, 70.0), 538.0, 186.7).unwrap();
        assert!(r.e_c_matrix[(0, 1)].abs() < 1e-6);
    }
}
