//! Fock-space operators and an exact engine for normal-ordered ladder
//! polynomials in two bosonic modes.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{Error, Result};

/// Relative Frobenius tolerance for Hamiltonian-role operators.
pub const HERMITIAN_TOL: f64 = 1e-10;

const OVERFLOW_LIMIT: f64 = 1e200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    A,
    B,
}

/// Truncated two-mode Fock space with ordering `a ⊗ b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FockSpace {
    pub na: usize,
    pub nb: usize,
}

impl FockSpace {
    pub fn new(na: usize, nb: usize) -> Result<Self> {
        if na < 2 || nb < 2 {
            return Err(Error::param("fock_dim", format!("need at least 2 levels per mode, got {na}x{nb}")));
        }
        Ok(Self { na, nb })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn dim(&self) -> usize {
        self.na * self.nb
    }

    pub fn index(&self, ia: usize, ib: usize) -> usize {
        ia * self.nb + ib
    }

    pub fn levels(&self, idx: usize) -> (usize, usize) {
        (idx / self.nb, idx % self.nb)
    }

    pub fn mode_dim(&self, mode: Mode) -> usize {
        match mode {
            Mode::A => self.na,
            Mode::B => self.nb,
        }
    }
}

/// Single-mode annihilation matrix with `<n-1|a|n> = sqrt(n)`.
pub fn annihilation(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if j == i + 1 { (j as f64).sqrt() } else { 0.0 })
}

/// Lift a single-mode operator into the two-mode space.
pub fn embed(space: FockSpace, mode: Mode, op: &DMatrix<f64>) -> DMatrix<f64> {
    match mode {
        Mode::A => op.kronecker(&DMatrix::identity(space.nb, space.nb)),
        Mode::B => DMatrix::<f64>::identity(space.na, space.na).kronecker(op),
    }
}

/// Dense complex operator on a two-mode Fock space.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    pub space: FockSpace,
    pub matrix: DMatrix<Complex64>,
}

impl FockOperator {
    pub fn new(space: FockSpace, matrix: DMatrix<Complex64>) -> Self {
        assert_eq!(matrix.nrows(), space.dim());
        assert_eq!(matrix.ncols(), space.dim());
        Self { space, matrix }
    }

    pub fn from_real(space: FockSpace, m: &DMatrix<f64>) -> Self {
        Self::new(space, m.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn identity(space: FockSpace) -> Self {
        Self::new(space, DMatrix::identity(space.dim(), space.dim()))
    }

    pub fn dagger(&self) -> Self {
        Self::new(self.space, self.matrix.adjoint())
    }

    pub fn mul(&self, other: &FockOperator) -> Self {
        Self::new(self.space, &self.matrix * &other.matrix)
    }

    pub fn commutator(&self, other: &FockOperator) -> Self {
        Self::new(self.space, &self.matrix * &other.matrix - &other.matrix * &self.matrix)
    }

    /// `||M - M†||_F / ||M||_F` (0 for the zero operator).
    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.matrix)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() <= HERMITIAN_TOL
    }
}

pub fn hermiticity_error(m: &DMatrix<Complex64>) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.adjoint()).norm() / norm
}

/// Annihilation operator of `mode` on the two-mode space.
pub fn build_annihilation(space: FockSpace, mode: Mode) -> FockOperator {
    let a = annihilation(space.mode_dim(mode));
    FockOperator::from_real(space, &embed(space, mode, &a))
}

/// Apply `f` to the eigenvalues of a real symmetric matrix.
pub fn symmetric_function(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, &w) in eig.eigenvalues.iter().enumerate() {
        scaled.column_mut(j).scale_mut(f(w));
    }
    &scaled * v.transpose()
}

/// Apply `f` to the eigenvalues of a Hermitian matrix.
pub fn hermitian_function(m: &DMatrix<Complex64>, f: impl Fn(f64) -> f64) -> DMatrix<Complex64> {
    let eig = m.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, &w) in eig.eigenvalues.iter().enumerate() {
        scaled.column_mut(j).scale_mut(f(w));
    }
    &scaled * v.adjoint()
}

/// `cos(phi)` by spectral decomposition. Rejects non-Hermitian input.
pub fn matrix_cosine(phi: &FockOperator) -> Result<FockOperator> {
    let dev = phi.hermiticity_error();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(FockOperator::new(phi.space, hermitian_function(&phi.matrix, f64::cos)))
}

/// `sin(phi)` by spectral decomposition. Rejects non-Hermitian input.
pub fn matrix_sine(phi: &FockOperator) -> Result<FockOperator> {
    let dev = phi.hermiticity_error();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(FockOperator::new(phi.space, hermitian_function(&phi.matrix, f64::sin)))
}

/// `cos(k·zpf·(a+a†))` and `sin(...)` on `n` levels, evaluated in a space
/// padded by `pad` extra levels and then truncated to the leading block.
pub fn padded_trig(n: usize, zpf: f64, k: f64, pad: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = n + pad;
    let a = annihilation(m);
    let x = (&a + a.transpose()) * (zpf * k);
    let eig = x.symmetric_eigen();
    let v = &eig.eigenvectors;
    let vt = v.transpose();
    let mut vc = v.clone();
    let mut vs = v.clone();
    for (j, &w) in eig.eigenvalues.iter().enumerate() {
        vc.column_mut(j).scale_mut(w.cos());
        vs.column_mut(j).scale_mut(w.sin());
    }
    let c = (&vc * &vt).view((0, 0), (n, n)).into_owned();
    let s = (&vs * &vt).view((0, 0), (n, n)).into_owned();
    (c, s)
}

/// Exponents `(a†, a, b†, b)` of the normal-ordered monomial
/// `a†^p a^q b†^r b^s`.
pub type Powers = [u32; 4];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LadderMonomial {
    pub coeff: Complex64,
    pub powers: Powers,
}

/// A single ladder operator, used to write arbitrary (non-ordered) words.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Create(Mode),
    Annihilate(Mode),
}

/// Normal-ordered polynomial keyed by power tuple; zero terms are dropped.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LadderPolynomial {
    terms: BTreeMap<Powers, Complex64>,
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    let mut out = 1.0;
    for i in 0..k {
        out = out * f64::from(n - i) / f64::from(i + 1);
    }
    out
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * f64::from(i))
}

/// `a†^p a^q · a†^r a^s = Σ_k C(q,k) C(r,k) k! a†^(p+r-k) a^(q+s-k)`.
fn wick_single(p: u32, q: u32, r: u32, s: u32) -> Vec<(u32, u32, f64)> {
    (0..=q.min(r))
        .map(|k| (p + r - k, q + s - k, binomial(q, k) * binomial(r, k) * factorial(k)))
        .collect()
}

impl LadderPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Complex64) -> Self {
        Self::term(c, [0; 4])
    }

    pub fn term(coeff: Complex64, powers: Powers) -> Self {
        let mut p = Self::zero();
        p.accumulate(powers, coeff);
        p
    }

    pub fn from_monomial(m: LadderMonomial) -> Self {
        Self::term(m.coeff, m.powers)
    }

    pub fn ladder(op: Ladder) -> Self {
        let powers = match op {
            Ladder::Create(Mode::A) => [1, 0, 0, 0],
            Ladder::Annihilate(Mode::A) => [0, 1, 0, 0],
            Ladder::Create(Mode::B) => [0, 0, 1, 0],
            Ladder::Annihilate(Mode::B) => [0, 0, 0, 1],
        };
        Self::term(Complex64::new(1.0, 0.0), powers)
    }

    /// `zpf (x + x†)` for the given mode.
    pub fn quadrature(mode: Mode, zpf: f64) -> Self {
        Self::ladder(Ladder::Annihilate(mode))
            .add(&Self::ladder(Ladder::Create(mode)))
            .scale_re(zpf)
    }

    /// `i/(2 zpf) (x† - x)` for the given mode.
    pub fn charge(mode: Mode, zpf: f64) -> Self {
        Self::ladder(Ladder::Create(mode))
            .sub(&Self::ladder(Ladder::Annihilate(mode)))
            .scale(Complex64::new(0.0, 0.5 / zpf))
    }

    fn accumulate(&mut self, powers: Powers, c: Complex64) {
        if c == Complex64::new(0.0, 0.0) {
            return;
        }
        let entry = self.terms.entry(powers).or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
        if *entry == Complex64::new(0.0, 0.0) {
            self.terms.remove(&powers);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = LadderMonomial> + '_ {
        self.terms.iter().map(|(&powers, &coeff)| LadderMonomial { coeff, powers })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, powers: Powers) -> Complex64 {
        self.terms.get(&powers).copied().unwrap_or_default()
    }

    pub fn constant_term(&self) -> Complex64 {
        self.coefficient([0; 4])
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(|p| p.iter().sum()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&p, &c) in &other.terms {
            out.accumulate(p, c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale_re(-1.0))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self::zero();
        for (&p, &v) in &self.terms {
            out.accumulate(p, v * c);
        }
        out
    }

    pub fn scale_re(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    /// Product of two normal-ordered polynomials, returned in normal order.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let mut out = Self::zero();
        for (&[p1, q1, r1, s1], &c1) in &self.terms {
            for (&[p2, q2, r2, s2], &c2) in &other.terms {
                let wa = wick_single(p1, q1, p2, q2);
                let wb = wick_single(r1, s1, r2, s2);
                for &(pa, qa, fa) in &wa {
                    for &(pb, qb, fb) in &wb {
                        let c = c1 * c2 * (fa * fb);
                        if !c.re.is_finite() || !c.im.is_finite() || c.norm() > OVERFLOW_LIMIT {
                            return Err(Error::CoefficientOverflow(format!(
                                "term a†^{pa} a^{qa} b†^{pb} b^{qb}"
                            )));
                        }
                        out.accumulate([pa, qa, pb, qb], c);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn powi(&self, n: u32) -> Result<Self> {
        let mut out = Self::constant(Complex64::new(1.0, 0.0));
        for _ in 0..n {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    pub fn dagger(&self) -> Self {
        let mut out = Self::zero();
        for (&[p, q, r, s], &c) in &self.terms {
            out.accumulate([q, p, s, r], c.conj());
        }
        out
    }

    /// Every term has its conjugate-transposed partner with conjugate
    /// coefficient, to within `tol` relative to the largest coefficient.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let scale = self.terms.values().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
        let diff = self.sub(&self.dagger());
        diff.terms.values().all(|c| c.norm() <= tol * scale)
    }

    /// Drop terms smaller than `rel_tol` times the largest coefficient.
    pub fn prune(&self, rel_tol: f64) -> Self {
        let scale = self.terms.values().map(|c| c.norm()).fold(0.0, f64::max);
        let mut out = Self::zero();
        for (&p, &c) in &self.terms {
            if c.norm() > rel_tol * scale {
                out.accumulate(p, c);
            }
        }
        out
    }

    pub fn filter(&self, keep: impl Fn(&Powers) -> bool) -> Self {
        let mut out = Self::zero();
        for (p, &c) in &self.terms {
            if keep(p) {
                out.accumulate(*p, c);
            }
        }
        out
    }

    /// Terms acting on `mode` only (constant excluded).
    pub fn pure_mode(&self, mode: Mode) -> Self {
        self.filter(|p| {
            let (own, other) = match mode {
                Mode::A => (p[0] + p[1], p[2] + p[3]),
                Mode::B => (p[2] + p[3], p[0] + p[1]),
            };
            own > 0 && other == 0
        })
    }

    /// Terms acting on both modes.
    pub fn coupling_part(&self) -> Self {
        self.filter(|p| p[0] + p[1] > 0 && p[2] + p[3] > 0)
    }

    pub fn without_constant(&self) -> Self {
        self.filter(|p| p.iter().any(|&x| x > 0))
    }

    /// Dense matrix of the (infinite-dimensional) operator projected onto
    /// the truncated space.
    pub fn to_matrix(&self, space: FockSpace) -> DMatrix<Complex64> {
        let mut out = DMatrix::<Complex64>::zeros(space.dim(), space.dim());
        let mut cache_a: BTreeMap<(u32, u32), DMatrix<f64>> = BTreeMap::new();
        let mut cache_b: BTreeMap<(u32, u32), DMatrix<f64>> = BTreeMap::new();
        for (&[p, q, r, s], &c) in &self.terms {
            let ma = cache_a.entry((p, q)).or_insert_with(|| monomial_matrix(space.na, p, q)).clone();
            let mb = cache_b.entry((r, s)).or_insert_with(|| monomial_matrix(space.nb, r, s)).clone();
            let k = ma.kronecker(&mb);
            out.zip_apply(&k, |o, v| *o += c * v);
        }
        out
    }
}

/// Matrix of `x†^p x^q` on `n` levels using exact (untruncated) elements.
pub fn monomial_matrix(n: usize, p: u32, q: u32) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for col in 0..n {
        if (col as u32) < q {
            continue;
        }
        let mid = col - q as usize;
        let row = mid + p as usize;
        if row >= n {
            continue;
        }
        let down: f64 = ((mid + 1)..=col).map(|k| (k as f64).sqrt()).product();
        let up: f64 = ((mid + 1)..=row).map(|k| (k as f64).sqrt()).product();
        m[(row, col)] = down * up;
    }
    m
}

/// Normal-order a sum of ladder words `coeff · op_1 op_2 ... op_k`.
pub fn normal_order(words: &[(Complex64, Vec<Ladder>)]) -> Result<LadderPolynomial> {
    let mut out = LadderPolynomial::zero();
    for (coeff, ops) in words {
        let mut acc = LadderPolynomial::constant(*coeff);
        for &op in ops {
            acc = acc.mul(&LadderPolynomial::ladder(op))?;
        }
        out = out.add(&acc);
    }
    Ok(out)
}

fn check_order(order: u32) -> Result<()> {
    if order < 2 || order % 2 == 1 {
        return Err(Error::OddTaylorOrder(order));
    }
    Ok(())
}

/// `amp · (cos(arg) - 1)` expanded to `arg^order` and normal ordered.
pub fn cosine_series(amp: f64, arg: &LadderPolynomial, order: u32) -> Result<LadderPolynomial> {
    check_order(order)?;
    let sq = arg.mul(arg)?;
    let mut power = sq.clone();
    let mut out = LadderPolynomial::zero();
    let mut m = 1;
    while 2 * m <= order {
        let sign = if m % 2 == 1 { -1.0 } else { 1.0 };
        out = out.add(&power.scale_re(amp * sign / factorial(2 * m)));
        m += 1;
        if 2 * m <= order {
            power = power.mul(&sq)?;
        }
    }
    Ok(out)
}

/// `amp · sin(arg)` expanded to odd powers not exceeding `order + 1`.
pub fn sine_series(amp: f64, arg: &LadderPolynomial, order: u32) -> Result<LadderPolynomial> {
    check_order(order)?;
    let sq = arg.mul(arg)?;
    let mut power = arg.clone();
    let mut out = LadderPolynomial::zero();
    let mut m = 0;
    while 2 * m < order {
        let sign = if m % 2 == 1 { -1.0 } else { 1.0 };
        out = out.add(&power.scale_re(amp * sign / factorial(2 * m + 1)));
        m += 1;
        if 2 * m < order {
            power = power.mul(&sq)?;
        }
    }
    Ok(out)
}

/// Normal-ordered `-n·E·cos(φ/n)` with `φ = zpf (a + a†)` on mode `a`,
/// expanded to `φ^order`, with the constant `-n·E` dropped.
pub fn taylor_potential(e: f64, n_series: u32, zpf: f64, order: u32) -> Result<LadderPolynomial> {
    taylor_potential_on(Mode::A, e, n_series, zpf, order)
}

pub fn taylor_potential_on(mode: Mode, e: f64, n_series: u32, zpf: f64, order: u32) -> Result<LadderPolynomial> {
    if zpf <= 0.0 {
        return Err(Error::param("zpf", "must be positive"));
    }
    let n = f64::from(n_series);
    let arg = LadderPolynomial::quadrature(mode, zpf / n);
    cosine_series(-n * e, &arg, order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn annihilation_dim3() {
        let a = annihilation(3);
        assert_eq!(a[(0, 1)], 1.0);
        assert!((a[(1, 2)] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(a.iter().filter(|&&x| x != 0.0).count(), 2);
    }

    #[test]
    fn commutator_is_identity_below_top_level() {
        let space = FockSpace::new(25, 25).unwrap();
        for mode in [Mode::A, Mode::B] {
            let a = build_annihilation(space, mode);
            let comm = a.commutator(&a.dagger());
            for idx in 0..space.dim() {
                let (ia, ib) = space.levels(idx);
                let top = match mode {
                    Mode::A => ia == space.na - 1,
                    Mode::B => ib == space.nb - 1,
                };
                for jdx in 0..space.dim() {
                    let expect = if idx == jdx { 1.0 } else { 0.0 };
                    let got = comm.matrix[(idx, jdx)];
                    if top {
                        continue;
                    }
                    assert!((got - c(expect)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn a_adag_normal_orders() {
        let p = normal_order(&[(c(1.0), vec![Ladder::Annihilate(Mode::A), Ladder::Create(Mode::A)])]).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.coefficient([1, 1, 0, 0]), c(1.0));
        assert_eq!(p.constant_term(), c(1.0));
    }

    #[test]
    fn quadrature_squared() {
        let x = LadderPolynomial::quadrature(Mode::A, 1.0);
        let x2 = x.mul(&x).unwrap();
        assert_eq!(x2.coefficient([2, 0, 0, 0]), c(1.0));
        assert_eq!(x2.coefficient([0, 2, 0, 0]), c(1.0));
        assert_eq!(x2.coefficient([1, 1, 0, 0]), c(2.0));
        assert_eq!(x2.constant_term(), c(1.0));
    }

    #[test]
    fn quartic_coefficients() {
        let x = LadderPolynomial::quadrature(Mode::B, 1.0);
        let x4 = x.powi(4).unwrap();
        let expect = [
            ([0, 0, 4, 0], 1.0),
            ([0, 0, 3, 1], 4.0),
            ([0, 0, 2, 2], 6.0),
            ([0, 0, 2, 0], 6.0),
            ([0, 0, 1, 1], 12.0),
            ([0, 0, 0, 0], 3.0),
            ([0, 0, 1, 3], 4.0),
            ([0, 0, 0, 2], 6.0),
            ([0, 0, 0, 4], 1.0),
        ];
        for (p, v) in expect {
            assert_eq!(x4.coefficient(p), c(v), "{p:?}");
        }
        assert_eq!(x4.len(), expect.len());
    }

    #[test]
    fn odd_order_rejected() {
        assert!(matches!(taylor_potential(1.0, 1, 0.3, 5), Err(Error::OddTaylorOrder(5))));
    }

    #[test]
    fn taylor_vacuum_expectation() {
        let (e, n, z) = (538.0, 2u32, 0.3);
        let pot = taylor_potential(e, n, z, 10).unwrap();
        let nf = f64::from(n);
        let expect = e * nf * (1.0 - (-z * z / (2.0 * nf * nf)).exp());
        assert!((pot.constant_term().re - expect).abs() < 1e-6 * expect);
    }

    #[test]
    fn taylor_order4_quadratic_and_quartic() {
        let (e, z) = (538.0, 0.2);
        let pot = taylor_potential(e, 2, z, 4).unwrap();
        // -2E cos(φ/2) → E/2·φ²/2! − E/8·φ⁴/4!; a†⁴ only arises from φ⁴.
        let quartic = -e / 8.0 / 24.0 * z.powi(4);
        assert!((pot.coefficient([4, 0, 0, 0]).re - quartic).abs() < 1e-12);
        let quad_adag2 = e / 2.0 / 2.0 * z * z + quartic * 6.0;
        assert!((pot.coefficient([2, 0, 0, 0]).re - quad_adag2).abs() < 1e-12);
    }

    #[test]
    fn matrix_cosine_vacuum() {
        let space = FockSpace::new(40, 2).unwrap();
        let a = build_annihilation(space, Mode::A);
        let phi = FockOperator::new(space, (&a.matrix + a.matrix.adjoint()) * c(0.5));
        let cos = matrix_cosine(&phi).unwrap();
        let v = cos.matrix[(0, 0)].re;
        assert!((v - (-0.125f64).exp()).abs() < 1e-8);
        assert!(cos.is_hermitian());
    }

    #[test]
    fn matrix_cosine_of_zero_is_identity() {
        let space = FockSpace::new(3, 3).unwrap();
        let zero = FockOperator::new(space, DMatrix::zeros(9, 9));
        let cos = matrix_cosine(&zero).unwrap();
        assert!((cos.matrix - DMatrix::<Complex64>::identity(9, 9)).norm() < 1e-14);
    }

    #[test]
    fn matrix_cosine_rejects_non_hermitian() {
        let space = FockSpace::new(3, 3).unwrap();
        let a = build_annihilation(space, Mode::A);
        assert!(matches!(matrix_cosine(&a), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn padded_trig_pythagoras_interior() {
        let (cm, sm) = padded_trig(20, 0.4, 1.0, 30);
        let id = &cm * &cm + &sm * &sm;
        for i in 0..10 {
            for j in 0..10 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - e).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn pure_and_coupling_split() {
        let x = LadderPolynomial::quadrature(Mode::A, 0.3).sub(&LadderPolynomial::quadrature(Mode::B, 0.4));
        let p = cosine_series(1.0, &x, 4).unwrap();
        let whole = p.pure_mode(Mode::A).add(&p.pure_mode(Mode::B)).add(&p.coupling_part());
        assert_eq!(whole, p.without_constant());
        assert!(p.coupling_part().terms().all(|m| m.powers[0] + m.powers[1] > 0 && m.powers[2] + m.powers[3] > 0));
        assert!(p.is_hermitian(1e-12));
    }
}
