//! Eigensolve, bare-state labeling and readout metrics.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::circuit::{CircuitParams, HamiltonianBundle};
use crate::ops::{annihilation, embed, FockSpace, Mode};
use crate::{Error, Result};

/// Overlap below which a label is flagged as ambiguous.
pub const WARN_OVERLAP: f64 = 0.5;
/// Overlap below which a required label is rejected.
pub const FAIL_OVERLAP: f64 = 0.25;

pub type Label = (usize, usize);

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LabelEntry {
    pub index: usize,
    pub overlap: f64,
    pub ambiguous: bool,
}

#[derive(Clone, Debug)]
pub struct LabeledSpectrum {
    pub space: FockSpace,
    /// Eigenvalues in ascending order, GHz, shifted so the lowest is zero.
    pub energies: DVector<f64>,
    /// Eigenvectors as columns, in the order of `energies`.
    pub states: DMatrix<f64>,
    pub labels: BTreeMap<Label, LabelEntry>,
}

impl LabeledSpectrum {
    pub fn index(&self, l: Label) -> Result<usize> {
        self.labels.get(&l).map(|e| e.index).ok_or_else(|| Error::MissingLabels(vec![l]))
    }

    pub fn energy(&self, l: Label) -> Result<f64> {
        Ok(self.energies[self.index(l)?])
    }

    /// Eigenvector of a labeled state with the sign fixed so that its
    /// component on the matching bare state is positive.
    pub fn gauge_fixed_state(&self, l: Label) -> Result<DVector<f64>> {
        let v = self.states.column(self.index(l)?).into_owned();
        let bare = self.space.index(l.0, l.1);
        Ok(if v[bare] < 0.0 { -v } else { v })
    }

    /// Error if any of `labels` is missing or below the failure overlap.
    pub fn require(&self, labels: &[Label]) -> Result<()> {
        let missing: Vec<Label> = labels.iter().copied().filter(|l| !self.labels.contains_key(l)).collect();
        if !missing.is_empty() {
            return Err(Error::MissingLabels(missing));
        }
        for &(na, nb) in labels {
            let e = self.labels[&(na, nb)];
            if e.overlap < FAIL_OVERLAP {
                return Err(Error::LabelingFailure { na, nb, overlap: e.overlap, threshold: FAIL_OVERLAP });
            }
        }
        Ok(())
    }

    pub fn ambiguous_labels(&self) -> Vec<Label> {
        self.labels.iter().filter(|(_, e)| e.ambiguous).map(|(&l, _)| l).collect()
    }

    pub fn min_overlap(&self, labels: &[Label]) -> f64 {
        labels.iter().filter_map(|l| self.labels.get(l)).map(|e| e.overlap).fold(1.0, f64::min)
    }
}

/// Sorted dense eigensolve of a real symmetric matrix.
pub fn sorted_eigen(h: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..h.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let energies = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let states = DMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
    (energies, states)
}

/// Greedy max-overlap labeling of bare states `(n_a < window.0, n_b < window.1)`
/// visited in increasing `n_a + n_b`. A collision goes to the larger overlap
/// and the loser moves to its best unclaimed eigenstate.
pub fn label_states(space: FockSpace, states: &DMatrix<f64>, window: Label) -> BTreeMap<Label, LabelEntry> {
    let mut bare: Vec<Label> = (0..window.0.min(space.na))
        .flat_map(|i| (0..window.1.min(space.nb)).map(move |j| (i, j)))
        .collect();
    bare.sort_by_key(|&(i, j)| (i + j, i, j));

    let overlap = |l: Label, k: usize| states[(space.index(l.0, l.1), k)].powi(2);
    let ranked = |l: Label| -> Vec<usize> {
        let mut idx: Vec<usize> = (0..states.ncols()).collect();
        idx.sort_by(|&x, &y| overlap(l, y).total_cmp(&overlap(l, x)));
        idx
    };

    let mut owner: BTreeMap<usize, Label> = BTreeMap::new();
    let mut assigned: BTreeMap<Label, usize> = BTreeMap::new();
    for &l in &bare {
        let order = ranked(l);
        let best = order[0];
        match owner.get(&best).copied() {
            None => {
                owner.insert(best, l);
                assigned.insert(l, best);
            }
            Some(prev) if overlap(l, best) > overlap(prev, best) => {
                owner.insert(best, l);
                assigned.insert(l, best);
                let next = ranked(prev).into_iter().find(|k| !owner.contains_key(k));
                if let Some(k) = next {
                    owner.insert(k, prev);
                    assigned.insert(prev, k);
                } else {
                    assigned.remove(&prev);
                }
            }
            Some(_) => {
                if let Some(k) = order.into_iter().find(|k| !owner.contains_key(k)) {
                    owner.insert(k, l);
                    assigned.insert(l, k);
                }
            }
        }
    }
    assigned
        .into_iter()
        .map(|(l, k)| {
            let ov = overlap(l, k);
            (l, LabelEntry { index: k, overlap: ov, ambiguous: ov < WARN_OVERLAP })
        })
        .collect()
}

/// Diagonalize, label the `window` of bare states, and check `required`.
pub fn eigensolve_and_label(bundle: &HamiltonianBundle, window: Label, required: &[Label]) -> Result<LabeledSpectrum> {
    let (mut energies, states) = sorted_eigen(&bundle.matrix);
    let e0 = energies[0];
    energies.add_scalar_mut(-e0);
    let labels = label_states(bundle.space, &states, window);
    let spec = LabeledSpectrum { space: bundle.space, energies, states, labels };
    for l in spec.ambiguous_labels() {
        log::debug!("label {l:?} ambiguous (overlap {:.3})", spec.labels[&l].overlap);
    }
    spec.require(required)?;
    if spec.labels.get(&(0, 0)).map(|e| e.index) != Some(0) {
        log::warn!("ground state not labeled |0,0>");
    }
    Ok(spec)
}

/// Labels needed by [`compute_metrics`].
pub fn metric_labels(n_star: usize) -> Vec<Label> {
    let mut v: Vec<Label> = (0..=n_star).flat_map(|n| [(n, 0), (n, 1)]).collect();
    v.push((0, 2));
    v
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumMetrics {
    /// Resonator transition spread with the qubit in |0>, MHz.
    pub spread_q0: f64,
    pub spread_q1: f64,
    /// `ω11 - ω01 - ω10`, MHz.
    pub cross_kerr_2chi: f64,
    /// `ω02 - 2 ω01`, MHz.
    pub self_kerr_kb: f64,
    /// `ω10`, GHz.
    pub omega_10: f64,
    /// `ω01`, GHz.
    pub omega_01: f64,
    pub n_star: usize,
    pub ambiguity_flags: Vec<Label>,
}

impl SpectrumMetrics {
    pub fn max_spread(&self) -> f64 {
        self.spread_q0.max(self.spread_q1)
    }
}

fn spread(spec: &LabeledSpectrum, q: usize, n_star: usize) -> Result<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for n in 1..=n_star {
        let w = spec.energy((n, q))? - spec.energy((n - 1, q))?;
        lo = lo.min(w);
        hi = hi.max(w);
    }
    Ok((hi - lo) * 1e3)
}

pub fn compute_metrics(spec: &LabeledSpectrum, n_star: usize) -> Result<SpectrumMetrics> {
    if n_star < 2 {
        return Err(Error::param("n_star", "must be at least 2"));
    }
    let needed = metric_labels(n_star);
    let missing: Vec<Label> = needed.iter().copied().filter(|l| !spec.labels.contains_key(l)).collect();
    if !missing.is_empty() {
        return Err(Error::MissingLabels(missing));
    }
    let e = |l: Label| spec.energies[spec.labels[&l].index];
    let flags = needed.iter().copied().filter(|l| spec.labels[l].ambiguous).collect();
    Ok(SpectrumMetrics {
        spread_q0: spread(spec, 0, n_star)?,
        spread_q1: spread(spec, 1, n_star)?,
        cross_kerr_2chi: (e((1, 1)) - e((0, 1)) - e((1, 0))) * 1e3,
        self_kerr_kb: (e((0, 2)) - 2.0 * e((0, 1))) * 1e3,
        omega_10: e((1, 0)) - e((0, 0)),
        omega_01: e((0, 1)) - e((0, 0)),
        n_star,
        ambiguity_flags: flags,
    })
}

/// Closed-form Kerr scalings (GHz) using effective junction energies.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KerrEstimates {
    pub chi_ab: f64,
    pub internal_self_kerr: (f64, f64),
    pub quarton_self_kerr: (f64, f64),
    /// Self-Kerr shifts from correlated squeezing, (resonator, qubit).
    pub squeezing_self_kerr: (f64, f64),
    /// Cross-Kerr shifts from squeezing of (resonator, qubit).
    pub squeezing_cross_kerr: (f64, f64),
}

pub fn analytic_kerr_estimates(p: &CircuitParams) -> KerrEstimates {
    let (eja, ejb) = (p.e_ja_eff(), p.e_jb_eff());
    let e_q = p.e_q();
    let chi = 2.0 * e_q * (p.e_ca * p.e_cb / (eja * ejb)).sqrt();
    let omega_a = (8.0 * p.e_ca * eja).sqrt();
    let omega_b = (8.0 * p.e_cb * ejb).sqrt();
    let na2 = f64::from(p.n_ja).powi(2);
    let nb2 = f64::from(p.n_jb).powi(2);
    KerrEstimates {
        chi_ab: chi,
        internal_self_kerr: (-p.e_ca / na2, -p.e_cb / nb2),
        quarton_self_kerr: (e_q / eja * p.e_ca, e_q / ejb * p.e_cb),
        squeezing_self_kerr: (-chi * chi / (2.0 * omega_a), -chi * chi / (2.0 * omega_b)),
        squeezing_cross_kerr: (-chi * chi / (2.0 * omega_a), -chi * chi / (2.0 * omega_b)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SqueezingCheck {
    pub cross_kerr_exact: f64,
    pub self_kerr_exact: f64,
    /// `-2 ζ² / ω_b`.
    pub cross_kerr_analytic: f64,
    /// `K = -2 ζ² / ω_b`, i.e. an `a†²a²` coefficient of `-ζ²/ω_b`.
    pub self_kerr_analytic: f64,
}

pub const SQUEEZING_TOY_DIM: usize = 10;

/// Exact diagonalization of `ω_a a†a + ω_b b†b + ζ (b†² + b²) a†a`.
pub fn squeezing_toy_check(omega_a: f64, omega_b: f64, zeta: f64) -> Result<SqueezingCheck> {
    if !(zeta.abs() / omega_b < 0.05) {
        return Err(Error::param("zeta", "toy model needs |ζ|/ω_b < 0.05"));
    }
    let n = SQUEEZING_TOY_DIM;
    let space = FockSpace::square(n)?;
    let a = annihilation(n);
    let num = a.transpose() * &a;
    let sq = a.transpose() * a.transpose() + &a * &a;
    let h = embed(space, Mode::A, &num) * omega_a
        + embed(space, Mode::B, &num) * omega_b
        + num.kronecker(&sq) * zeta;
    let (energies, states) = sorted_eigen(&h);
    let labels = label_states(space, &states, (4, 4));
    let e = |l: Label| energies[labels[&l].index];
    Ok(SqueezingCheck {
        cross_kerr_exact: e((1, 1)) - e((1, 0)) - e((0, 1)) + e((0, 0)),
        self_kerr_exact: e((2, 0)) - 2.0 * e((1, 0)) + e((0, 0)),
        cross_kerr_analytic: -2.0 * zeta * zeta / omega_b,
        self_kerr_analytic: -2.0 * zeta * zeta / omega_b,
    })
}
