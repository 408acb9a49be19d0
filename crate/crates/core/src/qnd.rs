//! Analytic QND estimate from first-order leakage out of a steady coherent
//! readout state.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dissipation::KappaModel;
use crate::ops::FockSpace;
use crate::spectrum::{Label, LabeledSpectrum};
use crate::{Error, Result};

pub const DEFAULT_READOUT_TIME: f64 = 10.0;
const POISSON_TAIL: f64 = 1e-6;

/// `(a† - a) ⊗ 1` applied to a state vector.
pub fn apply_resonator_quadrature(space: FockSpace, v: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(v.len());
    for na in 0..space.na {
        for nb in 0..space.nb {
            let i = space.index(na, nb);
            let mut acc = 0.0;
            if na > 0 {
                acc += (na as f64).sqrt() * v[space.index(na - 1, nb)];
            }
            if na + 1 < space.na {
                acc -= ((na + 1) as f64).sqrt() * v[space.index(na + 1, nb)];
            }
            out[i] = acc;
        }
    }
    out
}

/// Energies (GHz) and `<e_i|(a† - a)|e_j>` on gauge-fixed labeled states.
pub fn project_resonator_quadrature(spec: &LabeledSpectrum, labels: &[Label]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let vs: Vec<DVector<f64>> = labels.iter().map(|&l| spec.gauge_fixed_state(l)).collect::<Result<_>>()?;
    let energies = labels.iter().map(|&l| spec.energy(l)).collect::<Result<Vec<_>>>()?;
    let n = labels.len();
    let xv: Vec<DVector<f64>> = vs.iter().map(|v| apply_resonator_quadrature(spec.space, v)).collect();
    let x = DMatrix::from_fn(n, n, |i, j| vs[i].dot(&xv[j]));
    Ok((energies, x))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayEntry {
    pub lower: Label,
    pub upper: Label,
    /// GHz.
    pub omega: f64,
    pub element: f64,
    /// `sqrt(κ_eff)` in (rad/ns)^(1/2).
    pub amplitude: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayMatrix {
    pub labels: Vec<Label>,
    pub entries: Vec<DecayEntry>,
    #[serde(skip)]
    lookup: BTreeMap<(Label, Label), usize>,
}

impl DecayMatrix {
    pub fn amplitude(&self, lower: Label, upper: Label) -> f64 {
        self.lookup.get(&(lower, upper)).map_or(0.0, |&i| self.entries[i].amplitude)
    }
}

/// Decay amplitudes between all labeled states in the spectrum.
pub fn build_decay_matrix(spec: &LabeledSpectrum, kappa: &KappaModel) -> Result<DecayMatrix> {
    let labels: Vec<Label> = spec.labels.keys().copied().collect();
    let (energies, x) = project_resonator_quadrature(spec, &labels)?;
    let mut entries = Vec::new();
    let mut lookup = BTreeMap::new();
    for (i, &lo) in labels.iter().enumerate() {
        for (j, &up) in labels.iter().enumerate() {
            let w = energies[j] - energies[i];
            if w <= 0.0 {
                continue;
            }
            let element = x[(i, j)].abs();
            let amplitude = (kappa.rate(w)).sqrt() * element;
            if amplitude == 0.0 {
                continue;
            }
            lookup.insert((lo, up), entries.len());
            entries.push(DecayEntry { lower: lo, upper: up, omega: w, element, amplitude });
        }
    }
    Ok(DecayMatrix { labels, entries, lookup })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QndEstimate {
    pub qubit_state: usize,
    /// Leakage rate, 1/ns.
    pub gamma: f64,
    pub qbar: f64,
    pub delta_t: f64,
    pub alpha: f64,
    /// Highest resonator level in the truncated coherent state.
    pub n_max: usize,
}

/// Smallest `n` with Poisson CDF at `n` above `1 - tail`.
pub fn poisson_cutoff(n_bar: f64, tail: f64) -> usize {
    let mut term = (-n_bar).exp();
    let mut cdf = term;
    let mut n = 0;
    while cdf < 1.0 - tail {
        n += 1;
        term *= n_bar / n as f64;
        cdf += term;
    }
    n
}

/// `Q̄ = exp(-Δt Γ_k)` with `Γ_k = Σ_{targets q≠k} |Σ_n c_n D(target, |n,k>)|²`.
pub fn qbar(decay: &DecayMatrix, spec: &LabeledSpectrum, k: usize, n_bar: f64, delta_t: f64) -> Result<QndEstimate> {
    if n_bar < 0.0 || delta_t < 0.0 {
        return Err(Error::param("n_bar/delta_t", "must be non-negative"));
    }
    let n_max = poisson_cutoff(n_bar, POISSON_TAIL);
    for n in 0..=n_max {
        if !spec.labels.contains_key(&(n, k)) {
            return Err(Error::InsufficientLadder { needed: n, qubit: k });
        }
    }
    let mut weight = (-n_bar / 2.0).exp();
    let coeffs: Vec<f64> = (0..=n_max)
        .map(|n| {
            if n > 0 {
                weight *= n_bar.sqrt() / (n as f64).sqrt();
            }
            weight
        })
        .collect();
    let mut gamma = 0.0;
    for &target in decay.labels.iter().filter(|l| l.1 != k) {
        let amp: f64 = coeffs.iter().enumerate().map(|(n, c)| c * decay.amplitude(target, (n, k))).sum();
        gamma += amp * amp;
    }
    Ok(QndEstimate { qubit_state: k, gamma, qbar: (-delta_t * gamma).exp(), delta_t, alpha: n_bar.sqrt(), n_max })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_cutoff_values() {
        assert_eq!(poisson_cutoff(0.0, 1e-6), 0);
        let n = poisson_cutoff(2.0, 1e-6);
        assert!((10..=14).contains(&n), "{n}");
    }

    #[test]
    fn quadrature_on_vacuum() {
        let space = FockSpace::new(4, 2).unwrap();
        let mut v = DVector::zeros(8);
        v[0] = 1.0;
        let out = apply_resonator_quadrature(space, &v);
        assert_eq!(out[space.index(1, 0)], 1.0);
        assert_eq!(out.iter().filter(|&&x| x != 0.0).count(), 1);
    }
}
