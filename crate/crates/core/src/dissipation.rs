//! Zero-temperature jump operators built from eigenstate transitions,
//! grouped into independent baths by frequency.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::units::ang;
use crate::{Error, Result};

/// Rates below this value (rad/ns, i.e. 10 kHz) are discarded.
pub const DEFAULT_PRUNE_THRESHOLD: f64 = crate::units::TWO_PI * 1e-5;
pub const DEFAULT_CLUSTER_FACTOR: f64 = 1.0;

/// Frequency-dependent coupling `κ(ω) = κ_r (ω/ω_r)²` with an optional
/// Lorentzian filter weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KappaModel {
    /// Linewidth at `omega_r`, GHz.
    pub kappa_r: f64,
    /// Reference frequency, GHz.
    pub omega_r: f64,
    /// Filter (center GHz, linewidth GHz).
    pub filter: Option<(f64, f64)>,
}

impl KappaModel {
    pub fn new(kappa_r: f64, omega_r: f64) -> Self {
        Self { kappa_r, omega_r, filter: None }
    }

    pub fn with_filter(self, center: f64, kappa_f: f64) -> Self {
        Self { filter: Some((center, kappa_f)), ..self }
    }

    pub fn filter_weight(&self, omega: f64) -> f64 {
        match self.filter {
            Some((c, kf)) => 1.0 / (1.0 + (2.0 * (omega - c) / kf).powi(2)),
            None => 1.0,
        }
    }

    /// Weighted coupling rate at `omega` (GHz) in rad/ns.
    pub fn rate(&self, omega: f64) -> f64 {
        ang(self.kappa_r) * (omega / self.omega_r).powi(2) * self.filter_weight(omega)
    }
}

/// Downward transition `upper -> lower` in a truncated eigenbasis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Transition {
    pub lower: usize,
    pub upper: usize,
    /// Transition frequency, GHz.
    pub omega: f64,
    /// `|<lower| (a† - a) |upper>|`.
    pub element: f64,
    /// Effective rate, rad/ns.
    pub rate: f64,
}

impl Transition {
    /// Jump amplitude `sqrt(κ(ω) f(ω)) |element|`.
    pub fn amplitude(&self) -> f64 {
        self.rate.sqrt()
    }
}

/// `κ(ω_ji) f(ω_ji) |<i|X|j>|²` for the decay `j -> i`.
pub fn effective_rate(i: usize, j: usize, energies: &[f64], x: &DMatrix<f64>, kappa: &KappaModel) -> Result<f64> {
    let w = energies[j] - energies[i];
    if w <= 0.0 {
        return Err(Error::UpwardTransition { lower: j, upper: i });
    }
    Ok(kappa.rate(w) * x[(i, j)].powi(2))
}

/// All downward transitions with nonzero rate.
pub fn transitions(energies: &[f64], x: &DMatrix<f64>, kappa: &KappaModel) -> Vec<Transition> {
    let n = energies.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let w = energies[j] - energies[i];
            if w <= 0.0 {
                continue;
            }
            let element = x[(i, j)].abs();
            let rate = kappa.rate(w) * element * element;
            if rate > 0.0 {
                out.push(Transition { lower: i, upper: j, omega: w, element, rate });
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bath {
    pub members: Vec<Transition>,
    /// Sum of member rates, rad/ns.
    pub total_rate: f64,
    pub omega_min: f64,
    pub omega_max: f64,
}

impl Bath {
    /// Jump operator `Σ sqrt(rate) |lower><upper|`, with the bath rate set to 1.
    pub fn jump_operator(&self, dim: usize) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(dim, dim);
        for t in &self.members {
            l[(t.lower, t.upper)] += t.amplitude();
        }
        l
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DissipatorSet {
    pub baths: Vec<Bath>,
    /// Monitored bath: the one with the largest total rate.
    pub k_star: Option<usize>,
    pub threshold: f64,
    pub dropped: Vec<Transition>,
}

impl DissipatorSet {
    pub fn is_empty(&self) -> bool {
        self.baths.is_empty()
    }

    pub fn total_rate(&self) -> f64 {
        self.baths.iter().map(|b| b.total_rate).sum()
    }
}

/// Split transitions into retained and dropped by rate.
pub fn prune(transitions: &[Transition], threshold: f64) -> (Vec<Transition>, Vec<Transition>) {
    transitions.iter().partition(|t| t.rate >= threshold)
}

/// Sort by frequency and merge neighbours whose gap is at most `c · width`
/// (width in GHz, usually the resonator linewidth).
pub fn cluster_baths(transitions: &[Transition], c: f64, width: f64) -> Result<DissipatorSet> {
    if transitions.is_empty() {
        return Err(Error::EmptyTransitions);
    }
    if !(c > 0.0) {
        return Err(Error::param("cluster_factor", "must be positive"));
    }
    let mut sorted = transitions.to_vec();
    sorted.sort_by(|a, b| a.omega.total_cmp(&b.omega).then(a.upper.cmp(&b.upper)).then(a.lower.cmp(&b.lower)));
    let eps = c * width;
    let mut groups: Vec<Vec<Transition>> = vec![vec![sorted[0]]];
    for t in sorted.into_iter().skip(1) {
        let last = groups.last_mut().expect("non-empty");
        if t.omega - last.last().expect("non-empty").omega <= eps {
            last.push(t);
        } else {
            groups.push(vec![t]);
        }
    }
    let baths: Vec<Bath> = groups
        .into_iter()
        .map(|members| Bath {
            total_rate: members.iter().map(|t| t.rate).sum(),
            omega_min: members[0].omega,
            omega_max: members[members.len() - 1].omega,
            members,
        })
        .collect();
    let k_star = baths
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_rate.total_cmp(&b.1.total_rate))
        .map(|(i, _)| i);
    Ok(DissipatorSet { baths, k_star, threshold: 0.0, dropped: Vec::new() })
}

/// Prune then cluster. An infinite threshold yields an explicitly empty set.
pub fn build_dissipators(transitions: &[Transition], threshold: f64, c: f64, width: f64) -> Result<DissipatorSet> {
    let (kept, dropped) = prune(transitions, threshold);
    if kept.is_empty() {
        return Ok(DissipatorSet { baths: Vec::new(), k_star: None, threshold, dropped });
    }
    let mut set = cluster_baths(&kept, c, width)?;
    set.threshold = threshold;
    set.dropped = dropped;
    Ok(set)
}

/// Membership signature of the baths whose rate exceeds `min_rate`, used to
/// compare partitions.
pub fn dominant_partition(set: &DissipatorSet, min_rate: f64) -> Vec<Vec<(usize, usize)>> {
    let mut out: Vec<Vec<(usize, usize)>> = set
        .baths
        .iter()
        .filter(|b| b.total_rate >= min_rate)
        .map(|b| {
            let mut m: Vec<(usize, usize)> = b.members.iter().map(|t| (t.lower, t.upper)).collect();
            m.sort_unstable();
            m
        })
        .collect();
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tr(omega: f64) -> Transition {
        Transition { lower: 0, upper: 1, omega, element: 1.0, rate: 1.0 }
    }

    #[test]
    fn kappa_anchor_and_scaling() {
        let k = KappaModel::new(0.3, 16.0).with_filter(16.0, 1.2);
        assert!((k.rate(16.0) - ang(0.3)).abs() < 1e-15);
        let bare = KappaModel::new(0.3, 16.0);
        assert!((bare.rate(32.0) - 4.0 * ang(0.3)).abs() < 1e-12);
        let half = k.rate(16.0 - 0.6) / (ang(0.3) * ((16.0 - 0.6) / 16.0f64).powi(2));
        assert!((half - 0.5).abs() < 1e-12);
    }

    #[test]
    fn upward_transition_rejected() {
        let x = DMatrix::from_element(2, 2, 1.0);
        let k = KappaModel::new(0.3, 16.0);
        assert!(effective_rate(0, 1, &[0.0, 16.0], &x, &k).is_ok());
        assert!(matches!(effective_rate(1, 0, &[0.0, 16.0], &x, &k), Err(Error::UpwardTransition { .. })));
    }

    #[test]
    fn clustering_by_gap() {
        let far = cluster_baths(&[tr(16.0), tr(19.0)], 1.0, 0.3).unwrap();
        assert_eq!(far.baths.len(), 2);
        let near = cluster_baths(&[tr(16.0), tr(16.15)], 1.0, 0.3).unwrap();
        assert_eq!(near.baths.len(), 1);
        assert!(cluster_baths(&[], 1.0, 0.3).is_err());
    }

    #[test]
    fn prune_extremes() {
        let ts = vec![tr(1.0), tr(2.0)];
        let (kept, dropped) = prune(&ts, 0.5);
        assert_eq!(kept, ts);
        assert!(dropped.is_empty());
        let set = build_dissipators(&ts, f64::INFINITY, 1.0, 0.3).unwrap();
        assert!(set.is_empty());
        assert_eq!(set.k_star, None);
        assert_eq!(set.dropped.len(), 2);
    }
}
