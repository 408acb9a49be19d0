//! Single-point analysis and 1-D/2-D parameter sweeps.

use serde::{Deserialize, Serialize};

use crate::basis::{optimize_basis, optimize_tilt, BasisChoice, BasisSettings, DEFAULT_TILT_RANGE};
use crate::circuit::{build_hamiltonian, CircuitParams, HamiltonianBundle, HamiltonianMode};
use crate::dissipation::KappaModel;
use crate::exec::{map_indexed, Exec};
use crate::ops::FockSpace;
use crate::qnd::{build_decay_matrix, qbar, QndEstimate, DEFAULT_READOUT_TIME};
use crate::spectrum::{compute_metrics, eigensolve_and_label, metric_labels, Label, LabeledSpectrum, SpectrumMetrics};
use crate::{Error, Result};

/// Relative tolerance on constraint satisfaction before a point is solved.
pub const CONSTRAINT_TOL: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSettings {
    pub fock_levels: usize,
    /// Labeling window `(n_a, n_b)`.
    pub window: Label,
    pub n_star: usize,
    pub basis: BasisSettings,
    /// Re-optimize the tilt in this range; `None` keeps `alpha` as given.
    pub tilt_range: Option<(f64, f64)>,
    pub n_bar: f64,
    pub delta_t: f64,
    pub filter: bool,
}

impl Default for PointSettings {
    fn default() -> Self {
        Self {
            fock_levels: 25,
            window: (14, 6),
            n_star: 7,
            basis: BasisSettings::default(),
            tilt_range: None,
            n_bar: 2.0,
            delta_t: DEFAULT_READOUT_TIME,
            filter: true,
        }
    }
}

/// Everything computed at one parameter point.
#[derive(Clone, Debug)]
pub struct PointAnalysis {
    pub params: CircuitParams,
    pub basis: BasisChoice,
    pub tilt_residual: Option<f64>,
    pub bundle: HamiltonianBundle,
    pub spectrum: LabeledSpectrum,
    pub metrics: SpectrumMetrics,
    /// Readout reference frequency (midpoint of the pulled resonator lines), GHz.
    pub omega_d: f64,
    pub kappa: KappaModel,
    pub qnd: [QndEstimate; 2],
}

/// Drive/reference frequency `(ω10 + ω11 - ω01)/2`.
pub fn readout_frequency(spec: &LabeledSpectrum) -> Result<f64> {
    let e = |l| spec.energy(l);
    Ok((e((1, 0))? - e((0, 0))? + e((1, 1))? - e((0, 1))?) / 2.0)
}

pub fn analyze_point(params: &CircuitParams, s: &PointSettings) -> Result<PointAnalysis> {
    params.validate()?;
    let (params, basis, tilt_residual) = match s.tilt_range {
        Some(range) => {
            let t = optimize_tilt(params, &s.basis, range)?;
            (params.with_tilt(t.tilt), t.basis, Some(t.residual))
        }
        None => (params.clone(), optimize_basis(params, &s.basis)?, None),
    };
    let space = FockSpace::square(s.fock_levels)?;
    let bundle = build_hamiltonian(&params, &basis, space, HamiltonianMode::Exact)?;
    let spectrum = eigensolve_and_label(&bundle, s.window, &metric_labels(s.n_star))?;
    let metrics = compute_metrics(&spectrum, s.n_star)?;
    let omega_d = readout_frequency(&spectrum)?;
    let mut kappa = KappaModel::new(params.kappa_r, omega_d);
    if s.filter {
        kappa = kappa.with_filter(omega_d, params.kappa_f);
    }
    let decay = build_decay_matrix(&spectrum, &kappa)?;
    let qnd = [qbar(&decay, &spectrum, 0, s.n_bar, s.delta_t)?, qbar(&decay, &spectrum, 1, s.n_bar, s.delta_t)?];
    Ok(PointAnalysis { params, basis, tilt_residual, bundle, spectrum, metrics, omega_d, kappa, qnd })
}

/// Parameters addressable by a sweep axis.
pub const SWEEP_PARAMETERS: [&str; 10] =
    ["e_q", "e_ja_eff", "e_ja", "e_jb", "e_j", "e_ca", "e_cb", "tilt", "kappa_r", "flux_bias"];

pub fn set_parameter(p: &mut CircuitParams, name: &str, value: f64) -> Result<()> {
    match name {
        "e_q" => p.set_e_q(value)?,
        "e_ja_eff" => p.e_ja = value * f64::from(p.n_ja),
        "e_ja" => p.e_ja = value,
        "e_jb" => p.e_jb = value,
        "e_j" => p.e_j = value,
        "e_ca" => p.e_ca = value,
        "e_cb" => p.e_cb = value,
        "tilt" => p.alpha = value / 2.0,
        "kappa_r" => p.kappa_r = value,
        "flux_bias" => p.flux_bias = value,
        _ => return Err(Error::param("axis", format!("unknown sweep parameter `{name}`"))),
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn linspace(param: &str, lo: f64, hi: f64, n: usize) -> Self {
        let values = if n == 1 { vec![lo] } else { (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect() };
        Self { param: param.to_string(), values }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Constraint {
    /// Hold `sqrt(8 E_Ca E_Ja_eff)` at this value (GHz) by co-varying `E_Ca`.
    ResonatorFrequency(f64),
}

impl Constraint {
    pub fn apply(&self, p: &mut CircuitParams) {
        match *self {
            Constraint::ResonatorFrequency(w) => p.e_ca = w * w / (8.0 * p.e_ja_eff()),
        }
    }

    pub fn violation(&self, p: &CircuitParams) -> f64 {
        match *self {
            Constraint::ResonatorFrequency(w) => (p.omega_a_harmonic() / w - 1.0).abs(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis1: Axis,
    pub axis2: Option<Axis>,
    pub constraints: Vec<Constraint>,
    pub point: PointSettings,
}

impl SweepSpec {
    /// Line cut in `E_Q` at fixed resonator parameters with per-point tilt.
    pub fn line_cut(lo: f64, hi: f64, n: usize) -> Self {
        Self {
            axis1: Axis::linspace("e_q", lo, hi, n),
            axis2: None,
            constraints: Vec::new(),
            point: PointSettings { tilt_range: Some(DEFAULT_TILT_RANGE), ..Default::default() },
        }
    }

    pub fn grid(&self) -> Vec<(usize, usize, f64, Option<f64>)> {
        let mut out = Vec::new();
        for (i, &v1) in self.axis1.values.iter().enumerate() {
            match &self.axis2 {
                None => out.push((i, 0, v1, None)),
                Some(a2) => out.extend(a2.values.iter().enumerate().map(|(j, &v2)| (i, j, v1, Some(v2)))),
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub i: usize,
    pub j: usize,
    pub value1: f64,
    pub value2: Option<f64>,
    pub e_q: f64,
    pub e_ja_eff: f64,
    pub e_ca: f64,
    pub tilt: f64,
    pub zpf_a: f64,
    pub zpf_b: f64,
    pub metrics: Option<SpectrumMetrics>,
    pub qbar0: Option<f64>,
    pub qbar1: Option<f64>,
    /// `ok`, or the error kind that stopped the point.
    pub status: String,
    pub message: Option<String>,
}

impl SweepRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

fn point_params(base: &CircuitParams, spec: &SweepSpec, v1: f64, v2: Option<f64>) -> Result<CircuitParams> {
    let mut p = base.clone();
    set_parameter(&mut p, &spec.axis1.param, v1)?;
    if let (Some(a2), Some(v2)) = (&spec.axis2, v2) {
        set_parameter(&mut p, &a2.param, v2)?;
    }
    for c in &spec.constraints {
        c.apply(&mut p);
        let v = c.violation(&p);
        if v > CONSTRAINT_TOL {
            return Err(Error::param("constraint", format!("violated by {v:.2e}")));
        }
    }
    Ok(p)
}

fn run_point(base: &CircuitParams, spec: &SweepSpec, i: usize, j: usize, v1: f64, v2: Option<f64>) -> SweepRow {
    let mut row = SweepRow {
        i,
        j,
        value1: v1,
        value2: v2,
        e_q: f64::NAN,
        e_ja_eff: f64::NAN,
        e_ca: f64::NAN,
        tilt: f64::NAN,
        zpf_a: f64::NAN,
        zpf_b: f64::NAN,
        metrics: None,
        qbar0: None,
        qbar1: None,
        status: "ok".into(),
        message: None,
    };
    let result = point_params(base, spec, v1, v2).and_then(|p| {
        row.e_q = p.e_q();
        row.e_ja_eff = p.e_ja_eff();
        row.e_ca = p.e_ca;
        row.tilt = p.tilt();
        analyze_point(&p, &spec.point)
    });
    match result {
        Ok(a) => {
            row.tilt = a.params.tilt();
            row.zpf_a = a.basis.zpf_a;
            row.zpf_b = a.basis.zpf_b;
            row.qbar0 = Some(a.qnd[0].qbar);
            row.qbar1 = Some(a.qnd[1].qbar);
            row.metrics = Some(a.metrics);
        }
        Err(e) => {
            log::warn!("sweep point ({i}, {j}) failed: {e}");
            row.status = e.kind().to_string();
            row.message = Some(e.to_string());
        }
    }
    row
}

/// Evaluate every grid point. Failed points keep their row with a status flag.
pub fn run_sweep(base: &CircuitParams, spec: &SweepSpec, exec: Exec) -> Result<Vec<SweepRow>> {
    let grid = spec.grid();
    if grid.is_empty() {
        return Err(Error::param("axis1", "sweep grid is empty"));
    }
    for name in std::iter::once(&spec.axis1.param).chain(spec.axis2.as_ref().map(|a| &a.param)) {
        if !SWEEP_PARAMETERS.contains(&name.as_str()) {
            return Err(Error::param("axis", format!("unknown sweep parameter `{name}`")));
        }
    }
    Ok(map_indexed(grid.len(), exec, |k| {
        let (i, j, v1, v2) = grid[k];
        run_point(base, spec, i, j, v1, v2)
    }))
}

/// Row with the smallest max-spread among successful points.
pub fn spread_minimum(rows: &[SweepRow]) -> Option<&SweepRow> {
    rows.iter()
        .filter(|r| r.metrics.is_some())
        .min_by(|a, b| {
            let sa = a.metrics.as_ref().map_or(f64::INFINITY, |m| m.max_spread());
            let sb = b.metrics.as_ref().map_or(f64::INFINITY, |m| m.max_spread());
            sa.total_cmp(&sb)
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constraint_holds_resonator_frequency() {
        let mut p = CircuitParams::nominal();
        let w = p.omega_a_harmonic();
        set_parameter(&mut p, "e_ja_eff", 300.0).unwrap();
        let c = Constraint::ResonatorFrequency(w);
        c.apply(&mut p);
        assert!(c.violation(&p) < 1e-12);
    }

    #[test]
    fn unknown_parameter_rejected() {
        let mut p = CircuitParams::nominal();
        assert!(set_parameter(&mut p, "nonsense", 1.0).is_err());
    }

    #[test]
    fn grid_shape() {
        let spec = SweepSpec {
            axis2: Some(Axis::linspace("e_ja_eff", 250.0, 290.0, 3)),
            ..SweepSpec::line_cut(50.0, 90.0, 4)
        };
        let g = spec.grid();
        assert_eq!(g.len(), 12);
        assert_eq!(g[5], (1, 2, spec.axis1.values[1], Some(290.0)));
    }
}
