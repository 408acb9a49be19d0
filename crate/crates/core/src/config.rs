//! Run configuration: a flat `key = value` text format with dotted sections and units.
//!
//! ```text
//! # comment
//! seed = 7
//! [circuit]
//! e_ja = 538 GHz
//! c_a = 163 fF
//! readout.pulse_len = 5 ns     # a dotted key inside a section is appended to it
//! ```
//!
//! Every dimensionful value must carry a unit. Values are stored in a canonical
//! unit per quantity and written back in that unit, so writing and re-reading a
//! config reproduces it exactly.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::basis::DEFAULT_TILT_RANGE;
use crate::circuit::CircuitParams;
use crate::decoherence::{EchoSettings, EnvironmentParams};
use crate::dynamics::ReadoutConfig;
use crate::sweep::{Axis, Constraint, PointSettings, SweepSpec, SWEEP_PARAMETERS};
use crate::units::TWO_PI;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Dim {
    /// GHz.
    Energy,
    /// rad/ns.
    AngularRate,
    /// fF.
    Capacitance,
    /// mK.
    Temperature,
    /// ns.
    TimeNs,
    /// s.
    TimeS,
    /// µΩ.
    Resistance,
    /// µΦ₀/√Hz.
    FluxNoise,
    None,
}

impl Dim {
    fn canonical(self) -> &'static str {
        match self {
            Dim::Energy => "GHz",
            Dim::AngularRate => "rad/ns",
            Dim::Capacitance => "fF",
            Dim::Temperature => "mK",
            Dim::TimeNs => "ns",
            Dim::TimeS => "s",
            Dim::Resistance => "uOhm",
            Dim::FluxNoise => "uPhi0/rtHz",
            Dim::None => "",
        }
    }

    fn factor(self, unit: &str) -> Option<f64> {
        let f = match (self, unit) {
            (Dim::Energy, "GHz") => 1.0,
            (Dim::Energy, "MHz") => 1e-3,
            (Dim::Energy, "kHz") => 1e-6,
            (Dim::Energy, "Hz") => 1e-9,
            (Dim::AngularRate, "rad/ns") => 1.0,
            (Dim::AngularRate, "GHz") => TWO_PI,
            (Dim::AngularRate, "MHz") => TWO_PI * 1e-3,
            (Dim::AngularRate, "kHz") => TWO_PI * 1e-6,
            (Dim::Capacitance, "fF") => 1.0,
            (Dim::Capacitance, "aF") => 1e-3,
            (Dim::Capacitance, "pF") => 1e3,
            (Dim::Temperature, "mK") => 1.0,
            (Dim::Temperature, "K") => 1e3,
            (Dim::TimeNs, "ps") => 1e-3,
            (Dim::TimeNs, "ns") => 1.0,
            (Dim::TimeNs, "us" | "µs") => 1e3,
            (Dim::TimeS, "ns") => 1e-9,
            (Dim::TimeS, "us" | "µs") => 1e-6,
            (Dim::TimeS, "ms") => 1e-3,
            (Dim::TimeS, "s") => 1.0,
            (Dim::Resistance, "uOhm" | "µΩ") => 1.0,
            (Dim::Resistance, "mOhm" | "mΩ") => 1e3,
            (Dim::Resistance, "Ohm" | "Ω") => 1e6,
            (Dim::FluxNoise, "uPhi0/rtHz" | "µΦ₀/√Hz") => 1.0,
            _ => return None,
        };
        Some(f)
    }
}

/// Which resonator constraint a sweep applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Default)]
pub enum SweepConstraint {
    #[default]
    None,
    /// Hold the harmonic resonator frequency at its base-config value.
    FixedResonatorFrequency,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TiltConfig {
    /// Re-optimize the tilt within `[min, max]`; otherwise use `circuit.alpha`.
    pub optimize: bool,
    pub min: f64,
    pub max: f64,
}

impl Default for TiltConfig {
    fn default() -> Self {
        Self { optimize: false, min: DEFAULT_TILT_RANGE.0, max: DEFAULT_TILT_RANGE.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxisConfig {
    pub param: String,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepConfig {
    pub axis1: AxisConfig,
    pub axis2: Option<AxisConfig>,
    pub constraint: SweepConstraint,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            axis1: AxisConfig { param: "e_q".into(), min: 50.0, max: 90.0, points: 10 },
            axis2: None,
            constraint: SweepConstraint::None,
        }
    }
}

/// Everything a run needs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub circuit: CircuitParams,
    pub environment: EnvironmentParams,
    pub tilt: TiltConfig,
    /// Derived from the other sections; `tilt_range` mirrors `tilt`.
    pub solver: PointSettings,
    pub readout: ReadoutConfig,
    pub echo: EchoSettings,
    pub sweep: SweepConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let seed = 7;
        Self {
            seed,
            circuit: CircuitParams::nominal(),
            environment: EnvironmentParams::default(),
            tilt: TiltConfig::default(),
            solver: PointSettings { tilt_range: None, ..Default::default() },
            readout: ReadoutConfig { seed, ..Default::default() },
            echo: EchoSettings { seed, ..Default::default() },
            sweep: SweepConfig::default(),
        }
    }
}

fn fmt_f(x: f64) -> String {
    // `{}` is the shortest representation that round-trips.
    format!("{x}")
}

fn split_value(raw: &str) -> (&str, &str) {
    let raw = raw.trim();
    match raw.find(char::is_whitespace) {
        Some(i) => (raw[..i].trim(), raw[i..].trim()),
        None => (raw, ""),
    }
}

fn parse_number(raw: &str, dim: Dim) -> std::result::Result<f64, String> {
    let (num, unit) = split_value(raw);
    let v: f64 = num.parse().map_err(|_| format!("`{num}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("`{num}` is not finite"));
    }
    match (dim, unit) {
        (Dim::None, "") => Ok(v),
        (Dim::None, u) => Err(format!("dimensionless value takes no unit, got `{u}`")),
        (d, "") => Err(format!("missing unit (expected e.g. `{}`)", d.canonical())),
        (d, u) => d.factor(u).map(|f| v * f).ok_or_else(|| format!("unit `{u}` is not valid here")),
    }
}

fn parse_list(raw: &str, dim: Dim) -> std::result::Result<Vec<f64>, String> {
    // A single trailing unit applies to every element: `10, 20, 30 us`.
    let raw = raw.trim();
    let (body, unit) = match raw.rfind(|c: char| c.is_ascii_digit() || c == '.') {
        Some(i) => (&raw[..=i], raw[i + 1..].trim()),
        None => return Err("empty list".into()),
    };
    body.split(',')
        .map(|s| {
            let s = s.trim();
            if unit.is_empty() {
                parse_number(s, dim)
            } else {
                parse_number(&format!("{s} {unit}"), dim)
            }
        })
        .collect()
}

fn parse_uint(raw: &str) -> std::result::Result<u64, String> {
    raw.trim().parse().map_err(|_| format!("`{}` is not a non-negative integer", raw.trim()))
}

fn parse_bool(raw: &str) -> std::result::Result<bool, String> {
    match raw.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        s => Err(format!("`{s}` is not a boolean")),
    }
}

fn parse_str(raw: &str) -> String {
    raw.trim().trim_matches('"').to_string()
}

fn axis_dim(param: &str) -> Dim {
    match param {
        "tilt" | "flux_bias" => Dim::None,
        _ => Dim::Energy,
    }
}

fn with_unit(x: f64, dim: Dim) -> String {
    match dim {
        Dim::None => fmt_f(x),
        d => format!("{} {}", fmt_f(x), d.canonical()),
    }
}

impl RunConfig {
    /// Serialize in the canonical text form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let c = &self.circuit;
        let e = &self.environment;
        let s = &self.solver;
        let r = &self.readout;
        let h = &self.echo;
        let line = |out: &mut String, k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        let _ = writeln!(out, "# quarton run configuration, version {}", crate::VERSION);
        line(&mut out, "seed", self.seed.to_string());

        out.push_str("\n[circuit]\n");
        for (k, v) in [("e_ja", c.e_ja), ("e_jb", c.e_jb), ("e_j", c.e_j), ("e_ca", c.e_ca), ("e_cb", c.e_cb)] {
            line(&mut out, k, with_unit(v, Dim::Energy));
        }
        line(&mut out, "e_cab", c.e_cab.map_or("auto".into(), |v| with_unit(v, Dim::Energy)));
        line(&mut out, "alpha", fmt_f(c.alpha));
        line(&mut out, "n_s", c.n_s.to_string());
        line(&mut out, "n_ja", c.n_ja.to_string());
        line(&mut out, "n_jb", c.n_jb.to_string());
        for (k, v) in [("c_a", c.c_a), ("c_b", c.c_b), ("c_j", c.c_j), ("c_s", c.c_s), ("c_alpha", c.c_alpha)] {
            line(&mut out, k, with_unit(v, Dim::Capacitance));
        }
        line(&mut out, "kappa_r", with_unit(c.kappa_r, Dim::Energy));
        line(&mut out, "kappa_f", with_unit(c.kappa_f, Dim::Energy));
        line(&mut out, "flux_bias", fmt_f(c.flux_bias));

        out.push_str("\n[environment]\n");
        line(&mut out, "temperature", with_unit(e.temperature, Dim::Temperature));
        line(&mut out, "resistance", with_unit(e.resistance, Dim::Resistance));
        line(&mut out, "x_qp", fmt_f(e.x_qp));
        line(&mut out, "delta", with_unit(e.delta, Dim::Energy));
        line(&mut out, "q_diel", fmt_f(e.q_diel));
        line(&mut out, "a_phi_quarton", with_unit(e.a_phi_quarton, Dim::FluxNoise));
        line(&mut out, "a_phi_ground", with_unit(e.a_phi_ground, Dim::FluxNoise));
        line(&mut out, "gamma_phi", fmt_f(e.gamma_phi));

        out.push_str("\n[solver]\n");
        line(&mut out, "fock_levels", s.fock_levels.to_string());
        line(&mut out, "window_a", s.window.0.to_string());
        line(&mut out, "window_b", s.window.1.to_string());
        line(&mut out, "n_star", s.n_star.to_string());
        line(&mut out, "basis.heuristic", s.basis.heuristic.to_string());
        line(&mut out, "basis.taylor_order", s.basis.taylor_order.to_string());
        line(&mut out, "basis.n_levels", s.basis.n_levels.to_string());
        line(&mut out, "basis.truncation", s.basis.truncation.to_string());
        line(&mut out, "basis.rounds", s.basis.rounds.to_string());
        line(&mut out, "tilt.optimize", self.tilt.optimize.to_string());
        line(&mut out, "tilt.min", fmt_f(self.tilt.min));
        line(&mut out, "tilt.max", fmt_f(self.tilt.max));
        line(&mut out, "qnd.n_bar", fmt_f(s.n_bar));
        line(&mut out, "qnd.delta_t", with_unit(s.delta_t, Dim::TimeNs));
        line(&mut out, "filter", s.filter.to_string());

        out.push_str("\n[readout]\n");
        line(&mut out, "omega_d", r.omega_d.map_or("auto".into(), |v| with_unit(v, Dim::Energy)));
        line(&mut out, "eps0", r.eps0.map_or("auto".into(), |v| with_unit(v, Dim::Energy)));
        line(&mut out, "pulse_len", with_unit(r.pulse_len, Dim::TimeNs));
        line(&mut out, "ringdown", with_unit(r.ringdown, Dim::TimeNs));
        line(&mut out, "n_bar", fmt_f(r.n_bar_target));
        line(&mut out, "eta", fmt_f(r.eta));
        line(&mut out, "n_traj", r.n_traj.to_string());
        line(&mut out, "sse_dt", with_unit(r.sse_dt, Dim::TimeNs));
        line(&mut out, "record_bin", with_unit(r.record_bin, Dim::TimeNs));
        line(&mut out, "truncation_a", r.truncation.0.to_string());
        line(&mut out, "truncation_b", r.truncation.1.to_string());
        line(&mut out, "cluster_factor", fmt_f(r.cluster_factor));
        line(&mut out, "prune_threshold", with_unit(r.prune_threshold, Dim::AngularRate));
        line(&mut out, "filter", r.filter.to_string());
        line(&mut out, "rtol", fmt_f(r.rtol));
        line(&mut out, "atol", fmt_f(r.atol));
        line(&mut out, "output_step", with_unit(r.output_step, Dim::TimeNs));

        out.push_str("\n[echo]\n");
        line(&mut out, "segments", h.segments.to_string());
        line(&mut out, "segment_len", with_unit(h.segment_len, Dim::TimeS));
        line(&mut out, "dt", with_unit(h.dt, Dim::TimeS));
        let taus: Vec<String> = h.taus.iter().map(|&t| fmt_f(t)).collect();
        line(&mut out, "taus", format!("{} s", taus.join(", ")));

        out.push_str("\n[sweep]\n");
        let axis = |out: &mut String, name: &str, a: &AxisConfig| {
            let d = axis_dim(&a.param);
            line(out, &format!("{name}.param"), a.param.clone());
            line(out, &format!("{name}.min"), with_unit(a.min, d));
            line(out, &format!("{name}.max"), with_unit(a.max, d));
            line(out, &format!("{name}.points"), a.points.to_string());
        };
        axis(&mut out, "axis1", &self.sweep.axis1);
        match &self.sweep.axis2 {
            Some(a) => axis(&mut out, "axis2", a),
            None => line(&mut out, "axis2.param", "none".into()),
        }
        let constraint = match self.sweep.constraint {
            SweepConstraint::None => "none",
            SweepConstraint::FixedResonatorFrequency => "fixed_resonator_frequency",
        };
        line(&mut out, "constraint", constraint.into());
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        let mut section = String::new();
        for (i, raw_line) in text.lines().enumerate() {
            let lineno = i + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| Error::Config {
                    line: lineno,
                    message: format!("unterminated section header `{content}`"),
                })?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line: lineno,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            let key = key.trim();
            let full = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
            if !seen.insert(full.clone()) {
                return Err(Error::Config { line: lineno, message: format!("duplicate key `{full}`") });
            }
            cfg.set(&full, value).map_err(|m| Error::Config { line: lineno, message: format!("`{full}`: {m}") })?;
        }
        cfg.sync();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Apply a single `key = value` override, e.g. from the command line.
    pub fn set_override(&mut self, key: &str, value: &str) -> Result<()> {
        self.set(key, value).map_err(|m| Error::Override(format!("`{key}`: {m}")))?;
        self.sync();
        self.validate()
    }

    fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        let num = |d| parse_number(v, d);
        let usize_ = || parse_uint(v).map(|x| x as usize);
        let u32_ = || parse_uint(v).and_then(|x| u32::try_from(x).map_err(|_| "out of range".to_string()));
        let opt = |d| if v.trim() == "auto" { Ok(None) } else { parse_number(v, d).map(Some) };
        let c = &mut self.circuit;
        let e = &mut self.environment;
        let s = &mut self.solver;
        let r = &mut self.readout;
        let h = &mut self.echo;
        match key {
            "seed" => {
                self.seed = parse_uint(v)?;
                r.seed = self.seed;
                h.seed = self.seed;
            }
            "circuit.e_ja" => c.e_ja = num(Dim::Energy)?,
            "circuit.e_jb" => c.e_jb = num(Dim::Energy)?,
            "circuit.e_j" => c.e_j = num(Dim::Energy)?,
            "circuit.e_ca" => c.e_ca = num(Dim::Energy)?,
            "circuit.e_cb" => c.e_cb = num(Dim::Energy)?,
            "circuit.e_cab" => c.e_cab = opt(Dim::Energy)?,
            "circuit.alpha" => c.alpha = num(Dim::None)?,
            "circuit.n_s" => c.n_s = u32_()?,
            "circuit.n_ja" => c.n_ja = u32_()?,
            "circuit.n_jb" => c.n_jb = u32_()?,
            "circuit.c_a" => c.c_a = num(Dim::Capacitance)?,
            "circuit.c_b" => c.c_b = num(Dim::Capacitance)?,
            "circuit.c_j" => c.c_j = num(Dim::Capacitance)?,
            "circuit.c_s" => c.c_s = num(Dim::Capacitance)?,
            "circuit.c_alpha" => c.c_alpha = num(Dim::Capacitance)?,
            "circuit.kappa_r" => c.kappa_r = num(Dim::Energy)?,
            "circuit.kappa_f" => c.kappa_f = num(Dim::Energy)?,
            "circuit.flux_bias" => c.flux_bias = num(Dim::None)?,
            "environment.temperature" => e.temperature = num(Dim::Temperature)?,
            "environment.resistance" => e.resistance = num(Dim::Resistance)?,
            "environment.x_qp" => e.x_qp = num(Dim::None)?,
            "environment.delta" => e.delta = num(Dim::Energy)?,
            "environment.q_diel" => e.q_diel = num(Dim::None)?,
            "environment.a_phi_quarton" => e.a_phi_quarton = num(Dim::FluxNoise)?,
            "environment.a_phi_ground" => e.a_phi_ground = num(Dim::FluxNoise)?,
            "environment.gamma_phi" => e.gamma_phi = num(Dim::None)?,
            "solver.fock_levels" => s.fock_levels = usize_()?,
            "solver.window_a" => s.window.0 = usize_()?,
            "solver.window_b" => s.window.1 = usize_()?,
            "solver.n_star" => s.n_star = usize_()?,
            "solver.basis.heuristic" => s.basis.heuristic = v.trim().parse().map_err(|e: Error| e.to_string())?,
            "solver.basis.taylor_order" => s.basis.taylor_order = u32_()?,
            "solver.basis.n_levels" => s.basis.n_levels = usize_()?,
            "solver.basis.truncation" => s.basis.truncation = usize_()?,
            "solver.basis.rounds" => s.basis.rounds = usize_()?,
            "solver.tilt.optimize" => self.tilt.optimize = parse_bool(v)?,
            "solver.tilt.min" => self.tilt.min = num(Dim::None)?,
            "solver.tilt.max" => self.tilt.max = num(Dim::None)?,
            "solver.qnd.n_bar" => s.n_bar = num(Dim::None)?,
            "solver.qnd.delta_t" => s.delta_t = num(Dim::TimeNs)?,
            "solver.filter" => s.filter = parse_bool(v)?,
            "readout.omega_d" => r.omega_d = opt(Dim::Energy)?,
            "readout.eps0" => r.eps0 = opt(Dim::Energy)?,
            "readout.pulse_len" => r.pulse_len = num(Dim::TimeNs)?,
            "readout.ringdown" => r.ringdown = num(Dim::TimeNs)?,
            "readout.n_bar" => r.n_bar_target = num(Dim::None)?,
            "readout.eta" => r.eta = num(Dim::None)?,
            "readout.n_traj" => r.n_traj = usize_()?,
            "readout.sse_dt" => r.sse_dt = num(Dim::TimeNs)?,
            "readout.record_bin" => r.record_bin = num(Dim::TimeNs)?,
            "readout.truncation_a" => r.truncation.0 = usize_()?,
            "readout.truncation_b" => r.truncation.1 = usize_()?,
            "readout.cluster_factor" => r.cluster_factor = num(Dim::None)?,
            "readout.prune_threshold" => r.prune_threshold = num(Dim::AngularRate)?,
            "readout.filter" => r.filter = parse_bool(v)?,
            "readout.rtol" => r.rtol = num(Dim::None)?,
            "readout.atol" => r.atol = num(Dim::None)?,
            "readout.output_step" => r.output_step = num(Dim::TimeNs)?,
            "echo.segments" => h.segments = usize_()?,
            "echo.segment_len" => h.segment_len = num(Dim::TimeS)?,
            "echo.dt" => h.dt = num(Dim::TimeS)?,
            "echo.taus" => h.taus = parse_list(v, Dim::TimeS)?,
            "sweep.constraint" => {
                self.sweep.constraint = match v.trim() {
                    "none" => SweepConstraint::None,
                    "fixed_resonator_frequency" => SweepConstraint::FixedResonatorFrequency,
                    other => return Err(format!("unknown constraint `{other}`")),
                }
            }
            k if k.starts_with("sweep.axis1.") || k.starts_with("sweep.axis2.") => {
                let second = k.starts_with("sweep.axis2.");
                let field = &k["sweep.axisN.".len()..];
                if second && field == "param" && v.trim() == "none" {
                    self.sweep.axis2 = None;
                    return Ok(());
                }
                let a = if second {
                    self.sweep.axis2.get_or_insert_with(|| AxisConfig { param: "e_ja_eff".into(), min: 0.0, max: 0.0, points: 1 })
                } else {
                    &mut self.sweep.axis1
                };
                match field {
                    "param" => {
                        let p = parse_str(v);
                        if !SWEEP_PARAMETERS.contains(&p.as_str()) {
                            return Err(format!("unknown sweep parameter `{p}`"));
                        }
                        a.param = p;
                    }
                    "min" => a.min = parse_number(v, axis_dim(&a.param))?,
                    "max" => a.max = parse_number(v, axis_dim(&a.param))?,
                    "points" => a.points = parse_uint(v)? as usize,
                    _ => return Err("unknown key".into()),
                }
            }
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Copy the tilt section into the solver settings.
    fn sync(&mut self) {
        self.solver.tilt_range = self.tilt.optimize.then_some((self.tilt.min, self.tilt.max));
    }

    pub fn validate(&self) -> Result<()> {
        self.circuit.validate()?;
        self.environment.validate()?;
        self.readout.validate()?;
        self.echo.validate()?;
        if !(self.tilt.min > 0.0 && self.tilt.max > self.tilt.min) {
            return Err(Error::param("solver.tilt", "need 0 < min < max"));
        }
        if self.solver.fock_levels < 2 || self.solver.n_star < 2 {
            return Err(Error::param("solver", "fock_levels and n_star must be at least 2"));
        }
        Ok(())
    }

    /// Sweep description built from the `[sweep]` section and the solver settings.
    /// Sweeps always re-optimize the tilt at each point.
    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let axis = |a: &AxisConfig| -> Result<Axis> {
            if a.points == 0 {
                return Err(Error::param("sweep.points", "must be at least 1"));
            }
            Ok(Axis::linspace(&a.param, a.min, a.max, a.points))
        };
        let constraints = match self.sweep.constraint {
            SweepConstraint::None => Vec::new(),
            SweepConstraint::FixedResonatorFrequency => {
                vec![Constraint::ResonatorFrequency(self.circuit.omega_a_harmonic())]
            }
        };
        Ok(SweepSpec {
            axis1: axis(&self.sweep.axis1)?,
            axis2: self.sweep.axis2.as_ref().map(axis).transpose()?,
            constraints,
            point: PointSettings { tilt_range: Some((self.tilt.min, self.tilt.max)), ..self.solver.clone() },
        })
    }
}
