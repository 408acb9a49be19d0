mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use quarton::config::{AxisConfig, RunConfig, SweepConstraint};
use quarton::dynamics::{run_lindblad, run_trajectories, LindbladOptions, LindbladResult};
use quarton::exec::Exec;
use quarton::pipeline::{analyze, decoherence_budget, readout_setup, self_test};
use quarton::sweep::{run_sweep, spread_minimum};
use quarton::Error;
use serde_json::json;

use output::{error_record, f, RunDir};

/// Exit code for a malformed config or command line.
const EXIT_CONFIG: i32 = 2;
/// Exit code when the requested point cannot be labeled.
const EXIT_LABELING: i32 = 3;
/// Exit code when `validate` finds a failing check.
const EXIT_CHECKS: i32 = 4;
const EXIT_RUNTIME: i32 = 1;

#[derive(Parser, Debug)]
#[command(name = "quarton", version, about = "Quarton-coupled qubit readout simulations")]
struct Cli {
    /// Run configuration file (`key = value` with units).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; a subdirectory per subcommand is created inside.
    #[arg(long, global = true, env = "QUARTON_OUT_DIR", default_value = "quarton-out")]
    out: PathBuf,
    /// Override a config key, e.g. `--set readout.pulse_len="4 ns"`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Run seed; overrides the `seed` key.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Spectrum, Kerr metrics and analytic QND estimate at one point.
    Spectrum(TiltArgs),
    /// 1-D or 2-D parameter sweep with per-point tilt optimization.
    Sweep(SweepArgs),
    /// Analytic and master-equation QND fidelities.
    Qnd(QndArgs),
    /// Master-equation populations for both qubit preparations.
    Dynamics,
    /// Heterodyne trajectory ensemble and IQ statistics.
    Trajectories(TrajectoryArgs),
    /// Decoherence budget.
    Decoherence(DecoherenceArgs),
    /// Built-in invariant suite and bath table.
    Validate,
    /// Print the resolved configuration.
    Config,
}

#[derive(Args, Debug)]
struct TiltArgs {
    /// Re-optimize the tilt before solving.
    #[arg(long)]
    optimize_tilt: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    axis1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    min1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    max1: Option<f64>,
    #[arg(long)]
    points1: Option<usize>,
    #[arg(long)]
    axis2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    min2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    max2: Option<f64>,
    #[arg(long)]
    points2: Option<usize>,
    /// Hold the harmonic resonator frequency fixed by co-varying `e_ca`.
    #[arg(long)]
    fixed_resonator_frequency: bool,
}

#[derive(Args, Debug)]
struct QndArgs {
    /// Also integrate the master equation.
    #[arg(long)]
    lindblad: bool,
}

#[derive(Args, Debug)]
struct TrajectoryArgs {
    #[arg(long)]
    n_traj: Option<usize>,
    /// Integration windows in ns; defaults to 1 ns steps up to the pulse length.
    #[arg(long, value_delimiter = ',')]
    windows: Vec<f64>,
}

#[derive(Args, Debug)]
struct DecoherenceArgs {
    /// Skip the Monte-Carlo echo simulation.
    #[arg(long)]
    no_echo: bool,
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for o in &cli.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::Override(format!("`{o}` is not KEY=VALUE")))?;
        cfg.set_override(k.trim(), v.trim())?;
    }
    if let Some(seed) = cli.seed {
        cfg.set_override("seed", &seed.to_string())?;
    }
    match &cli.command {
        Command::Spectrum(t) if t.optimize_tilt => cfg.set_override("solver.tilt.optimize", "true")?,
        Command::Trajectories(TrajectoryArgs { n_traj: Some(n), .. }) => cfg.set_override("readout.n_traj", &n.to_string())?,
        Command::Sweep(s) => apply_sweep_args(&mut cfg, s)?,
        _ => {}
    }
    Ok(cfg)
}

fn apply_sweep_args(cfg: &mut RunConfig, s: &SweepArgs) -> Result<(), Error> {
    let set = |cfg: &mut RunConfig, k: &str, v: String| cfg.set_override(k, &v);
    let unit = |p: &str| if matches!(p, "tilt" | "flux_bias") { "" } else { " GHz" };
    if let Some(a) = &s.axis1 {
        set(cfg, "sweep.axis1.param", a.clone())?;
    }
    let u1 = unit(&cfg.sweep.axis1.param);
    if let Some(v) = s.min1 {
        set(cfg, "sweep.axis1.min", format!("{v}{u1}"))?;
    }
    if let Some(v) = s.max1 {
        set(cfg, "sweep.axis1.max", format!("{v}{u1}"))?;
    }
    if let Some(v) = s.points1 {
        set(cfg, "sweep.axis1.points", v.to_string())?;
    }
    if let Some(a) = &s.axis2 {
        set(cfg, "sweep.axis2.param", a.clone())?;
    }
    if let Some(AxisConfig { param, .. }) = cfg.sweep.axis2.clone() {
        let u2 = unit(&param);
        if let Some(v) = s.min2 {
            set(cfg, "sweep.axis2.min", format!("{v}{u2}"))?;
        }
        if let Some(v) = s.max2 {
            set(cfg, "sweep.axis2.max", format!("{v}{u2}"))?;
        }
        if let Some(v) = s.points2 {
            set(cfg, "sweep.axis2.points", v.to_string())?;
        }
    }
    if s.fixed_resonator_frequency {
        cfg.sweep.constraint = SweepConstraint::FixedResonatorFrequency;
    }
    Ok(())
}

fn label(l: (usize, usize)) -> String {
    format!("{}:{}", l.0, l.1)
}

fn population_rows(r: &LindbladResult) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (t, pops) in r.times.iter().zip(&r.populations) {
        for (l, p) in r.labels.iter().zip(pops) {
            rows.push(vec![f(*t), label(*l), f(*p)]);
        }
    }
    rows
}

fn run(cli: &Cli) -> Result<i32, Error> {
    let cfg = load_config(cli)?;
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    let sub = match &cli.command {
        Command::Spectrum(_) => "spectrum",
        Command::Sweep(_) => "sweep",
        Command::Qnd(_) => "qnd",
        Command::Dynamics => "dynamics",
        Command::Trajectories(_) => "trajectories",
        Command::Decoherence(_) => "decoherence",
        Command::Validate => "validate",
        Command::Config => {
            print!("{}", cfg.to_text());
            return Ok(0);
        }
    };
    let dir = RunDir::create(cli.out.join(sub), &cfg)?;
    match &cli.command {
        Command::Spectrum(_) => {
            let a = analyze(&cfg)?;
            let rows = a.spectrum.labels.iter().map(|(l, e)| {
                vec![label(*l), f(a.spectrum.energies[e.index]), f(e.overlap)]
            });
            dir.csv("levels.csv", &["label", "energy_ghz", "overlap"], rows)?;
            let m = &a.metrics;
            let p = dir.json(
                "spectrum.json",
                &json!({
                    "metrics": m,
                    "tilt": a.params.tilt(),
                    "tilt_residual": a.tilt_residual,
                    "zpf": [a.basis.zpf_a, a.basis.zpf_b],
                    "readout_frequency_ghz": a.omega_d,
                    "qnd": a.qnd,
                }),
            )?;
            println!(
                "omega_10 {:.4} GHz, omega_01 {:.4} GHz, 2chi {:.1} MHz, K_b {:.1} MHz, spreads {:.2}/{:.2} MHz -> {}",
                m.omega_10, m.omega_01, m.cross_kerr_2chi, m.self_kerr_kb, m.spread_q0, m.spread_q1, p.display()
            );
        }
        Command::Sweep(_) => {
            let spec = cfg.sweep_spec()?;
            let rows = run_sweep(&cfg.circuit, &spec, exec)?;
            let header = [
                "i", "j", "value1", "value2", "e_q_ghz", "e_ja_eff_ghz", "e_ca_ghz", "tilt", "zpf_a", "zpf_b",
                "spread_q0_mhz", "spread_q1_mhz", "cross_kerr_2chi_mhz", "self_kerr_kb_mhz", "omega_10_ghz", "omega_01_ghz",
                "qbar0", "qbar1", "ambiguous_labels", "status",
            ];
            let opt = |x: Option<f64>| x.map(f).unwrap_or_default();
            let csv_rows = rows.iter().map(|r| {
                let m = r.metrics.as_ref();
                vec![
                    r.i.to_string(),
                    r.j.to_string(),
                    f(r.value1),
                    opt(r.value2),
                    f(r.e_q),
                    f(r.e_ja_eff),
                    f(r.e_ca),
                    f(r.tilt),
                    f(r.zpf_a),
                    f(r.zpf_b),
                    opt(m.map(|m| m.spread_q0)),
                    opt(m.map(|m| m.spread_q1)),
                    opt(m.map(|m| m.cross_kerr_2chi)),
                    opt(m.map(|m| m.self_kerr_kb)),
                    opt(m.map(|m| m.omega_10)),
                    opt(m.map(|m| m.omega_01)),
                    opt(r.qbar0),
                    opt(r.qbar1),
                    m.map(|m| m.ambiguity_flags.iter().map(|l| label(*l)).collect::<Vec<_>>().join(" ")).unwrap_or_default(),
                    r.status.clone(),
                ]
            });
            let p = dir.csv("sweep.csv", &header, csv_rows)?;
            let best = spread_minimum(&rows);
            dir.json("sweep.json", &json!({ "rows": rows, "spread_minimum": best }))?;
            let failed = rows.iter().filter(|r| !r.ok()).count();
            println!("{} points ({failed} failed) -> {}", rows.len(), p.display());
            if let Some(b) = best {
                println!("spread minimum at {} = {}", cfg.sweep.axis1.param, b.value1);
            }
        }
        Command::Qnd(q) => {
            let a = analyze(&cfg)?;
            let mut doc = json!({ "analytic": a.qnd });
            if q.lindblad {
                let s = readout_setup(&cfg)?;
                let opts = LindbladOptions::from(&cfg.readout);
                let mut me = Vec::new();
                for k in 0..2 {
                    let r = run_lindblad(&s.model, s.eps0, k, cfg.readout.pulse_len, cfg.readout.ringdown, &opts)?;
                    me.push(json!({
                        "qubit": k,
                        "qnd_fidelity": r.qnd_fidelity,
                        "qubit_distribution": r.qubit_distribution,
                        "max_trace_deviation": r.max_trace_deviation,
                    }));
                }
                doc["lindblad"] = json!(me);
                doc["eps0_ghz"] = json!(s.eps0);
            }
            let p = dir.json("qnd.json", &doc)?;
            println!("Qbar |0> {:.5}, |1> {:.5} -> {}", a.qnd[0].qbar, a.qnd[1].qbar, p.display());
        }
        Command::Dynamics => {
            let s = readout_setup(&cfg)?;
            let opts = LindbladOptions::from(&cfg.readout);
            let mut summary = Vec::new();
            for k in 0..2 {
                let r = run_lindblad(&s.model, s.eps0, k, cfg.readout.pulse_len, cfg.readout.ringdown, &opts)?;
                dir.csv(&format!("populations_q{k}.csv"), &["time_ns", "label", "population"], population_rows(&r))?;
                summary.push(json!({
                    "qubit": k,
                    "qnd_fidelity": r.qnd_fidelity,
                    "qubit_distribution": r.qubit_distribution,
                    "max_trace_deviation": r.max_trace_deviation,
                    "max_hermiticity_deviation": r.max_hermiticity_deviation,
                    "min_eigenvalue": r.min_eigenvalue,
                    "peak_photons": r.photons.iter().cloned().fold(0.0, f64::max),
                }));
                println!("|{k}>: QND fidelity {:.5}, max trace deviation {:.1e}", r.qnd_fidelity, r.max_trace_deviation);
            }
            write_baths(&dir, &s.model)?;
            dir.json(
                "dynamics.json",
                &json!({ "eps0_ghz": s.eps0, "calibration": s.calibration, "omega_d_ghz": s.model.omega_d, "runs": summary }),
            )?;
        }
        Command::Trajectories(t) => {
            let s = readout_setup(&cfg)?;
            let windows = if t.windows.is_empty() {
                let n = cfg.readout.pulse_len.round().max(1.0) as usize;
                (1..=n).map(|w| w as f64).collect()
            } else {
                t.windows.clone()
            };
            let ens = run_trajectories(&s.model, s.eps0, &cfg.readout, &windows, exec)?;
            let rows = (0..2).flat_map(|k| {
                ens.iq[k].iter().enumerate().map(move |(i, (x, y))| vec![i.to_string(), f(*x), f(*y), k.to_string()])
            });
            let p = dir.csv("iq.csv", &["trajectory", "i", "q", "prepared"], rows.collect::<Vec<_>>())?;
            let leak = |k: usize| -> f64 {
                s.model.labels.iter().zip(&ens.mean_populations[k]).filter(|(l, _)| l.1 != k).map(|(_, p)| p).sum()
            };
            dir.json(
                "trajectories.json",
                &json!({
                    "n_traj": cfg.readout.n_traj,
                    "seed": cfg.seed,
                    "eps0_ghz": s.eps0,
                    "windows": ens.stats,
                    "leakage": [leak(0), leak(1)],
                }),
            )?;
            let st = ens.stats.last().expect("at least one window");
            println!(
                "window {} ns: fidelity |0> {:.4}, |1> {:.4}, SNR {:.2} -> {}",
                st.window, st.fidelity0, st.fidelity1, st.snr, p.display()
            );
        }
        Command::Decoherence(d) => {
            let a = analyze(&cfg)?;
            let b = decoherence_budget(&cfg, &a, !d.no_echo, exec)?;
            let rows = b.channels.iter().map(|c| {
                vec![c.name.clone(), format!("{:?}", c.kind).to_lowercase(), f(c.rate), f(c.time), c.lower_bound.to_string()]
            });
            let p = dir.csv("decoherence.csv", &["channel", "kind", "rate_per_s", "time_s", "lower_bound"], rows)?;
            dir.json("decoherence.json", &b)?;
            for c in &b.channels {
                println!("{:<16} {:>12.4e} s{}", c.name, c.time, if c.lower_bound { " (lower bound)" } else { "" });
            }
            println!("T1 {:.4e} s, T2 {:.4e} s -> {}", b.t1, b.t2, p.display());
        }
        Command::Validate => {
            let checks = self_test(&cfg)?;
            let s = readout_setup(&RunConfig { readout: quarton::dynamics::ReadoutConfig { eps0: Some(0.27), ..cfg.readout.clone() }, ..cfg.clone() })?;
            write_baths(&dir, &s.model)?;
            let rows = checks.iter().map(|c| vec![c.name.clone(), c.passed.to_string(), f(c.value), f(c.tolerance)]);
            dir.csv("validate.csv", &["check", "passed", "value", "tolerance"], rows)?;
            dir.json("validate.json", &checks)?;
            for c in &checks {
                println!("{} {} ({:.2e} <= {:.0e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance);
            }
            if checks.iter().any(|c| !c.passed) {
                return Ok(EXIT_CHECKS);
            }
        }
        Command::Config => unreachable!(),
    }
    Ok(0)
}

fn write_baths(dir: &RunDir, model: &quarton::dynamics::ReadoutModel) -> std::io::Result<()> {
    let set = &model.dissipators;
    let mut rows = Vec::new();
    for (k, b) in set.baths.iter().enumerate() {
        for t in &b.members {
            rows.push(vec![
                k.to_string(),
                (set.k_star == Some(k)).to_string(),
                label(model.labels[t.upper]),
                label(model.labels[t.lower]),
                f(t.omega),
                f(t.element),
                f(t.rate),
                f(b.total_rate),
            ]);
        }
    }
    dir.csv(
        "baths.csv",
        &["bath", "monitored", "upper", "lower", "omega_ghz", "element", "rate_rad_per_ns", "bath_total_rate_rad_per_ns"],
        rows,
    )?;
    Ok(())
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Override(_) => EXIT_CONFIG,
        Error::LabelingFailure { .. } | Error::MissingLabels(_) => EXIT_LABELING,
        _ => EXIT_RUNTIME,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            let code = exit_code(&e);
            let line = match &e {
                Error::Config { line, .. } => Some(*line),
                _ => None,
            };
            eprintln!("{}", error_record(e.kind(), &e.to_string(), line, code));
            ExitCode::from(code as u8)
        }
    }
}
