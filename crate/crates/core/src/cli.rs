//! Command-line front end: `analyze`, `simulate`, `szasz` and `selftest`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Serialize;

use crate::appendix::{self, MirakjanEval, Sampler};
use crate::controllability::{
    decide_theorem1, decide_theorem2, decide_transport_rank, Decision, FrequencyProbe, HeatAmplitudeFamily,
    HeatGridFamily, Mode, TransportEdgeFamily, Verdict,
};
use crate::grid::{ControlSignal, GridFunction, Trajectory};
use crate::heat::{heat_simulate_mild, SpectralBasis};
use crate::scenario::{load_scenario, Kind, Scenario};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "posnet", version, about = "Controllability of positive transport and heat networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Positive,
    ControlConstrained,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Positive => Mode::Positive,
            ModeArg::ControlConstrained => Mode::ControlConstrained,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide controllability and write verdict.json and generators.csv.
    Analyze {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Override the scenario's mode.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Simulate from a zero initial state under a sampled control.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// CSV with columns t, u_1, ..., u_n.
        #[arg(long)]
        control: PathBuf,
        #[arg(long)]
        t_final: f64,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value = "trajectory.csv")]
        out: PathBuf,
        /// Keep every k-th recorded state.
        #[arg(long, default_value_t = 1)]
        stride: usize,
        /// Heat only: cosine coefficients of the final state.
        #[arg(long)]
        modes_out: Option<PathBuf>,
    },
    /// Check the Szasz-Mirakjan identities and convergence.
    Szasz {
        #[arg(long)]
        check: bool,
        #[arg(long, value_delimiter = ',', default_values_t = vec![8usize, 16, 32, 64, 128])]
        n_list: Vec<usize>,
        #[arg(long, default_value_t = 1.0)]
        v: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quick end-to-end checks on built-in examples.
    Selftest,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical(_) | Error::IterationLimit(_) => EXIT_NUMERICAL,
        _ => EXIT_INVALID,
    }
}

/// Runs a parsed command, printing to `out`; returns the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Analyze { scenario, out: dir, mode } => cmd_analyze(&scenario, &dir, mode.map(Into::into), out),
        Command::Simulate { scenario, control, t_final, dt, out: path, stride, modes_out } => {
            cmd_simulate(&scenario, &control, t_final, dt, &path, stride, modes_out.as_deref(), out)
        }
        Command::Szasz { check, n_list, v, points, out: path } => {
            cmd_szasz(check, &n_list, v, points, path.as_deref(), out)
        }
        Command::Selftest => cmd_selftest(out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Full double precision, 17 significant digits.
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt17).unwrap_or_default()
}

/// Dispatches to the criterion matching the scenario's kind and mode.
pub fn run_analyze(scenario: &Scenario) -> Result<Verdict> {
    let tol = scenario.tol();
    match scenario.kind {
        Kind::Transport => {
            let sys = scenario.transport()?;
            match scenario.mode {
                Mode::Positive => decide_transport_rank(&sys, tol),
                Mode::ControlConstrained => {
                    let fam = TransportEdgeFamily(&sys);
                    let probe = FrequencyProbe::auto(&fam, &scenario.probe)?;
                    decide_theorem1(&fam, &probe, tol)
                }
            }
        }
        Kind::Heat => {
            let net = scenario.heat()?;
            let fam = HeatGridFamily { net: &net, points: scenario.discretization.points };
            let probe = FrequencyProbe::auto(&fam, &scenario.probe)?;
            let amplitudes = HeatAmplitudeFamily(&net);
            let (mut verdict, reduced) = match scenario.mode {
                Mode::Positive => {
                    (decide_theorem2(&fam, &probe, tol)?, decide_theorem2(&amplitudes, &probe, 1e-9)?)
                }
                Mode::ControlConstrained => {
                    (decide_theorem1(&fam, &probe, tol)?, decide_theorem1(&amplitudes, &probe, 1e-9)?)
                }
            };
            verdict.notes.push(format!(
                "flux-amplitude reduction (profiles factored out): {}",
                decision_name(reduced.decision)
            ));
            Ok(verdict)
        }
    }
}

pub fn decision_name(d: Decision) -> &'static str {
    match d {
        Decision::Controllable => "controllable",
        Decision::NotControllable => "not_controllable",
        Decision::Inconclusive => "inconclusive",
    }
}

pub fn write_generators_csv(verdict: &Verdict, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["generator", "mu", "power", "input", "component", "value"])?;
    for (g, gen) in verdict.generators.iter().enumerate() {
        for (c, v) in gen.values.iter().enumerate() {
            w.write_record([
                g.to_string(),
                fmt_opt(gen.mu),
                gen.power.map(|p| p.to_string()).unwrap_or_default(),
                (gen.input + 1).to_string(),
                c.to_string(),
                fmt17(*v),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_analyze(path: &Path, dir: &Path, mode: Option<Mode>, out: &mut dyn Write) -> Result<i32> {
    let mut scenario = load_scenario(path)?;
    if let Some(m) = mode {
        scenario.mode = m;
        scenario.validate()?;
    }
    let verdict = run_analyze(&scenario)?;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("verdict.json"), serde_json::to_string_pretty(&verdict)?)?;
    write_generators_csv(&verdict, &dir.join("generators.csv"))?;
    writeln!(out, "decision: {}", decision_name(verdict.decision))?;
    writeln!(out, "generators: {}", verdict.generators.len())?;
    if let Some(r) = &verdict.report {
        if r.certificate.is_some() {
            match verdict.recheck() {
                Ok(worst) => writeln!(out, "certificate: re-checked, largest pairing {}", fmt17(worst))?,
                Err(e) => writeln!(out, "certificate: FAILED re-check ({e})")?,
            }
        }
    }
    for note in &verdict.notes {
        writeln!(out, "note: {note}")?;
    }
    Ok(if verdict.decision == Decision::Inconclusive { EXIT_NUMERICAL } else { EXIT_OK })
}

/// Reads `t, u_1, ..., u_n` rows sampled on a uniform grid starting at 0.
pub fn read_control_csv(path: &Path, inputs: usize) -> Result<ControlSignal> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let vals = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::OutOfRange(format!("control row {}: {e}", i + 1)))?;
        if vals.len() != inputs + 1 {
            return Err(Error::Dimension(format!(
                "control row {} has {} columns, expected t plus {inputs} inputs",
                i + 1,
                vals.len()
            )));
        }
        times.push(vals[0]);
        samples.push(vals[1..].to_vec());
    }
    if samples.is_empty() {
        return Err(Error::OutOfRange("control file has no samples".into()));
    }
    if times[0].abs() > 1e-12 {
        return Err(Error::OutOfRange("control samples must start at t = 0".into()));
    }
    if samples.len() == 1 {
        return ControlSignal::new(1.0, samples);
    }
    let dt = times[1] - times[0];
    for (k, t) in times.iter().enumerate() {
        if (t - k as f64 * dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(Error::OutOfRange("control samples must be uniformly spaced".into()));
        }
    }
    ControlSignal::new(dt, samples)
}

#[derive(Serialize)]
struct SimulationSummary {
    steps: usize,
    final_norm: f64,
    min_value: f64,
    positivity_violations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    truncation_tail: Option<f64>,
}

fn write_trajectory(traj: &Trajectory, stride: usize, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "edge", "x", "value"])?;
    let stride = stride.max(1);
    let last = traj.states.len().saturating_sub(1);
    for (i, (t, s)) in traj.times.iter().zip(&traj.states).enumerate() {
        if i % stride != 0 && i != last {
            continue;
        }
        for j in 0..s.n_edges() {
            for (p, v) in s.edge(j).iter().enumerate() {
                w.write_record([fmt17(*t), (j + 1).to_string(), fmt17(s.x(p)), fmt17(*v)])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Cosine coefficients `(edge, k, coeff)` of a state.
pub fn write_modes_csv(basis: &SpectralBasis, state: &GridFunction, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["edge", "k", "coeff"])?;
    for j in 0..state.n_edges() {
        for (k, c) in basis.coefficients(state.edge(j)).iter().enumerate() {
            w.write_record([(j + 1).to_string(), k.to_string(), fmt17(*c)])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    scenario_path: &Path,
    control_path: &Path,
    t_final: f64,
    dt: Option<f64>,
    path: &Path,
    stride: usize,
    modes_out: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32> {
    let scenario = load_scenario(scenario_path)?;
    let positive = scenario.mode == Mode::Positive || scenario.control.positive;
    let points = scenario.discretization.points;
    let summary = match scenario.kind {
        Kind::Transport => {
            let sys = scenario.transport()?;
            let u = read_control_csv(control_path, sys.control().cols())?;
            let dt = match dt {
                Some(dt) => dt,
                None => sys.exact_step(points)?,
            };
            let f0 = GridFunction::zeros(sys.n_edges(), points);
            let traj = sys.simulate_mild(&f0, &u, t_final, dt, positive)?;
            write_trajectory(&traj, stride, path)?;
            SimulationSummary {
                steps: traj.states.len() - 1,
                final_norm: traj.states.last().map_or(0.0, GridFunction::norm),
                min_value: traj.min_value(),
                positivity_violations: traj.positivity_violations(0.0),
                truncation_tail: None,
            }
        }
        Kind::Heat => {
            let net = scenario.heat()?;
            let u = read_control_csv(control_path, net.inputs())?;
            if positive && !u.is_nonnegative() {
                return Err(Error::OutOfRange("positive mode needs a nonnegative control".into()));
            }
            let basis = SpectralBasis::new(scenario.discretization.modes, points)?;
            let h0 = GridFunction::zeros(net.n_edges(), points);
            let run = heat_simulate_mild(&net, &basis, &h0, &u, t_final, dt.unwrap_or(1e-3))?;
            write_trajectory(&run.trajectory, stride, path)?;
            if let (Some(p), Some(last)) = (modes_out, run.trajectory.states.last()) {
                write_modes_csv(&basis, last, p)?;
            }
            if run.tail > 1e-6 {
                eprintln!("warning: truncation tail {} exceeds 1e-6; raise discretization.modes", fmt17(run.tail));
            }
            SimulationSummary {
                steps: run.trajectory.states.len() - 1,
                final_norm: run.trajectory.states.last().map_or(0.0, GridFunction::norm),
                min_value: run.trajectory.min_value(),
                positivity_violations: run.positivity_violations(),
                truncation_tail: Some(run.tail),
            }
        }
    };
    writeln!(out, "{}", serde_json::to_string_pretty(&summary)?)?;
    Ok(EXIT_OK)
}

fn cmd_szasz(
    check: bool,
    orders: &[usize],
    v: f64,
    points: usize,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32> {
    if points < 2 || orders.is_empty() {
        return Err(Error::OutOfRange("need at least two points and one order".into()));
    }
    let f = |x: f64| x;
    let rows = appendix::mirakjan_table(orders, v, points, &f)?;
    if let Some(p) = path {
        let mut w = csv::Writer::from_path(p)?;
        w.write_record(["n", "x", "M_n f", "f", "error"])?;
        for r in &rows {
            w.write_record([r.n.to_string(), fmt17(r.x), fmt17(r.approx), fmt17(r.exact), fmt17(r.error)])?;
        }
        w.flush()?;
    }
    let errors = appendix::sup_errors(&rows);
    for (n, e) in &errors {
        writeln!(out, "n = {n:4}  sup |M_n f - f| = {}", fmt17(*e))?;
    }
    if !check {
        return Ok(EXIT_OK);
    }
    let mut korovkin = 0.0f64;
    for &n in orders {
        let cfg = MirakjanEval::new(n, v)?;
        for p in 0..points {
            let x = p as f64 / (points - 1) as f64;
            let phi = cfg.phi(x);
            let one = appendix::mirakjan_apply(&cfg, &Sampler::Warped(&|_| 1.0), x)?.value;
            let sq = appendix::mirakjan_apply(&cfg, &Sampler::Warped(&|y| y * y), x)?.value;
            korovkin = korovkin.max((one - 1.0).abs()).max((sq - phi * phi - phi / n as f64).abs());
        }
    }
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[1].1 / w[0].1).collect();
    let worst_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let ok = korovkin <= 1e-10 && ratios.iter().all(|&r| r < 1.0) && worst_ratio <= 0.75;
    writeln!(out, "korovkin defect {}", fmt17(korovkin))?;
    writeln!(out, "worst successive ratio {}", fmt17(worst_ratio))?;
    writeln!(out, "{}", if ok { "check passed" } else { "check FAILED" })?;
    Ok(if ok { EXIT_OK } else { EXIT_NUMERICAL })
}

fn cmd_selftest(out: &mut dyn Write) -> Result<i32> {
    let mut failures = 0;
    let mut line = |name: &str, ok: bool, out: &mut dyn Write| -> Result<()> {
        if !ok {
            failures += 1;
        }
        writeln!(out, "{} {name}", if ok { "PASS" } else { "FAIL" })?;
        Ok(())
    };

    let v = run_analyze(&Scenario::cycle(3, 1.0))?;
    line("3-cycle positive control at vertex 1 is controllable", v.decision == Decision::Controllable, out)?;

    let sys = Scenario::cycle(5, 1.0).transport()?;
    let mut worst = 0.0f64;
    for mu in [0.0, 0.5, 1.0, 4.0] {
        let a = sys.transfer_simple(mu)?;
        let b = sys.transfer(mu)?;
        worst = worst.max((a.as_matrix() - b.as_matrix()).amax());
    }
    line("transfer_simple matches the composed transfer", worst < 1e-12, out)?;

    let mut s = Scenario::heat_path(1.0, Mode::ControlConstrained);
    s.discretization.points = 41;
    let v = run_analyze(&s)?;
    line(
        "heat path with positive controls is not controllable",
        v.decision == Decision::NotControllable && v.recheck().is_ok(),
        out,
    )?;

    let net = Scenario::heat_path(1.0, Mode::Positive).heat()?;
    let a = net.transfer(1.0)?;
    line("heat path transfer is nilpotent", (&a * &a * &a).amax() < 1e-14, out)?;

    let cfg = MirakjanEval::new(32, 1.0)?;
    let one = appendix::mirakjan_apply(&cfg, &Sampler::Warped(&|_| 1.0), 0.25)?.value;
    line("Szasz-Mirakjan preserves constants", (one - 1.0).abs() < 1e-10, out)?;

    let d = DVector::from_vec(vec![1.0, 0.0, 0.0]);
    let f = sys_dirichlet_check(&d)?;
    line("Dirichlet lift has the prescribed inflow", f, out)?;

    writeln!(out, "{failures} failure(s)")?;
    Ok(if failures == 0 { EXIT_OK } else { EXIT_NUMERICAL })
}

fn sys_dirichlet_check(d: &DVector<f64>) -> Result<bool> {
    let sys = Scenario::cycle(3, 1.0).transport()?;
    let f = sys.dirichlet_apply(0.7, d, 11)?;
    Ok((0..3).all(|j| f.edge(j)[10] == d[j]))
}
