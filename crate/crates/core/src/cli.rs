//! Command-line front end. Every run writes one JSON report (plus CSV series)
//! that embeds the resolved configuration and the crate version.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::cee::{positive_degree, CeeSolutionJson};
use crate::control::{
    design, loop_sensitivity, peak_gain, frequency_grid, sensitivity_constraints, step_metrics, write_frequency_csv,
    Plant, SensitivitySpec,
};
use crate::error::{Error, Result};
use crate::homotopy::{HomotopyOptions, HomotopyTrace};
use crate::io::{cnums, complexes, read_json, write_json, DesignFile, IdentifyFile, ParsedProblem, ProblemFile};
use crate::problem::{caratheodory_residual, interpolation_residual, Layout};
use crate::solver::{sigma_from_zeros, solve_caratheodory, solve_interpolation, DiscSolved, SolveOptions};
use crate::specest::{
    identify, model_reduce, read_series, spectrum_samples, ArmaModel, FilterBank, IdentifyOptions,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
const DEGREE_TOL: f64 = 1e-6;

#[derive(Parser, Debug)]
#[command(name = "cee-interp", version, about = "Nevanlinna-Pick interpolation with degree constraint via the covariance extension equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Solve an interpolation problem file.
    Solve(SolveArgs),
    /// Estimate a spectral density from a time series (or a simulated model).
    Identify(IdentifyArgs),
    /// Design a sensitivity-shaping controller.
    Design(DesignArgs),
    /// Sample the spectral density of a saved solution.
    Spectrum(SpectrumArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SolverFlags {
    /// Corrector tolerance of the homotopy.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Initial (and maximal) homotopy step.
    #[arg(long)]
    pub step: Option<f64>,
}

impl SolverFlags {
    fn options(&self) -> SolveOptions {
        let mut h = HomotopyOptions::default();
        if let Some(t) = self.tol {
            h.corrector_tol = t;
        }
        if let Some(s) = self.step {
            h.initial_step = s;
            h.min_step = h.min_step.min(s);
        }
        SolveOptions { homotopy: h, ..Default::default() }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SolveArgs {
    /// Problem JSON.
    #[arg(long)]
    pub input: PathBuf,
    /// Solution JSON.
    #[arg(long)]
    pub output: PathBuf,
    /// Homotopy trace CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct IdentifyArgs {
    /// Time series, one sample per line. Without it the configured model is simulated.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Identification config JSON (bank, model, spectral zeros, reduction).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Report JSON; the spectrum goes to `<stem>.spectrum.csv` next to it.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Seed of the noise generator for simulated data.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of spectrum samples.
    #[arg(long, default_value_t = 1024)]
    pub grid: usize,
    /// Use the model's exact state covariance instead of data.
    #[arg(long)]
    pub analytic_covariance: bool,
    /// Samples to simulate after the burn-in (overrides the config).
    #[arg(long)]
    pub samples: Option<usize>,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DesignArgs {
    /// Design JSON.
    #[arg(long)]
    pub input: PathBuf,
    /// Report JSON; the frequency response goes to `<stem>.freq.csv` next to it.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Frequency points (overrides the design file).
    #[arg(long)]
    pub grid: Option<usize>,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SpectrumArgs {
    /// Solution or identification report JSON.
    #[arg(long)]
    pub input: PathBuf,
    /// CSV with columns theta,phi.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 1024)]
    pub grid: usize,
}

impl Command {
    fn output(&self) -> &Path {
        match self {
            Command::Solve(a) => &a.output,
            Command::Identify(a) => &a.output,
            Command::Design(a) => &a.output,
            Command::Spectrum(a) => &a.output,
        }
    }

    fn paths(&self) -> Vec<&Path> {
        let mut v: Vec<&Path> = vec![self.output()];
        match self {
            Command::Solve(a) => {
                v.push(&a.input);
                v.extend(a.trace.as_deref());
            }
            Command::Identify(a) => {
                v.extend(a.input.as_deref());
                v.extend(a.config.as_deref());
                v.extend(a.trace.as_deref());
            }
            Command::Design(a) => {
                v.push(&a.input);
                v.extend(a.trace.as_deref());
            }
            Command::Spectrum(a) => v.push(&a.input),
        }
        v
    }
}

/// Runs one command and returns the process exit status.
pub fn run(cli: Cli) -> i32 {
    let cmd = cli.command;
    let result = check_paths(&cmd).and_then(|_| match &cmd {
        Command::Solve(a) => cmd_solve(&cmd, a),
        Command::Identify(a) => cmd_identify(&cmd, a),
        Command::Design(a) => cmd_design(&cmd, a),
        Command::Spectrum(a) => cmd_spectrum(a),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if !matches!(cmd, Command::Spectrum(_)) {
                if let Err(w) = write_json(cmd.output(), &error_report(&cmd, &e)) {
                    eprintln!("error: could not write report: {w}");
                }
            }
            e.exit_code()
        }
    }
}

fn check_paths(cmd: &Command) -> Result<()> {
    let paths = cmd.paths();
    for (i, p) in paths.iter().enumerate() {
        if paths[i + 1..].contains(p) {
            return Err(Error::InvalidInput(format!("path {} is used twice", p.display())));
        }
    }
    Ok(())
}

fn error_report(cmd: &Command, e: &Error) -> Value {
    let mut detail = json!({ "kind": e.kind(), "message": e.to_string(), "exit_code": e.exit_code() });
    match e {
        Error::PickInfeasible { min_eigenvalue } => detail["min_eigenvalue"] = json!(min_eigenvalue),
        Error::IllConditioned { condition } => detail["condition"] = json!(condition),
        Error::PathFailure { lambda, p } => {
            detail["lambda"] = json!(lambda);
            detail["p"] = json!(p);
        }
        Error::InfeasibleGamma { value, gamma } => {
            detail["value"] = json!(value);
            detail["gamma"] = json!(gamma);
        }
        _ => {}
    }
    json!({ "version": VERSION, "config": cmd, "error": detail })
}

fn write_trace(path: Option<&Path>, trace: &HomotopyTrace) -> Result<()> {
    if let Some(p) = path {
        let file = std::fs::File::create(p)?;
        trace.write_csv(std::io::BufWriter::new(file))?;
    }
    Ok(())
}

/// `<dir>/<stem>.<suffix>` next to `output`.
pub fn sibling(output: &Path, suffix: &str) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    output.with_file_name(format!("{stem}.{suffix}"))
}

fn homotopy_summary(trace: &HomotopyTrace) -> Value {
    let steps: Vec<f64> = trace.records.iter().skip(1).map(|r| r.step).collect();
    let min_step = steps.iter().copied().fold(f64::INFINITY, f64::min);
    let max_cond = trace.records.iter().map(|r| r.condition).fold(0.0, f64::max);
    json!({
        "accepted_steps": steps.len(),
        "min_step": if steps.is_empty() { Value::Null } else { json!(min_step) },
        "max_jacobian_condition": max_cond,
    })
}

fn disc_report(d: &DiscSolved) -> Result<Value> {
    let sol = &d.solution;
    let (degree, _) = positive_degree(&sol.p_matrix, DEGREE_TOL);
    Ok(json!({
        "pick_min_eigenvalue": d.pick_min_eigenvalue,
        "v_condition": d.structure.v_condition,
        "solution": CeeSolutionJson::from(sol),
        "degree_estimate": degree,
        "checks": sol.check(&d.params)?,
        "homotopy": homotopy_summary(&d.trace),
    }))
}

fn cmd_solve(cmd: &Command, args: &SolveArgs) -> Result<()> {
    let file: ProblemFile = read_json(&args.input)?;
    let opts = SolveOptions { pivot: file.pivot, ..args.solver.options() };
    let zeros = complexes(&file.spectral_zeros);
    let mut report = match file.parse()? {
        ParsedProblem::Exterior(problem) => {
            let solved = solve_interpolation(&problem, &zeros, &opts)?;
            write_trace(args.trace.as_deref(), &solved.disc.trace)?;
            let mut r = disc_report(&solved.disc)?;
            r["pivot"] = json!(solved.record.pivot);
            r["interpolant"] = serde_json::to_value(&solved.interpolant)?;
            r["interpolation_residual"] = json!(interpolation_residual(&solved.interpolant, &problem)?);
            r
        }
        ParsedProblem::Disc(cp) => {
            let sigma = sigma_from_zeros(&zeros, cp.n())?;
            let d = solve_caratheodory(&cp, sigma, &opts)?;
            write_trace(args.trace.as_deref(), &d.trace)?;
            let mut r = disc_report(&d)?;
            r["interpolant"] = serde_json::to_value(d.solution.interpolant())?;
            r["interpolation_residual"] = json!(caratheodory_residual(&d.solution.a, &d.solution.b, &cp)?);
            r
        }
    };
    report["version"] = json!(VERSION);
    report["config"] = json!({ "run": cmd, "problem": file, "homotopy": opts.homotopy });
    report["spectrum_scale"] = json!(1.0);
    write_json(&args.output, &report)
}

fn cmd_identify(cmd: &Command, args: &IdentifyArgs) -> Result<()> {
    let cfg: IdentifyFile = match &args.config {
        Some(p) => read_json(p)?,
        None => IdentifyFile::default(),
    };
    let layout = Layout::new(complexes(&cfg.bank.nodes), cfg.bank.multiplicities.clone())?;
    let n = layout.dim() - 1;
    let model = ArmaModel::new(complexes(&cfg.model.zeros), complexes(&cfg.model.poles))?;
    let samples = args.samples.unwrap_or(cfg.samples);
    let seed = args.seed.unwrap_or(0);
    let from_model = args.input.is_none();
    let (sigma_hat, used) = if args.analytic_covariance {
        (model.state_covariance(&layout)?, None)
    } else {
        let y = match &args.input {
            Some(p) => read_series(p)?,
            None => model.simulate(cfg.filter.burn_in + samples, seed)?,
        };
        let est = FilterBank::new(layout.clone()).run(&y, &cfg.filter)?;
        (est.sigma_hat, Some(est.samples))
    };
    let zeros: Vec<Complex64> = match &cfg.spectral_zeros {
        Some(z) => complexes(z),
        None if from_model => model.zeros.clone(),
        None => Vec::new(),
    };
    let sigma = sigma_from_zeros(&zeros, n)?;
    let opts = IdentifyOptions { solve: args.solver.options(), rank_tol: cfg.rank_tol };
    let ident = identify(&sigma_hat, &layout, sigma, &opts)?;
    write_trace(args.trace.as_deref(), &ident.solved.trace)?;
    let sol = &ident.solved.solution;
    let reduction = match &cfg.reduced_zeros {
        Some(kept) if kept.len() < n => Some(model_reduce(&ident.problem, sol, &complexes(kept), &opts.solve, args.grid)?),
        _ => None,
    };

    let spectrum_path = sibling(&args.output, "spectrum.csv");
    let full = spectrum_samples(&sol.a, &sol.sigma, sol.rho, args.grid);
    let reduced = reduction.as_ref().map(|r| spectrum_samples(&r.solved.solution.a, &r.solved.solution.sigma, r.solved.solution.rho, args.grid));
    let mut csv = String::from("theta,phi");
    if reduced.is_some() {
        csv.push_str(",phi_reduced");
    }
    if from_model {
        csv.push_str(",phi_model");
    }
    csv.push('\n');
    for (k, &(theta, phi)) in full.iter().enumerate() {
        csv.push_str(&format!("{theta:.12e},{:.12e}", phi * ident.variance));
        if let Some(r) = &reduced {
            csv.push_str(&format!(",{:.12e}", r[k].1 * ident.variance));
        }
        if from_model {
            csv.push_str(&format!(",{:.12e}", model.density(theta)?));
        }
        csv.push('\n');
    }
    std::fs::write(&spectrum_path, csv)?;

    let mut report = disc_report(&ident.solved)?;
    report["version"] = json!(VERSION);
    report["config"] = json!({ "run": cmd, "identify": cfg, "seed": seed, "homotopy": opts.solve.homotopy });
    report["samples"] = json!(used);
    report["w_estimate"] = json!(ident.w_values.iter().map(|v| cnums(v)).collect::<Vec<_>>());
    report["spectrum_scale"] = json!(ident.variance);
    report["rank"] = json!(ident.rank);
    report["rank_tol"] = json!(cfg.rank_tol);
    report["spectrum_csv"] = json!(spectrum_path.display().to_string());
    if let Some(r) = &reduction {
        report["reduction"] = json!({
            "degree": r.solved.solution.n(),
            "solution": CeeSolutionJson::from(&r.solved.solution),
            "singular_values": r.reduced_singular_values,
            "spectrum_gap": r.spectrum_gap * ident.variance,
        });
    }
    write_json(&args.output, &report)
}

fn cmd_design(cmd: &Command, args: &DesignArgs) -> Result<()> {
    let file: DesignFile = read_json(&args.input)?;
    let plant = Plant::new(&file.plant.numerator, &file.plant.denominator)?;
    let spec = SensitivitySpec {
        gamma: file.gamma,
        constraints: sensitivity_constraints(&plant, file.controller_relative_degree)?,
        spectral_zeros: file.spectral_zeros.clone(),
        map: file.mobius(),
    };
    let opts = args.solver.options();
    let d = design(&plant, &spec, &opts)?;
    write_trace(args.trace.as_deref(), &d.solved.disc.trace)?;
    let metrics = step_metrics(&plant, &d.controller, &file.simulation)?;
    let points = args.grid.unwrap_or(file.frequency_points);
    let grid = frequency_grid(points);
    let s = loop_sensitivity(&plant, &d.controller);
    let hinf = peak_gain(&s, &grid);
    let freq_path = sibling(&args.output, "freq.csv");
    let file_out = std::fs::File::create(&freq_path)?;
    write_frequency_csv(std::io::BufWriter::new(file_out), &s, &grid)?;
    let ctrl_num: Vec<f64> = d.controller.numerator.scale(Complex64::new(d.controller.scale, 0.0)).real_coeffs();
    let report = json!({
        "version": VERSION,
        "config": { "run": cmd, "design": file, "homotopy": opts.homotopy },
        "constraints": spec.constraints,
        "sigma_roots": cnums(&spec.sigma_roots()?),
        "interpolation_problem": ProblemFile::from_exterior(&d.problem, &spec.sigma_roots()?),
        "controller": { "numerator": ctrl_num, "denominator": d.controller.denominator.real_coeffs() },
        "sensitivity": d.sensitivity,
        "closed_loop_poles": cnums(&d.closed_loop_poles),
        "internally_stable": d.internally_stable(),
        "constraint_residual": d.constraint_residual,
        "metrics": {
            "settling_time": metrics.settling_time,
            "settling_band": file.simulation.settling_band,
            "overshoot_percent": metrics.overshoot * 100.0,
            "max_control": metrics.max_control,
        },
        "hinf_norm": hinf,
        "gamma": file.gamma,
        "frequency_csv": freq_path.display().to_string(),
        "homotopy": homotopy_summary(&d.solved.disc.trace),
    });
    write_json(&args.output, &report)
}

fn cmd_spectrum(args: &SpectrumArgs) -> Result<()> {
    let report: Value = read_json(&args.input)?;
    let sol: CeeSolutionJson = serde_json::from_value(report.get("solution").cloned().ok_or_else(|| Error::Parse(format!("{}: no \"solution\" field", args.input.display())))?)?;
    let scale = report.get("spectrum_scale").and_then(Value::as_f64).unwrap_or(1.0);
    if args.grid == 0 {
        return Err(Error::InvalidInput("grid must be positive".into()));
    }
    let mut csv = String::from("theta,phi\n");
    for (theta, phi) in spectrum_samples(&sol.a, &sol.sigma, sol.rho, args.grid) {
        csv.push_str(&format!("{theta:.12e},{:.12e}\n", phi * scale));
    }
    std::fs::write(&args.output, csv)?;
    Ok(())
}
