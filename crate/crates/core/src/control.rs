//! Sensitivity shaping: plant constraints on `S = 1/(1 + PC)` become a
//! positive-real interpolation problem for `f = (γ + S)/(γ - S)` after the
//! Möbius map from the right half-plane to the exterior of the disc.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{cancel_common_roots, Polynomial, RationalFunction};
use crate::problem::{interpolation_residual, push_forward, InterpolationProblem};
use crate::series;
use crate::solver::{solve_interpolation, SolveOptions, Solved};
use crate::sphere::{Mobius, Point};

/// Poles and zeros with real part at or above this count as unstable.
pub const UNSTABLE_RE: f64 = -1e-9;
const MULTIPLICITY_TOL: f64 = 1e-6;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Groups numerically repeated roots; returns (mean, multiplicity).
pub fn cluster_roots(roots: &[Complex64], tol: f64) -> Vec<(Complex64, usize)> {
    let mut used = vec![false; roots.len()];
    let mut out = Vec::new();
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        let members: Vec<usize> = (i..roots.len())
            .filter(|&j| !used[j] && (roots[j] - roots[i]).norm() <= tol * (1.0 + roots[i].norm()))
            .collect();
        let mean = members.iter().map(|&j| roots[j]).sum::<Complex64>() / c(members.len() as f64);
        for &j in &members {
            used[j] = true;
        }
        out.push((mean, members.len()));
    }
    out
}

fn is_unstable(s: Complex64) -> bool {
    s.re >= UNSTABLE_RE
}

/// `P(s) = numerator / denominator` with real coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    pub numerator: Polynomial,
    pub denominator: Polynomial,
}

impl Plant {
    /// Rejects improper plants and coinciding unstable poles and zeros; cancels stable common factors.
    pub fn new(numerator: &[f64], denominator: &[f64]) -> Result<Self> {
        let num = Polynomial::from_real(numerator);
        let den = Polynomial::from_real(denominator);
        if den.is_zero() || num.is_zero() {
            return Err(Error::InvalidInput("plant numerator and denominator must be nonzero".into()));
        }
        if num.degree() > den.degree() {
            return Err(Error::InvalidInput("plant must be proper".into()));
        }
        let zeros = num.roots()?;
        let poles = den.roots()?;
        for p in poles.iter().filter(|p| is_unstable(**p)) {
            if zeros.iter().any(|z| (z - p).norm() <= MULTIPLICITY_TOL * (1.0 + p.norm())) {
                return Err(Error::DegeneratePlant { location: *p });
            }
        }
        let (zn, zd) = cancel_common_roots(&zeros, &poles, 1e-9);
        if zn.len() == zeros.len() {
            return Ok(Plant { numerator: num, denominator: den });
        }
        let gain = num.leading() / den.leading();
        Ok(Plant {
            numerator: real_from_roots(&zn, gain)?,
            denominator: real_from_roots(&zd, c(1.0))?,
        })
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.numerator.eval(s) / self.denominator.eval(s)
    }

    pub fn relative_degree(&self) -> usize {
        self.denominator.degree() - self.numerator.degree()
    }

    pub fn unstable_poles(&self) -> Result<Vec<(Complex64, usize)>> {
        let r: Vec<Complex64> = self.denominator.roots()?.into_iter().filter(|z| is_unstable(*z)).collect();
        Ok(cluster_roots(&r, MULTIPLICITY_TOL))
    }

    pub fn unstable_zeros(&self) -> Result<Vec<(Complex64, usize)>> {
        let r: Vec<Complex64> = self.numerator.roots()?.into_iter().filter(|z| is_unstable(*z)).collect();
        Ok(cluster_roots(&r, MULTIPLICITY_TOL))
    }
}

/// `gain · Π(s - r)` with the imaginary round-off dropped.
fn real_from_roots(roots: &[Complex64], gain: Complex64) -> Result<Polynomial> {
    let p = Polynomial::from_roots(roots, false)?.scale(gain);
    let norm = p.norm();
    let worst = p.coeffs().iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if worst > 1e-8 * norm {
        return Err(Error::ConjugateSymmetry { residue: worst / norm });
    }
    Ok(Polynomial::new(p.coeffs().iter().map(|z| c(z.re)).collect()))
}

/// Taylor data `S^{(k)}(s_0)/k!` at one node (in `1/s` at infinity).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityConstraint {
    pub node: Point,
    pub values: Vec<Complex64>,
}

/// Interpolation constraints on `S` that make `C = (1 - S)/(S P)` internally
/// stabilizing with relative degree at least `controller_relative_degree`.
pub fn sensitivity_constraints(plant: &Plant, controller_relative_degree: usize) -> Result<Vec<SensitivityConstraint>> {
    let mut out = Vec::new();
    for (p, m) in plant.unstable_poles()? {
        out.push(SensitivityConstraint { node: Point::Finite(clean(p)), values: vec![c(0.0); m] });
    }
    let infinity_order = plant.relative_degree() + controller_relative_degree;
    if infinity_order >= 1 {
        let mut v = vec![c(0.0); infinity_order];
        v[0] = c(1.0);
        out.push(SensitivityConstraint { node: Point::Infinity, values: v });
    }
    for (z, m) in plant.unstable_zeros()? {
        let mut v = vec![c(0.0); m];
        v[0] = c(1.0);
        out.push(SensitivityConstraint { node: Point::Finite(clean(z)), values: v });
    }
    Ok(out)
}

/// Snaps round-off: tiny real parts at the imaginary axis and tiny imaginary parts.
fn clean(z: Complex64) -> Complex64 {
    let tiny = 1e-12 * (1.0 + z.norm());
    Complex64::new(if z.re.abs() < tiny { 0.0 } else { z.re }, if z.im.abs() < tiny { 0.0 } else { z.im })
}

/// `z = (10/9)(1 + s)/(1 - s)`
pub fn default_map() -> Mobius {
    let k = c(10.0 / 9.0);
    Mobius::new(k, k, c(-1.0), c(1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivitySpec {
    pub gamma: f64,
    pub constraints: Vec<SensitivityConstraint>,
    /// Spectral zeros given as `s`-plane points.
    pub spectral_zeros: Vec<Point>,
    /// Map from the `s`-plane to the `z`-plane sending the closed right half-plane outside the disc.
    pub map: Mobius,
}

impl SensitivitySpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0) {
            return Err(Error::Gamma(self.gamma));
        }
        for w in [0.0, 0.5, 1.0, 3.0, 100.0] {
            if self.map.apply(Point::Finite(Complex64::new(0.0, w))).modulus() < 1.0 - 1e-12 {
                return Err(Error::InvalidInput("map sends part of the imaginary axis inside the unit disc".into()));
            }
        }
        for con in &self.constraints {
            let v = con.values[0].norm();
            if v >= self.gamma {
                return Err(Error::InfeasibleGamma { value: v, gamma: self.gamma });
            }
        }
        Ok(())
    }

    /// Roots of `σ` in the `z`-plane: images of the spectral zeros, reflected into the disc.
    pub fn sigma_roots(&self) -> Result<Vec<Complex64>> {
        self.spectral_zeros
            .iter()
            .map(|&s| {
                let z = self.map.apply(s);
                let r = z.modulus();
                if (r - 1.0).abs() < 1e-12 {
                    return Err(Error::InvalidInput(format!("spectral zero {s:?} maps onto the unit circle")));
                }
                let inside = if r > 1.0 { z.reflect() } else { z };
                Ok(inside.finite().expect("reflection of an exterior point is finite"))
            })
            .collect()
    }
}

/// Positive-real data for `f = (γ + S)/(γ - S)` in the `z`-plane.
pub fn build_disc_problem(spec: &SensitivitySpec) -> Result<InterpolationProblem> {
    spec.validate()?;
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    for con in &spec.constraints {
        let len = con.values.len();
        let (z, s_of_z) = push_forward(&con.values, con.node, &spec.map);
        let g = c(spec.gamma);
        let top: Vec<Complex64> = s_of_z.iter().enumerate().map(|(k, &x)| if k == 0 { g + x } else { x }).collect();
        let bottom: Vec<Complex64> = s_of_z.iter().enumerate().map(|(k, &x)| if k == 0 { g - x } else { -x }).collect();
        let f = series::div(&top, &bottom, len).ok_or(Error::InfeasibleGamma { value: s_of_z[0].norm(), gamma: spec.gamma })?;
        nodes.push(z);
        values.push(f);
    }
    InterpolationProblem::new(nodes, values)
}

/// `S = γ(f - 1)/(f + 1)`
pub fn sensitivity_from_f(f: &RationalFunction, gamma: f64) -> RationalFunction {
    let n = f.numerator.scale(c(f.scale));
    RationalFunction { numerator: n.sub(&f.denominator), denominator: n.add(&f.denominator), scale: gamma }
}

/// `C = (1 - S)/(S P)` with the plant's unstable poles and zeros cancelled; the
/// denominator is returned monic.
pub fn recover_controller(sensitivity: &RationalFunction, plant: &Plant) -> Result<RationalFunction> {
    let sn = sensitivity.numerator.scale(c(sensitivity.scale));
    let sd = &sensitivity.denominator;
    let one_minus = sd.sub(&sn).trimmed(1e-9);
    if one_minus.is_zero() {
        return Ok(RationalFunction { numerator: Polynomial::zero(), denominator: Polynomial::one(), scale: 1.0 });
    }
    let num = one_minus.mul(&plant.denominator);
    let den = sn.trimmed(1e-12).mul(&plant.numerator);
    let lead = num.leading() / den.leading();
    let (zn, zd) = cancel_common_roots(&num.roots()?, &den.roots()?, 1e-6);
    let mut leftover = Vec::new();
    for (r, _) in plant.unstable_poles()?.into_iter().chain(plant.unstable_zeros()?) {
        for x in zn.iter().chain(&zd) {
            if (x - r).norm() <= 1e-4 * (1.0 + r.norm()) {
                leftover.push(*x);
            }
        }
    }
    if !leftover.is_empty() {
        return Err(Error::Cancellation { roots: leftover });
    }
    Ok(RationalFunction { numerator: real_from_roots(&zn, lead)?, denominator: real_from_roots(&zd, c(1.0))?, scale: 1.0 })
}

/// Roots of `P_d C_d + P_n C_n`.
pub fn closed_loop_poles(plant: &Plant, controller: &RationalFunction) -> Result<Vec<Complex64>> {
    characteristic(plant, controller).roots()
}

fn characteristic(plant: &Plant, controller: &RationalFunction) -> Polynomial {
    plant
        .denominator
        .mul(&controller.denominator)
        .add(&plant.numerator.mul(&controller.numerator.scale(c(controller.scale))))
}

#[derive(Debug, Clone)]
pub struct Design {
    pub problem: InterpolationProblem,
    pub solved: Solved,
    /// `S(s)`, unreduced.
    pub sensitivity: RationalFunction,
    pub controller: RationalFunction,
    pub closed_loop_poles: Vec<Complex64>,
    /// Largest mismatch of the designed `S` against the constraints.
    pub constraint_residual: f64,
}

impl Design {
    pub fn internally_stable(&self) -> bool {
        self.closed_loop_poles.iter().all(|p| p.re < 0.0)
    }
}

pub fn design(plant: &Plant, spec: &SensitivitySpec, opts: &SolveOptions) -> Result<Design> {
    let problem = build_disc_problem(spec)?;
    let zeros = spec.sigma_roots()?;
    let solved = solve_interpolation(&problem, &zeros, opts)?;
    let s_of_z = sensitivity_from_f(&solved.interpolant, spec.gamma);
    let sensitivity = s_of_z.compose_mobius(&spec.map);
    let s_constraints = InterpolationProblem { nodes: spec.constraints.iter().map(|c| c.node).collect(), values: spec.constraints.iter().map(|c| c.values.clone()).collect() };
    let constraint_residual = interpolation_residual(&sensitivity, &s_constraints)?;
    let controller = recover_controller(&sensitivity, plant)?;
    let closed_loop_poles = closed_loop_poles(plant, &controller)?;
    Ok(Design { problem, solved, sensitivity, controller, closed_loop_poles, constraint_residual })
}

/// Sensitivity of the loop, `P_d C_d / (P_d C_d + P_n C_n)`.
pub fn loop_sensitivity(plant: &Plant, controller: &RationalFunction) -> RationalFunction {
    RationalFunction {
        numerator: plant.denominator.mul(&controller.denominator),
        denominator: characteristic(plant, controller),
        scale: 1.0,
    }
}

/// Reference shape `s(s + 0.9)/(s² + 0.9s + 0.75²)`.
pub fn ideal_sensitivity() -> RationalFunction {
    RationalFunction {
        numerator: Polynomial::from_real(&[1.0, 0.9, 0.0]),
        denominator: Polynomial::from_real(&[1.0, 0.9, 0.75 * 0.75]),
        scale: 1.0,
    }
}

/// `points` log-spaced frequencies on `[1e-3, 1e3]` rad/s.
pub fn frequency_grid(points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![1.0];
    }
    (0..points).map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / (points - 1) as f64)).collect()
}

pub fn peak_gain(h: &RationalFunction, grid: &[f64]) -> f64 {
    grid.iter().map(|&w| h.eval(Complex64::new(0.0, w)).norm()).fold(0.0, f64::max)
}

/// CSV with columns `omega,abs_S,abs_S_ideal`.
pub fn write_frequency_csv<W: Write>(mut w: W, sensitivity: &RationalFunction, grid: &[f64]) -> std::io::Result<()> {
    let ideal = ideal_sensitivity();
    writeln!(w, "omega,abs_S,abs_S_ideal")?;
    for &om in grid {
        let s = Complex64::new(0.0, om);
        writeln!(w, "{om:.6e},{:.9e},{:.9e}", sensitivity.eval(s).norm(), ideal.eval(s).norm())?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationOptions {
    pub horizon: f64,
    pub dt: f64,
    /// Settling band as a fraction of the final value.
    pub settling_band: f64,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        SimulationOptions { horizon: 20.0, dt: 1e-3, settling_band: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    /// Last time `|y - 1|` exceeds the band; `None` if it never settles within the horizon.
    pub settling_time: Option<f64>,
    /// `max y - 1`, as a fraction.
    pub overshoot: f64,
    pub max_control: f64,
    pub final_output: f64,
}

/// Controllable canonical form of `num/den` (den monic after scaling): `(A, B, C, D)`.
fn realization(num: &Polynomial, den: &Polynomial) -> (DMatrix<f64>, DVector<f64>, DVector<f64>, f64) {
    let lead = den.leading().re;
    let d: Vec<f64> = den.real_coeffs().iter().map(|x| x / lead).collect();
    let n = den.degree();
    let mut nm = vec![0.0; n + 1 - num.degree().min(n + 1)];
    nm.extend(num.real_coeffs().iter().map(|x| x / lead));
    let nm = &nm[nm.len() - (n + 1)..];
    let dd = nm[0];
    // strictly proper remainder coefficients, highest power first
    let rem: Vec<f64> = (1..=n).map(|k| nm[k] - dd * d[k]).collect();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        a[(i, i + 1)] = 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = -d[n - j];
    }
    let mut b = DVector::zeros(n);
    if n > 0 {
        b[n - 1] = 1.0;
    }
    let cvec = DVector::from_fn(n, |j, _| rem[n - 1 - j]);
    (a, b, cvec, dd)
}

/// Unit-step response of the unity-feedback loop by exact zero-order-hold discretization.
pub fn step_metrics(plant: &Plant, controller: &RationalFunction, opts: &SimulationOptions) -> Result<StepMetrics> {
    if !(opts.dt > 0.0 && opts.horizon > opts.dt) {
        return Err(Error::InvalidInput("need 0 < dt < horizon".into()));
    }
    let cn = controller.numerator.scale(c(controller.scale));
    let chr = characteristic(plant, controller);
    let (a, b, cy, dy) = realization(&plant.numerator.mul(&cn), &chr);
    let (_, _, cu, du) = realization(&cn.mul(&plant.denominator), &chr);
    let n = a.nrows();
    let mut aug = DMatrix::zeros(n + 1, n + 1);
    aug.view_mut((0, 0), (n, n)).copy_from(&(&a * opts.dt));
    aug.view_mut((0, n), (n, 1)).copy_from(&(&b * opts.dt));
    let phi = aug.exp();
    let ad = phi.view((0, 0), (n, n)).into_owned();
    let bd = phi.view((0, n), (n, 1)).column(0).into_owned();
    let steps = (opts.horizon / opts.dt).round() as usize;
    let mut x = DVector::zeros(n);
    let mut last_out = 0.0;
    let mut peak = f64::NEG_INFINITY;
    let mut max_u: f64 = 0.0;
    let mut y = 0.0;
    for k in 0..=steps {
        y = cy.dot(&x) + dy;
        let u = cu.dot(&x) + du;
        if !y.is_finite() || y.abs() > 1e6 || u.abs() > 1e9 {
            return Err(Error::UnstableLoop);
        }
        if (y - 1.0).abs() > opts.settling_band {
            last_out = k as f64 * opts.dt;
        }
        peak = peak.max(y);
        max_u = max_u.max(u.abs());
        x = &ad * x + &bd;
    }
    let settled = (y - 1.0).abs() <= opts.settling_band;
    Ok(StepMetrics { settling_time: settled.then_some(last_out), overshoot: peak - 1.0, max_control: max_u, final_output: y })
}

/// The example plant `(-8s² + 62s + 200)/(10s⁴ + 8s³ + 7s² + 0.5s)`.
pub fn example_plant() -> Plant {
    Plant::new(&[-8.0, 62.0, 200.0], &[10.0, 8.0, 7.0, 0.5, 0.0]).expect("example plant is valid")
}
