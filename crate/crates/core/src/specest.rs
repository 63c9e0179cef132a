//! Spectral estimation from a scalar time series: a bank of first-order filters
//! produces a state covariance, from which `W` (hence the interpolation data)
//! is estimated and passed to the CEE solver.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cee::{positive_degree, CeeSolution};
use crate::error::{Error, Result};
use crate::homotopy::s_matrix;
use crate::poly::{Polynomial, RationalFunction};
use crate::problem::{CaratheodoryProblem, Layout};
use crate::solver::{solve_caratheodory, DiscSolved, SolveOptions};
use crate::sphere::Point;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BankOptions {
    pub burn_in: usize,
    pub min_window: usize,
}

impl Default for BankOptions {
    fn default() -> Self {
        BankOptions { burn_in: 1000, min_window: 10_000 }
    }
}

/// Filters `z(zI - Z_j)^{-1} e`, one Jordan block per node.
#[derive(Debug, Clone)]
pub struct FilterBank {
    pub layout: Layout,
}

#[derive(Debug, Clone)]
pub struct CovarianceEstimate {
    pub sigma_hat: DMatrix<Complex64>,
    pub samples: usize,
}

impl FilterBank {
    pub fn new(layout: Layout) -> Self {
        FilterBank { layout }
    }

    /// Time average of `u(t)u(t)*` after the burn-in, where `u(t) = Z u(t-1) + e y(t)`.
    pub fn run(&self, y: &[f64], opts: &BankOptions) -> Result<CovarianceEstimate> {
        let needed = opts.burn_in + opts.min_window.max(1);
        if y.len() < needed {
            return Err(Error::InsufficientData { needed, got: y.len() });
        }
        let dim = self.layout.dim();
        let offsets = self.layout.offsets();
        let mut x = vec![c(0.0); dim];
        let mut acc = DMatrix::<Complex64>::zeros(dim, dim);
        for (t, &yt) in y.iter().enumerate() {
            for ((&z, &m), &o) in self.layout.nodes.iter().zip(&self.layout.multiplicities).zip(&offsets) {
                for k in (0..m).rev() {
                    let below = if k == 0 { c(yt) } else { x[o + k - 1] };
                    x[o + k] = z * x[o + k] + below;
                }
            }
            if t >= opts.burn_in {
                for i in 0..dim {
                    for j in 0..=i {
                        acc[(i, j)] += x[i] * x[j].conj();
                    }
                }
            }
        }
        let count = y.len() - opts.burn_in;
        for i in 0..dim {
            for j in 0..i {
                acc[(j, i)] = acc[(i, j)].conj();
            }
            acc[(i, i)] = c(acc[(i, i)].re);
        }
        Ok(CovarianceEstimate { sigma_hat: acc / c(count as f64), samples: count })
    }
}

/// Structured `W` values (first column of each block) minimizing `‖WE + EW* - Σ‖_F`.
/// `Im w_00` is pinned to zero: adding `iβI` to `W` leaves `WE + EW*` unchanged.
pub fn estimate_w(sigma_hat: &DMatrix<Complex64>, layout: &Layout) -> Result<Vec<Vec<Complex64>>> {
    let e = layout.gram()?;
    let dim = layout.dim();
    if sigma_hat.nrows() != dim || sigma_hat.ncols() != dim {
        return Err(Error::InvalidInput(format!("covariance is {}x{}, bank has dimension {dim}", sigma_hat.nrows(), sigma_hat.ncols())));
    }
    // (block, lag, imaginary?)
    let mut unknowns = Vec::new();
    for (j, &m) in layout.multiplicities.iter().enumerate() {
        for k in 0..m {
            unknowns.push((j, k, false));
            if (j, k) != (0, 0) {
                unknowns.push((j, k, true));
            }
        }
    }
    let basis = |j: usize, k: usize, imag: bool| {
        let mut vals: Vec<Vec<Complex64>> = layout.multiplicities.iter().map(|&m| vec![c(0.0); m]).collect();
        vals[j][k] = if imag { Complex64::i() } else { c(1.0) };
        vals
    };
    let rows = 2 * dim * dim;
    let mut a = DMatrix::<f64>::zeros(rows, unknowns.len());
    for (col, &(j, k, imag)) in unknowns.iter().enumerate() {
        let w = layout.block_toeplitz(&basis(j, k, imag));
        let img = &w * &e + &e * w.adjoint();
        for (r, z) in img.iter().enumerate() {
            a[(r, col)] = z.re;
            a[(dim * dim + r, col)] = z.im;
        }
    }
    let mut rhs = DVector::<f64>::zeros(rows);
    for (r, z) in sigma_hat.iter().enumerate() {
        rhs[r] = z.re;
        rhs[dim * dim + r] = z.im;
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-12 * smax).count();
    if rank < unknowns.len() {
        return Err(Error::Structure { rank, unknowns: unknowns.len() });
    }
    let x = svd.solve(&rhs, 0.0).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut vals: Vec<Vec<Complex64>> = layout.multiplicities.iter().map(|&m| vec![c(0.0); m]).collect();
    for (&(j, k, imag), &v) in unknowns.iter().zip(x.iter()) {
        if imag {
            vals[j][k].im = v;
        } else {
            vals[j][k].re = v;
        }
    }
    Ok(symmetrize(layout, vals))
}

/// Averages each node's data with the conjugate of its partner's.
fn symmetrize(layout: &Layout, vals: Vec<Vec<Complex64>>) -> Vec<Vec<Complex64>> {
    let mut out = vals.clone();
    for (j, z) in layout.nodes.iter().enumerate() {
        let partner = (0..layout.nodes.len()).find(|&k| {
            (layout.nodes[k] - z.conj()).norm() < 1e-12 && layout.multiplicities[k] == layout.multiplicities[j]
        });
        if let Some(k) = partner {
            for (o, (a, b)) in out[j].iter_mut().zip(vals[j].iter().zip(&vals[k])) {
                *o = (a + b.conj()) * 0.5;
            }
        }
    }
    out
}

/// Scales estimated `W` data so that `w_00 = 1/2`; returns the problem and `c_0 = 2 Re w_00`.
pub fn normalized_problem(layout: &Layout, values: &[Vec<Complex64>]) -> Result<(CaratheodoryProblem, f64)> {
    if layout.nodes[0].norm() != 0.0 {
        return Err(Error::InvalidInput("the first filter-bank node must be the origin".into()));
    }
    let c0 = 2.0 * values[0][0].re;
    let scale = values.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
    if !(c0 > 1e-12 * scale.max(f64::MIN_POSITIVE)) || !c0.is_finite() {
        return Err(Error::DegenerateCovariance(format!("estimated variance {c0:.3e} is not positive")));
    }
    let mut scaled: Vec<Vec<Complex64>> = values.iter().map(|v| v.iter().map(|x| x / c0).collect()).collect();
    scaled[0][0] = c(0.5);
    Ok((CaratheodoryProblem::new(layout.nodes.clone(), scaled)?, c0))
}

/// ARMA model `w = σ/a` driven by unit-variance white noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmaModel {
    pub zeros: Vec<Complex64>,
    pub poles: Vec<Complex64>,
}

impl ArmaModel {
    pub fn new(zeros: Vec<Complex64>, poles: Vec<Complex64>) -> Result<Self> {
        if zeros.len() != poles.len() {
            return Err(Error::InvalidInput("model needs as many zeros as poles".into()));
        }
        if poles.iter().chain(&zeros).any(|z| z.norm() >= 1.0) {
            return Err(Error::InvalidInput("model zeros and poles must lie inside the unit disc".into()));
        }
        let m = ArmaModel { zeros, poles };
        m.sigma()?;
        m.a()?;
        Ok(m)
    }

    pub fn degree(&self) -> usize {
        self.poles.len()
    }

    pub fn sigma(&self) -> Result<Polynomial> {
        Polynomial::from_roots(&self.zeros, true)
    }

    pub fn a(&self) -> Result<Polynomial> {
        Polynomial::from_roots(&self.poles, true)
    }

    /// `Φ(e^{iθ}) = |σ|²/|a|²`
    pub fn density(&self, theta: f64) -> Result<f64> {
        let z = Complex64::from_polar(1.0, theta);
        Ok((self.sigma()?.eval(z) / self.a()?.eval(z)).norm_sqr())
    }

    /// Positive-real part `f = c0 · b/(2a)` of the spectrum, `b` monic; returns `(b, c0)`.
    pub fn positive_real_part(&self) -> Result<(Polynomial, f64)> {
        let n = self.degree();
        let sig = self.sigma()?.real_coeffs();
        let a = self.a()?.real_coeffs();
        let s_full = DVector::from_fn(n + 1, |k, _| (0..=n - k).map(|i| sig[i] * sig[i + k]).sum::<f64>() * 2.0);
        let bt = s_matrix(&a)
            .lu()
            .solve(&s_full)
            .ok_or_else(|| Error::InvalidInput("model polynomial a is not Schur".into()))?;
        let c0 = bt[0];
        let b: Vec<f64> = bt.iter().map(|x| x / c0).collect();
        Ok((Polynomial::from_real(&b), c0))
    }

    /// Exact interpolation data `φ(ζ) = f(1/ζ)` at the bank nodes, before normalization.
    pub fn w_values(&self, layout: &Layout) -> Result<Vec<Vec<Complex64>>> {
        let (b, c0) = self.positive_real_part()?;
        let f = RationalFunction::new(b, self.a()?, 0.5 * c0)?;
        let phi = RationalFunction::new(f.numerator.reversed(), f.denominator.reversed(), f.scale)?;
        layout
            .nodes
            .iter()
            .zip(&layout.multiplicities)
            .map(|(&z, &m)| phi.eval_with_derivatives(Point::Finite(z), m - 1))
            .collect()
    }

    /// Exact state covariance of the filter bank driven by this model's output.
    pub fn state_covariance(&self, layout: &Layout) -> Result<DMatrix<Complex64>> {
        let w = layout.block_toeplitz(&self.w_values(layout)?);
        let e = layout.gram()?;
        let s = &w * &e + &e * w.adjoint();
        Ok((&s + s.adjoint()) * c(0.5))
    }

    /// `len` output samples after discarding a transient of 1000 samples.
    pub fn simulate(&self, len: usize, seed: u64) -> Result<Vec<f64>> {
        const TRANSIENT: usize = 1000;
        let a = self.a()?.real_coeffs();
        let s = self.sigma()?.real_coeffs();
        let n = self.degree();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let total = len + TRANSIENT;
        let mut eps = vec![0.0; n + 1];
        let mut ys = vec![0.0; n + 1];
        let mut out = Vec::with_capacity(len);
        for t in 0..total {
            eps.rotate_right(1);
            ys.rotate_right(1);
            eps[0] = StandardNormal.sample(&mut rng);
            let mut y = 0.0;
            for k in 0..=n {
                y += s[k] * eps[k];
                if k > 0 {
                    y -= a[k] * ys[k];
                }
            }
            ys[0] = y;
            if t >= TRANSIENT {
                out.push(y);
            }
        }
        Ok(out)
    }
}

/// Uniform grid `θ_k = -π + 2πk/grid` with `Φ = ρ²|σ|²/|a|²`.
pub fn estimate_spectrum(solution: &CeeSolution, grid: usize) -> Vec<(f64, f64)> {
    spectrum_samples(&solution.a, &solution.sigma, solution.rho, grid)
}

pub fn spectrum_samples(a: &Polynomial, sigma: &Polynomial, rho: f64, grid: usize) -> Vec<(f64, f64)> {
    (0..grid)
        .map(|k| {
            let theta = -PI + 2.0 * PI * k as f64 / grid as f64;
            let z = Complex64::from_polar(1.0, theta);
            (theta, rho * rho * (sigma.eval(z) / a.eval(z)).norm_sqr())
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct IdentifyOptions {
    pub solve: SolveOptions,
    /// Absolute threshold on the singular values of `P` (normalized scale).
    pub rank_tol: f64,
}

impl Default for IdentifyOptions {
    fn default() -> Self {
        IdentifyOptions { solve: SolveOptions::default(), rank_tol: 1e-2 }
    }
}

#[derive(Debug, Clone)]
pub struct Identification {
    pub w_values: Vec<Vec<Complex64>>,
    /// `c_0`: the estimated spectra are `variance · Φ_normalized`.
    pub variance: f64,
    pub problem: CaratheodoryProblem,
    pub solved: DiscSolved,
    pub rank: usize,
}

/// Covariance → `W` → normalized data → CEE solution with spectral zeros `sigma`.
pub fn identify(sigma_hat: &DMatrix<Complex64>, layout: &Layout, sigma: Polynomial, opts: &IdentifyOptions) -> Result<Identification> {
    if sigma_hat.iter().all(|z| z.norm() == 0.0) {
        return Err(Error::DegenerateCovariance("state covariance is identically zero".into()));
    }
    let w_values = estimate_w(sigma_hat, layout)?;
    let (problem, variance) = normalized_problem(layout, &w_values)?;
    let solved = solve_caratheodory(&problem, sigma, &opts.solve)?;
    let rank = positive_degree(&solved.solution.p_matrix, opts.rank_tol).0;
    Ok(Identification { w_values, variance, problem, solved, rank })
}

#[derive(Debug, Clone)]
pub struct ReductionReport {
    pub problem: CaratheodoryProblem,
    pub solved: DiscSolved,
    pub full_singular_values: Vec<f64>,
    pub reduced_singular_values: Vec<f64>,
    /// Sup-norm difference of the two normalized spectra on the report grid.
    pub spectrum_gap: f64,
}

/// Re-solves with the kept spectral zeros on the leading `n' + 1` conditions.
pub fn model_reduce(full_problem: &CaratheodoryProblem, full: &CeeSolution, kept_zeros: &[Complex64], opts: &SolveOptions, grid: usize) -> Result<ReductionReport> {
    let sigma = Polynomial::from_roots(kept_zeros, true)?;
    let problem = full_problem.truncated(kept_zeros.len())?;
    let solved = solve_caratheodory(&problem, sigma, opts)?;
    let a = estimate_spectrum(full, grid);
    let b = estimate_spectrum(&solved.solution, grid);
    let spectrum_gap = a.iter().zip(&b).map(|(x, y)| (x.1 - y.1).abs()).fold(0.0, f64::max);
    Ok(ReductionReport {
        problem,
        full_singular_values: full.singular_values.clone(),
        reduced_singular_values: solved.solution.singular_values.clone(),
        solved,
        spectrum_gap,
    })
}

/// One sample per line; blank lines and lines starting with `#` are skipped.
pub fn read_series(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let field = t.split(',').next().unwrap_or(t).trim();
        let v: f64 = field
            .parse()
            .map_err(|_| Error::Parse(format!("{}: line {}: not a number: {t:?}", path.display(), i + 1)))?;
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polar(r: f64, t: f64) -> Complex64 {
        Complex64::from_polar(r, t)
    }

    fn bank_layout() -> Layout {
        Layout::new(
            vec![c(0.0), polar(0.7, 1.34), polar(0.7, -1.34), polar(0.7, 2.1), polar(0.7, -2.1)],
            vec![3, 1, 1, 1, 1],
        )
        .unwrap()
    }

    #[test]
    fn zero_series_gives_zero_covariance() {
        let bank = FilterBank::new(bank_layout());
        let est = bank.run(&vec![0.0; 11_000], &BankOptions::default()).unwrap();
        assert_eq!(est.sigma_hat.norm(), 0.0);
        assert!(matches!(
            identify(&est.sigma_hat, &bank.layout, Polynomial::monomial(6), &IdentifyOptions::default()),
            Err(Error::DegenerateCovariance(_))
        ));
    }

    #[test]
    fn short_series_is_rejected() {
        let bank = FilterBank::new(bank_layout());
        assert!(matches!(bank.run(&[1.0; 500], &BankOptions::default()), Err(Error::InsufficientData { needed: 11_000, got: 500 })));
    }

    #[test]
    fn white_noise_lag_window_has_identity_covariance() {
        let layout = Layout::new(vec![c(0.0)], vec![3]).unwrap();
        let model = ArmaModel::new(vec![], vec![]).unwrap();
        let y = model.simulate(101_000, 3).unwrap();
        let est = FilterBank::new(layout).run(&y, &BankOptions::default()).unwrap();
        let err = (&est.sigma_hat - DMatrix::<Complex64>::identity(3, 3)).norm();
        assert!(err <= 5.0 / (est.samples as f64).sqrt(), "error {err}");
    }

    #[test]
    fn w_is_recovered_from_exact_covariance() {
        let layout = bank_layout();
        let vals = vec![
            vec![c(0.5), c(0.1), c(-0.05)],
            vec![Complex64::new(0.6, 0.2)],
            vec![Complex64::new(0.6, -0.2)],
            vec![Complex64::new(0.4, -0.1)],
            vec![Complex64::new(0.4, 0.1)],
        ];
        let w = layout.block_toeplitz(&vals);
        let e = layout.gram().unwrap();
        let sigma = &w * &e + &e * w.adjoint();
        let got = estimate_w(&sigma, &layout).unwrap();
        for (x, y) in got.iter().flatten().zip(vals.iter().flatten()) {
            assert!((x - y).norm() < 1e-10);
        }
        let half = estimate_w(&e, &layout).unwrap();
        assert!((half[0][0] - c(0.5)).norm() < 1e-12 && half[1][0].norm() > 0.49);
    }

    #[test]
    fn positive_real_part_reproduces_density() {
        let model = ArmaModel::new(vec![polar(0.5, 1.0), polar(0.5, -1.0)], vec![polar(0.8, 2.0), polar(0.8, -2.0)]).unwrap();
        let (b, c0) = model.positive_real_part().unwrap();
        let f = RationalFunction::new(b, model.a().unwrap(), 0.5 * c0).unwrap();
        for k in 0..50 {
            let t = -PI + 2.0 * PI * k as f64 / 50.0;
            let z = Complex64::from_polar(1.0, t);
            let phi = f.eval(z) + f.eval(z.inv());
            assert!((phi.re - model.density(t).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn flat_solution_has_unit_spectrum() {
        let params = crate::cee::CeeParameters::new(Polynomial::monomial(2), DVector::zeros(2), DMatrix::zeros(2, 2)).unwrap();
        let sol = CeeSolution::from_p(&DVector::zeros(2), &params).unwrap();
        assert!(estimate_spectrum(&sol, 64).iter().all(|(_, p)| (p - 1.0).abs() < 1e-15));
    }
}
