//! The covariance extension equation
//!
//! `P = Γ(P - Phh'P)Γ' + g(P)g(P)'`, `g(P) = u + Uσ + UΓPh`, `Γ = J - σh'`,
//!
//! together with the recovery of `(a, b, ρ)` from `p = Ph`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homotopy::ReducedSystem;
use crate::poly::{positivity_identity_residual, Polynomial, RationalFunction};
use crate::series;

#[derive(Debug, Clone)]
pub struct CeeParameters {
    pub sigma: Polynomial,
    pub u: DVector<f64>,
    pub uu: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    /// `σ_1 .. σ_n`
    pub sigma_vec: DVector<f64>,
}

impl CeeParameters {
    pub fn new(sigma: Polynomial, u: DVector<f64>, uu: DMatrix<f64>) -> Result<Self> {
        let n = sigma.degree();
        if !sigma.is_monic() || !sigma.is_real(1e-12) {
            return Err(Error::InvalidInput("sigma must be a real monic polynomial".into()));
        }
        if u.len() != n || uu.nrows() != n || uu.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "sigma has degree {n} but u has length {} and U is {}x{}",
                u.len(),
                uu.nrows(),
                uu.ncols()
            )));
        }
        if !sigma.schur_test(0.0)? {
            return Err(Error::InvalidInput("sigma must have all roots inside the unit disc".into()));
        }
        let sigma_vec = DVector::from_vec(sigma.tail());
        let mut gamma = DMatrix::zeros(n, n);
        for i in 0..n {
            gamma[(i, 0)] = -sigma_vec[i];
            if i + 1 < n {
                gamma[(i, i + 1)] = 1.0;
            }
        }
        Ok(CeeParameters { sigma, u, uu, gamma, sigma_vec })
    }

    pub fn n(&self) -> usize {
        self.u.len()
    }

    /// `g = u + Uσ + UΓp`
    pub fn g(&self, p: &DVector<f64>) -> DVector<f64> {
        &self.u + &self.uu * (&self.sigma_vec + &self.gamma * p)
    }
}

/// `(u, U)` for the covariance extension problem with covariances `1, c_1, .., c_n`:
/// `u_k` are the coefficients of `c(x)/(1 + c(x))`, `x = 1/z`, and `U` is the strictly
/// lower triangular Toeplitz matrix with first column `(0, u_1, .., u_{n-1})`.
pub fn covariance_uu(c: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let n = c.len();
    let mut den = vec![Complex64::new(1.0, 0.0)];
    den.extend(c.iter().map(|&x| Complex64::new(x, 0.0)));
    let inv = series::recip(&den, n + 1).expect("constant term is one");
    let u = DVector::from_iterator(n, inv[1..].iter().map(|z| -z.re));
    let uu = DMatrix::from_fn(n, n, |i, j| if i > j { u[i - j - 1] } else { 0.0 });
    (u, uu)
}

pub fn cee_residual(p: &DMatrix<f64>, params: &CeeParameters) -> f64 {
    let ph = p.column(0).into_owned();
    let g = params.g(&ph);
    let inner = p - &ph * ph.transpose();
    let r = p - &params.gamma * inner * params.gamma.transpose() - &g * g.transpose();
    r.norm()
}

/// `a = (I - U)(Γp + σ) - u`, `b = (I + U)(Γp + σ) + u`, `ρ = sqrt(1 - p_1)`.
pub fn recover_ab(p: &DVector<f64>, params: &CeeParameters) -> Result<(Polynomial, Polynomial, f64)> {
    let (a, b) = ab_vectors(p, 1.0, params);
    let p1 = if p.is_empty() { 0.0 } else { p[0] };
    if p1 >= 1.0 {
        return Err(Error::Contractivity { p1 });
    }
    Ok((Polynomial::monic_from_tail(a.as_slice()), Polynomial::monic_from_tail(b.as_slice()), (1.0 - p1).sqrt()))
}

/// Coefficient tails of `a(p, λ)` and `b(p, λ)`.
pub fn ab_vectors(p: &DVector<f64>, lambda: f64, params: &CeeParameters) -> (DVector<f64>, DVector<f64>) {
    let x = &params.gamma * p + &params.sigma_vec;
    let ux = &params.uu * &x * lambda;
    let lu = &params.u * lambda;
    (&x - &ux - &lu, &x + ux + lu)
}

/// Real Stein solve `X = A X A' + Q` by vectorization.
pub fn real_stein_solve(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let lhs = DMatrix::<f64>::identity(n * n, n * n) - a.kronecker(a);
    let rhs = DVector::from_column_slice(q.as_slice());
    let sol = lhs.lu().solve(&rhs).ok_or_else(|| Error::InvalidInput("Stein equation is singular".into()))?;
    let x = DMatrix::from_column_slice(n, n, sol.as_slice());
    Ok((&x + x.transpose()) * 0.5)
}

/// Full `P` from its first column: `P - ΓPΓ' = -Γpp'Γ' + gg'`.
pub fn lyapunov_p_from_p(p: &DVector<f64>, params: &CeeParameters) -> Result<DMatrix<f64>> {
    let gp = &params.gamma * p;
    let g = params.g(p);
    let q = &g * g.transpose() - &gp * gp.transpose();
    real_stein_solve(&params.gamma, &q)
}

/// Singular values of `P`, descending, and the count at or above `tol`.
///
/// `P` lives on the normalized scale `f(∞) = 1/2`, so `tol` is an absolute
/// threshold on that scale rather than a fraction of the largest singular value.
pub fn positive_degree(p: &DMatrix<f64>, tol: f64) -> (usize, Vec<f64>) {
    if p.is_empty() {
        return (0, Vec::new());
    }
    let mut sv: Vec<f64> = p.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let rank = sv.iter().filter(|&&s| s >= tol && s > 0.0).count();
    (rank, sv)
}

/// Ratio between the last kept singular value and the first dropped one.
pub fn singular_gap(sv: &[f64], rank: usize) -> f64 {
    match (rank.checked_sub(1).and_then(|i| sv.get(i)), sv.get(rank)) {
        (Some(&kept), Some(&dropped)) if dropped > 0.0 => kept / dropped,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => f64::INFINITY,
    }
}

#[derive(Debug, Clone)]
pub struct CeeSolution {
    pub p_matrix: DMatrix<f64>,
    pub p: DVector<f64>,
    pub a: Polynomial,
    pub b: Polynomial,
    pub sigma: Polynomial,
    pub rho: f64,
    pub singular_values: Vec<f64>,
}

/// Diagnostics of a candidate solution; all residuals are absolute.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolutionCheck {
    pub cee_residual: f64,
    pub positivity_residual: f64,
    pub lyapunov_residual: f64,
    pub g_identity_residual: f64,
    pub min_eigenvalue: f64,
    pub psd: bool,
    pub a_schur: bool,
    pub b_schur: bool,
}

impl CeeSolution {
    /// Assembles the full solution from `p = Ph`.
    pub fn from_p(p: &DVector<f64>, params: &CeeParameters) -> Result<Self> {
        let (a, b, rho) = recover_ab(p, params)?;
        let p_matrix = lyapunov_p_from_p(p, params)?;
        let (_, singular_values) = positive_degree(&p_matrix, 0.0);
        Ok(CeeSolution { p_matrix, p: p.clone(), a, b, sigma: params.sigma.clone(), rho, singular_values })
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    /// `f = b / (2a)`
    pub fn interpolant(&self) -> RationalFunction {
        RationalFunction { numerator: self.b.clone(), denominator: self.a.clone(), scale: 0.5 }
    }

    /// Degree of `f` estimated from the rank of `P`.
    pub fn degree(&self, tol: f64) -> usize {
        positive_degree(&self.p_matrix, tol).0
    }

    pub fn check(&self, params: &CeeParameters) -> Result<SolutionCheck> {
        let n = self.n();
        let cee = cee_residual(&self.p_matrix, params);
        let positivity = positivity_identity_residual(&self.a, &self.b, &self.sigma, self.rho)?;
        // P - JPJ' + (ab' + ba')/2 - ρ²σσ' = 0 on coefficient tails
        let av = DVector::from_vec(self.a.tail());
        let bv = DVector::from_vec(self.b.tail());
        let sv = DVector::from_vec(self.sigma.tail());
        let j = DMatrix::from_fn(n, n, |r, c| if c == r + 1 { 1.0 } else { 0.0 });
        let lyap = &self.p_matrix - &j * &self.p_matrix * j.transpose() + (&av * bv.transpose() + &bv * av.transpose()) * 0.5
            - &sv * sv.transpose() * (self.rho * self.rho);
        let g = params.g(&self.p);
        let g_identity = (&g - (&bv - &av) * 0.5).amax();
        let min_eigenvalue = if n == 0 {
            0.0
        } else {
            nalgebra::linalg::SymmetricEigen::new(self.p_matrix.clone()).eigenvalues.min()
        };
        let trace = self.p_matrix.trace();
        Ok(SolutionCheck {
            cee_residual: cee,
            positivity_residual: positivity,
            lyapunov_residual: lyap.norm(),
            g_identity_residual: g_identity,
            min_eigenvalue,
            psd: min_eigenvalue >= -1e-10 * trace.max(f64::MIN_POSITIVE),
            a_schur: self.a.schur_test(0.0)?,
            b_schur: self.b.schur_test(0.0)?,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CeeSolutionJson {
    pub a: Polynomial,
    pub b: Polynomial,
    pub sigma: Polynomial,
    pub rho: f64,
    pub p: Vec<f64>,
    #[serde(rename = "P")]
    pub p_matrix: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
}

impl From<&CeeSolution> for CeeSolutionJson {
    fn from(s: &CeeSolution) -> Self {
        CeeSolutionJson {
            a: s.a.clone(),
            b: s.b.clone(),
            sigma: s.sigma.clone(),
            rho: s.rho,
            p: s.p.iter().copied().collect(),
            p_matrix: s.p_matrix.row_iter().map(|r| r.iter().copied().collect()).collect(),
            singular_values: s.singular_values.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DirectOptions {
    pub tol: f64,
    pub max_iterations: usize,
    pub damping_floor: f64,
}

impl Default for DirectOptions {
    fn default() -> Self {
        DirectOptions { tol: 1e-10, max_iterations: 50, damping_floor: 2f64.powi(-20) }
    }
}

/// Damped Newton on the reduced system at λ = 1.
pub fn solve_direct(params: &CeeParameters, p0: Option<&DVector<f64>>, opts: DirectOptions) -> Result<CeeSolution> {
    let sys = ReducedSystem::new(params.clone());
    let mut p = p0.cloned().unwrap_or_else(|| DVector::zeros(params.n()));
    let mut r = sys.residual(&p, 1.0);
    let mut it = 0;
    while r.norm() > opts.tol {
        if it == opts.max_iterations {
            return Err(Error::NoConvergence { iterations: it, residual: r.norm() });
        }
        it += 1;
        let (hp, _) = sys.jacobians(&p, 1.0);
        let delta = hp.lu().solve(&r).ok_or(Error::SingularJacobian { lambda: 1.0 })?;
        let mut t = 1.0;
        loop {
            let q = &p - &delta * t;
            let ok = q.is_empty() || q[0] < 1.0;
            if ok {
                let rq = sys.residual(&q, 1.0);
                if rq.norm() < r.norm() {
                    p = q;
                    r = rq;
                    break;
                }
            }
            t *= 0.5;
            if t < opts.damping_floor {
                return Err(Error::NoConvergence { iterations: it, residual: r.norm() });
            }
        }
    }
    CeeSolution::from_p(&p, params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trivial(n: usize) -> CeeParameters {
        CeeParameters::new(Polynomial::monomial(n), DVector::zeros(n), DMatrix::zeros(n, n)).unwrap()
    }

    #[test]
    fn covariance_parameters_for_zero_tail_vanish() {
        let (u, uu) = covariance_uu(&[0.0, 0.0, 0.0]);
        assert_eq!(u.norm(), 0.0);
        assert_eq!(uu.norm(), 0.0);
    }

    #[test]
    fn covariance_parameter_single_step() {
        // 1/(1 + 0.5x) = 1 - 0.5x + ..., so u_1 = 0.5
        let (u, uu) = covariance_uu(&[0.5]);
        assert!((u[0] - 0.5).abs() < 1e-15);
        assert_eq!(uu[(0, 0)], 0.0);
    }

    #[test]
    fn covariance_parameters_match_long_division() {
        let c = [0.3, -0.2, 0.15, 0.05];
        // independent long division of x^0 by 1 + c(x)
        let mut q = vec![0.0; 5];
        let mut rem = [1.0, 0.0, 0.0, 0.0, 0.0];
        for k in 0..5 {
            q[k] = rem[k];
            for (i, ci) in c.iter().enumerate() {
                if k + i + 1 < 5 {
                    rem[k + i + 1] -= q[k] * ci;
                }
            }
        }
        let (u, uu) = covariance_uu(&c);
        for k in 0..4 {
            assert!((u[k] + q[k + 1]).abs() < 1e-12);
        }
        assert!((uu[(2, 0)] - u[1]).abs() < 1e-15 && uu[(0, 0)] == 0.0 && uu[(0, 1)] == 0.0);
    }

    #[test]
    fn residual_vanishes_for_trivial_data() {
        let params = trivial(3);
        assert_eq!(cee_residual(&DMatrix::zeros(3, 3), &params), 0.0);
        let mut p = DMatrix::zeros(3, 3);
        p[(1, 1)] = 0.2;
        assert!(cee_residual(&p, &params) > 0.0);
    }

    #[test]
    fn trivial_recovery_gives_sigma() {
        let params = trivial(2);
        let (a, b, rho) = recover_ab(&DVector::zeros(2), &params).unwrap();
        assert_eq!(a, params.sigma);
        assert_eq!(b, params.sigma);
        assert_eq!(rho, 1.0);
        assert!(lyapunov_p_from_p(&DVector::zeros(2), &params).unwrap().norm() < 1e-16);
        let sol = solve_direct(&params, None, DirectOptions::default()).unwrap();
        assert_eq!(sol.p.norm(), 0.0);
    }

    #[test]
    fn contractivity_violation_is_reported() {
        let params = trivial(1);
        assert!(matches!(recover_ab(&DVector::from_vec(vec![1.0]), &params), Err(Error::Contractivity { .. })));
    }

    #[test]
    fn rank_counts() {
        assert_eq!(positive_degree(&DMatrix::zeros(3, 3), 1e-8).0, 0);
        let p = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-15]));
        assert_eq!(positive_degree(&p, 1e-8).0, 1);
        let spectrum = [2.0170, 0.4184, 0.02585, 0.01858, 0.005741, 0.002466];
        let p = DMatrix::from_diagonal(&DVector::from_row_slice(&spectrum));
        let (rank, sv) = positive_degree(&p, 1e-2);
        assert_eq!(rank, 4);
        assert_eq!(sv[0], 2.0170);
    }

    #[test]
    fn scalar_case_closed_form() {
        // sigma = z, f(∞) = 1/2, f(z1) = v1: a = z - β, b = z + β, β = z1(2v1 - 1)/(2v1 + 1)
        // The single parameter is u_1 = β (both formulas reduce to g = u).
        let beta: f64 = 0.4;
        let params = CeeParameters::new(
            Polynomial::monomial(1),
            DVector::from_vec(vec![beta]),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let sol = solve_direct(&params, None, DirectOptions::default()).unwrap();
        assert!((sol.a.tail()[0] + beta).abs() < 1e-12);
        assert!((sol.b.tail()[0] - beta).abs() < 1e-12);
        assert!((sol.rho - (1.0 - beta * beta).sqrt()).abs() < 1e-12);
        let chk = sol.check(&params).unwrap();
        assert!(chk.cee_residual < 1e-12 && chk.positivity_residual < 1e-12 && chk.lyapunov_residual < 1e-12);
    }
}
