//! Complex polynomials (highest power first) and rational functions built on them.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::series;
use crate::sphere::{Mobius, Point};

/// Default root-clustering tolerance, relative to the coefficient norm.
pub const CLUSTER_TOL: f64 = 1e-7;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

impl Polynomial {
    /// Leading exact zeros are stripped; an empty or all-zero input is the zero polynomial.
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        let first = coeffs.iter().position(|z| z.norm() != 0.0);
        match first {
            Some(i) => Polynomial { coeffs: coeffs[i..].to_vec() },
            None => Polynomial { coeffs: vec![c(0.0)] },
        }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Polynomial::new(coeffs.iter().map(|&x| c(x)).collect())
    }

    /// `z^n + tail[0] z^{n-1} + ... + tail[n-1]`
    pub fn monic_from_tail(tail: &[f64]) -> Self {
        let mut v = Vec::with_capacity(tail.len() + 1);
        v.push(c(1.0));
        v.extend(tail.iter().map(|&x| c(x)));
        Polynomial { coeffs: v }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: vec![c(0.0)] }
    }

    pub fn one() -> Self {
        Polynomial { coeffs: vec![c(1.0)] }
    }

    /// Monomial `z^n`.
    pub fn monomial(n: usize) -> Self {
        let mut v = vec![c(0.0); n + 1];
        v[0] = c(1.0);
        Polynomial { coeffs: v }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|z| z.norm() == 0.0)
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs[0] == c(1.0)
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_real(&self, tol: f64) -> bool {
        let scale = self.norm().max(1.0);
        self.coeffs.iter().all(|z| z.im.abs() <= tol * scale)
    }

    pub fn real_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().map(|z| z.re).collect()
    }

    /// Coefficients after the leading one: the n-vector `(p_1, ..., p_n)` of a monic polynomial.
    pub fn tail(&self) -> Vec<f64> {
        self.coeffs[1..].iter().map(|z| z.re).collect()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().fold(c(0.0), |acc, &k| acc * z + k)
    }

    pub fn derivative(&self) -> Self {
        let n = self.degree();
        if n == 0 {
            return Polynomial::zero();
        }
        Polynomial::new(
            self.coeffs[..n]
                .iter()
                .enumerate()
                .map(|(i, &k)| k * (n - i) as f64)
                .collect(),
        )
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Polynomial::new(self.coeffs.iter().map(|&k| k * s).collect())
    }

    pub fn mul(&self, other: &Polynomial) -> Self {
        let mut out = vec![c(0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }

    pub fn add(&self, other: &Polynomial) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![c(0.0); len];
        for (i, &a) in self.coeffs.iter().rev().enumerate() {
            out[len - 1 - i] += a;
        }
        for (i, &b) in other.coeffs.iter().rev().enumerate() {
            out[len - 1 - i] += b;
        }
        Polynomial::new(out)
    }

    pub fn sub(&self, other: &Polynomial) -> Self {
        self.add(&other.scale(c(-1.0)))
    }

    pub fn pow(&self, k: usize) -> Self {
        (0..k).fold(Polynomial::one(), |acc, _| acc.mul(self))
    }

    /// Drops leading coefficients below `rel_tol` times the coefficient norm.
    pub fn trimmed(&self, rel_tol: f64) -> Self {
        let bound = rel_tol * self.norm();
        let first = self.coeffs.iter().position(|z| z.norm() > bound);
        match first {
            Some(i) => Polynomial { coeffs: self.coeffs[i..].to_vec() },
            None => Polynomial::zero(),
        }
    }

    /// Taylor coefficients of `p(z0 + t)`, lowest order first, `len` terms.
    pub fn taylor_at(&self, z0: Complex64, len: usize) -> Vec<Complex64> {
        // repeated synthetic division by (z - z0)
        let mut work = self.coeffs.clone();
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            if work.is_empty() {
                out.push(c(0.0));
                continue;
            }
            let mut acc = c(0.0);
            let mut quotient = Vec::with_capacity(work.len().saturating_sub(1));
            for (i, &k) in work.iter().enumerate() {
                acc = acc * z0 + k;
                if i + 1 < work.len() {
                    quotient.push(acc);
                }
            }
            out.push(acc);
            work = quotient;
        }
        out
    }

    /// `z^n p(1/z)` with `n` the degree of `p`.
    pub fn reversed(&self) -> Self {
        Polynomial::new(self.coeffs.iter().rev().copied().collect())
    }

    /// Roots from the eigenvalues of the companion matrix, polished by Newton steps.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let n = self.degree();
        if n == 0 {
            return Ok(Vec::new());
        }
        // exact zero roots first: the companion matrix of z^k is a Jordan block
        let zeros = self.coeffs.iter().rev().take_while(|z| z.norm() == 0.0).count();
        if zeros > 0 {
            let mut roots = Polynomial::new(self.coeffs[..=n - zeros].to_vec()).roots()?;
            roots.extend(std::iter::repeat(c(0.0)).take(zeros));
            return Ok(roots);
        }
        let lead = self.coeffs[0];
        let mut comp = DMatrix::<Complex64>::zeros(n, n);
        for j in 0..n {
            comp[(0, j)] = -self.coeffs[j + 1] / lead;
        }
        for i in 1..n {
            comp[(i, i - 1)] = c(1.0);
        }
        let eig = nalgebra::linalg::Schur::try_new(comp, f64::EPSILON, 10_000)
            .and_then(|s| s.eigenvalues())
            .ok_or_else(|| Error::InvalidInput("companion eigenvalue iteration did not converge".into()))?;
        let d = self.derivative();
        let roots = eig
            .iter()
            .map(|&r0| {
                let mut r = r0;
                for _ in 0..3 {
                    let dv = d.eval(r);
                    if dv.norm() == 0.0 {
                        break;
                    }
                    let step = self.eval(r) / dv;
                    let cand = r - step;
                    if !(cand.re.is_finite() && cand.im.is_finite()) || step.norm() > 1e-3 * (1.0 + r.norm()) {
                        break;
                    }
                    if self.eval(cand).norm() > self.eval(r).norm() {
                        break;
                    }
                    r = cand;
                }
                r
            })
            .collect();
        Ok(roots)
    }

    /// Monic polynomial with the given roots. With `realify` the roots must pair up
    /// under conjugation and the output is real.
    pub fn from_roots(roots: &[Complex64], realify: bool) -> Result<Self> {
        if realify {
            check_conjugate_closed(roots, 1e-8)?;
        }
        let mut p = Polynomial::one();
        for &r in roots {
            p = p.mul(&Polynomial::new(vec![c(1.0), -r]));
        }
        if realify {
            p = Polynomial::new(p.coeffs.iter().map(|z| c(z.re)).collect());
            p.coeffs[0] = c(1.0);
        }
        Ok(p)
    }

    /// True iff every root has modulus below `1 - margin`.
    pub fn schur_test(&self, margin: f64) -> Result<bool> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        Ok(self.roots()?.iter().all(|r| r.norm() < 1.0 - margin))
    }

    /// Composition with a Mobius map in the sense `p((a z + b)/(c z + d)) (c z + d)^deg`.
    pub fn homogenized_mobius(&self, m: &Mobius, deg: usize) -> Self {
        let top = Polynomial::new(vec![m.a, m.b]);
        let bottom = Polynomial::new(vec![m.c, m.d]);
        let n = self.degree();
        let mut out = Polynomial::zero();
        for (i, &k) in self.coeffs.iter().enumerate() {
            let power = n - i;
            out = out.add(&top.pow(power).mul(&bottom.pow(deg - power)).scale(k));
        }
        out
    }
}

fn check_conjugate_closed(roots: &[Complex64], tol: f64) -> Result<()> {
    let mut used = vec![false; roots.len()];
    let mut worst: f64 = 0.0;
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let target = roots[i].conj();
        let scale = 1.0 + roots[i].norm();
        if roots[i].im.abs() <= tol * scale {
            continue;
        }
        let best = (0..roots.len())
            .filter(|&j| !used[j])
            .min_by(|&a, &b| (roots[a] - target).norm().total_cmp(&(roots[b] - target).norm()));
        match best {
            Some(j) if (roots[j] - target).norm() <= tol * scale => used[j] = true,
            Some(j) => worst = worst.max((roots[j] - target).norm()),
            None => worst = worst.max(roots[i].im.abs()),
        }
    }
    if worst > 0.0 {
        return Err(Error::RootSymmetry { mismatch: worst });
    }
    Ok(())
}

impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.coeffs.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(Polynomial::new(pairs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect()))
    }
}

/// Max absolute coefficient mismatch of `a(z)b(1/z) + b(z)a(1/z) - 2 rho^2 sigma(z)sigma(1/z)`.
pub fn positivity_identity_residual(a: &Polynomial, b: &Polynomial, sigma: &Polynomial, rho: f64) -> Result<f64> {
    let n = a.degree();
    if b.degree() != n || sigma.degree() != n {
        return Err(Error::InvalidInput(format!(
            "degree mismatch: a {}, b {}, sigma {}",
            n,
            b.degree(),
            sigma.degree()
        )));
    }
    let lag = |x: &[Complex64], y: &[Complex64], k: isize| -> Complex64 {
        // coefficient of z^k in x(z) y(1/z)
        let mut acc = c(0.0);
        for i in 0..=n {
            let j = i as isize + k;
            if (0..=n as isize).contains(&j) {
                acc += x[i] * y[j as usize];
            }
        }
        acc
    };
    let (a, b, s) = (a.coeffs(), b.coeffs(), sigma.coeffs());
    let mut worst: f64 = 0.0;
    for k in -(n as isize)..=(n as isize) {
        let lhs = lag(a, b, k) + lag(b, a, k);
        let rhs = lag(s, s, k) * (2.0 * rho * rho);
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// `scale * numerator / denominator`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalFunction {
    pub numerator: Polynomial,
    pub denominator: Polynomial,
    pub scale: f64,
}

impl RationalFunction {
    pub fn new(numerator: Polynomial, denominator: Polynomial, scale: f64) -> Result<Self> {
        if denominator.is_zero() {
            return Err(Error::InvalidInput("denominator is identically zero".into()));
        }
        Ok(RationalFunction { numerator, denominator, scale })
    }

    pub fn constant(v: f64) -> Self {
        RationalFunction { numerator: Polynomial::one(), denominator: Polynomial::one(), scale: v }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.numerator.eval(z) / self.denominator.eval(z) * self.scale
    }

    pub fn degree(&self) -> usize {
        self.numerator.degree().max(self.denominator.degree())
    }

    /// `f^{(k)}(z)/k!` for `k = 0..=k_max`. At infinity the coefficients are those of
    /// the expansion in `1/z`.
    pub fn eval_with_derivatives(&self, z: Point, k_max: usize) -> Result<Vec<Complex64>> {
        let len = k_max + 1;
        let (num, den) = match z {
            Point::Finite(z) => (self.numerator.taylor_at(z, len), self.denominator.taylor_at(z, len)),
            Point::Infinity => {
                let dn = self.numerator.degree();
                let dd = self.denominator.degree();
                if dn > dd && !self.numerator.is_zero() {
                    return Err(Error::Pole { root: Complex64::new(f64::INFINITY, 0.0) });
                }
                let mut num = vec![c(0.0); dd - dn];
                num.extend_from_slice(self.numerator.coeffs());
                (num, self.denominator.coeffs().to_vec())
            }
        };
        let scale = self.denominator.norm();
        if den[0].norm() <= 1e-14 * scale {
            let root = match z {
                Point::Finite(z) => self
                    .denominator
                    .roots()?
                    .into_iter()
                    .min_by(|a, b| (a - z).norm().total_cmp(&(b - z).norm()))
                    .unwrap_or(z),
                Point::Infinity => Complex64::new(f64::INFINITY, 0.0),
            };
            return Err(Error::Pole { root });
        }
        let mut out = series::div(&num, &den, len).ok_or(Error::Pole { root: c(f64::NAN) })?;
        for v in &mut out {
            *v *= self.scale;
        }
        Ok(out)
    }

    /// `g(z) = f(m(z))` as a rational function of the same degree.
    pub fn compose_mobius(&self, m: &Mobius) -> Self {
        let deg = self.degree();
        RationalFunction {
            numerator: self.numerator.homogenized_mobius(m, deg),
            denominator: self.denominator.homogenized_mobius(m, deg),
            scale: self.scale,
        }
    }

    /// Cancels numerator/denominator root pairs closer than `tol` (relative) and
    /// returns the reduced function; leading-coefficient ratio is folded into `scale`.
    pub fn reduced(&self, tol: f64) -> Result<Self> {
        let num = self.numerator.trimmed(1e-13);
        let den = self.denominator.trimmed(1e-13);
        if num.is_zero() {
            return Ok(RationalFunction::constant(0.0));
        }
        let (zn, zd) = cancel_common_roots(&num.roots()?, &den.roots()?, tol);
        let lead = num.leading() / den.leading() * self.scale;
        let numerator = Polynomial::from_roots(&zn, false)?;
        let denominator = Polynomial::from_roots(&zd, false)?;
        let scale = lead.re;
        let (numerator, scale) = if lead.im.abs() > 1e-12 * lead.norm() {
            (numerator.scale(lead), 1.0)
        } else {
            (numerator, scale)
        };
        Ok(RationalFunction { numerator, denominator, scale })
    }
}

/// Removes nearest-neighbour pairs common to both root lists within `tol * (1 + |r|)`.
pub fn cancel_common_roots(num: &[Complex64], den: &[Complex64], tol: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut num = num.to_vec();
    let mut den = den.to_vec();
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for (i, a) in num.iter().enumerate() {
            for (j, b) in den.iter().enumerate() {
                let d = (a - b).norm() / (1.0 + a.norm());
                if d <= tol && best.map_or(true, |(_, _, bd)| d < bd) {
                    best = Some((i, j, d));
                }
            }
        }
        match best {
            Some((i, j, _)) => {
                num.remove(i);
                den.remove(j);
            }
            None => return (num, den),
        }
    }
}
