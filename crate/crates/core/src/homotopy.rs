//! Predictor–corrector continuation of the reduced CEE from λ = 0 (where
//! `p = 0`, `a = b = σ`) to λ = 1.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cee::{ab_vectors, CeeParameters};
use crate::error::{Error, Result};
use crate::poly::Polynomial;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HomotopyOptions {
    pub initial_step: f64,
    pub min_step: f64,
    pub corrector_tol: f64,
    pub max_corrector_iterations: usize,
    /// Roots of `a` and `b` must stay within modulus `1 - schur_margin`.
    pub schur_margin: f64,
}

impl Default for HomotopyOptions {
    fn default() -> Self {
        HomotopyOptions {
            initial_step: 0.05,
            min_step: 1e-6,
            corrector_tol: 1e-10,
            max_corrector_iterations: 10,
            schur_margin: 1e-9,
        }
    }
}

impl HomotopyOptions {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.min_step && self.min_step <= self.initial_step && self.initial_step <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "need 0 < min step ({}) <= initial step ({}) <= 1",
                self.min_step, self.initial_step
            )));
        }
        if !(self.corrector_tol > 0.0) || self.max_corrector_iterations == 0 {
            return Err(Error::InvalidInput("corrector tolerance and iteration count must be positive".into()));
        }
        Ok(())
    }
}

/// `S(x)` acting on full coefficient vectors `(1, x_1, .., x_n)`: Hankel plus upper
/// Toeplitz, so that `S(a)y` is the symmetric product giving the coefficients of
/// `a(z)y(1/z) + y(z)a(1/z)` at lags `0..n`.
pub fn s_matrix(x: &[f64]) -> DMatrix<f64> {
    let n1 = x.len();
    DMatrix::from_fn(n1, n1, |k, j| {
        let hankel = if k + j < n1 { x[k + j] } else { 0.0 };
        let toeplitz = if j >= k { x[j - k] } else { 0.0 };
        hankel + toeplitz
    })
}

fn full(tail: &DVector<f64>) -> Vec<f64> {
    let mut v = Vec::with_capacity(tail.len() + 1);
    v.push(1.0);
    v.extend(tail.iter().copied());
    v
}

#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub params: CeeParameters,
    /// `s_k = Σ_i σ_i σ_{i+k}`, `k = 0..n-1`, with `σ_0 = 1`.
    pub s: DVector<f64>,
}

impl ReducedSystem {
    pub fn new(params: CeeParameters) -> Self {
        let sig = full(&params.sigma_vec);
        let n = params.n();
        let s = DVector::from_fn(n, |k, _| (0..=n - k).map(|i| sig[i] * sig[i + k]).sum());
        ReducedSystem { params, s }
    }

    pub fn n(&self) -> usize {
        self.params.n()
    }

    /// `H(p, λ) = [I 0] S(a)[1; b] - 2(1 - p_1)s`
    pub fn residual(&self, p: &DVector<f64>, lambda: f64) -> DVector<f64> {
        let n = self.n();
        if n == 0 {
            return DVector::zeros(0);
        }
        let (a, b) = ab_vectors(p, lambda, &self.params);
        let sb = s_matrix(&full(&a)) * DVector::from_vec(full(&b));
        sb.rows(0, n).into_owned() - &self.s * (2.0 * (1.0 - p[0]))
    }

    /// `(∂H/∂p, ∂H/∂λ)`.
    pub fn jacobians(&self, p: &DVector<f64>, lambda: f64) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.n();
        let prm = &self.params;
        let (a, b) = ab_vectors(p, lambda, prm);
        let sa = s_matrix(&full(&a));
        let sb = s_matrix(&full(&b));
        let sum = (&sa + &sb).view((0, 1), (n, n)).into_owned();
        let diff = (&sa - &sb).view((0, 1), (n, n)).into_owned();
        let mut hp = &sum * &prm.gamma + &diff * (&prm.uu * &prm.gamma * lambda);
        // derivative of -2(1 - p_1)s
        for i in 0..n {
            hp[(i, 0)] += 2.0 * self.s[i];
        }
        let hl = &diff * prm.g(p);
        (hp, hl)
    }

    /// Roots of `a(p, λ)`.
    pub fn poles(&self, p: &DVector<f64>, lambda: f64) -> Result<Vec<Complex64>> {
        let (a, _) = ab_vectors(p, lambda, &self.params);
        Polynomial::monic_from_tail(a.as_slice()).roots()
    }

    fn admissible(&self, p: &DVector<f64>, lambda: f64, margin: f64) -> Result<bool> {
        if p.is_empty() {
            return Ok(true);
        }
        if p[0] >= 1.0 || p.iter().any(|x| !x.is_finite()) {
            return Ok(false);
        }
        let (a, b) = ab_vectors(p, lambda, &self.params);
        Ok(Polynomial::monic_from_tail(a.as_slice()).schur_test(margin)?
            && Polynomial::monic_from_tail(b.as_slice()).schur_test(margin)?)
    }

    /// Newton on `H(·, λ) = 0`; returns the corrected point and iteration count.
    fn correct(&self, mut q: DVector<f64>, lambda: f64, opts: &HomotopyOptions) -> Option<(DVector<f64>, usize, f64)> {
        let mut it = 0;
        loop {
            let r = self.residual(&q, lambda);
            let norm = r.norm();
            if !norm.is_finite() {
                return None;
            }
            if norm <= opts.corrector_tol {
                return Some((q, it, norm));
            }
            if it == opts.max_corrector_iterations {
                return None;
            }
            let (hp, _) = self.jacobians(&q, lambda);
            q -= hp.lu().solve(&r)?;
            it += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub lambda: f64,
    pub p: Vec<f64>,
    pub residual: f64,
    pub step: f64,
    pub corrector_iterations: usize,
    /// 2-norm condition number of `∂H/∂p` at the accepted point.
    pub condition: f64,
    pub poles: Vec<Complex64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HomotopyTrace {
    pub records: Vec<TraceRecord>,
}

impl HomotopyTrace {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.records.first().map_or(0, |r| r.p.len());
        let npoles = self.records.first().map_or(0, |r| r.poles.len());
        let mut header = vec!["lambda".to_string()];
        header.extend((1..=n).map(|i| format!("p_{i}")));
        header.push("residual".into());
        header.push("step".into());
        for k in 1..=npoles {
            header.push(format!("pole_re_{k}"));
            header.push(format!("pole_im_{k}"));
        }
        writeln!(w, "{}", header.join(","))?;
        for r in &self.records {
            let mut row = vec![format!("{:.17e}", r.lambda)];
            row.extend(r.p.iter().map(|x| format!("{x:.17e}")));
            row.push(format!("{:.6e}", r.residual));
            row.push(format!("{:.6e}", r.step));
            for z in &r.poles {
                row.push(format!("{:.17e}", z.re));
                row.push(format!("{:.17e}", z.im));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn condition(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smin = sv.min();
    if smin > 0.0 {
        sv.max() / smin
    } else {
        f64::INFINITY
    }
}

/// Traces `p(λ)` on `[0, 1]` with an Euler predictor on
/// `dp/dλ = -(∂H/∂p)^{-1} ∂H/∂λ` and a Newton corrector.
pub fn continue_path(sys: &ReducedSystem, opts: &HomotopyOptions) -> Result<(DVector<f64>, HomotopyTrace)> {
    opts.validate()?;
    let n = sys.n();
    let mut p = DVector::zeros(n);
    let mut lambda = 0.0;
    let mut trace = HomotopyTrace::default();
    let record = |lambda: f64, p: &DVector<f64>, residual: f64, step: f64, iters: usize| -> Result<TraceRecord> {
        let (hp, _) = sys.jacobians(p, lambda);
        Ok(TraceRecord {
            lambda,
            p: p.iter().copied().collect(),
            residual,
            step,
            corrector_iterations: iters,
            condition: condition(&hp),
            poles: sys.poles(p, lambda)?,
        })
    };
    trace.records.push(record(0.0, &p, sys.residual(&p, 0.0).norm(), 0.0, 0)?);
    let mut step = opts.initial_step;
    let mut fast = 0;
    while lambda < 1.0 {
        let h = step.min(1.0 - lambda);
        let next = if 1.0 - (lambda + h) < 1e-14 { 1.0 } else { lambda + h };
        let (hp, hl) = sys.jacobians(&p, lambda);
        let dp = -hp.lu().solve(&hl).ok_or(Error::SingularJacobian { lambda })?;
        let predicted = &p + dp * (next - lambda);
        let accepted = match sys.correct(predicted, next, opts) {
            Some((q, iters, res)) if sys.admissible(&q, next, opts.schur_margin)? => Some((q, iters, res)),
            _ => None,
        };
        match accepted {
            Some((q, iters, res)) => {
                trace.records.push(record(next, &q, res, next - lambda, iters)?);
                p = q;
                lambda = next;
                fast = if iters <= 1 { fast + 1 } else { 0 };
                if fast >= 2 {
                    step = (2.0 * step).min(opts.initial_step);
                    fast = 0;
                }
            }
            None => {
                step *= 0.5;
                if step < opts.min_step {
                    return Err(Error::PathFailure { lambda, p: p.iter().copied().collect() });
                }
            }
        }
    }
    Ok((p, trace))
}

/// Root sets of `a` along the trace, reordered so that each root continues the
/// nearest one from the previous sample.
pub fn pole_trajectories(trace: &HomotopyTrace) -> Vec<Vec<Complex64>> {
    let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(trace.records.len());
    for rec in &trace.records {
        let Some(prev) = out.last() else {
            out.push(rec.poles.clone());
            continue;
        };
        let mut remaining = rec.poles.clone();
        let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
        for (i, a) in prev.iter().enumerate() {
            for (j, b) in remaining.iter().enumerate() {
                pairs.push((i, j, (a - b).norm()));
            }
        }
        pairs.sort_by(|x, y| x.2.total_cmp(&y.2));
        let mut slot = vec![None; prev.len()];
        let mut taken = vec![false; remaining.len()];
        for (i, j, _) in pairs {
            if slot[i].is_none() && !taken[j] {
                slot[i] = Some(j);
                taken[j] = true;
            }
        }
        let ordered: Vec<Complex64> = slot.iter().map(|s| remaining[s.expect("equal root counts")]).collect();
        remaining.clear();
        out.push(ordered);
    }
    out
}
