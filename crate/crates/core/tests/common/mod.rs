#![allow(dead_code)]

use cee_interp::problem::InterpolationProblem;
use cee_interp::sphere::Point;
use num_complex::Complex64;

pub fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Degree-7 example: eight simple nodes (one at infinity) with spectral zeros close
/// to the unit circle.
pub fn golden_problem() -> (InterpolationProblem, Vec<Complex64>) {
    let nodes = [
        cx(0.8709, -0.8967),
        cx(0.8709, 0.8967),
        cx(0.3344, -1.2044),
        cx(0.3344, 1.2044),
        cx(1.1, 0.0),
        cx(-0.6474, 0.8893),
        cx(-0.6474, -0.8893),
    ];
    let values = [
        cx(0.7973, 0.2568),
        cx(0.7973, -0.2568),
        cx(0.5451, 0.3645),
        cx(0.5451, -0.3645),
        cx(0.7693, 0.0),
        cx(0.7693, 0.7693),
        cx(0.7693, -0.7693),
    ];
    let mut pts = vec![Point::Infinity];
    pts.extend(nodes.iter().map(|&z| Point::Finite(z)));
    let mut vals = vec![vec![cx(0.5, 0.0)]];
    vals.extend(values.iter().map(|&v| vec![v]));
    let zeros = vec![
        Complex64::from_polar(0.95, 1.22),
        Complex64::from_polar(0.95, -1.22),
        Complex64::from_polar(0.95, 2.3),
        Complex64::from_polar(0.95, -2.3),
        cx(0.0, 0.99),
        cx(0.0, -0.99),
        cx(-0.99, 0.0),
    ];
    (InterpolationProblem::new(pts, vals).unwrap(), zeros)
}

pub const GOLDEN_A: [f64; 8] = [1.0, -1.771, 1.815, -1.205, 1.28, -1.814, 1.773, -0.8775];
pub const GOLDEN_B: [f64; 8] = [1.0, -1.364, 1.112, -0.3812, -0.4479, 1.119, -1.412, 0.8781];

use cee_interp::poly::RationalFunction;
use cee_interp::problem::{CaratheodoryProblem, Layout};
use cee_interp::specest::{normalized_problem, ArmaModel};
use rand::Rng;

/// Roots closed under conjugation: pairs first, then one real root if `count` is odd.
pub fn random_roots<R: Rng>(rng: &mut R, count: usize, rmin: f64, rmax: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(count);
    while out.len() + 1 < count {
        let z = Complex64::from_polar(rng.random_range(rmin..rmax), rng.random_range(0.15..3.0));
        out.push(z);
        out.push(z.conj());
    }
    if out.len() < count {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        out.push(cx(sign * rng.random_range(rmin..rmax), 0.0));
    }
    out
}

pub fn random_model<R: Rng>(rng: &mut R, degree: usize) -> ArmaModel {
    let zeros = random_roots(rng, degree, 0.1, 0.85);
    let poles = random_roots(rng, degree, 0.1, 0.85);
    ArmaModel::new(zeros, poles).unwrap()
}

/// Disc layout with `conditions` interpolation conditions: the origin first, then real
/// nodes and conjugate pairs with modulus in `[1/3, 1/1.05]`, kept apart from each other.
pub fn random_layout<R: Rng>(rng: &mut R, conditions: usize) -> Layout {
    let mut nodes = vec![cx(0.0, 0.0)];
    let mut mults = vec![if conditions > 2 && rng.random_bool(0.3) { 2 } else { 1 }];
    let mut left = conditions - mults[0];
    let far = |nodes: &[Complex64], z: Complex64| nodes.iter().all(|w| (w - z).norm() > 0.2);
    while left > 0 {
        let r = rng.random_range(1.0 / 3.0..1.0 / 1.05);
        let m = if left >= 4 && rng.random_bool(0.25) { 2 } else { 1 };
        if left >= 2 * m && rng.random_bool(0.6) {
            let z = Complex64::from_polar(r, rng.random_range(0.3..2.8));
            if far(&nodes, z) {
                nodes.extend([z, z.conj()]);
                mults.extend([m, m]);
                left -= 2 * m;
            }
        } else {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let z = cx(sign * r, 0.0);
            let m = m.min(left);
            if far(&nodes, z) {
                nodes.push(z);
                mults.push(m);
                left -= m;
            }
        }
    }
    Layout::new(nodes, mults).unwrap()
}

/// Solvable disc problem of degree `n` from the exact data of a random model.
pub fn random_disc_problem<R: Rng>(rng: &mut R, n: usize, model_degree: usize) -> (CaratheodoryProblem, ArmaModel) {
    let model = random_model(rng, model_degree);
    let layout = random_layout(rng, n + 1);
    let (cp, _) = normalized_problem(&layout, &model.w_values(&layout).unwrap()).unwrap();
    (cp, model)
}

/// Exterior-domain problem (node at infinity plus nodes of modulus in `[1.05, 3]`)
/// sampled from the positive-real part of a random model.
pub fn random_exterior_problem<R: Rng>(rng: &mut R, n: usize) -> InterpolationProblem {
    let degree = rng.random_range(1..=4);
    let model = random_model(rng, degree);
    let layout = random_layout(rng, n + 1);
    let (b, c0) = model.positive_real_part().unwrap();
    let f = RationalFunction::new(b, model.a().unwrap(), 0.5 * c0).unwrap();
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    for (&z, &m) in layout.nodes.iter().zip(&layout.multiplicities) {
        let p = if z.norm() == 0.0 { Point::Infinity } else { Point::Finite(z.inv()) };
        values.push(f.eval_with_derivatives(p, m - 1).unwrap());
        nodes.push(p);
    }
    InterpolationProblem::new(nodes, values).unwrap()
}

/// Autoregressive polynomial `[1, a_1, .., a_n]` of the covariances `r_0..r_n`.
pub fn levinson_durbin(r: &[f64]) -> Vec<f64> {
    let n = r.len() - 1;
    let mut a = vec![1.0];
    let mut err = r[0];
    for k in 1..=n {
        let acc: f64 = (0..k).map(|i| a[i] * r[k - i]).sum();
        let refl = -acc / err;
        let mut next = a.clone();
        next.push(0.0);
        for i in 1..=k {
            next[i] += refl * a[k - i];
        }
        a = next;
        err *= 1.0 - refl * refl;
    }
    a
}
