//! Interpolation data, its normalization and the generalized Pick structure.
//!
//! Exterior-domain data (`InterpolationProblem`) is normalized so that the pivot
//! node sits at infinity with value one half, then mapped to the unit disc by
//! `z -> 1/z` (`CaratheodoryProblem`). From there `PickStructure` assembles
//! W, Z, e, E, V and the Pick matrix, and `w_to_u` produces the CEE parameters.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{Polynomial, RationalFunction};
use crate::series;
use crate::sphere::{Mobius, Point};

const NODE_TOL: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-8;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Interpolation conditions `f^{(k)}(z_j)/k! = values[j][k]` on the exterior of the
/// unit disc; at infinity the values are coefficients of the expansion in `1/z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationProblem {
    pub nodes: Vec<Point>,
    pub values: Vec<Vec<Complex64>>,
}

impl InterpolationProblem {
    pub fn new(nodes: Vec<Point>, values: Vec<Vec<Complex64>>) -> Result<Self> {
        let p = InterpolationProblem { nodes, values };
        p.validate()?;
        Ok(p)
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.values.iter().map(Vec::len).collect()
    }

    /// Degree bound: total number of conditions minus one.
    pub fn n(&self) -> usize {
        self.values.iter().map(Vec::len).sum::<usize>() - 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() || self.nodes.len() != self.values.len() {
            return Err(Error::InvalidInput(format!(
                "{} nodes but {} value lists",
                self.nodes.len(),
                self.values.len()
            )));
        }
        if self.values.iter().any(Vec::is_empty) {
            return Err(Error::InvalidInput("every node needs multiplicity >= 1".into()));
        }
        for (j, node) in self.nodes.iter().enumerate() {
            if let Point::Finite(z) = node {
                if z.norm() <= 1.0 {
                    return Err(Error::InvalidInput(format!("node {j} = {z} is not outside the closed unit disc")));
                }
            }
            for other in &self.nodes[j + 1..] {
                if node.approx_eq(*other, NODE_TOL) {
                    return Err(Error::InvalidInput(format!("node {j} is repeated")));
                }
            }
        }
        check_conjugate_closure(&self.nodes, &self.values)
    }

    pub fn is_normalized(&self) -> bool {
        self.nodes[0].is_infinite() && (self.values[0][0] - c(0.5)).norm() < 1e-12
    }
}

fn check_conjugate_closure(nodes: &[Point], values: &[Vec<Complex64>]) -> Result<()> {
    for (j, node) in nodes.iter().enumerate() {
        let partner = node.conj();
        let k = nodes
            .iter()
            .position(|q| q.approx_eq(partner, NODE_TOL))
            .ok_or_else(|| Error::InvalidInput(format!("node {j} has no conjugate partner")))?;
        if values[k].len() != values[j].len() {
            return Err(Error::InvalidInput(format!("conjugate nodes {j} and {k} differ in multiplicity")));
        }
        let scale = values[j].iter().map(|v| v.norm()).fold(1.0, f64::max);
        for (a, b) in values[j].iter().zip(&values[k]) {
            if (a - b.conj()).norm() > SYMMETRY_TOL * scale {
                return Err(Error::InvalidInput(format!(
                    "values at nodes {j} and {k} are not conjugate"
                )));
            }
        }
    }
    Ok(())
}

/// Carries data given at `p` (Taylor series in the local coordinate there) to the
/// image point under `m`, i.e. the data of `f ∘ m^{-1}`.
pub fn push_forward(values: &[Complex64], p: Point, m: &Mobius) -> (Point, Vec<Complex64>) {
    let len = values.len();
    let q = m.apply(p);
    let (back, t_of_tau) = m.inverse().local_series(q, len);
    debug_assert!(back.approx_eq(p, 1e-6));
    (q, series::compose(values, &t_of_tau, len))
}

/// Undo data for `normalize`: `f_norm(m(z)) = value_scale * (f(z) - i * value_shift)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformRecord {
    pub node_map: Mobius,
    pub value_scale: f64,
    pub value_shift: f64,
    pub pivot: usize,
}

impl TransformRecord {
    pub fn identity() -> Self {
        TransformRecord { node_map: Mobius::identity(), value_scale: 1.0, value_shift: 0.0, pivot: 0 }
    }

    pub fn is_identity(&self) -> bool {
        self.node_map.is_identity() && self.value_scale == 1.0 && self.value_shift == 0.0 && self.pivot == 0
    }

    /// The interpolant in original coordinates from the normalized one.
    pub fn denormalize_function(&self, f_norm: &RationalFunction) -> RationalFunction {
        let g = f_norm.compose_mobius(&self.node_map);
        // g / value_scale + i value_shift
        let shift = Complex64::new(0.0, self.value_shift * self.value_scale);
        let numerator = g.numerator.scale(c(g.scale)).add(&g.denominator.scale(shift));
        let denominator = g.denominator.scale(c(self.value_scale));
        RationalFunction { numerator, denominator, scale: 1.0 }
    }

    /// Maps a spectral zero (root of sigma inside the disc) into normalized coordinates.
    pub fn map_spectral_zero(&self, r: Complex64) -> Complex64 {
        self.node_map
            .apply(Point::Finite(r))
            .finite()
            .expect("interior points stay finite under an exterior automorphism")
    }
}

/// Moves node `pivot` to infinity by an automorphism of the disc exterior and
/// rescales values so the pivot value becomes one half.
pub fn normalize(problem: &InterpolationProblem, pivot: usize) -> Result<(InterpolationProblem, TransformRecord)> {
    problem.validate()?;
    if pivot >= problem.nodes.len() {
        return Err(Error::InvalidInput(format!("pivot {pivot} out of range")));
    }
    let v = problem.values[pivot][0];
    if v.re <= 0.0 {
        return Err(Error::NotPositiveReal { re: v.re });
    }
    if pivot == 0 && problem.is_normalized() {
        return Ok((problem.clone(), TransformRecord::identity()));
    }
    let node_map = match problem.nodes[pivot] {
        Point::Infinity => Mobius::identity(),
        Point::Finite(z) if z.im.abs() > NODE_TOL * z.norm() => {
            return Err(Error::InvalidInput(format!(
                "pivot node {z} is not real; a complex pivot breaks conjugate symmetry"
            )))
        }
        Point::Finite(z) => Mobius::exterior_to_infinity(c(z.re)),
    };
    let record = TransformRecord { node_map, value_scale: 0.5 / v.re, value_shift: v.im, pivot };
    let mut order: Vec<usize> = vec![pivot];
    order.extend((0..problem.nodes.len()).filter(|&j| j != pivot));
    let mut nodes = Vec::with_capacity(order.len());
    let mut values = Vec::with_capacity(order.len());
    for j in order {
        let (mut q, mut w) = push_forward(&problem.values[j], problem.nodes[j], &node_map);
        if j == pivot {
            q = Point::Infinity;
        }
        w[0] -= Complex64::new(0.0, record.value_shift);
        for x in &mut w {
            *x *= record.value_scale;
        }
        nodes.push(q);
        values.push(w);
    }
    values[0][0] = c(0.5);
    Ok((InterpolationProblem { nodes, values }, record))
}

/// Inverse of `normalize`.
pub fn denormalize(problem: &InterpolationProblem, record: &TransformRecord) -> InterpolationProblem {
    let inv = record.node_map.inverse();
    let mut nodes = Vec::with_capacity(problem.nodes.len());
    let mut values = Vec::with_capacity(problem.nodes.len());
    for (p, v) in problem.nodes.iter().zip(&problem.values) {
        let scaled: Vec<Complex64> = v.iter().map(|x| x / record.value_scale).collect();
        let (q, mut w) = push_forward(&scaled, *p, &inv);
        w[0] += Complex64::new(0.0, record.value_shift);
        nodes.push(q);
        values.push(w);
    }
    // pivot back to its original slot
    let first_node = nodes.remove(0);
    let first_vals = values.remove(0);
    nodes.insert(record.pivot, first_node);
    values.insert(record.pivot, first_vals);
    InterpolationProblem { nodes, values }
}

/// Interpolation data for the Carathéodory function `phi(z) = f(1/z)` on the disc;
/// node 0 is the origin with `w_00 = 1/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaratheodoryProblem {
    pub nodes: Vec<Complex64>,
    pub values: Vec<Vec<Complex64>>,
}

impl CaratheodoryProblem {
    pub fn new(nodes: Vec<Complex64>, values: Vec<Vec<Complex64>>) -> Result<Self> {
        let cp = CaratheodoryProblem { nodes, values };
        cp.validate()?;
        Ok(cp)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() || self.nodes.len() != self.values.len() {
            return Err(Error::InvalidInput("nodes and values differ in length".into()));
        }
        if self.values.iter().any(Vec::is_empty) {
            return Err(Error::InvalidInput("every node needs multiplicity >= 1".into()));
        }
        if self.nodes[0].norm() > NODE_TOL || (self.values[0][0] - c(0.5)).norm() > 1e-10 {
            return Err(Error::InvalidInput("first node must be 0 with value 1/2".into()));
        }
        for (j, z) in self.nodes.iter().enumerate() {
            if z.norm() >= 1.0 {
                return Err(Error::InvalidInput(format!("disc node {j} = {z} is not inside the unit disc")));
            }
            if self.nodes[j + 1..].iter().any(|w| (w - z).norm() <= NODE_TOL) {
                return Err(Error::InvalidInput(format!("node {j} is repeated")));
            }
        }
        let pts: Vec<Point> = self.nodes.iter().map(|&z| Point::Finite(z)).collect();
        check_conjugate_closure(&pts, &self.values)
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.values.iter().map(Vec::len).collect()
    }

    pub fn n(&self) -> usize {
        self.values.iter().map(Vec::len).sum::<usize>() - 1
    }

    pub fn layout(&self) -> Layout {
        Layout { nodes: self.nodes.clone(), multiplicities: self.multiplicities() }
    }

    /// Keeps the leading `n_reduced + 1` conditions in block order.
    pub fn truncated(&self, n_reduced: usize) -> Result<Self> {
        let mut left = n_reduced + 1;
        if left > self.n() + 1 {
            return Err(Error::InvalidInput(format!("cannot truncate degree {} to {}", self.n(), n_reduced)));
        }
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for (z, v) in self.nodes.iter().zip(&self.values) {
            if left == 0 {
                break;
            }
            let take = v.len().min(left);
            nodes.push(*z);
            values.push(v[..take].to_vec());
            left -= take;
        }
        CaratheodoryProblem::new(nodes, values)
    }
}

/// `phi(z) = f(1/z)`: nodes go to their reciprocals, derivative data by the chain rule.
pub fn to_caratheodory(problem: &InterpolationProblem) -> Result<CaratheodoryProblem> {
    problem.validate()?;
    if !problem.is_normalized() {
        return Err(Error::InvalidInput("problem must be normalized (node 0 at infinity, value 1/2)".into()));
    }
    let inversion = Mobius::inversion();
    let mut nodes = Vec::with_capacity(problem.nodes.len());
    let mut values = Vec::with_capacity(problem.nodes.len());
    for (p, v) in problem.nodes.iter().zip(&problem.values) {
        let (q, w) = push_forward(v, *p, &inversion);
        nodes.push(q.finite().expect("exterior nodes map into the disc"));
        values.push(w);
    }
    nodes[0] = c(0.0);
    CaratheodoryProblem::new(nodes, values)
}

/// Node placement and multiplicities of a block structure, independent of the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub nodes: Vec<Complex64>,
    pub multiplicities: Vec<usize>,
}

impl Layout {
    pub fn new(nodes: Vec<Complex64>, multiplicities: Vec<usize>) -> Result<Self> {
        if nodes.len() != multiplicities.len() || nodes.is_empty() || multiplicities.contains(&0) {
            return Err(Error::InvalidInput("layout needs one positive multiplicity per node".into()));
        }
        if nodes.iter().any(|z| z.norm() >= 1.0) {
            return Err(Error::InvalidInput("layout nodes must lie inside the unit disc".into()));
        }
        Ok(Layout { nodes, multiplicities })
    }

    pub fn dim(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.multiplicities
            .iter()
            .map(|m| {
                let o = acc;
                acc += m;
                o
            })
            .collect()
    }

    /// Block-diagonal Jordan-type matrix: `z_j` on the diagonal, ones below it.
    pub fn z_matrix(&self) -> DMatrix<Complex64> {
        let mut z = DMatrix::zeros(self.dim(), self.dim());
        for ((&node, &m), o) in self.nodes.iter().zip(&self.multiplicities).zip(self.offsets()) {
            for k in 0..m {
                z[(o + k, o + k)] = node;
                if k > 0 {
                    z[(o + k, o + k - 1)] = c(1.0);
                }
            }
        }
        z
    }

    pub fn e_vector(&self) -> DVector<Complex64> {
        let mut e = DVector::zeros(self.dim());
        for o in self.offsets() {
            e[o] = c(1.0);
        }
        e
    }

    /// Block lower-triangular Toeplitz matrix with first columns `values[j]`.
    pub fn block_toeplitz(&self, values: &[Vec<Complex64>]) -> DMatrix<Complex64> {
        let mut w = DMatrix::zeros(self.dim(), self.dim());
        for ((vals, &m), o) in values.iter().zip(&self.multiplicities).zip(self.offsets()) {
            for i in 0..m {
                for j in 0..=i {
                    w[(o + i, o + j)] = vals[i - j];
                }
            }
        }
        w
    }

    /// First columns of each block of a block-Toeplitz matrix.
    pub fn block_first_columns(&self, m: &DMatrix<Complex64>) -> Vec<Vec<Complex64>> {
        self.multiplicities
            .iter()
            .zip(self.offsets())
            .map(|(&len, o)| (0..len).map(|k| m[(o + k, o)]).collect())
            .collect()
    }

    pub fn krylov(&self) -> DMatrix<Complex64> {
        let z = self.z_matrix();
        let n1 = self.dim();
        let mut v = DMatrix::zeros(n1, n1);
        let mut col = self.e_vector();
        for k in 0..n1 {
            v.set_column(k, &col);
            col = &z * col;
        }
        v
    }

    /// Solution of the Stein equation `E = Z E Z* + e e*`.
    pub fn gram(&self) -> Result<DMatrix<Complex64>> {
        let z = self.z_matrix();
        let e = self.e_vector();
        stein_solve(&z, &(&e * e.adjoint()))
    }
}

/// `X = A X A* + Q` by vectorization.
pub fn stein_solve(a: &DMatrix<Complex64>, q: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let n = a.nrows();
    let kron = a.conjugate().kronecker(a);
    let lhs = DMatrix::<Complex64>::identity(n * n, n * n) - kron;
    let rhs = DVector::from_column_slice(q.as_slice());
    let sol = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidInput("Stein equation is singular".into()))?;
    let x = DMatrix::from_column_slice(n, n, sol.as_slice());
    Ok((&x + x.adjoint()) * c(0.5))
}

#[derive(Debug, Clone, Copy)]
pub struct StructureOptions {
    pub max_condition: f64,
}

impl Default for StructureOptions {
    fn default() -> Self {
        StructureOptions { max_condition: 1e12 }
    }
}

#[derive(Debug, Clone)]
pub struct PickStructure {
    pub layout: Layout,
    pub values: Vec<Vec<Complex64>>,
    pub w: DMatrix<Complex64>,
    pub z: DMatrix<Complex64>,
    pub e: DVector<Complex64>,
    pub gram: DMatrix<Complex64>,
    pub v: DMatrix<Complex64>,
    pub sigma: DMatrix<Complex64>,
    pub v_condition: f64,
}

pub fn build_structure(cp: &CaratheodoryProblem, opts: StructureOptions) -> Result<PickStructure> {
    cp.validate()?;
    let layout = cp.layout();
    let w = layout.block_toeplitz(&cp.values);
    let gram = layout.gram()?;
    let v = layout.krylov();
    let sv = v.clone().svd(false, false).singular_values;
    let smin = sv.min();
    let v_condition = if smin > 0.0 { sv.max() / smin } else { f64::INFINITY };
    if !(v_condition <= opts.max_condition) {
        return Err(Error::IllConditioned { condition: v_condition });
    }
    let sigma = &w * &gram + &gram * w.adjoint();
    let sigma = (&sigma + sigma.adjoint()) * c(0.5);
    Ok(PickStructure { z: layout.z_matrix(), e: layout.e_vector(), layout, values: cp.values.clone(), w, gram, v, sigma, v_condition })
}

fn smallest_eigenvalue(h: &DMatrix<Complex64>) -> f64 {
    let herm = (h + h.adjoint()) * c(0.5);
    nalgebra::linalg::SymmetricEigen::new(herm).eigenvalues.min()
}

/// Solvability: the Pick matrix is positive definite.
pub fn pick_solvable(ps: &PickStructure) -> (bool, f64) {
    let lmin = smallest_eigenvalue(&ps.sigma);
    (lmin > 0.0, lmin)
}

impl PickStructure {
    /// `D = (W + I/2)^{-1} (W - I/2)`
    pub fn d_matrix(&self) -> Result<DMatrix<Complex64>> {
        let n1 = self.w.nrows();
        let half = DMatrix::<Complex64>::identity(n1, n1) * c(0.5);
        (&self.w + &half)
            .lu()
            .solve(&(&self.w - &half))
            .ok_or_else(|| Error::InvalidInput("W + I/2 is singular".into()))
    }

    /// Pick matrix of the deformed data `W(lambda) = (I - lambda D)^{-1} - I/2`.
    pub fn deformed_pick(&self, lambda: f64) -> Result<DMatrix<Complex64>> {
        let n1 = self.w.nrows();
        let id = DMatrix::<Complex64>::identity(n1, n1);
        let d = self.d_matrix()?;
        let wl = (&id - d * c(lambda))
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput("I - lambda D is singular".into()))?
            - &id * c(0.5);
        Ok(&wl * &self.gram + &self.gram * wl.adjoint())
    }

    pub fn deformed_pick_min_eigenvalue(&self, lambda: f64) -> Result<f64> {
        Ok(smallest_eigenvalue(&self.deformed_pick(lambda)?))
    }

    fn v_lu(&self) -> nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn> {
        self.v.clone().lu()
    }

    /// `V^{-1} X V`
    fn similarity(&self, x: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        self.v_lu()
            .solve(&(x * &self.v))
            .ok_or(Error::IllConditioned { condition: self.v_condition })
    }

    /// `V^{-1}` with its first row and column removed.
    pub fn m_matrix(&self) -> Result<DMatrix<Complex64>> {
        let n1 = self.v.nrows();
        let vinv = self
            .v
            .clone()
            .try_inverse()
            .ok_or(Error::IllConditioned { condition: self.v_condition })?;
        Ok(vinv.view((1, 1), (n1 - 1, n1 - 1)).into_owned())
    }

    /// Block-Toeplitz `D = N(d)` from the n-vector `d` (with `d_00 = 0` implied).
    pub fn d_from_vector(&self, d: &DVector<Complex64>) -> DMatrix<Complex64> {
        let mut full = vec![c(0.0)];
        full.extend(d.iter().copied());
        let mut blocks = Vec::new();
        let mut it = full.into_iter();
        for &m in &self.layout.multiplicities {
            blocks.push(it.by_ref().take(m).collect::<Vec<_>>());
        }
        self.layout.block_toeplitz(&blocks)
    }

    /// The linear map `U = L(u)`.
    pub fn l_map(&self, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        let d = self.d_of_u(u)?;
        let x = self.similarity(&self.d_from_vector(&d))?;
        let n = x.nrows() - 1;
        let uu = x.view((1, 1), (n, n)).into_owned();
        Ok(uu.map(|z| z.re))
    }

    fn d_of_u(&self, u: &DVector<f64>) -> Result<DVector<Complex64>> {
        let m = self.m_matrix()?;
        let uc = u.map(c);
        m.lu().solve(&uc).ok_or(Error::IllConditioned { condition: self.v_condition })
    }
}

/// CEE parameters `(u, U)` together with the intermediates `d` and `M` (`u = M d`).
#[derive(Debug, Clone)]
pub struct UParameters {
    pub u: DVector<f64>,
    pub uu: DMatrix<f64>,
    pub d: DVector<Complex64>,
    pub m: DMatrix<Complex64>,
    /// Largest discarded imaginary part, relative.
    pub imag_residue: f64,
}

pub fn w_to_u(ps: &PickStructure) -> Result<UParameters> {
    let d_mat = ps.d_matrix()?;
    let x = ps.similarity(&d_mat)?;
    let n = x.nrows() - 1;
    let block = x.view((1, 0), (n, n + 1));
    let scale = block.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let imag_residue = block.iter().map(|z| z.im.abs()).fold(0.0, f64::max) / scale;
    if imag_residue > SYMMETRY_TOL {
        return Err(Error::ConjugateSymmetry { residue: imag_residue });
    }
    let u = DVector::from_iterator(n, block.column(0).iter().map(|z| z.re));
    let uu = block.view((0, 1), (n, n)).map(|z| z.re);
    let d_full: Vec<Complex64> = ps.layout.block_first_columns(&d_mat).into_iter().flatten().collect();
    let d = DVector::from_iterator(n, d_full.into_iter().skip(1));
    let m = ps.m_matrix()?;
    Ok(UParameters { u, uu, d, m, imag_residue })
}

/// Inverse of `w_to_u` for the node layout of `template`.
pub fn u_to_w(u: &DVector<f64>, template: &PickStructure) -> Result<CaratheodoryProblem> {
    let d = template.d_of_u(u)?;
    let mut full = vec![c(0.0)];
    full.extend(d.iter().copied());
    let mut it = full.into_iter();
    let mut values = Vec::with_capacity(template.layout.nodes.len());
    for (j, &m) in template.layout.multiplicities.iter().enumerate() {
        let dj: Vec<Complex64> = it.by_ref().take(m).collect();
        if (c(1.0) - dj[0]).norm() < 1e-12 {
            return Err(Error::SingularBlock { block: j });
        }
        // W_j = (I - D_j)^{-1} - I/2
        let one_minus: Vec<Complex64> = dj.iter().enumerate().map(|(k, &x)| if k == 0 { c(1.0) - x } else { -x }).collect();
        let mut w = series::recip(&one_minus, m).ok_or(Error::SingularBlock { block: j })?;
        w[0] -= c(0.5);
        values.push(w);
    }
    values[0][0] = c(0.5);
    Ok(CaratheodoryProblem { nodes: template.layout.nodes.clone(), values })
}

/// Evaluates a candidate interpolant against the original data; returns the largest
/// absolute mismatch over all conditions.
pub fn interpolation_residual(f: &RationalFunction, problem: &InterpolationProblem) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (p, v) in problem.nodes.iter().zip(&problem.values) {
        let got = f.eval_with_derivatives(*p, v.len() - 1)?;
        for (a, b) in got.iter().zip(v) {
            worst = worst.max((a - b).norm());
        }
    }
    Ok(worst)
}

/// Same check in disc coordinates: `phi(z) = b_*(z) / (2 a_*(z))`.
pub fn caratheodory_residual(a: &Polynomial, b: &Polynomial, cp: &CaratheodoryProblem) -> Result<f64> {
    let phi = RationalFunction::new(b.reversed(), a.reversed(), 0.5)?;
    let mut worst: f64 = 0.0;
    for (z, v) in cp.nodes.iter().zip(&cp.values) {
        let got = phi.eval_with_derivatives(Point::Finite(*z), v.len() - 1)?;
        for (x, y) in got.iter().zip(v) {
            worst = worst.max((x - y).norm());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cr(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_node_at_origin_gives_identity_gram_and_krylov() {
        let layout = Layout::new(vec![c(0.0)], vec![4]).unwrap();
        let e = layout.gram().unwrap();
        let v = layout.krylov();
        let id = DMatrix::<Complex64>::identity(4, 4);
        assert!((e - &id).norm() < 1e-14);
        assert!((v - &id).norm() < 1e-14);
    }

    #[test]
    fn simple_nodes_give_classical_pick_kernel() {
        let nodes = vec![c(0.0), cr(0.3, 0.4), cr(0.3, -0.4), c(-0.6)];
        let layout = Layout::new(nodes.clone(), vec![1; 4]).unwrap();
        let e = layout.gram().unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = (c(1.0) - nodes[i] * nodes[j].conj()).inv();
                assert!((e[(i, j)] - want).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn trivial_data_gives_zero_parameters() {
        let cp = CaratheodoryProblem::new(
            vec![c(0.0), cr(0.5, 0.2), cr(0.5, -0.2)],
            vec![vec![c(0.5), c(0.0)], vec![c(0.5)], vec![c(0.5)]],
        )
        .unwrap();
        let ps = build_structure(&cp, StructureOptions::default()).unwrap();
        assert!((&ps.sigma - &ps.gram).norm() < 1e-12);
        let (ok, lmin) = pick_solvable(&ps);
        assert!(ok && lmin > 0.0);
        let up = w_to_u(&ps).unwrap();
        assert!(up.u.norm() < 1e-14 && up.uu.norm() < 1e-14);
        let back = u_to_w(&up.u, &ps).unwrap();
        assert_eq!(back.values, cp.values);
    }

    #[test]
    fn normalize_already_normalized_is_identity() {
        let p = InterpolationProblem::new(vec![Point::Infinity, Point::real(2.0)], vec![vec![c(0.5)], vec![c(0.7)]]).unwrap();
        let (q, rec) = normalize(&p, 0).unwrap();
        assert!(rec.is_identity());
        assert_eq!(p, q);
    }

    #[test]
    fn normalize_single_node_scales_value() {
        let p = InterpolationProblem::new(vec![Point::Infinity], vec![vec![c(1.0)]]).unwrap();
        let (q, rec) = normalize(&p, 0).unwrap();
        assert!(rec.node_map.is_identity());
        assert_eq!(rec.value_scale, 0.5);
        assert_eq!(q.values[0][0], c(0.5));
    }

    #[test]
    fn normalize_rejects_non_positive_pivot_value() {
        let p = InterpolationProblem::new(vec![Point::real(2.0)], vec![vec![c(-1.0)]]).unwrap();
        assert!(matches!(normalize(&p, 0), Err(Error::NotPositiveReal { .. })));
    }

    #[test]
    fn rejects_nodes_inside_disc_and_asymmetric_data() {
        assert!(InterpolationProblem::new(vec![Point::real(0.5)], vec![vec![c(1.0)]]).is_err());
        assert!(InterpolationProblem::new(vec![Point::Finite(cr(1.5, 1.0))], vec![vec![c(1.0)]]).is_err());
    }

    #[test]
    fn truncation_keeps_leading_conditions() {
        let cp = CaratheodoryProblem::new(
            vec![c(0.0), c(0.4)],
            vec![vec![c(0.5), c(0.1), c(0.02)], vec![c(0.6), c(0.1)]],
        )
        .unwrap();
        let t = cp.truncated(3).unwrap();
        assert_eq!(t.multiplicities(), vec![3, 1]);
        assert_eq!(t.n(), 3);
    }

    #[test]
    fn caratheodory_data_matches_closed_form_derivatives() {
        // f(z) = (z + 0.5) / (2 (z + 0.2)), so phi(x) = 1.25 - 0.75 / (1 + 0.2 x)
        let f = RationalFunction::new(Polynomial::from_real(&[1.0, 0.5]), Polynomial::from_real(&[1.0, 0.2]), 0.5).unwrap();
        let nodes = vec![Point::Infinity, Point::real(2.0)];
        let values = vec![
            f.eval_with_derivatives(Point::Infinity, 1).unwrap(),
            f.eval_with_derivatives(Point::real(2.0), 2).unwrap(),
        ];
        let p = InterpolationProblem::new(nodes, values).unwrap();
        let cp = to_caratheodory(&p).unwrap();
        assert!((cp.nodes[1] - c(0.5)).norm() < 1e-15);
        let closed = |x0: f64, k: i32| {
            let base = -0.75 * (-0.2f64).powi(k) / (1.0 + 0.2 * x0).powi(k + 1);
            if k == 0 { 1.25 + base } else { base }
        };
        for (x0, vals) in [(0.0, &cp.values[0]), (0.5, &cp.values[1])] {
            for (k, v) in vals.iter().enumerate() {
                assert!((v - c(closed(x0, k as i32))).norm() < 1e-13, "node {x0} k {k}");
            }
        }
    }

    #[test]
    fn normalization_round_trip_and_function_recovery() {
        let f = RationalFunction::new(
            Polynomial::from_real(&[1.0, 0.3, 0.1]),
            Polynomial::from_real(&[1.0, -0.2, 0.05]),
            0.8,
        )
        .unwrap();
        let nodes = vec![Point::Finite(cr(1.2, 1.1)), Point::real(-3.0), Point::Finite(cr(1.2, -1.1)), Point::Infinity];
        let mults = [2, 3, 2, 1];
        let values: Vec<_> = nodes.iter().zip(mults).map(|(p, m)| f.eval_with_derivatives(*p, m - 1).unwrap()).collect();
        let p = InterpolationProblem::new(nodes, values).unwrap();
        let (q, rec) = normalize(&p, 1).unwrap();
        assert!(q.is_normalized());
        assert_eq!(q.multiplicities(), vec![3, 2, 2, 1]);
        let back = denormalize(&q, &rec);
        for (x, y) in back.values.iter().flatten().zip(p.values.iter().flatten()) {
            assert!((x - y).norm() < 1e-10);
        }
        for (x, y) in back.nodes.iter().zip(&p.nodes) {
            assert!(x.approx_eq(*y, 1e-10));
        }
        // normalized data belongs to scale * f(m^{-1}(w))
        let fq = f.compose_mobius(&rec.node_map.inverse());
        let fq = RationalFunction { scale: fq.scale * rec.value_scale, ..fq };
        assert!(interpolation_residual(&fq, &q).unwrap() < 1e-10);
        let restored = rec.denormalize_function(&fq);
        assert!(interpolation_residual(&restored, &p).unwrap() < 1e-10);
    }

    #[test]
    fn complex_pivot_is_rejected() {
        let p = InterpolationProblem::new(
            vec![Point::Finite(cr(1.5, 1.0)), Point::Finite(cr(1.5, -1.0))],
            vec![vec![cr(1.0, 0.2)], vec![cr(1.0, -0.2)]],
        )
        .unwrap();
        assert!(matches!(normalize(&p, 0), Err(Error::InvalidInput(_))));
    }
}
