//! End-to-end pipeline: normalize, map to the disc, build the Pick structure,
//! derive `(u, U)`, trace the homotopy and map the interpolant back.

use num_complex::Complex64;

use crate::cee::{CeeParameters, CeeSolution};
use crate::error::{Error, Result};
use crate::homotopy::{continue_path, HomotopyOptions, HomotopyTrace, ReducedSystem};
use crate::poly::{Polynomial, RationalFunction};
use crate::problem::{
    build_structure, normalize, pick_solvable, to_caratheodory, w_to_u, CaratheodoryProblem, InterpolationProblem,
    PickStructure, StructureOptions, TransformRecord, UParameters,
};
use crate::sphere::Point;

#[derive(Debug, Clone, Copy, Default)]
pub struct SolveOptions {
    /// Node moved to infinity; `None` picks one with `default_pivot`.
    pub pivot: Option<usize>,
    pub homotopy: HomotopyOptions,
    pub structure: StructureOptions,
}

/// The node at infinity if present, otherwise the real node of largest multiplicity.
pub fn default_pivot(problem: &InterpolationProblem) -> Result<usize> {
    if let Some(i) = problem.nodes.iter().position(|p| p.is_infinite()) {
        return Ok(i);
    }
    let mults = problem.multiplicities();
    problem
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, p)| p.finite().is_some_and(|z| z.im == 0.0))
        .max_by(|(i, _), (j, _)| mults[*i].cmp(&mults[*j]).then(j.cmp(i)))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::InvalidInput("no node at infinity and no real node to use as pivot".into()))
}

/// Monic real `σ` from its roots; no roots means `σ = z^n`.
pub fn sigma_from_zeros(zeros: &[Complex64], n: usize) -> Result<Polynomial> {
    if zeros.is_empty() {
        return Ok(Polynomial::monomial(n));
    }
    if zeros.len() != n {
        return Err(Error::InvalidInput(format!("expected {n} spectral zeros, got {}", zeros.len())));
    }
    if let Some(z) = zeros.iter().find(|z| z.norm() >= 1.0) {
        return Err(Error::InvalidInput(format!("spectral zero {z} is not inside the unit disc")));
    }
    Polynomial::from_roots(zeros, true)
}

#[derive(Debug, Clone)]
pub struct DiscSolved {
    pub structure: PickStructure,
    pub pick_min_eigenvalue: f64,
    pub uparams: UParameters,
    pub params: CeeParameters,
    pub solution: CeeSolution,
    pub trace: HomotopyTrace,
}

/// Solves a Carathéodory problem with spectral zeros `sigma` (roots in the `z = 1/x` plane).
pub fn solve_caratheodory(cp: &CaratheodoryProblem, sigma: Polynomial, opts: &SolveOptions) -> Result<DiscSolved> {
    let structure = build_structure(cp, opts.structure)?;
    let (ok, lmin) = pick_solvable(&structure);
    if !ok {
        return Err(Error::PickInfeasible { min_eigenvalue: lmin });
    }
    let uparams = w_to_u(&structure)?;
    let params = CeeParameters::new(sigma, uparams.u.clone(), uparams.uu.clone())?;
    let sys = ReducedSystem::new(params.clone());
    let (p, trace) = continue_path(&sys, &opts.homotopy)?;
    let solution = CeeSolution::from_p(&p, &params)?;
    Ok(DiscSolved { structure, pick_min_eigenvalue: lmin, uparams, params, solution, trace })
}

#[derive(Debug, Clone)]
pub struct Solved {
    pub normalized: InterpolationProblem,
    pub record: TransformRecord,
    pub caratheodory: CaratheodoryProblem,
    pub disc: DiscSolved,
    /// Interpolant in the coordinates of the original problem.
    pub interpolant: RationalFunction,
}

impl Solved {
    pub fn solution(&self) -> &CeeSolution {
        &self.disc.solution
    }
}

/// Solves an exterior-domain problem. `spectral_zeros` are roots of `σ` in the original
/// coordinates (inside the unit disc); empty means the maximum-entropy choice `σ = z^n`
/// in normalized coordinates.
pub fn solve_interpolation(problem: &InterpolationProblem, spectral_zeros: &[Complex64], opts: &SolveOptions) -> Result<Solved> {
    let pivot = match opts.pivot {
        Some(p) => p,
        None => default_pivot(problem)?,
    };
    let (normalized, record) = normalize(problem, pivot)?;
    let mapped: Vec<Complex64> = spectral_zeros.iter().map(|&r| record.map_spectral_zero(r)).collect();
    let sigma = sigma_from_zeros(&mapped, normalized.n())?;
    let caratheodory = to_caratheodory(&normalized)?;
    let disc = solve_caratheodory(&caratheodory, sigma, opts)?;
    let interpolant = record.denormalize_function(&disc.solution.interpolant());
    Ok(Solved { normalized, record, caratheodory, disc, interpolant })
}

/// Nodes of a problem given directly on the disc, as exterior points for evaluation.
pub fn exterior_nodes(cp: &CaratheodoryProblem) -> Vec<Point> {
    cp.nodes
        .iter()
        .map(|&z| if z.norm() == 0.0 { Point::Infinity } else { Point::Finite(z.inv()) })
        .collect()
}
