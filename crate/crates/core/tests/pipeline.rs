mod common;

use cee_interp::problem::interpolation_residual;
use cee_interp::solver::{solve_interpolation, SolveOptions};
use common::*;

#[test]
fn golden_example_reproduces_reference_polynomials() {
    let (problem, zeros) = golden_problem();
    let solved = solve_interpolation(&problem, &zeros, &SolveOptions::default()).unwrap();
    let sol = solved.solution();
    let a = sol.a.real_coeffs();
    let b = sol.b.real_coeffs();
    println!("a {a:?}\nb {b:?}");
    for k in 0..8 {
        assert!((a[k] - GOLDEN_A[k]).abs() < 2e-3, "a[{k}]");
        assert!((b[k] - GOLDEN_B[k]).abs() < 2e-3, "b[{k}]");
    }
    assert!(interpolation_residual(&solved.interpolant, &problem).unwrap() < 1e-6);
}

#[test]
fn example_controller_design() {
    use cee_interp::control::*;
    use cee_interp::sphere::Point;
    let plant = example_plant();
    let spec = SensitivitySpec {
        gamma: 1.8,
        constraints: sensitivity_constraints(&plant, 1).unwrap(),
        spectral_zeros: vec![Point::Finite(cx(0.0, 0.9)), Point::Finite(cx(0.0, -0.9)), Point::real(5.0), Point::Infinity],
        map: default_map(),
    };
    let d = design(&plant, &spec, &Default::default()).unwrap();
    assert!(d.internally_stable(), "{:?}", d.closed_loop_poles);
    assert!(d.constraint_residual < 1e-8);
    let num = d.controller.numerator.real_coeffs();
    let den = d.controller.denominator.real_coeffs();
    assert_eq!((num.len(), den.len()), (4, 5), "strictly proper, fourth order");
    // the integrator of the plant stays in the loop, the rest of its denominator is cancelled
    let stable = [10.0, 8.0, 7.0, 0.5];
    for k in 0..4 {
        assert!((num[k] / num[0] - stable[k] / stable[0]).abs() < 1e-8, "{num:?}");
    }
    let s = loop_sensitivity(&plant, &d.controller);
    assert!(peak_gain(&s, &frequency_grid(10_000)) < spec.gamma);
    assert!(s.eval(cx(0.0, 1e-9)).norm() < 1e-6, "integral action");
}
