//! Transition-matrix method: an independent solver used as a cross-check.
//!
//! On each subinterval the solution is written in local coordinates
//! `ξ = x − x_{k−1}` as `A sin λξ + B cos λξ + C sinh λξ + D cosh λξ`.
//! Coefficients are carried across each crack by a 4×4 matrix that enforces
//! the junction conditions, and the hinged conditions at `π` leave a 2×2
//! system in the free start coefficients `(A₁, C₁)`.

use nalgebra::{DMatrix, Matrix2, Matrix4, Vector4};

use crate::beam_model::BeamProblem;
use crate::eigen::{Eigenpair, PiecewiseForm, SolverKind, Spectrum};
use crate::error::{BeamError, Result};
use crate::linalg::{equilibrated_det, nullspace_vector};
use crate::roots::{find_roots, RootScan, ScanGrid};

/// Coefficients of `sin, cos, sinh, cosh` of `λ(x − x_{k−1})` on subinterval `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalSolution {
    pub interval: usize,
    pub sin: f64,
    pub cos: f64,
    pub sinh: f64,
    pub cosh: f64,
}

impl LocalSolution {
    pub fn new(interval: usize, coeffs: [f64; 4]) -> Self {
        Self {
            interval,
            sin: coeffs[0],
            cos: coeffs[1],
            sinh: coeffs[2],
            cosh: coeffs[3],
        }
    }

    pub fn coefficients(&self) -> [f64; 4] {
        [self.sin, self.cos, self.sinh, self.cosh]
    }

    /// `[w, w', w'', w''']` at local coordinate `xi`.
    pub fn state_at(&self, lambda: f64, xi: f64) -> [f64; 4] {
        let s = state_matrix(lambda, xi) * Vector4::from(self.coefficients());
        [s[0], s[1], s[2], s[3]]
    }

    /// Inverts the state map at local coordinate zero.
    pub fn from_state(interval: usize, lambda: f64, state: [f64; 4]) -> Self {
        let c = state_map_inverse(lambda) * Vector4::from(state);
        Self::new(interval, [c[0], c[1], c[2], c[3]])
    }
}

/// Rows `w, w', w'', w'''` at `ξ`; columns `A, B, C, D`.
#[rustfmt::skip]
pub fn state_matrix(lambda: f64, xi: f64) -> Matrix4<f64> {
    let z = lambda * xi;
    let (s, c) = z.sin_cos();
    let (sh, ch) = (z.sinh(), z.cosh());
    let (l1, l2, l3) = (lambda, lambda * lambda, lambda.powi(3));
    Matrix4::new(
        s, c, sh, ch,
        l1 * c, -l1 * s, l1 * ch, l1 * sh,
        -l2 * s, -l2 * c, l2 * sh, l2 * ch,
        -l3 * c, l3 * s, l3 * ch, l3 * sh,
    )
}

/// Inverse of [`state_matrix`] at `ξ = 0`, in closed form.
#[rustfmt::skip]
pub fn state_map_inverse(lambda: f64) -> Matrix4<f64> {
    let (l1, l2, l3) = (lambda, lambda * lambda, lambda.powi(3));
    Matrix4::new(
        0.0, 0.5 / l1, 0.0, -0.5 / l3,
        0.5, 0.0, -0.5 / l2, 0.0,
        0.0, 0.5 / l1, 0.0, 0.5 / l3,
        0.5, 0.0, 0.5 / l2, 0.0,
    )
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(BeamError::Domain(format!("lambda must be positive, got {lambda}")))
    }
}

fn transition_unchecked(problem: &BeamProblem, i: usize, lambda: f64) -> Matrix4<f64> {
    let (a, b) = problem.interval(i);
    let mut jump = Matrix4::identity();
    jump[(1, 2)] = problem.flexibilities()[i];
    state_map_inverse(lambda) * jump * state_matrix(lambda, b - a)
}

/// Carries local coefficients from subinterval `i` to `i + 1` across crack `i`
/// (0-based): `w, w'', w'''` continuous, `w'` jumps by `θ_i w''`.
pub fn transition_matrix(problem: &BeamProblem, i: usize, lambda: f64) -> Result<Matrix4<f64>> {
    if i >= problem.crack_count() {
        return Err(BeamError::IndexOutOfRange {
            index: i,
            count: problem.crack_count(),
        });
    }
    check_lambda(lambda)?;
    Ok(transition_unchecked(problem, i, lambda))
}

/// `T^(m) ⋯ T^(1)`, rescaled by a positive factor after every step.
fn chain(problem: &BeamProblem, lambda: f64) -> Matrix4<f64> {
    let mut p = Matrix4::identity();
    for i in 0..problem.crack_count() {
        p = transition_unchecked(problem, i, lambda) * p;
        let s = p.amax();
        if s > 0.0 && s.is_finite() {
            p /= s;
        }
    }
    p
}

/// 2×2 map from `(A₁, C₁)` to `(w(π), w''(π))`, up to a positive factor.
fn reduced_system(problem: &BeamProblem, lambda: f64) -> Matrix2<f64> {
    let last = problem.interval_count() - 1;
    let (a, b) = problem.interval(last);
    let end = state_matrix(lambda, b - a) * chain(problem, lambda);
    Matrix2::new(end[(0, 0)], end[(0, 2)], end[(2, 0)], end[(2, 2)])
}

/// Row-equilibrated determinant of the reduced boundary system.
pub fn boundary_det(problem: &BeamProblem, lambda: f64) -> f64 {
    let r = reduced_system(problem, lambda);
    equilibrated_det(DMatrix::from_column_slice(2, 2, r.as_slice())).value
}

/// First `count` roots of [`boundary_det`].
pub fn find_eigenvalues(problem: &BeamProblem, count: usize, lambda_max: Option<f64>) -> Result<RootScan> {
    let mut grid = ScanGrid::default_for(count, problem.crack_count());
    if let Some(l) = lambda_max {
        grid = ScanGrid::new(grid.lambda_min, l, grid.step)?;
    }
    find_roots(|l| boundary_det(problem, l), count, &grid)
}

/// Local solutions on every subinterval from the start vector `[A₁, 0, C₁, 0]`.
pub fn local_solutions(problem: &BeamProblem, lambda: f64, a1: f64, c1: f64) -> Vec<LocalSolution> {
    let mut coeffs = Vector4::new(a1, 0.0, c1, 0.0);
    let mut out = Vec::with_capacity(problem.interval_count());
    for k in 0..problem.interval_count() {
        out.push(LocalSolution::new(k, [coeffs[0], coeffs[1], coeffs[2], coeffs[3]]));
        if k < problem.crack_count() {
            coeffs = transition_unchecked(problem, k, lambda) * coeffs;
        }
    }
    out
}

/// Eigenpair at a root of [`boundary_det`], normalised like the Shifrin solver.
pub fn eigenpair_at(problem: &BeamProblem, lambda: f64) -> Result<Eigenpair> {
    check_lambda(lambda)?;
    let r = reduced_system(problem, lambda);
    let v = nullspace_vector(&DMatrix::from_column_slice(2, 2, r.as_slice()), lambda)?;
    let locals = local_solutions(problem, lambda, v[0], v[1]);
    let coeffs: Vec<[f64; 4]> = locals.iter().map(LocalSolution::coefficients).collect();
    let piecewise = PiecewiseForm::from_local_coefficients(lambda, problem.breakpoints(), &coeffs);
    Ok(Eigenpair::normalized(problem, SolverKind::Transition, piecewise, None))
}

/// First `count` eigenpairs by the transition-matrix method.
pub fn oracle_eigenpairs(problem: &BeamProblem, count: usize, lambda_max: Option<f64>) -> Result<Spectrum> {
    let scan = find_eigenvalues(problem, count, lambda_max)?;
    let pairs = scan
        .roots
        .iter()
        .map(|&l| eigenpair_at(problem, l))
        .collect::<Result<Vec<_>>>()?;
    Ok(Spectrum {
        solver: SolverKind::Transition,
        pairs,
        diagnostics: scan.diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::PiecewiseFn;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn state_map_roundtrip() {
        for lam in [0.3, 1.0, 4.7] {
            let local = LocalSolution::new(0, [0.7, -1.2, 0.05, 2.0]);
            let back = LocalSolution::from_state(0, lam, local.state_at(lam, 0.0));
            for (a, b) in local.coefficients().iter().zip(back.coefficients()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let prod = state_map_inverse(2.3) * state_matrix(2.3, 0.0);
        assert!((prod - Matrix4::identity()).amax() < 1e-14);
    }

    #[test]
    fn zero_flexibility_joint_reanchors() {
        // θ = 0 joint: sin λx on [0, x₁] continues as sin λx on [x₁, π].
        let p = BeamProblem::new([(1.3, 1.0)]).unwrap();
        let lam = 1.7;
        let (a, b) = p.interval(0);
        let t = state_map_inverse(lam) * state_matrix(lam, b - a);
        let next = t * Vector4::new(1.0, 0.0, 0.0, 0.0);
        let z = lam * 1.3;
        let expected = [z.cos(), z.sin(), 0.0, 0.0];
        for j in 0..4 {
            assert!((next[j] - expected[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn node_crack_propagates_sine() {
        for theta in [0.1, 1.0, 10.0] {
            let p = BeamProblem::new([(FRAC_PI_2, theta)]).unwrap();
            let t = transition_matrix(&p, 0, 2.0).unwrap();
            let next = t * Vector4::new(1.0, 0.0, 0.0, 0.0);
            // sin 2x = sin(2(x − π/2) + π) = −sin 2ξ
            let expected = [-1.0, 0.0, 0.0, 0.0];
            for j in 0..4 {
                assert!((next[j] - expected[j]).abs() < 1e-12, "{next}");
            }
            assert!(boundary_det(&p, 2.0).abs() < 1e-12);
        }
        let p = BeamProblem::new([(FRAC_PI_2, 0.5)]).unwrap();
        assert!(transition_matrix(&p, 1, 2.0).is_err());
    }

    #[test]
    fn uniform_roots() {
        let p = BeamProblem::uniform();
        let scan = find_eigenvalues(&p, 10, Some(10.5)).unwrap();
        for (k, r) in scan.roots.iter().enumerate() {
            assert!((r - (k + 1) as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn uniform_modes_are_sines() {
        let p = BeamProblem::uniform();
        let spec = oracle_eigenpairs(&p, 3, None).unwrap();
        let amp = (2.0 / PI).sqrt();
        for (k, pair) in spec.pairs.iter().enumerate() {
            let kf = (k + 1) as f64;
            for x in [0.4, 1.1, 2.6] {
                assert!((pair.value(x, 0) - amp * (kf * x).sin()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn junction_conditions_hold_after_chaining() {
        let p = BeamProblem::new([(1.0, 0.3), (2.2, 0.7)]).unwrap();
        let spec = oracle_eigenpairs(&p, 3, None).unwrap();
        for pair in &spec.pairs {
            for (j, &x) in p.positions().iter().enumerate() {
                let l = |n| pair.piecewise.eval(j, x, n);
                let r = |n| pair.piecewise.eval(j + 1, x, n);
                let scale = l(2).abs().max(1.0);
                assert!((l(0) - r(0)).abs() < 1e-10);
                assert!((l(2) - r(2)).abs() < 1e-10 * scale);
                assert!((l(3) - r(3)).abs() < 1e-10 * scale * pair.lambda);
                assert!((r(1) - l(1) - p.flexibilities()[j] * r(2)).abs() < 1e-10 * scale);
            }
        }
    }
}
