//! Inner products of `H` and `V`, the energy form, and verification probes.
//!
//! `H = ⊕ L²(l_i)` and `V` is the space of hinged functions that are `H²`
//! on every subinterval, continuous, with free slope jumps at the cracks:
//!
//! ```text
//! (u, v)_H     = Σ ∫_{l_i} u v
//! ((u, v))_V   = Σ ∫_{l_i} u'' v'' + Σ J[u'](x_i) J[v'](x_i)
//! ⟨Au, v⟩_V    = Σ ∫_{l_i} u'' v'' + Σ θ_i⁻¹ J[u'](x_i) J[v'](x_i)
//! ```

pub mod quadrature;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::beam_model::BeamProblem;
use crate::eigen::{Eigenpair, Piecewise, PiecewiseFn};
use crate::error::{BeamError, Result};
pub use quadrature::{QuadPoint, QuadratureRule};

/// Bound for boundary and junction residuals after scaling.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Bound for `|φ'''' − λ⁴φ| / λ⁴`.
pub const ODE_TOL: f64 = 1e-7;
/// Bound on `|G − I|` entrywise.
pub const GRAM_TOL: f64 = 1e-6;
/// Relative bound on `a(φ, φ)/(φ, φ)_H − λ⁴`.
pub const RAYLEIGH_TOL: f64 = 1e-5;

/// Sample points per subinterval used for sup-norms and the ODE residual.
const SAMPLES_PER_INTERVAL: usize = 64;

/// `(u, v)_H`.
pub fn h_inner<U: PiecewiseFn, W: PiecewiseFn>(u: &U, v: &W, rule: &QuadratureRule) -> f64 {
    rule.integrate(|k, x| u.eval(k, x, 0) * v.eval(k, x, 0))
}

/// `J[u'](x_i) = u'(x_i⁺) − u'(x_i⁻)`.
pub fn slope_jump<U: PiecewiseFn>(u: &U, problem: &BeamProblem, i: usize) -> f64 {
    let x = problem.positions()[i];
    u.eval(i + 1, x, 1) - u.eval(i, x, 1)
}

fn curvature_product<U: PiecewiseFn, W: PiecewiseFn>(u: &U, v: &W, rule: &QuadratureRule) -> f64 {
    rule.integrate(|k, x| u.eval(k, x, 2) * v.eval(k, x, 2))
}

/// `((u, v))_V`.
pub fn v_inner<U: PiecewiseFn, W: PiecewiseFn>(u: &U, v: &W, problem: &BeamProblem, rule: &QuadratureRule) -> f64 {
    let jumps: f64 = (0..problem.crack_count())
        .map(|i| slope_jump(u, problem, i) * slope_jump(v, problem, i))
        .sum();
    curvature_product(u, v, rule) + jumps
}

/// `‖u‖_V`.
pub fn v_norm<U: PiecewiseFn>(u: &U, problem: &BeamProblem, rule: &QuadratureRule) -> f64 {
    v_inner(u, u, problem, rule).sqrt()
}

/// `⟨Au, v⟩_V`. Every crack of a [`BeamProblem`] has `θ_i > 0`, so the
/// weights `1/θ_i` are always finite.
pub fn a_form<U: PiecewiseFn, W: PiecewiseFn>(u: &U, v: &W, problem: &BeamProblem, rule: &QuadratureRule) -> f64 {
    let jumps: f64 = problem
        .flexibilities()
        .iter()
        .enumerate()
        .map(|(i, &t)| slope_jump(u, problem, i) * slope_jump(v, problem, i) / t)
        .sum();
    curvature_product(u, v, rule) + jumps
}

/// `min(1, min_i 1/θ_i)`, the term-wise lower bound of `a(u,u)/‖u‖_V²`.
pub fn coercivity_bound(problem: &BeamProblem) -> f64 {
    problem
        .flexibilities()
        .iter()
        .fold(1.0f64, |acc, &t| acc.min(1.0 / t))
}

/// `a(u, u) / ‖u‖_V²`.
pub fn coercivity_probe<U: PiecewiseFn>(u: &U, problem: &BeamProblem, rule: &QuadratureRule) -> Result<f64> {
    let v = v_inner(u, u, problem, rule);
    if v <= 0.0 {
        return Err(BeamError::Domain("coercivity probe needs a nonzero function".into()));
    }
    Ok(a_form(u, u, problem, rule) / v)
}

/// `a(φ, φ) / (φ, φ)_H`.
pub fn rayleigh_quotient<U: PiecewiseFn>(u: &U, problem: &BeamProblem, rule: &QuadratureRule) -> f64 {
    a_form(u, u, problem, rule) / h_inner(u, u, rule)
}

/// Matrix of `(φ_k, φ_j)_H`.
pub fn gram_matrix(pairs: &[Eigenpair], rule: &QuadratureRule) -> DMatrix<f64> {
    let n = pairs.len();
    let mut g = DMatrix::zeros(n, n);
    for k in 0..n {
        for j in k..n {
            let v = h_inner(&pairs[k], &pairs[j], rule);
            g[(k, j)] = v;
            g[(j, k)] = v;
        }
    }
    g
}

/// Quadrature rule that resolves every mode in `pairs`.
pub fn rule_for(problem: &BeamProblem, pairs: &[Eigenpair]) -> QuadratureRule {
    let lam = pairs.iter().map(|p| p.lambda).fold(1.0, f64::max);
    QuadratureRule::for_lambda(problem, lam)
}

/// Sample abscissae per subinterval, ends included.
fn interval_samples(problem: &BeamProblem) -> impl Iterator<Item = (usize, f64)> + '_ {
    (0..problem.interval_count()).flat_map(move |k| {
        let (a, b) = problem.interval(k);
        (0..=SAMPLES_PER_INTERVAL).map(move |j| (k, a + (b - a) * j as f64 / SAMPLES_PER_INTERVAL as f64))
    })
}

/// Largest absolute residual of each hinged and junction condition.
///
/// `moment_*`, `jump_moment`, `jump_shear` and `crack_law` are divided by
/// `max(1, ‖φ''‖_∞)`; `ode_residual` is divided by `λ⁴`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub bc_left: f64,
    pub bc_right: f64,
    pub moment_left: f64,
    pub moment_right: f64,
    pub jump_disp: Vec<f64>,
    pub jump_moment: Vec<f64>,
    pub jump_shear: Vec<f64>,
    pub crack_law: Vec<f64>,
    pub ode_residual: f64,
}

fn vec_max(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

impl ResidualReport {
    /// `(family, value, threshold)` for every family.
    pub fn families(&self) -> Vec<(&'static str, f64, f64)> {
        vec![
            ("bc_left", self.bc_left, RESIDUAL_TOL),
            ("bc_right", self.bc_right, RESIDUAL_TOL),
            ("moment_left", self.moment_left, RESIDUAL_TOL),
            ("moment_right", self.moment_right, RESIDUAL_TOL),
            ("jump_disp", vec_max(&self.jump_disp), RESIDUAL_TOL),
            ("jump_moment", vec_max(&self.jump_moment), RESIDUAL_TOL),
            ("jump_shear", vec_max(&self.jump_shear), RESIDUAL_TOL),
            ("crack_law", vec_max(&self.crack_law), RESIDUAL_TOL),
            ("ode_residual", self.ode_residual, ODE_TOL),
        ]
    }

    /// Names of families above their threshold.
    pub fn failures(&self) -> Vec<&'static str> {
        self.families()
            .into_iter()
            .filter(|(_, v, t)| !(v <= t))
            .map(|(n, _, _)| n)
            .collect()
    }

    pub fn passes(&self) -> bool {
        self.failures().is_empty()
    }

    /// Largest scaled boundary or junction residual.
    pub fn max_junction(&self) -> f64 {
        self.families()
            .iter()
            .filter(|(n, _, _)| *n != "ode_residual")
            .map(|(_, v, _)| *v)
            .fold(0.0, f64::max)
    }
}

/// Residuals of the eigenpair's conditions.
pub fn residual_report(pair: &Eigenpair, problem: &BeamProblem) -> ResidualReport {
    residuals_of(pair, pair.lambda, problem)
}

/// Residuals of any piecewise function against the eigenproblem at `λ`.
pub fn residuals_of<U: PiecewiseFn>(u: &U, lambda: f64, problem: &BeamProblem) -> ResidualReport {
    let last = problem.interval_count() - 1;
    let l4 = lambda.powi(4);
    let mut curv: f64 = 0.0;
    let mut ode: f64 = 0.0;
    for (k, x) in interval_samples(problem) {
        let phi = u.eval(k, x, 0);
        curv = curv.max(u.eval(k, x, 2).abs());
        ode = ode.max((u.eval(k, x, 4) - l4 * phi).abs());
    }
    let scale = curv.max(1.0);
    let mut report = ResidualReport {
        bc_left: u.eval(0, 0.0, 0).abs(),
        bc_right: u.eval(last, PI, 0).abs(),
        moment_left: u.eval(0, 0.0, 2).abs() / scale,
        moment_right: u.eval(last, PI, 2).abs() / scale,
        jump_disp: Vec::new(),
        jump_moment: Vec::new(),
        jump_shear: Vec::new(),
        crack_law: Vec::new(),
        ode_residual: ode / l4,
    };
    for (i, (&x, &theta)) in problem.positions().iter().zip(problem.flexibilities()).enumerate() {
        let jump = |n| u.eval(i + 1, x, n) - u.eval(i, x, n);
        report.jump_disp.push(jump(0).abs());
        report.jump_moment.push(jump(2).abs() / scale);
        report.jump_shear.push(jump(3).abs() / scale);
        report.crack_law.push((jump(1) - theta * u.eval(i + 1, x, 2)).abs() / scale);
    }
    report
}

/// Fixed family of ten functions in `V` used by the norm and coercivity probes.
///
/// Smooth hinged functions, plus piecewise-linear ones built from the jump
/// basis when the problem has cracks.
pub fn probe_family(problem: &BeamProblem) -> Vec<Box<dyn PiecewiseFn + '_>> {
    fn sine(k: f64) -> impl Fn(usize, f64, usize) -> f64 {
        move |_, x, n| k.powi(n as i32) * crate::eigen::sin_deriv(n, k * x)
    }
    fn poly(c: [f64; 5]) -> impl Fn(usize, f64, usize) -> f64 {
        // Σ c_j x^j and its derivatives.
        move |_, x, n| {
            let mut s = 0.0;
            for (j, &cj) in c.iter().enumerate() {
                if j >= n {
                    let mut f = 1.0;
                    for t in 0..n {
                        f *= (j - t) as f64;
                    }
                    s += cj * f * x.powi((j - n) as i32);
                }
            }
            s
        }
    }
    let p2 = PI * PI;
    let mut fam: Vec<Box<dyn PiecewiseFn + '_>> = vec![
        Box::new(Piecewise(sine(1.0))),
        Box::new(Piecewise(sine(2.0))),
        Box::new(Piecewise(sine(3.0))),
        Box::new(Piecewise(sine(4.0))),
        // x(π − x)
        Box::new(Piecewise(poly([0.0, PI, -1.0, 0.0, 0.0]))),
        // x²(π − x)
        Box::new(Piecewise(poly([0.0, 0.0, PI, -1.0, 0.0]))),
        // x(π − x)(π + x) / π²
        Box::new(Piecewise(poly([0.0, 1.0, 0.0, -1.0 / p2, 0.0]))),
        Box::new(Piecewise(move |k, x, n| sine(1.0)(k, x, n) + 0.3 * sine(5.0)(k, x, n))),
    ];
    let hats = move |weights: Vec<f64>| {
        move |k: usize, x: f64, n: usize| -> f64 {
            problem
                .positions()
                .iter()
                .zip(&weights)
                .enumerate()
                .map(|(i, (&xi, &w))| {
                    let slope = if k > i { xi / PI } else { (xi - PI) / PI };
                    let value = if k > i { slope * (x - PI) } else { slope * x };
                    match n {
                        0 => w * value,
                        1 => w * slope,
                        _ => 0.0,
                    }
                })
                .sum()
        }
    };
    let m = problem.crack_count();
    if m == 0 {
        fam.push(Box::new(Piecewise(sine(6.0))));
        fam.push(Box::new(Piecewise(poly([0.0, PI.powi(3), 0.0, 0.0, -1.0]))));
    } else {
        let ones = hats(vec![1.0; m]);
        let ramp = hats((1..=m).map(|i| i as f64).collect());
        fam.push(Box::new(Piecewise(ones)));
        fam.push(Box::new(Piecewise(move |k, x, n| sine(2.0)(k, x, n) + ramp(k, x, n))));
    }
    fam
}

/// Observed norms of the probe family and the smallest `C` with all pairwise
/// ratios of `N₁`, `N₂`, `‖·‖_V` inside `[1/C, C]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEquivalence {
    /// `[N₁, N₂, ‖·‖_V]` per family member.
    pub norms: Vec<[f64; 3]>,
    pub constant: f64,
}

/// `N₁² = |u|² + |u'|² + |u''|²` and `N₂² = |u'|² + |u''|²` against `‖u‖_V`.
pub fn norm_equivalence_probe(problem: &BeamProblem) -> NormEquivalence {
    let rule = QuadratureRule::for_lambda(problem, 6.0);
    let mut norms = Vec::new();
    let mut constant: f64 = 1.0;
    for u in probe_family(problem) {
        let sq = |n: usize| rule.integrate(|k, x| u.eval(k, x, n).powi(2));
        let (h0, h1, h2) = (sq(0), sq(1), sq(2));
        let n1 = (h0 + h1 + h2).sqrt();
        let n2 = (h1 + h2).sqrt();
        let v = v_norm(&u, problem, &rule);
        for (a, b) in [(n1, n2), (n1, v), (n2, v)] {
            constant = constant.max(a / b).max(b / a);
        }
        norms.push([n1, n2, v]);
    }
    NormEquivalence { norms, constant }
}

/// Ratios `a(u,u)/‖u‖_V²` over the probe family.
pub fn coercivity_ratios(problem: &BeamProblem) -> Result<Vec<f64>> {
    let rule = QuadratureRule::for_lambda(problem, 6.0);
    probe_family(problem)
        .iter()
        .map(|u| coercivity_probe(u, problem, &rule))
        .collect()
}

/// Relative `H`-residual of projecting `f` on the first `1..=n` modes.
pub fn projection_residuals<F: PiecewiseFn>(f: &F, pairs: &[Eigenpair], problem: &BeamProblem) -> Vec<f64> {
    let rule = rule_for(problem, pairs);
    let norm2 = h_inner(f, f, &rule);
    let coeffs: Vec<f64> = pairs.iter().map(|p| h_inner(f, p, &rule)).collect();
    (1..=pairs.len())
        .map(|n| {
            let r = rule.integrate(|k, x| {
                let approx: f64 = pairs[..n].iter().zip(&coeffs).map(|(p, c)| c * p.eval(k, x, 0)).sum();
                (f.eval(k, x, 0) - approx).powi(2)
            });
            (r / norm2).sqrt()
        })
        .collect()
}

/// Completeness probe with `f(x) = x(π − x)`.
pub fn completeness_probe(pairs: &[Eigenpair], problem: &BeamProblem) -> Vec<f64> {
    let f = Piecewise(|_, x: f64, n| match n {
        0 => x * (PI - x),
        1 => PI - 2.0 * x,
        2 => -2.0,
        _ => 0.0,
    });
    projection_residuals(&f, pairs, problem)
}

/// `(max |φ'|, ‖φ‖_V)` with `φ'` sampled on a uniform grid of `points`
/// abscissae, taking both one-sided limits at cracks.
pub fn embedding_probe(pair: &Eigenpair, problem: &BeamProblem, points: usize) -> (f64, f64) {
    let rule = QuadratureRule::for_lambda(problem, pair.lambda);
    let mut sup: f64 = 0.0;
    for j in 0..points {
        let x = PI * j as f64 / (points - 1) as f64;
        let k = problem.interval_of(x).min(problem.interval_count() - 1);
        sup = sup.max(pair.eval(k, x, 1).abs());
    }
    for (i, &x) in problem.positions().iter().enumerate() {
        sup = sup.max(pair.eval(i, x, 1).abs()).max(pair.eval(i + 1, x, 1).abs());
    }
    (sup, v_norm(pair, problem, &rule))
}
