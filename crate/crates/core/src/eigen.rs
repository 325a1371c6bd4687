//! Eigenpairs, their per-interval analytic form, and spectra.

use serde::{Deserialize, Serialize};

use crate::beam_model::BeamProblem;
use crate::roots::Diagnostic;
use crate::shifrin::ShifrinForm;
use crate::spectral::quadrature::QuadratureRule;

/// A function given piecewise on the crack partition.
///
/// `eval(k, x, n)` is the `n`-th derivative of the branch on subinterval `k`
/// at `x`; at the ends of the subinterval it is the one-sided limit from inside.
pub trait PiecewiseFn {
    fn eval(&self, interval: usize, x: f64, order: usize) -> f64;
}

impl<T: PiecewiseFn + ?Sized> PiecewiseFn for &T {
    fn eval(&self, interval: usize, x: f64, order: usize) -> f64 {
        (**self).eval(interval, x, order)
    }
}

impl<T: PiecewiseFn + ?Sized> PiecewiseFn for Box<T> {
    fn eval(&self, interval: usize, x: f64, order: usize) -> f64 {
        (**self).eval(interval, x, order)
    }
}

/// Wraps `f(x, n)`, the same smooth function on every subinterval.
pub struct Smooth<F>(pub F);

impl<F: Fn(f64, usize) -> f64> PiecewiseFn for Smooth<F> {
    fn eval(&self, _interval: usize, x: f64, order: usize) -> f64 {
        (self.0)(x, order)
    }
}

/// Wraps `f(k, x, n)`.
pub struct Piecewise<F>(pub F);

impl<F: Fn(usize, f64, usize) -> f64> PiecewiseFn for Piecewise<F> {
    fn eval(&self, interval: usize, x: f64, order: usize) -> f64 {
        (self.0)(interval, x, order)
    }
}

/// `d^n/dz^n sin z`.
pub(crate) fn sin_deriv(n: usize, z: f64) -> f64 {
    match n % 4 {
        0 => z.sin(),
        1 => z.cos(),
        2 => -z.sin(),
        _ => -z.cos(),
    }
}

/// `d^n/dz^n cos z`.
pub(crate) fn cos_deriv(n: usize, z: f64) -> f64 {
    match n % 4 {
        0 => z.cos(),
        1 => -z.sin(),
        2 => -z.cos(),
        _ => z.sin(),
    }
}

/// Solution of `w'''' = λ⁴ w` on one subinterval `[a, a + ℓ]`, stored as
/// `s sin λξ + c cos λξ + p e^{-λξ} + q e^{λ(ξ-ℓ)}` with `ξ = x − a`.
///
/// The two exponentials are each bounded by one on the interval, so evaluation
/// does not cancel large terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalModes {
    pub sin: f64,
    pub cos: f64,
    pub decay: f64,
    pub growth: f64,
}

/// Per-interval analytic representation of an eigenfunction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseForm {
    lambda: f64,
    breakpoints: Vec<f64>,
    pieces: Vec<LocalModes>,
}

impl PiecewiseForm {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[LocalModes] {
        &self.pieces
    }

    /// Builds the form from local coefficients `[A_i, B_i, C_i, D_i]` of
    /// `sin, cos, sinh, cosh` of `λ(x − x_{i−1})`.
    pub fn from_local_coefficients(lambda: f64, breakpoints: Vec<f64>, coeffs: &[[f64; 4]]) -> Self {
        assert_eq!(breakpoints.len(), coeffs.len() + 1);
        let pieces = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let len = breakpoints[k + 1] - breakpoints[k];
                LocalModes {
                    sin: c[0],
                    cos: c[1],
                    decay: 0.5 * (c[3] - c[2]),
                    growth: 0.5 * (c[2] + c[3]) * (lambda * len).exp(),
                }
            })
            .collect();
        Self {
            lambda,
            breakpoints,
            pieces,
        }
    }

    /// Projects a function that solves `w'''' = λ⁴ w` on every subinterval onto
    /// the local basis, using one-sided values and derivatives at both ends.
    pub fn from_fn<F: PiecewiseFn>(lambda: f64, problem: &BeamProblem, f: &F) -> Self {
        let breakpoints = problem.breakpoints();
        let l2 = lambda * lambda;
        let pieces = (0..problem.interval_count())
            .map(|k| {
                let (a, b) = (breakpoints[k], breakpoints[k + 1]);
                let st = |x: f64| -> [f64; 4] {
                    [f.eval(k, x, 0), f.eval(k, x, 1), f.eval(k, x, 2), f.eval(k, x, 3)]
                };
                let sa = st(a);
                let sb = st(b);
                // Trigonometric part (w − w''/λ²)/2, hyperbolic part (w + w''/λ²)/2.
                let t0 = 0.5 * (sa[0] - sa[2] / l2);
                let t1 = 0.5 * (sa[1] - sa[3] / l2);
                let h0a = 0.5 * (sa[0] + sa[2] / l2);
                let h1a = 0.5 * (sa[1] + sa[3] / l2);
                let h0b = 0.5 * (sb[0] + sb[2] / l2);
                let h1b = 0.5 * (sb[1] + sb[3] / l2);
                LocalModes {
                    sin: t1 / lambda,
                    cos: t0,
                    decay: 0.5 * (h0a - h1a / lambda),
                    growth: 0.5 * (h0b + h1b / lambda),
                }
            })
            .collect();
        Self {
            lambda,
            breakpoints,
            pieces,
        }
    }

    /// Local coefficients `[A_k, B_k, C_k, D_k]` of `sin, cos, sinh, cosh` of `λ(x − x_{k−1})`.
    pub fn local_coefficients(&self, k: usize) -> [f64; 4] {
        let p = &self.pieces[k];
        let len = self.breakpoints[k + 1] - self.breakpoints[k];
        let g = p.growth * (-self.lambda * len).exp();
        [p.sin, p.cos, g - p.decay, g + p.decay]
    }

    pub(crate) fn scale(&mut self, factor: f64) {
        for p in &mut self.pieces {
            p.sin *= factor;
            p.cos *= factor;
            p.decay *= factor;
            p.growth *= factor;
        }
    }
}

impl PiecewiseFn for PiecewiseForm {
    fn eval(&self, interval: usize, x: f64, order: usize) -> f64 {
        let lam = self.lambda;
        let a = self.breakpoints[interval];
        let len = self.breakpoints[interval + 1] - a;
        let xi = x - a;
        let p = &self.pieces[interval];
        let ln = lam.powi(order as i32);
        let sign = if order.is_multiple_of(2) { 1.0 } else { -1.0 };
        ln * (p.sin * sin_deriv(order, lam * xi)
            + p.cos * cos_deriv(order, lam * xi)
            + sign * p.decay * (-lam * xi).exp()
            + p.growth * (lam * (xi - len)).exp())
    }
}

/// Which method produced an eigenpair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Shifrin,
    Transition,
}

impl SolverKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverKind::Shifrin => "shifrin",
            SolverKind::Transition => "transition",
        }
    }
}

/// Scaling applied when an eigenfunction was normalised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    /// `|φ|_H` before scaling.
    pub raw_norm: f64,
    /// Signed factor applied so that `|φ|_H = 1` and `φ'(0⁺) > 0`.
    pub factor: f64,
}

/// Eigenvalue `λ` (frequency parameter `λ⁴`) with its eigenfunction.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub lambda: f64,
    pub solver: SolverKind,
    pub problem: BeamProblem,
    pub piecewise: PiecewiseForm,
    pub shifrin: Option<ShifrinForm>,
    pub normalization: Normalization,
}

impl Eigenpair {
    /// Normalises `|φ|_H = 1` with `φ'(0⁺) > 0` and assembles the pair.
    pub(crate) fn normalized(
        problem: &BeamProblem,
        solver: SolverKind,
        mut piecewise: PiecewiseForm,
        mut shifrin: Option<ShifrinForm>,
    ) -> Self {
        let lambda = piecewise.lambda();
        let rule = QuadratureRule::for_lambda(problem, lambda);
        let raw_norm = rule
            .integrate(|k, x| piecewise.eval(k, x, 0).powi(2))
            .sqrt();
        let slope = piecewise.eval(0, 0.0, 1);
        let sign = if slope < 0.0 { -1.0 } else { 1.0 };
        let factor = sign / raw_norm;
        piecewise.scale(factor);
        if let Some(form) = shifrin.as_mut() {
            form.scale(factor);
        }
        Self {
            lambda,
            solver,
            problem: problem.clone(),
            piecewise,
            shifrin,
            normalization: Normalization { raw_norm, factor },
        }
    }

    /// `λ⁴`, the eigenvalue of the operator.
    pub fn lambda4(&self) -> f64 {
        self.lambda.powi(4)
    }

    /// `φ^(n)(x)`, right-continuous at the cracks.
    pub fn value(&self, x: f64, order: usize) -> f64 {
        self.piecewise.eval(self.problem.interval_of(x), x, order)
    }
}

impl PiecewiseFn for Eigenpair {
    fn eval(&self, interval: usize, x: f64, order: usize) -> f64 {
        self.piecewise.eval(interval, x, order)
    }
}

/// Ordered eigenpairs from one solver, with scan diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub solver: SolverKind,
    pub pairs: Vec<Eigenpair>,
    pub diagnostics: Vec<Diagnostic>,
}

impl Spectrum {
    pub fn lambdas(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }
}
