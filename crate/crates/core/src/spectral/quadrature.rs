//! Composite Gauss–Legendre rules aligned with the crack partition.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::beam_model::BeamProblem;

/// Gauss–Legendre order per panel.
pub const DEFAULT_ORDER: usize = 16;

/// Panels are split until `λ · (panel length)` is at most this.
pub const MAX_PHASE_PER_PANEL: f64 = 4.0;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let degree = NonZeroUsize::new(n).expect("Gauss-Legendre order must be positive");
    let mut pairs = GaussLegendre::new(degree).into_node_weight_pairs().into_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// One quadrature node, tagged with the subinterval it belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    pub interval: usize,
    pub x: f64,
    pub weight: f64,
}

/// Composite rule: `order` points per panel, panels never straddle a crack.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    order: usize,
    points: Vec<QuadPoint>,
}

impl QuadratureRule {
    /// Rule for integrands oscillating at wavenumber up to `lambda`.
    pub fn new(problem: &BeamProblem, order: usize, lambda: f64) -> Self {
        let base = gauss_legendre(order);
        let mut points = Vec::new();
        for k in 0..problem.interval_count() {
            let (a, b) = problem.interval(k);
            let len = b - a;
            let panels = ((lambda.abs() * len / MAX_PHASE_PER_PANEL).ceil() as usize).max(1);
            let h = len / panels as f64;
            for p in 0..panels {
                let lo = a + p as f64 * h;
                let mid = lo + 0.5 * h;
                for &(t, w) in &base {
                    points.push(QuadPoint {
                        interval: k,
                        x: mid + 0.5 * h * t,
                        weight: 0.5 * h * w,
                    });
                }
            }
        }
        Self { order, points }
    }

    /// Default order, resolved for wavenumbers up to `lambda`.
    pub fn for_lambda(problem: &BeamProblem, lambda: f64) -> Self {
        Self::new(problem, DEFAULT_ORDER, lambda)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn points(&self) -> &[QuadPoint] {
        &self.points
    }

    /// `Σ w f(interval, x)`.
    pub fn integrate<F: Fn(usize, f64) -> f64>(&self, f: F) -> f64 {
        self.points.iter().map(|p| p.weight * f(p.interval, p.x)).sum()
    }
}
