//! Modified Shifrin's method for hinged beams with rotational-spring cracks.
//!
//! An eigenfunction is split as `φ = φ_s + φ_l`. The piecewise-linear part
//! `φ_l = Σ Δ_i w_i` carries every slope jump `Δ_i = J[φ'](x_i)`, and the
//! smooth part solves `φ_s'''' = λ⁴ φ_s + λ⁴ φ_l` on the whole of `(0, π)`:
//!
//! ```text
//! φ_s(x) = A cos λx + B sin λx + C cosh λx + D sinh λx + (λ/2) Σ Δ_i M_i(x; λ)
//! M_i(x; λ) = ∫_0^x (sinh λ(x−s) − sin λ(x−s)) w_i(s) ds
//! ```
//!
//! The crack laws `Δ_j = θ_j φ_s''(x_j)` and the four hinged end conditions
//! give the `(m+4) × (m+4)` system `U(λ) x̄ = 0` with `x̄ = [Δ, A, B, C, D]`.
//!
//! Written out literally, `U(λ)` carries entries of size `cosh λπ` next to
//! entries of size one, and the combination that decides `det U = 0` is lost
//! to rounding once `e^{λπ}` approaches `1/ε`. [`char_det`] and
//! [`solve_nullspace`] therefore work on an equivalent system: the
//! hyperbolic parts of `C`, `D` and every `M_i` are regrouped into bounded
//! functions (`e^{−λx}`, `e^{−λ(π−x)}` and a hinged Green's kernel
//! `−sinh(λ x_<) sinh(λ(π − x_>)) / sinh λπ`). The change of unknowns is
//! block triangular with determinant `2 e^{−λπ} > 0`, so roots and signs are
//! those of `det U`. [`assemble_system`] still returns the literal matrix.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::beam_model::BeamProblem;
use crate::eigen::{cos_deriv, sin_deriv, Eigenpair, PiecewiseForm, SolverKind, Spectrum};
use crate::error::{BeamError, Result};
use crate::linalg::{equilibrated_det, nullspace_vector, Determinant};
use crate::roots::{find_roots, Diagnostic, RootScan, ScanGrid};

/// Side of a breakpoint for one-sided limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Hat-like basis function `w_i` of the piecewise-linear space.
///
/// Linear with slope `(x_i − π)/π` on `[0, x_i]` and `x_i/π` on `[x_i, π]`,
/// so `w_i(0) = w_i(π) = 0` and `J[w_i'](x_i) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpBasis {
    pub index: usize,
    pub breakpoint: f64,
}

impl JumpBasis {
    pub fn new(problem: &BeamProblem, index: usize) -> Result<Self> {
        let breakpoint = *problem
            .positions()
            .get(index)
            .ok_or(BeamError::IndexOutOfRange {
                index,
                count: problem.crack_count(),
            })?;
        Ok(Self { index, breakpoint })
    }

    pub fn left_slope(&self) -> f64 {
        (self.breakpoint - PI) / PI
    }

    pub fn right_slope(&self) -> f64 {
        self.breakpoint / PI
    }

    pub fn value(&self, x: f64) -> f64 {
        if x <= self.breakpoint {
            self.left_slope() * x
        } else {
            self.right_slope() * (x - PI)
        }
    }

    /// `w_i'(x)`; at the breakpoint `side` picks the one-sided limit.
    pub fn slope(&self, x: f64, side: Side) -> f64 {
        if x < self.breakpoint || (x == self.breakpoint && side == Side::Left) {
            self.left_slope()
        } else {
            self.right_slope()
        }
    }
}

fn check_x(x: f64) -> Result<()> {
    if x.is_finite() && (0.0..=PI).contains(&x) {
        Ok(())
    } else {
        Err(BeamError::Domain(format!("x = {x} outside [0, pi]")))
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(BeamError::Domain(format!("lambda must be positive, got {lambda}")))
    }
}

/// `w_i(x)`, with `i` 0-based.
pub fn basis_eval(problem: &BeamProblem, i: usize, x: f64) -> Result<f64> {
    let basis = JumpBasis::new(problem, i)?;
    check_x(x)?;
    Ok(basis.value(x))
}

/// `2 Σ_j z^{r+4j} / (r+4j)!`.
fn quartic_series(r: u32, z: f64) -> f64 {
    let mut term = 1.0;
    for k in 1..=r {
        term *= z / k as f64;
    }
    let mut sum = term;
    let z4 = z.powi(4);
    let mut k = r;
    loop {
        term *= z4 / (((k + 1) * (k + 2) * (k + 3) * (k + 4)) as f64);
        k += 4;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() || k > 200 {
            break;
        }
    }
    2.0 * sum
}

/// `d^n/dy^n P(y)` where `P(y) = ∫_0^y (sinh λ(y−s) − sin λ(y−s)) s ds`
/// `= (sinh λy + sin λy − 2λy) / λ²`, for `y ≥ 0` and `n ≤ 4`.
fn ramp_response(order: u32, lambda: f64, y: f64) -> f64 {
    let z = lambda * y;
    let r = 5 - order;
    let s = if z < 1.0 {
        quartic_series(r, z)
    } else {
        match r {
            5 => z.sinh() + z.sin() - 2.0 * z,
            4 => z.cosh() + z.cos() - 2.0,
            3 => z.sinh() - z.sin(),
            2 => z.cosh() - z.cos(),
            _ => z.sinh() + z.sin(),
        }
    };
    lambda.powi(order as i32 - 2) * s
}

/// `d^n/dx^n M_i(x; λ)` for `n ≤ 3`, from closed-form antiderivatives.
///
/// Writing `w_i(s) = a_i s + (s − x_i)₊` gives
/// `M_i(x) = a_i P(x) + P(x − x_i)₊`. Because `P` and its first three
/// derivatives vanish at zero the same split holds for `M_i', M_i'', M_i'''`.
pub fn kernel_m(problem: &BeamProblem, i: usize, x: f64, lambda: f64, order: u32) -> Result<f64> {
    let basis = JumpBasis::new(problem, i)?;
    check_x(x)?;
    check_lambda(lambda)?;
    if order > 3 {
        return Err(BeamError::Domain(format!("kernel derivative order {order} > 3")));
    }
    let mut v = basis.left_slope() * ramp_response(order, lambda, x);
    if x > basis.breakpoint {
        v += ramp_response(order, lambda, x - basis.breakpoint);
    }
    Ok(v)
}

/// Dense `U(λ)` exactly as the crack laws and hinged end conditions read.
///
/// Rows: `m` crack rows, then `φ_s(0), φ_s''(0), φ_s(π), φ_s''(π)`.
/// Columns: `Δ_1 … Δ_m, A, B, C, D`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrix {
    pub lambda: f64,
    pub matrix: DMatrix<f64>,
    crack_count: usize,
}

impl SystemMatrix {
    pub fn crack_count(&self) -> usize {
        self.crack_count
    }

    /// `U(λ) x̄`.
    pub fn residual(&self, unknowns: &DVector<f64>) -> DVector<f64> {
        &self.matrix * unknowns
    }
}

/// Literal system matrix at `λ`.
pub fn assemble_system(problem: &BeamProblem, lambda: f64) -> Result<SystemMatrix> {
    check_lambda(lambda)?;
    let m = problem.crack_count();
    let n = m + 4;
    let l2 = lambda * lambda;
    let half = 0.5 * lambda;
    let mut u = DMatrix::zeros(n, n);
    let xs = problem.positions();
    let theta = problem.flexibilities();

    let m_val = |i: usize, x: f64, order: u32| kernel_m(problem, i, x, lambda, order);

    for j in 0..m {
        let xj = xs[j];
        for i in 0..m {
            u[(j, i)] = -theta[j] * half * m_val(i, xj, 2)?;
        }
        u[(j, j)] += 1.0;
        let z = lambda * xj;
        u[(j, m)] = theta[j] * l2 * z.cos();
        u[(j, m + 1)] = theta[j] * l2 * z.sin();
        u[(j, m + 2)] = -theta[j] * l2 * z.cosh();
        u[(j, m + 3)] = -theta[j] * l2 * z.sinh();
    }

    // M_i(0) = M_i''(0) = 0.
    u[(m, m)] = 1.0;
    u[(m, m + 2)] = 1.0;
    u[(m + 1, m)] = -l2;
    u[(m + 1, m + 2)] = l2;

    let z = lambda * PI;
    for i in 0..m {
        u[(m + 2, i)] = half * m_val(i, PI, 0)?;
        u[(m + 3, i)] = half * m_val(i, PI, 2)?;
    }
    u[(m + 2, m)] = z.cos();
    u[(m + 2, m + 1)] = z.sin();
    u[(m + 2, m + 2)] = z.cosh();
    u[(m + 2, m + 3)] = z.sinh();
    u[(m + 3, m)] = -l2 * z.cos();
    u[(m + 3, m + 1)] = -l2 * z.sin();
    u[(m + 3, m + 2)] = l2 * z.cosh();
    u[(m + 3, m + 3)] = l2 * z.sinh();

    Ok(SystemMatrix {
        lambda,
        matrix: u,
        crack_count: m,
    })
}

/// `h(u) sinh(v) / sinh(c)` with `h = sinh` for even `n`, `cosh` for odd,
/// evaluated without overflow for `u + v ≤ c`.
fn hyperbolic_ratio(u: f64, n: usize, v: f64, c: f64) -> f64 {
    let fu = if n.is_multiple_of(2) {
        -(-2.0 * u).exp_m1()
    } else {
        1.0 + (-2.0 * u).exp()
    };
    let fv = -(-2.0 * v).exp_m1();
    let fc = -(-2.0 * c).exp_m1();
    0.5 * (u + v - c).exp() * fu * fv / fc
}

/// `sinh(λ(π − x_i)) / sinh(λπ)`.
fn hinge_ratio(lambda: f64, xi: f64) -> f64 {
    (-lambda * xi).exp() * (-(-2.0 * lambda * (PI - xi)).exp_m1()) / (-(-2.0 * lambda * PI).exp_m1())
}

/// Contribution of each bounded unknown `[Δ_1 … Δ_m, A, B, E, F]` to `φ^(n)(x)`
/// on subinterval `interval`, where
///
/// `φ = A cos λx + B sin λx + E e^{−λx} + F e^{−λ(π−x)} + (1/2λ) Σ Δ_i (osc_i + g_i)`,
/// `osc_i = a_i sin λx + sin λ(x − x_i)₊`,
/// `g_i = −sinh(λ x_<) sinh(λ(π − x_>)) / sinh λπ`.
fn fill_columns(lambda: f64, positions: &[f64], interval: usize, x: f64, order: usize, out: &mut [f64]) {
    let m = positions.len();
    let ln = lambda.powi(order as i32);
    let alt = if order.is_multiple_of(2) { 1.0 } else { -1.0 };
    let c = lambda * PI;
    let z = lambda * x;
    let inv2l = 0.5 / lambda;
    let sin_n = sin_deriv(order, z);
    for (i, &xi) in positions.iter().enumerate() {
        let ai = (xi - PI) / PI;
        let right = interval > i;
        let mut osc = ai * sin_n;
        let g = if right {
            osc += sin_deriv(order, lambda * (x - xi));
            -alt * hyperbolic_ratio(lambda * (PI - x), order, lambda * xi, c)
        } else {
            -hyperbolic_ratio(z, order, lambda * (PI - xi), c)
        };
        out[i] = inv2l * ln * (osc + g);
    }
    out[m] = ln * cos_deriv(order, z);
    out[m + 1] = ln * sin_n;
    out[m + 2] = alt * ln * (-z).exp();
    out[m + 3] = ln * (lambda * (x - PI)).exp();
}

/// The bounded-basis equivalent of `U(λ)`; columns `[Δ, A, B, E, F]`.
pub(crate) fn stable_system(problem: &BeamProblem, lambda: f64) -> DMatrix<f64> {
    let m = problem.crack_count();
    let n = m + 4;
    let xs = problem.positions();
    let theta = problem.flexibilities();
    let mut u = DMatrix::zeros(n, n);
    let mut buf = vec![0.0; n];
    for j in 0..m {
        fill_columns(lambda, xs, j + 1, xs[j], 2, &mut buf);
        for (c, v) in buf.iter().enumerate() {
            u[(j, c)] = -theta[j] * v;
        }
        u[(j, j)] += 1.0;
    }
    let rows = [(0, 0.0, 0), (0, 0.0, 2), (m, PI, 0), (m, PI, 2)];
    for (r, &(k, x, order)) in rows.iter().enumerate() {
        fill_columns(lambda, xs, k, x, order, &mut buf);
        for (c, v) in buf.iter().enumerate() {
            u[(m + r, c)] = *v;
        }
    }
    u
}

/// Matrix `T` with `x̄_classical = T x̄_bounded`; `U_literal T = U_bounded`.
pub fn bounded_to_classical(problem: &BeamProblem, lambda: f64) -> DMatrix<f64> {
    let m = problem.crack_count();
    let n = m + 4;
    let mut t = DMatrix::zeros(n, n);
    for i in 0..m + 2 {
        t[(i, i)] = 1.0;
    }
    let decay = (-lambda * PI).exp();
    // C = E + F e^{−λπ}
    t[(m + 2, m + 2)] = 1.0;
    t[(m + 2, m + 3)] = decay;
    // D = −E + F e^{−λπ} − (1/2λ) Σ Δ_i (a_i + σ_i)
    t[(m + 3, m + 2)] = -1.0;
    t[(m + 3, m + 3)] = decay;
    for (i, &xi) in problem.positions().iter().enumerate() {
        let ai = (xi - PI) / PI;
        t[(m + 3, i)] = -(ai + hinge_ratio(lambda, xi)) / (2.0 * lambda);
    }
    t
}

/// Sign-meaningful, row-equilibrated characteristic determinant.
pub fn char_det(problem: &BeamProblem, lambda: f64) -> f64 {
    char_det_diagnostic(problem, lambda).value
}

/// As [`char_det`], also reporting rows that vanished during equilibration.
pub fn char_det_diagnostic(problem: &BeamProblem, lambda: f64) -> Determinant {
    equilibrated_det(stable_system(problem, lambda))
}

/// Eigenfunction in Shifrin form: jump amplitudes `Δ_i` plus complementary
/// coefficients.
///
/// The classical coefficients `A, B, C, D` of `cos, sin, cosh, sinh` are
/// available through accessors; internally the hyperbolic part is kept as
/// amplitudes of `e^{−λx}` and `e^{−λ(π−x)}` so that evaluation stays exact
/// at high modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ShifrinForm {
    lambda: f64,
    positions: Vec<f64>,
    jumps: Vec<f64>,
    a: f64,
    b: f64,
    e: f64,
    f: f64,
}

impl ShifrinForm {
    fn from_bounded(problem: &BeamProblem, lambda: f64, v: &DVector<f64>) -> Self {
        let m = problem.crack_count();
        Self {
            lambda,
            positions: problem.positions().to_vec(),
            jumps: v.rows(0, m).iter().copied().collect(),
            a: v[m],
            b: v[m + 1],
            e: v[m + 2],
            f: v[m + 3],
        }
    }

    /// Builds a form from the classical unknowns `[Δ, A, B, C, D]`.
    ///
    /// Converting `C, D` costs accuracy of order `ε e^{λπ}`; forms produced by
    /// [`solve_nullspace`] do not go through this path.
    pub fn from_classical(
        problem: &BeamProblem,
        lambda: f64,
        jumps: &[f64],
        a: f64,
        b: f64,
        c: f64,
        d: f64,
    ) -> Result<Self> {
        check_lambda(lambda)?;
        if jumps.len() != problem.crack_count() {
            return Err(BeamError::Validation(format!(
                "{} jump amplitudes for {} cracks",
                jumps.len(),
                problem.crack_count()
            )));
        }
        let shift: f64 = problem
            .positions()
            .iter()
            .zip(jumps)
            .map(|(&xi, &dj)| dj * ((xi - PI) / PI + hinge_ratio(lambda, xi)))
            .sum::<f64>()
            / (2.0 * lambda);
        let d_bounded = d + shift;
        Ok(Self {
            lambda,
            positions: problem.positions().to_vec(),
            jumps: jumps.to_vec(),
            a,
            b,
            e: 0.5 * (c - d_bounded),
            f: 0.5 * (c + d_bounded) * (lambda * PI).exp(),
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `Δ_i = J[φ'](x_i)`.
    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    /// Coefficient of `cos λx`.
    pub fn a(&self) -> f64 {
        self.a
    }

    /// Coefficient of `sin λx`.
    pub fn b(&self) -> f64 {
        self.b
    }

    /// Coefficient of `cosh λx`.
    pub fn c(&self) -> f64 {
        self.e + self.f * (-self.lambda * PI).exp()
    }

    /// Coefficient of `sinh λx`.
    pub fn d(&self) -> f64 {
        let shift: f64 = self
            .positions
            .iter()
            .zip(&self.jumps)
            .map(|(&xi, &dj)| dj * ((xi - PI) / PI + hinge_ratio(self.lambda, xi)))
            .sum::<f64>()
            / (2.0 * self.lambda);
        self.f * (-self.lambda * PI).exp() - self.e - shift
    }

    /// Classical unknown vector `x̄ = [Δ_1 … Δ_m, A, B, C, D]`.
    pub fn unknowns(&self) -> DVector<f64> {
        let m = self.jumps.len();
        let mut v = DVector::zeros(m + 4);
        for (i, d) in self.jumps.iter().enumerate() {
            v[i] = *d;
        }
        v[m] = self.a;
        v[m + 1] = self.b;
        v[m + 2] = self.c();
        v[m + 3] = self.d();
        v
    }

    fn bounded(&self) -> DVector<f64> {
        let m = self.jumps.len();
        let mut v = DVector::zeros(m + 4);
        for (i, d) in self.jumps.iter().enumerate() {
            v[i] = *d;
        }
        v[m] = self.a;
        v[m + 1] = self.b;
        v[m + 2] = self.e;
        v[m + 3] = self.f;
        v
    }

    /// `φ^(n)(x)` on subinterval `interval`.
    pub fn eval(&self, interval: usize, x: f64, order: usize) -> f64 {
        let n = self.jumps.len() + 4;
        let mut buf = vec![0.0; n];
        fill_columns(self.lambda, &self.positions, interval, x, order, &mut buf);
        buf.iter().zip(self.bounded().iter()).map(|(c, v)| c * v).sum()
    }

    /// `φ_l^(n)(x) = Σ Δ_i w_i^(n)(x)` on subinterval `interval`.
    pub fn linear_part(&self, interval: usize, x: f64, order: usize) -> f64 {
        self.positions
            .iter()
            .zip(&self.jumps)
            .enumerate()
            .map(|(i, (&xi, &dj))| {
                let basis = JumpBasis { index: i, breakpoint: xi };
                let side = if interval > i { Side::Right } else { Side::Left };
                match order {
                    0 => dj * basis.value(x),
                    1 => dj * basis.slope(x, side),
                    _ => 0.0,
                }
            })
            .sum()
    }

    /// `φ_s^(n)(x) = φ^(n)(x) − φ_l^(n)(x)`.
    pub fn smooth_part(&self, interval: usize, x: f64, order: usize) -> f64 {
        self.eval(interval, x, order) - self.linear_part(interval, x, order)
    }

    pub(crate) fn scale(&mut self, factor: f64) {
        for d in &mut self.jumps {
            *d *= factor;
        }
        self.a *= factor;
        self.b *= factor;
        self.e *= factor;
        self.f *= factor;
    }

    /// Copy with every `Δ_i` multiplied by `factor`; used for fault injection.
    pub fn with_scaled_jumps(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for d in &mut out.jumps {
            *d *= factor;
        }
        out
    }
}

impl crate::eigen::PiecewiseFn for ShifrinForm {
    fn eval(&self, interval: usize, x: f64, order: usize) -> f64 {
        ShifrinForm::eval(self, interval, x, order)
    }
}

/// First `count` roots of [`char_det`]; `lambda_max` defaults to `count + m + 5`.
pub fn find_eigenvalues(problem: &BeamProblem, count: usize, lambda_max: Option<f64>) -> Result<RootScan> {
    let mut grid = ScanGrid::default_for(count, problem.crack_count());
    if let Some(l) = lambda_max {
        grid = ScanGrid::new(grid.lambda_min, l, grid.step)?;
    }
    find_eigenvalues_on(problem, count, &grid)
}

/// As [`find_eigenvalues`] on an explicit grid.
pub fn find_eigenvalues_on(problem: &BeamProblem, count: usize, grid: &ScanGrid) -> Result<RootScan> {
    find_roots(|l| char_det(problem, l), count, grid)
}

/// Nullspace of `U(λ_k)`, as a Shifrin form with `‖x̄‖ = 1` and `φ'(0⁺) > 0`.
pub fn solve_nullspace(problem: &BeamProblem, lambda: f64) -> Result<ShifrinForm> {
    check_lambda(lambda)?;
    let u = stable_system(problem, lambda);
    let v = nullspace_vector(&u, lambda)?;
    let mut form = ShifrinForm::from_bounded(problem, lambda, &v);
    let norm = form.unknowns().norm();
    let sign = if form.eval(0, 0.0, 1) < 0.0 { -1.0 } else { 1.0 };
    form.scale(sign / norm);
    Ok(form)
}

/// Eigenpair with `|φ|_H = 1`, `φ'(0⁺) > 0`, and its per-interval form.
pub fn build_eigenfunction(problem: &BeamProblem, form: ShifrinForm) -> Eigenpair {
    let piecewise = PiecewiseForm::from_fn(form.lambda(), problem, &form);
    Eigenpair::normalized(problem, SolverKind::Shifrin, piecewise, Some(form))
}

/// First `count` eigenpairs.
pub fn eigenpairs(problem: &BeamProblem, count: usize, lambda_max: Option<f64>) -> Result<Spectrum> {
    eigenpairs_with(problem, count, lambda_max, |f| f)
}

/// As [`eigenpairs`], passing every nullspace form through `adjust` before the
/// eigenfunction is built.
pub fn eigenpairs_with<F: Fn(ShifrinForm) -> ShifrinForm>(
    problem: &BeamProblem,
    count: usize,
    lambda_max: Option<f64>,
    adjust: F,
) -> Result<Spectrum> {
    let scan = find_eigenvalues(problem, count, lambda_max)?;
    let mut diagnostics = scan.diagnostics;
    let mut pairs = Vec::with_capacity(count);
    for &lam in &scan.roots {
        let d = char_det_diagnostic(problem, lam);
        diagnostics.extend(d.zero_rows.iter().map(|&row| Diagnostic::ZeroRow { lambda: lam, row }));
        let form = adjust(solve_nullspace(problem, lam)?);
        pairs.push(build_eigenfunction(problem, form));
    }
    Ok(Spectrum {
        solver: SolverKind::Shifrin,
        pairs,
        diagnostics,
    })
}
