//! Root bracketing on a uniform grid followed by bisection.
//!
//! Both characteristic functions are continuous in `λ` and change sign at
//! simple eigenvalues. Tangential zeros do not change sign; they are caught by
//! a local minimum test on `|f|` and reported rather than split.

use serde::{Deserialize, Serialize};

use crate::error::{BeamError, Result};

/// Default grid spacing in `λ`.
pub const SCAN_STEP: f64 = 0.01;

/// Bisection stops once the bracket is narrower than this.
pub const BISECTION_TOL: f64 = 1e-12;

/// `|f|` at a local minimum below this fraction of its neighbours counts as a
/// suspected double root.
pub const DOUBLE_ROOT_TOL: f64 = 1e-6;

/// Grid bounds for a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanGrid {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub step: f64,
}

impl ScanGrid {
    pub fn new(lambda_min: f64, lambda_max: f64, step: f64) -> Result<Self> {
        if !(lambda_min.is_finite() && lambda_min > 0.0) {
            return Err(BeamError::Domain(format!("lambda_min must be positive, got {lambda_min}")));
        }
        if !(lambda_max.is_finite() && lambda_max >= lambda_min) {
            return Err(BeamError::Domain(format!(
                "lambda_max {lambda_max} must be at least lambda_min {lambda_min}"
            )));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(BeamError::Domain(format!("step must be positive, got {step}")));
        }
        Ok(Self {
            lambda_min,
            lambda_max,
            step,
        })
    }

    /// Default scan for `count` roots of a problem with `cracks` cracks:
    /// from one step above zero to `count + cracks + 5`.
    pub fn default_for(count: usize, cracks: usize) -> Self {
        Self {
            lambda_min: SCAN_STEP,
            lambda_max: (count + cracks + 5) as f64,
            step: SCAN_STEP,
        }
    }

    /// Grid abscissae; the last point is clipped to `lambda_max`.
    pub fn points(&self) -> Vec<f64> {
        let span = self.lambda_max - self.lambda_min;
        let n = (span / self.step - 1e-9).ceil().max(0.0) as usize;
        (0..=n)
            .map(|j| (self.lambda_min + j as f64 * self.step).min(self.lambda_max))
            .collect()
    }
}

/// Non-fatal findings from a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    /// `|f|` dips to near zero without a sign change.
    SuspectedDoubleRoot { lambda: f64, relative_minimum: f64 },
    /// Two roots inside adjacent grid cells, separated by a local search.
    ClosePair { lambda_low: f64, lambda_high: f64 },
    /// A system row vanished identically during equilibration.
    ZeroRow { lambda: f64, row: usize },
    /// The nullspace at a root was not one-dimensional.
    Degenerate { lambda: f64, dimension: usize },
}

/// Roots found by a scan, in increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct RootScan {
    pub roots: Vec<f64>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Bisection on a bracket with `f(lo)` and `f(hi)` of opposite sign, finished
/// by one secant step inside the final bracket.
pub fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, mut f_lo: f64) -> f64 {
    let mut f_hi = f(hi);
    if f_hi == 0.0 {
        return hi;
    }
    for _ in 0..200 {
        if hi - lo <= BISECTION_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    let secant = lo - f_lo * (hi - lo) / (f_hi - f_lo);
    if secant.is_finite() && secant >= lo && secant <= hi {
        secant
    } else {
        0.5 * (lo + hi)
    }
}

/// Golden-section minimisation of `g` on `[a, b]`.
fn golden_min<G: Fn(f64) -> f64>(g: &G, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut gc = g(c);
    let mut gd = g(d);
    for _ in 0..80 {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
        if b - a < BISECTION_TOL {
            break;
        }
    }
    if gc < gd {
        (c, gc)
    } else {
        (d, gd)
    }
}

/// Scans `f` over `grid` and returns its first `count` roots.
///
/// Fails with [`BeamError::RootShortfall`] when fewer than `count` roots lie
/// on the grid.
pub fn find_roots<F: Fn(f64) -> f64>(f: F, count: usize, grid: &ScanGrid) -> Result<RootScan> {
    if count == 0 {
        return Err(BeamError::Domain("root count must be at least 1".into()));
    }
    let pts = grid.points();
    let mut roots = Vec::with_capacity(count);
    let mut diagnostics = Vec::new();
    let mut vals: Vec<f64> = Vec::with_capacity(pts.len());

    for (j, &lam) in pts.iter().enumerate() {
        let fj = f(lam);
        vals.push(fj);
        if fj == 0.0 {
            roots.push(lam);
        } else if j > 0 {
            let fp = vals[j - 1];
            if fp != 0.0 && (fp < 0.0) != (fj < 0.0) {
                roots.push(bisect(&f, pts[j - 1], lam, fp));
            }
        }
        // Local minimum of |f| at j-1 with no sign change on either side.
        if j >= 2 {
            let (a, b, c) = (vals[j - 2], vals[j - 1], vals[j]);
            let same_sign = a != 0.0
                && b != 0.0
                && c != 0.0
                && (a < 0.0) == (b < 0.0)
                && (b < 0.0) == (c < 0.0);
            if same_sign && b.abs() < a.abs() && b.abs() < c.abs() {
                let s = b.signum();
                let (lam_star, g_min) = golden_min(&|l| s * f(l), pts[j - 2], lam);
                if g_min < 0.0 {
                    let r1 = bisect(&f, pts[j - 2], lam_star, a);
                    let r2 = bisect(&f, lam_star, lam, f(lam_star));
                    diagnostics.push(Diagnostic::ClosePair {
                        lambda_low: r1,
                        lambda_high: r2,
                    });
                    // The pair lies before any root bracketed in the cell ending at j.
                    let insert_at = roots.partition_point(|&r| r < r1);
                    roots.insert(insert_at, r2);
                    roots.insert(insert_at, r1);
                } else {
                    let rel = g_min / a.abs().max(c.abs());
                    if rel <= DOUBLE_ROOT_TOL {
                        diagnostics.push(Diagnostic::SuspectedDoubleRoot {
                            lambda: lam_star,
                            relative_minimum: rel,
                        });
                    }
                }
            }
        }
        if roots.len() >= count {
            break;
        }
    }

    if roots.len() < count {
        return Err(BeamError::RootShortfall {
            found: roots.len(),
            requested: count,
            lambda_max: grid.lambda_max,
        });
    }
    roots.truncate(count);
    Ok(RootScan { roots, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn finds_sine_roots() {
        let grid = ScanGrid::new(0.01, 10.5, 0.01).unwrap();
        let scan = find_roots(|l: f64| (l * PI).sin(), 10, &grid).unwrap();
        for (k, r) in scan.roots.iter().enumerate() {
            assert!((r - (k + 1) as f64).abs() < 1e-10, "{r}");
        }
        assert!(scan.diagnostics.is_empty());
    }

    #[test]
    fn shortfall_reports_count() {
        let grid = ScanGrid::new(0.01, 3.5, 0.01).unwrap();
        let err = find_roots(|l: f64| (l * PI).sin(), 5, &grid).unwrap_err();
        assert_eq!(
            err,
            BeamError::RootShortfall {
                found: 3,
                requested: 5,
                lambda_max: 3.5
            }
        );
    }

    #[test]
    fn tangential_zero_is_reported_not_split() {
        let grid = ScanGrid::new(0.013, 3.0, 0.01).unwrap();
        let f = |l: f64| (l - 1.5).powi(2) * (l - 2.5);
        let scan = find_roots(f, 1, &grid).unwrap();
        assert!((scan.roots[0] - 2.5).abs() < 1e-10);
        assert!(scan
            .diagnostics
            .iter()
            .any(|d| matches!(d, Diagnostic::SuspectedDoubleRoot { lambda, .. } if (lambda - 1.5).abs() < 1e-4)));
    }

    #[test]
    fn close_pair_inside_one_cell_is_split() {
        let grid = ScanGrid::new(0.0125, 3.0, 0.01).unwrap();
        let f = |l: f64| (l - 1.503) * (l - 1.506);
        let scan = find_roots(f, 2, &grid).unwrap();
        assert!((scan.roots[0] - 1.503).abs() < 1e-10);
        assert!((scan.roots[1] - 1.506).abs() < 1e-10);
        assert!(matches!(scan.diagnostics[0], Diagnostic::ClosePair { .. }));
    }

    #[test]
    fn grid_points_are_clipped() {
        let g = ScanGrid::new(0.5, 0.5, 0.01).unwrap();
        assert_eq!(g.points(), vec![0.5]);
        let g = ScanGrid::new(0.5, 0.525, 0.01).unwrap();
        assert_eq!(g.points().len(), 4);
        assert_eq!(*g.points().last().unwrap(), 0.525);
    }
}
