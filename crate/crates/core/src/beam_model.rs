//! Physical and nondimensional problem definition.
//!
//! A physical beam of length `L` is mapped onto `(0, π)` by `x = π ξ / L`.
//! Displacements are measured in units of the radius of gyration and time in
//! units of `1/ω₀`, with `ω₀ = (π/L)² √(EI/ρA)`. The crack law
//! `J[v'] = θ v''` carries one length dimension, so physical flexibilities
//! pick up a factor `π/L` under the map; the displacement scale cancels.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{BeamError, Result};

/// Flexibilities below this value are treated as rigid joints and removed.
pub const THETA_MIN: f64 = 1e-12;

/// Minimum separation between two cracks, and between a crack and an end.
pub const POSITION_TOLERANCE: f64 = 1e-9;

/// Largest accepted crack depth ratio. The flexibility fits were calibrated
/// for shallow to moderate cracks; deeper values are accepted but not clamped.
pub const MAX_DEPTH_RATIO: f64 = 0.99;

/// Dimensional description of a uniform beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalBeam {
    /// Length `L` (m).
    pub length: f64,
    /// Young's modulus `E` (Pa).
    pub young_modulus: f64,
    /// Density `ρ` (kg/m³).
    pub density: f64,
    /// Cross-section area `A` (m²).
    pub area: f64,
    /// Area moment of inertia `I` (m⁴).
    pub area_moment: f64,
    /// Section height parameter `H` (m) used by the flexibility polynomials:
    /// the half-height for double-sided cracks, the full height for single-sided ones.
    pub height: f64,
}

impl PhysicalBeam {
    pub fn new(
        length: f64,
        young_modulus: f64,
        density: f64,
        area: f64,
        area_moment: f64,
        height: f64,
    ) -> Result<Self> {
        let beam = Self {
            length,
            young_modulus,
            density,
            area,
            area_moment,
            height,
        };
        beam.validate()?;
        Ok(beam)
    }

    /// Checks that every field is finite and strictly positive.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("L", self.length),
            ("E", self.young_modulus),
            ("rho", self.density),
            ("A", self.area),
            ("I", self.area_moment),
            ("H", self.height),
        ];
        let bad: Vec<String> = fields
            .iter()
            .filter(|(_, v)| !(v.is_finite() && *v > 0.0))
            .map(|(name, v)| format!("{name}={v}"))
            .collect();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(BeamError::Validation(format!(
                "beam fields must be finite and positive: {}",
                bad.join(", ")
            )))
        }
    }

    /// Radius of gyration `r = √(I/A)`.
    pub fn radius_of_gyration(&self) -> f64 {
        (self.area_moment / self.area).sqrt()
    }

    /// Time scale `ω₀ = (π/L)² √(EI/ρA)`.
    pub fn frequency_scale(&self) -> f64 {
        let k = PI / self.length;
        k * k * (self.young_modulus * self.area_moment / (self.density * self.area)).sqrt()
    }
}

/// Which faces of the section carry the crack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sidedness {
    Single,
    Double,
}

/// Crack location, either along the physical beam or on `(0, π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CrackPosition {
    Physical(f64),
    Nondimensional(f64),
}

/// Source of a crack's flexibility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Flexibility {
    /// A flexibility given directly. Physical problems read it in metres,
    /// nondimensional problems read it on the `(0, π)` scale.
    Direct(f64),
    /// Derived from the crack depth ratio through the fitted polynomials.
    DepthRatio { ratio: f64, sided: Sidedness },
}

/// One crack as supplied by the user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrackSpec {
    pub position: CrackPosition,
    pub flexibility: Flexibility,
}

impl CrackSpec {
    pub fn new(position: CrackPosition, flexibility: Flexibility) -> Self {
        Self {
            position,
            flexibility,
        }
    }
}

fn check_depth_ratio(ratio: f64, height: f64) -> Result<()> {
    if !(ratio.is_finite() && (0.0..=MAX_DEPTH_RATIO).contains(&ratio)) {
        return Err(BeamError::Domain(format!(
            "depth ratio {ratio} outside [0, {MAX_DEPTH_RATIO}]"
        )));
    }
    if !(height.is_finite() && height > 0.0) {
        return Err(BeamError::Domain(format!(
            "height parameter must be positive, got {height}"
        )));
    }
    Ok(())
}

/// Flexibility of a double-sided crack; `height` is the half-height of the section.
pub fn flexibility_double_sided(ratio: f64, height: f64) -> Result<f64> {
    check_depth_ratio(ratio, height)?;
    let mu = ratio;
    let poly = 0.535 + mu * (-0.929 + mu * (3.500 + mu * (-3.181 + mu * 5.793)));
    Ok(6.0 * PI * height * mu * mu * poly)
}

/// Flexibility of a single-sided crack; `height` is the full section height.
pub fn flexibility_single_sided(ratio: f64, height: f64) -> Result<f64> {
    check_depth_ratio(ratio, height)?;
    let mu = ratio;
    let poly = 0.6384
        + mu * (-1.035 + mu * (3.7201 + mu * (-5.1773 + mu * (7.553 + mu * -7.332))));
    Ok(6.0 * PI * height * mu * mu * poly)
}

/// Dispatches on sidedness.
pub fn flexibility(ratio: f64, sided: Sidedness, height: f64) -> Result<f64> {
    match sided {
        Sidedness::Single => flexibility_single_sided(ratio, height),
        Sidedness::Double => flexibility_double_sided(ratio, height),
    }
}

/// Nondimensional problem on `(0, π)` with cracks at `0 < x_1 < … < x_m < π`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamProblem {
    positions: Vec<f64>,
    flexibilities: Vec<f64>,
}

impl BeamProblem {
    /// The uncracked beam.
    pub fn uniform() -> Self {
        Self {
            positions: Vec::new(),
            flexibilities: Vec::new(),
        }
    }

    /// Builds a problem from `(x, θ)` pairs given on `(0, π)`.
    ///
    /// Cracks are sorted by position. Cracks with `θ < THETA_MIN` are rigid
    /// joints and are dropped. Positions must lie at least
    /// `POSITION_TOLERANCE` inside the beam and apart from each other.
    pub fn new(cracks: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut cracks: Vec<(f64, f64)> = cracks.into_iter().collect();

        let bad_pos: Vec<String> = cracks
            .iter()
            .filter(|(x, _)| {
                !(x.is_finite() && *x > POSITION_TOLERANCE && *x < PI - POSITION_TOLERANCE)
            })
            .map(|(x, _)| format!("{x}"))
            .collect();
        if !bad_pos.is_empty() {
            return Err(BeamError::Validation(format!(
                "crack positions must lie strictly inside (0, pi): {}",
                bad_pos.join(", ")
            )));
        }
        let bad_theta: Vec<String> = cracks
            .iter()
            .filter(|(_, t)| !(t.is_finite() && *t >= 0.0))
            .map(|(x, t)| format!("theta={t} at x={x}"))
            .collect();
        if !bad_theta.is_empty() {
            return Err(BeamError::Validation(format!(
                "flexibilities must be finite and nonnegative: {}",
                bad_theta.join(", ")
            )));
        }

        cracks.retain(|&(_, t)| t >= THETA_MIN);
        cracks.sort_by(|a, b| a.0.total_cmp(&b.0));

        let collisions: Vec<String> = cracks
            .windows(2)
            .filter(|w| w[1].0 - w[0].0 < POSITION_TOLERANCE)
            .map(|w| format!("{} and {}", w[0].0, w[1].0))
            .collect();
        if !collisions.is_empty() {
            return Err(BeamError::Validation(format!(
                "cracks closer than {POSITION_TOLERANCE}: {}",
                collisions.join("; ")
            )));
        }

        let (positions, flexibilities) = cracks.into_iter().unzip();
        Ok(Self {
            positions,
            flexibilities,
        })
    }

    /// Number of cracks `m`.
    pub fn crack_count(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn flexibilities(&self) -> &[f64] {
        &self.flexibilities
    }

    /// Number of subintervals, `m + 1`.
    pub fn interval_count(&self) -> usize {
        self.positions.len() + 1
    }

    /// `[0, x_1, …, x_m, π]`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = Vec::with_capacity(self.positions.len() + 2);
        pts.push(0.0);
        pts.extend_from_slice(&self.positions);
        pts.push(PI);
        pts
    }

    /// End points of subinterval `k` (0-based).
    pub fn interval(&self, k: usize) -> (f64, f64) {
        let left = if k == 0 { 0.0 } else { self.positions[k - 1] };
        let right = if k == self.positions.len() {
            PI
        } else {
            self.positions[k]
        };
        (left, right)
    }

    /// Subinterval containing `x`, right-continuous at the cracks; `π` maps to the last one.
    pub fn interval_of(&self, x: f64) -> usize {
        self.positions.partition_point(|&p| p <= x)
    }
}

fn resolve_theta(flex: Flexibility, beam: Option<&PhysicalBeam>, physical: bool) -> Result<f64> {
    match flex {
        Flexibility::Direct(theta) => {
            if !(theta.is_finite() && theta >= 0.0) {
                return Err(BeamError::Validation(format!(
                    "flexibility must be finite and nonnegative, got {theta}"
                )));
            }
            match (physical, beam) {
                (true, Some(b)) => Ok(theta * PI / b.length),
                _ => Ok(theta),
            }
        }
        Flexibility::DepthRatio { ratio, sided } => {
            let beam = beam.ok_or_else(|| {
                BeamError::Validation(
                    "depth-ratio flexibilities need a physical beam block".to_string(),
                )
            })?;
            Ok(flexibility(ratio, sided, beam.height)? * PI / beam.length)
        }
    }
}

/// Maps a physical beam and its cracks onto `(0, π)`.
///
/// Every crack must give a physical position `ξ ∈ (0, L)`. Flexibilities,
/// direct or polynomial, are in metres and are scaled by `π/L`.
pub fn nondimensionalize(beam: &PhysicalBeam, cracks: &[CrackSpec]) -> Result<BeamProblem> {
    beam.validate()?;
    let mut mapped = Vec::with_capacity(cracks.len());
    let mut offenders = Vec::new();
    for crack in cracks {
        match crack.position {
            CrackPosition::Physical(xi) => {
                if !(xi.is_finite() && xi > 0.0 && xi < beam.length) {
                    offenders.push(format!("xi={xi}"));
                    continue;
                }
                mapped.push((PI * xi / beam.length, resolve_theta(crack.flexibility, Some(beam), true)?));
            }
            CrackPosition::Nondimensional(x) => {
                return Err(BeamError::Validation(format!(
                    "nondimensional position x={x} given for a physical problem"
                )))
            }
        }
    }
    if !offenders.is_empty() {
        return Err(BeamError::Validation(format!(
            "crack positions outside (0, L={}): {}",
            beam.length,
            offenders.join(", ")
        )));
    }
    BeamProblem::new(mapped)
}

/// Builds a problem whose crack positions are already on `(0, π)`.
///
/// Direct flexibilities are taken as nondimensional. Depth-ratio
/// flexibilities are evaluated in metres and need `beam` for `H` and `L`.
pub fn nondimensional_problem(
    beam: Option<&PhysicalBeam>,
    cracks: &[CrackSpec],
) -> Result<BeamProblem> {
    if let Some(b) = beam {
        b.validate()?;
    }
    let mut mapped = Vec::with_capacity(cracks.len());
    for crack in cracks {
        match crack.position {
            CrackPosition::Nondimensional(x) => {
                mapped.push((x, resolve_theta(crack.flexibility, beam, false)?))
            }
            CrackPosition::Physical(xi) => {
                return Err(BeamError::Validation(format!(
                    "physical position xi={xi} given for a nondimensional problem"
                )))
            }
        }
    }
    BeamProblem::new(mapped)
}

/// Natural frequencies `ω_k = λ_k² (π/L)² √(EI/ρA)` in rad/s.
pub fn natural_frequencies(beam: &PhysicalBeam, lambdas: &[f64]) -> Result<Vec<f64>> {
    beam.validate()?;
    if let Some(bad) = lambdas.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
        return Err(BeamError::Domain(format!("eigenvalue must be positive, got {bad}")));
    }
    let scale = beam.frequency_scale();
    Ok(lambdas.iter().map(|l| l * l * scale).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn unit_beam(length: f64) -> PhysicalBeam {
        PhysicalBeam::new(length, 1.0, 1.0, 1.0, 1.0, 0.1).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn zero_depth_has_zero_flexibility() {
        assert_eq!(flexibility_double_sided(0.0, 0.1).unwrap(), 0.0);
        assert_eq!(flexibility_single_sided(0.0, 0.2).unwrap(), 0.0);
    }

    #[test]
    fn double_sided_matches_hand_arithmetic() {
        // Term-by-term evaluation of the printed polynomial.
        let expected = 6.0 * PI * 0.05 * 0.04 * (0.535 - 0.1858 + 0.1400 - 0.025448 + 0.0092688);
        assert!(rel(flexibility_double_sided(0.2, 0.05).unwrap(), expected) < 1e-12);
        let expected = 6.0 * PI * 0.25 * (0.535 - 0.4645 + 0.875 - 0.397625 + 0.3620625);
        assert!(rel(flexibility_double_sided(0.5, 1.0).unwrap(), expected) < 1e-12);
    }

    #[test]
    fn single_sided_matches_hand_arithmetic() {
        // 0.3^k: 0.09, 0.027, 0.0081, 0.00243
        let poly = 0.6384 - 1.035 * 0.3 + 3.7201 * 0.09 - 5.1773 * 0.027 + 7.553 * 0.0081
            - 7.332 * 0.00243;
        let expected = 6.0 * PI * 0.1 * 0.09 * poly;
        assert!(rel(flexibility_single_sided(0.3, 0.1).unwrap(), expected) < 1e-12);
    }

    #[test]
    fn flexibility_grows_with_depth() {
        let t: Vec<f64> = [0.1, 0.2, 0.3]
            .iter()
            .map(|&mu| flexibility_single_sided(mu, 0.1).unwrap())
            .collect();
        assert!(t[0] < t[1] && t[1] < t[2]);
    }

    #[test]
    fn flexibility_rejects_bad_arguments() {
        assert!(matches!(flexibility_double_sided(-0.1, 0.1), Err(BeamError::Domain(_))));
        assert!(matches!(flexibility_double_sided(1.0, 0.1), Err(BeamError::Domain(_))));
        assert!(matches!(flexibility_single_sided(0.2, 0.0), Err(BeamError::Domain(_))));
        assert!(flexibility_single_sided(0.99, 0.1).is_ok());
    }

    #[test]
    fn identity_length_map() {
        let beam = unit_beam(PI);
        let cracks = [CrackSpec::new(CrackPosition::Physical(FRAC_PI_2), Flexibility::Direct(0.5))];
        let p = nondimensionalize(&beam, &cracks).unwrap();
        assert!((p.positions()[0] - FRAC_PI_2).abs() < 1e-15);
        assert!((p.flexibilities()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn length_map_is_linear() {
        let beam = unit_beam(2.0 * PI);
        let cracks = [CrackSpec::new(CrackPosition::Physical(PI), Flexibility::Direct(0.4))];
        let p = nondimensionalize(&beam, &cracks).unwrap();
        assert!((p.positions()[0] - FRAC_PI_2).abs() < 1e-15);
        assert!((p.flexibilities()[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn unsorted_cracks_are_sorted() {
        let beam = unit_beam(PI);
        let cracks = [
            CrackSpec::new(CrackPosition::Physical(2.0), Flexibility::Direct(0.7)),
            CrackSpec::new(CrackPosition::Physical(1.0), Flexibility::Direct(0.3)),
        ];
        let p = nondimensionalize(&beam, &cracks).unwrap();
        assert_eq!(p.positions(), &[1.0, 2.0]);
        assert_eq!(p.flexibilities(), &[0.3, 0.7]);
    }

    #[test]
    fn depth_ratio_is_scaled_by_length() {
        let beam = PhysicalBeam::new(2.0, 2e11, 7850.0, 1e-3, 1e-7, 0.05).unwrap();
        let flex = Flexibility::DepthRatio { ratio: 0.3, sided: Sidedness::Double };
        let cracks = [CrackSpec::new(CrackPosition::Physical(0.5), flex)];
        let p = nondimensionalize(&beam, &cracks).unwrap();
        let expected = flexibility_double_sided(0.3, 0.05).unwrap() * PI / 2.0;
        assert!(rel(p.flexibilities()[0], expected) < 1e-14);
        assert!((p.positions()[0] - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_duplicates_and_boundaries() {
        let err = BeamProblem::new([(1.0, 0.1), (1.0 + 1e-12, 0.2)]).unwrap_err();
        assert!(matches!(err, BeamError::Validation(ref m) if m.contains("closer")));
        assert!(BeamProblem::new([(0.0, 0.1)]).is_err());
        assert!(BeamProblem::new([(PI, 0.1)]).is_err());
        let beam = unit_beam(1.0);
        let cracks = [CrackSpec::new(CrackPosition::Physical(1.0), Flexibility::Direct(0.1))];
        assert!(nondimensionalize(&beam, &cracks).is_err());
    }

    #[test]
    fn rigid_joints_are_elided() {
        let p = BeamProblem::new([(1.0, 0.0), (2.0, 0.3), (2.5, 1e-13)]).unwrap();
        assert_eq!(p.crack_count(), 1);
        assert_eq!(p.positions(), &[2.0]);
        // An elided crack may coincide with a real one.
        assert!(BeamProblem::new([(2.0, 0.0), (2.0, 0.5)]).is_ok());
    }

    #[test]
    fn mixing_position_kinds_is_rejected() {
        let beam = unit_beam(PI);
        let nd = [CrackSpec::new(CrackPosition::Nondimensional(1.0), Flexibility::Direct(0.1))];
        assert!(nondimensionalize(&beam, &nd).is_err());
        let ph = [CrackSpec::new(CrackPosition::Physical(1.0), Flexibility::Direct(0.1))];
        assert!(nondimensional_problem(Some(&beam), &ph).is_err());
        let depth = [CrackSpec::new(
            CrackPosition::Nondimensional(1.0),
            Flexibility::DepthRatio { ratio: 0.2, sided: Sidedness::Single },
        )];
        assert!(nondimensional_problem(None, &depth).is_err());
    }

    #[test]
    fn frequencies_follow_the_scaling_law() {
        let beam = unit_beam(PI);
        let w = natural_frequencies(&beam, &[1.0, 2.0]).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-15);
        assert!((w[1] - 4.0).abs() < 1e-14);
        // L = 2π, EI/(ρA) = 16: (1/4)·4 = 1
        let beam = PhysicalBeam::new(2.0 * PI, 16.0, 1.0, 1.0, 1.0, 0.1).unwrap();
        let w = natural_frequencies(&beam, &[1.0]).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-15);
        assert!(natural_frequencies(&beam, &[0.0]).is_err());
    }

    #[test]
    fn interval_lookup() {
        let p = BeamProblem::new([(1.0, 0.3), (2.0, 0.3)]).unwrap();
        assert_eq!(p.interval_of(0.5), 0);
        assert_eq!(p.interval_of(1.0), 1);
        assert_eq!(p.interval_of(1.5), 1);
        assert_eq!(p.interval_of(PI), 2);
        assert_eq!(p.interval(1), (1.0, 2.0));
        assert_eq!(p.breakpoints(), vec![0.0, 1.0, 2.0, PI]);
    }

    #[test]
    fn physical_beam_validation() {
        assert!(PhysicalBeam::new(1.0, 1.0, 1.0, 1.0, -1.0, 1.0).is_err());
        let b = PhysicalBeam::new(1.0, 1.0, 1.0, 4.0, 1.0, 1.0).unwrap();
        assert!((b.radius_of_gyration() - 0.5).abs() < 1e-15);
    }
}
