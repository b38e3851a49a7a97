//! Cylindrical and spherical Pohozaev invariants of radial profiles.
//!
//! For a radial profile the angular part of the Hamiltonian density
//! vanishes, so the cylindrical invariant is the radial Hamiltonian H and
//! the spherical one is ω_{n-1}·H.

use serde::Serialize;

use crate::error::Result;
use crate::fowler::{hamiltonian, FowlerState};
use crate::orbit::PeriodicOrbit;
use crate::params::DimensionParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PohozaevValue {
    pub cyl: f64,
    pub sph: f64,
    /// Surface area of the unit sphere S^(n-1).
    pub omega: f64,
    /// max |H(t) - H(t_0)| over the samples.
    pub conservation: f64,
}

impl PohozaevValue {
    fn from_level(p: &DimensionParams, cyl: f64, conservation: f64) -> Self {
        let omega = p.omega_sphere();
        Self {
            cyl,
            sph: omega * cyl,
            omega,
            conservation,
        }
    }
}

/// Invariant of a radial profile given as cylinder states; the level is
/// taken at the first state.
pub fn pohozaev_of_states(p: &DimensionParams, states: &[FowlerState]) -> Option<PohozaevValue> {
    let h0 = hamiltonian(p, *states.first()?);
    let drift = states
        .iter()
        .map(|s| (hamiltonian(p, *s) - h0).abs())
        .fold(0.0, f64::max);
    Some(PohozaevValue::from_level(p, h0, drift))
}

pub fn pohozaev_of_orbit(p: &DimensionParams, orbit: &PeriodicOrbit) -> PohozaevValue {
    let h0 = hamiltonian(p, orbit.initial_state());
    let drift = orbit
        .samples
        .states
        .iter()
        .map(|s| (hamiltonian(p, *s) - h0).abs())
        .fold(0.0, f64::max);
    PohozaevValue::from_level(p, h0, drift)
}

/// Invariant of the spherical profile v(t) = (cosh t)^(-γ) sampled at `ts`.
pub fn pohozaev_of_spherical(p: &DimensionParams, ts: &[f64]) -> Option<PohozaevValue> {
    let states: Vec<FowlerState> = ts.iter().map(|&t| spherical_state(p.gamma, t)).collect();
    pohozaev_of_states(p, &states)
}

/// (v, v', v'', v''') of (cosh t)^(-g), written in s = tanh t.
pub fn spherical_state(g: f64, t: f64) -> FowlerState {
    let s = t.tanh();
    let q = 1.0 - s * s;
    let v = (-g * log_cosh(t)).exp();
    FowlerState::new(
        v,
        -g * s * v,
        v * (g * g * s * s - g * q),
        v * s * (-g * g * g * s * s + (3.0 * g * g + 2.0 * g) * q),
    )
}

/// ln cosh t without overflow for large |t|.
fn log_cosh(t: f64) -> f64 {
    let a = t.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    NonMonotone,
    /// Fewer than two points.
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub a: f64,
    pub cyl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantCurve {
    pub points: Vec<CurvePoint>,
    /// Monotonicity of cyl in a over the accepted points, sorted by a.
    pub monotonicity: Monotonicity,
}

/// The invariant over an orbit table; failed grid points are skipped.
pub fn invariant_curve(p: &DimensionParams, table: &[Result<PeriodicOrbit>]) -> InvariantCurve {
    let mut points: Vec<CurvePoint> = table
        .iter()
        .filter_map(|o| o.as_ref().ok())
        .map(|o| CurvePoint {
            a: o.a,
            cyl: pohozaev_of_orbit(p, o).cyl,
        })
        .collect();
    points.sort_by(|x, y| x.a.total_cmp(&y.a));
    let monotonicity = monotonicity(points.iter().map(|q| q.cyl));
    InvariantCurve {
        points,
        monotonicity,
    }
}

fn monotonicity(values: impl Iterator<Item = f64>) -> Monotonicity {
    let v: Vec<f64> = values.collect();
    if v.len() < 2 {
        return Monotonicity::Undetermined;
    }
    let up = v.windows(2).all(|w| w[1] > w[0]);
    let down = v.windows(2).all(|w| w[1] < w[0]);
    match (up, down) {
        (true, _) => Monotonicity::Increasing,
        (_, true) => Monotonicity::Decreasing,
        _ => Monotonicity::NonMonotone,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Execution;
    use crate::orbit::{orbit_table, shoot, ShootOptions};
    use approx::assert_relative_eq;

    fn p5() -> DimensionParams {
        DimensionParams::new(5).unwrap()
    }

    #[test]
    fn cylinder_value() {
        let p = p5();
        let o = PeriodicOrbit::cylinder(&p, 64).unwrap();
        let v = pohozaev_of_orbit(&p, &o);
        let a0 = (5.0f64 / 21.0).powf(0.125);
        assert_relative_eq!(
            v.cyl,
            a0 * a0 * 25.0 / 16.0 * (0.1 - 0.5),
            max_relative = 1e-14
        );
        assert_relative_eq!(v.cyl, -0.43658, epsilon = 1e-5);
        assert_relative_eq!(v.sph, v.omega * v.cyl, max_relative = 1e-14);
        assert_relative_eq!(
            v.omega,
            8.0 * std::f64::consts::PI.powi(2) / 3.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn spherical_profile_has_zero_invariant() {
        for n in 5..=9 {
            let p = DimensionParams::new(n).unwrap();
            let ts: Vec<f64> = (0..=400).map(|k| -20.0 + 0.1 * k as f64).collect();
            let v = pohozaev_of_spherical(&p, &ts).unwrap();
            assert!(v.cyl.abs() < 1e-12 && v.conservation < 1e-12, "n={n} {v:?}");
        }
    }

    #[test]
    fn orbit_invariant_is_negative_and_conserved() {
        let p = p5();
        let o = shoot(&p, 0.6 * p.a0, &ShootOptions::default()).unwrap();
        let v = pohozaev_of_orbit(&p, &o);
        assert!(v.cyl < 0.0);
        assert!(v.conservation < 1e-9 * (1.0 + v.cyl.abs()));
        assert_relative_eq!(v.cyl, o.energy, max_relative = 1e-15);
    }

    #[test]
    fn curve_tends_to_zero_towards_the_spherical_limit() {
        let p = p5();
        let grid: Vec<f64> = [0.1, 0.3, 0.6, 0.9, 1.0].iter().map(|f| f * p.a0).collect();
        let table = orbit_table(&p, &grid, &ShootOptions::default(), Execution::Sequential);
        let c = invariant_curve(&p, &table);
        assert_eq!(c.points.len(), 5);
        assert!(c.points.iter().all(|q| q.cyl < 0.0));
        assert!(c.points[0].cyl.abs() < c.points[1].cyl.abs());
        assert_eq!(c.monotonicity, Monotonicity::Decreasing);
        assert_relative_eq!(c.points[4].cyl, p.cylinder_energy(), max_relative = 1e-14);
    }

    #[test]
    fn empty_and_single_curves() {
        let p = p5();
        let c = invariant_curve(&p, &[]);
        assert!(c.points.is_empty());
        assert_eq!(c.monotonicity, Monotonicity::Undetermined);
        let one = invariant_curve(&p, &[PeriodicOrbit::cylinder(&p, 16)]);
        assert_eq!(one.points.len(), 1);
    }
}
