//! Residuals of candidate Jacobi fields under L_j.

use serde::Serialize;

use super::linearized::{LinearizedCoefficients, Variant};
use crate::orbit::PeriodicOrbit;
use crate::params::DimensionParams;

/// A candidate field and its first four t-derivatives at `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JetSample {
    pub t: f64,
    pub d: [f64; 5],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JacobiResidual {
    /// max |L_j phi| over the samples.
    pub linf: f64,
    /// max |phi| over the samples.
    pub field_norm: f64,
}

/// Step of the five-point difference stencils.
const FD_STEP: f64 = 1e-2;

fn d1(f: &impl Fn(f64) -> f64, t: f64) -> f64 {
    let h = FD_STEP;
    (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h)
}

fn d2(f: &impl Fn(f64) -> f64, t: f64) -> f64 {
    let h = FD_STEP;
    (-f(t - 2.0 * h) + 16.0 * f(t - h) - 30.0 * f(t) + 16.0 * f(t + h) - f(t + 2.0 * h))
        / (12.0 * h * h)
}

/// v_a' (the T-translation field), its top derivatives by finite
/// differences of the interpolated v_a'''.
pub fn translation_field(orbit: &PeriodicOrbit, ts: &[f64]) -> Vec<JetSample> {
    let v3 = |t: f64| orbit.derivative(t, 3);
    ts.iter()
        .map(|&t| JetSample {
            t,
            d: [
                orbit.derivative(t, 1),
                orbit.derivative(t, 2),
                v3(t),
                d1(&v3, t),
                d2(&v3, t),
            ],
        })
        .collect()
}

/// v_a itself, its fourth derivative by finite differences.
pub fn profile_field(orbit: &PeriodicOrbit, ts: &[f64]) -> Vec<JetSample> {
    let v3 = |t: f64| orbit.derivative(t, 3);
    ts.iter()
        .map(|&t| JetSample {
            t,
            d: [
                orbit.v(t),
                orbit.derivative(t, 1),
                orbit.derivative(t, 2),
                v3(t),
                d1(&v3, t),
            ],
        })
        .collect()
}

/// Uniform sample times over one period.
pub fn period_grid(orbit: &PeriodicOrbit, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| orbit.period * k as f64 / count as f64)
        .collect()
}

pub fn jacobi_field_check(
    p: &DimensionParams,
    orbit: &PeriodicOrbit,
    j: u32,
    variant: Variant,
    candidate: &[JetSample],
) -> JacobiResidual {
    let coeffs = LinearizedCoefficients::new(p, j, variant);
    let mut linf: f64 = 0.0;
    let mut field_norm: f64 = 0.0;
    for s in candidate {
        let c = coeffs.c_at(p, orbit, s.t);
        let r = s.d[4] - coeffs.b_jn * s.d[2] + c * s.d[0];
        linf = linf.max(r.abs());
        field_norm = field_norm.max(s.d[0].abs());
    }
    JacobiResidual { linf, field_norm }
}
