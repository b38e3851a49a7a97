//! Projected linearized operators
//!
//!   L_j phi = phi'''' - B phi'' + C(t) phi,
//!   B = K2 + 2 lambda_j,  C(t) = K0 + lambda_j (lambda_j + J0) - kappa v_a(t)^(2** - 2),
//!
//! with kappa = c_tilde along the profile direction and kappa = c_n for the
//! orthogonal block of a p-map.

use nalgebra::Matrix4;
use serde::Serialize;

use crate::orbit::PeriodicOrbit;
use crate::params::DimensionParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Coefficient c_tilde: the scalar operator and the parallel p-map block.
    Scalar,
    /// Coefficient c_n: the directions orthogonal to a p-map's Lambda.
    Orthogonal,
}

impl Variant {
    pub fn coupling(self, p: &DimensionParams) -> f64 {
        match self {
            Variant::Scalar => p.c_tilde,
            Variant::Orthogonal => p.c_n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearizedCoefficients {
    pub j: u32,
    pub lambda: f64,
    pub b_jn: f64,
    /// K0 + lambda (lambda + J0) - sigma.
    pub c_const: f64,
    /// Multiplier of v^(2** - 2) in C(t).
    pub coupling: f64,
    /// Spectral shift: the operator is L_j - sigma.
    pub sigma: f64,
    pub variant: Variant,
}

impl LinearizedCoefficients {
    pub fn new(p: &DimensionParams, j: u32, variant: Variant) -> Self {
        let lambda = p.mode(j).lambda;
        Self {
            j,
            lambda,
            b_jn: p.k2 + 2.0 * lambda,
            c_const: p.k0 + lambda * (lambda + p.j0),
            coupling: variant.coupling(p),
            sigma: 0.0,
            variant,
        }
    }

    /// Coefficients of L_j - sigma.
    pub fn shifted(mut self, sigma: f64) -> Self {
        self.c_const += self.sigma - sigma;
        self.sigma = sigma;
        self
    }

    /// C at a profile value v.
    pub fn c_of_v(&self, p: &DimensionParams, v: f64) -> f64 {
        self.c_const - self.coupling * p.potential(v)
    }

    /// C(t) along the orbit.
    pub fn c_at(&self, p: &DimensionParams, orbit: &PeriodicOrbit, t: f64) -> f64 {
        self.c_of_v(p, orbit.v(t))
    }
}

/// Companion matrix of phi'''' = B phi'' - C phi for X = (phi, ..., phi''').
pub fn companion(b: f64, c: f64) -> Matrix4<f64> {
    Matrix4::new(
        0.0, 1.0, 0.0, 0.0, //
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        -c, 0.0, b, 0.0,
    )
}

/// N_{a,j,n}(t) along the orbit.
pub fn companion_matrix(
    p: &DimensionParams,
    coeffs: &LinearizedCoefficients,
    orbit: &PeriodicOrbit,
    t: f64,
) -> Matrix4<f64> {
    companion(coeffs.b_jn, coeffs.c_at(p, orbit, t))
}

/// Applies X' = N X column by column to a 4×4 block stored column-major.
pub(crate) fn apply_companion(b: f64, c: f64, x: &[f64], out: &mut [f64]) {
    for col in 0..x.len() / 4 {
        let k = 4 * col;
        out[k] = x[k + 1];
        out[k + 1] = x[k + 2];
        out[k + 2] = x[k + 3];
        out[k + 3] = b * x[k + 2] - c * x[k];
    }
}

/// Symplectic form of L: X^T J Y is the Lagrange concomitant of two
/// solutions and is constant in t.
pub fn concomitant_form(b: f64) -> Matrix4<f64> {
    let mut j = Matrix4::zeros();
    j[(0, 1)] = b;
    j[(1, 0)] = -b;
    j[(0, 3)] = -1.0;
    j[(3, 0)] = 1.0;
    j[(1, 2)] = 1.0;
    j[(2, 1)] = -1.0;
    j
}
