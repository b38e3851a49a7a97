//! Linearization about a p-map U = Lambda v_a.
//!
//! The coupling term of the vector operator is rank one along Lambda, so in
//! any orthonormal basis (Lambda, Lambda^perp) it splits into one scalar
//! block with coefficient c_tilde and p - 1 copies of the block with c_n.

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use serde::Serialize;

use super::linearized::Variant;
use super::monodromy::{monodromy, reversible_q_values, MonodromyOptions, SpectralReport};
use crate::error::{Error, Result};
use crate::fowler::field;
use crate::ode::{Control, Dopri5};
use crate::orbit::PeriodicOrbit;
use crate::params::DimensionParams;

/// Largest supported number of components.
pub const MAX_COMPONENTS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockDecomposition {
    pub components: usize,
    pub j: u32,
    /// The block along Lambda.
    pub parallel: SpectralReport,
    /// The block orthogonal to Lambda, present for p ≥ 2.
    pub orthogonal: Option<SpectralReport>,
    pub orthogonal_multiplicity: usize,
    /// Jacobi basis size: multipliers at 1 for j = 0, all multipliers
    /// otherwise, summed over blocks with multiplicity.
    pub basis_count: usize,
}

impl BlockDecomposition {
    /// Invariants mu + 1/mu of every block, repeated by multiplicity.
    pub fn s_values(&self) -> Vec<Complex64> {
        let mut out = self.parallel.s_values.to_vec();
        if let Some(o) = &self.orthogonal {
            for _ in 0..self.orthogonal_multiplicity {
                out.extend_from_slice(&o.s_values);
            }
        }
        out
    }
}

/// Validates a direction with strictly positive unit entries.
pub fn validate_direction(lambda: &[f64]) -> Result<()> {
    if lambda.is_empty() || lambda.len() > MAX_COMPONENTS {
        return Err(Error::InvalidArgument(format!(
            "direction must have 1..={MAX_COMPONENTS} components"
        )));
    }
    if lambda.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidArgument(
            "direction entries must be positive".into(),
        ));
    }
    let norm = lambda.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "direction must be a unit vector (norm {norm})"
        )));
    }
    Ok(())
}

fn basis_count(rep: &SpectralReport) -> usize {
    match rep.zero_freq_multiplicity {
        Some(m) => m as usize,
        None => rep.multipliers.len(),
    }
}

pub fn decompose_block(
    p: &DimensionParams,
    lambda: &[f64],
    orbit: &PeriodicOrbit,
    j: u32,
    opts: &MonodromyOptions,
) -> Result<BlockDecomposition> {
    validate_direction(lambda)?;
    let comps = lambda.len();
    let parallel = monodromy(p, orbit, j, Variant::Scalar, opts)?;
    let orthogonal = if comps > 1 {
        Some(monodromy(p, orbit, j, Variant::Orthogonal, opts)?)
    } else {
        None
    };
    let basis_count = basis_count(&parallel)
        + orthogonal
            .as_ref()
            .map_or(0, |o| (comps - 1) * basis_count(o));
    Ok(BlockDecomposition {
        components: comps,
        j,
        parallel,
        orthogonal,
        orthogonal_multiplicity: comps - 1,
        basis_count,
    })
}

/// Invariants of the fully coupled 4p-dimensional system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VectorSpectrum {
    pub components: usize,
    pub j: u32,
    /// Per block of the Lambda-adapted basis, block 0 along Lambda.
    pub s_values: Vec<Complex64>,
    /// Largest off-diagonal block entry relative to the largest entry.
    pub coupling_leak: f64,
}

macro_rules! coupled_half_period {
    ($name:ident, $p:expr, $dim:expr) => {
        fn $name(
            p: &DimensionParams,
            lambda: &[f64],
            orbit: &PeriodicOrbit,
            b: f64,
            c0: f64,
            tolerance: f64,
        ) -> Result<DMatrix<f64>> {
            const P: usize = $p;
            const M: usize = 4 * P;
            let mut y0 = [0.0; $dim];
            y0[..4].copy_from_slice(&orbit.initial_state().to_array());
            for k in 0..M {
                y0[4 + k * M + k] = 1.0;
            }
            let rhs = |_: f64, y: &[f64; $dim]| {
                let mut out = [0.0; $dim];
                out[..4].copy_from_slice(&field(p, &[y[0], y[1], y[2], y[3]]));
                let pot = p.potential(y[0]);
                let diag = c0 - p.c_n * pot;
                let rank_one = p.c_n * (p.sobolev_exp - 2.0) * pot;
                for col in 0..M {
                    let x = &y[4 + col * M..4 + (col + 1) * M];
                    let proj: f64 = (0..P).map(|i| lambda[i] * x[4 * i]).sum();
                    let o = &mut out[4 + col * M..4 + (col + 1) * M];
                    for i in 0..P {
                        let k = 4 * i;
                        o[k] = x[k + 1];
                        o[k + 1] = x[k + 2];
                        o[k + 2] = x[k + 3];
                        o[k + 3] = b * x[k + 2] - diag * x[k] + rank_one * lambda[i] * proj;
                    }
                }
                out
            };
            let solver = Dopri5::new(tolerance, tolerance * 1e-3);
            let (_, y) = solver.solve(rhs, 0.0, y0, 0.5 * orbit.period, |_| Control::Continue)?;
            Ok(DMatrix::from_column_slice(M, M, &y[4..]))
        }
    };
}

coupled_half_period!(coupled_1, 1, 20);
coupled_half_period!(coupled_2, 2, 68);
coupled_half_period!(coupled_3, 3, 148);
coupled_half_period!(coupled_4, 4, 260);

/// Orthonormal basis with first column Lambda.
fn adapted_basis(lambda: &[f64]) -> DMatrix<f64> {
    let n = lambda.len();
    let mut m = DMatrix::identity(n, n);
    m.set_column(0, &nalgebra::DVector::from_column_slice(lambda));
    let mut q = m.qr().q();
    if q[(0, 0)] * lambda[0] < 0.0 {
        q.neg_mut();
    }
    q
}

/// Integrates the coupled system in the original coordinates, rotates the
/// half-period matrix into the Lambda-adapted basis and reads off each
/// diagonal block's invariants.
pub fn vector_spectrum(
    p: &DimensionParams,
    lambda: &[f64],
    orbit: &PeriodicOrbit,
    j: u32,
    opts: &MonodromyOptions,
) -> Result<VectorSpectrum> {
    validate_direction(lambda)?;
    if !(orbit.residual <= opts.periodicity_tol) {
        return Err(Error::OrbitNotPeriodic(orbit.residual));
    }
    let lam = p.mode(j).lambda;
    let b = p.k2 + 2.0 * lam;
    let c0 = p.k0 + lam * (lam + p.j0);
    let a = match lambda.len() {
        1 => coupled_1(p, lambda, orbit, b, c0, opts.tolerance)?,
        2 => coupled_2(p, lambda, orbit, b, c0, opts.tolerance)?,
        3 => coupled_3(p, lambda, orbit, b, c0, opts.tolerance)?,
        _ => coupled_4(p, lambda, orbit, b, c0, opts.tolerance)?,
    };
    let comps = lambda.len();
    let o = adapted_basis(lambda);
    let m = 4 * comps;
    let u = DMatrix::from_fn(m, m, |r, c| {
        if r % 4 == c % 4 {
            o[(r / 4, c / 4)]
        } else {
            0.0
        }
    });
    let rotated = u.transpose() * a * &u;
    let scale = rotated.amax();
    let mut leak: f64 = 0.0;
    let mut s_values = Vec::with_capacity(2 * comps);
    for bi in 0..comps {
        for bj in 0..comps {
            let blk = rotated.view((4 * bi, 4 * bj), (4, 4));
            if bi == bj {
                let blk = Matrix4::from_fn(|r, c| blk[(r, c)]);
                s_values.extend(reversible_q_values(&blk, b).map(|q| 2.0 + 4.0 * q));
            } else {
                leak = leak.max(blk.amax() / scale);
            }
        }
    }
    Ok(VectorSpectrum {
        components: comps,
        j,
        s_values,
        coupling_leak: leak,
    })
}

/// Largest deviation between two invariant multisets, each entry measured
/// relative to max(1, |s|); `None` if the sizes differ.
pub fn spectrum_deviation(a: &[Complex64], b: &[Complex64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let key = |x: &Complex64, y: &Complex64| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im));
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(key);
    b.sort_by(key);
    Some(
        a.iter()
            .zip(&b)
            .map(|(x, y)| (x - y).norm() / x.norm().max(y.norm()).max(1.0))
            .fold(0.0, f64::max),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit::{shoot, ShootOptions};

    fn setup() -> (DimensionParams, PeriodicOrbit) {
        let p = DimensionParams::new(5).unwrap();
        let o = shoot(&p, 0.6 * p.a0, &ShootOptions::default()).unwrap();
        (p, o)
    }

    #[test]
    fn single_component_is_the_scalar_operator() {
        let (p, o) = setup();
        let opts = MonodromyOptions::default();
        let d = decompose_block(&p, &[1.0], &o, 1, &opts).unwrap();
        assert!(d.orthogonal.is_none());
        assert_eq!(
            d.parallel,
            monodromy(&p, &o, 1, Variant::Scalar, &opts).unwrap()
        );
        assert_eq!(d.basis_count, 4);
    }

    #[test]
    fn two_components_split() {
        let (p, o) = setup();
        let opts = MonodromyOptions::default();
        let lam = [0.5f64.sqrt(), 0.5f64.sqrt()];
        let d = decompose_block(&p, &lam, &o, 1, &opts).unwrap();
        assert_eq!(d.basis_count, 8);
        let v = vector_spectrum(&p, &lam, &o, 1, &opts).unwrap();
        assert!(v.coupling_leak < 1e-10, "leak {}", v.coupling_leak);
        let dev = spectrum_deviation(&v.s_values, &d.s_values()).unwrap();
        assert!(dev < 1e-8, "deviation {dev}");
    }

    #[test]
    fn three_components_j0_count() {
        let (p, o) = setup();
        let lam = [1.0 / 3f64.sqrt(); 3];
        let d = decompose_block(&p, &lam, &o, 0, &MonodromyOptions::default()).unwrap();
        assert_eq!(d.basis_count, 6);
    }

    #[test]
    fn invalid_directions() {
        let (p, o) = setup();
        let opts = MonodromyOptions::default();
        for lam in [
            vec![],
            vec![1.0, 0.0],
            vec![0.6, 0.6],
            vec![-1.0],
            vec![0.5; 5],
        ] {
            assert!(decompose_block(&p, &lam, &o, 1, &opts).is_err(), "{lam:?}");
        }
    }

    #[test]
    fn adapted_basis_is_orthonormal() {
        let lam = [0.6, 0.8];
        let q = adapted_basis(&lam);
        assert!((q.column(0)[0] - 0.6).abs() < 1e-15 && (q.column(0)[1] - 0.8).abs() < 1e-15);
        assert!((q.transpose() * &q - DMatrix::identity(2, 2)).amax() < 1e-15);
    }
}
