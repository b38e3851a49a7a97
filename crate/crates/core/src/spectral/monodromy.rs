//! Floquet multipliers of the projected linearized operators.
//!
//! The coefficient C(t) is even about t = 0 and t = T/2, so with
//! R = diag(1, -1, 1, -1) and A the fundamental matrix at T/2 the monodromy
//! is M = R A^{-1} R A. Writing A in blocks over the even (phi, phi'') and
//! odd (phi', phi''') components and using the symplectic form J of the
//! operator, the invariants s = mu + 1/mu are s = 2 + 4q with q the
//! eigenvalues of the 2×2 matrix
//!
//!   Q = -A_eo J_eo^{-1} A_oe^T J_oe,   det Q = det A_eo · det A_oe.
//!
//! This never forms M, whose entries reach e^{rho T} while the multipliers
//! of interest sit near the unit circle.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use serde::Serialize;

use super::linearized::{apply_companion, concomitant_form, LinearizedCoefficients, Variant};
use crate::error::{Error, Result};
use crate::fowler::field;
use crate::ode::{Control, Dopri5};
use crate::orbit::PeriodicOrbit;
use crate::params::DimensionParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonodromyOptions {
    /// Relative tolerance of the fundamental-matrix integration.
    pub tolerance: f64,
    /// Radius of the multiplier cluster around 1.
    pub cluster_tol: f64,
    /// Relative singular-value threshold for null directions.
    pub null_tol: f64,
    /// Largest accepted orbit section defect.
    pub periodicity_tol: f64,
}

impl Default for MonodromyOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            cluster_tol: 1e-4,
            null_tol: 1e-11,
            periodicity_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    pub a: f64,
    pub j: u32,
    pub variant: Variant,
    pub sigma: f64,
    pub period: f64,
    /// The two invariants mu + 1/mu.
    pub s_values: [Complex64; 2],
    /// Ordered as (mu_1, 1/mu_1, mu_2, 1/mu_2) with |mu_k| ≥ 1.
    pub multipliers: [Complex64; 4],
    /// ln(mu) / T for each multiplier.
    pub exponents: [Complex64; 4],
    /// Real parts of the exponents, ascending.
    pub indicial_roots: [f64; 4],
    /// |det M - 1| from a separately orthonormalized full-period run.
    pub det_residual: Option<f64>,
    /// Worst violation of reciprocal and conjugate pairing.
    pub pairing_residual: f64,
    /// Number of multipliers within the cluster radius of 1 (j = 0 only).
    pub zero_freq_multiplicity: Option<u32>,
    /// Rank of M - I on the cluster's invariant subspace (j = 0 only).
    pub jordan_rank: Option<u32>,
    /// The two invariants coincide: the quartic has a repeated root pair.
    pub ill_conditioned: bool,
}

impl SpectralReport {
    /// Smallest positive indicial root, if any.
    pub fn min_positive_root(&self) -> Option<f64> {
        self.indicial_roots
            .iter()
            .copied()
            .filter(|&r| r > 1e-9)
            .reduce(f64::min)
    }
}

const DIM: usize = 20;

fn augmented_field(
    p: &DimensionParams,
    coeffs: &LinearizedCoefficients,
    y: &[f64; DIM],
) -> [f64; DIM] {
    let mut out = [0.0; DIM];
    let s = [y[0], y[1], y[2], y[3]];
    out[..4].copy_from_slice(&field(p, &s));
    let c = coeffs.c_of_v(p, y[0]);
    apply_companion(coeffs.b_jn, c, &y[4..], &mut out[4..]);
    out
}

fn pack(s: [f64; 4], m: &Matrix4<f64>) -> [f64; DIM] {
    let mut y = [0.0; DIM];
    y[..4].copy_from_slice(&s);
    y[4..].copy_from_slice(m.as_slice());
    y
}

fn unpack(y: &[f64; DIM]) -> Matrix4<f64> {
    Matrix4::from_column_slice(&y[4..])
}

fn solver(tolerance: f64) -> Dopri5 {
    Dopri5::new(tolerance, tolerance * 1e-3)
}

/// Fundamental matrix over half a period, integrated alongside the orbit.
pub fn half_period_matrix(
    p: &DimensionParams,
    orbit: &PeriodicOrbit,
    coeffs: &LinearizedCoefficients,
    tolerance: f64,
) -> Result<Matrix4<f64>> {
    let y0 = pack(orbit.initial_state().to_array(), &Matrix4::identity());
    let (_, y) = solver(tolerance).solve(
        |_, y| augmented_field(p, coeffs, y),
        0.0,
        y0,
        0.5 * orbit.period,
        |_| Control::Continue,
    )?;
    Ok(unpack(&y))
}

/// (ln |det|, sign) of the fundamental matrix over [0, span] from `start`,
/// re-orthonormalizing after every step.
fn log_det(
    p: &DimensionParams,
    coeffs: &LinearizedCoefficients,
    start: [f64; 4],
    span: f64,
    tolerance: f64,
) -> Result<(f64, f64)> {
    let mut log = 0.0;
    let mut sign = 1.0;
    let (_, y) = solver(tolerance).solve(
        |_, y| augmented_field(p, coeffs, y),
        0.0,
        pack(start, &Matrix4::identity()),
        span,
        |step| {
            let qr = unpack(&step.y1).qr();
            let r = qr.r();
            for i in 0..4 {
                log += r[(i, i)].abs().ln();
                sign *= r[(i, i)].signum();
            }
            let s = [step.y1[0], step.y1[1], step.y1[2], step.y1[3]];
            Control::Restart(pack(s, &qr.q()))
        },
    )?;
    let q_det = unpack(&y).determinant();
    Ok((log + q_det.abs().ln(), sign * q_det.signum()))
}

fn block(a: &Matrix4<f64>, rows: [usize; 2], cols: [usize; 2]) -> Matrix2<f64> {
    Matrix2::new(
        a[(rows[0], cols[0])],
        a[(rows[0], cols[1])],
        a[(rows[1], cols[0])],
        a[(rows[1], cols[1])],
    )
}

const EVEN: [usize; 2] = [0, 2];
const ODD: [usize; 2] = [1, 3];

/// The eigenvalues q of Q, larger magnitude first.
pub fn reversible_q_values(a: &Matrix4<f64>, b: f64) -> [Complex64; 2] {
    let j = concomitant_form(b);
    let a_eo = block(a, EVEN, ODD);
    let a_oe = block(a, ODD, EVEN);
    let j_eo = block(&j, EVEN, ODD);
    let j_oe = block(&j, ODD, EVEN);
    let j_eo_inv = j_eo.try_inverse().expect("J_eo is unimodular");
    let q = -(a_eo * j_eo_inv * a_oe.transpose() * j_oe);
    let tr = q.trace();
    let det = a_eo.determinant() * a_oe.determinant();
    quadratic_roots(tr, det)
}

/// Roots of x^2 - tr x + det, the larger first, the smaller from the product.
fn quadratic_roots(tr: f64, det: f64) -> [Complex64; 2] {
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let big = 0.5 * (tr + tr.signum() * disc.sqrt());
        let small = if big == 0.0 { 0.0 } else { det / big };
        [Complex64::new(big, 0.0), Complex64::new(small, 0.0)]
    } else {
        let im = 0.5 * (-disc).sqrt();
        [Complex64::new(0.5 * tr, im), Complex64::new(0.5 * tr, -im)]
    }
}

/// mu with |mu| ≥ 1 solving mu + 1/mu = 2 + 4q.
pub fn multiplier_from_q(q: Complex64) -> Complex64 {
    let s = 2.0 + 4.0 * q;
    // s^2 - 4 = 16 q (1 + q), without cancellation near s = 2
    let root = 4.0 * (q * (1.0 + q)).sqrt();
    let mu = if (s + root).norm() >= (s - root).norm() {
        (s + root) / 2.0
    } else {
        (s - root) / 2.0
    };
    if mu.norm() < 1.0 {
        1.0 / mu
    } else {
        mu
    }
}

fn null_count(m: &Matrix2<f64>, scale: f64, tol: f64) -> u32 {
    let sv = m.singular_values();
    sv.iter().filter(|&&s| s <= tol * scale).count() as u32
}

fn pairing_residual(mu: &[Complex64; 4]) -> f64 {
    let mut worst: f64 = 0.0;
    for (k, &m) in mu.iter().enumerate() {
        let recip = mu
            .iter()
            .enumerate()
            .filter(|&(l, _)| l != k)
            .map(|(_, &o)| (m * o - 1.0).norm() / m.norm().max(o.norm()).max(1.0))
            .fold(f64::INFINITY, f64::min);
        let conj = mu
            .iter()
            .map(|&o| (m - o.conj()).norm() / m.norm().max(1.0))
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(recip).max(conj);
    }
    worst
}

/// Assembles a report from the half-period fundamental matrix.
pub fn report_from_half_period(
    orbit: &PeriodicOrbit,
    coeffs: &LinearizedCoefficients,
    a_half: &Matrix4<f64>,
    opts: &MonodromyOptions,
) -> SpectralReport {
    let q = reversible_q_values(a_half, coeffs.b_jn);
    let mu1 = multiplier_from_q(q[0]);
    let mu2 = multiplier_from_q(q[1]);
    let multipliers = [mu1, 1.0 / mu1, mu2, 1.0 / mu2];
    let exponents = multipliers.map(|m| m.ln() / orbit.period);
    let mut indicial_roots = exponents.map(|e| e.re);
    indicial_roots.sort_by(f64::total_cmp);
    let s_values = q.map(|x| 2.0 + 4.0 * x);
    let ill_conditioned = (s_values[0] - s_values[1]).norm() <= 1e-8 * s_values[0].norm().max(1.0);

    let (zero_freq_multiplicity, jordan_rank) = if coeffs.j == 0 {
        let alg = multipliers
            .iter()
            .filter(|m| (*m - 1.0).norm() < opts.cluster_tol)
            .count() as u32;
        let scale = a_half.norm();
        let geo = null_count(&block(a_half, EVEN, ODD), scale, opts.null_tol)
            + null_count(&block(a_half, ODD, EVEN), scale, opts.null_tol);
        (Some(alg), Some(alg.saturating_sub(geo.min(alg))))
    } else {
        (None, None)
    };

    SpectralReport {
        a: orbit.a,
        j: coeffs.j,
        variant: coeffs.variant,
        sigma: coeffs.sigma,
        period: orbit.period,
        s_values,
        multipliers,
        exponents,
        indicial_roots,
        det_residual: None,
        pairing_residual: pairing_residual(&multipliers),
        zero_freq_multiplicity,
        jordan_rank,
        ill_conditioned,
    }
}

fn check_orbit(orbit: &PeriodicOrbit, opts: &MonodromyOptions) -> Result<()> {
    if !(orbit.residual <= opts.periodicity_tol) {
        return Err(Error::OrbitNotPeriodic(orbit.residual));
    }
    Ok(())
}

/// Floquet data of L_j - sigma over the orbit, without the determinant run.
pub fn monodromy_shifted(
    p: &DimensionParams,
    orbit: &PeriodicOrbit,
    j: u32,
    variant: Variant,
    sigma: f64,
    opts: &MonodromyOptions,
) -> Result<SpectralReport> {
    check_orbit(orbit, opts)?;
    let coeffs = LinearizedCoefficients::new(p, j, variant).shifted(sigma);
    let a_half = half_period_matrix(p, orbit, &coeffs, opts.tolerance)?;
    Ok(report_from_half_period(orbit, &coeffs, &a_half, opts))
}

/// Floquet data of L_j over the orbit, including |det M - 1|.
pub fn monodromy(
    p: &DimensionParams,
    orbit: &PeriodicOrbit,
    j: u32,
    variant: Variant,
    opts: &MonodromyOptions,
) -> Result<SpectralReport> {
    let mut report = monodromy_shifted(p, orbit, j, variant, 0.0, opts)?;
    let coeffs = LinearizedCoefficients::new(p, j, variant);
    let half = 0.5 * orbit.period;
    let top = orbit.samples.states[orbit.samples.len() / 2].to_array();
    let (l1, s1) = log_det(
        p,
        &coeffs,
        orbit.initial_state().to_array(),
        half,
        opts.tolerance,
    )?;
    let (l2, s2) = log_det(p, &coeffs, top, half, opts.tolerance)?;
    report.det_residual = Some((s1 * s2 * (l1 + l2).exp() - 1.0).abs());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit::{shoot, ShootOptions};
    use crate::spectral::indicial::{indicial_roots_limit, LimitCase};

    fn p5() -> DimensionParams {
        DimensionParams::new(5).unwrap()
    }

    #[test]
    fn product_form_matches_dominant_eigenvalue() {
        let p = p5();
        let orbit = shoot(&p, 0.9 * p.a0, &ShootOptions::default()).unwrap();
        let r = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, -1.0, 1.0, -1.0));
        for j in 1..4 {
            let c = LinearizedCoefficients::new(&p, j, Variant::Scalar);
            let a = half_period_matrix(&p, &orbit, &c, 1e-12).unwrap();
            let rep = report_from_half_period(&orbit, &c, &a, &MonodromyOptions::default());
            // the dominant eigenvalue of M is well conditioned even though M
            // is not; invert A through the symplectic form
            let jf = concomitant_form(c.b_jn);
            let a_inv = jf.try_inverse().unwrap() * a.transpose() * jf;
            let m = r * a_inv * r * a;
            let dominant = m
                .complex_eigenvalues()
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            let ours = rep.multipliers[0].norm().max(rep.multipliers[2].norm());
            assert!(
                (ours - dominant).abs() < 1e-8 * dominant,
                "j={j}: {ours} vs {dominant}"
            );
            if j == 1 {
                // the Jacobi fields e^{±t}(...) give s = 2 cosh T exactly
                let exact = 2.0 * orbit.period.cosh();
                assert!((rep.s_values[1].re - exact).abs() < 1e-8 * exact);
            }
        }
    }

    #[test]
    fn product_form_matches_direct_eigenvalues_when_well_conditioned() {
        let p = p5();
        let orbit = shoot(&p, 0.9 * p.a0, &ShootOptions::default()).unwrap();
        let c = LinearizedCoefficients::new(&p, 0, Variant::Scalar);
        let a = half_period_matrix(&p, &orbit, &c, 1e-12).unwrap();
        let rep = report_from_half_period(&orbit, &c, &a, &MonodromyOptions::default());
        let r = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, -1.0, 1.0, -1.0));
        let m = r * a.try_inverse().unwrap() * r * a;
        let tr: Complex64 = rep.multipliers.iter().sum();
        assert!((tr.re - m.trace()).abs() < 1e-6 * m.trace().abs());
    }

    #[test]
    fn constant_coefficients_reproduce_closed_forms() {
        let p = p5();
        let orbit = PeriodicOrbit::cylinder(&p, 16).unwrap();
        for j in 0..3 {
            let rep =
                monodromy(&p, &orbit, j, Variant::Scalar, &MonodromyOptions::default()).unwrap();
            let closed = indicial_roots_limit(&p, LimitCase::Cylindrical, j);
            for (x, y) in rep.indicial_roots.iter().zip(closed.indicial_roots) {
                assert!((x - y).abs() < 1e-8, "j={j}: {x} vs {y}");
            }
            assert!(rep.det_residual.unwrap() < 1e-9);
        }
    }

    #[test]
    fn j0_has_a_jordan_block_at_one() {
        let p = p5();
        let orbit = shoot(&p, 0.6 * p.a0, &ShootOptions::default()).unwrap();
        let rep = monodromy(&p, &orbit, 0, Variant::Scalar, &MonodromyOptions::default()).unwrap();
        assert_eq!(rep.zero_freq_multiplicity, Some(2));
        assert_eq!(rep.jordan_rank, Some(1));
        assert!(rep.det_residual.unwrap() < 1e-6);
    }

    #[test]
    fn j1_contains_unit_exponents() {
        let p = p5();
        let orbit = shoot(&p, 0.6 * p.a0, &ShootOptions::default()).unwrap();
        let rep = monodromy(&p, &orbit, 1, Variant::Scalar, &MonodromyOptions::default()).unwrap();
        assert!(rep.indicial_roots.iter().any(|r| (r - 1.0).abs() < 1e-3));
        assert!(rep.indicial_roots.iter().any(|r| (r + 1.0).abs() < 1e-3));
        assert!(rep.pairing_residual < 1e-6);
    }

    #[test]
    fn multiplier_from_q_edge_cases() {
        assert!((multiplier_from_q(Complex64::new(0.0, 0.0)) - 1.0).norm() < 1e-15);
        // q in (-1, 0): unit-circle pair
        let m = multiplier_from_q(Complex64::new(-0.25, 0.0));
        assert!((m.norm() - 1.0).abs() < 1e-15);
        let m = multiplier_from_q(Complex64::new(2.0, 0.0));
        assert!((m + 1.0 / m - 10.0).norm() < 1e-12);
    }

    #[test]
    fn non_periodic_orbit_is_rejected() {
        let p = p5();
        let mut orbit = shoot(&p, 0.6 * p.a0, &ShootOptions::default()).unwrap();
        orbit.residual = 1e-3;
        assert!(matches!(
            monodromy(&p, &orbit, 0, Variant::Scalar, &MonodromyOptions::default()),
            Err(Error::OrbitNotPeriodic(_))
        ));
    }
}
