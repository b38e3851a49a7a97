//! Spectral bands of L_j on quasi-periodic functions, by monodromy scans
//! over sigma and by direct finite-difference eigensolves at fixed phase.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use super::linearized::{LinearizedCoefficients, Variant};
use super::monodromy::{monodromy_shifted, MonodromyOptions};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::orbit::PeriodicOrbit;
use crate::params::DimensionParams;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandScan {
    pub a: f64,
    pub j: u32,
    pub variant: Variant,
    pub delta: f64,
    pub sigma: Vec<f64>,
    /// Some multiplier of L_j - sigma has | |mu| - 1 | ≤ delta.
    pub in_band: Vec<bool>,
    /// min over multipliers of | |mu| - 1 |.
    pub distance: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
pub fn band_scan(
    p: &DimensionParams,
    orbit: &PeriodicOrbit,
    j: u32,
    variant: Variant,
    sigma_grid: &[f64],
    delta: f64,
    opts: &MonodromyOptions,
    exec: Execution,
) -> Result<BandScan> {
    if sigma_grid.windows(2).any(|w| !(w[1] > w[0])) || sigma_grid.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument(
            "sigma grid must be finite and strictly increasing".into(),
        ));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(
            "band resolution must be positive".into(),
        ));
    }
    let reports = exec.map(sigma_grid, |&s| {
        monodromy_shifted(p, orbit, j, variant, s, opts)
    });
    let mut distance = Vec::with_capacity(sigma_grid.len());
    for r in reports {
        let r = r?;
        distance.push(
            r.multipliers
                .iter()
                .map(|m| (m.norm() - 1.0).abs())
                .fold(f64::INFINITY, f64::min),
        );
    }
    Ok(BandScan {
        a: orbit.a,
        j,
        variant,
        delta,
        sigma: sigma_grid.to_vec(),
        in_band: distance.iter().map(|&d| d <= delta).collect(),
        distance,
    })
}

/// Eigenvalues (ascending) of L_j on functions with
/// phi(t + T) = e^{i alpha T} phi(t), discretized by fourth-order central
/// differences on `nodes` uniform points.
pub fn quasi_periodic_eigenvalues(
    p: &DimensionParams,
    orbit: &PeriodicOrbit,
    j: u32,
    variant: Variant,
    alpha: f64,
    nodes: usize,
) -> Result<Vec<f64>> {
    if nodes < 8 {
        return Err(Error::InvalidArgument("at least 8 nodes are needed".into()));
    }
    let coeffs = LinearizedCoefficients::new(p, j, variant);
    let h = orbit.period / nodes as f64;
    let h2 = h * h;
    let h4 = h2 * h2;
    // phi'''' and phi'' stencils over offsets -3..=3
    let d4 = [
        -1.0 / 6.0,
        2.0,
        -13.0 / 2.0,
        28.0 / 3.0,
        -13.0 / 2.0,
        2.0,
        -1.0 / 6.0,
    ];
    let d2 = [
        0.0,
        -1.0 / 12.0,
        4.0 / 3.0,
        -5.0 / 2.0,
        4.0 / 3.0,
        -1.0 / 12.0,
        0.0,
    ];
    let phase = Complex64::from_polar(1.0, alpha * orbit.period);
    let mut m = DMatrix::<Complex64>::zeros(nodes, nodes);
    for k in 0..nodes {
        for (idx, off) in (-3i64..=3).enumerate() {
            let raw = k as i64 + off;
            let col = raw.rem_euclid(nodes as i64) as usize;
            let wrap = if raw >= nodes as i64 {
                phase
            } else if raw < 0 {
                phase.conj()
            } else {
                Complex64::new(1.0, 0.0)
            };
            let w = d4[idx] / h4 - coeffs.b_jn * d2[idx] / h2;
            m[(k, col)] += wrap * w;
        }
        let t = k as f64 * h;
        m[(k, k)] += coeffs.c_at(p, orbit, t);
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// The lowest periodic eigenvalues of L_0 against the variational bound
/// c_check · mean(v^(2**))^(1 - 2/2**).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroundStateCheck {
    pub sigma0: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub lower_bound: f64,
    /// <L_0 v_a, v_a> / <v_a, v_a>, an upper bound for sigma0.
    pub rayleigh_quotient: f64,
    pub bound_holds: bool,
}

pub fn ground_state_check(
    p: &DimensionParams,
    orbit: &PeriodicOrbit,
    nodes: usize,
    tolerance: f64,
) -> Result<GroundStateCheck> {
    let ev = quasi_periodic_eigenvalues(p, orbit, 0, Variant::Scalar, 0.0, nodes)?;
    let n = 4096;
    let (mut m_crit, mut m_two) = (0.0, 0.0);
    for k in 0..n {
        let v = orbit.v(orbit.period * k as f64 / n as f64);
        m_crit += v.powf(p.sobolev_exp);
        m_two += v * v;
    }
    m_crit /= n as f64;
    m_two /= n as f64;
    let lower_bound = p.c_check * m_crit.powf(1.0 - 2.0 / p.sobolev_exp);
    Ok(GroundStateCheck {
        sigma0: ev[0],
        sigma1: ev[1],
        sigma2: ev[2],
        lower_bound,
        rayleigh_quotient: p.c_check * m_crit / m_two,
        bound_holds: ev[0] >= lower_bound - tolerance,
    })
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
    fn j0_zero_is_in_band() {
        let (p, o) = setup();
        let s = band_scan(
            &p,
            &o,
            0,
            Variant::Scalar,
            &[0.0],
            1e-4,
            &MonodromyOptions::default(),
            Execution::Parallel,
        )
        .unwrap();
        assert!(s.in_band[0]);
    }

    #[test]
    fn j1_zero_is_not_in_band() {
        let (p, o) = setup();
        let s = band_scan(
            &p,
            &o,
            1,
            Variant::Scalar,
            &[0.0],
            1e-4,
            &MonodromyOptions::default(),
            Execution::Sequential,
        )
        .unwrap();
        assert!(!s.in_band[0]);
    }

    #[test]
    fn j2_has_no_band_below_zero() {
        let (p, o) = setup();
        let grid: Vec<f64> = (0..=20).map(|k| -1.0 + 0.05 * k as f64).collect();
        let s = band_scan(
            &p,
            &o,
            2,
            Variant::Scalar,
            &grid,
            1e-4,
            &MonodromyOptions::default(),
            Execution::Parallel,
        )
        .unwrap();
        assert!(s.in_band.iter().all(|&b| !b));
    }

    #[test]
    fn strategies_agree() {
        let (p, o) = setup();
        let grid = [-3.0, -1.0, 0.5];
        let opts = MonodromyOptions::default();
        let a = band_scan(
            &p,
            &o,
            0,
            Variant::Scalar,
            &grid,
            1e-4,
            &opts,
            Execution::Sequential,
        )
        .unwrap();
        let b = band_scan(
            &p,
            &o,
            0,
            Variant::Scalar,
            &grid,
            1e-4,
            &opts,
            Execution::Parallel,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grid_must_increase() {
        let (p, o) = setup();
        let r = band_scan(
            &p,
            &o,
            0,
            Variant::Scalar,
            &[0.0, 0.0],
            1e-4,
            &MonodromyOptions::default(),
            Execution::Parallel,
        );
        assert!(r.is_err());
    }

    #[test]
    fn periodic_eigenvalues_sit_in_bands() {
        let (p, o) = setup();
        let ev = quasi_periodic_eigenvalues(&p, &o, 2, Variant::Scalar, 0.0, 512).unwrap();
        assert!(ev[0] > 0.0);
        let opts = MonodromyOptions::default();
        let rep = monodromy_shifted(&p, &o, 2, Variant::Scalar, ev[0], &opts).unwrap();
        // a periodic solution of L - sigma exists: one invariant is s = 2
        let closest = rep
            .s_values
            .iter()
            .map(|s| (s - 2.0).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(closest < 1e-3, "{:?}", rep.s_values);
    }

    #[test]
    fn constant_coefficient_spectrum() {
        // on the cylinder the periodic eigenvalues are w^4 + B w^2 + C with w = 2 pi k / T
        let p = DimensionParams::new(5).unwrap();
        let o = PeriodicOrbit::cylinder(&p, 64).unwrap();
        let ev = quasi_periodic_eigenvalues(&p, &o, 1, Variant::Scalar, 0.0, 256).unwrap();
        let c = LinearizedCoefficients::new(&p, 1, Variant::Scalar);
        let cc = c.c_of_v(&p, p.a0);
        assert!((ev[0] - cc).abs() < 1e-8);
        let w = std::f64::consts::TAU / o.period;
        let e1 = w.powi(4) + c.b_jn * w * w + cc;
        assert!((ev[1] - e1).abs() < 1e-4 * e1 && (ev[2] - e1).abs() < 1e-4 * e1);
    }

    #[test]
    fn ground_state_of_j0() {
        let (p, o) = setup();
        let g = ground_state_check(&p, &o, 512, 5e-2).unwrap();
        assert!(g.sigma0 < 0.0);
        assert!(g.sigma0 <= g.rayleigh_quotient);
        // the translation field v_a' is a periodic zero mode
        assert!(g.sigma1.abs() < 1e-3 || g.sigma2.abs() < 1e-3, "{g:?}");
    }
}
