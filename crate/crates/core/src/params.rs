//! Dimension-dependent constants and spherical-harmonic eigendata.

use serde::Serialize;

use crate::error::{Error, Result};

/// Every constant of the fourth-order critical problem that depends only on
/// the dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimensionParams {
    pub n: u32,
    /// (n - 4) / 2
    pub gamma: f64,
    /// Critical Sobolev exponent 2n / (n - 4).
    pub sobolev_exp: f64,
    pub c_n: f64,
    pub c_hat: f64,
    pub c_tilde: f64,
    pub c_check: f64,
    #[serde(rename = "K0")]
    pub k0: f64,
    #[serde(rename = "K2")]
    pub k2: f64,
    #[serde(rename = "J0")]
    pub j0: f64,
    /// Cylinder equilibrium value of the Fowler ODE.
    pub a0: f64,
}

impl DimensionParams {
    pub fn new(n: u32) -> Result<Self> {
        if n < 5 {
            return Err(Error::DimensionTooSmall(n));
        }
        let nf = f64::from(n);
        let gamma = (nf - 4.0) / 2.0;
        let sobolev_exp = 2.0 * nf / (nf - 4.0);
        let c_n = nf * (nf - 4.0) * (nf * nf - 4.0) / 16.0;
        let c_tilde = c_n * (sobolev_exp - 1.0);
        Ok(Self {
            n,
            gamma,
            sobolev_exp,
            c_n,
            c_hat: c_n / sobolev_exp,
            c_tilde,
            c_check: c_n - c_tilde,
            k0: nf * nf * (nf - 4.0) * (nf - 4.0) / 16.0,
            k2: (nf * nf - 4.0 * nf + 8.0) / 2.0,
            j0: nf * (nf - 4.0) / 2.0,
            a0: (nf * (nf - 4.0) / (nf * nf - 4.0)).powf((nf - 4.0) / 8.0),
        })
    }

    /// Exponent of the linearized potential, 2** - 2 = 8 / (n - 4).
    pub fn potential_exp(&self) -> f64 {
        self.sobolev_exp - 2.0
    }

    /// `v^(2** - 1)` for `v >= 0`, extended oddly to negative arguments.
    pub fn nonlinearity(&self, v: f64) -> f64 {
        if v == 0.0 {
            0.0
        } else {
            odd_pow(v, self.sobolev_exp - 1.0)
        }
    }

    /// `|v|^(2** - 2)`; zero at the origin.
    pub fn potential(&self, v: f64) -> f64 {
        if v == 0.0 {
            0.0
        } else {
            (self.potential_exp() * v.abs().ln()).exp()
        }
    }

    /// Constant term of the j = 0 linearization about the cylinder,
    /// K0 - c_tilde a0^(2** - 2) = -n^2 (n - 4) / 2.
    pub fn cylinder_c0(&self) -> f64 {
        self.k0 - self.c_tilde * self.potential(self.a0)
    }

    /// Angular frequency of small oscillations about the cylinder.
    pub fn omega_cyl(&self) -> f64 {
        let c0 = self.cylinder_c0();
        (((self.k2 * self.k2 - 4.0 * c0).sqrt() - self.k2) / 2.0).sqrt()
    }

    /// Linearization period 2 pi / omega_cyl.
    pub fn linear_period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega_cyl()
    }

    /// Hamiltonian level of the cylinder, a0^2 K0 (1/2** - 1/2).
    pub fn cylinder_energy(&self) -> f64 {
        self.a0 * self.a0 * self.k0 * (1.0 / self.sobolev_exp - 0.5)
    }

    /// Surface area of the unit sphere in R^n, 2 pi^(n/2) / Gamma(n/2).
    pub fn omega_sphere(&self) -> f64 {
        let half = f64::from(self.n) / 2.0;
        2.0 * std::f64::consts::PI.powf(half) / gamma_half_integer(self.n)
    }

    pub fn mode(&self, j: u32) -> HarmonicMode {
        HarmonicMode {
            j,
            lambda: f64::from(j) * f64::from(j + self.n - 2),
            multiplicity: multiplicity(self.n, j),
        }
    }
}

fn odd_pow(v: f64, e: f64) -> f64 {
    v.signum() * (e * v.abs().ln()).exp()
}

/// Gamma(n/2) for a positive integer n.
fn gamma_half_integer(n: u32) -> f64 {
    // Gamma(1/2) = sqrt(pi), Gamma(1) = 1, Gamma(x + 1) = x Gamma(x)
    let (mut x, mut g) = if n.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (0.5, std::f64::consts::PI.sqrt())
    };
    let target = f64::from(n) / 2.0;
    while x < target {
        g *= x;
        x += 1.0;
    }
    g
}

/// Eigendata of -Delta on the unit sphere S^(n-1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarmonicMode {
    pub j: u32,
    pub lambda: f64,
    /// `None` once the integer closed form overflows.
    pub multiplicity: Option<u64>,
}

/// m_j = (2j + n - 2) (j + n - 3)! / ((n - 2)! j!), computed as
/// (2j + n - 2) C(j + n - 3, j) / (n - 2) in checked integer arithmetic.
fn multiplicity(n: u32, j: u32) -> Option<u64> {
    let top = u128::from(j + n - 3);
    let mut binom: u128 = 1;
    for k in 1..=u128::from(j) {
        // C(top - j + k, k) built incrementally stays integral at each step
        binom = binom.checked_mul(top - u128::from(j) + k)? / k;
    }
    let m = binom.checked_mul(u128::from(2 * j + n - 2))? / u128::from(n - 2);
    u64::try_from(m).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn n5_constants() {
        let p = DimensionParams::new(5).unwrap();
        assert_relative_eq!(p.k0, 25.0 / 16.0, max_relative = 1e-15);
        assert_relative_eq!(p.k2, 13.0 / 2.0, max_relative = 1e-15);
        assert_relative_eq!(p.j0, 5.0 / 2.0, max_relative = 1e-15);
        assert_relative_eq!(p.c_n, 105.0 / 16.0, max_relative = 1e-15);
        assert_relative_eq!(p.a0, (5.0f64 / 21.0).powf(0.125), max_relative = 1e-15);
        assert!((p.a0 - 0.83578).abs() < 1e-5);
    }

    #[test]
    fn n8_exponents() {
        let p = DimensionParams::new(8).unwrap();
        assert_eq!(p.sobolev_exp, 4.0);
        assert_eq!(p.gamma, 2.0);
    }

    #[test]
    fn rejects_small_dimensions() {
        for n in 0..5 {
            assert!(matches!(
                DimensionParams::new(n),
                Err(Error::DimensionTooSmall(_))
            ));
        }
    }

    #[test]
    fn cylinder_balance_and_identities() {
        for n in 5..=12 {
            let p = DimensionParams::new(n).unwrap();
            let nf = f64::from(n);
            assert_relative_eq!(p.k0, p.c_n * p.potential(p.a0), max_relative = 1e-14);
            let disc = p.k2 * p.k2 - 4.0 * p.k0;
            assert_relative_eq!(disc, 4.0 * (nf - 2.0).powi(2), max_relative = 1e-12);
            assert_relative_eq!(p.c_check, -nf * (nf * nf - 4.0) / 2.0, max_relative = 1e-13);
            assert!(p.c_check < 0.0);
            assert!(p.a0 < 1.0);
            assert_relative_eq!(
                p.cylinder_c0(),
                -nf * nf * (nf - 4.0) / 2.0,
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn omega_cyl_n5() {
        let p = DimensionParams::new(5).unwrap();
        // omega^4 + K2 omega^2 + C0 = 0 with C0 = -12.5
        let w2 = ((42.25f64 + 50.0).sqrt() - 6.5) / 2.0;
        assert_relative_eq!(p.omega_cyl(), w2.sqrt(), max_relative = 1e-14);
        assert!((p.omega_cyl() - 1.2459).abs() < 1e-3);
        assert!((p.linear_period() - 5.0434).abs() < 1e-3);
    }

    #[test]
    fn sphere_areas() {
        let pi = std::f64::consts::PI;
        let p5 = DimensionParams::new(5).unwrap();
        assert_relative_eq!(p5.omega_sphere(), 8.0 * pi * pi / 3.0, max_relative = 1e-14);
        let p6 = DimensionParams::new(6).unwrap();
        assert_relative_eq!(p6.omega_sphere(), pi.powi(3), max_relative = 1e-14);
    }

    #[test]
    fn harmonic_modes() {
        let p = DimensionParams::new(5).unwrap();
        let m0 = p.mode(0);
        assert_eq!((m0.lambda, m0.multiplicity), (0.0, Some(1)));
        let m1 = p.mode(1);
        assert_eq!((m1.lambda, m1.multiplicity), (4.0, Some(5)));
        let m2 = p.mode(2);
        assert_eq!((m2.lambda, m2.multiplicity), (10.0, Some(14)));
        for j in 0..50 {
            assert!(p.mode(j).lambda <= p.mode(j + 1).lambda);
        }
        let p6 = DimensionParams::new(6).unwrap();
        assert_eq!(p6.mode(3).multiplicity, Some(50));
    }

    #[test]
    fn multiplicity_overflow_is_reported() {
        let p = DimensionParams::new(12).unwrap();
        assert!(p.mode(1_000_000).multiplicity.is_none());
    }
}
