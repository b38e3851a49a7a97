//! Indicial roots of the limiting constant-coefficient operators, a = 0
//! (spherical, v ≡ 0) and a = a0 (cylinder, v ≡ a0).

use num_complex::Complex64;
use serde::Serialize;

use super::linearized::{LinearizedCoefficients, Variant};
use crate::params::DimensionParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitCase {
    Spherical,
    Cylindrical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicialSet {
    pub case: LimitCase,
    pub j: u32,
    pub b: f64,
    pub c: f64,
    /// Roots of rho^4 - B rho^2 + C, ordered by real then imaginary part.
    pub roots: [Complex64; 4],
    /// Real parts of `roots`, ascending.
    pub indicial_roots: [f64; 4],
}

impl IndicialSet {
    /// Distinct positive real parts, ascending.
    pub fn positive(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .indicial_roots
            .iter()
            .copied()
            .filter(|&r| r > 0.0)
            .collect();
        out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
        out
    }
}

/// Roots of rho^4 - b rho^2 + c = 0 through the quadratic in rho^2.
pub fn biquadratic_roots(b: f64, c: f64) -> [Complex64; 4] {
    let disc = Complex64::new(b * b - 4.0 * c, 0.0).sqrt();
    // larger root by the stable branch, smaller from the product c
    let big = if b >= 0.0 {
        0.5 * (b + disc)
    } else {
        0.5 * (b - disc)
    };
    let small = if big.norm() == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        c / big
    };
    let (r1, r2) = (big.sqrt(), small.sqrt());
    let mut roots = [r1, -r1, r2, -r2];
    sort_roots(&mut roots);
    roots
}

pub(crate) fn sort_roots(roots: &mut [Complex64]) {
    roots.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
}

pub fn indicial_roots_limit(p: &DimensionParams, case: LimitCase, j: u32) -> IndicialSet {
    let coeffs = LinearizedCoefficients::new(p, j, Variant::Scalar);
    let v = match case {
        LimitCase::Spherical => 0.0,
        LimitCase::Cylindrical => p.a0,
    };
    let c = coeffs.c_of_v(p, v);
    let roots = biquadratic_roots(coeffs.b_jn, c);
    let mut indicial_roots = roots.map(|r| r.re);
    indicial_roots.sort_by(f64::total_cmp);
    IndicialSet {
        case,
        j,
        b: coeffs.b_jn,
        c,
        roots,
        indicial_roots,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spherical_n5() {
        let p = DimensionParams::new(5).unwrap();
        let s0 = indicial_roots_limit(&p, LimitCase::Spherical, 0);
        let pos = s0.positive();
        assert!((pos[0] - 0.5).abs() < 1e-12 && (pos[1] - 2.5).abs() < 1e-12);
        let s1 = indicial_roots_limit(&p, LimitCase::Spherical, 1).positive();
        assert!((s1[0] - 1.5).abs() < 1e-12 && (s1[1] - 3.5).abs() < 1e-12);
    }

    #[test]
    fn cylindrical_n5() {
        let p = DimensionParams::new(5).unwrap();
        let c1 = indicial_roots_limit(&p, LimitCase::Cylindrical, 1).positive();
        assert!((c1[0] - 1.0).abs() < 1e-12);
        assert!((c1[1] - 13.5f64.sqrt()).abs() < 1e-12);
        let c0 = indicial_roots_limit(&p, LimitCase::Cylindrical, 0);
        let rho2 = (13.0 + 369f64.sqrt()) / 4.0;
        assert!((c0.indicial_roots[3] - rho2.sqrt()).abs() < 1e-12);
        assert!((c0.indicial_roots[3] - 2.8377).abs() < 1e-4);
        // imaginary pair has zero real part
        assert!(c0.indicial_roots[1].abs() < 1e-12 && c0.indicial_roots[2].abs() < 1e-12);
        let imag = c0.roots.iter().filter(|r| r.im.abs() > 1e-9).count();
        assert_eq!(imag, 2);
        assert!((c0.c + 12.5).abs() < 1e-12);
    }

    #[test]
    fn roots_solve_the_quartic() {
        for (b, c) in [
            (6.5, 1.5625),
            (6.5, -12.5),
            (1.0, 5.0),
            (-3.0, 2.0),
            (0.0, 0.0),
        ] {
            for r in biquadratic_roots(b, c) {
                let val = r.powi(4) - b * r * r + c;
                assert!(
                    val.norm() < 1e-12 * (1.0 + b.abs() + c.abs()),
                    "b={b} c={c} r={r}"
                );
            }
        }
    }
}
