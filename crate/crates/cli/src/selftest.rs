//! Fixed battery of checks with seeded random sample points.

use delaunay4::invariants::pohozaev_of_orbit;
use delaunay4::orbit::shoot;
use delaunay4::profiles::{eval_profile, kelvin_transform, ProfileSpec};
use delaunay4::spectral::{indicial_roots_limit, monodromy, LimitCase, MonodromyOptions, Variant};
use delaunay4::{DimensionParams, ShootOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CliResult;
use crate::output::{Row, Table};

struct Check {
    name: &'static str,
    measured: f64,
    expected: f64,
    tolerance: f64,
}

impl Check {
    fn pass(&self) -> bool {
        (self.measured - self.expected).abs() <= self.tolerance
    }
}

fn random_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn run(seed: u64) -> CliResult<(Table, bool)> {
    let p = DimensionParams::new(5)?;
    let opts = ShootOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = vec![
        Check {
            name: "K0",
            measured: p.k0,
            expected: 25.0 / 16.0,
            tolerance: 0.0,
        },
        Check {
            name: "K2",
            measured: p.k2,
            expected: 6.5,
            tolerance: 0.0,
        },
        Check {
            name: "cylinder_balance",
            measured: p.c_n * p.potential(p.a0),
            expected: p.k0,
            tolerance: 1e-14 * p.k0,
        },
    ];
    let sph = indicial_roots_limit(&p, LimitCase::Spherical, 0).positive();
    checks.push(Check {
        name: "spherical_j0_low",
        measured: sph[0],
        expected: 0.5,
        tolerance: 1e-10,
    });
    checks.push(Check {
        name: "spherical_j0_high",
        measured: sph[1],
        expected: 2.5,
        tolerance: 1e-10,
    });
    let cyl = indicial_roots_limit(&p, LimitCase::Cylindrical, 1).positive();
    checks.push(Check {
        name: "cylindrical_j1_low",
        measured: cyl[0],
        expected: 1.0,
        tolerance: 1e-10,
    });
    checks.push(Check {
        name: "cylindrical_j1_high",
        measured: cyl[1],
        expected: 13.5f64.sqrt(),
        tolerance: 1e-10,
    });

    let cyl_orbit = shoot(&p, p.a0, &opts)?;
    checks.push(Check {
        name: "cylinder_energy",
        measured: cyl_orbit.energy,
        expected: p.cylinder_energy(),
        tolerance: 1e-10,
    });
    let near = shoot(&p, 0.99 * p.a0, &opts)?;
    checks.push(Check {
        name: "period_0.99a0",
        measured: near.period / p.linear_period(),
        expected: 1.0,
        tolerance: 0.01,
    });
    let mid = shoot(&p, 0.6 * p.a0, &opts)?;
    checks.push(Check {
        name: "pohozaev_sign_0.6a0",
        measured: pohozaev_of_orbit(&p, &mid).cyl.signum(),
        expected: -1.0,
        tolerance: 0.0,
    });
    let r = monodromy(&p, &mid, 1, Variant::Scalar, &MonodromyOptions::default())?;
    let unit = r
        .indicial_roots
        .iter()
        .map(|x| (x.abs() - 1.0).abs())
        .fold(f64::INFINITY, f64::min);
    checks.push(Check {
        name: "j1_unit_exponent_0.6a0",
        measured: unit,
        expected: 0.0,
        tolerance: 1e-3,
    });
    checks.push(Check {
        name: "det_residual_j1_0.6a0",
        measured: r.det_residual.unwrap_or(f64::NAN),
        expected: 0.0,
        tolerance: 1e-6,
    });

    let n = p.n as usize;
    let points: Vec<Vec<f64>> = (0..16).map(|_| random_point(&mut rng, n)).collect();
    let x0 = random_point(&mut rng, n)
        .iter()
        .map(|c| 0.3 * c)
        .collect::<Vec<_>>();
    let mu = rng.random_range(0.5..2.0);
    let base = ProfileSpec::Spherical {
        x0: vec![0.0; n],
        mu: 1.0,
    };
    let u = |x: &[f64]| eval_profile(&p, &base, &delaunay4::profiles::NoOrbits, x).map(|v| v[0]);
    let ku = |x: &[f64]| Ok(kelvin_transform(&p, u, &x0, mu, &[x.to_vec()])?[0]);
    let twice = kelvin_transform(&p, ku, &x0, mu, &points)?;
    let mut worst: f64 = 0.0;
    for (x, k) in points.iter().zip(&twice) {
        let v = u(x)?;
        worst = worst.max((k - v).abs() / v.abs());
    }
    checks.push(Check {
        name: "kelvin_involution",
        measured: worst,
        expected: 0.0,
        tolerance: 1e-12,
    });

    let fowler = ProfileSpec::Fowler {
        a: mid.a,
        t_shift: 0.0,
    };
    let deformed = ProfileSpec::Deformed {
        a: mid.a,
        t_shift: 0.0,
        x0: vec![0.0; n],
    };
    let mut worst: f64 = 0.0;
    for x in &points {
        let f = eval_profile(&p, &fowler, &mid, x)?[0];
        let d = eval_profile(&p, &deformed, &mid, x)?[0];
        worst = worst.max((f - d).abs() / f.abs());
    }
    checks.push(Check {
        name: "deformed_x0_zero",
        measured: worst,
        expected: 0.0,
        tolerance: 1e-14,
    });

    let mut t = Table::default();
    let mut all = true;
    for c in &checks {
        all &= c.pass();
        t.push(
            Row::new()
                .set("check", c.name)
                .set("measured", c.measured)
                .set("expected", c.expected)
                .set("tolerance", c.tolerance)
                .set("pass", c.pass()),
        );
    }
    Ok((t, all))
}
