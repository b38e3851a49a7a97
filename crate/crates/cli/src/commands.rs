use std::path::PathBuf;

use delaunay4::exec::Execution;
use delaunay4::fit::{fit_parameters, synthesize, FitOptions};
use delaunay4::invariants::{pohozaev_of_orbit, pohozaev_of_spherical};
use delaunay4::orbit::{a_grid, orbit_table, shoot, Spacing};
use delaunay4::profiles::{eval_profile, theta_circle, NoOrbits, ProfileSpec};
use delaunay4::spectral::{
    band_scan, indicial_roots_limit, monodromy, LimitCase, MonodromyOptions, Variant,
};
use delaunay4::{DimensionParams, PeriodicOrbit, ShootOptions};

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::output::{Row, Table};
use crate::samples::{self, Sidecar};

/// Smallest a admitted without --allow-near-spherical, as a fraction of a0.
const NEAR_SPHERICAL: f64 = 0.05;

pub struct Context {
    pub exec: Execution,
    pub output: Option<PathBuf>,
}

fn params(d: &DimArgs) -> CliResult<DimensionParams> {
    Ok(DimensionParams::new(d.n)?)
}

/// "0.6a0" → 0.6·a0, "a0" → a0, otherwise a plain number.
pub fn parse_a(p: &DimensionParams, s: &str) -> CliResult<f64> {
    let s = s.trim();
    let bad = || CliError::usage(format!("cannot parse a-value '{s}'"));
    let value = if let Some(frac) = s.strip_suffix("a0") {
        let frac = frac.trim_end_matches('*').trim();
        let f: f64 = if frac.is_empty() {
            1.0
        } else {
            frac.parse().map_err(|_| bad())?
        };
        if f == 1.0 {
            p.a0
        } else {
            f * p.a0
        }
    } else {
        s.parse().map_err(|_| bad())?
    };
    if !value.is_finite() {
        return Err(bad());
    }
    Ok(value)
}

fn grid(p: &DimensionParams, g: &GridArgs) -> CliResult<Vec<f64>> {
    let values = if g.a.is_empty() {
        let spacing = match g.spacing {
            SpacingArg::Linear => Spacing::Linear,
            SpacingArg::Log => Spacing::Log,
        };
        a_grid(
            p,
            parse_a(p, &g.a_min)?,
            parse_a(p, &g.a_max)?,
            g.count,
            spacing,
        )?
    } else {
        g.a.iter()
            .map(|s| parse_a(p, s))
            .collect::<CliResult<Vec<_>>>()?
    };
    for &a in &values {
        if !(a > 0.0 && a <= p.a0) {
            return Err(delaunay4::Error::ParameterOutOfRange { a, a0: p.a0 }.into());
        }
        if a < NEAR_SPHERICAL * p.a0 && !g.allow_near_spherical {
            return Err(CliError::usage(format!(
                "a = {a} is below {NEAR_SPHERICAL}·a0; pass --allow-near-spherical to include it"
            )));
        }
    }
    Ok(values)
}

fn shoot_opts(t: &TolArgs) -> CliResult<ShootOptions> {
    if !(t.tol > 0.0 && t.residual_tol > 0.0 && t.cluster_tol > 0.0) {
        return Err(CliError::usage("tolerances must be positive"));
    }
    Ok(ShootOptions {
        tolerance: t.tol,
        residual_tol: t.residual_tol,
        ..ShootOptions::default()
    })
}

fn mono_opts(t: &TolArgs) -> MonodromyOptions {
    MonodromyOptions {
        tolerance: t.tol,
        cluster_tol: t.cluster_tol,
        periodicity_tol: t.residual_tol,
        ..MonodromyOptions::default()
    }
}

fn variant(v: VariantArg) -> Variant {
    match v {
        VariantArg::Scalar => Variant::Scalar,
        VariantArg::Orthogonal => Variant::Orthogonal,
    }
}

fn status(e: Option<&delaunay4::Error>) -> String {
    e.map_or_else(|| "ok".into(), |e| e.to_string())
}

pub fn constants(d: &DimArgs) -> CliResult<Table> {
    let p = params(d)?;
    let mut t = Table::default();
    t.push(
        Row::new()
            .set("n", p.n)
            .set("gamma", p.gamma)
            .set("sobolev_exp", p.sobolev_exp)
            .set("c_n", p.c_n)
            .set("c_hat", p.c_hat)
            .set("c_tilde", p.c_tilde)
            .set("c_check", p.c_check)
            .set("K0", p.k0)
            .set("K2", p.k2)
            .set("J0", p.j0)
            .set("a0", p.a0)
            .set("omega_cyl", p.omega_cyl())
            .set("linear_period", p.linear_period())
            .set("cylinder_energy", p.cylinder_energy())
            .set("omega_sphere", p.omega_sphere()),
    );
    Ok(t)
}

fn orbit_row(p: &DimensionParams, a: f64, o: &delaunay4::Result<PeriodicOrbit>) -> Row {
    let ok = o.as_ref().ok();
    let inv = ok.map(|o| pohozaev_of_orbit(p, o));
    Row::new()
        .set("a", a)
        .set("a_over_a0", a / p.a0)
        .set("b", ok.map(|o| o.b_of_a))
        .set("period", ok.map(|o| o.period))
        .set("energy", ok.map(|o| o.energy))
        .set("p_cyl", inv.map(|v| v.cyl))
        .set("p_sph", inv.map(|v| v.sph))
        .set("v_max", ok.map(|o| o.v_max))
        .set("residual", ok.map(|o| o.residual))
        .set("energy_drift", ok.map(|o| o.energy_drift))
        .set("degenerate", ok.is_some_and(|o| o.degenerate))
        .set("status", status(o.as_ref().err()))
}

fn warn_failures<T>(what: &str, results: &[(f64, delaunay4::Result<T>)]) {
    for (a, r) in results {
        if let Err(e) = r {
            eprintln!("warning: {what} at a = {a}: {e}");
        }
    }
}

pub fn orbits(args: &OrbitsArgs, ctx: &Context) -> CliResult<Table> {
    let p = params(&args.dim)?;
    let g = grid(&p, &args.grid)?;
    let opts = shoot_opts(&args.tol)?;
    let table: Vec<(f64, _)> = g
        .iter()
        .copied()
        .zip(orbit_table(&p, &g, &opts, ctx.exec))
        .collect();
    warn_failures("orbit", &table);
    let mut t = Table::default();
    for (a, o) in &table {
        t.push(orbit_row(&p, *a, o));
    }
    Ok(t)
}

pub fn pohozaev(args: &OrbitsArgs, ctx: &Context) -> CliResult<Table> {
    let p = params(&args.dim)?;
    let g = grid(&p, &args.grid)?;
    let opts = shoot_opts(&args.tol)?;
    let table: Vec<(f64, _)> = g
        .iter()
        .copied()
        .zip(orbit_table(&p, &g, &opts, ctx.exec))
        .collect();
    warn_failures("orbit", &table);
    let mut t = Table::default();
    let ts: Vec<f64> = (0..=800).map(|k| -20.0 + 0.05 * k as f64).collect();
    let sph = pohozaev_of_spherical(&p, &ts).expect("non-empty grid");
    let row = |kind: &str,
               a: Option<f64>,
               v: Option<delaunay4::invariants::PohozaevValue>,
               st: String| {
        Row::new()
            .set("kind", kind)
            .set("a", a)
            .set("p_cyl", v.map(|v| v.cyl))
            .set("p_sph", v.map(|v| v.sph))
            .set("omega", v.map(|v| v.omega))
            .set("conservation", v.map(|v| v.conservation))
            .set("status", st)
    };
    t.push(row("spherical", None, Some(sph), "ok".into()));
    for (a, o) in &table {
        let v = o.as_ref().ok().map(|o| pohozaev_of_orbit(&p, o));
        t.push(row("fowler", Some(*a), v, status(o.as_ref().err())));
    }
    Ok(t)
}

pub fn spectrum(args: &SpectrumArgs, ctx: &Context) -> CliResult<Table> {
    let p = params(&args.dim)?;
    let mut g = args.grid.clone();
    if g.a.is_empty() && g.a_min == "0.3a0" && g.a_max == "a0" && g.count == 8 {
        g.a = vec!["0.6a0".into()];
    }
    let grid = grid(&p, &g)?;
    let opts = shoot_opts(&args.tol)?;
    let mono = mono_opts(&args.tol);
    let var = variant(args.variant);
    let orbits: Vec<(f64, _)> = grid
        .iter()
        .copied()
        .zip(orbit_table(&p, &grid, &opts, ctx.exec))
        .collect();
    warn_failures("orbit", &orbits);
    let jobs: Vec<(usize, u32)> = (0..orbits.len())
        .flat_map(|i| args.j.iter().map(move |&j| (i, j)))
        .collect();
    let reports = ctx.exec.map(&jobs, |&(i, j)| match &orbits[i].1 {
        Ok(o) => monodromy(&p, o, j, var, &mono),
        Err(e) => Err(e.clone()),
    });
    let mut t = Table::default();
    for (&(i, j), r) in jobs.iter().zip(&reports) {
        let a = orbits[i].0;
        let ok = r.as_ref().ok();
        let mut row = Row::new()
            .set("a", a)
            .set("a_over_a0", a / p.a0)
            .set("j", j)
            .set("variant", format!("{:?}", args.variant).to_lowercase())
            .set("period", ok.map(|r| r.period));
        for k in 0..4 {
            row = row
                .set(format!("mu{k}_re"), ok.map(|r| r.multipliers[k].re))
                .set(format!("mu{k}_im"), ok.map(|r| r.multipliers[k].im))
                .set(format!("rho{k}_re"), ok.map(|r| r.exponents[k].re))
                .set(format!("rho{k}_im"), ok.map(|r| r.exponents[k].im));
        }
        for k in 0..4 {
            row = row.set(format!("indicial{k}"), ok.map(|r| r.indicial_roots[k]));
        }
        row = row
            .set("det_residual", ok.and_then(|r| r.det_residual))
            .set("pairing_residual", ok.map(|r| r.pairing_residual))
            .set(
                "zero_freq_multiplicity",
                ok.and_then(|r| r.zero_freq_multiplicity),
            )
            .set("jordan_rank", ok.and_then(|r| r.jordan_rank))
            .set("ill_conditioned", ok.is_some_and(|r| r.ill_conditioned))
            .set("status", status(r.as_ref().err()));
        t.push(row);
    }
    Ok(t)
}

pub fn indicial(args: &IndicialArgs) -> CliResult<Table> {
    let p = params(&args.dim)?;
    let cases: &[LimitCase] = match args.case {
        CaseArg::Spherical => &[LimitCase::Spherical],
        CaseArg::Cylindrical => &[LimitCase::Cylindrical],
        CaseArg::Both => &[LimitCase::Spherical, LimitCase::Cylindrical],
    };
    let mut t = Table::default();
    for &case in cases {
        for &j in &args.j {
            let s = indicial_roots_limit(&p, case, j);
            let mut row = Row::new()
                .set("case", format!("{case:?}").to_lowercase())
                .set("j", j)
                .set("lambda", p.mode(j).lambda)
                .set("B", s.b)
                .set("C", s.c);
            for k in 0..4 {
                row = row
                    .set(format!("root{k}_re"), s.roots[k].re)
                    .set(format!("root{k}_im"), s.roots[k].im);
            }
            for k in 0..4 {
                row = row.set(format!("indicial{k}"), s.indicial_roots[k]);
            }
            t.push(row);
        }
    }
    Ok(t)
}

pub fn bands(args: &BandsArgs, ctx: &Context) -> CliResult<Table> {
    let p = params(&args.dim)?;
    let a = parse_a(&p, &args.a)?;
    if args.sigma_count < 1
        || !(args.sigma_max >= args.sigma_min)
        || (args.sigma_count > 1 && args.sigma_max == args.sigma_min)
    {
        return Err(CliError::usage(
            "sigma grid must be non-empty and increasing",
        ));
    }
    let sigma: Vec<f64> = if args.sigma_count == 1 {
        vec![args.sigma_min]
    } else {
        (0..args.sigma_count)
            .map(|k| {
                args.sigma_min
                    + (args.sigma_max - args.sigma_min) * k as f64 / (args.sigma_count - 1) as f64
            })
            .collect()
    };
    let orbit = shoot(&p, a, &shoot_opts(&args.tol)?)?;
    let scan = band_scan(
        &p,
        &orbit,
        args.j,
        variant(args.variant),
        &sigma,
        args.delta,
        &mono_opts(&args.tol),
        ctx.exec,
    )?;
    let mut t = Table::default();
    for k in 0..scan.sigma.len() {
        t.push(
            Row::new()
                .set("a", a)
                .set("j", args.j)
                .set("sigma", scan.sigma[k])
                .set("in_band", scan.in_band[k])
                .set("distance", scan.distance[k]),
        );
    }
    Ok(t)
}

fn unit(v: &[f64]) -> CliResult<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(CliError::usage("direction must be a nonzero finite vector"));
    }
    Ok(v.iter().map(|x| x / norm).collect())
}

/// Radial layouts return a table; cylinder samples are written to
/// `--output` and its sidecar directly.
pub fn profile(args: &ProfileArgs, ctx: &Context) -> CliResult<Option<Table>> {
    let p = params(&args.dim)?;
    let n = p.n as usize;
    let a = parse_a(&p, &args.a)?;
    let x0 = match (args.x0.is_empty(), args.kind, args.inner) {
        (false, _, _) => args.x0.clone(),
        (true, KindArg::Deformed, _) | (true, KindArg::Pmap, KindArg::Deformed) => {
            let mut x = vec![0.0; n];
            x[0] = 0.1;
            x
        }
        _ => vec![0.0; n],
    };
    let scalar = |k: KindArg| -> CliResult<ProfileSpec> {
        Ok(match k {
            KindArg::Spherical => ProfileSpec::Spherical {
                x0: x0.clone(),
                mu: args.mu,
            },
            KindArg::Fowler => ProfileSpec::Fowler {
                a,
                t_shift: args.t_shift,
            },
            KindArg::Deformed => ProfileSpec::Deformed {
                a,
                t_shift: args.t_shift,
                x0: x0.clone(),
            },
            KindArg::Pmap => return Err(CliError::usage("a p-map lift needs a scalar inner kind")),
        })
    };
    let spec = match args.kind {
        KindArg::Pmap => ProfileSpec::PmapLift {
            lambda: unit(&args.lambda)?,
            inner: Box::new(scalar(args.inner)?),
        },
        k => scalar(k)?,
    };
    spec.validate(&p)?;
    let needs_orbit = !matches!(args.kind, KindArg::Spherical)
        && !(args.kind == KindArg::Pmap && args.inner == KindArg::Spherical);
    let orbit = if needs_orbit {
        Some(shoot(&p, a, &shoot_opts(&args.tol)?)?)
    } else {
        None
    };
    let layout = args.layout.unwrap_or(match args.kind {
        KindArg::Fowler | KindArg::Deformed => LayoutArg::Cylinder,
        _ => LayoutArg::Radial,
    });
    match layout {
        LayoutArg::Radial => radial_profile(&p, args, &spec, orbit.as_ref()).map(Some),
        LayoutArg::Cylinder => {
            let orbit = orbit.ok_or_else(|| {
                CliError::usage("cylinder samples need a fowler or deformed kind")
            })?;
            let x0_eff = match args.kind {
                KindArg::Deformed => x0.clone(),
                KindArg::Fowler => vec![0.0; n],
                _ => {
                    return Err(CliError::usage(
                        "cylinder samples need a fowler or deformed kind",
                    ))
                }
            };
            if x0_eff.len() != n {
                return Err(CliError::usage(format!("x0 must have {n} entries")));
            }
            if !(args.t_max > args.t_min) || args.t_count < 2 || args.thetas < 1 {
                return Err(CliError::usage(
                    "t-grid and theta count must be non-trivial",
                ));
            }
            let thetas = theta_circle(n, &x0_eff, args.thetas);
            let s = synthesize(
                &p,
                &orbit,
                args.t_shift,
                &x0_eff,
                (args.t_min, args.t_max),
                args.t_count,
                &thetas,
            )?;
            let deformed = x0_eff.iter().any(|c| *c != 0.0);
            let sidecar = Sidecar {
                n: p.n,
                thetas,
                window: deformed
                    .then_some((args.t_min + 0.5, args.t_min + 0.5 + 1.5 * orbit.period)),
                estimate_x0: deformed,
            };
            write_samples(&s, &sidecar, args, ctx)?;
            Ok(None)
        }
    }
}

fn write_samples(
    s: &delaunay4::fit::CylinderSamples,
    sidecar: &Sidecar,
    args: &ProfileArgs,
    ctx: &Context,
) -> CliResult<()> {
    let out = ctx.output.as_deref().ok_or_else(|| {
        CliError::usage("cylinder samples need --output (the sidecar is written beside it)")
    })?;
    let side_path = args
        .sidecar
        .clone()
        .unwrap_or_else(|| samples::default_sidecar(out));
    crate::output::emit(Some(out), &samples::write_csv(s)?)?;
    let mut js = serde_json::to_vec_pretty(sidecar).map_err(|e| CliError::io(e.to_string()))?;
    js.push(b'\n');
    crate::output::emit(Some(&side_path), &js)
}

fn radial_profile(
    p: &DimensionParams,
    args: &ProfileArgs,
    spec: &ProfileSpec,
    orbit: Option<&PeriodicOrbit>,
) -> CliResult<Table> {
    if !(args.r_min > 0.0 && args.r_max >= args.r_min) || args.r_count < 1 {
        return Err(CliError::usage(
            "radial grid must be positive and increasing",
        ));
    }
    let n = p.n as usize;
    let mut t = Table::default();
    for k in 0..args.r_count {
        let r = if args.r_count == 1 {
            args.r_min
        } else {
            args.r_min + (args.r_max - args.r_min) * k as f64 / (args.r_count - 1) as f64
        };
        let mut x = vec![0.0; n];
        x[0] = r;
        let u = match orbit {
            Some(o) => eval_profile(p, spec, o, &x)?,
            None => eval_profile(p, spec, &NoOrbits, &x)?,
        };
        let norm = u.iter().map(|c| c * c).sum::<f64>().sqrt();
        let mut row = Row::new().set("r", r).set("t", -r.ln());
        for (i, c) in u.iter().enumerate() {
            row = row.set(format!("u{i}"), *c);
        }
        row = row.set("norm", norm).set("v", r.powf(p.gamma) * norm);
        t.push(row);
    }
    Ok(t)
}

pub fn fit(args: &FitArgs, ctx: &Context) -> CliResult<Table> {
    let p = params(&args.dim)?;
    let side = args
        .grid
        .clone()
        .unwrap_or_else(|| samples::default_sidecar(&args.input));
    let (s, sidecar) = samples::read(&args.input, &side)?;
    if sidecar.n != p.n {
        return Err(CliError::usage(format!(
            "sidecar dimension {} differs from --n {}",
            sidecar.n, p.n
        )));
    }
    let window = match args.window.as_slice() {
        [] => sidecar.window,
        [lo, hi] if hi > lo => Some((*lo, *hi)),
        _ => {
            return Err(CliError::usage(
                "--window takes two increasing values lo,hi",
            ))
        }
    };
    let opts = shoot_opts(&args.tol)?;
    if args.table_count < 2 {
        return Err(CliError::usage("--table-count must be at least 2"));
    }
    let grid = a_grid(&p, 0.1 * p.a0, p.a0, args.table_count, Spacing::Linear)?;
    let table: Vec<PeriodicOrbit> = orbit_table(&p, &grid, &opts, ctx.exec)
        .into_iter()
        .filter_map(|o| o.ok())
        .collect();
    let fo = FitOptions {
        estimate_x0: args.estimate_x0 || sidecar.estimate_x0,
        window,
        shoot: opts,
        ..FitOptions::default()
    };
    let f = fit_parameters(&p, &s, &table, &fo)?;
    let mut row = Row::new()
        .set("a_hat", f.a_hat)
        .set("a_over_a0", f.a_hat / p.a0)
        .set("t_hat", f.t_hat)
        .set("period", f.period)
        .set("energy", f.energy);
    for i in 0..p.n as usize {
        row = row.set(format!("x0_{i}"), f.x0_hat.as_ref().map(|x| x[i]));
    }
    row = row
        .set("beta0", f.beta0_rate())
        .set("beta0_se", f.beta0.map(|b| b.std_error))
        .set("beta1", f.beta1_rate())
        .set("beta1_se", f.beta1.map(|b| b.std_error))
        .set("window_lo", f.window.0)
        .set("window_hi", f.window.1);
    let mut t = Table::default();
    t.push(row);
    Ok(t)
}
