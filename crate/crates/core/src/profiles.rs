//! Closed-form profile families, the cylindrical change of variables and
//! the Kelvin transform.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fowler::{superharmonic_check, RadialSample, SuperharmonicReport};
use crate::orbit::PeriodicOrbit;
use crate::params::DimensionParams;

/// Distance below which a deformed profile is treated as singular.
pub const SINGULAR_RADIUS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ProfileSpec {
    /// (2μ / (1 + μ²|x - x0|²))^γ
    Spherical { x0: Vec<f64>, mu: f64 },
    /// |x|^(-γ) v_a(-ln|x| + T)
    Fowler { a: f64, t_shift: f64 },
    /// Inversion, translation by x0 and inversion applied to Fowler { a, T }.
    Deformed { a: f64, t_shift: f64, x0: Vec<f64> },
    /// Λ·inner with a unit direction Λ.
    PmapLift {
        lambda: Vec<f64>,
        inner: Box<ProfileSpec>,
    },
}

impl ProfileSpec {
    fn is_singular(&self) -> bool {
        match self {
            ProfileSpec::Spherical { .. } => false,
            ProfileSpec::Fowler { .. } | ProfileSpec::Deformed { .. } => true,
            ProfileSpec::PmapLift { inner, .. } => inner.is_singular(),
        }
    }

    pub fn components(&self) -> usize {
        match self {
            ProfileSpec::PmapLift { lambda, .. } => lambda.len(),
            _ => 1,
        }
    }

    pub fn validate(&self, p: &DimensionParams) -> Result<()> {
        let n = p.n as usize;
        let check_point = |x0: &[f64]| {
            if x0.len() != n || x0.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "point must have {n} finite coordinates"
                )));
            }
            Ok(())
        };
        let check_a = |a: f64| {
            if !(a > 0.0 && a <= p.a0) {
                return Err(Error::ParameterOutOfRange { a, a0: p.a0 });
            }
            Ok(())
        };
        match self {
            ProfileSpec::Spherical { x0, mu } => {
                check_point(x0)?;
                if !(*mu > 0.0 && mu.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "mu must be positive (got {mu})"
                    )));
                }
                Ok(())
            }
            ProfileSpec::Fowler { a, t_shift } => {
                check_a(*a)?;
                finite("T", *t_shift)
            }
            ProfileSpec::Deformed { a, t_shift, x0 } => {
                check_a(*a)?;
                finite("T", *t_shift)?;
                check_point(x0)
            }
            ProfileSpec::PmapLift { lambda, inner } => {
                if matches!(**inner, ProfileSpec::PmapLift { .. }) {
                    return Err(Error::InvalidArgument("nested p-map lift".into()));
                }
                inner.validate(p)?;
                let norm = lambda.iter().map(|l| l * l).sum::<f64>().sqrt();
                let strict = inner.is_singular();
                if lambda.is_empty()
                    || (norm - 1.0).abs() > 1e-12
                    || lambda
                        .iter()
                        .any(|&l| !l.is_finite() || l < 0.0 || (strict && l == 0.0))
                {
                    return Err(Error::InvalidArgument(
                        "lambda must be a unit vector with positive entries".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    fn fowler_a(&self) -> Option<f64> {
        match self {
            ProfileSpec::Fowler { a, .. } | ProfileSpec::Deformed { a, .. } => Some(*a),
            ProfileSpec::PmapLift { inner, .. } => inner.fowler_a(),
            ProfileSpec::Spherical { .. } => None,
        }
    }
}

fn finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be finite")))
    }
}

/// Supplies the periodic orbit v_a for Fowler-type profiles.
pub trait OrbitProvider {
    fn orbit(&self, a: f64) -> Option<&PeriodicOrbit>;
}

impl OrbitProvider for PeriodicOrbit {
    fn orbit(&self, a: f64) -> Option<&PeriodicOrbit> {
        same_a(self.a, a).then_some(self)
    }
}

impl OrbitProvider for [PeriodicOrbit] {
    fn orbit(&self, a: f64) -> Option<&PeriodicOrbit> {
        self.iter().find(|o| same_a(o.a, a))
    }
}

/// No orbits; only the spherical family can be evaluated.
pub struct NoOrbits;

impl OrbitProvider for NoOrbits {
    fn orbit(&self, _a: f64) -> Option<&PeriodicOrbit> {
        None
    }
}

fn same_a(x: f64, y: f64) -> bool {
    (x - y).abs() <= 1e-12 * x.abs().max(y.abs())
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Evaluates a profile at `x ∈ R^n`; the result has one entry per component.
pub fn eval_profile(
    p: &DimensionParams,
    spec: &ProfileSpec,
    orbits: &(impl OrbitProvider + ?Sized),
    x: &[f64],
) -> Result<Vec<f64>> {
    spec.validate(p)?;
    if x.len() != p.n as usize {
        return Err(Error::InvalidArgument(format!(
            "point must have {} coordinates",
            p.n
        )));
    }
    let orbit = match spec.fowler_a() {
        Some(a) => Some(orbits.orbit(a).ok_or(Error::OrbitMissing(a))?),
        None => None,
    };
    eval_scalar_or_lift(p, spec, orbit, x)
}

fn eval_scalar_or_lift(
    p: &DimensionParams,
    spec: &ProfileSpec,
    orbit: Option<&PeriodicOrbit>,
    x: &[f64],
) -> Result<Vec<f64>> {
    match spec {
        ProfileSpec::PmapLift { lambda, inner } => {
            let u = eval_scalar(p, inner, orbit, x)?;
            Ok(lambda.iter().map(|l| l * u).collect())
        }
        _ => Ok(vec![eval_scalar(p, spec, orbit, x)?]),
    }
}

fn eval_scalar(
    p: &DimensionParams,
    spec: &ProfileSpec,
    orbit: Option<&PeriodicOrbit>,
    x: &[f64],
) -> Result<f64> {
    let g = p.gamma;
    match spec {
        ProfileSpec::Spherical { x0, mu } => Ok(spherical_radial(g, *mu, dist(x, x0))),
        ProfileSpec::Fowler { t_shift, .. } => {
            let r = norm(x);
            if r == 0.0 {
                return Err(Error::OriginEvaluation);
            }
            let o = orbit.expect("validated");
            Ok(r.powf(-g) * o.v(-r.ln() + t_shift))
        }
        ProfileSpec::Deformed { t_shift, x0, .. } => {
            let r = norm(x);
            if r == 0.0 {
                return Err(Error::OriginEvaluation);
            }
            let theta: Vec<f64> = x.iter().map(|c| c / r).collect();
            let o = orbit.expect("validated");
            Ok(r.powf(-g) * deformed_cylinder(p, o, *t_shift, x0, -r.ln(), &theta)?)
        }
        ProfileSpec::PmapLift { .. } => unreachable!("lifts are unwrapped by the caller"),
    }
}

fn spherical_radial(g: f64, mu: f64, r: f64) -> f64 {
    (2.0 * mu / (1.0 + mu * mu * r * r)).powf(g)
}

/// Deformed profile in cylinder variables,
/// |θ - x0 e^{-t}|^{-γ} v_a(t + ln|θ - x0 e^{-t}| + T).
pub fn deformed_cylinder(
    p: &DimensionParams,
    orbit: &PeriodicOrbit,
    t_shift: f64,
    x0: &[f64],
    t: f64,
    theta: &[f64],
) -> Result<f64> {
    let e = (-t).exp();
    let d = theta
        .iter()
        .zip(x0)
        .map(|(th, c)| (th - c * e) * (th - c * e))
        .sum::<f64>()
        .sqrt();
    if d < SINGULAR_RADIUS {
        return Err(Error::OriginEvaluation);
    }
    Ok(d.powf(-p.gamma) * orbit.v(t + d.ln() + t_shift))
}

/// v(t) = r^γ u(r), t = -ln r.
pub fn cylindrical_transform(
    p: &DimensionParams,
    r: &[f64],
    u: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_lengths(r, u)?;
    if let Some(bad) = r.iter().find(|&&r| !(r > 0.0)) {
        return Err(Error::InvalidArgument(format!("non-positive radius {bad}")));
    }
    Ok(r.iter()
        .zip(u)
        .map(|(&r, &u)| (-r.ln(), r.powf(p.gamma) * u))
        .unzip())
}

/// u(r) = r^(-γ) v(t), r = e^{-t}.
pub fn inverse_cylindrical_transform(
    p: &DimensionParams,
    t: &[f64],
    v: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_lengths(t, v)?;
    Ok(t.iter()
        .zip(v)
        .map(|(&t, &v)| {
            let r = (-t).exp();
            (r, (p.gamma * t).exp() * v)
        })
        .unzip())
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(
            "sample arrays differ in length".into(),
        ));
    }
    Ok(())
}

/// Inversion about the sphere ∂B_μ(x0): x0 + K²(x - x0), K = μ / |x - x0|.
pub fn sphere_inversion(x0: &[f64], mu: f64, x: &[f64]) -> Result<(Vec<f64>, f64)> {
    let d = dist(x, x0);
    if d == 0.0 {
        return Err(Error::OriginEvaluation);
    }
    let k = mu / d;
    Ok((
        x.iter()
            .zip(x0)
            .map(|(xi, ci)| ci + k * k * (xi - ci))
            .collect(),
        k,
    ))
}

/// K^(n-4) u(I(x)) at each point.
pub fn kelvin_transform<F>(
    p: &DimensionParams,
    u: F,
    x0: &[f64],
    mu: f64,
    points: &[Vec<f64>],
) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "mu must be positive (got {mu})"
        )));
    }
    let e = 2.0 * p.gamma;
    points
        .iter()
        .map(|x| {
            let (ix, k) = sphere_inversion(x0, mu, x)?;
            Ok(k.powf(e) * u(&ix)?)
        })
        .collect()
}

/// Radial derivatives f, f', ..., f'''' of (2μ / (1 + μ²r²))^γ.
fn spherical_radial_jet(g: f64, mu: f64, r: f64) -> [f64; 5] {
    let w = 1.0 + mu * mu * r * r;
    let w1 = 2.0 * mu * mu * r;
    let w2 = 2.0 * mu * mu;
    let s = -g;
    let amp = (2.0 * mu).powf(g);
    let pw = |k: f64| w.powf(s - k);
    let f0 = pw(0.0);
    let f1 = s * pw(1.0) * w1;
    let f2 = s * (s - 1.0) * pw(2.0) * w1 * w1 + s * pw(1.0) * w2;
    let f3 =
        s * (s - 1.0) * (s - 2.0) * pw(3.0) * w1.powi(3) + 3.0 * s * (s - 1.0) * pw(2.0) * w1 * w2;
    let f4 = s * (s - 1.0) * (s - 2.0) * (s - 3.0) * pw(4.0) * w1.powi(4)
        + 6.0 * s * (s - 1.0) * (s - 2.0) * pw(3.0) * w1 * w1 * w2
        + 3.0 * s * (s - 1.0) * pw(2.0) * w2 * w2;
    [amp * f0, amp * f1, amp * f2, amp * f3, amp * f4]
}

/// Radial bi-Laplacian from (f, f', f'', f''', f'''') at radius r.
pub fn radial_bilaplacian(n: u32, r: f64, d: &[f64; 5]) -> f64 {
    let m = f64::from(n) - 1.0;
    d[4] + 2.0 * m * d[3] / r + m * (m - 2.0) * d[2] / (r * r) - m * (m - 2.0) * d[1] / (r * r * r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PdeResidual {
    /// max |Δ²u - c_n u^(2**-1)|
    pub linf: f64,
    /// max |c_n u^(2**-1)|
    pub scale: f64,
}

/// Residual of Δ²u = c_n u^(2**-1) for the spherical profile at radii `rs`,
/// using exact radial derivatives.
pub fn spherical_pde_residual(p: &DimensionParams, mu: f64, rs: &[f64]) -> PdeResidual {
    let mut linf: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &r in rs {
        let d = spherical_radial_jet(p.gamma, mu, r);
        let rhs = p.c_n * p.nonlinearity(d[0]);
        linf = linf.max((radial_bilaplacian(p.n, r, &d) - rhs).abs());
        scale = scale.max(rhs.abs());
    }
    PdeResidual { linf, scale }
}

/// Radial samples (u, u', u'') of the Fowler profile with shift T.
pub fn fowler_radial_samples(
    p: &DimensionParams,
    orbit: &PeriodicOrbit,
    t_shift: f64,
    rs: &[f64],
) -> Vec<RadialSample> {
    rs.iter()
        .map(|&r| {
            let t = -r.ln() + t_shift;
            RadialSample::from_cylinder(
                p,
                -r.ln(),
                orbit.v(t),
                orbit.derivative(t, 1),
                orbit.derivative(t, 2),
            )
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsReport {
    /// min over samples of |U(r)| r^γ - a.
    pub lower_margin: f64,
    /// min over samples of max v_a - |U(r)| r^γ.
    pub upper_margin: f64,
    pub holds: bool,
    pub superharmonic: SuperharmonicReport,
}

/// Checks a r^{-γ} ≤ |U(r)| ≤ (max v_a) r^{-γ} and superharmonicity at `rs`.
pub fn bounds_check(
    p: &DimensionParams,
    orbit: &PeriodicOrbit,
    t_shift: f64,
    rs: &[f64],
    slack: f64,
) -> BoundsReport {
    let samples = fowler_radial_samples(p, orbit, t_shift, rs);
    let mut lower_margin = f64::INFINITY;
    let mut upper_margin = f64::INFINITY;
    for s in &samples {
        let scaled = s.u.abs() * s.r.powf(p.gamma);
        lower_margin = lower_margin.min(scaled - orbit.a);
        upper_margin = upper_margin.min(orbit.v_max - scaled);
    }
    BoundsReport {
        lower_margin,
        upper_margin,
        holds: !samples.is_empty() && lower_margin >= -slack && upper_margin >= -slack,
        superharmonic: superharmonic_check(p, &samples),
    }
}

/// Least-squares slope of ln(norm) against t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub std_error: f64,
    pub points: usize,
}

/// Fits ln(norm) = intercept + slope·t over the points with t in `window`.
pub fn rate_regression(curve: &[(f64, f64)], window: Option<(f64, f64)>) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = curve
        .iter()
        .filter(|(t, _)| window.is_none_or(|(lo, hi)| *t >= lo && *t <= hi))
        .copied()
        .collect();
    if pts.len() < 4 {
        return Err(Error::DegenerateRegression(format!(
            "{} points in window",
            pts.len()
        )));
    }
    if let Some((t, v)) = pts
        .iter()
        .find(|(t, v)| !(*v > 0.0) || !t.is_finite() || !v.is_finite())
    {
        return Err(Error::DegenerateRegression(format!(
            "non-positive norm {v} at t = {t}"
        )));
    }
    let m = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = pts.iter().map(|p| p.1.ln()).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateRegression("all t equal".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1.ln() - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * tm;
    let sse: f64 = pts
        .iter()
        .map(|p| (p.1.ln() - intercept - slope * p.0).powi(2))
        .sum();
    Ok(RateFit {
        slope,
        intercept,
        std_error: (sse / (m - 2.0) / sxx).sqrt(),
        points: pts.len(),
    })
}

/// Unit directions cos φ ê + sin φ f̂ in the plane of ê (along `x0`, or the
/// first axis) and a fixed orthogonal axis.
pub fn theta_circle(n: usize, x0: &[f64], count: usize) -> Vec<Vec<f64>> {
    let r = norm(x0);
    let mut e = vec![0.0; n];
    if r > 0.0 {
        e.iter_mut().zip(x0).for_each(|(ei, c)| *ei = c / r);
    } else {
        e[0] = 1.0;
    }
    // Gram-Schmidt on the coordinate axis least aligned with e.
    let k = (0..n)
        .min_by(|&i, &j| e[i].abs().total_cmp(&e[j].abs()))
        .unwrap_or(0);
    let mut f = vec![0.0; n];
    f[k] = 1.0;
    let dot = e[k];
    f.iter_mut().zip(&e).for_each(|(fi, ei)| *fi -= dot * ei);
    let fnorm = norm(&f);
    f.iter_mut().for_each(|fi| *fi /= fnorm);
    (0..count)
        .map(|i| {
            let phi = std::f64::consts::TAU * i as f64 / count as f64;
            e.iter()
                .zip(&f)
                .map(|(a, b)| phi.cos() * a + phi.sin() * b)
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ExpansionResidual {
    /// x0 = 0: the deformed and undeformed profiles coincide.
    ExactMatch,
    Slope(RateFit),
}

/// Regresses ln sup_θ |R(t, θ)| on `t_range`, where R is the deformed
/// profile minus v_a(t), minus e^{-t}⟨θ, x0⟩(-v_a' + γ v_a) when
/// `subtract_first_order`.
pub fn deformed_expansion_residual(
    p: &DimensionParams,
    orbit: &PeriodicOrbit,
    x0: &[f64],
    t_range: (f64, f64),
    subtract_first_order: bool,
) -> Result<ExpansionResidual> {
    const T_SAMPLES: usize = 101;
    const THETAS: usize = 64;
    if x0.len() != p.n as usize {
        return Err(Error::InvalidArgument(format!(
            "x0 must have {} coordinates",
            p.n
        )));
    }
    if norm(x0) == 0.0 {
        return Ok(ExpansionResidual::ExactMatch);
    }
    let thetas = theta_circle(p.n as usize, x0, THETAS);
    let mut curve = Vec::with_capacity(T_SAMPLES);
    for k in 0..T_SAMPLES {
        let t = t_range.0 + (t_range.1 - t_range.0) * k as f64 / (T_SAMPLES - 1) as f64;
        let va = orbit.v(t);
        let w = (-t).exp() * (-orbit.derivative(t, 1) + p.gamma * va);
        let mut sup: f64 = 0.0;
        for th in &thetas {
            let mut r = deformed_cylinder(p, orbit, 0.0, x0, t, th)? - va;
            if subtract_first_order {
                r -= w * th.iter().zip(x0).map(|(a, b)| a * b).sum::<f64>();
            }
            sup = sup.max(r.abs());
        }
        curve.push((t, sup));
    }
    Ok(ExpansionResidual::Slope(rate_regression(&curve, None)?))
}
