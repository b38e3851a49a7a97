//! Shooting for the periodic Fowler orbits v_a, period detection and
//! tabulation over a-grids.
//!
//! Every bounded orbit is reversible about its extrema, so the shooting
//! target is the half-period section {v' = 0} at the first maximum: the
//! orbit through (a, 0, b, 0) is periodic iff v''' also vanishes there. The
//! full period is then assembled by reflection, which sidesteps the strong
//! hyperbolicity of full-period forward integration.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fowler::{self, field, hamiltonian, FowlerState, Halt, Trajectory};
use crate::interp::PeriodicHermite;
use crate::ode::{Control, DenseSolution, Dopri5};
use crate::params::DimensionParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShootOptions {
    /// Relative tolerance of the integrator.
    pub tolerance: f64,
    /// Longest run used to classify a trial b.
    pub max_span: f64,
    /// Largest accepted section defect |v'''(T/2)| / a.
    pub residual_tol: f64,
    /// Interpolation knots per period (even).
    pub knots: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_span: 400.0,
            residual_tol: 1e-7,
            knots: 2048,
        }
    }
}

impl ShootOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || !(self.max_span > 0.0) || !(self.residual_tol > 0.0) {
            return Err(Error::InvalidArgument(
                "shooting tolerances must be positive".into(),
            ));
        }
        if self.knots < 8 || !self.knots.is_multiple_of(2) {
            return Err(Error::InvalidArgument(
                "knot count must be even and at least 8".into(),
            ));
        }
        Ok(())
    }
}

/// One period of v_a with its shooting data.
#[derive(Debug, Clone)]
pub struct PeriodicOrbit {
    pub a: f64,
    pub b_of_a: f64,
    pub period: f64,
    pub energy: f64,
    /// Set for the constant orbit a = a0, whose period is the linear one.
    pub degenerate: bool,
    /// Section defect |v'''(T/2)| / a at the accepted b.
    pub residual: f64,
    /// Relative Hamiltonian drift over the computed half period.
    pub energy_drift: f64,
    pub v_max: f64,
    /// Samples over [0, T] at the interpolation knots.
    pub samples: Trajectory,
    interp: PeriodicHermite,
}

impl PeriodicOrbit {
    pub fn initial_state(&self) -> FowlerState {
        FowlerState::shooting(self.a, self.b_of_a)
    }

    /// v_a(t) for any real t.
    pub fn v(&self, t: f64) -> f64 {
        self.interp.eval(t, 0)
    }

    /// k-th derivative of v_a at t, k ≤ 3.
    pub fn derivative(&self, t: f64, k: usize) -> f64 {
        self.interp.eval(t, k)
    }

    pub fn state_at(&self, t: f64) -> FowlerState {
        FowlerState::new(
            self.interp.eval(t, 0),
            self.interp.eval(t, 1),
            self.interp.eval(t, 2),
            self.interp.eval(t, 3),
        )
    }

    /// The constant orbit v = a0.
    pub fn cylinder(p: &DimensionParams, knots: usize) -> Result<Self> {
        let s = FowlerState::shooting(p.a0, 0.0);
        let period = p.linear_period();
        let jets = vec![[p.a0, 0.0, 0.0, 0.0, 0.0, 0.0]; knots.max(2)];
        let t: Vec<f64> = (0..=knots.max(2))
            .map(|k| period * k as f64 / knots.max(2) as f64)
            .collect();
        let samples =
            Trajectory::from_samples(p, t.clone(), vec![s; t.len()], vec![[0.0; 4]; t.len()])?;
        Ok(Self {
            a: p.a0,
            b_of_a: 0.0,
            period,
            energy: hamiltonian(p, s),
            degenerate: true,
            residual: 0.0,
            energy_drift: 0.0,
            v_max: p.a0,
            samples,
            interp: PeriodicHermite::new(0.0, period, jets),
        })
    }
}

/// Jet (v, v', ..., v^(5)) of a solution through state `s`.
pub(crate) fn jet(p: &DimensionParams, s: &[f64; 4]) -> [f64; 6] {
    let f = field(p, s);
    let v5 = p.k2 * s[3] - p.k0 * s[1] + p.c_tilde * p.potential(s[0]) * s[1];
    [s[0], s[1], s[2], s[3], f[3], v5]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Low,
    High,
    Undecided,
}

fn classify(p: &DimensionParams, a: f64, b: f64, opts: &ShootOptions) -> Result<Class> {
    let s0 = FowlerState::shooting(a, b);
    let (_, halt) = fowler::integrate_flagged(p, s0, (0.0, opts.max_span), opts.tolerance)?;
    Ok(match halt {
        Some(Halt::ZeroCrossing { .. }) => Class::Low,
        Some(Halt::BlowUp { .. }) => Class::High,
        None => Class::Undecided,
    })
}

/// A run from a turning point to the next zero of v' in a given direction.
pub(crate) struct SectionRun {
    pub t_hit: f64,
    pub state: [f64; 4],
    pub dense: DenseSolution<4>,
    /// Accepted step ends up to the section, starting at the initial time.
    pub t: Vec<f64>,
    pub states: Vec<[f64; 4]>,
}

/// Integrates from `s0` at `t0` until v' crosses zero downward (`to_max`)
/// or upward (`!to_max`). Errors if the run escapes or no crossing occurs
/// within `max_span`.
pub(crate) fn run_to_section(
    p: &DimensionParams,
    s0: [f64; 4],
    t0: f64,
    to_max: bool,
    max_span: f64,
    tolerance: f64,
) -> Result<SectionRun> {
    let solver = Dopri5::new(tolerance, fowler::atol_for(p, tolerance));
    let guard = fowler::BLOW_UP_FACTOR * p.a0;
    let mut dense = DenseSolution { steps: Vec::new() };
    let mut t = vec![t0];
    let mut states = vec![s0];
    let mut hit = None;
    let mut halt = None;
    solver.solve(
        |_, y| field(p, y),
        t0,
        s0,
        t0 + max_span,
        |step| {
            dense.steps.push(step.clone());
            let crossed = if to_max {
                step.y0[1] > 0.0 && step.y1[1] <= 0.0
            } else {
                step.y0[1] < 0.0 && step.y1[1] >= 0.0
            };
            if crossed {
                let th = step.locate(|y| y[1]);
                let mut y = step.eval(th);
                y[1] = 0.0;
                t.push(th);
                states.push(y);
                hit = Some((th, y));
                return Control::Stop;
            }
            if step.y1[0] < 0.0 {
                halt = Some(Halt::ZeroCrossing {
                    t: step.locate(|y| y[0]),
                });
                return Control::Stop;
            }
            if step.y1[0].abs() > guard || step.y1[3].abs() > fowler::BLOW_UP_V3 {
                halt = Some(Halt::BlowUp { t: step.t1() });
                return Control::Stop;
            }
            t.push(step.t1());
            states.push(step.y1);
            Control::Continue
        },
    )?;
    if let Some(h) = halt {
        return Err(h.into());
    }
    let (t_hit, state) = hit.ok_or(Error::NoReturnFound)?;
    Ok(SectionRun {
        t_hit,
        state,
        dense,
        t,
        states,
    })
}

/// Section defect v'''(t*) / a at the first maximum, if the run reaches it.
fn section_defect(p: &DimensionParams, a: f64, b: f64, opts: &ShootOptions) -> Option<f64> {
    let s0 = FowlerState::shooting(a, b).to_array();
    run_to_section(p, s0, 0.0, true, opts.max_span, opts.tolerance)
        .ok()
        .map(|r| r.state[3] / a)
}

/// Computes v_a: bisection on b between the zero-crossing and escape
/// regimes, then refinement of b on the sign of the section defect down to
/// floating-point resolution.
pub fn shoot(p: &DimensionParams, a: f64, opts: &ShootOptions) -> Result<PeriodicOrbit> {
    opts.validate()?;
    if !(a > 0.0 && a <= p.a0) {
        return Err(Error::ParameterOutOfRange { a, a0: p.a0 });
    }
    if a == p.a0 {
        return PeriodicOrbit::cylinder(p, opts.knots);
    }
    let scale = p.k0 * p.a0;
    let mut lo = 0.0;
    if classify(p, a, lo, opts)? != Class::Low {
        return Err(Error::BracketNotFound { a });
    }
    let mut hi = 0.1 * scale;
    let mut found = false;
    for _ in 0..60 {
        if classify(p, a, hi, opts)? != Class::Low {
            found = true;
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    if !found {
        return Err(Error::BracketNotFound { a });
    }
    while hi - lo > 1e-12 * scale {
        let mid = 0.5 * (lo + hi);
        match classify(p, a, mid, opts)? {
            Class::Low => lo = mid,
            Class::High | Class::Undecided => hi = mid,
        }
    }

    let g_lo = section_defect(p, a, lo, opts);
    let mut best = 0.5 * (lo + hi);
    if let Some(g0) = g_lo {
        let same_side =
            |b: f64| section_defect(p, a, b, opts).is_some_and(|g| g.signum() == g0.signum());
        let (mut l, mut h) = (lo, hi);
        loop {
            let mid = 0.5 * (l + h);
            if mid <= l || mid >= h {
                break;
            }
            if same_side(mid) {
                l = mid;
            } else {
                h = mid;
            }
        }
        let gl = section_defect(p, a, l, opts).map_or(f64::INFINITY, f64::abs);
        let gh = section_defect(p, a, h, opts).map_or(f64::INFINITY, f64::abs);
        best = if gl <= gh { l } else { h };
    }
    build_orbit(p, a, best, opts)
}

fn build_orbit(p: &DimensionParams, a: f64, b: f64, opts: &ShootOptions) -> Result<PeriodicOrbit> {
    let s0 = FowlerState::shooting(a, b);
    let run = run_to_section(p, s0.to_array(), 0.0, true, opts.max_span, opts.tolerance)?;
    let residual = (run.state[3] / a).abs();
    if !(residual <= opts.residual_tol) {
        return Err(Error::ToleranceNotMet {
            what: "periodicity",
            residual,
            tolerance: opts.residual_tol,
        });
    }
    let half = run.t_hit;
    let period = 2.0 * half;
    let n = opts.knots;
    let h = period / n as f64;
    let mut jets = Vec::with_capacity(n);
    let mut half_states = Vec::with_capacity(n / 2 + 1);
    for k in 0..=n / 2 {
        let mut y = if k == 0 {
            s0.to_array()
        } else if k == n / 2 {
            run.state
        } else {
            run.dense.eval(k as f64 * h).ok_or(Error::NoReturnFound)?
        };
        if k == n / 2 {
            y[3] = 0.0;
        }
        half_states.push(y);
    }
    let mut states = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let y = if k <= n / 2 {
            half_states[k]
        } else {
            let m = half_states[n - k];
            [m[0], -m[1], m[2], -m[3]]
        };
        if k < n {
            jets.push(jet(p, &y));
        }
        states.push(FowlerState::from_array(y));
    }
    let t: Vec<f64> = (0..=n).map(|k| k as f64 * h).collect();
    let derivs = states.iter().map(|s| field(p, &s.to_array())).collect();
    let samples = Trajectory::from_samples(p, t, states, derivs)?;
    let h0 = hamiltonian(p, s0);
    let energy_drift = run
        .states
        .iter()
        .map(|y| (hamiltonian(p, FowlerState::from_array(*y)) - h0).abs())
        .fold(0.0, f64::max)
        / h0.abs().max(f64::EPSILON);
    let v_max = run.state[0];
    Ok(PeriodicOrbit {
        a,
        b_of_a: b,
        period,
        energy: h0,
        degenerate: false,
        residual,
        energy_drift,
        v_max,
        samples,
        interp: PeriodicHermite::new(0.0, period, jets),
    })
}

/// Result of [`period_detect`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodDetection {
    pub period: f64,
    /// The trajectory is constant; the period is the linear one.
    pub degenerate: bool,
}

/// First return of `traj` to the section {v' = 0} on the side of `initial`
/// (minimum if v''(t0) > 0, maximum otherwise), polished by bisection on the
/// interpolated trajectory.
pub fn period_detect(
    p: &DimensionParams,
    traj: &Trajectory,
    initial: FowlerState,
) -> Result<PeriodDetection> {
    let scale = initial.v.abs().max(f64::MIN_POSITIVE);
    let flat = traj.states.iter().all(|s| {
        s.v1.abs() <= 1e-12 * scale && s.v2.abs() <= 1e-12 * scale && s.v3.abs() <= 1e-12 * scale
    });
    if flat {
        return Ok(PeriodDetection {
            period: p.linear_period(),
            degenerate: true,
        });
    }
    let upward = initial.v2 > 0.0;
    let t0 = traj.t_start();
    for i in 0..traj.len().saturating_sub(1) {
        let (a, b) = (traj.states[i].v1, traj.states[i + 1].v1);
        let crossed = if upward {
            a < 0.0 && b >= 0.0
        } else {
            a > 0.0 && b <= 0.0
        };
        if !crossed {
            continue;
        }
        let (mut lo, mut hi) = (traj.t[i], traj.t[i + 1]);
        let g = |t: f64| traj.state_at(t).map_or(f64::NAN, |s| s.v1);
        let g_lo = g(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let gm = g(mid);
            if (gm < 0.0) == (g_lo < 0.0) && gm != 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Ok(PeriodDetection {
            period: 0.5 * (lo + hi) - t0,
            degenerate: false,
        });
    }
    Err(Error::NoReturnFound)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

/// `count` values of a from `min` to `max` (endpoints exact), each clamped
/// to a0 against rounding.
pub fn a_grid(
    p: &DimensionParams,
    min: f64,
    max: f64,
    count: usize,
    spacing: Spacing,
) -> Result<Vec<f64>> {
    if !(min > 0.0 && min <= max && max <= p.a0) {
        return Err(Error::InvalidArgument(format!(
            "a-grid [{min}, {max}] must lie in (0, a0 = {}]",
            p.a0
        )));
    }
    if count == 0 {
        return Err(Error::InvalidArgument("a-grid must be non-empty".into()));
    }
    if count == 1 {
        return Ok(vec![max]);
    }
    let last = (count - 1) as f64;
    Ok((0..count)
        .map(|k| {
            let s = k as f64 / last;
            let a = match spacing {
                Spacing::Linear => min + (max - min) * s,
                Spacing::Log => min * (max / min).powf(s),
            };
            if k == 0 {
                min
            } else if k == count - 1 {
                max
            } else {
                a.min(p.a0)
            }
        })
        .collect())
}

/// Shoots every grid point independently; failures stay per-point.
pub fn orbit_table(
    p: &DimensionParams,
    grid: &[f64],
    opts: &ShootOptions,
    exec: Execution,
) -> Vec<Result<PeriodicOrbit>> {
    exec.map(grid, |&a| shoot(p, a, opts))
}

/// Integrates `periods` full periods of the orbit as 2·`periods` half-period
/// arcs, each started from the orbit's own turning point (minimum or
/// maximum). Perturbations of the orbit grow by up to e^{rho T/2} per half
/// period, so a single forward run cannot follow it for long; the arcs keep
/// every sample on the orbit's energy level up to integration error.
pub fn integrate_periods(
    p: &DimensionParams,
    orbit: &PeriodicOrbit,
    periods: usize,
    tolerance: f64,
) -> Result<Trajectory> {
    let s0 = orbit.initial_state();
    if orbit.degenerate {
        return fowler::integrate(p, s0, (0.0, periods as f64 * orbit.period), tolerance);
    }
    let s_max = orbit.samples.states[orbit.samples.len() / 2].to_array();
    let mut t = vec![0.0];
    let mut states = vec![s0];
    let mut t_now = 0.0;
    let span = 2.0 * orbit.period;
    for half in 0..2 * periods {
        let from = if half % 2 == 0 { s0.to_array() } else { s_max };
        let run = run_to_section(p, from, t_now, half % 2 == 0, span, tolerance)?;
        for (ti, yi) in run.t.iter().zip(&run.states).skip(1) {
            t.push(*ti);
            states.push(FowlerState::from_array(*yi));
        }
        t_now = run.t_hit;
    }
    let derivs = states.iter().map(|s| field(p, &s.to_array())).collect();
    Trajectory::from_samples(p, t, states, derivs)
}
