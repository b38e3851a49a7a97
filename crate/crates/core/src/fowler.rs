//! The radial Fowler ODE
//!
//!   v'''' - K2 v'' + K0 v = c(n) v^(2** - 1)
//!
//! written as a first-order system on (v, v', v'', v'''), its Hamiltonian,
//! an adaptive integrator with escape detection, and the superharmonicity
//! test in physical radial coordinates.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{Control, DenseSolution, Dopri5};
use crate::params::DimensionParams;

/// Blow-up fires once |v| exceeds `BLOW_UP_FACTOR * a0`.
pub const BLOW_UP_FACTOR: f64 = 10.0 * 1e3;
/// Blow-up also fires once |v'''| exceeds this.
pub const BLOW_UP_V3: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FowlerState {
    pub v: f64,
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
}

impl FowlerState {
    pub const ZERO: FowlerState = FowlerState::new(0.0, 0.0, 0.0, 0.0);

    pub const fn new(v: f64, v1: f64, v2: f64, v3: f64) -> Self {
        Self { v, v1, v2, v3 }
    }

    /// Initial data of the Cauchy problem: v(0) = a, v''(0) = b.
    pub const fn shooting(a: f64, b: f64) -> Self {
        Self::new(a, 0.0, b, 0.0)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.v, self.v1, self.v2, self.v3]
    }

    pub fn from_array(y: [f64; 4]) -> Self {
        Self::new(y[0], y[1], y[2], y[3])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }

    /// Time reversal t -> -t.
    pub fn reversed(self) -> Self {
        Self::new(self.v, -self.v1, self.v2, -self.v3)
    }
}

/// Vector field with the nonlinearity extended oddly to v < 0. Agrees with
/// [`rhs`] wherever the latter is defined.
pub(crate) fn field(p: &DimensionParams, y: &[f64; 4]) -> [f64; 4] {
    [
        y[1],
        y[2],
        y[3],
        p.k2 * y[2] - p.k0 * y[0] + p.c_n * p.nonlinearity(y[0]),
    ]
}

/// Time derivative of the state. Negative `v` is an inadmissible excursion.
pub fn rhs(p: &DimensionParams, s: FowlerState) -> Result<FowlerState> {
    if s.v < 0.0 {
        return Err(Error::NegativeValue(s.v));
    }
    if !s.is_finite() {
        return Err(Error::InvalidArgument("non-finite state".into()));
    }
    Ok(FowlerState::from_array(field(p, &s.to_array())))
}

/// H = -v''' v' + v''^2/2 + (K2/2) v'^2 - (K0/2) v^2 + c_hat v^(2**).
pub fn hamiltonian(p: &DimensionParams, s: FowlerState) -> f64 {
    let pot = if s.v == 0.0 {
        0.0
    } else {
        (p.sobolev_exp * s.v.abs().ln()).exp()
    };
    -s.v3 * s.v1 + 0.5 * s.v2 * s.v2 + 0.5 * p.k2 * s.v1 * s.v1 - 0.5 * p.k0 * s.v * s.v
        + p.c_hat * pot
}

/// Why an integration stopped before the end of its span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Halt {
    ZeroCrossing { t: f64 },
    BlowUp { t: f64 },
}

impl Halt {
    pub fn time(&self) -> f64 {
        match *self {
            Halt::ZeroCrossing { t } | Halt::BlowUp { t } => t,
        }
    }
}

impl From<Halt> for Error {
    fn from(h: Halt) -> Self {
        match h {
            Halt::ZeroCrossing { t } => Error::ZeroCrossing { t },
            Halt::BlowUp { t } => Error::BlowUp { t },
        }
    }
}

/// Sampled solution of the Fowler ODE with its energy diagnostic.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub states: Vec<FowlerState>,
    /// max |H(t) - H(t0)| / max(|H(t0)|, eps) over the samples.
    pub energy_drift: f64,
    derivs: Vec<[f64; 4]>,
    dense: Option<DenseSolution<4>>,
}

impl Trajectory {
    /// Builds a trajectory from samples and their time derivatives, which
    /// drive cubic Hermite interpolation between samples.
    pub fn from_samples(
        p: &DimensionParams,
        t: Vec<f64>,
        states: Vec<FowlerState>,
        derivs: Vec<[f64; 4]>,
    ) -> Result<Self> {
        if t.len() != states.len() || t.len() != derivs.len() || t.is_empty() {
            return Err(Error::InvalidArgument(
                "sample arrays must be non-empty and aligned".into(),
            ));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "sample times must be strictly increasing".into(),
            ));
        }
        if states.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument("non-finite state".into()));
        }
        let energy_drift = energy_drift(p, &states);
        Ok(Self {
            t,
            states,
            energy_drift,
            derivs,
            dense: None,
        })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn t_start(&self) -> f64 {
        self.t[0]
    }

    pub fn t_end(&self) -> f64 {
        self.t[self.t.len() - 1]
    }

    /// Interpolated state; `None` outside the sampled span.
    pub fn state_at(&self, t: f64) -> Option<FowlerState> {
        if t < self.t_start() || t > self.t_end() {
            return None;
        }
        if let Some(d) = &self.dense {
            return d.eval(t).map(FowlerState::from_array);
        }
        let i = self
            .t
            .partition_point(|&x| x <= t)
            .clamp(1, self.t.len() - 1)
            - 1;
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (y0, y1) = (self.states[i].to_array(), self.states[i + 1].to_array());
        let (d0, d1) = (self.derivs[i], self.derivs[i + 1]);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let mut y = [0.0; 4];
        for k in 0..4 {
            y[k] = h00 * y0[k] + h10 * h * d0[k] + h01 * y1[k] + h11 * h * d1[k];
        }
        Some(FowlerState::from_array(y))
    }
}

fn energy_drift(p: &DimensionParams, states: &[FowlerState]) -> f64 {
    let h0 = hamiltonian(p, states[0]);
    let scale = h0.abs().max(f64::EPSILON);
    states
        .iter()
        .map(|s| (hamiltonian(p, *s) - h0).abs())
        .fold(0.0, f64::max)
        / scale
}

/// Absolute tolerance paired with a relative one for Fowler states.
pub(crate) fn atol_for(p: &DimensionParams, rtol: f64) -> f64 {
    (rtol * 1e-2 * p.a0).max(1e-300)
}

/// Integrates over `t_span` and reports an early halt instead of failing.
pub fn integrate_flagged(
    p: &DimensionParams,
    s0: FowlerState,
    t_span: (f64, f64),
    tolerance: f64,
) -> Result<(Trajectory, Option<Halt>)> {
    if !(tolerance > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if !s0.is_finite() {
        return Err(Error::InvalidArgument("non-finite initial state".into()));
    }
    if s0.v < 0.0 {
        return Err(Error::NegativeValue(s0.v));
    }
    if is_equilibrium(p, s0) {
        return Ok((constant_trajectory(s0, t_span), None));
    }
    let solver = Dopri5::new(tolerance, atol_for(p, tolerance));
    let v_guard = BLOW_UP_FACTOR * p.a0;
    let mut t = vec![t_span.0];
    let mut states = vec![s0];
    let mut derivs = vec![field(p, &s0.to_array())];
    let mut dense = DenseSolution { steps: Vec::new() };
    let mut halt = None;
    solver.solve(
        |_, y| field(p, y),
        t_span.0,
        s0.to_array(),
        t_span.1,
        |step| {
            let y1 = step.y1;
            let mut t_acc = step.t1();
            if y1[0] < 0.0 {
                t_acc = step.locate(|y| y[0]);
                halt = Some(Halt::ZeroCrossing { t: t_acc });
            } else if y1[0].abs() > v_guard || y1[3].abs() > BLOW_UP_V3 || !y1[0].is_finite() {
                if y1[0].abs() > v_guard {
                    t_acc = step.locate(|y| y[0].abs() - v_guard);
                }
                halt = Some(Halt::BlowUp { t: t_acc });
            }
            let end = if halt.is_some() { step.eval(t_acc) } else { y1 };
            t.push(t_acc);
            states.push(FowlerState::from_array(end));
            derivs.push(field(p, &end));
            dense.steps.push(step.clone());
            if halt.is_some() {
                Control::Stop
            } else {
                Control::Continue
            }
        },
    )?;
    // keep times strictly increasing for backward runs
    if t_span.1 < t_span.0 {
        t.reverse();
        states.reverse();
        derivs.reverse();
    }
    let energy_drift = energy_drift(p, &states);
    Ok((
        Trajectory {
            t,
            states,
            energy_drift,
            derivs,
            dense: Some(dense),
        },
        halt,
    ))
}

/// Both equilibria are hyperbolic, so rounding in the vector field would
/// otherwise grow like e^{2.8 t} and end the run within a few dozen units.
fn is_equilibrium(p: &DimensionParams, s: FowlerState) -> bool {
    s.v1 == 0.0 && s.v2 == 0.0 && s.v3 == 0.0 && (s.v == 0.0 || s.v == p.a0)
}

fn constant_trajectory(s0: FowlerState, t_span: (f64, f64)) -> Trajectory {
    let (lo, hi) = if t_span.0 <= t_span.1 {
        t_span
    } else {
        (t_span.1, t_span.0)
    };
    let count = ((hi - lo) / 0.1).ceil().max(1.0) as usize;
    let mut t: Vec<f64> = (0..=count)
        .map(|k| lo + (hi - lo) * k as f64 / count as f64)
        .collect();
    t.dedup();
    let states = vec![s0; t.len()];
    let derivs = vec![[0.0; 4]; t.len()];
    Trajectory {
        t,
        states,
        energy_drift: 0.0,
        derivs,
        dense: None,
    }
}

/// Integrates over `t_span`; an early halt is an error carrying its time.
pub fn integrate(
    p: &DimensionParams,
    s0: FowlerState,
    t_span: (f64, f64),
    tolerance: f64,
) -> Result<Trajectory> {
    let (traj, halt) = integrate_flagged(p, s0, t_span, tolerance)?;
    match halt {
        Some(h) => Err(h.into()),
        None => Ok(traj),
    }
}

/// A radial function and its first two r-derivatives at radius `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialSample {
    pub r: f64,
    pub u: f64,
    pub du: f64,
    pub d2u: f64,
}

impl RadialSample {
    /// Chain rule for u(r) = r^(-gamma) v(t), t = -ln r.
    pub fn from_cylinder(p: &DimensionParams, t: f64, v: f64, v1: f64, v2: f64) -> Self {
        let g = p.gamma;
        let r = (-t).exp();
        let rg = r.powf(-g);
        Self {
            r,
            u: rg * v,
            du: -rg / r * (g * v + v1),
            d2u: rg / (r * r) * ((g + 1.0) * (g * v + v1) + g * v1 + v2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuperharmonicReport {
    pub holds: bool,
    /// Minimum of -Delta u over the samples.
    pub min_margin: f64,
}

/// Checks -Delta u = -(u'' + (n - 1) u' / r) > 0 at every sample.
pub fn superharmonic_check(p: &DimensionParams, samples: &[RadialSample]) -> SuperharmonicReport {
    let nm1 = f64::from(p.n) - 1.0;
    let min_margin = samples
        .iter()
        .map(|s| -(s.d2u + nm1 * s.du / s.r))
        .fold(f64::INFINITY, f64::min);
    SuperharmonicReport {
        holds: !samples.is_empty() && min_margin > 0.0,
        min_margin,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p5() -> DimensionParams {
        DimensionParams::new(5).unwrap()
    }

    /// (cosh t)^(-gamma) and its first three derivatives, with s = tanh t.
    fn spherical(g: f64, t: f64) -> FowlerState {
        let s = t.tanh();
        let v = t.cosh().powf(-g);
        let v1 = -g * s * v;
        let v2 = v * (g * g * s * s - g * (1.0 - s * s));
        let v3 = v * s * (-g * g * g * s * s + (3.0 * g * g + 2.0 * g) * (1.0 - s * s));
        FowlerState::new(v, v1, v2, v3)
    }

    #[test]
    fn rhs_examples() {
        let p = p5();
        let cyl = rhs(&p, FowlerState::shooting(p.a0, 0.0)).unwrap();
        assert!(cyl.to_array().iter().all(|x| x.abs() < 1e-14));
        assert_eq!(rhs(&p, FowlerState::ZERO).unwrap(), FowlerState::ZERO);
        let one = rhs(&p, FowlerState::shooting(1.0, 0.0)).unwrap();
        assert_relative_eq!(one.v3, 5.0, max_relative = 1e-14);
        assert!(matches!(
            rhs(&p, FowlerState::shooting(-0.1, 0.0)),
            Err(Error::NegativeValue(_))
        ));
    }

    #[test]
    fn hamiltonian_examples() {
        let p = p5();
        let h = hamiltonian(&p, FowlerState::shooting(p.a0, 0.0));
        let expected = p.a0 * p.a0 * p.k0 * (0.1 - 0.5);
        assert_relative_eq!(h, expected, max_relative = 1e-14);
        assert!((h + 0.4366).abs() < 1e-4);
        assert_eq!(hamiltonian(&p, FowlerState::ZERO), 0.0);
        for k in -40..=40 {
            let s = spherical(p.gamma, 0.2 * k as f64);
            assert!(hamiltonian(&p, s).abs() < 1e-14, "t = {}", 0.2 * k as f64);
        }
    }

    #[test]
    fn spherical_derivatives_solve_the_ode() {
        // finite-difference check of the closed-form derivative chain
        let p = p5();
        let h = 1e-5;
        for &t in &[-2.0, -0.3, 0.0, 0.7, 3.0] {
            let s = spherical(p.gamma, t);
            let fd3 = (spherical(p.gamma, t + h).v2 - spherical(p.gamma, t - h).v2) / (2.0 * h);
            assert!((fd3 - s.v3).abs() < 1e-8);
            let fd4 = (spherical(p.gamma, t + h).v3 - spherical(p.gamma, t - h).v3) / (2.0 * h);
            assert!((fd4 - rhs(&p, s).unwrap().v3).abs() < 1e-7);
        }
    }

    #[test]
    fn cylinder_trajectory_is_constant() {
        let p = p5();
        let traj = integrate(&p, FowlerState::shooting(p.a0, 0.0), (0.0, 50.0), 1e-10).unwrap();
        assert!(traj.energy_drift < 1e-12);
        for s in &traj.states {
            assert!((s.v - p.a0).abs() < 1e-13);
        }
    }

    #[test]
    fn spherical_orbit_from_left_tail() {
        // The homoclinic is hyperbolic at both ends; perturbations grow like
        // e^{n/2 (t - t0)}, so the feasible double-precision window from
        // t0 = -5 ends well before +5.
        let p = p5();
        let traj = integrate(&p, spherical(p.gamma, -5.0), (-5.0, 1.0), 1e-13).unwrap();
        for k in 0..=60 {
            let t = -5.0 + 0.1 * k as f64;
            let v = traj.state_at(t).unwrap().v;
            assert!((v - spherical(p.gamma, t).v).abs() < 1e-6, "t = {t}");
        }
    }

    #[test]
    fn spherical_orbit_from_its_centre() {
        let p = p5();
        let s0 = spherical(p.gamma, 0.0);
        let fwd = integrate(&p, s0, (0.0, 5.0), 1e-13).unwrap();
        let bwd = integrate(&p, s0, (0.0, -5.0), 1e-13).unwrap();
        for k in 0..=50 {
            let t = 0.1 * k as f64;
            assert!((fwd.state_at(t).unwrap().v - spherical(p.gamma, t).v).abs() < 1e-6);
            assert!((bwd.state_at(-t).unwrap().v - spherical(p.gamma, -t).v).abs() < 1e-6);
        }
    }

    #[test]
    fn time_reversal_symmetry() {
        let p = p5();
        let s0 = FowlerState::shooting(0.6 * p.a0, 0.11);
        let fwd = integrate_flagged(&p, s0, (0.0, 3.0), 1e-12).unwrap().0;
        let bwd = integrate_flagged(&p, s0, (0.0, -3.0), 1e-12).unwrap().0;
        assert!(fwd.t_end() > 1.0 && bwd.t_start() < -1.0);
        for k in 0..=30 {
            let t = 0.1 * k as f64;
            let (Some(a), Some(b)) = (fwd.state_at(t), bwd.state_at(-t)) else {
                continue;
            };
            let b = b.reversed();
            for (x, y) in a.to_array().iter().zip(b.to_array()) {
                assert!((x - y).abs() < 1e-8, "t = {t}");
            }
        }
    }

    #[test]
    fn oversized_start_escapes() {
        let p = p5();
        let (_, halt) = integrate_flagged(
            &p,
            FowlerState::shooting(1.5 * p.a0, 0.0),
            (0.0, 200.0),
            1e-10,
        )
        .unwrap();
        assert!(halt.is_some());
        let err = integrate(
            &p,
            FowlerState::shooting(1.5 * p.a0, 0.0),
            (0.0, 200.0),
            1e-10,
        );
        assert!(matches!(
            err,
            Err(Error::BlowUp { .. }) | Err(Error::ZeroCrossing { .. })
        ));
    }

    #[test]
    fn zero_crossing_time_is_located() {
        let p = p5();
        let (traj, halt) = integrate_flagged(
            &p,
            FowlerState::shooting(0.5 * p.a0, 0.0),
            (0.0, 100.0),
            1e-11,
        )
        .unwrap();
        let Some(Halt::ZeroCrossing { t }) = halt else {
            panic!("expected a zero crossing, got {halt:?}");
        };
        assert!((traj.t_end() - t).abs() < 1e-12);
        assert!(traj.state_at(t).unwrap().v.abs() < 1e-9);
    }

    #[test]
    fn bad_inputs() {
        let p = p5();
        let s = FowlerState::shooting(0.5, 0.0);
        assert!(integrate(&p, s, (0.0, 1.0), 0.0).is_err());
        assert!(integrate(&p, s, (0.0, f64::INFINITY), 1e-8).is_err());
        assert!(integrate(&p, FowlerState::shooting(f64::NAN, 0.0), (0.0, 1.0), 1e-8).is_err());
    }

    #[test]
    fn hermite_trajectory_from_samples() {
        let p = p5();
        let ts: Vec<f64> = (0..=400).map(|k| 0.01 * k as f64).collect();
        let states = ts
            .iter()
            .map(|&t| FowlerState::new(t.sin(), t.cos(), -t.sin(), -t.cos()))
            .collect();
        let derivs = ts
            .iter()
            .map(|&t| [t.cos(), -t.sin(), -t.cos(), t.sin()])
            .collect();
        let traj = Trajectory::from_samples(&p, ts, states, derivs).unwrap();
        let s = traj.state_at(1.234).unwrap();
        assert!((s.v - 1.234f64.sin()).abs() < 1e-10);
        assert!(traj.state_at(5.0).is_none());
    }

    #[test]
    fn superharmonic_examples() {
        let p = p5();
        let g = p.gamma;
        // spherical u_{0,1}(r) = (2 / (1 + r^2))^gamma, exact r-derivatives
        let sph: Vec<RadialSample> = (0..=190)
            .map(|k| {
                let r = 0.1 + 0.01 * k as f64;
                let q = 2.0 / (1.0 + r * r);
                let u = q.powf(g);
                let dq = -4.0 * r / (1.0 + r * r).powi(2);
                let d2q = (12.0 * r * r - 4.0) / (1.0 + r * r).powi(3);
                let du = g * q.powf(g - 1.0) * dq;
                let d2u = g * (g - 1.0) * q.powf(g - 2.0) * dq * dq + g * q.powf(g - 1.0) * d2q;
                RadialSample { r, u, du, d2u }
            })
            .collect();
        assert!(superharmonic_check(&p, &sph).holds);

        let cyl: Vec<RadialSample> = (1..=100)
            .map(|k| RadialSample::from_cylinder(&p, -(0.005 * k as f64).ln(), p.a0, 0.0, 0.0))
            .collect();
        let rep = superharmonic_check(&p, &cyl);
        assert!(rep.holds);
        // -Delta(a0 r^-gamma) = gamma (n - 2 - gamma) a0 r^(-gamma - 2)
        let r = cyl[0].r;
        assert_relative_eq!(
            -(cyl[0].d2u + 4.0 * cyl[0].du / r),
            g * (3.0 - g) * p.a0 * r.powf(-g - 2.0),
            max_relative = 1e-12
        );

        let neg: Vec<RadialSample> = cyl
            .iter()
            .map(|s| RadialSample {
                u: -s.u / p.a0,
                du: -s.du / p.a0,
                d2u: -s.d2u / p.a0,
                ..*s
            })
            .collect();
        assert!(!superharmonic_check(&p, &neg).holds);
    }
}
