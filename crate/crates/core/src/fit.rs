//! Recovery of (a, T, x0) from sampled cylinder data and measurement of the
//! convergence rates of the remainder.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fowler::{hamiltonian, FowlerState};
use crate::orbit::{shoot, PeriodicOrbit, ShootOptions};
use crate::params::DimensionParams;
use crate::profiles::{rate_regression, RateFit};

/// Values v(t_i, θ_k) on a uniform t-grid and a fixed set of unit directions.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderSamples {
    pub t: Vec<f64>,
    pub thetas: Vec<Vec<f64>>,
    /// values[i][k] = v(t[i], thetas[k])
    pub values: Vec<Vec<f64>>,
}

impl CylinderSamples {
    fn validate(&self, n: usize) -> Result<f64> {
        if self.t.len() < 16 {
            return Err(Error::InsufficientSpan(format!(
                "{} time samples",
                self.t.len()
            )));
        }
        if self.thetas.is_empty() || self.thetas.iter().any(|th| th.len() != n) {
            return Err(Error::InvalidArgument(format!(
                "directions must be non-empty {n}-vectors"
            )));
        }
        if self.values.len() != self.t.len()
            || self.values.iter().any(|row| row.len() != self.thetas.len())
        {
            return Err(Error::InvalidArgument(
                "value table does not match the grids".into(),
            ));
        }
        if self.values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite sample value".into()));
        }
        let h = (self.t[self.t.len() - 1] - self.t[0]) / (self.t.len() - 1) as f64;
        let uniform = self
            .t
            .iter()
            .enumerate()
            .all(|(i, &t)| (t - (self.t[0] + i as f64 * h)).abs() <= 1e-9 * h.max(t.abs()));
        if !(h > 0.0) || !uniform {
            return Err(Error::InvalidArgument(
                "t-grid must be uniform and increasing".into(),
            ));
        }
        Ok(h)
    }

    fn span(&self) -> f64 {
        self.t[self.t.len() - 1] - self.t[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub estimate_x0: bool,
    /// Regression window; defaults to dropping the first `transient_periods`
    /// and the last `tail_periods` periods of the span.
    pub window: Option<(f64, f64)>,
    pub transient_periods: f64,
    pub tail_periods: f64,
    /// Minimum span in periods.
    pub min_periods: f64,
    pub shoot: ShootOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            estimate_x0: false,
            window: None,
            transient_periods: 2.0,
            tail_periods: 0.5,
            min_periods: 3.0,
            shoot: ShootOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub a_hat: f64,
    /// Phase in [0, T_{a_hat}).
    pub t_hat: f64,
    pub period: f64,
    /// Hamiltonian level measured from the samples.
    pub energy: f64,
    pub x0_hat: Option<Vec<f64>>,
    /// Decay rate of sup_θ |v - v_a(t + T)|.
    pub beta0: Option<RateFit>,
    /// Decay rate after removing the first-order deformation term.
    pub beta1: Option<RateFit>,
    pub window: (f64, f64),
    /// (t, sup_θ |v - v_a(t + T)|)
    pub residual_curve: Vec<(f64, f64)>,
    /// (t, sup_θ of the refined remainder); empty without x0.
    pub refined_curve: Vec<(f64, f64)>,
}

impl FitResult {
    /// Rate β0 = -slope.
    pub fn beta0_rate(&self) -> Option<f64> {
        self.beta0.map(|f| -f.slope)
    }

    pub fn beta1_rate(&self) -> Option<f64> {
        self.beta1.map(|f| -f.slope)
    }
}

/// Fits (a, T[, x0]) and the remainder rates. `table` is an orbit table
/// whose energies bracket the sampled level.
pub fn fit_parameters(
    p: &DimensionParams,
    samples: &CylinderSamples,
    table: &[PeriodicOrbit],
    opts: &FitOptions,
) -> Result<FitResult> {
    let n = p.n as usize;
    let h = samples.validate(n)?;
    let mean: Vec<f64> = samples
        .values
        .iter()
        .map(|row| row.iter().sum::<f64>() / row.len() as f64)
        .collect();
    let energy = measured_energy(p, &mean, h)?;
    let orbit = invert_energy(p, energy, table, &opts.shoot)?;
    let period = orbit.period;
    if samples.span() < opts.min_periods * period {
        return Err(Error::InsufficientSpan(format!(
            "span {} shorter than {} periods of {}",
            samples.span(),
            opts.min_periods,
            period
        )));
    }
    let late = samples.t.len() / 2;
    let t_hat = align_phase(&orbit, &samples.t[late..], &mean[late..]);

    let t_first = samples.t[0];
    let t_last = samples.t[samples.t.len() - 1];
    let window = opts.window.unwrap_or((
        t_first + opts.transient_periods * period,
        t_last - opts.tail_periods * period,
    ));

    let first_order =
        |t: f64| (-t).exp() * (-orbit.derivative(t + t_hat, 1) + p.gamma * orbit.v(t + t_hat));
    let x0_hat = if opts.estimate_x0 {
        Some(estimate_x0(
            samples,
            &orbit,
            t_hat,
            t_last - period,
            &first_order,
        )?)
    } else {
        None
    };

    let mut residual_curve = Vec::with_capacity(samples.t.len());
    let mut refined_curve = Vec::new();
    for (i, &t) in samples.t.iter().enumerate() {
        let va = orbit.v(t + t_hat);
        let w = first_order(t);
        let mut r0: f64 = 0.0;
        let mut r1: f64 = 0.0;
        for (k, th) in samples.thetas.iter().enumerate() {
            let r = samples.values[i][k] - va;
            r0 = r0.max(r.abs());
            if let Some(x0) = &x0_hat {
                r1 = r1.max((r - w * dot(th, x0)).abs());
            }
        }
        residual_curve.push((t, r0));
        if x0_hat.is_some() {
            refined_curve.push((t, r1));
        }
    }
    let beta0 = rate_regression(&residual_curve, Some(window)).ok();
    let beta1 = if x0_hat.is_some() {
        rate_regression(&refined_curve, Some(window)).ok()
    } else {
        None
    };
    Ok(FitResult {
        a_hat: orbit.a,
        t_hat,
        period,
        energy,
        x0_hat,
        beta0,
        beta1,
        window,
        residual_curve,
        refined_curve,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Median Hamiltonian of the θ-averaged signal over the second half of the
/// span, with 7-point central differences.
fn measured_energy(p: &DimensionParams, v: &[f64], h: f64) -> Result<f64> {
    let mut levels = Vec::new();
    for i in (v.len() / 2).max(3)..v.len() - 3 {
        let f = |k: isize| v[(i as isize + k) as usize];
        let d1 =
            (-f(-3) + 9.0 * f(-2) - 45.0 * f(-1) + 45.0 * f(1) - 9.0 * f(2) + f(3)) / (60.0 * h);
        let d2 = (2.0 * f(-3) - 27.0 * f(-2) + 270.0 * f(-1) - 490.0 * f(0) + 270.0 * f(1)
            - 27.0 * f(2)
            + 2.0 * f(3))
            / (180.0 * h * h);
        let d3 = (f(-3) - 8.0 * f(-2) + 13.0 * f(-1) - 13.0 * f(1) + 8.0 * f(2) - f(3))
            / (8.0 * h * h * h);
        if f(0) < 0.0 {
            return Err(Error::InvalidArgument("negative averaged sample".into()));
        }
        levels.push(hamiltonian(p, FowlerState::new(f(0), d1, d2, d3)));
    }
    if levels.is_empty() {
        return Err(Error::InsufficientSpan(
            "too few samples for differencing".into(),
        ));
    }
    levels.sort_by(f64::total_cmp);
    Ok(levels[levels.len() / 2])
}

/// Finds a with H(a, b(a)) = energy: bracket on the table, then Illinois
/// regula falsi with fresh shooting runs.
fn invert_energy(
    p: &DimensionParams,
    energy: f64,
    table: &[PeriodicOrbit],
    opts: &ShootOptions,
) -> Result<PeriodicOrbit> {
    let mut pts: Vec<(f64, f64)> = table.iter().map(|o| (o.a, o.energy)).collect();
    pts.sort_by(|x, y| x.0.total_cmp(&y.0));
    let (min, max) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), q| {
            (lo.min(q.1), hi.max(q.1))
        });
    let out_of_range = Error::EnergyOutOfRange { energy, min, max };
    if let Some(o) = table.iter().find(|o| o.energy == energy) {
        return Ok(o.clone());
    }
    let (mut a_lo, mut f_lo, mut a_hi, mut f_hi) = pts
        .windows(2)
        .find(|w| (w[0].1 - energy) * (w[1].1 - energy) < 0.0)
        .map(|w| (w[0].0, w[0].1 - energy, w[1].0, w[1].1 - energy))
        .ok_or(out_of_range)?;
    let mut best: Option<PeriodicOrbit> = None;
    let mut side = 0i8;
    for _ in 0..100 {
        let a = (a_lo * f_hi - a_hi * f_lo) / (f_hi - f_lo);
        let o = shoot(p, a, opts)?;
        let f = o.energy - energy;
        let done = f == 0.0 || (a_hi - a_lo).abs() < 1e-13 * p.a0;
        if f * f_lo > 0.0 {
            a_lo = a;
            f_lo = f;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            a_hi = a;
            f_hi = f;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
        let better = best
            .as_ref()
            .is_none_or(|b| (b.energy - energy).abs() > f.abs());
        if better {
            best = Some(o);
        }
        if done
            || best
                .as_ref()
                .is_some_and(|b| (b.energy - energy).abs() <= 4.0 * f64::EPSILON * energy.abs())
        {
            break;
        }
    }
    best.ok_or(Error::EnergyOutOfRange { energy, min, max })
}

/// Least-squares phase T minimizing Σ (m_i - v_a(t_i + T))².
fn align_phase(orbit: &PeriodicOrbit, t: &[f64], m: &[f64]) -> f64 {
    const COARSE: usize = 512;
    let period = orbit.period;
    let stride = (t.len() / 256).max(1);
    let cost = |shift: f64| -> f64 {
        t.iter()
            .zip(m)
            .step_by(stride)
            .map(|(ti, mi)| (mi - orbit.v(ti + shift)).powi(2))
            .sum()
    };
    let mut shift = (0..COARSE)
        .map(|k| period * k as f64 / COARSE as f64)
        .min_by(|x, y| cost(*x).total_cmp(&cost(*y)))
        .unwrap_or(0.0);
    for _ in 0..50 {
        let (mut num, mut den) = (0.0, 0.0);
        for (ti, mi) in t.iter().zip(m) {
            let d = orbit.derivative(ti + shift, 1);
            num += (mi - orbit.v(ti + shift)) * d;
            den += d * d;
        }
        if den == 0.0 {
            break;
        }
        let step = (num / den).clamp(-0.05 * period, 0.05 * period);
        shift += step;
        if step.abs() < 1e-15 * period {
            break;
        }
    }
    shift.rem_euclid(period)
}

/// x0 from the j = 1 component of the remainder over t ≥ `t_from`: per-t
/// θ-means are removed and x0 solves Σ_t w(t)² Θ̃ᵀΘ̃ x0 = Σ_t w(t) Θ̃ᵀ R̃(t).
fn estimate_x0<F>(
    samples: &CylinderSamples,
    orbit: &PeriodicOrbit,
    t_hat: f64,
    t_from: f64,
    first_order: &F,
) -> Result<Vec<f64>>
where
    F: Fn(f64) -> f64,
{
    let n = samples.thetas[0].len();
    let m = samples.thetas.len();
    let theta_mean: Vec<f64> = (0..n)
        .map(|d| samples.thetas.iter().map(|th| th[d]).sum::<f64>() / m as f64)
        .collect();
    let centered = DMatrix::from_fn(m, n, |k, d| samples.thetas[k][d] - theta_mean[d]);
    let gram = centered.transpose() * &centered;
    let mut rhs = DVector::zeros(n);
    let mut weight = 0.0;
    for (i, &t) in samples.t.iter().enumerate().filter(|(_, t)| **t >= t_from) {
        let w = first_order(t);
        let va = orbit.v(t + t_hat);
        let r: Vec<f64> = samples.values[i].iter().map(|v| v - va).collect();
        let r_mean = r.iter().sum::<f64>() / m as f64;
        let rc = DVector::from_iterator(m, r.iter().map(|x| x - r_mean));
        rhs += centered.transpose() * rc * w;
        weight += w * w;
    }
    if weight == 0.0 {
        return Err(Error::InsufficientSpan(
            "no samples for the deformation estimate".into(),
        ));
    }
    let svd = (gram * weight).svd(true, true);
    let x = svd
        .solve(&rhs, 1e-12 * svd.singular_values.max())
        .map_err(|e| Error::DegenerateRegression(e.to_string()))?;
    Ok(x.iter().copied().collect())
}

/// Samples the deformed profile (x0 = 0 gives the Fowler profile) in
/// cylinder variables on a uniform t-grid.
pub fn synthesize(
    p: &DimensionParams,
    orbit: &PeriodicOrbit,
    t_shift: f64,
    x0: &[f64],
    t_range: (f64, f64),
    t_count: usize,
    thetas: &[Vec<f64>],
) -> Result<CylinderSamples> {
    if t_count < 2 {
        return Err(Error::InvalidArgument("need at least two t samples".into()));
    }
    let t: Vec<f64> = (0..t_count)
        .map(|i| t_range.0 + (t_range.1 - t_range.0) * i as f64 / (t_count - 1) as f64)
        .collect();
    let values = t
        .iter()
        .map(|&ti| {
            thetas
                .iter()
                .map(|th| crate::profiles::deformed_cylinder(p, orbit, t_shift, x0, ti, th))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CylinderSamples {
        t,
        thetas: thetas.to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Execution;
    use crate::orbit::{a_grid, orbit_table, Spacing};
    use crate::profiles::theta_circle;

    fn p5() -> DimensionParams {
        DimensionParams::new(5).unwrap()
    }

    fn table(p: &DimensionParams) -> Vec<PeriodicOrbit> {
        let grid = a_grid(p, 0.2 * p.a0, p.a0, 13, Spacing::Linear).unwrap();
        orbit_table(p, &grid, &ShootOptions::default(), Execution::Parallel)
            .into_iter()
            .collect::<Result<_>>()
            .unwrap()
    }

    #[test]
    fn round_trip_recovers_a_and_t() {
        let p = p5();
        let tab = table(&p);
        let o = shoot(&p, 0.5 * p.a0, &ShootOptions::default()).unwrap();
        let thetas = theta_circle(5, &[0.0; 5], 8);
        let s = synthesize(&p, &o, 1.0, &[0.0; 5], (0.0, 5.0 * o.period), 2001, &thetas).unwrap();
        let fit = fit_parameters(&p, &s, &tab, &FitOptions::default()).unwrap();
        assert!((fit.a_hat - o.a).abs() < 1e-4, "{} vs {}", fit.a_hat, o.a);
        let dt = (fit.t_hat - 1.0).rem_euclid(o.period);
        assert!(dt.min(o.period - dt) < 1e-4, "{}", fit.t_hat);
    }

    #[test]
    fn shifted_input_shifts_the_phase() {
        let p = p5();
        let tab = table(&p);
        let o = shoot(&p, 0.7 * p.a0, &ShootOptions::default()).unwrap();
        let thetas = theta_circle(5, &[0.0; 5], 4);
        let span = (0.0, 5.0 * o.period);
        let s0 = synthesize(&p, &o, 0.3, &[0.0; 5], span, 1601, &thetas).unwrap();
        let s1 = synthesize(&p, &o, 0.3 + 0.8, &[0.0; 5], span, 1601, &thetas).unwrap();
        let f0 = fit_parameters(&p, &s0, &tab, &FitOptions::default()).unwrap();
        let f1 = fit_parameters(&p, &s1, &tab, &FitOptions::default()).unwrap();
        assert!((f0.a_hat - f1.a_hat).abs() < 1e-8);
        let d = (f1.t_hat - f0.t_hat - 0.8).rem_euclid(f0.period);
        assert!(d.min(f0.period - d) < 1e-6, "{d}");
    }

    #[test]
    fn deformed_rates() {
        let p = p5();
        let tab = table(&p);
        let o = shoot(&p, 0.6 * p.a0, &ShootOptions::default()).unwrap();
        let x0 = [0.1, 0.0, 0.0, 0.0, 0.0];
        let thetas = theta_circle(5, &x0, 32);
        let s = synthesize(&p, &o, 0.0, &x0, (0.0, 24.0), 2401, &thetas).unwrap();
        let opts = FitOptions {
            estimate_x0: true,
            window: Some((0.5, 0.5 + 1.5 * o.period)),
            ..FitOptions::default()
        };
        let fit = fit_parameters(&p, &s, &tab, &opts).unwrap();
        let x0_hat = fit.x0_hat.clone().unwrap();
        assert!((x0_hat[0] - 0.1).abs() < 1e-6, "{x0_hat:?}");
        let b0 = fit.beta0_rate().unwrap();
        let b1 = fit.beta1_rate().unwrap();
        assert!((0.9..=1.1).contains(&b0), "beta0 {b0}");
        assert!((1.8..=2.2).contains(&b1), "beta1 {b1}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = p5();
        let tab = table(&p);
        let o = &tab[6];
        let thetas = theta_circle(5, &[0.0; 5], 4);
        let short = synthesize(&p, o, 0.0, &[0.0; 5], (0.0, 1.5 * o.period), 301, &thetas).unwrap();
        assert!(matches!(
            fit_parameters(&p, &short, &tab, &FitOptions::default()),
            Err(Error::InsufficientSpan(_))
        ));
        let narrow = &tab[4..6];
        let s = synthesize(
            &p,
            &tab[10],
            0.0,
            &[0.0; 5],
            (0.0, 4.0 * tab[10].period),
            801,
            &thetas,
        )
        .unwrap();
        assert!(matches!(
            fit_parameters(&p, &s, narrow, &FitOptions::default()),
            Err(Error::EnergyOutOfRange { .. })
        ));
        let mut ragged = s.clone();
        ragged.t[3] += 1e-3;
        assert!(matches!(
            fit_parameters(&p, &ragged, &tab, &FitOptions::default()),
            Err(Error::InvalidArgument(_))
        ));
    }
}
