//! Dormand–Prince 5(4) with the Hairer continuous extension.
//!
//! States are fixed-size arrays. An observer sees every accepted step, with
//! its dense interpolant, and may stop the integration or restart it from a
//! modified state (used for re-orthonormalizing fundamental matrices).

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step together with its continuous extension.
#[derive(Debug, Clone)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    /// Derivatives at both ends.
    pub f0: [f64; N],
    pub f1: [f64; N],
    cont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// Interpolated state; `t` is expected to lie inside the step.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let mut out = [0.0; N];
        for i in 0..N {
            let c = &self.cont;
            out[i] = c[0][i] + th * (c[1][i] + th1 * (c[2][i] + th * (c[3][i] + th1 * c[4][i])));
        }
        out
    }

    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = if self.h > 0.0 {
            (self.t0, self.t0 + self.h)
        } else {
            (self.t0 + self.h, self.t0)
        };
        t >= lo && t <= hi
    }

    /// First point in the step where `g` changes sign, located by bisection
    /// on the dense output. `g` must have opposite signs at the step ends.
    pub fn locate<G: Fn(&[f64; N]) -> f64>(&self, g: G) -> f64 {
        let mut lo = self.t0;
        let mut hi = self.t1();
        let g_lo = g(&self.y0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            let gm = g(&self.eval(mid));
            if (gm > 0.0) == (g_lo > 0.0) && gm != 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// What the observer wants after an accepted step.
pub enum Control<const N: usize> {
    Continue,
    Stop,
    /// Continue from the end of the step with a replaced state.
    Restart([f64; N]),
}

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            h_max: f64::INFINITY,
            max_steps: 2_000_000,
        }
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t_end` (either direction).
    /// Returns the final time and state; the observer sees every step.
    pub fn solve<const N: usize, F, O>(
        &self,
        mut f: F,
        t0: f64,
        y0: [f64; N],
        t_end: f64,
        mut observer: O,
    ) -> Result<(f64, [f64; N])>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
        O: FnMut(&DenseStep<N>) -> Control<N>,
    {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if !t0.is_finite() || !t_end.is_finite() {
            return Err(Error::InvalidArgument("time span must be finite".into()));
        }
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let span = (t_end - t0).abs();
        let mut t = t0;
        let mut y = y0;
        if span == 0.0 {
            return Ok((t, y));
        }
        let mut k1 = f(t, &y);
        let mut h = dir * self.initial_step(&mut f, t, &y, &k1, span);
        let mut fac_old: f64 = 1e-4;
        let mut steps = 0usize;

        loop {
            if steps >= self.max_steps {
                return Err(Error::Integrator {
                    t,
                    reason: "step limit exceeded".into(),
                });
            }
            steps += 1;
            let remaining = t_end - t;
            let last = (h.abs() >= remaining.abs()) || (remaining.abs() <= 1e-14 * span);
            if last {
                h = remaining;
            }
            if h.abs() < 1e-14 * (1.0 + t.abs()) && !last {
                return Err(Error::Integrator {
                    t,
                    reason: "step size underflow".into(),
                });
            }
            let stages = self.stages(&mut f, t, &y, &k1, h);
            let (y_new, k7, err) = stages.finish(&y, h, self.rtol, self.atol);
            if !err.is_finite() {
                h *= 0.2;
                continue;
            }
            // PI step control (Hairer): beta = 0.04
            let expo = 0.2 - 0.04 * 0.75;
            let fac11 = err.max(1e-300).powf(expo);
            let fac = (fac11 / fac_old.powf(0.04) / 0.9).clamp(0.1, 5.0);
            if err <= 1.0 {
                fac_old = err.max(1e-4);
                let step = stages.dense(&y, &y_new, &k1, &k7, t, h);
                t = if last { t_end } else { t + h };
                y = y_new;
                k1 = k7;
                match observer(&step) {
                    Control::Continue => {}
                    Control::Stop => return Ok((step.t1(), step.y1)),
                    Control::Restart(y_restart) => {
                        y = y_restart;
                        k1 = f(t, &y);
                    }
                }
                if last {
                    return Ok((t, y));
                }
                let h_new = (h.abs() / fac).min(self.h_max);
                h = dir * h_new;
            } else {
                h /= (fac11 / 0.9).min(5.0);
            }
        }
    }

    fn initial_step<const N: usize, F>(
        &self,
        f: &mut F,
        t: f64,
        y: &[f64; N],
        f0: &[f64; N],
        span: f64,
    ) -> f64
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        let mut dnf = 0.0;
        let mut dny = 0.0;
        for i in 0..N {
            let sk = self.atol + self.rtol * y[i].abs();
            dnf += (f0[i] / sk).powi(2);
            dny += (y[i] / sk).powi(2);
        }
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
            1e-6
        } else {
            (dny / dnf).sqrt() * 0.01
        };
        h = h.min(self.h_max).min(span);
        let mut y1 = [0.0; N];
        for i in 0..N {
            y1[i] = y[i] + h * f0[i];
        }
        let f1 = f(t + h, &y1);
        let mut der2 = 0.0;
        for i in 0..N {
            let sk = self.atol + self.rtol * y[i].abs();
            der2 += ((f1[i] - f0[i]) / sk).powi(2);
        }
        let der2 = der2.sqrt() / h;
        let der12 = der2.max(dnf.sqrt());
        let h1 = if der12 <= 1e-15 {
            (h * 1e-3).max(1e-6)
        } else {
            (0.01 / der12).powf(0.2)
        };
        (100.0 * h).min(h1).min(self.h_max).min(span)
    }

    fn stages<const N: usize, F>(
        &self,
        f: &mut F,
        t: f64,
        y: &[f64; N],
        k1: &[f64; N],
        h: f64,
    ) -> Stages<N>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        let comb = |coeffs: &[(f64, &[f64; N])]| {
            let mut out = *y;
            for i in 0..N {
                let mut acc = 0.0;
                for (c, k) in coeffs {
                    acc += c * k[i];
                }
                out[i] += h * acc;
            }
            out
        };
        let k2 = f(t + C2 * h, &comb(&[(A21, k1)]));
        let k3 = f(t + C3 * h, &comb(&[(A31, k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &comb(&[(A41, k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + C5 * h,
            &comb(&[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let y6 = comb(&[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        let k6 = f(t + h, &y6);
        let y7 = comb(&[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t + h, &y7);
        Stages {
            k1: *k1,
            k3,
            k4,
            k5,
            k6,
            k7,
            y7,
        }
    }
}

struct Stages<const N: usize> {
    k1: [f64; N],
    k3: [f64; N],
    k4: [f64; N],
    k5: [f64; N],
    k6: [f64; N],
    k7: [f64; N],
    y7: [f64; N],
}

impl<const N: usize> Stages<N> {
    #[allow(clippy::needless_range_loop)]
    fn finish(&self, y: &[f64; N], h: f64, rtol: f64, atol: f64) -> ([f64; N], [f64; N], f64) {
        let mut err = 0.0;
        for i in 0..N {
            let e = h
                * (E1 * self.k1[i]
                    + E3 * self.k3[i]
                    + E4 * self.k4[i]
                    + E5 * self.k5[i]
                    + E6 * self.k6[i]
                    + E7 * self.k7[i]);
            let sk = atol + rtol * y[i].abs().max(self.y7[i].abs());
            err += (e / sk).powi(2);
        }
        (self.y7, self.k7, (err / N as f64).sqrt())
    }

    fn dense(
        &self,
        y0: &[f64; N],
        y1: &[f64; N],
        f0: &[f64; N],
        f1: &[f64; N],
        t0: f64,
        h: f64,
    ) -> DenseStep<N> {
        let mut cont = [[0.0; N]; 5];
        for i in 0..N {
            let dy = y1[i] - y0[i];
            let bspl = h * self.k1[i] - dy;
            cont[0][i] = y0[i];
            cont[1][i] = dy;
            cont[2][i] = bspl;
            cont[3][i] = dy - h * self.k7[i] - bspl;
            cont[4][i] = h
                * (D1 * self.k1[i]
                    + D3 * self.k3[i]
                    + D4 * self.k4[i]
                    + D5 * self.k5[i]
                    + D6 * self.k6[i]
                    + D7 * self.k7[i]);
        }
        DenseStep {
            t0,
            h,
            y0: *y0,
            y1: *y1,
            f0: *f0,
            f1: *f1,
            cont,
        }
    }
}

/// All accepted steps of one run, usable as a dense solution.
#[derive(Debug, Clone)]
pub struct DenseSolution<const N: usize> {
    pub steps: Vec<DenseStep<N>>,
}

impl<const N: usize> DenseSolution<N> {
    pub fn t_start(&self) -> f64 {
        self.steps.first().map_or(f64::NAN, |s| s.t0)
    }

    pub fn t_end(&self) -> f64 {
        self.steps.last().map_or(f64::NAN, |s| s.t1())
    }

    /// State at `t`, or `None` outside the integrated span.
    pub fn eval(&self, t: f64) -> Option<[f64; N]> {
        let forward = self.steps.first()?.h > 0.0;
        let idx = self
            .steps
            .partition_point(|s| if forward { s.t1() < t } else { s.t1() > t });
        let step = self.steps.get(idx)?;
        step.contains(t).then(|| step.eval(t))
    }
}
