//! Periodic piecewise quintic Hermite interpolation from derivative jets.
//!
//! Each knot carries the value and its first five derivatives, so the k-th
//! derivative (k ≤ 3) is interpolated from (f^(k), f^(k+1), f^(k+2)) at both
//! ends of the cell, with error O(h^6).

#[derive(Debug, Clone)]
pub struct PeriodicHermite {
    t0: f64,
    period: f64,
    h: f64,
    /// jets[i] = (f, f', ..., f^(5)) at t0 + i h, i in 0..N; knot N wraps to 0.
    jets: Vec<[f64; 6]>,
}

impl PeriodicHermite {
    /// `jets` are sampled on a uniform grid of `jets.len()` cells over one
    /// period starting at `t0`.
    pub fn new(t0: f64, period: f64, jets: Vec<[f64; 6]>) -> Self {
        assert!(!jets.is_empty() && period > 0.0);
        let h = period / jets.len() as f64;
        Self {
            t0,
            period,
            h,
            jets,
        }
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn knots(&self) -> usize {
        self.jets.len()
    }

    /// Reduces `t` into [0, period).
    pub fn fold(&self, t: f64) -> f64 {
        let x = (t - self.t0).rem_euclid(self.period);
        if x >= self.period {
            0.0
        } else {
            x
        }
    }

    /// Derivative of order `k` (0..=3) at `t`, any real `t`.
    pub fn eval(&self, t: f64, k: usize) -> f64 {
        assert!(k <= 3, "derivative order above 3 is not interpolated");
        let x = self.fold(t) / self.h;
        let n = self.jets.len();
        let i = (x.floor() as usize).min(n - 1);
        let s = x - i as f64;
        let a = &self.jets[i];
        let b = &self.jets[(i + 1) % n];
        let h = self.h;
        let s2 = s * s;
        let s3 = s2 * s;
        let s4 = s3 * s;
        let s5 = s4 * s;
        let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
        let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
        let h2 = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
        let h3 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
        let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
        let h5 = 0.5 * s3 - s4 + 0.5 * s5;
        a[k] * h0
            + h * a[k + 1] * h1
            + h * h * a[k + 2] * h2
            + b[k] * h3
            + h * b[k + 1] * h4
            + h * h * b[k + 2] * h5
    }
}
