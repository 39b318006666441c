//! Oracles shared by the integration tests. None of them call into the solver code.
#![allow(dead_code)]

use std::f64::consts::PI;

pub use statrs::function::gamma::gamma;

/// Surface area of the unit sphere in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0)
}

/// `int_{R^d} |x|^{-a} e^{-b|x|^2} dx`.
pub fn gaussian_moment(d: usize, a: f64, b: f64) -> f64 {
    let s = (d as f64 - a) / 2.0;
    sphere_area(d) * gamma(s) / (2.0 * b.powf(s))
}

/// Composite Simpson rule for `int_0^R f(r) |S^{d-1}| r^{d-1} dr` with `n` (even) panels.
pub fn radial_integral(d: usize, big_r: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = big_r / n as f64;
    let g = |r: f64| if r == 0.0 && d > 1 { 0.0 } else { f(r) * r.powi(d as i32 - 1) };
    let mut acc = g(0.0) + g(big_r);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
    }
    sphere_area(d) * acc * h / 3.0
}

/// Positive radial solution of `½ΔQ − ωQ + r^{-α}Q² = 0`, found by shooting on `Q(0)`.
pub struct ShootingQ {
    pub step: f64,
    pub q0: f64,
    pub values: Vec<f64>,
}

enum Fate {
    Crosses,
    TurnsUp,
    Survives,
}

fn rhs(d: usize, alpha: f64, omega: f64, r: f64, y: [f64; 2]) -> [f64; 2] {
    [y[1], 2.0 * omega * y[0] - 2.0 * r.powf(-alpha) * y[0] * y[0] - (d as f64 - 1.0) / r * y[1]]
}

fn series_start(d: usize, alpha: f64, omega: f64, q0: f64, r: f64) -> [f64; 2] {
    let c = -2.0 * q0 * q0 / ((2.0 - alpha) * (d as f64 - alpha));
    let a = omega * q0 / d as f64;
    [q0 + c * r.powf(2.0 - alpha) + a * r * r, c * (2.0 - alpha) * r.powf(1.0 - alpha) + 2.0 * a * r]
}

fn integrate(d: usize, alpha: f64, omega: f64, q0: f64, step: f64, r_max: f64, record: bool) -> (Fate, Vec<f64>) {
    let mut r = step;
    let mut y = series_start(d, alpha, omega, q0, r);
    let mut out = vec![q0];
    let n = (r_max / step).round() as usize;
    for _ in 1..n {
        if record {
            out.push(y[0]);
        }
        let f = |r: f64, y: [f64; 2]| rhs(d, alpha, omega, r, y);
        let k1 = f(r, y);
        let k2 = f(r + step / 2.0, [y[0] + step / 2.0 * k1[0], y[1] + step / 2.0 * k1[1]]);
        let k3 = f(r + step / 2.0, [y[0] + step / 2.0 * k2[0], y[1] + step / 2.0 * k2[1]]);
        let k4 = f(r + step, [y[0] + step * k3[0], y[1] + step * k3[1]]);
        y = [
            y[0] + step / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + step / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        r += step;
        if y[0] < 0.0 {
            return (Fate::Crosses, out);
        }
        if y[1] > 0.0 {
            return (Fate::TurnsUp, out);
        }
    }
    (Fate::Survives, out)
}

impl ShootingQ {
    pub fn solve(d: usize, alpha: f64, omega: f64) -> Self {
        let step = 1e-4;
        let r_max = 20.0;
        let (mut lo, mut hi) = (1e-3, 1e3);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            match integrate(d, alpha, omega, mid, step, r_max, false).0 {
                Fate::Crosses => hi = mid,
                Fate::TurnsUp => lo = mid,
                Fate::Survives => {
                    lo = mid;
                    hi = mid;
                }
            }
        }
        let q0 = 0.5 * (lo + hi);
        let (_, values) = integrate(d, alpha, omega, q0, step, r_max, true);
        Self { step, q0, values }
    }

    /// Linear interpolation; zero beyond the integrated range.
    pub fn eval(&self, r: f64) -> f64 {
        let x = r / self.step;
        let i = x.floor() as usize;
        if i + 1 >= self.values.len() {
            return 0.0;
        }
        let t = x - i as f64;
        (1.0 - t) * self.values[i] + t * self.values[i + 1]
    }
}
