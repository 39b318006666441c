//! Radial cutoff weights used by the localized virial and local-mass diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutoffKind {
    /// `R^2 chi(r/R)`: equal to `r^2` on `r <= R`, constant beyond `2R`.
    ChiR,
    /// `R^2 phi(r/R)`: equal to `r^2` on `r <= R`, linear growth beyond `2R`.
    PhiR,
    /// Smooth indicator: 1 on `r <= R/2`, 0 on `r >= R`.
    RhoR,
    /// `|x|^2`.
    Quadratic,
}

/// Value and radial derivatives of a cutoff at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSample {
    pub chi: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
    /// `chi'(r) / r`, finite at the origin.
    pub d1_over_r: f64,
}

impl CutoffSample {
    /// `chi'' + (d-1) chi'/r`.
    pub fn laplacian(&self, d: usize) -> f64 {
        self.d2 + (d as f64 - 1.0) * self.d1_over_r
    }

    /// Bilaplacian of a radial function at radius `r`.
    pub fn bilaplacian(&self, d: usize, r: f64) -> f64 {
        let dm1 = d as f64 - 1.0;
        let mut out = self.d4;
        if r > 0.0 {
            out += 2.0 * dm1 * self.d3 / r + dm1 * (d as f64 - 3.0) * (self.d2 - self.d1_over_r) / (r * r);
        }
        out
    }
}

fn c_quarter() -> f64 {
    4f64.powf(-1.0 / 3.0)
}

fn smoothstep(t: f64) -> [f64; 3] {
    let t2 = t * t;
    [
        t2 * t * (10.0 - 15.0 * t + 6.0 * t2),
        30.0 * t2 * (1.0 - t) * (1.0 - t),
        60.0 * t - 180.0 * t2 + 120.0 * t2 * t,
    ]
}

/// `zeta, zeta', zeta'', zeta'''` and `int_0^s zeta` for the `ChiR` profile in the scaled variable.
fn chi_profile(s: f64) -> [f64; 5] {
    let c = c_quarter();
    let s1 = 1.0 + c;
    if s <= 1.0 {
        return [2.0 * s, 2.0, 0.0, 0.0, s * s];
    }
    let middle = |s: f64| {
        let y = s - 1.0;
        [
            2.0 * s - 2.0 * y.powi(4),
            2.0 - 8.0 * y.powi(3),
            -24.0 * y * y,
            -48.0 * y,
            s * s - 0.4 * y.powi(5),
        ]
    };
    if s <= s1 {
        return middle(s);
    }
    let at_s1 = middle(s1);
    let lb = 1.0 - c;
    let p0 = at_s1[0];
    let a0 = at_s1[2] * lb * lb;
    let bridge = |t: f64| {
        let t2 = t * t;
        let t3 = t2 * t;
        let h0 = [
            1.0 - 10.0 * t3 + 15.0 * t2 * t2 - 6.0 * t3 * t2,
            -30.0 * t2 + 60.0 * t3 - 30.0 * t2 * t2,
            -60.0 * t + 180.0 * t2 - 120.0 * t3,
            -60.0 + 360.0 * t - 360.0 * t2,
            t - 2.5 * t2 * t2 + 3.0 * t3 * t2 - t3 * t3,
        ];
        let h2 = [
            0.5 * (t2 - 3.0 * t3 + 3.0 * t2 * t2 - t3 * t2),
            0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t2 * t2),
            0.5 * (2.0 - 18.0 * t + 36.0 * t2 - 20.0 * t3),
            0.5 * (-18.0 + 72.0 * t - 60.0 * t2),
            0.5 * (t3 / 3.0 - 0.75 * t2 * t2 + 0.6 * t3 * t2 - t3 * t3 / 6.0),
        ];
        [
            p0 * h0[0] + a0 * h2[0],
            (p0 * h0[1] + a0 * h2[1]) / lb,
            (p0 * h0[2] + a0 * h2[2]) / (lb * lb),
            (p0 * h0[3] + a0 * h2[3]) / (lb * lb * lb),
            at_s1[4] + lb * (p0 * h0[4] + a0 * h2[4]),
        ]
    };
    if s <= 2.0 {
        return bridge((s - s1) / lb);
    }
    [0.0, 0.0, 0.0, 0.0, bridge(1.0)[4]]
}

/// `phi', phi'', phi''', phi''''` and `phi` for the `PhiR` profile in the scaled variable.
fn phi_profile(s: f64) -> [f64; 5] {
    if s <= 1.0 {
        return [2.0 * s, 2.0, 0.0, 0.0, s * s];
    }
    let ramp = |t: f64| {
        let [s5, ds5, dds5] = smoothstep(t);
        let t4 = t.powi(4);
        let int_s5 = 2.5 * t4 - 3.0 * t4 * t + t4 * t * t;
        let int2_s5 = 0.5 * t4 * t - 0.5 * t4 * t * t + t4 * t * t * t / 7.0;
        [2.0 + 2.0 * (t - int_s5), 2.0 * (1.0 - s5), -2.0 * ds5, -2.0 * dds5, 1.0 + 2.0 * t + t * t - 2.0 * int2_s5]
    };
    if s <= 2.0 {
        return ramp(s - 1.0);
    }
    let end = ramp(1.0);
    [end[0], 0.0, 0.0, 0.0, end[4] + end[0] * (s - 2.0)]
}

impl CutoffKind {
    /// Evaluates the cutoff with scale `big_r` at radius `r`.
    pub fn eval(self, big_r: f64, r: f64) -> CutoffSample {
        match self {
            CutoffKind::Quadratic => CutoffSample { chi: r * r, d1: 2.0 * r, d2: 2.0, d3: 0.0, d4: 0.0, d1_over_r: 2.0 },
            CutoffKind::ChiR | CutoffKind::PhiR => {
                let s = r / big_r;
                let (z, chi) = if self == CutoffKind::ChiR {
                    let p = chi_profile(s);
                    ([p[0], p[1], p[2], p[3]], p[4])
                } else {
                    let p = phi_profile(s);
                    ([p[0], p[1], p[2], p[3]], p[4])
                };
                let d1_over_r = if s <= 1.0 { 2.0 } else { z[0] / s };
                CutoffSample {
                    chi: big_r * big_r * chi,
                    d1: big_r * z[0],
                    d2: z[1],
                    d3: z[2] / big_r,
                    d4: z[3] / (big_r * big_r),
                    d1_over_r,
                }
            }
            CutoffKind::RhoR => {
                let s = r / big_r;
                if s <= 0.5 {
                    return CutoffSample { chi: 1.0, d1: 0.0, d2: 0.0, d3: 0.0, d4: 0.0, d1_over_r: 0.0 };
                }
                if s >= 1.0 {
                    return CutoffSample { chi: 0.0, d1: 0.0, d2: 0.0, d3: 0.0, d4: 0.0, d1_over_r: 0.0 };
                }
                let t = 2.0 * (s - 0.5);
                let [s5, ds5, dds5] = smoothstep(t);
                let k = 2.0 / big_r;
                let t2 = t * t;
                let ddds5 = 60.0 - 360.0 * t + 360.0 * t2;
                let d1 = -ds5 * k;
                CutoffSample {
                    chi: 1.0 - s5,
                    d1,
                    d2: -dds5 * k * k,
                    d3: -ddds5 * k * k * k,
                    d4: (360.0 - 720.0 * t) * k.powi(4),
                    d1_over_r: d1 / r,
                }
            }
        }
    }

    /// Radius outside which every derivative of the cutoff vanishes (or, for `PhiR`, the
    /// second and higher ones do).
    pub fn support(self, big_r: f64) -> Option<f64> {
        match self {
            CutoffKind::ChiR | CutoffKind::PhiR => Some(2.0 * big_r),
            CutoffKind::RhoR => Some(big_r),
            CutoffKind::Quadratic => None,
        }
    }
}

/// A cutoff sampled on the nodes of a grid.
#[derive(Debug, Clone)]
pub struct CutoffFn<T: Real> {
    pub kind: CutoffKind,
    pub r: f64,
    pub chi: Vec<T>,
    pub d1: Vec<T>,
    pub d2: Vec<T>,
    pub d1_over_r: Vec<T>,
    pub lap: Vec<T>,
    pub bilap: Vec<T>,
}

impl<T: Real> CutoffFn<T> {
    pub fn eval(&self, r: f64) -> CutoffSample {
        self.kind.eval(self.r, r)
    }
}

/// Samples `kind` with scale `big_r` on `grid`.
pub fn make_cutoff<T: Real>(kind: CutoffKind, big_r: f64, grid: &Grid<T>) -> Result<CutoffFn<T>> {
    if kind != CutoffKind::Quadratic && !(big_r > 0.0 && big_r.is_finite()) {
        return Err(Error::InvalidParams(format!("cutoff radius R = {big_r} must be positive")));
    }
    if let Some(support) = kind.support(big_r) {
        let extent = grid.extent().as_f64();
        if support > extent {
            return Err(Error::DomainTooSmall { support, extent });
        }
    }
    let d = grid.d();
    let n = grid.len();
    let mut out = CutoffFn {
        kind,
        r: big_r,
        chi: Vec::with_capacity(n),
        d1: Vec::with_capacity(n),
        d2: Vec::with_capacity(n),
        d1_over_r: Vec::with_capacity(n),
        lap: Vec::with_capacity(n),
        bilap: Vec::with_capacity(n),
    };
    for &r in grid.radius() {
        let r = r.as_f64();
        let s = kind.eval(big_r, r);
        out.chi.push(T::lit(s.chi));
        out.d1.push(T::lit(s.d1));
        out.d2.push(T::lit(s.d2));
        out.d1_over_r.push(T::lit(s.d1_over_r));
        out.lap.push(T::lit(s.laplacian(d)));
        out.bilap.push(T::lit(s.bilaplacian(d, r)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_profile_is_c2_at_breakpoints() {
        for &s0 in &[1.0, 1.0 + c_quarter(), 2.0] {
            let a = chi_profile(s0 - 1e-9);
            let b = chi_profile(s0 + 1e-9);
            for k in [0usize, 1, 2, 4] {
                assert!((a[k] - b[k]).abs() < 1e-5, "s0 = {s0}, k = {k}: {} vs {}", a[k], b[k]);
            }
        }
    }

    #[test]
    fn chi_profile_derivatives_match_differences() {
        let eps = 1e-6;
        for i in 1..400 {
            let s = 2.2 * i as f64 / 400.0;
            let (lo, hi, mid) = (chi_profile(s - eps), chi_profile(s + eps), chi_profile(s));
            assert!(((hi[4] - lo[4]) / (2.0 * eps) - mid[0]).abs() < 1e-7);
            assert!(((hi[0] - lo[0]) / (2.0 * eps) - mid[1]).abs() < 1e-6);
            assert!(((hi[1] - lo[1]) / (2.0 * eps) - mid[2]).abs() < 1e-5);
        }
    }

    #[test]
    fn phi_and_rho_consistency() {
        let eps = 1e-6;
        for i in 1..300 {
            let r = 3.0 * (i as f64 + 0.37) / 300.0;
            for kind in [CutoffKind::PhiR, CutoffKind::RhoR] {
                let (lo, hi, mid) = (kind.eval(1.3, r - eps), kind.eval(1.3, r + eps), kind.eval(1.3, r));
                assert!(((hi.chi - lo.chi) / (2.0 * eps) - mid.d1).abs() < 1e-6);
                assert!(((hi.d1 - lo.d1) / (2.0 * eps) - mid.d2).abs() < 1e-4);
                assert!(((hi.d2 - lo.d2) / (2.0 * eps) - mid.d3).abs() < 1e-3);
            }
        }
        assert_eq!(phi_profile(5.0)[0], 3.0);
    }
}
