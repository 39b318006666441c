use serde::{Deserialize, Serialize};

use super::engine::{PairProblem, Problem};
use super::{check_grid, GroundStateResult, Init, SolverOptions};
use crate::error::{Error, Result};
use crate::field::FieldPair;
use crate::params::PhysParams;
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DMinus {
    pub d_minus: f64,
    /// `min(d_omega, d_minus)`.
    pub wp: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct Parts<T> {
    k: T,
    s: T,
    p: T,
    lap_f: Vec<T>,
    lap_g: Vec<T>,
}

fn parts<T: Real>(prob: &PairProblem<'_, T>, kappa: T, x: &[T]) -> Parts<T> {
    let grid = prob.grid;
    let (f, g) = prob.split(x);
    let lap_f = grid.laplacian_real(f);
    let lap_g = grid.laplacian_real(g);
    let k = grid.dirichlet_real(f) + kappa * grid.dirichlet_real(g);
    let s = T::lit(2.0) * prob.quadratic(x);
    Parts { k, s, p: prob.coupling(f, g), lap_f, lap_g }
}

/// Infimum of the action over the closure of `{G = 0, B < 0}`, searched over nonnegative
/// radial profiles.
///
/// Each iterate is retracted onto `G = 0` by the amplitude factor `K / (c P)`,
/// `c = (d + 2 alpha)/2`, which turns the action into the scale-free objective
/// `K^2 S / (2 c^2 P^2) - K^3 / (c^3 P^2)`; that objective is decreased by a preconditioned
/// gradient flow and the smallest value met is reported. Started from a ground state the
/// result is at most `d_omega`.
pub fn compute_d_minus<T: Real>(
    p: &PhysParams,
    gs: &GroundStateResult<T>,
    init: Init<'_, T>,
    opts: &SolverOptions,
) -> Result<DMinus> {
    if p.d_plus_2alpha() < 4.0 {
        return Err(Error::InvalidParams(format!(
            "d + 2 alpha = {} < 4: the K- set is only defined in the mass-critical and supercritical ranges",
            p.d_plus_2alpha()
        )));
    }
    p.check_frequency()?;
    let grid = gs.fields.grid.clone();
    check_grid(p, &grid)?;
    let n = grid.len();
    let mut x: Vec<T> = match init {
        Init::Fields(pair) => pair_to_vec(pair),
        Init::Preset(preset) => {
            let mut v = super::initial_profile(&grid, preset, 0);
            v.extend(super::initial_profile(&grid, preset, 1));
            v
        }
    };
    x.iter_mut().for_each(|a| *a = a.max(T::zero()));
    let prob = PairProblem::new(&grid, p.kappa, p.gamma, p.omega);
    let kappa = T::lit(p.kappa);
    let c = T::lit(p.d_plus_2alpha() / 2.0);
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let objective = |pt: &Parts<T>| {
        let (k, s, pp) = (pt.k, pt.s, pt.p);
        k * k * s / (two * c * c * pp * pp) - k * k * k / (c * c * c * pp * pp)
    };

    let mut best = f64::INFINITY;
    let mut tau = T::one();
    let mut cur = parts(&prob, kappa, &x);
    if !(cur.p > T::zero()) {
        return Err(Error::NoZeroCrossing(cur.p.as_f64()));
    }
    let mut fval = objective(&cur);
    let slack = T::one() + T::lit(1e-12).max(T::lit(8.0) * T::epsilon());
    let w = grid.weight_alpha();
    let mut converged = false;
    let mut iterations = opts.max_iter;
    for it in 0..opts.max_iter {
        best = best.min(fval.as_f64());
        let (k, s, pp) = (cur.k, cur.s, cur.p);
        let c2p2 = c * c * pp * pp;
        let fk = k * s / c2p2 - three * k * k / (c2p2 * c);
        let fs = k * k / (two * c2p2);
        let fp = -k * k * s / (c2p2 * pp) + two * k * k * k / (c2p2 * c * pp);
        let omega = T::lit(p.omega);
        let gv_shift = T::lit(8.0 * p.omega + 4.0 * p.gamma);
        let (f, g) = prob.split(&x);
        let mut grad = Vec::with_capacity(2 * n);
        for i in 0..n {
            let dk = -two * cur.lap_f[i];
            let ds = dk + T::lit(4.0) * omega * f[i];
            let dp = two * w[i] * f[i] * g[i];
            grad.push(fk * dk + fs * ds + fp * dp);
        }
        for i in 0..n {
            let dk = -two * kappa * cur.lap_g[i];
            let ds = dk + gv_shift * g[i];
            let dp = w[i] * f[i] * f[i];
            grad.push(fk * dk + fs * ds + fp * dp);
        }
        let dir: Vec<T> = prob.precondition(&grad).into_iter().map(|a| a / T::lit(4.0)).collect();
        let rel = (prob.quadratic(&dir) * prob.quadratic(&x)).sqrt() / fval.abs();
        if rel.as_f64() < opts.tol {
            converged = true;
            iterations = it;
            break;
        }
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<T> = x.iter().zip(&dir).map(|(&a, &d)| (a - tau * d).max(T::zero())).collect();
            let pt = parts(&prob, kappa, &trial);
            if pt.p > T::zero() {
                let ft = objective(&pt);
                if ft <= fval * slack {
                    x = trial;
                    cur = pt;
                    fval = ft;
                    accepted = true;
                    break;
                }
            }
            tau = tau * T::lit(0.5);
        }
        if !accepted {
            iterations = it;
            break;
        }
        tau = (tau * T::lit(1.25)).min(T::lit(4.0));
    }
    if !best.is_finite() {
        return Err(Error::NoZeroCrossing(cur.p.as_f64()));
    }
    Ok(DMinus { d_minus: best, wp: best.min(gs.d_omega), iterations, converged })
}

fn pair_to_vec<T: Real>(pair: &FieldPair<T>) -> Vec<T> {
    pair.u.iter().map(|z| z.re).chain(pair.v.iter().map(|z| z.re)).collect()
}
