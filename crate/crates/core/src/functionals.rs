//! Conserved quantities, action/Nehari functionals, the Weinstein ratio and virial quantities.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::cutoff::CutoffFn;
use crate::error::{Error, Result};
use crate::field::FieldPair;
use crate::grid::{Grid, GridKind};
use crate::params::PhysParams;
use crate::real::Real;

/// Raw quadratures from which every functional is assembled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrals<T> {
    pub u_l2: T,
    pub v_l2: T,
    pub grad_u: T,
    pub grad_v: T,
    /// `Re sum w u^2 conj(v)`.
    pub coupling: T,
}

/// Mass, kinetic, interaction, energy, Pohozaev functional and energy surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantSet<T> {
    pub m: T,
    pub k: T,
    pub p: T,
    pub e: T,
    pub g: T,
    pub h: T,
    /// `||v||^2`, needed by the energy and the action.
    pub v_l2: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionSet<T> {
    pub a_omega: T,
    pub b_omega: T,
    pub s: T,
}

pub fn integrals<T: Real>(state: &FieldPair<T>) -> Integrals<T> {
    let g = &state.grid;
    Integrals {
        u_l2: g.norm_sq(&state.u),
        v_l2: g.norm_sq(&state.v),
        grad_u: g.dirichlet(&state.u),
        grad_v: g.dirichlet(&state.v),
        coupling: coupling(g, &state.u, &state.v),
    }
}

/// `Re sum W w u^2 conj(v)`.
pub fn coupling<T: Real>(grid: &Grid<T>, u: &[Complex<T>], v: &[Complex<T>]) -> T {
    grid.quad_weights()
        .iter()
        .zip(grid.weight_alpha())
        .zip(u.iter().zip(v))
        .map(|((&q, &w), (a, b))| (a * a * b.conj()).re * w * q)
        .sum()
}

impl<T: Real> InvariantSet<T> {
    pub fn from_integrals(i: &Integrals<T>, p: &PhysParams) -> Self {
        let two = T::lit(2.0);
        let kappa = T::lit(p.kappa);
        let gamma = T::lit(p.gamma);
        let m = i.u_l2 + two * i.v_l2;
        let k = i.grad_u + kappa * i.grad_v;
        let e = k / two + gamma * i.v_l2 - i.coupling;
        let g = k - T::lit(p.d_plus_2alpha() / 2.0) * i.coupling;
        let h = if p.gamma >= 0.0 { e } else { e + gamma.abs() / two * m };
        Self { m, k, p: i.coupling, e, g, h, v_l2: i.v_l2 }
    }
}

impl<T: Real> ActionSet<T> {
    pub fn from_invariants(inv: &InvariantSet<T>, p: &PhysParams) -> Self {
        let two = T::lit(2.0);
        let omega = T::lit(p.omega);
        let s = inv.k + two * omega * inv.m + two * T::lit(p.gamma) * inv.v_l2;
        Self { a_omega: inv.e + omega * inv.m, b_omega: s - T::lit(3.0) * inv.p, s }
    }
}

pub fn invariants<T: Real>(state: &FieldPair<T>, p: &PhysParams) -> InvariantSet<T> {
    InvariantSet::from_integrals(&integrals(state), p)
}

pub fn action_nehari<T: Real>(state: &FieldPair<T>, p: &PhysParams) -> ActionSet<T> {
    ActionSet::from_invariants(&invariants(state, p), p)
}

/// `P / (K^{(d+2a)/4} M^{(6-d-2a)/4})`.
pub fn weinstein<T: Real>(state: &FieldPair<T>, p: &PhysParams) -> Result<T> {
    weinstein_from(&invariants(state, p), p)
}

pub fn weinstein_from<T: Real>(inv: &InvariantSet<T>, p: &PhysParams) -> Result<T> {
    if inv.m <= T::zero() || inv.k <= T::zero() {
        return Err(Error::ZeroState);
    }
    let a = p.d_plus_2alpha();
    Ok(inv.p / (inv.k.powf(T::lit(a / 4.0)) * inv.m.powf(T::lit((6.0 - a) / 4.0))))
}

/// Gradient of `A_omega` with respect to the real inner product `Re <., .>`.
pub fn action_gradient<T: Real>(state: &FieldPair<T>, p: &PhysParams) -> (Vec<Complex<T>>, Vec<Complex<T>>) {
    let g = &state.grid;
    let lu = g.laplacian(&state.u);
    let lv = g.laplacian(&state.v);
    let two = T::lit(2.0);
    let omega = T::lit(p.omega);
    let kappa = T::lit(p.kappa);
    let cv = two * (T::lit(p.gamma) + two * omega);
    let w = g.weight_alpha();
    let gu = (0..g.len())
        .map(|i| -lu[i] + state.u[i] * (two * omega) - state.u[i].conj() * state.v[i] * (two * w[i]))
        .collect();
    let gv = (0..g.len())
        .map(|i| -lv[i] * kappa + state.v[i] * cv - state.u[i] * state.u[i] * w[i])
        .collect();
    (gu, gv)
}

/// Localized virial quantities of a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirialMoment<T> {
    /// `int chi (|u|^2 + 2|v|^2)`.
    pub v: T,
    /// `Im int grad chi . (grad u conj(u) + grad v conj(v))`.
    pub m_chi: T,
    /// Time derivative of `v`: `Im int grad chi . (grad u conj(u) + 2 kappa grad v conj(v))`.
    pub v_dot: T,
}

/// `Im int grad chi . grad f conj(f)`, written as `-Im <chi f, Δ f>` so that it is the exact
/// semi-discrete time derivative of the weighted mass.
fn flux<T: Real>(grid: &Grid<T>, chi: &[T], f: &[Complex<T>]) -> T {
    let lf = grid.laplacian(f);
    let mut acc = T::zero();
    for i in 0..f.len() {
        acc = acc + (f[i].conj() * lf[i]).im * chi[i] * grid.quad_weights()[i];
    }
    -acc
}

pub fn virial_moment<T: Real>(state: &FieldPair<T>, c: &CutoffFn<T>, p: &PhysParams) -> VirialMoment<T> {
    let g = &state.grid;
    let two = T::lit(2.0);
    let v = (0..g.len())
        .map(|i| c.chi[i] * (state.u[i].norm_sqr() + two * state.v[i].norm_sqr()) * g.quad_weights()[i])
        .sum();
    let fu = flux(g, &c.chi, &state.u);
    let fv = flux(g, &c.chi, &state.v);
    VirialMoment { v, m_chi: fu + fv, v_dot: fu + two * T::lit(p.kappa) * fv }
}

/// Exact time derivative of `m_chi` under the spatially discretized flow,
/// `sum over f of Im <f_t, [Δ, chi] f>`.
pub fn moment_rate<T: Real>(state: &FieldPair<T>, c: &CutoffFn<T>, p: &PhysParams) -> T {
    let g = &state.grid;
    let w = g.weight_alpha();
    let i = Complex::new(T::zero(), T::one());
    let half = T::lit(0.5);
    let kappa = T::lit(p.kappa);
    let gamma = T::lit(p.gamma);
    let lu = g.laplacian(&state.u);
    let lv = g.laplacian(&state.v);
    let ut: Vec<Complex<T>> = (0..g.len())
        .map(|k| i * (lu[k] * half + state.u[k].conj() * state.v[k] * w[k]))
        .collect();
    let vt: Vec<Complex<T>> = (0..g.len())
        .map(|k| i * (lv[k] * (half * kappa) - state.v[k] * gamma + state.u[k] * state.u[k] * (w[k] * half)))
        .collect();
    let commutator = |f: &[Complex<T>], lf: &[Complex<T>]| -> Vec<Complex<T>> {
        let cf: Vec<Complex<T>> = f.iter().zip(&c.chi).map(|(a, &x)| *a * x).collect();
        g.laplacian(&cf).iter().zip(lf).zip(&c.chi).map(|((a, b), &x)| *a - *b * x).collect()
    };
    g.inner(&ut, &commutator(&state.u, &lu)).im + g.inner(&vt, &commutator(&state.v, &lv)).im
}

/// `int chi (|u|^2 + 2|v|^2)` for a bare weight, e.g. the local mass under `RhoR`.
pub fn weighted_mass<T: Real>(state: &FieldPair<T>, weight: &[T]) -> T {
    let g = &state.grid;
    let two = T::lit(2.0);
    (0..g.len())
        .map(|i| weight[i] * (state.u[i].norm_sqr() + two * state.v[i].norm_sqr()) * g.quad_weights()[i])
        .sum()
}

/// Time derivative of `M_chi` for a radial cutoff, evaluated from the state alone.
pub fn virial_rate<T: Real>(state: &FieldPair<T>, c: &CutoffFn<T>, p: &PhysParams) -> T {
    let g = &state.grid;
    let kappa = T::lit(p.kappa);
    let quarter = T::lit(0.25);
    let half = T::lit(0.5);
    let w = g.weight_alpha();
    let q = g.quad_weights();
    let dm1 = T::lit(p.d_plus_2alpha() - 1.0);
    let mut total = T::zero();
    for i in 0..g.len() {
        let dens = state.u[i].norm_sqr() + kappa * state.v[i].norm_sqr();
        let nl = (state.u[i] * state.u[i] * state.v[i].conj()).re * w[i];
        let radial = c.d2[i] + dm1 * c.d1_over_r[i];
        total = total + (quarter * c.bilap[i] * dens - half * radial * nl) * q[i];
    }
    total + gradient_term(state, c, kappa)
}

/// `int chi'/r |grad f|^2 + (chi''/r^2 - chi'/r^3) |x . grad f|^2`, summed over both components.
fn gradient_term<T: Real>(state: &FieldPair<T>, c: &CutoffFn<T>, kappa: T) -> T {
    let g = &state.grid;
    match g.kind() {
        GridKind::Radial => {
            let h = g.spacing()[0];
            let faces = g.face_areas().expect("radial grid");
            let n = g.len();
            let mut total = T::zero();
            for i in 0..n {
                let rf = (T::of_usize(i) + T::one()) * h;
                let d2 = T::lit(c.eval(rf.as_f64()).d2);
                let (du, dv, scale) = if i + 1 < n {
                    (state.u[i + 1] - state.u[i], state.v[i + 1] - state.v[i], faces[i] / h)
                } else {
                    (state.u[i], state.v[i], T::lit(2.0) * faces[i] / h)
                };
                total = total + d2 * scale * (du.norm_sqr() + kappa * dv.norm_sqr());
            }
            total
        }
        GridKind::Cartesian => {
            let gu = g.gradient(&state.u);
            let gv = g.gradient(&state.v);
            let q = g.quad_weights();
            let r = g.radius();
            let mut total = T::zero();
            for i in 0..g.len() {
                let mut xu = Complex::new(T::zero(), T::zero());
                let mut xv = xu;
                let mut nu = T::zero();
                let mut nv = T::zero();
                let idx = unravel_axes(i, g.shape());
                for (axis, &j) in idx.iter().enumerate() {
                    let x = g.coords(axis)[j];
                    xu = xu + gu[axis][i] * x;
                    xv = xv + gv[axis][i] * x;
                    nu = nu + gu[axis][i].norm_sqr();
                    nv = nv + gv[axis][i].norm_sqr();
                }
                let r2 = r[i] * r[i];
                let ang = (c.d2[i] - c.d1_over_r[i]) / r2;
                total = total
                    + (c.d1_over_r[i] * (nu + kappa * nv) + ang * (xu.norm_sqr() + kappa * xv.norm_sqr())) * q[i];
            }
            total
        }
    }
}

fn unravel_axes(mut idx: usize, shape: &[usize]) -> Vec<usize> {
    let mut out = vec![0; shape.len()];
    for a in (0..shape.len()).rev() {
        out[a] = idx % shape[a];
        idx /= shape[a];
    }
    out
}
