//! Ground states of the stationary system
//!
//! ```text
//! ½ Δφ − ω φ + |x|^{-α} φ ψ = 0
//! κ/2 Δψ − (2ω + γ) ψ + ½ |x|^{-α} φ² = 0
//! ```
//!
//! computed as minimizers of the action on the Nehari set.

mod alpha_limit;
mod d_minus;
pub(crate) mod engine;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use alpha_limit::{alpha_limit, AlphaRow};
pub use d_minus::{compute_d_minus, DMinus};

use crate::error::{Error, Result};
use crate::field::FieldPair;
use crate::functionals::{action_nehari, invariants, weinstein_from, InvariantSet};
use crate::grid::Grid;
use crate::params::PhysParams;
use crate::real::Real;
use engine::{FlowOptions, PairProblem, ScalarProblem};

/// Starting profile for the flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InitPreset {
    /// `(e^{-|x|^2/w^2}, e^{-|x|^2/w^2})`.
    Gaussian { width: f64 },
    /// Random positive combination of three centred Gaussians per component.
    Random { seed: u64 },
}

impl Default for InitPreset {
    fn default() -> Self {
        InitPreset::Gaussian { width: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub init: InitPreset,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 50_000, init: InitPreset::default() }
    }
}

/// Where the flow starts.
#[derive(Debug, Clone, Copy)]
pub enum Init<'a, T: Real> {
    Preset(InitPreset),
    Fields(&'a FieldPair<T>),
}

#[derive(Debug, Clone)]
pub struct GroundStateResult<T: Real> {
    pub params: PhysParams,
    /// Real, nonnegative `(φ, ψ)` stored as a complex pair.
    pub fields: FieldPair<T>,
    pub d_omega: f64,
    pub c_omega: f64,
    pub c_gn: f64,
    pub pohozaev_res: (f64, f64),
    pub decay_rate: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Final relative preconditioned gradient norm.
    pub residual: f64,
}

impl<T: Real> GroundStateResult<T> {
    pub fn invariants(&self) -> InvariantSet<T> {
        invariants(&self.fields, &self.params)
    }

    pub fn phi(&self) -> Vec<T> {
        self.fields.u.iter().map(|z| z.re).collect()
    }

    pub fn psi(&self) -> Vec<T> {
        self.fields.v.iter().map(|z| z.re).collect()
    }
}

/// Samples a starting profile for one component.
pub fn initial_profile<T: Real>(grid: &Grid<T>, preset: InitPreset, stream: u64) -> Vec<T> {
    match preset {
        InitPreset::Gaussian { width } => {
            let w2 = T::lit(width * width);
            grid.radius().iter().map(|&r| (-(r * r) / w2).exp()).collect()
        }
        InitPreset::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            let bumps: Vec<(f64, f64)> =
                (0..3).map(|_| (rng.gen_range(0.5..1.5), rng.gen_range(0.5..2.5))).collect();
            grid.radius()
                .iter()
                .map(|&r| {
                    let r = r.as_f64();
                    T::lit(bumps.iter().map(|&(a, w)| a * (-(r * r) / (w * w)).exp()).sum())
                })
                .collect()
        }
    }
}

fn check_grid<T: Real>(p: &PhysParams, grid: &Grid<T>) -> Result<()> {
    if grid.d() != p.d {
        return Err(Error::ParamsMismatch(format!("grid has d = {}, parameters d = {}", grid.d(), p.d)));
    }
    if grid.alpha() != p.alpha {
        return Err(Error::ParamsMismatch(format!(
            "grid weight built for alpha = {}, parameters alpha = {}",
            grid.alpha(),
            p.alpha
        )));
    }
    Ok(())
}

/// Minimizes `A_omega` on the Nehari set by a preconditioned gradient flow on `S^3 / (54 P^2)`.
///
/// Iterates are clamped to nonnegative real profiles. A flow that stalls returns
/// `converged = false` rather than an error.
pub fn minimize_nehari<T: Real>(
    p: &PhysParams,
    grid: Arc<Grid<T>>,
    init: Init<'_, T>,
    opts: &SolverOptions,
) -> Result<GroundStateResult<T>> {
    p.check_frequency()?;
    p.validate_allowing_zero_alpha()?;
    check_grid(p, &grid)?;
    let (f0, g0) = match init {
        Init::Preset(preset) => (initial_profile(&grid, preset, 0), initial_profile(&grid, preset, 1)),
        Init::Fields(pair) => {
            grid.check_len(pair.len())?;
            (pair.u.iter().map(|z| z.re).collect(), pair.v.iter().map(|z| z.re).collect())
        }
    };
    let mut x0: Vec<T> = f0.into_iter().chain(g0).map(|a| a.max(T::zero())).collect();
    let prob = PairProblem::new(&grid, p.kappa, p.gamma, p.omega);
    let c0 = engine::Problem::cubic(&prob, &x0);
    if !(c0 > T::zero()) {
        return Err(Error::NonpositiveP(c0.as_f64()));
    }
    let scale = T::one() / x0.iter().fold(T::zero(), |m, &a| m.max(a));
    x0.iter_mut().for_each(|a| *a = *a * scale);
    let out = engine::run(&prob, x0, FlowOptions { tol: opts.tol, max_iter: opts.max_iter });
    let n = grid.len();
    let fields = FieldPair::from_real(&out.x[..n], &out.x[n..], grid.clone())?;
    Ok(finish(p, fields, out.iterations, out.converged, out.residual))
}

fn finish<T: Real>(p: &PhysParams, fields: FieldPair<T>, iterations: usize, converged: bool, residual: f64) -> GroundStateResult<T> {
    let inv = invariants(&fields, p);
    let act = action_nehari(&fields, p);
    let c_gn = weinstein_from(&inv, p).map(|w| w.as_f64()).unwrap_or(f64::NAN);
    let s = act.s.as_f64();
    let pp = inv.p.as_f64();
    let mut gs = GroundStateResult {
        params: *p,
        fields,
        d_omega: act.a_omega.as_f64(),
        c_omega: s * s * s / (54.0 * pp * pp),
        c_gn,
        pohozaev_res: (0.0, 0.0),
        decay_rate: None,
        iterations,
        converged,
        residual,
    };
    gs.pohozaev_res = pohozaev_residuals(&gs, p);
    gs.decay_rate = decay_fit(&gs).ok();
    gs
}

/// Relative residuals of the Nehari and Pohozaev identities.
pub fn pohozaev_residuals<T: Real>(gs: &GroundStateResult<T>, p: &PhysParams) -> (f64, f64) {
    let inv = invariants(&gs.fields, p);
    let k = inv.k.as_f64();
    let m = inv.m.as_f64();
    let pp = inv.p.as_f64();
    let v2 = inv.v_l2.as_f64();
    let r1 = (0.5 * k + p.omega * m + p.gamma * v2 - 1.5 * pp).abs() / (0.5 * k + p.omega * m + p.gamma.abs() * v2);
    let r2 = (k - p.d_plus_2alpha() / 2.0 * pp).abs() / k;
    (r1, r2)
}

/// Which closed form the sharp constant was checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GnCrossCheck {
    /// `1 / (2 sqrt(M))`.
    MassCritical,
    /// `2/(d+2a) (K M^sigma)^{-(d+2a-4)/4}`.
    Sigma,
    /// No closed form applies (mass-subcritical, or not the `omega = 1, gamma = 0` state).
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnConstant {
    pub c_gn: f64,
    pub formula: GnCrossCheck,
    pub closed_form: Option<f64>,
    pub rel_diff: Option<f64>,
}

/// Sharp Gagliardo–Nirenberg constant as the Weinstein ratio of the ground state.
pub fn gn_constant<T: Real>(gs: &GroundStateResult<T>, p: &PhysParams) -> Result<GnConstant> {
    if !gs.converged {
        return Err(Error::NotConverged);
    }
    let inv = invariants(&gs.fields, p);
    let c_gn = weinstein_from(&inv, p)?.as_f64();
    let k = inv.k.as_f64();
    let m = inv.m.as_f64();
    let a = p.d_plus_2alpha();
    let optimizer = p.omega == 1.0 && p.gamma == 0.0;
    let (formula, closed_form) = if !optimizer {
        (GnCrossCheck::None, None)
    } else if a == 4.0 {
        (GnCrossCheck::MassCritical, Some(0.5 / m.sqrt()))
    } else if let Some(sigma) = p.sigma() {
        (GnCrossCheck::Sigma, Some(2.0 / a * (k * m.powf(sigma)).powf(-(a - 4.0) / 4.0)))
    } else {
        (GnCrossCheck::None, None)
    };
    Ok(GnConstant { c_gn, formula, closed_form, rel_diff: closed_form.map(|c| (c_gn - c).abs() / c_gn) })
}

/// Mountain-pass level along the ray through the ground state, and its relative distance to
/// `d_omega`.
pub fn mountain_pass_level<T: Real>(gs: &GroundStateResult<T>, p: &PhysParams) -> Result<(f64, f64)> {
    if !gs.converged {
        return Err(Error::NotConverged);
    }
    let act = action_nehari(&gs.fields, p);
    let inv = invariants(&gs.fields, p);
    let s = act.s.as_f64();
    let pp = inv.p.as_f64();
    let c = s * s * s / (54.0 * pp * pp);
    let d = act.a_omega.as_f64();
    Ok((c, (c - d).abs() / d))
}

/// `max_{lambda >= 0} A(lambda u, lambda v)` for a state with `P > 0`.
pub fn ray_maximum(s: f64, p: f64) -> f64 {
    s * s * s / (54.0 * p * p)
}

/// Exponential tail rate of `φ` on `[0.5 R, 0.9 R]`.
pub fn decay_fit<T: Real>(gs: &GroundStateResult<T>) -> Result<f64> {
    decay_rate(&gs.fields.grid, &gs.phi())
}

/// Least-squares rate `-d/dr ln f` over `[0.5 R, 0.9 R]`, using samples above `1e-13`.
pub fn decay_rate<T: Real>(grid: &Grid<T>, f: &[T]) -> Result<f64> {
    let ext = grid.extent().as_f64();
    let pts: Vec<(f64, f64)> = grid
        .radius()
        .iter()
        .zip(f)
        .map(|(&r, &v)| (r.as_f64(), v.as_f64()))
        .filter(|&(r, v)| r >= 0.5 * ext && r <= 0.9 * ext && v > 1e-13)
        .map(|(r, v)| (r, v.ln()))
        .collect();
    if pts.len() < 8 {
        return Err(Error::TailBelowFloor);
    }
    let n = pts.len() as f64;
    let mr = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mr) * (p.1 - ml)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mr) * (p.0 - mr)).sum();
    Ok(-sxy / sxx)
}

#[derive(Debug, Clone)]
pub struct ScalarGroundState<T> {
    pub q: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
}

/// Positive radial solution of `½ΔQ − ωQ + |x|^{-α} Q² = 0`.
pub fn scalar_q<T: Real>(p: &PhysParams, grid: &Grid<T>, opts: &SolverOptions) -> Result<ScalarGroundState<T>> {
    if !(p.omega > 0.0) {
        return Err(Error::InvalidFrequency { omega: p.omega, gamma: p.gamma });
    }
    p.validate_allowing_zero_alpha()?;
    check_grid(p, grid)?;
    let x0: Vec<T> = initial_profile(grid, opts.init, 0).into_iter().map(|a| a.max(T::zero())).collect();
    let prob = ScalarProblem::new(grid, p.omega);
    let c0 = engine::Problem::cubic(&prob, &x0);
    if !(c0 > T::zero()) {
        return Err(Error::NonpositiveP(c0.as_f64()));
    }
    let out = engine::run(&prob, x0, FlowOptions { tol: opts.tol, max_iter: opts.max_iter });
    Ok(ScalarGroundState { q: out.x, iterations: out.iterations, converged: out.converged, residual: out.residual })
}

/// Rescales a pair onto the Nehari set; `None` when `P <= 0`.
pub fn nehari_rescale<T: Real>(state: &FieldPair<T>, p: &PhysParams) -> Option<FieldPair<T>> {
    let act = action_nehari(state, p);
    let pp = invariants(state, p).p;
    if pp > T::zero() {
        Some(state.scaled(act.s / (T::lit(3.0) * pp)))
    } else {
        None
    }
}
