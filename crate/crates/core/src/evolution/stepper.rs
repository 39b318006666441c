use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::field::FieldPair;
use crate::grid::{Grid, GridKind};
use crate::params::PhysParams;
use crate::real::Real;
use crate::tridiag::Factored;

/// Crank–Nicolson propagator for `e^{i θ Δ}` on a radial grid.
struct CrankNicolson<T: Real> {
    factor: Factored<Complex<T>>,
    theta: T,
}

impl<T: Real> CrankNicolson<T> {
    fn new(grid: &Grid<T>, theta: T) -> Self {
        let (l, d, u) = grid.laplacian_bands().expect("radial grid");
        let i = Complex::new(T::zero(), T::one());
        let half = theta * T::lit(0.5);
        let lower: Vec<Complex<T>> = l.iter().map(|&x| -i * (half * x)).collect();
        let upper: Vec<Complex<T>> = u.iter().map(|&x| -i * (half * x)).collect();
        let diag: Vec<Complex<T>> = d.iter().map(|&x| Complex::new(T::one(), T::zero()) - i * (half * x)).collect();
        Self { factor: Factored::new(&lower, &diag, &upper), theta }
    }

    fn apply(&self, grid: &Grid<T>, f: &mut [Complex<T>]) {
        let lap = grid.laplacian(f);
        let i = Complex::new(T::zero(), T::one());
        let half = self.theta * T::lit(0.5);
        for (z, l) in f.iter_mut().zip(&lap) {
            *z = *z + i * (*l * half);
        }
        self.factor.solve_in_place(f);
    }
}

enum Linear<T: Real> {
    Spectral { mu: Vec<Complex<T>>, mv: Vec<Complex<T>> },
    Radial { cu: CrankNicolson<T>, cv: CrankNicolson<T>, phase_v: Complex<T> },
}

/// Strang splitting for a fixed (possibly negative) step: half linear flow, one RK4 step of the
/// pointwise coupling, half linear flow.
pub struct Stepper<T: Real> {
    grid: Arc<Grid<T>>,
    dt: T,
    linear: Linear<T>,
}

impl<T: Real> Stepper<T> {
    pub fn new(grid: Arc<Grid<T>>, p: &PhysParams, dt: T) -> Self {
        let half = dt * T::lit(0.5);
        let c_u = T::lit(0.5);
        let c_v = T::lit(0.5 * p.kappa);
        let gamma = T::lit(p.gamma);
        let linear = match grid.kind() {
            GridKind::Cartesian => {
                let k2 = grid.spectral_multipliers().expect("Cartesian grid");
                Linear::Spectral {
                    mu: k2.iter().map(|&k| Complex::from_polar(T::one(), -c_u * k * half)).collect(),
                    mv: k2.iter().map(|&k| Complex::from_polar(T::one(), -(c_v * k + gamma) * half)).collect(),
                }
            }
            GridKind::Radial => Linear::Radial {
                cu: CrankNicolson::new(&grid, c_u * half),
                cv: CrankNicolson::new(&grid, c_v * half),
                phase_v: Complex::from_polar(T::one(), -gamma * half),
            },
        };
        Self { grid, dt, linear }
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    fn half_linear(&self, state: &mut FieldPair<T>) {
        match &self.linear {
            Linear::Spectral { mu, mv } => {
                let g = &self.grid;
                rayon::join(|| g.apply_multiplier(&mut state.u, mu), || g.apply_multiplier(&mut state.v, mv));
            }
            Linear::Radial { cu, cv, phase_v } => {
                let g = &self.grid;
                rayon::join(|| cu.apply(g, &mut state.u), || cv.apply(g, &mut state.v));
                for z in state.v.iter_mut() {
                    *z = *z * *phase_v;
                }
            }
        }
    }

    fn nonlinear(&self, state: &mut FieldPair<T>) {
        let w = self.grid.weight_alpha();
        let dt = self.dt;
        let two = T::lit(2.0);
        for ((a, b), &wk) in state.u.iter_mut().zip(state.v.iter_mut()).zip(w) {
            let (u, v) = rk4_point(*a, *b, wk, dt);
            let before = a.norm_sqr() + two * b.norm_sqr();
            let after = u.norm_sqr() + two * v.norm_sqr();
            let s = if after > T::zero() { (before / after).sqrt() } else { T::one() };
            *a = u * s;
            *b = v * s;
        }
    }

    /// Advances `state` by one step in place.
    pub fn step(&self, state: &mut FieldPair<T>) -> Result<()> {
        self.half_linear(state);
        self.nonlinear(state);
        self.half_linear(state);
        if state.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite)
        }
    }
}

/// `u' = i w conj(u) v`, `v' = i (w/2) u^2`.
fn rate<T: Real>(u: Complex<T>, v: Complex<T>, w: T) -> (Complex<T>, Complex<T>) {
    let i = Complex::new(T::zero(), T::one());
    (i * u.conj() * v * w, i * u * u * (w * T::lit(0.5)))
}

fn rk4_point<T: Real>(u: Complex<T>, v: Complex<T>, w: T, dt: T) -> (Complex<T>, Complex<T>) {
    let half = dt * T::lit(0.5);
    let (a1, b1) = rate(u, v, w);
    let (a2, b2) = rate(u + a1 * half, v + b1 * half, w);
    let (a3, b3) = rate(u + a2 * half, v + b2 * half, w);
    let (a4, b4) = rate(u + a3 * dt, v + b3 * dt, w);
    let sixth = dt / T::lit(6.0);
    let two = T::lit(2.0);
    (
        u + (a1 + a2 * two + a3 * two + a4) * sixth,
        v + (b1 + b2 * two + b3 * two + b4) * sixth,
    )
}

/// One RK4 step of the pointwise coupling without the final projection, exposed for tests of
/// the substep's conservation error.
pub fn coupling_rk4<T: Real>(u: Complex<T>, v: Complex<T>, w: T, dt: T) -> (Complex<T>, Complex<T>) {
    rk4_point(u, v, w, dt)
}

/// One Strang step of size `dt > 0`.
pub fn strang_step<T: Real>(state: &FieldPair<T>, p: &PhysParams, dt: T) -> Result<FieldPair<T>> {
    if !(dt > T::zero()) {
        return Err(Error::InvalidParams(format!("dt = {dt} must be positive")));
    }
    let stepper = Stepper::new(state.grid.clone(), p, dt);
    let mut out = state.clone();
    stepper.step(&mut out)?;
    Ok(out)
}
