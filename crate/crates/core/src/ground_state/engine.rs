//! Preconditioned gradient flow for functionals of the form `a Q(x) - b C(x)` with `Q` quadratic
//! and `C` cubic, run on the scale-free reduction `Q^3 / C^2`.

use crate::grid::{Grid, GridKind};
use crate::real::Real;
use crate::tridiag::Factored;

/// Inverse of `-c Δ + s` on one component.
pub(crate) enum ShiftedInverse<T: Real> {
    Radial(Factored<T>),
    Spectral { c: T, s: T },
}

impl<T: Real> ShiftedInverse<T> {
    pub fn new(grid: &Grid<T>, c: T, s: T) -> Self {
        match grid.kind() {
            GridKind::Radial => ShiftedInverse::Radial(grid.shifted_factor(c, s)),
            GridKind::Cartesian => ShiftedInverse::Spectral { c, s },
        }
    }

    pub fn solve(&self, grid: &Grid<T>, rhs: &[T]) -> Vec<T> {
        match self {
            ShiftedInverse::Radial(f) => f.solve(rhs),
            ShiftedInverse::Spectral { c, s } => grid.solve_shifted_real(*c, *s, rhs),
        }
    }
}

/// A variational problem `A(x) = a <x, L x> - b C(x)` on nonnegative real profiles.
pub(crate) trait Problem<T: Real> {
    fn coefficients(&self) -> (T, T);
    /// `<x, L x>`.
    fn quadratic(&self, x: &[T]) -> T;
    fn cubic(&self, x: &[T]) -> T;
    /// `grad (b C)(x) / (2 a)`, so that the preconditioned gradient at a Nehari point is
    /// `x - L^{-1} nonlinear(x)`.
    fn nonlinear(&self, x: &[T]) -> Vec<T>;
    fn precondition(&self, y: &[T]) -> Vec<T>;
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct FlowOptions {
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct FlowOutcome<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
}

/// Scale factor putting `x` on the Nehari set `2a Q = 3b C`.
pub(crate) fn nehari_scale<T: Real, P: Problem<T>>(prob: &P, x: &[T]) -> Option<T> {
    let (a, b) = prob.coefficients();
    let q = prob.quadratic(x);
    let c = prob.cubic(x);
    if c > T::zero() && q > T::zero() {
        Some(T::lit(2.0) * a * q / (T::lit(3.0) * b * c))
    } else {
        None
    }
}

fn reduced<T: Real, P: Problem<T>>(prob: &P, x: &[T]) -> Option<T> {
    let q = prob.quadratic(x);
    let c = prob.cubic(x);
    if c > T::zero() && c.is_finite() && q.is_finite() {
        Some(q * q * q / (c * c))
    } else {
        None
    }
}

/// Nehari-scaled profile together with its preconditioned gradient.
struct Point<T> {
    x: Vec<T>,
    r: Vec<T>,
    residual: f64,
    j: T,
}

fn evaluate<T: Real, P: Problem<T>>(prob: &P, mut x: Vec<T>) -> Option<Point<T>> {
    let j = reduced(prob, &x)?;
    let lambda = nehari_scale(prob, &x)?;
    for xi in x.iter_mut() {
        *xi = *xi * lambda;
    }
    let pre = prob.precondition(&prob.nonlinear(&x));
    let r: Vec<T> = x.iter().zip(&pre).map(|(&a, &b)| a - b).collect();
    let residual = (prob.quadratic(&r) / prob.quadratic(&x)).sqrt().as_f64();
    Some(Point { x, r, residual, j })
}

/// Runs the flow from `x0`, which must satisfy `C(x0) > 0`. The returned profile lies on the
/// Nehari set.
///
/// Steps are accepted when they decrease `Q^3/C^2`. Once the decrease drops below the rounding
/// level of that ratio, a step is accepted instead when it does not increase the residual.
pub(crate) fn run<T: Real, P: Problem<T>>(prob: &P, x0: Vec<T>, opts: FlowOptions) -> FlowOutcome<T> {
    let strict = T::one() + T::lit(8.0) * T::epsilon();
    let flat = T::one() + T::lit(1e-12);
    let mut cur = evaluate(prob, x0).expect("initial profile must have positive cubic term");
    let mut tau = T::one();
    let tau_max = T::lit(1.5);
    for it in 0..opts.max_iter {
        if cur.residual < opts.tol {
            return FlowOutcome { x: cur.x, iterations: it, converged: true, residual: cur.residual };
        }
        let mut next = None;
        for _ in 0..60 {
            let trial: Vec<T> = cur.x.iter().zip(&cur.r).map(|(&a, &b)| (a - tau * b).max(T::zero())).collect();
            match reduced(prob, &trial) {
                Some(jt) if jt <= cur.j * strict => {
                    next = evaluate(prob, trial);
                }
                Some(jt) if jt <= cur.j * flat => {
                    next = evaluate(prob, trial).filter(|pt| pt.residual < cur.residual);
                }
                _ => {}
            }
            if next.is_some() {
                break;
            }
            tau = tau * T::lit(0.5);
        }
        match next {
            Some(pt) => cur = pt,
            None => return FlowOutcome { x: cur.x, iterations: it, converged: false, residual: cur.residual },
        }
        tau = (tau * T::lit(1.25)).min(tau_max);
    }
    FlowOutcome { x: cur.x, iterations: opts.max_iter, converged: false, residual: cur.residual }
}

/// `(f, g)` with `A = <f, L1 f> + <g, L2 g> - P(f, g)`.
pub(crate) struct PairProblem<'a, T: Real> {
    pub grid: &'a Grid<T>,
    pub l1: (T, T),
    pub l2: (T, T),
    inv1: ShiftedInverse<T>,
    inv2: ShiftedInverse<T>,
}

impl<'a, T: Real> PairProblem<'a, T> {
    /// `L1 = -½Δ + omega`, `L2 = -κ/2 Δ + 2 omega + gamma`.
    pub fn new(grid: &'a Grid<T>, kappa: f64, gamma: f64, omega: f64) -> Self {
        let l1 = (T::lit(0.5), T::lit(omega));
        let l2 = (T::lit(0.5 * kappa), T::lit(2.0 * omega + gamma));
        Self { grid, l1, l2, inv1: ShiftedInverse::new(grid, l1.0, l1.1), inv2: ShiftedInverse::new(grid, l2.0, l2.1) }
    }

    pub fn split<'b>(&self, x: &'b [T]) -> (&'b [T], &'b [T]) {
        x.split_at(self.grid.len())
    }

    pub fn component_quadratic(&self, f: &[T], (c, s): (T, T)) -> T {
        c * self.grid.dirichlet_real(f) + s * self.grid.dot_real(f, f)
    }

    pub fn coupling(&self, f: &[T], g: &[T]) -> T {
        let grid = self.grid;
        grid.quad_weights()
            .iter()
            .zip(grid.weight_alpha())
            .zip(f.iter().zip(g))
            .map(|((&q, &w), (&a, &b))| q * w * a * a * b)
            .sum()
    }
}

impl<T: Real> Problem<T> for PairProblem<'_, T> {
    fn coefficients(&self) -> (T, T) {
        (T::one(), T::one())
    }

    fn quadratic(&self, x: &[T]) -> T {
        let (f, g) = self.split(x);
        self.component_quadratic(f, self.l1) + self.component_quadratic(g, self.l2)
    }

    fn cubic(&self, x: &[T]) -> T {
        let (f, g) = self.split(x);
        self.coupling(f, g)
    }

    fn nonlinear(&self, x: &[T]) -> Vec<T> {
        let (f, g) = self.split(x);
        let w = self.grid.weight_alpha();
        let half = T::lit(0.5);
        let mut out: Vec<T> = (0..f.len()).map(|i| w[i] * f[i] * g[i]).collect();
        out.extend((0..f.len()).map(|i| half * w[i] * f[i] * f[i]));
        out
    }

    fn precondition(&self, y: &[T]) -> Vec<T> {
        let (a, b) = self.split(y);
        let mut out = self.inv1.solve(self.grid, a);
        out.extend(self.inv2.solve(self.grid, b));
        out
    }
}

/// `A = ½ <q, L1 q> - ⅓ int w q^3` with `L1 = -½Δ + omega`.
pub(crate) struct ScalarProblem<'a, T: Real> {
    pub grid: &'a Grid<T>,
    pub omega: T,
    inv: ShiftedInverse<T>,
}

impl<'a, T: Real> ScalarProblem<'a, T> {
    pub fn new(grid: &'a Grid<T>, omega: f64) -> Self {
        let omega = T::lit(omega);
        Self { grid, omega, inv: ShiftedInverse::new(grid, T::lit(0.5), omega) }
    }
}

impl<T: Real> Problem<T> for ScalarProblem<'_, T> {
    fn coefficients(&self) -> (T, T) {
        (T::lit(0.5), T::one() / T::lit(3.0))
    }

    fn quadratic(&self, x: &[T]) -> T {
        T::lit(0.5) * self.grid.dirichlet_real(x) + self.omega * self.grid.dot_real(x, x)
    }

    fn cubic(&self, x: &[T]) -> T {
        let g = self.grid;
        g.quad_weights().iter().zip(g.weight_alpha()).zip(x).map(|((&q, &w), &a)| q * w * a * a * a).sum()
    }

    fn nonlinear(&self, x: &[T]) -> Vec<T> {
        x.iter().zip(self.grid.weight_alpha()).map(|(&a, &w)| w * a * a).collect()
    }

    fn precondition(&self, y: &[T]) -> Vec<T> {
        self.inv.solve(self.grid, y)
    }
}
