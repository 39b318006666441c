use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::real::Real;

/// Samples of the pair `(u, v)` on a shared grid.
#[derive(Debug, Clone)]
pub struct FieldPair<T: Real> {
    pub u: Vec<Complex<T>>,
    pub v: Vec<Complex<T>>,
    pub grid: Arc<Grid<T>>,
}

impl<T: Real> FieldPair<T> {
    pub fn new(u: Vec<Complex<T>>, v: Vec<Complex<T>>, grid: Arc<Grid<T>>) -> Result<Self> {
        grid.check_len(u.len())?;
        grid.check_len(v.len())?;
        let pair = Self { u, v, grid };
        if !pair.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(pair)
    }

    pub fn zeros(grid: Arc<Grid<T>>) -> Self {
        let z = vec![Complex::new(T::zero(), T::zero()); grid.len()];
        Self { u: z.clone(), v: z, grid }
    }

    /// Builds a real pair by sampling `f` and `g` at `|x|`.
    pub fn from_radial_fn(grid: Arc<Grid<T>>, f: impl Fn(T) -> T, g: impl Fn(T) -> T) -> Self {
        let u = grid.radius().iter().map(|&r| Complex::new(f(r), T::zero())).collect();
        let v = grid.radius().iter().map(|&r| Complex::new(g(r), T::zero())).collect();
        Self { u, v, grid }
    }

    pub fn from_real(phi: &[T], psi: &[T], grid: Arc<Grid<T>>) -> Result<Self> {
        let u = phi.iter().map(|&x| Complex::new(x, T::zero())).collect();
        let v = psi.iter().map(|&x| Complex::new(x, T::zero())).collect();
        Self::new(u, v, grid)
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `(mu u, mu v)`.
    pub fn scaled(&self, mu: T) -> Self {
        Self {
            u: self.u.iter().map(|&z| z * mu).collect(),
            v: self.v.iter().map(|&z| z * mu).collect(),
            grid: self.grid.clone(),
        }
    }

    /// Multiplies `u` by `e^{i theta_u}` and `v` by `e^{i theta_v}`.
    pub fn with_phases(&self, theta_u: T, theta_v: T) -> Self {
        let pu = Complex::from_polar(T::one(), theta_u);
        let pv = Complex::from_polar(T::one(), theta_v);
        Self {
            u: self.u.iter().map(|&z| z * pu).collect(),
            v: self.v.iter().map(|&z| z * pv).collect(),
            grid: self.grid.clone(),
        }
    }

    pub fn real_parts(&self) -> (Vec<T>, Vec<T>) {
        (self.u.iter().map(|z| z.re).collect(), self.v.iter().map(|z| z.re).collect())
    }

    /// `||u - u'||^2 + ||v - v'||^2 + ||grad(u - u')||^2 + ||grad(v - v')||^2`, square-rooted.
    pub fn h1_distance(&self, other: &Self) -> T {
        let du: Vec<Complex<T>> = self.u.iter().zip(&other.u).map(|(a, b)| a - b).collect();
        let dv: Vec<Complex<T>> = self.v.iter().zip(&other.v).map(|(a, b)| a - b).collect();
        let g = &self.grid;
        (g.norm_sq(&du) + g.norm_sq(&dv) + g.dirichlet(&du) + g.dirichlet(&dv)).sqrt()
    }

    pub fn h1_norm(&self) -> T {
        let g = &self.grid;
        (g.norm_sq(&self.u) + g.norm_sq(&self.v) + g.dirichlet(&self.u) + g.dirichlet(&self.v)).sqrt()
    }
}
