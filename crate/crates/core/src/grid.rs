//! Spatial grids: cell-centred radial finite volumes and periodic Cartesian boxes with
//! spectral operators.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::check_gate;
use crate::real::Real;
use crate::tridiag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Cartesian,
    Radial,
}

/// Grid description as it appears in run configurations.
///
/// `extent` is the half-width of the Cartesian box or the outer radius of a radial grid.
/// `counts` holds one entry per axis; a single entry is broadcast to every axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub kind: GridKind,
    pub d: usize,
    pub extent: f64,
    pub counts: Vec<usize>,
}

impl GridSpec {
    pub fn radial(d: usize, extent: f64, n: usize) -> Self {
        Self { kind: GridKind::Radial, d, extent, counts: vec![n] }
    }

    pub fn cartesian(d: usize, extent: f64, n: usize) -> Self {
        Self { kind: GridKind::Cartesian, d, extent, counts: vec![n; d] }
    }

    /// Per-axis sample counts after broadcasting.
    pub fn shape(&self) -> Result<Vec<usize>> {
        let axes = match self.kind {
            GridKind::Radial => 1,
            GridKind::Cartesian => self.d,
        };
        let shape = match self.counts.len() {
            1 => vec![self.counts[0]; axes],
            n if n == axes => self.counts.clone(),
            n => {
                return Err(Error::InvalidGrid(format!("expected 1 or {axes} counts, got {n}")));
            }
        };
        Ok(shape)
    }
}

/// Surface area of the unit sphere in `R^d`.
pub fn unit_sphere_area(d: usize) -> f64 {
    use std::f64::consts::PI;
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        5 => 8.0 * PI * PI / 3.0,
        _ => panic!("unsupported dimension {d}"),
    }
}

struct Spectral<T: Real> {
    forward: Vec<Arc<dyn Fft<T>>>,
    inverse: Vec<Arc<dyn Fft<T>>>,
    wavenumbers: Vec<Vec<T>>,
    k2: Vec<T>,
}

struct RadialOps<T> {
    face_area: Vec<T>,
    lower: Vec<T>,
    diag: Vec<T>,
    upper: Vec<T>,
}

/// Immutable discretization of the spatial domain. Cheap to share behind an [`Arc`].
pub struct Grid<T: Real> {
    spec: GridSpec,
    kind: GridKind,
    d: usize,
    shape: Vec<usize>,
    extent: T,
    spacing: Vec<T>,
    coords: Vec<Vec<T>>,
    radius: Vec<T>,
    quad_weights: Vec<T>,
    weight_alpha: Vec<T>,
    alpha: f64,
    spectral: Option<Spectral<T>>,
    radial: Option<RadialOps<T>>,
}

impl<T: Real> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("kind", &self.kind)
            .field("d", &self.d)
            .field("shape", &self.shape)
            .field("extent", &self.extent)
            .field("alpha", &self.alpha)
            .finish()
    }
}

/// Builds a grid and its regularized weight `|x|^{-alpha}`. `alpha = 0` gives the unit weight.
pub fn build_grid<T: Real>(spec: &GridSpec, alpha: f64) -> Result<Grid<T>> {
    Grid::new(spec, alpha)
}

impl<T: Real> Grid<T> {
    pub fn new(spec: &GridSpec, alpha: f64) -> Result<Self> {
        if !(1..=5).contains(&spec.d) {
            return Err(Error::InvalidGrid(format!("dimension d = {} must be in 1..=5", spec.d)));
        }
        if spec.kind == GridKind::Cartesian && spec.d > 2 {
            return Err(Error::InvalidGrid(format!(
                "Cartesian grids are limited to d <= 2 (got d = {}); use a radial grid",
                spec.d
            )));
        }
        if !(spec.extent > 0.0 && spec.extent.is_finite()) {
            return Err(Error::InvalidGrid(format!("extent = {} must be positive", spec.extent)));
        }
        let shape = spec.shape()?;
        if let Some(&n) = shape.iter().find(|&&n| n < 16) {
            return Err(Error::InvalidGrid(format!("count {n} is below the minimum of 16 per axis")));
        }
        if alpha != 0.0 {
            check_gate(spec.d, alpha)?;
        }
        let mut grid = match spec.kind {
            GridKind::Radial => Self::radial(spec.d, spec.extent, shape[0]),
            GridKind::Cartesian => {
                if let Some(&n) = shape.iter().find(|&&n| n % 2 != 0) {
                    return Err(Error::InvalidGrid(format!(
                        "Cartesian counts must be even so no node sits at the origin (got {n})"
                    )));
                }
                Self::cartesian(spec.d, spec.extent, shape.clone())
            }
        };
        grid.weight_alpha = singular_weight(&grid, alpha)?;
        grid.alpha = alpha;
        grid.spec = GridSpec { counts: shape, ..spec.clone() };
        Ok(grid)
    }

    fn radial(d: usize, extent: f64, n: usize) -> Self {
        let h = extent / n as f64;
        let area = unit_sphere_area(d);
        let r: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
        let hd = h.powi(d as i32);
        let vol: Vec<f64> = (0..n).map(|i| area / d as f64 * hd * shell_factor(i, d)).collect();
        let face: Vec<f64> = (0..n).map(|i| area * ((i + 1) as f64 * h).powi(d as i32 - 1)).collect();
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 0..n {
            let s = 1.0 / (h * h * vol[i]);
            let inner = if i > 0 { face[i - 1] } else { 0.0 };
            let outer = if i + 1 < n { face[i] } else { 2.0 * face[i] };
            lower[i] = inner * h * s;
            upper[i] = if i + 1 < n { face[i] * h * s } else { 0.0 };
            diag[i] = -(inner + outer) * h * s;
        }
        let cast = |v: &[f64]| v.iter().map(|&x| T::lit(x)).collect::<Vec<T>>();
        let radius = cast(&r);
        Self {
            spec: GridSpec::radial(d, extent, n),
            kind: GridKind::Radial,
            d,
            shape: vec![n],
            extent: T::lit(extent),
            spacing: vec![T::lit(h)],
            coords: vec![radius.clone()],
            radius,
            quad_weights: cast(&vol),
            weight_alpha: Vec::new(),
            alpha: 0.0,
            spectral: None,
            radial: Some(RadialOps {
                face_area: cast(&face),
                lower: cast(&lower),
                diag: cast(&diag),
                upper: cast(&upper),
            }),
        }
    }

    fn cartesian(d: usize, extent: f64, shape: Vec<usize>) -> Self {
        let mut planner = FftPlanner::<T>::new();
        let mut spacing = Vec::with_capacity(d);
        let mut coords = Vec::with_capacity(d);
        let mut wavenumbers = Vec::with_capacity(d);
        let mut forward = Vec::with_capacity(d);
        let mut inverse = Vec::with_capacity(d);
        for &n in &shape {
            let h = 2.0 * extent / n as f64;
            spacing.push(T::lit(h));
            coords.push((0..n).map(|j| T::lit(-extent + (j as f64 + 0.5) * h)).collect::<Vec<T>>());
            let dk = 2.0 * std::f64::consts::PI / (n as f64 * h);
            wavenumbers.push(
                (0..n)
                    .map(|j| {
                        let m = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
                        T::lit(m * dk)
                    })
                    .collect::<Vec<T>>(),
            );
            forward.push(planner.plan_fft_forward(n));
            inverse.push(planner.plan_fft_inverse(n));
        }
        let len: usize = shape.iter().product();
        let cell: f64 = spacing.iter().map(|h| h.as_f64()).product();
        let mut radius = Vec::with_capacity(len);
        let mut k2 = Vec::with_capacity(len);
        for idx in 0..len {
            let multi = unravel(idx, &shape);
            let mut r2 = T::zero();
            let mut kk = T::zero();
            for (a, &j) in multi.iter().enumerate() {
                r2 = r2 + coords[a][j] * coords[a][j];
                kk = kk + wavenumbers[a][j] * wavenumbers[a][j];
            }
            radius.push(r2.sqrt());
            k2.push(kk);
        }
        Self {
            spec: GridSpec { kind: GridKind::Cartesian, d, extent, counts: shape.clone() },
            kind: GridKind::Cartesian,
            d,
            shape,
            extent: T::lit(extent),
            spacing,
            coords,
            radius,
            quad_weights: vec![T::lit(cell); len],
            weight_alpha: Vec::new(),
            alpha: 0.0,
            spectral: Some(Spectral { forward, inverse, wavenumbers, k2 }),
            radial: None,
        }
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.quad_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quad_weights.is_empty()
    }

    pub fn extent(&self) -> T {
        self.extent
    }

    pub fn spacing(&self) -> &[T] {
        &self.spacing
    }

    /// Node coordinates along `axis` (the radii for a radial grid).
    /// The spec this grid was built from, with `counts` expanded to one entry per axis.
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn coords(&self, axis: usize) -> &[T] {
        &self.coords[axis]
    }

    /// `|x|` at every node.
    pub fn radius(&self) -> &[T] {
        &self.radius
    }

    pub fn quad_weights(&self) -> &[T] {
        &self.quad_weights
    }

    pub fn weight_alpha(&self) -> &[T] {
        &self.weight_alpha
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `|k|^2` per Fourier mode, Cartesian grids only.
    pub fn spectral_multipliers(&self) -> Option<&[T]> {
        self.spectral.as_ref().map(|s| s.k2.as_slice())
    }

    /// Wavenumbers along `axis`, Cartesian grids only.
    pub fn wavenumbers(&self, axis: usize) -> Option<&[T]> {
        self.spectral.as_ref().map(|s| s.wavenumbers[axis].as_slice())
    }

    /// Areas of the outer cell faces `|S^{d-1}| ((i+1) h)^{d-1}`, radial grids only.
    pub fn face_areas(&self) -> Option<&[T]> {
        self.radial.as_ref().map(|r| r.face_area.as_slice())
    }

    /// Lower, diagonal and upper bands of the radial Laplacian.
    pub fn laplacian_bands(&self) -> Option<(&[T], &[T], &[T])> {
        self.radial.as_ref().map(|r| (r.lower.as_slice(), r.diag.as_slice(), r.upper.as_slice()))
    }

    pub fn volume(&self) -> T {
        self.quad_weights.iter().copied().sum()
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        if n == self.len() {
            Ok(())
        } else {
            Err(Error::ShapeMismatch { expected: self.len(), got: n })
        }
    }

    pub fn integrate(&self, f: &[T]) -> T {
        assert_eq!(f.len(), self.len());
        f.iter().zip(&self.quad_weights).map(|(&a, &w)| a * w).sum()
    }

    /// `sum w conj(a) b`.
    pub fn inner(&self, a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
        assert_eq!(a.len(), self.len());
        assert_eq!(b.len(), self.len());
        let mut acc = Complex::new(T::zero(), T::zero());
        for ((x, y), &w) in a.iter().zip(b).zip(&self.quad_weights) {
            acc = acc + x.conj() * y * w;
        }
        acc
    }

    pub fn norm_sq(&self, a: &[Complex<T>]) -> T {
        a.iter().zip(&self.quad_weights).map(|(x, &w)| x.norm_sqr() * w).sum()
    }

    pub fn dot_real(&self, a: &[T], b: &[T]) -> T {
        a.iter().zip(b).zip(&self.quad_weights).map(|((&x, &y), &w)| x * y * w).sum()
    }

    pub fn laplacian(&self, f: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(f.len(), self.len());
        match self.kind {
            GridKind::Radial => {
                let ops = self.radial.as_ref().expect("radial operators");
                band_apply(&ops.lower, &ops.diag, &ops.upper, f)
            }
            GridKind::Cartesian => {
                let k2 = &self.spectral.as_ref().expect("spectral operators").k2;
                let mut g = f.to_vec();
                self.fft_forward(&mut g);
                for (z, &k) in g.iter_mut().zip(k2) {
                    *z = *z * (-k);
                }
                self.fft_inverse(&mut g);
                g
            }
        }
    }

    pub fn laplacian_real(&self, f: &[T]) -> Vec<T> {
        assert_eq!(f.len(), self.len());
        match self.kind {
            GridKind::Radial => {
                let ops = self.radial.as_ref().expect("radial operators");
                band_apply(&ops.lower, &ops.diag, &ops.upper, f)
            }
            GridKind::Cartesian => {
                let g: Vec<Complex<T>> = f.iter().map(|&x| Complex::new(x, T::zero())).collect();
                self.laplacian(&g).into_iter().map(|z| z.re).collect()
            }
        }
    }

    /// `||grad f||^2` in the form consistent with [`laplacian`](Self::laplacian): equal to
    /// `-Re <f, Δf>`, but summed as squared face differences (radial) or `|k|^2 |f̂|^2`
    /// (Cartesian) so that no cancellation occurs.
    pub fn dirichlet(&self, f: &[Complex<T>]) -> T {
        assert_eq!(f.len(), self.len());
        match self.kind {
            GridKind::Radial => self.face_sum(f.len(), |i| (f[i + 1] - f[i]).norm_sqr(), |i| f[i].norm_sqr()),
            GridKind::Cartesian => {
                let mut g = f.to_vec();
                self.fft_forward(&mut g);
                self.spectral_energy(&g)
            }
        }
    }

    pub fn dirichlet_real(&self, f: &[T]) -> T {
        assert_eq!(f.len(), self.len());
        match self.kind {
            GridKind::Radial => self.face_sum(f.len(), |i| (f[i + 1] - f[i]).powi(2), |i| f[i] * f[i]),
            GridKind::Cartesian => {
                let mut g: Vec<Complex<T>> = f.iter().map(|&x| Complex::new(x, T::zero())).collect();
                self.fft_forward(&mut g);
                self.spectral_energy(&g)
            }
        }
    }

    fn face_sum(&self, n: usize, jump: impl Fn(usize) -> T, edge: impl Fn(usize) -> T) -> T {
        let ops = self.radial.as_ref().expect("radial operators");
        let h = self.spacing[0];
        let mut acc = T::zero();
        for i in 0..n - 1 {
            acc = acc + ops.face_area[i] * jump(i);
        }
        (acc + T::lit(2.0) * ops.face_area[n - 1] * edge(n - 1)) / h
    }

    fn spectral_energy(&self, hat: &[Complex<T>]) -> T {
        let k2 = &self.spectral.as_ref().expect("spectral operators").k2;
        let s: T = hat.iter().zip(k2).map(|(z, &k)| z.norm_sqr() * k).sum();
        s * self.quad_weights[0] / T::of_usize(hat.len())
    }

    /// Spectral gradient of `f`, one component per axis. Cartesian grids only.
    pub fn gradient(&self, f: &[Complex<T>]) -> Vec<Vec<Complex<T>>> {
        let sp = self.spectral.as_ref().expect("gradient needs a Cartesian grid");
        let mut hat = f.to_vec();
        self.fft_forward(&mut hat);
        (0..self.shape.len())
            .map(|axis| {
                let mut g = hat.clone();
                for (idx, z) in g.iter_mut().enumerate() {
                    let j = unravel(idx, &self.shape)[axis];
                    let k = sp.wavenumbers[axis][j];
                    *z = Complex::new(-z.im * k, z.re * k);
                }
                self.fft_inverse(&mut g);
                g
            })
            .collect()
    }

    /// Solves `(-c Δ + s) x = rhs` for `c, s > 0`.
    pub fn solve_shifted_real(&self, c: T, s: T, rhs: &[T]) -> Vec<T> {
        assert_eq!(rhs.len(), self.len());
        match self.kind {
            GridKind::Radial => self.shifted_factor(c, s).solve(rhs),
            GridKind::Cartesian => {
                let mut g: Vec<Complex<T>> = rhs.iter().map(|&x| Complex::new(x, T::zero())).collect();
                let k2 = &self.spectral.as_ref().expect("spectral operators").k2;
                self.fft_forward(&mut g);
                for (z, &k) in g.iter_mut().zip(k2) {
                    *z = *z / (c * k + s);
                }
                self.fft_inverse(&mut g);
                g.into_iter().map(|z| z.re).collect()
            }
        }
    }

    /// Cached factorization of `-c Δ + s` on a radial grid.
    pub fn shifted_factor(&self, c: T, s: T) -> tridiag::Factored<T> {
        let ops = self.radial.as_ref().expect("shifted factor needs a radial grid");
        let lower: Vec<T> = ops.lower.iter().map(|&x| -c * x).collect();
        let upper: Vec<T> = ops.upper.iter().map(|&x| -c * x).collect();
        let diag: Vec<T> = ops.diag.iter().map(|&x| s - c * x).collect();
        tridiag::Factored::new(&lower, &diag, &upper)
    }

    /// Applies `g(|k|^2)` in Fourier space. Cartesian grids only.
    pub fn apply_multiplier(&self, f: &mut [Complex<T>], mult: &[Complex<T>]) {
        assert_eq!(mult.len(), self.len());
        self.fft_forward(f);
        for (z, &m) in f.iter_mut().zip(mult) {
            *z = *z * m;
        }
        self.fft_inverse(f);
    }

    pub fn fft_forward(&self, data: &mut [Complex<T>]) {
        self.fft_nd(data, false);
    }

    /// Inverse transform including the `1/n` normalization.
    pub fn fft_inverse(&self, data: &mut [Complex<T>]) {
        self.fft_nd(data, true);
        let scale = T::one() / T::of_usize(data.len());
        for z in data.iter_mut() {
            *z = *z * scale;
        }
    }

    fn fft_nd(&self, data: &mut [Complex<T>], inverse: bool) {
        let sp = self.spectral.as_ref().expect("FFT needs a Cartesian grid");
        assert_eq!(data.len(), self.len());
        let plans = if inverse { &sp.inverse } else { &sp.forward };
        match self.shape.as_slice() {
            [_] => plans[0].process(data),
            [n0, n1] => {
                let (n0, n1) = (*n0, *n1);
                plans[1].process(data);
                let mut t = vec![Complex::new(T::zero(), T::zero()); data.len()];
                for i in 0..n0 {
                    for j in 0..n1 {
                        t[j * n0 + i] = data[i * n1 + j];
                    }
                }
                plans[0].process(&mut t);
                for i in 0..n0 {
                    for j in 0..n1 {
                        data[i * n1 + j] = t[j * n0 + i];
                    }
                }
            }
            _ => unreachable!("Cartesian grids have at most two axes"),
        }
    }
}

/// `((i+1)^d - i^d)`, summed term by term so it stays accurate for large `i`.
fn shell_factor(i: usize, d: usize) -> f64 {
    let x = i as f64;
    let mut binom = 1.0;
    let mut s = 0.0;
    for k in 0..d {
        s += binom * x.powi(k as i32);
        binom = binom * (d - k) as f64 / (k + 1) as f64;
    }
    s
}

/// `(i+1)^p - i^p` for real `p > 0`.
fn power_gap(i: usize, p: f64) -> f64 {
    if i == 0 {
        1.0
    } else {
        let x = i as f64;
        x.powf(p) * (p * (1.0 / x).ln_1p()).exp_m1()
    }
}

fn unravel(mut idx: usize, shape: &[usize]) -> Vec<usize> {
    let mut out = vec![0; shape.len()];
    for a in (0..shape.len()).rev() {
        out[a] = idx % shape[a];
        idx /= shape[a];
    }
    out
}

fn band_apply<T, S>(lower: &[T], diag: &[T], upper: &[T], f: &[S]) -> Vec<S>
where
    T: Real,
    S: Copy + std::ops::Mul<T, Output = S> + std::ops::Add<Output = S>,
{
    let n = f.len();
    (0..n)
        .map(|i| {
            let mut acc = f[i] * diag[i];
            if i > 0 {
                acc = acc + f[i - 1] * lower[i];
            }
            if i + 1 < n {
                acc = acc + f[i + 1] * upper[i];
            }
            acc
        })
        .collect()
}

/// Regularized samples of `|x|^{-alpha}`.
///
/// Radial grids use the exact average of `r^{-alpha}` over each cell against `r^{d-1} dr`,
/// which is `d/(d-alpha) h^{-alpha}` in the origin cell. Cartesian nodes never touch the origin
/// and are evaluated pointwise.
pub fn singular_weight<T: Real>(grid: &Grid<T>, alpha: f64) -> Result<Vec<T>> {
    let d = grid.d();
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::InvalidParams(format!("alpha = {alpha} must be nonnegative")));
    }
    if alpha >= d as f64 {
        return Err(Error::InvalidParams(format!(
            "alpha = {alpha} >= d = {d}: |x|^-alpha is not locally integrable"
        )));
    }
    if alpha == 0.0 {
        return Ok(vec![T::one(); grid.len()]);
    }
    Ok(match grid.kind() {
        GridKind::Radial => {
            let h = grid.spacing()[0].as_f64();
            let p = d as f64 - alpha;
            let scale = d as f64 / p * h.powf(-alpha);
            (0..grid.len())
                .map(|i| T::lit(scale * power_gap(i, p) / shell_factor(i, d)))
                .collect()
        }
        GridKind::Cartesian => grid.radius().iter().map(|&r| T::lit(r.as_f64().powf(-alpha))).collect(),
    })
}

/// Discrete Laplacian of `f` on `grid`.
pub fn laplacian<T: Real>(f: &[Complex<T>], grid: &Grid<T>) -> Result<Vec<Complex<T>>> {
    grid.check_len(f.len())?;
    Ok(grid.laplacian(f))
}

/// Quadrature `sum f w`.
pub fn integrate<T: Real>(f: &[T], grid: &Grid<T>) -> Result<T> {
    grid.check_len(f.len())?;
    Ok(grid.integrate(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_and_gap_agree_with_direct_powers() {
        for d in 1..=5 {
            for i in [0usize, 1, 2, 7, 100] {
                let direct = ((i + 1) as f64).powi(d as i32) - (i as f64).powi(d as i32);
                assert!((shell_factor(i, d) - direct).abs() <= 1e-12 * direct);
                assert!((power_gap(i, d as f64) - direct).abs() <= 1e-12 * direct);
            }
        }
    }

    #[test]
    fn unravel_row_major() {
        assert_eq!(unravel(7, &[4, 3]), vec![2, 1]);
        assert_eq!(unravel(5, &[8]), vec![5]);
    }

    #[test]
    fn bad_specs() {
        assert!(Grid::<f64>::new(&GridSpec::cartesian(3, 5.0, 16), 0.0).is_err());
        assert!(Grid::<f64>::new(&GridSpec::radial(3, 5.0, 8), 0.0).is_err());
        assert!(Grid::<f64>::new(&GridSpec::radial(3, -1.0, 32), 0.0).is_err());
        assert!(Grid::<f64>::new(&GridSpec::cartesian(1, 5.0, 17), 0.0).is_err());
        assert!(Grid::<f64>::new(&GridSpec::radial(3, 5.0, 32), 1.8).is_err());
    }
}
