//! Thomas algorithm for tridiagonal systems, with an optional cached factorization.

use num_traits::Num;

/// Solves `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
///
/// `lower[0]` and `upper[n-1]` are ignored. No pivoting: the system is expected to be
/// diagonally dominant.
pub fn solve<S: Num + Copy>(lower: &[S], diag: &[S], upper: &[S], rhs: &[S]) -> Vec<S> {
    Factored::new(lower, diag, upper).solve(rhs)
}

/// Forward-elimination coefficients of a tridiagonal matrix, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct Factored<S> {
    lower: Vec<S>,
    inv_pivot: Vec<S>,
    c_prime: Vec<S>,
}

impl<S: Num + Copy> Factored<S> {
    pub fn new(lower: &[S], diag: &[S], upper: &[S]) -> Self {
        let n = diag.len();
        assert!(lower.len() == n && upper.len() == n, "tridiagonal bands must have equal length");
        let mut inv_pivot = Vec::with_capacity(n);
        let mut c_prime = Vec::with_capacity(n);
        let mut prev_c = S::zero();
        for i in 0..n {
            let pivot = if i == 0 { diag[0] } else { diag[i] - lower[i] * prev_c };
            let inv = S::one() / pivot;
            let c = if i + 1 < n { upper[i] * inv } else { S::zero() };
            inv_pivot.push(inv);
            c_prime.push(c);
            prev_c = c;
        }
        Self { lower: lower.to_vec(), inv_pivot, c_prime }
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    pub fn solve(&self, rhs: &[S]) -> Vec<S> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [S]) {
        let n = self.len();
        assert_eq!(x.len(), n);
        if n == 0 {
            return;
        }
        x[0] = x[0] * self.inv_pivot[0];
        for i in 1..n {
            x[i] = (x[i] - self.lower[i] * x[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            x[i] = x[i] - self.c_prime[i] * x[i + 1];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn matches_dense_product() {
        let n = 7;
        let lower: Vec<f64> = (0..n).map(|i| 0.3 + 0.1 * i as f64).collect();
        let upper: Vec<f64> = (0..n).map(|i| -0.2 + 0.05 * i as f64).collect();
        let diag: Vec<f64> = (0..n).map(|i| 3.0 + i as f64).collect();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 1.0).collect();
        let rhs: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = diag[i] * x_true[i];
                if i > 0 {
                    s += lower[i] * x_true[i - 1];
                }
                if i + 1 < n {
                    s += upper[i] * x_true[i + 1];
                }
                s
            })
            .collect();
        let x = solve(&lower, &diag, &upper, &rhs);
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn complex_system() {
        let i = Complex64::i();
        let n = 5;
        let lower = vec![-i; n];
        let upper = vec![-i; n];
        let diag = vec![Complex64::new(1.0, 0.0) + 2.0 * i; n];
        let rhs: Vec<Complex64> = (0..n).map(|k| Complex64::new(k as f64, 1.0)).collect();
        let f = Factored::new(&lower, &diag, &upper);
        let x = f.solve(&rhs);
        for k in 0..n {
            let mut s = diag[k] * x[k];
            if k > 0 {
                s += lower[k] * x[k - 1];
            }
            if k + 1 < n {
                s += upper[k] * x[k + 1];
            }
            assert!((s - rhs[k]).norm() < 1e-13);
        }
    }
}
