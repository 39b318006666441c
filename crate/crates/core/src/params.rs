//! Physical parameters of the system and the admissibility gate on `(d, alpha)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(d, alpha, kappa, gamma, omega)`.
///
/// `alpha` is the exponent of the singular coupling `|x|^{-alpha}`, `kappa` the dispersion
/// ratio of the second component, `gamma` the mismatch and `omega` the standing-wave frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysParams {
    pub d: usize,
    pub alpha: f64,
    pub kappa: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default = "default_omega")]
    pub omega: f64,
}

fn default_omega() -> f64 {
    1.0
}

impl PhysParams {
    pub fn new(d: usize, alpha: f64, kappa: f64, gamma: f64, omega: f64) -> Self {
        Self { d, alpha, kappa, gamma, omega }
    }

    /// Critical Sobolev exponent `d/2 - 2 + alpha`.
    pub fn s_c(&self) -> f64 {
        self.d as f64 / 2.0 - 2.0 + self.alpha
    }

    /// `d + 2 alpha`, the exponent combination that decides the regime.
    pub fn d_plus_2alpha(&self) -> f64 {
        self.d as f64 + 2.0 * self.alpha
    }

    /// `(6 - d - 2 alpha) / (d + 2 alpha - 4)`, defined in the mass-supercritical range only.
    pub fn sigma(&self) -> Option<f64> {
        let den = self.d_plus_2alpha() - 4.0;
        if den > 0.0 {
            Some((6.0 - self.d_plus_2alpha()) / den)
        } else {
            None
        }
    }

    /// Checks the local well-posedness gate and `kappa > 0`.
    pub fn validate(&self) -> Result<()> {
        check_gate(self.d, self.alpha)?;
        self.check_kappa()
    }

    /// Like [`validate`](Self::validate) but also admits `alpha = 0` (the limit problem).
    pub fn validate_allowing_zero_alpha(&self) -> Result<()> {
        if self.alpha == 0.0 {
            if !(1..=5).contains(&self.d) {
                return Err(Error::InvalidParams(format!("dimension d = {} must be in 1..=5", self.d)));
            }
            return self.check_kappa();
        }
        self.validate()
    }

    /// Ground-state existence needs `omega > 0` and `gamma + 2 omega > 0`.
    pub fn check_frequency(&self) -> Result<()> {
        if self.omega > 0.0 && self.gamma + 2.0 * self.omega > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidFrequency { omega: self.omega, gamma: self.gamma })
        }
    }

    fn check_kappa(&self) -> Result<()> {
        if self.kappa > 0.0 && self.kappa.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("kappa = {} must be positive", self.kappa)))
        }
    }
}

/// Rejects `(d, alpha)` outside `0 < alpha < min(2, d)`, `alpha < (6 - d)/2` for `3 <= d <= 5`.
pub fn check_gate(d: usize, alpha: f64) -> Result<()> {
    if !(1..=5).contains(&d) {
        return Err(Error::InvalidParams(format!("dimension d = {d} must be in 1..=5")));
    }
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::InvalidParams(format!("alpha = {alpha} must be positive")));
    }
    let df = d as f64;
    let upper = df.min(2.0);
    if alpha >= upper {
        return Err(Error::InvalidParams(format!(
            "alpha = {alpha} violates 0 < alpha < min(2, d) = {upper} for d = {d} \
             (table of well-posed ranges: {})",
            table_row(d)
        )));
    }
    if d >= 3 && alpha >= (6.0 - df) / 2.0 {
        return Err(Error::InvalidParams(format!(
            "alpha = {alpha} violates the energy-subcritical gate alpha < (6 - d)/2 = {} for d = {d} \
             (table of well-posed ranges: {})",
            (6.0 - df) / 2.0,
            table_row(d)
        )));
    }
    Ok(())
}

/// Well-posed ranges by dimension: mass-subcritical / mass-critical / mass-supercritical.
pub fn table_row(d: usize) -> &'static str {
    match d {
        1 => "d=1: subcritical 0<alpha<1, critical NA, supercritical NA",
        2 => "d=2: subcritical 0<alpha<1, critical alpha=1, supercritical 1<alpha<2",
        3 => "d=3: subcritical 0<alpha<1/2, critical alpha=1/2, supercritical 1/2<alpha<3/2",
        4 => "d=4: subcritical NA, critical NA, supercritical 0<alpha<1",
        5 => "d=5: subcritical NA, critical NA, supercritical 0<alpha<1/2",
        _ => "no admissible range",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_exponents() {
        let p = PhysParams::new(3, 1.0, 1.0, 0.0, 1.0);
        assert_eq!(p.s_c(), 0.5);
        assert_eq!(p.sigma(), Some(1.0));
        assert_eq!(PhysParams::new(2, 1.0, 1.0, 0.0, 1.0).sigma(), None);
        assert!((PhysParams::new(5, 0.4, 1.0, 0.0, 1.0).s_c() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn gate() {
        assert!(check_gate(2, 1.0).is_ok());
        assert!(check_gate(3, 1.4).is_ok());
        assert!(check_gate(1, 1.0).is_err());
        assert!(check_gate(2, 0.0).is_err());
        let msg = check_gate(3, 1.8).unwrap_err().to_string();
        assert!(msg.contains("energy-subcritical"), "{msg}");
        assert!(check_gate(5, 0.5).is_err());
        assert!(check_gate(6, 0.1).is_err());
    }

    #[test]
    fn frequency() {
        assert!(PhysParams::new(2, 1.0, 1.0, -1.0, 1.0).check_frequency().is_ok());
        assert!(PhysParams::new(2, 1.0, 1.0, -2.0, 1.0).check_frequency().is_err());
        assert!(PhysParams::new(2, 1.0, 1.0, 0.0, 0.0).check_frequency().is_err());
    }
}
