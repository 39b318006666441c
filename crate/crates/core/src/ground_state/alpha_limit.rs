use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{minimize_nehari, GroundStateResult, Init, SolverOptions};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridSpec};
use crate::params::PhysParams;
use crate::real::Real;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaRow {
    pub alpha: f64,
    pub d_omega: f64,
    /// `H^1` distance of the ground state to the `alpha = 0` ground state.
    pub distance: f64,
    /// `|d_omega - d_omega(alpha = 0)|`.
    pub d_gap: f64,
    pub converged: bool,
}

/// Ground states along a descending list of `alpha`, compared with the `alpha = 0` limit.
///
/// The `alpha = 0` reference is computed whether or not it appears in `alphas`. Rows are solved
/// in parallel and returned in input order; a failed row does not abort the others, a failed
/// reference does.
pub fn alpha_limit<T: Real>(
    p0: &PhysParams,
    alphas: &[f64],
    spec: &GridSpec,
    opts: &SolverOptions,
) -> Result<Vec<Result<AlphaRow>>> {
    if alphas.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidParams("alpha list must be descending".into()));
    }
    if alphas.iter().any(|&a| a < 0.0) {
        return Err(Error::InvalidParams("alpha list must be nonnegative".into()));
    }
    let solve = |alpha: f64| -> Result<GroundStateResult<T>> {
        let p = PhysParams { alpha, ..*p0 };
        let grid = Arc::new(Grid::<T>::new(spec, alpha)?);
        minimize_nehari(&p, grid, Init::Preset(opts.init), opts)
    };
    let mut all: Vec<f64> = alphas.to_vec();
    if !all.contains(&0.0) {
        all.push(0.0);
    }
    let results: Vec<Result<GroundStateResult<T>>> = all.par_iter().map(|&a| solve(a)).collect();
    let reference = results
        .iter()
        .zip(&all)
        .find(|(_, &a)| a == 0.0)
        .map(|(r, _)| r)
        .expect("reference row present");
    let reference = match reference {
        Ok(r) => r.clone(),
        Err(e) => return Err(Error::InvalidParams(format!("alpha = 0 reference failed: {e}"))),
    };
    let rows = results
        .into_iter()
        .zip(&all)
        .take(alphas.len())
        .map(|(res, &alpha)| {
            res.map(|gs| AlphaRow {
                alpha,
                d_omega: gs.d_omega,
                distance: gs.fields.h1_distance(&reference.fields).as_f64(),
                d_gap: (gs.d_omega - reference.d_omega).abs(),
                converged: gs.converged,
            })
        })
        .collect();
    Ok(rows)
}
