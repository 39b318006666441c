//! Time integration by Strang splitting, with per-step diagnostics, blow-up detection and
//! scattering/virial reports.

mod stepper;

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use stepper::{coupling_rk4, strang_step, Stepper};

use crate::cutoff::{make_cutoff, CutoffFn, CutoffKind};
use crate::error::{Error, Result};
use crate::field::FieldPair;
use crate::functionals::{invariants, moment_rate, virial_moment, weighted_mass, InvariantSet};
use crate::grid::Grid;
use crate::params::PhysParams;
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub p: PhysParams,
    pub dt: f64,
    pub t_end: f64,
    pub dt_min: f64,
    pub diag_stride: usize,
    /// Scale of the `ChiR` virial weight and radius of the local-mass ball.
    pub cutoff_r: f64,
    pub blowup_k_factor: f64,
    /// Largest accepted per-step change of `E`, relative to `|E| + K`.
    pub energy_tol: f64,
    /// Keep a snapshot every this many steps; 0 keeps only the initial and final states.
    pub snapshot_every: usize,
}

impl EvolveConfig {
    pub fn new(p: PhysParams, dt: f64, t_end: f64, cutoff_r: f64) -> Self {
        Self {
            p,
            dt,
            t_end,
            dt_min: dt * 1e-4,
            diag_stride: 1,
            cutoff_r,
            blowup_k_factor: 1e3,
            energy_tol: 1e-8,
            snapshot_every: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end = {} must be positive", self.t_end));
        }
        if !(self.dt_min > 0.0 && self.dt_min < self.dt) {
            return bad(format!("dt_min = {} must lie in (0, dt)", self.dt_min));
        }
        if self.diag_stride == 0 {
            return bad("diag_stride must be at least 1".into());
        }
        if !(self.blowup_k_factor > 1.0) {
            return bad(format!("blowup_k_factor = {} must exceed 1", self.blowup_k_factor));
        }
        if !(self.energy_tol > 0.0) {
            return bad(format!("energy_tol = {} must be positive", self.energy_tol));
        }
        self.p.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Completed,
    BlowupDetected,
    Diverged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagRow {
    pub t: f64,
    pub m: f64,
    pub k: f64,
    pub p: f64,
    pub e: f64,
    pub g: f64,
    pub h: f64,
    pub v_chi: f64,
    pub m_chi: f64,
    pub localmass: f64,
    pub spacetime_accum: f64,
}

pub const DIAG_HEADER: &str = "t,M,K,P,E,G,H,Vchi,Mchi,localmass,spacetime_accum";

impl DiagRow {
    pub fn csv_line(&self) -> String {
        [
            self.t,
            self.m,
            self.k,
            self.p,
            self.e,
            self.g,
            self.h,
            self.v_chi,
            self.m_chi,
            self.localmass,
            self.spacetime_accum,
        ]
        .iter()
        .map(|x| format!("{x:.16e}"))
        .collect::<Vec<_>>()
        .join(",")
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory<T: Real> {
    pub times: Vec<f64>,
    pub diag: Vec<DiagRow>,
    pub snapshots: Vec<(f64, FieldPair<T>)>,
    pub status: Status,
    pub final_state: FieldPair<T>,
    pub steps: usize,
    pub dt_final: f64,
    /// Time at which blow-up or divergence was flagged.
    pub stop_time: Option<f64>,
}

pub fn write_diagnostics_csv<W: Write>(rows: &[DiagRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{DIAG_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv_line())?;
    }
    Ok(())
}

struct Probes<T: Real> {
    chi: CutoffFn<T>,
    ball: Vec<T>,
}

impl<T: Real> Probes<T> {
    fn new(grid: &Grid<T>, r: f64) -> Result<Self> {
        let chi = make_cutoff(CutoffKind::ChiR, r, grid)?;
        let ball = grid.radius().iter().map(|&x| if x.as_f64() <= r { T::one() } else { T::zero() }).collect();
        Ok(Self { chi, ball })
    }

    fn row(&self, t: f64, state: &FieldPair<T>, inv: &InvariantSet<T>, p: &PhysParams, accum: f64) -> DiagRow {
        let vm = virial_moment(state, &self.chi, p);
        DiagRow {
            t,
            m: inv.m.as_f64(),
            k: inv.k.as_f64(),
            p: inv.p.as_f64(),
            e: inv.e.as_f64(),
            g: inv.g.as_f64(),
            h: inv.h.as_f64(),
            v_chi: vm.v.as_f64(),
            m_chi: vm.m_chi.as_f64(),
            localmass: weighted_mass(state, &self.ball).as_f64(),
            spacetime_accum: accum,
        }
    }
}

/// `int |x|^{-alpha} (|u|^3 + |v|^3)`.
pub fn cubic_density<T: Real>(state: &FieldPair<T>) -> f64 {
    let g = &state.grid;
    let mut acc = T::zero();
    for i in 0..g.len() {
        let a = state.u[i].norm();
        let b = state.v[i].norm();
        acc = acc + (a * a * a + b * b * b) * g.weight_alpha()[i] * g.quad_weights()[i];
    }
    acc.as_f64()
}

/// Integrates from `state0` to `cfg.t_end`.
///
/// A step whose energy change exceeds `energy_tol (|E| + K)` is rejected and retried with half
/// the step. The run stops with `BlowupDetected` once `K` exceeds `blowup_k_factor K(0)` or the
/// step falls below `dt_min`, and with `Diverged` on a non-finite sample.
pub fn evolve<T: Real>(state0: &FieldPair<T>, cfg: &EvolveConfig) -> Result<Trajectory<T>> {
    cfg.validate()?;
    let grid: Arc<Grid<T>> = state0.grid.clone();
    if grid.alpha() != cfg.p.alpha || grid.d() != cfg.p.d {
        return Err(Error::ParamsMismatch(format!(
            "grid built for (d, alpha) = ({}, {}), run uses ({}, {})",
            grid.d(),
            grid.alpha(),
            cfg.p.d,
            cfg.p.alpha
        )));
    }
    let p = &cfg.p;
    let probes = Probes::new(&grid, cfg.cutoff_r)?;
    let mut state = state0.clone();
    let mut inv = invariants(&state, p);
    let k0 = inv.k.as_f64();
    let mut accum = 0.0;
    let mut density = cubic_density(&state);
    let mut t = 0.0;
    let mut dt = cfg.dt;
    let mut stepper = Stepper::new(grid.clone(), p, T::lit(dt));
    let mut diag = vec![probes.row(0.0, &state, &inv, p, 0.0)];
    let mut snapshots = vec![(0.0, state.clone())];
    let mut steps = 0usize;
    let mut status = Status::Completed;
    let mut stop_time = None;
    let t_stop = cfg.t_end * (1.0 - 1e-12);
    while t < t_stop {
        let h = dt.min(cfg.t_end - t);
        if stepper.dt().as_f64() != h {
            stepper = Stepper::new(grid.clone(), p, T::lit(h));
        }
        let mut trial = state.clone();
        if stepper.step(&mut trial).is_err() {
            status = Status::Diverged;
            stop_time = Some(t);
            break;
        }
        let next = invariants(&trial, p);
        let de = (next.e - inv.e).abs().as_f64();
        let scale = inv.e.abs().as_f64() + inv.k.as_f64();
        if de > cfg.energy_tol * scale {
            dt *= 0.5;
            if dt < cfg.dt_min {
                status = Status::BlowupDetected;
                stop_time = Some(t);
                break;
            }
            continue;
        }
        state = trial;
        inv = next;
        t += h;
        steps += 1;
        let d_new = cubic_density(&state);
        accum += 0.5 * h * (density + d_new);
        density = d_new;
        let blown = inv.k.as_f64() > cfg.blowup_k_factor * k0;
        let last = t >= t_stop;
        if steps % cfg.diag_stride == 0 || last || blown {
            diag.push(probes.row(t, &state, &inv, p, accum));
        }
        if cfg.snapshot_every > 0 && steps % cfg.snapshot_every == 0 && !last {
            snapshots.push((t, state.clone()));
        }
        if blown {
            status = Status::BlowupDetected;
            stop_time = Some(t);
            break;
        }
    }
    if diag.last().map(|r| r.t) != Some(t) {
        diag.push(probes.row(t, &state, &inv, p, accum));
    }
    if snapshots.last().map(|s| s.0) != Some(t) {
        snapshots.push((t, state.clone()));
    }
    Ok(Trajectory {
        times: diag.iter().map(|r| r.t).collect(),
        diag,
        snapshots,
        status,
        final_state: state,
        steps,
        dt_final: dt,
        stop_time,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub status: Status,
    pub g0: f64,
    pub sup_g: f64,
    /// `-sup G` when that is positive, i.e. the largest `delta` with `G(t) <= -delta`.
    pub delta: Option<f64>,
    pub uniformly_negative: bool,
    pub detection_time: Option<f64>,
    /// Slope of `ln K` against `ln t` over the second half of the recorded times.
    pub k_growth_exponent: Option<f64>,
    pub k_ratio: f64,
}

pub fn blowup_monitor<T: Real>(tr: &Trajectory<T>, _cfg: &EvolveConfig) -> BlowupReport {
    let g0 = tr.diag.first().map(|r| r.g).unwrap_or(f64::NAN);
    let sup_g = tr.diag.iter().map(|r| r.g).fold(f64::NEG_INFINITY, f64::max);
    let delta = if sup_g < 0.0 { Some(-sup_g) } else { None };
    let t_last = tr.times.last().copied().unwrap_or(0.0);
    let tail: Vec<(f64, f64)> = tr
        .diag
        .iter()
        .filter(|r| r.t > 0.0 && r.t >= 0.5 * t_last && r.k > 0.0)
        .map(|r| (r.t.ln(), r.k.ln()))
        .collect();
    let k0 = tr.diag.first().map(|r| r.k).unwrap_or(f64::NAN);
    let kmax = tr.diag.iter().map(|r| r.k).fold(f64::NEG_INFINITY, f64::max);
    BlowupReport {
        status: tr.status,
        g0,
        sup_g,
        delta,
        uniformly_negative: delta.is_some(),
        detection_time: if tr.status == Status::BlowupDetected { tr.stop_time } else { None },
        k_growth_exponent: slope(&tail),
        k_ratio: kmax / k0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringReport {
    pub times: Vec<f64>,
    pub p_series: Vec<f64>,
    pub localmass_series: Vec<f64>,
    /// Exponent of `spacetime_accum(T) ~ T^beta` fitted over the second half of the run.
    pub beta: Option<f64>,
    pub beta_bound: f64,
    pub localmass_nonincreasing: bool,
    pub p_final_ratio: f64,
}

pub fn scattering_diagnostics<T: Real>(tr: &Trajectory<T>, cfg: &EvolveConfig) -> ScatteringReport {
    let t_last = tr.times.last().copied().unwrap_or(0.0);
    let tail: Vec<(f64, f64)> = tr
        .diag
        .iter()
        .filter(|r| r.t > 0.0 && r.t >= 0.5 * t_last && r.spacetime_accum > 0.0)
        .map(|r| (r.t.ln(), r.spacetime_accum.ln()))
        .collect();
    let lm: Vec<f64> = tr.diag.iter().map(|r| r.localmass).collect();
    let scale = lm.first().copied().unwrap_or(0.0).abs();
    let p0 = tr.diag.first().map(|r| r.p).unwrap_or(f64::NAN);
    let pend = tr.diag.last().map(|r| r.p).unwrap_or(f64::NAN);
    ScatteringReport {
        times: tr.times.clone(),
        p_series: tr.diag.iter().map(|r| r.p).collect(),
        localmass_nonincreasing: lm.windows(2).all(|w| w[1] <= w[0] + 1e-10 * scale),
        localmass_series: lm,
        beta: slope(&tail),
        beta_bound: 1.0 / (1.0 + cfg.p.alpha),
        p_final_ratio: pend / p0,
    }
}

fn slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx > 0.0 {
        Some(sxy / sxx)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirialChainReport {
    pub t: f64,
    pub dt: f64,
    /// `(V(t+dt) - V(t-dt)) / (2 dt)` for the `ChiR` weight.
    pub dv_fd: f64,
    pub v_dot: f64,
    pub m_chi: f64,
    /// `(M_q(t+dt) - M_q(t-dt)) / (2 dt)` for the weight `|x|^2`.
    pub dmq_fd: f64,
    pub two_g: f64,
    /// Exact semi-discrete `d/dt M_q`, which the difference quotient approaches as `dt -> 0`.
    pub rate_quadratic: f64,
    pub err_v_dot: f64,
    pub err_m_chi: f64,
    pub err_quadratic: f64,
    /// `|dmq_fd - rate_quadratic|`.
    pub err_quadratic_semi: f64,
}

/// Central differences of the virial quantities around `t = cfg.t_end`, reached with steps of
/// `cfg.dt`, compared with their instantaneous formulas.
pub fn verify_virial_chain<T: Real>(state0: &FieldPair<T>, cfg: &EvolveConfig) -> Result<VirialChainReport> {
    if cfg.t_end > 0.5 {
        return Err(Error::InvalidParams(format!("t_end = {} exceeds the short horizon 0.5", cfg.t_end)));
    }
    let p = &cfg.p;
    let grid = state0.grid.clone();
    let chi = make_cutoff(CutoffKind::ChiR, cfg.cutoff_r, &grid)?;
    let quad = make_cutoff(CutoffKind::Quadratic, 0.0, &grid)?;
    let mut state = state0.clone();
    let mut t = 0.0;
    if cfg.t_end > 0.0 {
        let n = (cfg.t_end / cfg.dt).round().max(1.0) as usize;
        let h = cfg.t_end / n as f64;
        let stepper = Stepper::new(grid.clone(), p, T::lit(h));
        for _ in 0..n {
            stepper.step(&mut state)?;
        }
        t = cfg.t_end;
    }
    let fwd = Stepper::new(grid.clone(), p, T::lit(cfg.dt));
    let bwd = Stepper::new(grid.clone(), p, T::lit(-cfg.dt));
    let mut plus = state.clone();
    fwd.step(&mut plus)?;
    let mut minus = state.clone();
    bwd.step(&mut minus)?;
    let here = virial_moment(&state, &chi, p);
    let dv_fd = ((virial_moment(&plus, &chi, p).v - virial_moment(&minus, &chi, p).v).as_f64()) / (2.0 * cfg.dt);
    let dmq_fd =
        ((virial_moment(&plus, &quad, p).m_chi - virial_moment(&minus, &quad, p).m_chi).as_f64()) / (2.0 * cfg.dt);
    let two_g = 2.0 * invariants(&state, p).g.as_f64();
    let v_dot = here.v_dot.as_f64();
    let m_chi = here.m_chi.as_f64();
    let rate_quadratic = moment_rate(&state, &quad, p).as_f64();
    Ok(VirialChainReport {
        t,
        dt: cfg.dt,
        dv_fd,
        v_dot,
        m_chi,
        dmq_fd,
        two_g,
        rate_quadratic,
        err_v_dot: (dv_fd - v_dot).abs(),
        err_m_chi: (dv_fd - m_chi).abs(),
        err_quadratic: (dmq_fd - two_g).abs(),
        err_quadratic_semi: (dmq_fd - rate_quadratic).abs(),
    })
}
