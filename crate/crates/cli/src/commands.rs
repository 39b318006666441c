use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use inls_core::classify::{classify, Label, Verdict};
use inls_core::evolution::{blowup_monitor, evolve, scattering_diagnostics, write_diagnostics_csv, BlowupReport, EvolveConfig, ScatteringReport, Status};
use inls_core::functionals::invariants;
use inls_core::ground_state::{
    alpha_limit, compute_d_minus, gn_constant, minimize_nehari, mountain_pass_level, GnCrossCheck, Init,
};
use inls_core::profile::{read_profile, write_ground_state, write_state};
use inls_core::{ActionSet, Error, FieldPair, Grid, GridSpec, GroundStateResult, PhysParams};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConfigError, InitialConfig, RunConfig, SweepAxis};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;
pub const EXIT_DIVERGED: i32 = 4;

/// A command that could not run to completion, with the process exit code to report.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure { code: EXIT_CONFIG, message: e.to_string() }
    }
}

fn fail(context: &str, e: Error) -> Failure {
    let code = if matches!(e, Error::NonFinite) { EXIT_DIVERGED } else { EXIT_CONFIG };
    Failure { code, message: format!("{context}: {e}") }
}

fn io_fail(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_CONFIG, message: format!("{}: {e}", path.display()) }
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_fail(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_fail(path, e))
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| io_fail(dir, e))
}

fn build_grid(spec: &GridSpec, alpha: f64) -> Result<Arc<Grid>, Failure> {
    Grid::new(spec, alpha).map(Arc::new).map_err(|e| fail("grid", e))
}

fn solve_ground_state(cfg: &RunConfig, p: &PhysParams) -> Result<GroundStateResult, Failure> {
    let grid = build_grid(&cfg.grid_spec()?, p.alpha)?;
    let opts = cfg.solver.options(cfg.seed);
    minimize_nehari(p, grid, Init::Preset(opts.init), &opts).map_err(|e| fail("ground state", e))
}

#[derive(Serialize)]
struct GnCheck {
    formula: GnCrossCheck,
    closed_form: Option<f64>,
    rel_diff: Option<f64>,
    consistent: Option<bool>,
}

#[derive(Serialize)]
struct GroundStateSummary {
    params: PhysParams,
    grid: GridSpec,
    d_omega: f64,
    c_omega: f64,
    #[serde(rename = "C_GN")]
    c_gn: f64,
    pohozaev_res: [f64; 2],
    decay_rate: Option<f64>,
    iterations: usize,
    converged: bool,
    residual: f64,
    mountain_pass_rel_diff: Option<f64>,
    gn_cross_check: Option<GnCheck>,
}

fn gn_check(gs: &GroundStateResult) -> Option<GnCheck> {
    gn_constant(gs, &gs.params).ok().map(|g| GnCheck {
        formula: g.formula,
        closed_form: g.closed_form,
        rel_diff: g.rel_diff,
        consistent: g.rel_diff.map(|r| r < 1e-6),
    })
}

pub fn ground_state(cfg: &RunConfig) -> Result<i32, Failure> {
    let out = &cfg.output.dir;
    let gs = solve_ground_state(cfg, &cfg.params)?;
    prepare_out(out)?;
    let profile = out.join("ground_state.csv");
    write_ground_state(&profile, &gs).map_err(|e| fail(&profile.display().to_string(), e))?;
    let summary = GroundStateSummary {
        params: gs.params,
        grid: gs.fields.grid.spec().clone(),
        d_omega: gs.d_omega,
        c_omega: gs.c_omega,
        c_gn: gs.c_gn,
        pohozaev_res: [gs.pohozaev_res.0, gs.pohozaev_res.1],
        decay_rate: gs.decay_rate,
        iterations: gs.iterations,
        converged: gs.converged,
        residual: gs.residual,
        mountain_pass_rel_diff: mountain_pass_level(&gs, &gs.params).ok().map(|m| m.1),
        gn_cross_check: gn_check(&gs),
    };
    write_json(&out.join("summary.json"), &summary)?;
    println!(
        "d_omega = {:.16e}  C_GN = {:.16e}  iterations = {}  converged = {}",
        gs.d_omega, gs.c_gn, gs.iterations, gs.converged
    );
    Ok(if gs.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

#[derive(Serialize)]
struct GnReport {
    params: PhysParams,
    #[serde(rename = "C_GN")]
    c_gn: f64,
    formula: GnCrossCheck,
    closed_form: Option<f64>,
    rel_diff: Option<f64>,
    iterations: usize,
    converged: bool,
}

pub fn gn_constant_cmd(cfg: &RunConfig) -> Result<i32, Failure> {
    let p = &cfg.params;
    if p.gamma != 0.0 {
        return Err(cfg.error("params", "gamma", "the sharp constant is defined by the gamma = 0 ground state").into());
    }
    if p.omega != 1.0 {
        return Err(cfg.error("params", "omega", "the sharp constant is defined by the omega = 1 ground state").into());
    }
    let gs = solve_ground_state(cfg, p)?;
    if !gs.converged {
        eprintln!("ground state did not converge after {} iterations", gs.iterations);
        return Ok(EXIT_NOT_CONVERGED);
    }
    let g = gn_constant(&gs, p).map_err(|e| fail("sharp constant", e))?;
    let report = GnReport {
        params: *p,
        c_gn: g.c_gn,
        formula: g.formula,
        closed_form: g.closed_form,
        rel_diff: g.rel_diff,
        iterations: gs.iterations,
        converged: gs.converged,
    };
    prepare_out(&cfg.output.dir)?;
    write_json(&cfg.output.dir.join("gn_constant.json"), &report)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(EXIT_OK)
}

fn check_system(cfg: &RunConfig, what: &Path, other: &PhysParams) -> Result<(), Failure> {
    let p = &cfg.params;
    if other.d != p.d || other.alpha != p.alpha || other.kappa != p.kappa {
        return Err(Failure {
            code: EXIT_CONFIG,
            message: format!(
                "{}: parameters mismatch: file has (d, alpha, kappa) = ({}, {}, {}), config has ({}, {}, {})",
                what.display(),
                other.d,
                other.alpha,
                other.kappa,
                p.d,
                p.alpha,
                p.kappa
            ),
        });
    }
    Ok(())
}

fn load_profile(cfg: &RunConfig, path: &Path, section: &str, key: &str) -> Result<inls_core::profile::Profile<f64>, Failure> {
    let full = cfg.resolve(path);
    if !full.exists() {
        return Err(cfg.error(section, key, format!("profile {} does not exist", full.display())).into());
    }
    let prof = read_profile::<f64>(&full).map_err(|e| fail(&full.display().to_string(), e))?;
    check_system(cfg, &full, &prof.meta.params)?;
    Ok(prof)
}

fn initial_state(cfg: &RunConfig) -> Result<FieldPair, Failure> {
    let init = cfg.initial.as_ref().ok_or_else(|| cfg.missing("initial"))?;
    let p = &cfg.params;
    match init {
        InitialConfig::Profile { path, scale } => {
            Ok(load_profile(cfg, path, "initial", "path")?.fields.scaled(*scale))
        }
        InitialConfig::GroundState { scale } => Ok(solve_ground_state(cfg, p)?.fields.scaled(*scale)),
        InitialConfig::Gaussian { amp_u, amp_v, width_u, width_v } => {
            let grid = build_grid(&cfg.grid_spec()?, p.alpha)?;
            let (au, av, wu, wv) = (*amp_u, *amp_v, *width_u, *width_v);
            Ok(FieldPair::from_radial_fn(grid, |r| au * (-(r / wu).powi(2)).exp(), |r| av * (-(r / wv).powi(2)).exp()))
        }
    }
}

#[derive(Serialize)]
struct EvolveReport {
    params: PhysParams,
    status: Status,
    steps: usize,
    t_final: f64,
    dt_final: f64,
    stop_time: Option<f64>,
    m_drift: f64,
    e_drift: f64,
    k_drift: f64,
    blowup: BlowupReport,
    scattering: Option<ScatteringReport>,
}

pub fn evolve_cmd(cfg: &RunConfig) -> Result<i32, Failure> {
    let ecfg = cfg.evolve_config()?;
    let state = initial_state(cfg)?;
    let tr = evolve(&state, &ecfg).map_err(|e| fail("evolve", e))?;
    let out = &cfg.output.dir;
    prepare_out(out)?;
    let diag_path = out.join("diagnostics.csv");
    let file = fs::File::create(&diag_path).map_err(|e| io_fail(&diag_path, e))?;
    write_diagnostics_csv(&tr.diag, BufWriter::new(file)).map_err(|e| io_fail(&diag_path, e))?;
    let final_path = out.join("final.csv");
    let t_final = tr.times.last().copied().unwrap_or(0.0);
    write_state(&final_path, &tr.final_state, &cfg.params, Some(t_final))
        .map_err(|e| fail(&final_path.display().to_string(), e))?;
    let first = tr.diag.first().expect("trajectory records the initial state");
    let scale = first.e.abs() + first.k;
    let m_drift = tr.diag.iter().map(|r| (r.m - first.m).abs()).fold(0.0, f64::max) / first.m;
    let e_drift = tr.diag.iter().map(|r| (r.e - first.e).abs()).fold(0.0, f64::max) / scale;
    let k_drift = tr.diag.iter().map(|r| (r.k - first.k).abs()).fold(0.0, f64::max) / first.k;
    let report = EvolveReport {
        params: cfg.params,
        status: tr.status,
        steps: tr.steps,
        t_final,
        dt_final: tr.dt_final,
        stop_time: tr.stop_time,
        m_drift,
        e_drift,
        k_drift,
        blowup: blowup_monitor(&tr, &ecfg),
        scattering: (tr.status == Status::Completed).then(|| scattering_diagnostics(&tr, &ecfg)),
    };
    write_json(&out.join("report.json"), &report)?;
    println!("status = {:?}  t = {t_final}  steps = {}", tr.status, tr.steps);
    Ok(match tr.status {
        Status::Completed => EXIT_OK,
        Status::BlowupDetected => EXIT_BLOWUP,
        Status::Diverged => EXIT_DIVERGED,
    })
}

pub fn classify_cmd(cfg: &RunConfig) -> Result<i32, Failure> {
    let sec = cfg.classify.as_ref().ok_or_else(|| cfg.missing("classify"))?;
    let state = load_profile(cfg, &sec.state, "classify", "state")?.fields;
    let gs = load_profile(cfg, &sec.ground_state, "classify", "ground_state")?
        .into_ground_state()
        .map_err(|e| fail("classify.ground_state", e))?;
    let p = &cfg.params;
    let wp = match (sec.wp, sec.compute_wp) {
        (Some(w), _) => Some(w),
        (None, true) => {
            let opts = cfg.solver.options(cfg.seed);
            Some(compute_d_minus(p, &gs, Init::Fields(&gs.fields), &opts).map_err(|e| fail("d_minus", e))?.wp)
        }
        (None, false) => None,
    };
    let verdict = classify(&state, &gs, p, wp).map_err(|e| fail("classify", e))?;
    let out = &cfg.output.dir;
    prepare_out(out)?;
    write_json(&out.join("verdict.json"), &verdict)?;
    println!("{}", verdict.to_json());
    Ok(EXIT_OK)
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn write_table(path: &Path, header: &str, rows: &[String]) -> Result<(), Failure> {
    let mut text = String::new();
    writeln!(text, "{header}").expect("string write");
    for r in rows {
        writeln!(text, "{r}").expect("string write");
    }
    fs::write(path, text).map_err(|e| io_fail(path, e))
}

pub const ALPHA_HEADER: &str = "alpha,d_omega,distance,d_gap,converged,error";
pub const MU_HEADER: &str = "mu,label,M,K,H,A_omega,B_omega,G,wp,status,stop_time,k_ratio,status_refined,stop_time_refined,error";

struct EvolveOutcome {
    status: Status,
    stop_time: Option<f64>,
    k_ratio: f64,
}

fn run_evolution(state: &FieldPair, ecfg: &EvolveConfig) -> Result<EvolveOutcome, Error> {
    let tr = evolve(state, ecfg)?;
    let k0 = tr.diag.first().map(|r| r.k).unwrap_or(f64::NAN);
    let kmax = tr.diag.iter().map(|r| r.k).fold(f64::NEG_INFINITY, f64::max);
    Ok(EvolveOutcome { status: tr.status, stop_time: tr.stop_time, k_ratio: kmax / k0 })
}

fn mu_row(
    mu: f64,
    gs: &GroundStateResult,
    gs_gn: &GroundStateResult,
    p: &PhysParams,
    wp: Option<f64>,
    ecfg: Option<&EvolveConfig>,
    refine: bool,
) -> Result<(Verdict, String), Error> {
    let state = gs.fields.scaled(mu);
    let verdict = classify(&state, gs_gn, p, wp)?;
    let inv = invariants(&state, p);
    let act = ActionSet::from_invariants(&inv, p);
    let mut cols = vec![
        num(mu),
        format!("{:?}", verdict.label),
        num(inv.m),
        num(inv.k),
        num(inv.h),
        num(act.a_omega),
        num(act.b_omega),
        num(inv.g),
        opt_num(wp),
    ];
    match ecfg {
        Some(ecfg) => {
            let a = run_evolution(&state, ecfg)?;
            cols.extend([format!("{:?}", a.status), opt_num(a.stop_time), num(a.k_ratio)]);
            if refine {
                let fine = EvolveConfig { dt: ecfg.dt / 2.0, dt_min: ecfg.dt_min / 2.0, ..*ecfg };
                let b = run_evolution(&state, &fine)?;
                cols.extend([format!("{:?}", b.status), opt_num(b.stop_time)]);
            } else {
                cols.extend([String::new(), String::new()]);
            }
        }
        None => cols.extend(std::iter::repeat_n(String::new(), 5)),
    }
    cols.push(String::new());
    Ok((verdict, cols.join(",")))
}

fn error_row(lead: f64, n_cols: usize, e: &Error) -> String {
    let mut cols = vec![num(lead)];
    cols.extend(std::iter::repeat_n(String::new(), n_cols - 2));
    cols.push(format!("\"{}\"", e.to_string().replace('"', "'")));
    cols.join(",")
}

pub fn sweep_cmd(cfg: &RunConfig) -> Result<i32, Failure> {
    let sec = cfg.sweep.as_ref().ok_or_else(|| cfg.missing("sweep"))?;
    let spec = cfg.grid_spec()?;
    let p = cfg.params;
    let opts = cfg.solver.options(cfg.seed);
    let out = &cfg.output.dir;
    let (header, rows, failures) = match sec.axis {
        SweepAxis::Alpha => {
            let rows = alpha_limit::<f64>(&p, &sec.values, &spec, &opts)
                .map_err(|e| Failure { code: EXIT_CONFIG, message: format!("sweep: {e}") })?;
            let n_cols = ALPHA_HEADER.split(',').count();
            let mut failures = 0;
            let lines: Vec<String> = rows
                .iter()
                .zip(&sec.values)
                .map(|(r, &alpha)| match r {
                    Ok(r) => format!(
                        "{},{},{},{},{},",
                        num(r.alpha),
                        num(r.d_omega),
                        num(r.distance),
                        num(r.d_gap),
                        r.converged
                    ),
                    Err(e) => {
                        failures += 1;
                        error_row(alpha, n_cols, e)
                    }
                })
                .collect();
            (ALPHA_HEADER, lines, failures)
        }
        SweepAxis::Mu => {
            let ecfg = if sec.evolve { Some(cfg.evolve_config()?) } else { None };
            let gs = solve_ground_state(cfg, &p)?;
            let gn_params = PhysParams { gamma: 0.0, omega: 1.0, ..p };
            let gs_gn = if gn_params == p { gs.clone() } else { solve_ground_state(cfg, &gn_params)? };
            let wp = if p.d_plus_2alpha() >= 4.0 {
                Some(compute_d_minus(&p, &gs, Init::Fields(&gs.fields), &opts).map_err(|e| fail("d_minus", e))?.wp)
            } else {
                None
            };
            let n_cols = MU_HEADER.split(',').count();
            let results: Vec<_> = sec
                .values
                .par_iter()
                .map(|&mu| mu_row(mu, &gs, &gs_gn, &p, wp, ecfg.as_ref(), sec.refine))
                .collect();
            let mut failures = 0;
            let lines = results
                .iter()
                .zip(&sec.values)
                .map(|(r, &mu)| match r {
                    Ok((_, line)) => line.clone(),
                    Err(e) => {
                        failures += 1;
                        error_row(mu, n_cols, e)
                    }
                })
                .collect();
            (MU_HEADER, lines, failures)
        }
    };
    prepare_out(out)?;
    let path: PathBuf = out.join("sweep.csv");
    write_table(&path, header, &rows)?;
    println!("{} rows written to {} ({} failed)", rows.len(), path.display(), failures);
    Ok(if failures == rows.len() { EXIT_CONFIG } else { EXIT_OK })
}

/// Labels in the order a `mu` sweep is expected to visit them.
pub fn label_rank(label: Label) -> u8 {
    match label {
        l if l.is_global() => 0,
        Label::Boundary => 1,
        Label::Unknown => 2,
        _ => 3,
    }
}
