use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldPair;
use crate::grid::{Grid, GridKind, GridSpec};
use crate::ground_state::GroundStateResult;
use crate::params::PhysParams;
use crate::real::Real;

pub const FORMAT: &str = "inlslab-profile-1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Values {
    /// Two real columns `phi, psi`.
    Real,
    /// Four columns `u_re, u_im, v_re, v_im`.
    Complex,
}

/// Everything in a ground-state result except the fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStateSummary {
    pub d_omega: f64,
    pub c_omega: f64,
    pub c_gn: f64,
    pub pohozaev_res: [f64; 2],
    pub decay_rate: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
}

impl GroundStateSummary {
    pub fn of<T: Real>(gs: &GroundStateResult<T>) -> Self {
        Self {
            d_omega: gs.d_omega,
            c_omega: gs.c_omega,
            c_gn: gs.c_gn,
            pohozaev_res: [gs.pohozaev_res.0, gs.pohozaev_res.1],
            decay_rate: gs.decay_rate,
            iterations: gs.iterations,
            converged: gs.converged,
            residual: gs.residual,
        }
    }
}

/// Contents of the JSON sidecar written next to every profile CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileMeta {
    pub format: String,
    pub params: PhysParams,
    pub grid: GridSpec,
    pub values: Values,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_state: Option<GroundStateSummary>,
}

#[derive(Debug, Clone)]
pub struct Profile<T: Real> {
    pub meta: ProfileMeta,
    pub fields: FieldPair<T>,
}

impl<T: Real> Profile<T> {
    /// Rebuilds the ground-state result; fails when the file is a plain state.
    pub fn into_ground_state(self) -> Result<GroundStateResult<T>> {
        let s = self.meta.ground_state.ok_or_else(|| {
            Error::Format("profile sidecar carries no ground_state section".to_string())
        })?;
        Ok(GroundStateResult {
            params: self.meta.params,
            fields: self.fields,
            d_omega: s.d_omega,
            c_omega: s.c_omega,
            c_gn: s.c_gn,
            pohozaev_res: (s.pohozaev_res[0], s.pohozaev_res[1]),
            decay_rate: s.decay_rate,
            iterations: s.iterations,
            converged: s.converged,
            residual: s.residual,
        })
    }
}

/// Path of the JSON sidecar for a profile CSV.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn coord_names(spec: &GridSpec) -> &'static [&'static str] {
    match (spec.kind, spec.d) {
        (GridKind::Radial, _) => &["r"],
        (GridKind::Cartesian, 1) => &["x"],
        _ => &["x", "y"],
    }
}

fn header(spec: &GridSpec, values: Values) -> String {
    let mut cols = vec!["index"];
    cols.extend_from_slice(coord_names(spec));
    match values {
        Values::Real => cols.extend_from_slice(&["phi", "psi"]),
        Values::Complex => cols.extend_from_slice(&["u_re", "u_im", "v_re", "v_im"]),
    }
    cols.join(",")
}

fn node_coords<T: Real>(grid: &Grid<T>, k: usize) -> Vec<f64> {
    match grid.kind() {
        GridKind::Radial => vec![grid.radius()[k].as_f64()],
        GridKind::Cartesian => {
            let shape = grid.shape();
            if shape.len() == 1 {
                vec![grid.coords(0)[k].as_f64()]
            } else {
                vec![grid.coords(0)[k / shape[1]].as_f64(), grid.coords(1)[k % shape[1]].as_f64()]
            }
        }
    }
}

fn write_files<T: Real>(csv: &Path, fields: &FieldPair<T>, meta: &ProfileMeta) -> Result<()> {
    let grid = &fields.grid;
    let mut out = BufWriter::new(fs::File::create(csv)?);
    writeln!(out, "{}", header(&meta.grid, meta.values))?;
    for k in 0..grid.len() {
        write!(out, "{k}")?;
        for c in node_coords(grid, k) {
            write!(out, ",{c:.16e}")?;
        }
        let (u, v) = (fields.u[k], fields.v[k]);
        match meta.values {
            Values::Real => write!(out, ",{:.16e},{:.16e}", u.re.as_f64(), v.re.as_f64())?,
            Values::Complex => write!(
                out,
                ",{:.16e},{:.16e},{:.16e},{:.16e}",
                u.re.as_f64(),
                u.im.as_f64(),
                v.re.as_f64(),
                v.im.as_f64()
            )?,
        }
        writeln!(out)?;
    }
    out.flush()?;
    let mut json = serde_json::to_string_pretty(meta)?;
    json.push('\n');
    fs::write(sidecar_path(csv), json)?;
    Ok(())
}

/// Writes a ground state as real `phi, psi` columns plus a sidecar carrying its summary.
pub fn write_ground_state<T: Real>(csv: &Path, gs: &GroundStateResult<T>) -> Result<()> {
    let meta = ProfileMeta {
        format: FORMAT.to_string(),
        params: gs.params,
        grid: gs.fields.grid.spec().clone(),
        values: Values::Real,
        time: None,
        ground_state: Some(GroundStateSummary::of(gs)),
    };
    write_files(csv, &gs.fields, &meta)
}

/// Writes a complex state, e.g. an evolution snapshot at time `time`.
pub fn write_state<T: Real>(csv: &Path, state: &FieldPair<T>, params: &PhysParams, time: Option<f64>) -> Result<()> {
    let meta = ProfileMeta {
        format: FORMAT.to_string(),
        params: *params,
        grid: state.grid.spec().clone(),
        values: Values::Complex,
        time,
        ground_state: None,
    };
    write_files(csv, state, &meta)
}

pub fn read_meta(csv: &Path) -> Result<ProfileMeta> {
    let side = sidecar_path(csv);
    let text = fs::read_to_string(&side)
        .map_err(|e| Error::Format(format!("cannot read sidecar {}: {e}", side.display())))?;
    let meta: ProfileMeta = serde_json::from_str(&text)?;
    if meta.format != FORMAT {
        return Err(Error::Format(format!("unknown profile format {:?}, expected {FORMAT:?}", meta.format)));
    }
    Ok(meta)
}

/// Reads a profile and its sidecar, rebuilding the grid from the recorded spec.
pub fn read_profile<T: Real>(csv: &Path) -> Result<Profile<T>> {
    let meta = read_meta(csv)?;
    let grid = Arc::new(Grid::<T>::new(&meta.grid, meta.params.alpha)?);
    let text = fs::read_to_string(csv)
        .map_err(|e| Error::Format(format!("cannot read profile {}: {e}", csv.display())))?;
    let mut lines = text.lines();
    let expected = header(&meta.grid, meta.values);
    match lines.next() {
        Some(h) if h.trim_end() == expected => {}
        Some(h) => return Err(Error::Format(format!("profile header {h:?} does not match {expected:?}"))),
        None => return Err(Error::Format("profile is empty".to_string())),
    }
    let n_coord = coord_names(&meta.grid).len();
    let n_val = match meta.values {
        Values::Real => 2,
        Values::Complex => 4,
    };
    let zero = Complex::new(T::zero(), T::zero());
    let mut u = vec![zero; grid.len()];
    let mut v = vec![zero; grid.len()];
    let mut rows = 0usize;
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Format(format!("profile line {}: {what}", lineno + 2));
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 1 + n_coord + n_val {
            return Err(bad(&format!("expected {} columns, found {}", 1 + n_coord + n_val, cols.len())));
        }
        let k: usize = cols[0].trim().parse().map_err(|_| bad("bad index"))?;
        if k != rows || k >= grid.len() {
            return Err(bad(&format!("index {k} out of sequence")));
        }
        let mut vals = [0.0f64; 4];
        for (j, c) in cols[1 + n_coord..].iter().enumerate() {
            vals[j] = c.trim().parse().map_err(|_| bad(&format!("cannot parse {c:?}")))?;
        }
        let (a, b) = match meta.values {
            Values::Real => (Complex::new(T::lit(vals[0]), T::zero()), Complex::new(T::lit(vals[1]), T::zero())),
            Values::Complex => (
                Complex::new(T::lit(vals[0]), T::lit(vals[1])),
                Complex::new(T::lit(vals[2]), T::lit(vals[3])),
            ),
        };
        u[k] = a;
        v[k] = b;
        rows += 1;
    }
    if rows != grid.len() {
        return Err(Error::Format(format!("profile has {rows} rows, grid needs {}", grid.len())));
    }
    let fields = FieldPair::new(u, v, grid)?;
    Ok(Profile { meta, fields })
}
