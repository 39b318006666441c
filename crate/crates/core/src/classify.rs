use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldPair;
use crate::functionals::{invariants, ActionSet, InvariantSet};
use crate::ground_state::GroundStateResult;
use crate::params::{check_gate, PhysParams};
use crate::real::Real;

/// Relative width of the band inside which two sides of an inequality count as equal.
pub const BOUNDARY_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    GlobalSubcritical,
    GlobalBelowMass,
    GlobalBelowThreshold,
    GlobalAndScattering,
    BlowupOrGrowup,
    KMinusUnstable,
    Boundary,
    Unknown,
}

impl Label {
    pub fn is_global(self) -> bool {
        matches!(
            self,
            Label::GlobalSubcritical | Label::GlobalBelowMass | Label::GlobalBelowThreshold | Label::GlobalAndScattering
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
}

impl Evidence {
    fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        Self { name: name.to_string(), lhs, rhs }
    }

    pub fn on_boundary(&self) -> bool {
        on_boundary(self.lhs, self.rhs)
    }

    pub fn strictly_less(&self) -> bool {
        self.lhs < self.rhs && !self.on_boundary()
    }

    pub fn strictly_greater(&self) -> bool {
        self.lhs > self.rhs && !self.on_boundary()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: Label,
    pub evidence: Vec<Evidence>,
    pub params: PhysParams,
}

impl Verdict {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdicts always serialize")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    MassSub,
    MassCritical,
    MassSuper,
    EnergyCritical,
    OutOfRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeInfo {
    pub label: Regime,
    pub s_c: f64,
}

fn on_boundary(a: f64, b: f64) -> bool {
    (a - b).abs() <= BOUNDARY_BAND * a.abs().max(b.abs())
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

pub fn regime(d: usize, alpha: f64) -> RegimeInfo {
    let df = d as f64;
    let s_c = df / 2.0 - 2.0 + alpha;
    let label = if !(1..=5).contains(&d) || !alpha.is_finite() {
        Regime::OutOfRange
    } else if near(alpha, (6.0 - df) / 2.0) {
        Regime::EnergyCritical
    } else if check_gate(d, alpha).is_err() {
        Regime::OutOfRange
    } else if near(alpha, (4.0 - df) / 2.0) {
        Regime::MassCritical
    } else if alpha < (4.0 - df) / 2.0 {
        Regime::MassSub
    } else {
        Regime::MassSuper
    };
    RegimeInfo { label, s_c }
}

fn check_same_system<T: Real>(gs: &GroundStateResult<T>, p: &PhysParams) -> Result<()> {
    let g = &gs.params;
    if g.d != p.d || g.alpha != p.alpha || g.kappa != p.kappa {
        return Err(Error::ParamsMismatch(format!(
            "ground state has (d, alpha, kappa) = ({}, {}, {}), state uses ({}, {}, {})",
            g.d, g.alpha, g.kappa, p.d, p.alpha, p.kappa
        )));
    }
    Ok(())
}

fn is_gn_state<T: Real>(gs: &GroundStateResult<T>) -> bool {
    gs.params.gamma == 0.0 && gs.params.omega == 1.0
}

fn require_gn_state<T: Real>(gs: &GroundStateResult<T>) -> Result<()> {
    if is_gn_state(gs) {
        Ok(())
    } else {
        Err(Error::ParamsMismatch(format!(
            "threshold inequalities need the gamma = 0, omega = 1 ground state, got gamma = {}, omega = {}",
            gs.params.gamma, gs.params.omega
        )))
    }
}

struct Scaled {
    h: Evidence,
    k: Evidence,
}

/// `H M^σ` against `E₀(gs) M(gs)^σ` and `K M^σ` against `K(gs) M(gs)^σ`.
fn scaled_pair(state: &InvariantSet<f64>, gs: &InvariantSet<f64>, sigma: f64) -> Scaled {
    let ms = state.m.powf(sigma);
    let m0s = gs.m.powf(sigma);
    let e0 = gs.k / 2.0 - gs.p;
    Scaled {
        h: Evidence::new("H M^sigma vs E0 M0^sigma", state.h * ms, e0 * m0s),
        k: Evidence::new("K M^sigma vs K0 M0^sigma", state.k * ms, gs.k * m0s),
    }
}

fn to_f64<T: Real>(i: &InvariantSet<T>) -> InvariantSet<f64> {
    InvariantSet {
        m: i.m.as_f64(),
        k: i.k.as_f64(),
        p: i.p.as_f64(),
        e: i.e.as_f64(),
        g: i.g.as_f64(),
        h: i.h.as_f64(),
        v_l2: i.v_l2.as_f64(),
    }
}

/// Sufficient conditions for global existence, measured against the sharp Gagliardo–Nirenberg
/// ground state.
pub fn global_threshold_check<T: Real>(
    state0: &FieldPair<T>,
    gs: &GroundStateResult<T>,
    p: &PhysParams,
) -> Result<Verdict> {
    check_same_system(gs, p)?;
    require_gn_state(gs)?;
    let inv = to_f64(&invariants(state0, p));
    let inv_gs = to_f64(&gs.invariants());
    let mut evidence = Vec::new();
    let label = match regime(p.d, p.alpha).label {
        Regime::MassSub => {
            evidence.push(Evidence::new("d + 2 alpha < 4", p.d_plus_2alpha(), 4.0));
            Label::GlobalSubcritical
        }
        Regime::MassCritical => {
            let e = Evidence::new("M < M0", inv.m, inv_gs.m);
            let label = if e.on_boundary() {
                Label::Boundary
            } else if e.lhs < e.rhs {
                Label::GlobalBelowMass
            } else {
                Label::Unknown
            };
            evidence.push(e);
            label
        }
        Regime::MassSuper => {
            let sigma = p.sigma().expect("supercritical range has a finite sigma");
            let Scaled { h, k } = scaled_pair(&inv, &inv_gs, sigma);
            let label = if h.strictly_less() && k.strictly_less() {
                let scattering = (3..=5).contains(&p.d) && p.alpha < 2f64.min(p.d as f64 / 2.0);
                if scattering {
                    Label::GlobalAndScattering
                } else {
                    Label::GlobalBelowThreshold
                }
            } else if (h.on_boundary() || k.on_boundary()) && !h.strictly_greater() && !k.strictly_greater() {
                Label::Boundary
            } else {
                Label::Unknown
            };
            evidence.push(h);
            evidence.push(k);
            label
        }
        Regime::EnergyCritical | Regime::OutOfRange => Label::Unknown,
    };
    Ok(Verdict { label, evidence, params: *p })
}

/// Sufficient conditions for blow-up (or grow-up) and membership of the unstable set `K⁻`.
///
/// `K⁻` is tested first when `wp` is given; the threshold inequalities are evaluated only when
/// `gs` is the `gamma = 0, omega = 1` ground state.
pub fn blowup_threshold_check<T: Real>(
    state0: &FieldPair<T>,
    gs: &GroundStateResult<T>,
    p: &PhysParams,
    wp: Option<f64>,
) -> Result<Verdict> {
    check_same_system(gs, p)?;
    let inv_t = invariants(state0, p);
    let act = ActionSet::from_invariants(&inv_t, p);
    let inv = to_f64(&inv_t);
    let mut evidence = Vec::new();
    let mut label = Label::Unknown;
    if let Some(wp) = wp {
        let a = Evidence::new("A_omega < wp", act.a_omega.as_f64(), wp);
        let b = Evidence::new("B_omega < 0", act.b_omega.as_f64(), 0.0);
        let g = Evidence::new("G < 0", inv.g, 0.0);
        if a.strictly_less() && b.lhs < 0.0 && g.lhs < 0.0 {
            label = Label::KMinusUnstable;
        }
        evidence.extend([a, b, g]);
    }
    let h = Evidence::new("H < 0", inv.h, 0.0);
    let negative = h.lhs < 0.0;
    evidence.push(h);
    if label == Label::Unknown && negative {
        label = Label::BlowupOrGrowup;
    }
    if let (Some(sigma), true) = (p.sigma(), is_gn_state(gs)) {
        let inv_gs = to_f64(&gs.invariants());
        let Scaled { h, k } = scaled_pair(&inv, &inv_gs, sigma);
        if label == Label::Unknown && inv.h >= 0.0 && h.strictly_less() && k.strictly_greater() {
            label = Label::BlowupOrGrowup;
        }
        evidence.push(h);
        evidence.push(k);
    }
    Ok(Verdict { label, evidence, params: *p })
}

/// Global check first; when it does not settle the state, the blow-up check.
pub fn classify<T: Real>(
    state0: &FieldPair<T>,
    gs: &GroundStateResult<T>,
    p: &PhysParams,
    wp: Option<f64>,
) -> Result<Verdict> {
    let global = global_threshold_check(state0, gs, p)?;
    if global.label != Label::Unknown {
        return Ok(global);
    }
    let mut blow = blowup_threshold_check(state0, gs, p, wp)?;
    if blow.label == Label::Unknown {
        let mut evidence = global.evidence;
        evidence.append(&mut blow.evidence);
        blow.evidence = evidence;
    }
    Ok(blow)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilityCriterion {
    /// `None` when the criterion is not evaluated.
    pub stable_expected: Option<bool>,
    pub reason: String,
}

pub fn stability_criterion(p: &PhysParams) -> StabilityCriterion {
    if p.gamma != 0.0 {
        return StabilityCriterion {
            stable_expected: None,
            reason: "L''(omega) sign not evaluated".to_string(),
        };
    }
    let s = p.d_plus_2alpha();
    let stable = s < 4.0;
    StabilityCriterion {
        stable_expected: Some(stable),
        reason: format!("gamma = 0 and d + 2 alpha = {s} {} 4", if stable { "<" } else { ">=" }),
    }
}
