//! Numerical laboratory for the two-component quadratic Schrödinger system with an
//! inhomogeneous `|x|^{-alpha}` coupling:
//!
//! ```text
//! i u_t + ½ Δu + |x|^{-α} conj(u) v = 0
//! i v_t + κ/2 Δv − γ v + ½ |x|^{-α} u² = 0
//! ```
//!
//! The numerics are generic over [`Real`] (`f32` or `f64`); the aliases at the crate root fix
//! the scalar to `f64`.

pub mod classify;
pub mod cutoff;
pub mod error;
pub mod evolution;
pub mod field;
pub mod functionals;
pub mod grid;
pub mod ground_state;
pub mod params;
pub mod profile;
pub mod real;
pub mod tridiag;

pub use cutoff::{make_cutoff, CutoffKind, CutoffSample};
pub use error::{Error, Result};
pub use grid::{build_grid, singular_weight, GridKind, GridSpec};
pub use params::{check_gate, PhysParams};
pub use real::Real;

pub type Grid = grid::Grid<f64>;
pub type FieldPair = field::FieldPair<f64>;
pub type CutoffFn = cutoff::CutoffFn<f64>;
pub type InvariantSet = functionals::InvariantSet<f64>;
pub type ActionSet = functionals::ActionSet<f64>;
pub type GroundStateResult = ground_state::GroundStateResult<f64>;
pub type Trajectory = evolution::Trajectory<f64>;
