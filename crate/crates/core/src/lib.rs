//! Isentropic Euler flow on [0, 1] with reflecting walls and a
//! time-periodic body force: a staggered Lax-Friedrichs scheme with
//! invariant-region bookkeeping, and a fixed-point search for periodic
//! solutions.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod gas;
pub mod io;
pub mod mesh;
pub mod periodic;
pub mod quad;
pub mod riemann;
pub mod scheme;

pub use diagnostics::{Diagnostics, Monitor};
pub use error::{EulerError, Result};
pub use exec::Execution;
pub use gas::{GasParams, GasState, RiemannPair, SchemeConstants};
pub use mesh::{build_grid, ForcingField, GridSpec, InitialData, StaggeredProfile};
pub use periodic::{find_fixed_point, FixedPointReport, ShiftedState};
pub use scheme::{step, Mode, StepperConfig};
