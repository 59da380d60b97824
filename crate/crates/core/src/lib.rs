//! Numerical analysis of spatially-coupled MacKay-Neal (SC-MN) codes over
//! generalized erasure channels (GECs).
//!
//! A GEC enters the analysis only through the scalar transfer function of its
//! a-posteriori detector, `phi(x; eps)`, and its integral `Phi(x; eps)`. From
//! these the crate computes:
//!
//! - [`channel`]: built-in BEC / dicode / PR2 channels, tabulated custom
//!   channels, symmetric information rate and its inverse (the SIR limit).
//! - [`de`]: the `(d_l, d_r, d_g)` MacKay-Neal density evolution `x <- f(g(x); eps)`
//!   and the regular LDPC baseline recursion.
//! - [`coupled`]: the spatially-coupled recursion, the SC-MN design rate and
//!   BP-threshold search.
//! - [`potential`]: the potential function, the non-trivial fixed-point curve
//!   parameterized by `x1`, the potential threshold and the energy gap.

pub mod channel;
pub mod coupled;
pub mod de;
mod error;
pub mod numeric;
pub mod potential;
pub mod quadrature;

pub use channel::{ChannelKind, ChannelModel, CustomChannelSpec};
pub use coupled::{CouplingConfig, DeProfile, ScOptions};
pub use de::{DeOptions, DeState, DegreeProfile};
pub use error::{Error, Result};
pub use potential::{PotentialSample, ThresholdReport};
