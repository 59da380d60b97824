//! Density evolution of `(d_l, d_r, d_g)` MacKay-Neal codes.
//!
//! The MN ensemble has two edge types: type-1 edges attach punctured bits of
//! degree `d_l`, type-2 edges attach transmitted bits of degree `d_g`; every
//! check has `d_r` type-1 and `d_g` type-2 sockets. With `x = (x1, x2)` the
//! bit-to-check erasure probabilities, one decoding round is `x <- f(g(x); eps)`:
//!
//! ```text
//! g(x)     = (1 - (1-x1)^(d_r-1) (1-x2)^d_g,  1 - (1-x1)^d_r (1-x2)^(d_g-1))
//! f(y;eps) = (y1^(d_l-1),  phi(y2^d_g; eps) * y2^(d_g-1))
//! ```
//!
//! The pair `(f, g)` is a vector admissible system with potentials
//! [`potential_f`], [`potential_g`] and scaling `D = diag(d_r, d_g)`.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::error::{check_unit, Error, Result};
use crate::numeric::ipow;

/// Node degrees of the MN ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DegreeProfile {
    dl: u32,
    dr: u32,
    dg: u32,
}

impl DegreeProfile {
    /// Validates `d_l, d_r, d_g >= 2` and `d_l > d_r`.
    pub fn new(dl: u32, dr: u32, dg: u32) -> Result<Self> {
        if dl < 2 || dr < 2 || dg < 2 {
            return Err(Error::InvalidDegrees(format!(
                "all degrees must be at least 2, got ({dl}, {dr}, {dg})"
            )));
        }
        if dl <= dr {
            return Err(Error::InvalidDegrees(format!(
                "d_l > d_r is required (achievability holds for any d_l > d_r), got d_l = {dl}, d_r = {dr}"
            )));
        }
        Ok(Self { dl, dr, dg })
    }

    pub fn dl(&self) -> u32 {
        self.dl
    }

    pub fn dr(&self) -> u32 {
        self.dr
    }

    pub fn dg(&self) -> u32 {
        self.dg
    }

    /// `d_r / d_l`, the rate of the uncoupled ensemble.
    pub fn design_rate(&self) -> f64 {
        self.dr as f64 / self.dl as f64
    }

    /// `(d_r, d_g)` is `(2, 2)` or `(3, 3)`, the families for which the
    /// potential threshold is known to equal the SIR limit.
    pub fn in_proven_family(&self) -> bool {
        matches!((self.dr, self.dg), (2, 2) | (3, 3))
    }
}

impl std::fmt::Display for DegreeProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.dl, self.dr, self.dg)
    }
}

/// Erasure probabilities on type-1 and type-2 edges.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DeState {
    pub x1: f64,
    pub x2: f64,
}

impl DeState {
    pub const ZERO: DeState = DeState { x1: 0.0, x2: 0.0 };
    pub const ONE: DeState = DeState { x1: 1.0, x2: 1.0 };

    pub fn new(x1: f64, x2: f64) -> Result<Self> {
        check_unit("x1", x1)?;
        check_unit("x2", x2)?;
        Ok(Self { x1, x2 })
    }

    pub fn sup_norm(&self) -> f64 {
        self.x1.abs().max(self.x2.abs())
    }

    pub fn dist(&self, other: &DeState) -> f64 {
        (self.x1 - other.x1).abs().max((self.x2 - other.x2).abs())
    }

    /// Componentwise `self ⪯ other`.
    pub fn precedes(&self, other: &DeState) -> bool {
        self.x1 <= other.x1 && self.x2 <= other.x2
    }

    pub(crate) fn add_scaled(&mut self, other: DeState, scale: f64) {
        self.x1 += scale * other.x1;
        self.x2 += scale * other.x2;
    }
}

fn check_state(s: DeState) -> Result<()> {
    check_unit("x1", s.x1)?;
    check_unit("x2", s.x2)?;
    Ok(())
}

/// Check-node map `g`.
pub fn g_map(d: &DegreeProfile, s: DeState) -> Result<DeState> {
    check_state(s)?;
    Ok(g_raw(d, s))
}

/// Bit-node map `f` (includes the channel through `phi`).
pub fn f_map(d: &DegreeProfile, model: &ChannelModel, s: DeState, eps: f64) -> Result<DeState> {
    check_state(s)?;
    check_unit("eps", eps)?;
    Ok(f_raw(d, model, s, eps))
}

/// One round `f(g(s); eps)`.
pub fn de_step(d: &DegreeProfile, model: &ChannelModel, s: DeState, eps: f64) -> Result<DeState> {
    check_state(s)?;
    check_unit("eps", eps)?;
    Ok(f_raw(d, model, g_raw(d, s), eps))
}

#[inline]
pub(crate) fn g_raw(d: &DegreeProfile, s: DeState) -> DeState {
    let a = 1.0 - s.x1;
    let b = 1.0 - s.x2;
    DeState {
        x1: 1.0 - ipow(a, d.dr - 1) * ipow(b, d.dg),
        x2: 1.0 - ipow(a, d.dr) * ipow(b, d.dg - 1),
    }
}

#[inline]
pub(crate) fn f_raw(d: &DegreeProfile, model: &ChannelModel, y: DeState, eps: f64) -> DeState {
    let tail = ipow(y.x2, d.dg - 1);
    DeState {
        x1: ipow(y.x1, d.dl - 1),
        x2: model.eval_phi((tail * y.x2).clamp(0.0, 1.0), eps) * tail,
    }
}

/// Iteration limits for uncoupled DE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for DeOptions {
    fn default() -> Self {
        Self {
            max_iter: 100_000,
            tol: 1e-12,
        }
    }
}

impl DeOptions {
    fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeRun {
    pub state: DeState,
    pub iterations: usize,
    pub converged_to_zero: bool,
}

/// Runs uncoupled DE from `x = (1, 1)` until successive iterates differ by
/// less than `tol` (sup norm) or `max_iter` rounds have been made.
pub fn de_run(d: &DegreeProfile, model: &ChannelModel, eps: f64, opts: DeOptions) -> Result<DeRun> {
    de_run_with(d, model, eps, opts, |_, _| {})
}

/// [`de_run`] that reports every iterate, starting with `(0, (1, 1))`.
pub fn de_run_with<O>(
    d: &DegreeProfile,
    model: &ChannelModel,
    eps: f64,
    opts: DeOptions,
    mut observer: O,
) -> Result<DeRun>
where
    O: FnMut(usize, DeState),
{
    check_unit("eps", eps)?;
    opts.validate()?;
    let mut x = DeState::ONE;
    observer(0, x);
    let mut iterations = 0;
    for t in 1..=opts.max_iter {
        let next = f_raw(d, model, g_raw(d, x), eps);
        let delta = next.dist(&x);
        x = next;
        iterations = t;
        observer(t, x);
        if delta < opts.tol {
            break;
        }
    }
    Ok(DeRun {
        state: x,
        iterations,
        converged_to_zero: x.sup_norm() < opts.tol,
    })
}

/// Residuals of the two fixed-point equations
/// `x1 = g1(x)^(d_l-1)` and `x2 = phi(g2(x)^d_g; eps) g2(x)^(d_g-1)`.
pub fn fixed_point_residual(d: &DegreeProfile, model: &ChannelModel, s: DeState, eps: f64) -> (f64, f64) {
    let next = f_raw(d, model, g_raw(d, s), eps);
    ((next.x1 - s.x1).abs(), (next.x2 - s.x2).abs())
}

/// Regular `(d_l, d_r)` LDPC density evolution over a GEC:
/// `phi((1-(1-x)^(d_r-1))^d_l; eps) * (1-(1-x)^(d_r-1))^(d_l-1)`.
pub fn regular_ldpc_de_step(dl: u32, dr: u32, model: &ChannelModel, x: f64, eps: f64) -> Result<f64> {
    if dl < 2 || dr < 2 {
        return Err(Error::InvalidDegrees(format!("regular ({dl}, {dr}) needs degrees >= 2")));
    }
    check_unit("x", x)?;
    check_unit("eps", eps)?;
    let c = 1.0 - ipow(1.0 - x, dr - 1);
    let tail = ipow(c, dl - 1);
    Ok(model.eval_phi(tail * c, eps) * tail)
}

/// Bit-side potential `F(x; eps) = (d_r/d_l) x1^d_l + Phi(x2^d_g; eps)`.
pub fn potential_f(d: &DegreeProfile, model: &ChannelModel, s: DeState, eps: f64) -> f64 {
    d.design_rate() * ipow(s.x1, d.dl) + model.eval_phi_integral(ipow(s.x2, d.dg), eps)
}

/// Check-side potential `G(x) = d_r x1 + d_g x2 + (1-x1)^d_r (1-x2)^d_g - 1`.
pub fn potential_g(d: &DegreeProfile, s: DeState) -> f64 {
    d.dr as f64 * s.x1 + d.dg as f64 * s.x2 + ipow(1.0 - s.x1, d.dr) * ipow(1.0 - s.x2, d.dg) - 1.0
}

/// Diagonal of the scaling matrix `D`.
pub fn scaling(d: &DegreeProfile) -> [f64; 2] {
    [d.dr as f64, d.dg as f64]
}
