//! Potential function of the MN vector admissible system and the fixed-point
//! structure it is evaluated on.
//!
//! Fixed points of `x <- f(g(x); eps)` other than zero come in two kinds:
//!
//! - the trivial point `(1, phi(1; eps))`, present for every `eps`, where the
//!   potential equals `1 - d_r/d_l - Phi(1; eps) = I(eps) - d_r/d_l`;
//! - non-trivial points on a curve parameterized by `x1 ∈ (0, 1)`: the first
//!   fixed-point equation gives `x2[x1]` in closed form, and the second fixes
//!   the channel parameter `eps[x1]` through `phi(psi[x1]; eps) = phi[x1]`.
//!
//! `x2[x1]`, `psi[x1]` and `phi[x1]` take no channel argument; only `eps[x1]`
//! and the potential value depend on the channel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::de::{g_raw, potential_f, potential_g, scaling, DeState, DegreeProfile};
use crate::error::{check_unit, Error, Result};
use crate::numeric::{bisect, illinois, ipow};

/// Default `x1` resolution for threshold computations.
pub const DEFAULT_THRESHOLD_GRID: usize = 4096;
/// Default `x1` resolution for curve output.
pub const DEFAULT_CURVE_GRID: usize = 1024;

/// Potential `U(x1, x2; eps)` in expanded form.
///
/// The `x/(1-x)` factors of the textbook expression are multiplied through, so
/// the value is finite on the closed square.
pub fn potential_u(d: &DegreeProfile, model: &ChannelModel, x1: f64, x2: f64, eps: f64) -> Result<f64> {
    check_unit("x1", x1)?;
    check_unit("x2", x2)?;
    check_unit("eps", eps)?;
    Ok(u_raw(d, model, x1, x2, eps))
}

pub(crate) fn u_raw(d: &DegreeProfile, model: &ChannelModel, x1: f64, x2: f64, eps: f64) -> f64 {
    let (dl, dr, dg) = (d.dl(), d.dr(), d.dg());
    let a = 1.0 - x1;
    let b = 1.0 - x2;
    let a_r1 = ipow(a, dr - 1);
    let b_g1 = ipow(b, dg - 1);
    let a_r = a_r1 * a;
    let b_g = b_g1 * b;
    let g1 = 1.0 - a_r1 * b_g;
    let g2 = 1.0 - a_r * b_g1;
    let edge_term = a_r * b_g + dr as f64 * x1 * a_r1 * b_g + dg as f64 * x2 * a_r * b_g1;
    1.0 - model.eval_phi_integral(ipow(g2, dg).clamp(0.0, 1.0), eps) - d.design_rate() * ipow(g1, dl) - edge_term
}

/// Potential from its definition `g(x) D x^T - G(x) - F(g(x); eps)`.
pub fn potential_u_general(d: &DegreeProfile, model: &ChannelModel, x1: f64, x2: f64, eps: f64) -> Result<f64> {
    check_unit("x1", x1)?;
    check_unit("x2", x2)?;
    check_unit("eps", eps)?;
    let x = DeState { x1, x2 };
    let g = g_raw(d, x);
    let [d1, d2] = scaling(d);
    Ok(g.x1 * d1 * x1 + g.x2 * d2 * x2 - potential_g(d, x) - potential_f(d, model, g, eps))
}

/// Potential at the trivial fixed point `(1, phi(1; eps))`.
pub fn trivial_u(d: &DegreeProfile, model: &ChannelModel, eps: f64) -> Result<f64> {
    check_unit("eps", eps)?;
    Ok(trivial_raw(d, model, eps))
}

fn trivial_raw(d: &DegreeProfile, model: &ChannelModel, eps: f64) -> f64 {
    1.0 - d.design_rate() - model.eval_phi_integral(1.0, eps)
}

fn check_open(x1: f64) -> Result<()> {
    if x1 > 0.0 && x1 < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain { name: "x1", value: x1 })
    }
}

/// `x2[x1]`, the solution of the first fixed-point equation. May be negative,
/// in which case `x1` parameterizes no fixed point.
pub fn x2_of_x1(d: &DegreeProfile, x1: f64) -> Result<f64> {
    check_open(x1)?;
    Ok(x2_raw(d, x1))
}

fn x2_raw(d: &DegreeProfile, x1: f64) -> f64 {
    let root = x1.powf(1.0 / (d.dl() - 1) as f64);
    let ratio = (1.0 - root) / ipow(1.0 - x1, d.dr() - 1);
    1.0 - ratio.powf(1.0 / d.dg() as f64)
}

/// `1 - (1-x1)^d_r (1-x2)^(d_g-1)`, i.e. the second component of `g`.
fn g2_raw(d: &DegreeProfile, x1: f64, x2: f64) -> f64 {
    1.0 - ipow(1.0 - x1, d.dr()) * ipow(1.0 - x2, d.dg() - 1)
}

fn valid_x2(d: &DegreeProfile, x1: f64) -> Result<f64> {
    check_open(x1)?;
    let x2 = x2_raw(d, x1);
    if (0.0..=1.0).contains(&x2) {
        Ok(x2)
    } else {
        Err(Error::ExcludedPoint { x1, x2 })
    }
}

/// `psi[x1] = g2(x1, x2[x1])^d_g`, the detector input erasure probability.
pub fn psi_of_x1(d: &DegreeProfile, x1: f64) -> Result<f64> {
    let x2 = valid_x2(d, x1)?;
    Ok(ipow(g2_raw(d, x1, x2), d.dg()))
}

/// `phi[x1] = x2[x1] / g2^(d_g-1)`, the detector output the fixed point needs.
pub fn phi_bracket_of_x1(d: &DegreeProfile, x1: f64) -> Result<f64> {
    let x2 = valid_x2(d, x1)?;
    Ok(x2 / ipow(g2_raw(d, x1, x2), d.dg() - 1))
}

/// `eps[x1]`: the channel parameter at which `(x1, x2[x1])` is a fixed point,
/// or `None` when `phi[x1]` is outside `[phi(psi; 0), phi(psi; 1)]`.
pub fn eps_of_x1(d: &DegreeProfile, model: &ChannelModel, x1: f64) -> Result<Option<f64>> {
    let x2 = valid_x2(d, x1)?;
    let g2 = g2_raw(d, x1, x2);
    Ok(solve_eps(model, ipow(g2, d.dg()), x2 / ipow(g2, d.dg() - 1)))
}

fn solve_eps(model: &ChannelModel, psi: f64, target: f64) -> Option<f64> {
    let psi = psi.clamp(0.0, 1.0);
    let lo = model.eval_phi(psi, 0.0);
    let hi = model.eval_phi(psi, 1.0);
    if !(target >= lo && target <= hi) {
        return None;
    }
    if target == lo {
        return Some(0.0);
    }
    if target == hi {
        return Some(1.0);
    }
    // Bisect to full f64 resolution.
    Some(bisect(|e| model.eval_phi(psi, e) - target, 0.0, 1.0, 0.0))
}

/// One point of the non-trivial fixed-point curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSample {
    pub x1: f64,
    /// `x2[x1]`; outside `[0, 1]` for excluded points.
    pub x2: f64,
    /// `psi[x1]`, evaluated from the formula even for excluded points.
    pub psi: f64,
    pub phi_bracket: f64,
    pub eps: Option<f64>,
    #[serde(rename = "U")]
    pub u: Option<f64>,
    pub valid: bool,
}

/// Evaluates the curve at a single `x1 ∈ (0, 1)`.
pub fn potential_sample(d: &DegreeProfile, model: &ChannelModel, x1: f64) -> Result<PotentialSample> {
    check_open(x1)?;
    Ok(sample_raw(d, model, x1))
}

fn sample_raw(d: &DegreeProfile, model: &ChannelModel, x1: f64) -> PotentialSample {
    let x2 = x2_raw(d, x1);
    let g2 = g2_raw(d, x1, x2);
    let psi = ipow(g2, d.dg());
    let phi_bracket = x2 / ipow(g2, d.dg() - 1);
    let eps = if (0.0..=1.0).contains(&x2) {
        solve_eps(model, psi, phi_bracket)
    } else {
        None
    };
    let u = eps.map(|e| u_raw(d, model, x1, x2, e));
    PotentialSample {
        x1,
        x2,
        psi,
        phi_bracket,
        eps,
        u,
        valid: eps.is_some(),
    }
}

/// Midpoints `(k + 1/2) / n` of a uniform partition of `(0, 1)`.
pub fn x1_grid(n: usize) -> impl Iterator<Item = f64> + Clone {
    (0..n).map(move |k| (k as f64 + 0.5) / n as f64)
}

/// Sweeps `x1` over [`x1_grid`] and evaluates the non-trivial fixed-point
/// curve. Excluded points are kept with `valid = false`.
pub fn potential_curve(d: &DegreeProfile, model: &ChannelModel, grid_size: usize) -> Result<Vec<PotentialSample>> {
    if grid_size < 2 {
        return Err(Error::InvalidArgument(format!("grid_size must be >= 2, got {grid_size}")));
    }
    Ok((0..grid_size)
        .into_par_iter()
        .map(|k| sample_raw(d, model, (k as f64 + 0.5) / grid_size as f64))
        .collect())
}

/// Smallest potential over valid samples, with its `x1`.
pub fn nontrivial_minimum(curve: &[PotentialSample]) -> Option<(f64, f64)> {
    curve
        .iter()
        .filter_map(|s| s.u.map(|u| (u, s.x1)))
        .fold(None, |best: Option<(f64, f64)>, (u, x1)| match best {
            Some((bu, _)) if bu <= u => best,
            _ => Some((u, x1)),
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    /// Potential threshold.
    pub eps_star: f64,
    /// SIR limit at the design rate `d_r/d_l`.
    pub eps_sir: f64,
    /// Smallest potential over valid non-trivial samples (`NaN` if none).
    pub min_nontrivial_u: f64,
    /// `x1` attaining `min_nontrivial_u`.
    pub argmin_x1: f64,
    pub grid_size: usize,
}

/// Potential threshold from the trivial point and the sampled non-trivial
/// curve: the smaller of the SIR limit (where the trivial potential changes
/// sign) and the least `eps[x1]` whose fixed point has non-positive potential.
pub fn potential_threshold(d: &DegreeProfile, model: &ChannelModel, grid_size: usize) -> Result<ThresholdReport> {
    if grid_size < 100 {
        return Err(Error::InvalidArgument(format!("grid_size must be >= 100, got {grid_size}")));
    }
    let curve = potential_curve(d, model, grid_size)?;
    threshold_from_curve(d, model, &curve)
}

fn threshold_from_curve(d: &DegreeProfile, model: &ChannelModel, curve: &[PotentialSample]) -> Result<ThresholdReport> {
    let eps_sir = model.sir_limit(d.design_rate())?;
    let nontrivial = curve
        .iter()
        .filter(|s| matches!(s.u, Some(u) if u <= 0.0))
        .filter_map(|s| s.eps)
        .fold(f64::INFINITY, f64::min);
    let (min_u, argmin) = nontrivial_minimum(curve).unwrap_or((f64::NAN, f64::NAN));
    Ok(ThresholdReport {
        eps_star: eps_sir.min(nontrivial),
        eps_sir,
        min_nontrivial_u: min_u,
        argmin_x1: argmin,
        grid_size: curve.len(),
    })
}

/// A non-trivial fixed point located at a prescribed channel parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocatedFixedPoint {
    pub x1: f64,
    pub x2: f64,
    pub u: f64,
}

/// Non-trivial fixed points at `eps`, found where the sampled `eps[x1]` curve
/// crosses `eps` and refined on `x1` to 1e-10.
pub fn fixed_points_at(
    d: &DegreeProfile,
    model: &ChannelModel,
    curve: &[PotentialSample],
    eps: f64,
) -> Vec<LocatedFixedPoint> {
    let mut found = Vec::new();
    for pair in curve.windows(2) {
        let (s0, s1) = (&pair[0], &pair[1]);
        let (Some(e0), Some(e1)) = (s0.eps, s1.eps) else {
            continue;
        };
        let (r0, r1) = (e0 - eps, e1 - eps);
        if r0 * r1 > 0.0 || (r1 == 0.0 && r0 != 0.0) {
            // the crossing at s1 is picked up by the next pair
            continue;
        }
        let x1 = if r0 == 0.0 {
            s0.x1
        } else {
            let lin = |x: f64| e0 + (e1 - e0) * (x - s0.x1) / (s1.x1 - s0.x1);
            illinois(
                |x| {
                    let e = if (0.0..=1.0).contains(&x2_raw(d, x)) {
                        let x2 = x2_raw(d, x);
                        let g2 = g2_raw(d, x, x2);
                        solve_eps(model, ipow(g2, d.dg()), x2 / ipow(g2, d.dg() - 1))
                    } else {
                        None
                    };
                    e.unwrap_or_else(|| lin(x)) - eps
                },
                s0.x1,
                s1.x1,
                1e-10,
            )
        };
        let x2 = x2_raw(d, x1).clamp(0.0, 1.0);
        found.push(LocatedFixedPoint {
            x1,
            x2,
            u: u_raw(d, model, x1, x2, eps),
        });
    }
    found
}

/// Energy gap `max_{eps' ∈ [eps, 1]} min_{x ∈ F(eps')} U(x; eps')` with the
/// fixed-point sets located on an `x1` grid of `grid_size` points and `eps'`
/// ranging over `{eps} ∪ {k / grid_size : k / grid_size >= eps}`.
///
/// Requires `eps` below the potential threshold computed on the same grid.
pub fn energy_gap(d: &DegreeProfile, model: &ChannelModel, eps: f64, grid_size: usize) -> Result<f64> {
    check_unit("eps", eps)?;
    if grid_size < 2 {
        return Err(Error::InvalidArgument(format!("grid_size must be >= 2, got {grid_size}")));
    }
    let curve = potential_curve(d, model, grid_size)?;
    let report = threshold_from_curve(d, model, &curve)?;
    if eps >= report.eps_star {
        return Err(Error::InvalidArgument(format!(
            "energy gap needs eps below the potential threshold {}, got {eps}",
            report.eps_star
        )));
    }
    let inf_at = |e: f64| {
        fixed_points_at(d, model, &curve, e)
            .iter()
            .fold(trivial_raw(d, model, e), |m, p| m.min(p.u))
    };
    let start = (eps * grid_size as f64).ceil() as usize;
    let grid_max = (start..=grid_size)
        .into_par_iter()
        .map(|k| inf_at(k as f64 / grid_size as f64))
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(grid_max.max(inf_at(eps)))
}

/// Sign pattern of the trivial-point potential around the SIR limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrivialSignReport {
    pub eps_sir: f64,
    /// `|U(1, phi(1; eps_sir); eps_sir)|`.
    pub residual_at_root: f64,
    /// Smallest `U` over probe points below the root (should be positive).
    pub min_below: f64,
    /// Largest `U` over probe points above the root (should be negative).
    pub max_above: f64,
}

impl TrivialSignReport {
    pub fn holds(&self, root_tol: f64) -> bool {
        self.residual_at_root < root_tol && self.min_below > 0.0 && self.max_above < 0.0
    }
}

/// Probes the trivial potential on `n` points either side of the SIR limit at
/// the design rate, staying `margin` away from it.
pub fn trivial_sign_report(d: &DegreeProfile, model: &ChannelModel, n: usize, margin: f64) -> Result<TrivialSignReport> {
    let eps_sir = model.sir_limit(d.design_rate())?;
    let n = n.max(1);
    let below_hi = (eps_sir - margin).max(0.0);
    let above_lo = (eps_sir + margin).min(1.0);
    let at = |lo: f64, hi: f64, k: usize| lo + (hi - lo) * k as f64 / n as f64;
    let min_below = (0..=n)
        .map(|k| trivial_raw(d, model, at(0.0, below_hi, k)))
        .fold(f64::INFINITY, f64::min);
    let max_above = (0..=n)
        .map(|k| trivial_raw(d, model, at(above_lo, 1.0, k)))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(TrivialSignReport {
        eps_sir,
        residual_at_root: trivial_raw(d, model, eps_sir).abs(),
        min_below,
        max_above,
    })
}

/// Pointwise comparison of a channel's non-trivial potential curve with the
/// BEC curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    /// `min_x1 (U_model - U_BEC)` over points valid for both.
    pub min_difference: f64,
    pub argmin_x1: f64,
    /// `max_x1 |U_model - U_BEC|`.
    pub max_abs_difference: f64,
    pub compared: usize,
}

pub fn domination_report(d: &DegreeProfile, model: &ChannelModel, grid_size: usize) -> Result<DominationReport> {
    let own = potential_curve(d, model, grid_size)?;
    let bec = potential_curve(d, &ChannelModel::bec(), grid_size)?;
    let mut report = DominationReport {
        min_difference: f64::INFINITY,
        argmin_x1: f64::NAN,
        max_abs_difference: 0.0,
        compared: 0,
    };
    for (a, b) in own.iter().zip(&bec) {
        if let (Some(ua), Some(ub)) = (a.u, b.u) {
            let diff = ua - ub;
            if diff < report.min_difference {
                report.min_difference = diff;
                report.argmin_x1 = a.x1;
            }
            report.max_abs_difference = report.max_abs_difference.max(diff.abs());
            report.compared += 1;
        }
    }
    Ok(report)
}
