//! Generalized erasure channels.
//!
//! A GEC is described to the decoder analysis by the transfer function of its
//! APP detector: `phi(x; eps)` is the erasure probability of detector-to-decoder
//! messages when decoder-to-detector messages are erased with probability `x`.
//! `Phi(x; eps)` is the definite integral of `phi` from 0 to `x`, and the
//! symmetric information rate is `I(eps) = 1 - Phi(1; eps)`.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};
use crate::numeric::bisect;
use crate::quadrature;

/// Bracket width used when inverting `I(eps) = R`.
pub const SIR_LIMIT_TOL: f64 = 1e-12;
/// Smallest accepted `x` resolution of a tabulated channel.
pub const MIN_X_GRID: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    BuiltinBec,
    BuiltinDec,
    BuiltinPr2,
    Custom,
}

/// An immutable channel model. Cloning is cheap; tabulated data is shared.
#[derive(Clone)]
pub struct ChannelModel {
    name: String,
    body: Body,
}

#[derive(Clone)]
enum Body {
    Bec,
    Dec,
    Pr2,
    Custom(Arc<Tabulated>),
}

impl fmt::Debug for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChannelModel")
            .field("name", &self.name)
            .field("kind", &self.kind())
            .finish()
    }
}

impl ChannelModel {
    /// Binary erasure channel: `phi = eps`.
    pub fn bec() -> Self {
        Self { name: "bec".into(), body: Body::Bec }
    }

    /// Dicode (1 - D) erasure channel.
    pub fn dec() -> Self {
        Self { name: "dec".into(), body: Body::Dec }
    }

    /// Second-order partial response (1 + 2D + D^2) erasure channel.
    pub fn pr2() -> Self {
        Self { name: "pr2".into(), body: Body::Pr2 }
    }

    pub fn builtins() -> [ChannelModel; 3] {
        [Self::bec(), Self::dec(), Self::pr2()]
    }

    /// Looks up a built-in channel by (case-insensitive) name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "bec" => Some(Self::bec()),
            "dec" | "dicode" => Some(Self::dec()),
            "pr2" => Some(Self::pr2()),
            _ => None,
        }
    }

    /// Builds a tabulated channel, rejecting tables that violate the channel
    /// invariants.
    pub fn custom(spec: CustomChannelSpec) -> Result<Self> {
        let table = Tabulated::new(&spec)?;
        Ok(Self {
            name: spec.name,
            body: Body::Custom(Arc::new(table)),
        })
    }

    /// Loads and validates a tabulated channel from a JSON or TOML file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::custom(CustomChannelSpec::load(path)?)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ChannelKind {
        match self.body {
            Body::Bec => ChannelKind::BuiltinBec,
            Body::Dec => ChannelKind::BuiltinDec,
            Body::Pr2 => ChannelKind::BuiltinPr2,
            Body::Custom(_) => ChannelKind::Custom,
        }
    }

    /// Whether `Phi` is evaluated from a closed form rather than by quadrature.
    pub fn has_closed_form_integral(&self) -> bool {
        !matches!(self.body, Body::Custom(_))
    }

    /// Detector transfer function `phi(x; eps)`.
    pub fn phi(&self, x: f64, eps: f64) -> Result<f64> {
        check_unit("x", x)?;
        check_unit("eps", eps)?;
        Ok(self.eval_phi(x, eps))
    }

    /// `Phi(x; eps) = ∫_0^x phi(t; eps) dt`.
    pub fn phi_integral(&self, x: f64, eps: f64) -> Result<f64> {
        check_unit("x", x)?;
        check_unit("eps", eps)?;
        Ok(self.eval_phi_integral(x, eps))
    }

    /// `Phi(x; eps)` by adaptive quadrature regardless of closed-form
    /// availability.
    pub fn phi_integral_numeric(&self, x: f64, eps: f64) -> Result<f64> {
        check_unit("x", x)?;
        check_unit("eps", eps)?;
        Ok(self.quadrature_integral(x, eps))
    }

    /// Symmetric information rate `I(eps) = 1 - Phi(1; eps)`.
    pub fn sir(&self, eps: f64) -> Result<f64> {
        check_unit("eps", eps)?;
        Ok(self.eval_sir(eps))
    }

    /// SIR limit: the unique `eps` with `I(eps) = rate`.
    pub fn sir_limit(&self, rate: f64) -> Result<f64> {
        if !(rate > 0.0 && rate < 1.0) {
            return Err(Error::InvalidArgument(format!("rate {rate} is not in (0, 1)")));
        }
        let i0 = self.eval_sir(0.0);
        let i1 = self.eval_sir(1.0);
        if rate > i0 || rate < i1 {
            return Err(Error::NoSolution(format!(
                "rate {rate} outside [I(1), I(0)] = [{i1}, {i0}] for channel '{}'",
                self.name
            )));
        }
        Ok(bisect(|e| self.eval_sir(e) - rate, 0.0, 1.0, SIR_LIMIT_TOL))
    }

    /// Checks on an `n x n` grid that `phi` stays in `[0, 1]`, is
    /// non-decreasing in `x` and strictly increasing in `eps` for `x > 0`.
    /// Returns the first offending `(x, eps)` pair on failure.
    pub fn check_monotone(&self, n: usize) -> std::result::Result<(), (f64, f64)> {
        let n = n.max(2);
        let at = |k: usize| k as f64 / (n - 1) as f64;
        for ie in 0..n {
            let eps = at(ie);
            let mut prev = f64::NEG_INFINITY;
            for ix in 0..n {
                let x = at(ix);
                let v = self.eval_phi(x, eps);
                if !(0.0..=1.0).contains(&v) || v < prev {
                    return Err((x, eps));
                }
                if ie > 0 && ix > 0 && v <= self.eval_phi(x, at(ie - 1)) {
                    return Err((x, eps));
                }
                prev = v;
            }
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn eval_phi(&self, x: f64, eps: f64) -> f64 {
        match &self.body {
            Body::Bec => eps,
            Body::Dec => {
                let den = 2.0 - x * (1.0 - eps);
                4.0 * eps * eps / (den * den)
            }
            Body::Pr2 => {
                let q = 1.0 - eps;
                let num = 4.0 * eps * eps * eps * (4.0 - 4.0 * q * x + q * x * x);
                let den = pr2_den(x, eps);
                num / (den * den)
            }
            Body::Custom(t) => t.eval(x, eps),
        }
    }

    pub(crate) fn eval_phi_integral(&self, x: f64, eps: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        match &self.body {
            Body::Bec => eps * x,
            // Definite integral from 0; equals 4e²/((1-e)(2-(1-e)x)) - 2e²/(1-e)
            // with the (1 - e) factor cancelled, so it is regular at e = 1.
            Body::Dec => 2.0 * eps * eps * x / (2.0 - (1.0 - eps) * x),
            // Equals 4e(1/2 - (2-x)/D) with the leading cancellation removed.
            Body::Pr2 => 2.0 * eps * eps * eps * x * (2.0 - (1.0 - eps) * x) / pr2_den(x, eps),
            Body::Custom(_) => self.quadrature_integral(x, eps),
        }
    }

    fn quadrature_integral(&self, x: f64, eps: f64) -> f64 {
        quadrature::integrate(
            |t| self.eval_phi(t, eps),
            0.0,
            x,
            quadrature::DEFAULT_TOL,
            quadrature::MAX_DEPTH,
        )
    }

    #[inline]
    pub(crate) fn eval_sir(&self, eps: f64) -> f64 {
        1.0 - self.eval_phi_integral(1.0, eps)
    }
}

#[inline]
fn pr2_den(x: f64, eps: f64) -> f64 {
    4.0 - 2.0 * (1.0 - eps * eps) * x - (1.0 - eps) * eps * eps * x * x
}

/// On-disk description of a tabulated channel.
///
/// `phi_tables[e][k]` is `phi(k / (x_grid_size - 1); eps_grid[e])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomChannelSpec {
    pub name: String,
    pub eps_grid: Vec<f64>,
    pub x_grid_size: usize,
    pub phi_tables: Vec<Vec<f64>>,
}

impl CustomChannelSpec {
    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("invalid JSON: {e}")))
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(format!("invalid TOML: {e}")))
    }

    /// Reads a spec, choosing the parser from the file extension (`.json` or
    /// `.toml`); other extensions try JSON first, then TOML.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text),
            Some("toml") => Self::from_toml_str(&text),
            _ => Self::from_json_str(&text).or_else(|_| Self::from_toml_str(&text)),
        }
    }

    /// Tabulates an existing model on the given grids.
    pub fn sample(name: &str, model: &ChannelModel, eps_grid: Vec<f64>, x_grid_size: usize) -> Self {
        let step = 1.0 / (x_grid_size.max(2) - 1) as f64;
        let phi_tables = eps_grid
            .iter()
            .map(|&e| (0..x_grid_size).map(|k| model.eval_phi(k as f64 * step, e)).collect())
            .collect();
        Self {
            name: name.to_string(),
            eps_grid,
            x_grid_size,
            phi_tables,
        }
    }
}

/// Validated tables with bilinear interpolation.
struct Tabulated {
    eps_grid: Vec<f64>,
    x_steps: f64,
    rows: Vec<Vec<f64>>,
}

impl Tabulated {
    fn new(spec: &CustomChannelSpec) -> Result<Self> {
        let cfg = |msg: String| Err(Error::Config(msg));
        if spec.x_grid_size < MIN_X_GRID {
            return cfg(format!("x_grid_size {} < {MIN_X_GRID}", spec.x_grid_size));
        }
        let grid = &spec.eps_grid;
        if grid.len() < 2 {
            return cfg("eps_grid needs at least two entries".into());
        }
        if grid[0] != 0.0 || grid[grid.len() - 1] != 1.0 {
            return cfg("eps_grid must start at 0 and end at 1".into());
        }
        if let Some(i) = grid.windows(2).position(|w| w[1].is_nan() || w[1] <= w[0]) {
            return cfg(format!("eps_grid is not strictly increasing at index {}", i + 1));
        }
        if spec.phi_tables.len() != grid.len() {
            return cfg(format!(
                "phi_tables has {} rows, eps_grid has {} entries",
                spec.phi_tables.len(),
                grid.len()
            ));
        }
        for (row, values) in spec.phi_tables.iter().enumerate() {
            if values.len() != spec.x_grid_size {
                return cfg(format!(
                    "phi_tables row {row} has {} entries, expected {}",
                    values.len(),
                    spec.x_grid_size
                ));
            }
        }
        let bad = |row, col, reason: &str| {
            Err(Error::InvalidTable {
                row,
                col,
                reason: reason.to_string(),
            })
        };
        for (row, values) in spec.phi_tables.iter().enumerate() {
            for (col, &v) in values.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return bad(row, col, "value outside [0, 1]");
                }
                if col > 0 && v < values[col - 1] {
                    return bad(row, col, "decreasing along x");
                }
                if row > 0 && col > 0 && v <= spec.phi_tables[row - 1][col] {
                    return bad(row, col, "not strictly increasing along eps");
                }
            }
        }
        Ok(Self {
            eps_grid: grid.clone(),
            x_steps: (spec.x_grid_size - 1) as f64,
            rows: spec.phi_tables.clone(),
        })
    }

    fn eval(&self, x: f64, eps: f64) -> f64 {
        let n = self.rows[0].len();
        let pos = (x.clamp(0.0, 1.0) * self.x_steps).max(0.0);
        let k = (pos.floor() as usize).min(n - 2);
        let t = pos - k as f64;

        let m = self.eps_grid.len();
        let e = self
            .eps_grid
            .partition_point(|&g| g <= eps)
            .saturating_sub(1)
            .min(m - 2);
        let (e0, e1) = (self.eps_grid[e], self.eps_grid[e + 1]);
        let u = ((eps - e0) / (e1 - e0)).clamp(0.0, 1.0);

        let lo = &self.rows[e];
        let hi = &self.rows[e + 1];
        let a = lo[k] + t * (lo[k + 1] - lo[k]);
        let b = hi[k] + t * (hi[k + 1] - hi[k]);
        a + u * (b - a)
    }
}
