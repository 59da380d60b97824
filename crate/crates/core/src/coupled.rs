//! Spatially-coupled MN density evolution and BP thresholds.
//!
//! Sections are indexed by `i`. The coupled update is
//!
//! ```text
//! x_i <- (1/w) Σ_{k<w} f( (1/w) Σ_{j<w} g(x_{i+j-k}); eps_{i-k} )
//! ```
//!
//! where the inner average is what a bit at section `i-k` sees from the `w`
//! check sections it is wired to, and the outer average collects the bits
//! feeding section `i`. Bits outside `[0, L-1]` are shortened: they are known
//! to the decoder, so their terms contribute the all-zero message. As a result
//! sections `[0, L+w-2]` carry mass, and the profile is mirror-symmetric about
//! the centre of that range.
//!
//! A profile stores `w-1` halo sections on each side of the `L` interior
//! sections so every read of the inner loop stays in bounds.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::de::{self, f_raw, g_raw, DeOptions, DeState, DegreeProfile};
use crate::error::{check_unit, Error, Result};
use crate::numeric::ipow;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingConfig {
    /// Chain length `L`.
    pub chain_length: usize,
    /// Coupling width `w`.
    pub width: usize,
    /// Channel parameter on sections `0..L`.
    pub eps: f64,
}

impl CouplingConfig {
    pub fn new(chain_length: usize, width: usize, eps: f64) -> Result<Self> {
        let cfg = Self {
            chain_length,
            width,
            eps,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.chain_length == 0 || self.width == 0 {
            return Err(Error::InvalidArgument(format!(
                "chain length and coupling width must be >= 1, got L = {}, w = {}",
                self.chain_length, self.width
            )));
        }
        check_unit("eps", self.eps)?;
        Ok(())
    }

    /// Channel parameter of section `i`; zero outside `[0, L-1]`.
    pub fn eps_at(&self, i: isize) -> f64 {
        if i >= 0 && (i as usize) < self.chain_length {
            self.eps
        } else {
            0.0
        }
    }

    fn halo(&self) -> usize {
        self.width - 1
    }
}

/// Per-section DE state over `i ∈ [-(w-1), L-1+(w-1)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeProfile {
    chain_length: usize,
    width: usize,
    states: Vec<DeState>,
}

impl DeProfile {
    /// All-zero profile.
    pub fn zeros(chain_length: usize, width: usize) -> Self {
        Self {
            chain_length,
            width,
            states: vec![DeState::ZERO; chain_length + 2 * (width - 1)],
        }
    }

    /// Starting profile of [`sc_de_run`]: every section that receives edges
    /// from unshortened bits (`i ∈ [0, L+w-2]`) is fully erased.
    pub fn initial(chain_length: usize, width: usize) -> Self {
        let mut p = Self::zeros(chain_length, width);
        let halo = width - 1;
        for s in &mut p.states[halo..] {
            *s = DeState::ONE;
        }
        p
    }

    /// Builds a profile from explicit states, one per stored section.
    pub fn from_states(chain_length: usize, width: usize, states: Vec<DeState>) -> Result<Self> {
        if chain_length == 0 || width == 0 {
            return Err(Error::InvalidArgument("L and w must be >= 1".into()));
        }
        let expected = chain_length + 2 * (width - 1);
        if states.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "profile needs {expected} sections, got {}",
                states.len()
            )));
        }
        for s in &states {
            check_unit("x1", s.x1)?;
            check_unit("x2", s.x2)?;
        }
        Ok(Self {
            chain_length,
            width,
            states,
        })
    }

    pub fn chain_length(&self) -> usize {
        self.chain_length
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Index of the first stored section, `-(w-1)`.
    pub fn first_section(&self) -> isize {
        -((self.width - 1) as isize)
    }

    /// State of section `i`; sections outside the stored range read as zero.
    pub fn get(&self, i: isize) -> DeState {
        let idx = i - self.first_section();
        if idx >= 0 && (idx as usize) < self.states.len() {
            self.states[idx as usize]
        } else {
            DeState::ZERO
        }
    }

    /// All stored states, halo included, in section order.
    pub fn states(&self) -> &[DeState] {
        &self.states
    }

    /// `(section, state)` pairs over the stored range.
    pub fn sections(&self) -> impl Iterator<Item = (isize, DeState)> + '_ {
        let first = self.first_section();
        self.states.iter().enumerate().map(move |(k, s)| (first + k as isize, *s))
    }

    /// Sections `0..L`.
    pub fn interior(&self) -> &[DeState] {
        let halo = self.width - 1;
        &self.states[halo..halo + self.chain_length]
    }

    /// Largest sup-norm over all stored sections.
    pub fn max_norm(&self) -> f64 {
        self.states.iter().fold(0.0, |m, s| m.max(s.sup_norm()))
    }

    pub fn dist(&self, other: &DeProfile) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .fold(0.0, |m, (a, b)| m.max(a.dist(b)))
    }

    fn matches(&self, cfg: &CouplingConfig) -> bool {
        self.chain_length == cfg.chain_length && self.width == cfg.width
    }
}

/// Scratch buffers reused across coupled iterations.
struct Workspace {
    g: Vec<DeState>,
    /// Bit outputs with `2(w-1)` leading and `w-1` trailing zeros.
    bits: Vec<DeState>,
}

impl Workspace {
    fn new(cfg: &CouplingConfig) -> Self {
        let n = cfg.chain_length + 2 * cfg.halo();
        Self {
            g: vec![DeState::ZERO; n],
            bits: vec![DeState::ZERO; n + cfg.halo()],
        }
    }
}

fn step_into(
    d: &DegreeProfile,
    model: &ChannelModel,
    cfg: &CouplingConfig,
    src: &[DeState],
    dst: &mut [DeState],
    ws: &mut Workspace,
) {
    let w = cfg.width;
    let halo = cfg.halo();
    let inv_w = 1.0 / w as f64;

    for (g, s) in ws.g.iter_mut().zip(src) {
        *g = g_raw(d, *s);
    }
    // bit section b reads check sections b..b+w-1 (stored at b+halo..)
    for b in 0..cfg.chain_length {
        let mut avg = DeState::ZERO;
        for g in &ws.g[b + halo..b + halo + w] {
            avg.add_scaled(*g, inv_w);
        }
        ws.bits[b + 2 * halo] = f_raw(d, model, clamp_state(avg), cfg.eps);
    }
    // section i (stored at idx = i + halo) collects bits i-k, k < w
    for (idx, out) in dst.iter_mut().enumerate() {
        let mut acc = DeState::ZERO;
        for k in 0..w {
            acc.add_scaled(ws.bits[idx + halo - k], inv_w);
        }
        *out = clamp_state(acc);
    }
}

#[inline]
fn clamp_state(s: DeState) -> DeState {
    DeState {
        x1: s.x1.clamp(0.0, 1.0),
        x2: s.x2.clamp(0.0, 1.0),
    }
}

/// One synchronous coupled update.
pub fn sc_de_step(d: &DegreeProfile, model: &ChannelModel, cfg: &CouplingConfig, p: &DeProfile) -> Result<DeProfile> {
    cfg.validate()?;
    if !p.matches(cfg) {
        return Err(Error::InvalidArgument(format!(
            "profile is for L = {}, w = {} but config has L = {}, w = {}",
            p.chain_length, p.width, cfg.chain_length, cfg.width
        )));
    }
    let mut out = DeProfile::zeros(cfg.chain_length, cfg.width);
    let mut ws = Workspace::new(cfg);
    step_into(d, model, cfg, &p.states, &mut out.states, &mut ws);
    Ok(out)
}

/// Iteration limits for coupled DE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScOptions {
    pub max_iter: usize,
    /// Step size below which the recursion counts as stationary, and the level
    /// below which every section counts as decoded.
    pub tol: f64,
    /// A stationary profile whose largest entry exceeds this is a non-zero
    /// fixed point; the run stops as not decoded.
    pub stall_floor: f64,
}

impl Default for ScOptions {
    fn default() -> Self {
        Self {
            max_iter: 50_000,
            tol: 1e-10,
            stall_floor: 1e-3,
        }
    }
}

impl ScOptions {
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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScRun {
    pub profile: DeProfile,
    pub iterations: usize,
    pub decoded: bool,
}

/// Runs coupled DE from [`DeProfile::initial`].
pub fn sc_de_run(d: &DegreeProfile, model: &ChannelModel, cfg: &CouplingConfig, opts: ScOptions) -> Result<ScRun> {
    sc_de_run_with(d, model, cfg, opts, |_, _| {})
}

/// [`sc_de_run`] that reports every iterate, starting with `(0, initial)`.
pub fn sc_de_run_with<O>(
    d: &DegreeProfile,
    model: &ChannelModel,
    cfg: &CouplingConfig,
    opts: ScOptions,
    mut observer: O,
) -> Result<ScRun>
where
    O: FnMut(usize, &DeProfile),
{
    cfg.validate()?;
    opts.validate()?;
    let mut cur = DeProfile::initial(cfg.chain_length, cfg.width);
    let mut next = DeProfile::zeros(cfg.chain_length, cfg.width);
    let mut ws = Workspace::new(cfg);
    observer(0, &cur);

    let mut iterations = 0;
    let mut decoded = false;
    for t in 1..=opts.max_iter {
        step_into(d, model, cfg, &cur.states, &mut next.states, &mut ws);
        let delta = next.dist(&cur);
        std::mem::swap(&mut cur, &mut next);
        iterations = t;
        observer(t, &cur);

        let top = cur.max_norm();
        if top < opts.tol {
            decoded = true;
            break;
        }
        if delta < opts.tol && top > opts.stall_floor {
            break;
        }
    }
    Ok(ScRun {
        profile: cur,
        iterations,
        decoded,
    })
}

/// Largest `eps` (to within `tol_eps`) at which coupled DE decodes, by
/// bisection on `[0, 1]`.
pub fn bp_threshold(
    d: &DegreeProfile,
    model: &ChannelModel,
    chain_length: usize,
    width: usize,
    tol_eps: f64,
    opts: ScOptions,
) -> Result<f64> {
    if tol_eps.is_nan() || tol_eps <= 0.0 {
        return Err(Error::InvalidArgument(format!("tol_eps must be positive, got {tol_eps}")));
    }
    let decodes = |eps: f64| -> Result<bool> {
        let cfg = CouplingConfig::new(chain_length, width, eps)?;
        Ok(sc_de_run(d, model, &cfg, opts)?.decoded)
    };
    bisect_predicate(decodes, tol_eps)
}

/// BP threshold of the uncoupled ensemble, by bisection of [`de::de_run`].
pub fn uncoupled_bp_threshold(d: &DegreeProfile, model: &ChannelModel, tol_eps: f64, opts: DeOptions) -> Result<f64> {
    if tol_eps.is_nan() || tol_eps <= 0.0 {
        return Err(Error::InvalidArgument(format!("tol_eps must be positive, got {tol_eps}")));
    }
    bisect_predicate(|eps| Ok(de::de_run(d, model, eps, opts)?.converged_to_zero), tol_eps)
}

/// Supremum of a monotone (true-then-false) predicate on `[0, 1]`.
fn bisect_predicate<P>(mut pred: P, tol: f64) -> Result<f64>
where
    P: FnMut(f64) -> Result<bool>,
{
    if pred(1.0)? {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pred(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Design rate of SC-MN codes:
/// `d_r/d_l + (1 + w - 2 Σ_{i=0}^{w} (1 - (i/w)^(d_r+d_g))) / L`.
pub fn rate(d: &DegreeProfile, chain_length: usize, width: usize) -> Result<f64> {
    if chain_length == 0 || width == 0 {
        return Err(Error::InvalidArgument("L and w must be >= 1".into()));
    }
    let w = width as f64;
    let exp = d.dr() + d.dg();
    let sum: f64 = (0..=width).map(|i| 1.0 - ipow(i as f64 / w, exp)).sum();
    Ok(d.design_rate() + (1.0 + w - 2.0 * sum) / chain_length as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::de::de_step;

    fn d422() -> DegreeProfile {
        DegreeProfile::new(4, 2, 2).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(CouplingConfig::new(0, 2, 0.3).is_err());
        assert!(CouplingConfig::new(4, 0, 0.3).is_err());
        assert!(CouplingConfig::new(4, 2, 1.3).is_err());
        let cfg = CouplingConfig::new(4, 2, 0.3).unwrap();
        assert_eq!(cfg.eps_at(-1), 0.0);
        assert_eq!(cfg.eps_at(0), 0.3);
        assert_eq!(cfg.eps_at(3), 0.3);
        assert_eq!(cfg.eps_at(4), 0.0);
    }

    #[test]
    fn profile_layout() {
        let p = DeProfile::initial(5, 3);
        assert_eq!(p.states().len(), 9);
        assert_eq!(p.first_section(), -2);
        assert_eq!(p.get(-2), DeState::ZERO);
        assert_eq!(p.get(-1), DeState::ZERO);
        assert_eq!(p.get(0), DeState::ONE);
        assert_eq!(p.get(6), DeState::ONE);
        assert_eq!(p.get(7), DeState::ZERO);
        assert_eq!(p.get(100), DeState::ZERO);
        assert_eq!(p.interior().len(), 5);
        assert!(DeProfile::from_states(5, 3, vec![DeState::ZERO; 8]).is_err());
    }

    #[test]
    fn zero_profile_is_fixed() {
        for m in ChannelModel::builtins() {
            let cfg = CouplingConfig::new(8, 3, 0.8).unwrap();
            let p = DeProfile::zeros(8, 3);
            assert_eq!(sc_de_step(&d422(), &m, &cfg, &p).unwrap(), p);
        }
    }

    #[test]
    fn mismatched_profile_rejected() {
        let cfg = CouplingConfig::new(8, 3, 0.4).unwrap();
        let p = DeProfile::zeros(8, 2);
        assert!(sc_de_step(&d422(), &ChannelModel::bec(), &cfg, &p).is_err());
    }

    #[test]
    fn degenerate_coupling_is_uncoupled_step() {
        let d = DegreeProfile::new(5, 3, 3).unwrap();
        let m = ChannelModel::dec();
        for &(x1, x2, e) in &[(0.3, 0.9, 0.4), (1.0, 0.2, 0.7), (0.05, 0.5, 1.0)] {
            let cfg = CouplingConfig::new(1, 1, e).unwrap();
            let p = DeProfile::from_states(1, 1, vec![DeState { x1, x2 }]).unwrap();
            let q = sc_de_step(&d, &m, &cfg, &p).unwrap();
            assert_eq!(q.get(0), de_step(&d, &m, DeState { x1, x2 }, e).unwrap());
        }
    }

    #[test]
    fn section_zero_against_scalar_double_sum() {
        // (4,2,2), BEC, L = 8, w = 2, eps = 0.45, interior all ones, halo zero.
        let (l, w, eps) = (8usize, 2usize, 0.45);
        let d = d422();
        let mut states = vec![DeState::ZERO; l + 2 * (w - 1)];
        for s in &mut states[w - 1..w - 1 + l] {
            *s = DeState::ONE;
        }
        let p = DeProfile::from_states(l, w, states).unwrap();
        let cfg = CouplingConfig::new(l, w, eps).unwrap();
        let q = sc_de_step(&d, &ChannelModel::bec(), &cfg, &p).unwrap();

        // Section 0 collects only bit 0 (bit -1 is shortened). Bit 0 averages
        // g over sections 0 and 1, both all-ones, so g = (1, 1) and
        // f = (1, eps * 1). Section 0 = (1/2)(1, eps).
        assert_eq!(q.get(0), DeState { x1: 0.5, x2: 0.225 });
        // Section 7 collects bits 6 and 7. Bit 7 sees sections 7 (ones) and 8
        // (zero halo): g(1,1) = (1,1), g(0,0) = (0,0), average (1/2, 1/2),
        // f = (1/8, eps/2). Bit 6 sees two all-ones sections: f = (1, eps).
        let expected = DeState {
            x1: 0.5 * (1.0 + 0.125),
            x2: 0.5 * (eps + 0.5 * eps),
        };
        assert!(q.get(7).dist(&expected) < 1e-15);
        // Right halo section 8 collects bit 7 only.
        assert!(q.get(8).dist(&DeState { x1: 0.0625, x2: 0.1125 }) < 1e-15);
        assert_eq!(q.get(-1), DeState::ZERO);
    }

    #[test]
    fn run_decodes_below_and_fails_above() {
        let d = d422();
        let bec = ChannelModel::bec();
        let r = sc_de_run(&d, &bec, &CouplingConfig::new(32, 3, 0.0).unwrap(), ScOptions::default()).unwrap();
        assert!(r.decoded);
        assert!(r.iterations < 1000);
        let r = sc_de_run(&d, &bec, &CouplingConfig::new(32, 3, 0.30).unwrap(), ScOptions::default()).unwrap();
        assert!(r.decoded);
        let r = sc_de_run(&d, &bec, &CouplingConfig::new(32, 3, 0.60).unwrap(), ScOptions::default()).unwrap();
        assert!(!r.decoded);
        assert!(r.iterations < ScOptions::default().max_iter);
    }

    #[test]
    fn uncoupled_threshold_matches_degenerate_coupling() {
        let d = d422();
        for m in ChannelModel::builtins() {
            let a = bp_threshold(&d, &m, 1, 1, 1e-4, ScOptions::default()).unwrap();
            let b = uncoupled_bp_threshold(&d, &m, 1e-4, DeOptions::default()).unwrap();
            assert_eq!(a, b);
            assert_eq!(a, 0.0);
        }
    }

    #[test]
    fn rate_examples() {
        assert_eq!(rate(&d422(), 100, 1).unwrap(), 0.5);
        let r = rate(&DegreeProfile::new(6, 3, 3).unwrap(), 50, 2).unwrap();
        assert!((r - 0.480625).abs() < 1e-15);
        let r = rate(&d422(), 1_000_000_000, 5).unwrap();
        assert!((r - 0.5).abs() < 1e-8);
        assert!(rate(&d422(), 0, 2).is_err());
    }
}
