//! Bundled invariant checks with observed margins.

use std::fmt::Write as _;

use serde::Serialize;

use scmn_core::coupled::{self, sc_de_run_with, CouplingConfig, ScOptions};
use scmn_core::de::{de_run, fixed_point_residual, DeOptions};
use scmn_core::potential::{
    domination_report, nontrivial_minimum, potential_curve, potential_threshold, potential_u, potential_u_general,
    trivial_sign_report,
};
use scmn_core::{ChannelKind, ChannelModel, DeState, DegreeProfile};

use crate::table::fmt_g;

/// Grid used for the non-trivial positivity sweep over the BEC.
pub const POSITIVITY_GRID: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Not applicable to this degree profile; reported, not counted.
    Skip,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Skip => "skip",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub channel: String,
    pub observed: f64,
    pub bound: f64,
    /// Distance to the bound; positive when the check holds.
    pub margin: f64,
    pub status: Status,
}

fn at_most(name: &str, channel: &str, observed: f64, bound: f64) -> Check {
    let margin = bound - observed;
    Check {
        name: name.into(),
        channel: channel.into(),
        observed,
        bound,
        margin,
        status: if margin >= 0.0 { Status::Pass } else { Status::Fail },
    }
}

fn above(name: &str, channel: &str, observed: f64, bound: f64) -> Check {
    let margin = observed - bound;
    Check {
        name: name.into(),
        channel: channel.into(),
        observed,
        bound,
        margin,
        status: if margin > 0.0 { Status::Pass } else { Status::Fail },
    }
}

fn at_least(name: &str, channel: &str, observed: f64, bound: f64) -> Check {
    let margin = observed - bound;
    Check {
        name: name.into(),
        channel: channel.into(),
        observed,
        bound,
        margin,
        status: if margin >= 0.0 { Status::Pass } else { Status::Fail },
    }
}

fn skip_unless(c: Check, applies: bool) -> Check {
    if applies {
        c
    } else {
        Check { status: Status::Skip, ..c }
    }
}

/// Runs every check for `d` over the three built-in channels, plus `extra`
/// when it is a custom table.
pub fn run_checks(d: &DegreeProfile, extra: &ChannelModel, grid_size: usize) -> scmn_core::Result<Vec<Check>> {
    let mut models: Vec<ChannelModel> = ChannelModel::builtins().to_vec();
    if extra.kind() == ChannelKind::Custom {
        models.push(extra.clone());
    }
    let proven = d.in_proven_family();
    let mut checks = vec![rate_examples()];

    let bec_curve = potential_curve(d, &ChannelModel::bec(), POSITIVITY_GRID)?;
    let min_u = nontrivial_minimum(&bec_curve).map_or(f64::NAN, |(u, _)| u);
    checks.push(skip_unless(above("nontrivial-U-positive", "bec", min_u, 0.0), proven));

    for m in &models {
        let name = m.name();
        if m.has_closed_form_integral() {
            checks.push(at_most("quadrature-vs-closed-form", name, quadrature_gap(m)?, 1e-8));
        } else {
            let ok = m.check_monotone(512).is_ok();
            checks.push(at_most("table-monotone", name, if ok { 0.0 } else { 1.0 }, 0.0));
        }
        checks.push(at_most("sir-limit-round-trip", name, sir_round_trip(m)?, 1e-8));
        checks.push(at_most("two-form-U", name, two_form_gap(d, m)?, 1e-12));
        checks.push(at_most("fixed-point-residual", name, residual(d, m)?, 1e-10));

        let t = trivial_sign_report(d, m, 200, 1e-6)?;
        let sign_margin = t.min_below.min(-t.max_above);
        let mut c = at_most("trivial-U-sign-change", name, t.residual_at_root, 1e-8);
        c.margin = c.margin.min(sign_margin);
        if sign_margin <= 0.0 {
            c.status = Status::Fail;
        }
        checks.push(c);

        let dom = domination_report(d, m, grid_size)?;
        if m.kind() == ChannelKind::BuiltinBec {
            checks.push(at_most("U-equals-bec", name, dom.max_abs_difference, 1e-12));
        } else {
            checks.push(at_least("U-dominates-bec", name, dom.min_difference, -1e-12));
        }

        let (asym, rise) = coupled_invariants(d, m)?;
        checks.push(at_most("sc-symmetry", name, asym, 1e-12));
        checks.push(at_most("sc-monotone", name, rise, 0.0));

        let r = potential_threshold(d, m, grid_size)?;
        checks.push(skip_unless(
            at_most("threshold-equals-sir-limit", name, (r.eps_star - r.eps_sir).abs(), 1e-5),
            proven,
        ));
    }
    Ok(checks)
}

/// Two worked examples of the SC-MN rate formula.
fn rate_examples() -> Check {
    let r1 = coupled::rate(&DegreeProfile::new(6, 3, 3).expect("valid"), 50, 2).expect("valid");
    let r2 = coupled::rate(&DegreeProfile::new(4, 2, 2).expect("valid"), 100, 1).expect("valid");
    let err = (r1 - 0.480625).abs().max((r2 - 0.5).abs());
    at_most("rate-examples", "-", err, 1e-15)
}

fn quadrature_gap(m: &ChannelModel) -> scmn_core::Result<f64> {
    let mut worst: f64 = 0.0;
    for ie in 1..=9 {
        for ix in 1..=10 {
            let (x, e) = (ix as f64 / 10.0, ie as f64 / 10.0);
            worst = worst.max((m.phi_integral(x, e)? - m.phi_integral_numeric(x, e)?).abs());
        }
    }
    Ok(worst)
}

fn sir_round_trip(m: &ChannelModel) -> scmn_core::Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 1..20 {
        let e = k as f64 / 20.0;
        worst = worst.max((m.sir_limit(m.sir(e)?)? - e).abs());
    }
    Ok(worst)
}

/// Largest gap between the explicit and definitional potentials over 2000
/// quasi-random points of `[0, 1)^3`.
fn two_form_gap(d: &DegreeProfile, m: &ChannelModel) -> scmn_core::Result<f64> {
    const A: [f64; 3] = [0.819_172_513_396_164_4, 0.671_043_606_703_789_2, 0.549_700_477_901_970_5];
    let mut worst: f64 = 0.0;
    for k in 1..=2000 {
        let p = A.map(|a| (k as f64 * a).fract());
        let (x1, x2, e) = (p[0], p[1], p[2]);
        worst = worst.max((potential_u(d, m, x1, x2, e)? - potential_u_general(d, m, x1, x2, e)?).abs());
    }
    Ok(worst)
}

fn residual(d: &DegreeProfile, m: &ChannelModel) -> scmn_core::Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 1..10 {
        let e = k as f64 / 10.0;
        let run = de_run(d, m, e, DeOptions::default())?;
        let (r1, r2) = fixed_point_residual(d, m, run.state, e);
        worst = worst.max(r1).max(r2);
    }
    Ok(worst)
}

/// Largest mirror asymmetry and largest per-iteration increase on an
/// `L = 16, w = 3` coupled run.
fn coupled_invariants(d: &DegreeProfile, m: &ChannelModel) -> scmn_core::Result<(f64, f64)> {
    let eps = 0.9 * m.sir_limit(d.design_rate())?;
    let cfg = CouplingConfig::new(16, 3, eps)?;
    let span = (cfg.chain_length + cfg.width - 2) as isize;
    let opts = ScOptions {
        max_iter: 2000,
        ..ScOptions::default()
    };
    let (mut asym, mut rise) = (0.0f64, 0.0f64);
    let mut prev: Option<Vec<DeState>> = None;
    sc_de_run_with(d, m, &cfg, opts, |_, p| {
        for i in 0..=span {
            asym = asym.max(p.get(i).dist(&p.get(span - i)));
        }
        if let Some(prev) = &prev {
            for (a, b) in p.states().iter().zip(prev) {
                rise = rise.max(a.x1 - b.x1).max(a.x2 - b.x2);
            }
        }
        prev = Some(p.states().to_vec());
    })?;
    Ok((asym, rise))
}

pub fn render_table(checks: &[Check]) -> String {
    let rows: Vec<[String; 6]> = checks
        .iter()
        .map(|c| {
            [
                c.name.clone(),
                c.channel.clone(),
                fmt_g(c.observed, 4),
                fmt_g(c.bound, 4),
                fmt_g(c.margin, 4),
                c.status.as_str().into(),
            ]
        })
        .collect();
    let head = ["check", "channel", "observed", "bound", "margin", "status"].map(String::from);
    let mut widths = head.clone().map(|h| h.len());
    for r in &rows {
        for (w, f) in widths.iter_mut().zip(r) {
            *w = (*w).max(f.len());
        }
    }
    let mut s = String::new();
    for r in std::iter::once(&head).chain(&rows) {
        let line: Vec<String> = r.iter().zip(widths).map(|(f, w)| format!("{f:<w$}")).collect();
        let _ = writeln!(s, "{}", line.join("  ").trim_end());
    }
    s.pop();
    s
}
