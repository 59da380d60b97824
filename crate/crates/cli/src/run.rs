use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Value};

use scmn_core::coupled::{self, sc_de_run_with, CouplingConfig, ScOptions};
use scmn_core::de::{de_run_with, DeOptions, DeState};
use scmn_core::potential::{self, nontrivial_minimum};

use crate::error::{CliError, Result};
use crate::manifest::{Command, Format, RunManifest};
use crate::svg::{Plot, Series};
use crate::table::{num, opt, Csv};
use crate::verify;

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// Multi-line report printed before the summary (verify only).
    pub report: Option<String>,
    /// One-line summary.
    pub summary: String,
    pub written: Option<PathBuf>,
    /// `(failed, counted)` for verify runs.
    pub checks: Option<(usize, usize)>,
}

impl Outcome {
    /// Process exit status for this outcome.
    pub fn exit_code(&self) -> i32 {
        match self.checks {
            Some((failed, _)) if failed > 0 => 5,
            _ => 0,
        }
    }

    /// The error equivalent of a failing verify run.
    pub fn failure(&self) -> Option<CliError> {
        match self.checks {
            Some((failed, total)) if failed > 0 => Some(CliError::VerifyFailed { failed, total }),
            _ => None,
        }
    }
}

/// Everything a command can emit; the manifest's format picks one.
struct Product {
    summary: String,
    report: Option<String>,
    csv: String,
    json: Value,
    plot: Option<Plot>,
    checks: Option<(usize, usize)>,
}

/// Validates and resolves the manifest, runs the command, and writes the
/// requested output file.
pub fn run(manifest: &RunManifest) -> Result<Outcome> {
    let m = manifest.resolve()?;
    let product = match m.command {
        Command::Sir => sir(&m)?,
        Command::SirLimit => sir_limit(&m)?,
        Command::De => de(&m)?,
        Command::ScDe => sc_de(&m)?,
        Command::BpThreshold => bp_threshold(&m)?,
        Command::PotentialCurve => potential_curve(&m)?,
        Command::PotentialThreshold => potential_threshold(&m)?,
        Command::EnergyGap => energy_gap(&m)?,
        Command::Rate => rate(&m)?,
        Command::Verify => verify_product(&m)?,
    };
    let written = match &m.output {
        None => None,
        Some(out) => {
            let body = match out.format {
                Format::Csv => product.csv,
                Format::Json => {
                    let mut s = serde_json::to_string_pretty(&json!({ "manifest": m, "result": product.json }))
                        .expect("json output");
                    s.push('\n');
                    s
                }
                Format::Svg => match &product.plot {
                    Some(p) => p.render(),
                    None => {
                        return Err(CliError::Validation(format!("{} has no svg output", m.command)));
                    }
                },
            };
            std::fs::write(&out.path, body).map_err(|e| CliError::io(&out.path, e))?;
            Some(out.path.clone())
        }
    };
    let summary = match (&written, m.command) {
        (Some(p), c) if c != Command::Verify => p.display().to_string(),
        _ => product.summary,
    };
    Ok(Outcome {
        report: product.report,
        summary,
        written,
        checks: product.checks,
    })
}

fn header(m: &RunManifest) -> Vec<String> {
    m.header_lines()
}

fn scalar_product(m: &RunManifest, columns: &[&str], values: &[f64], summary: f64) -> Product {
    let mut csv = Csv::new(&header(m), columns);
    csv.row(values.iter().map(|&v| num(v)));
    let json = Value::Object(
        columns
            .iter()
            .zip(values)
            .map(|(c, v)| (c.to_string(), json!(v)))
            .collect(),
    );
    Product {
        summary: format!("{summary:.6}"),
        report: None,
        csv: csv.finish(),
        json,
        plot: None,
        checks: None,
    }
}

fn sir(m: &RunManifest) -> Result<Product> {
    let model = m.channel_model()?;
    let eps = m.eps.expect("resolved");
    let i = model.sir(eps)?;
    Ok(scalar_product(m, &["eps", "sir"], &[eps, i], i))
}

fn sir_limit(m: &RunManifest) -> Result<Product> {
    let model = m.channel_model()?;
    let rate = m.rate.expect("resolved");
    let e = model.sir_limit(rate)?;
    Ok(scalar_product(m, &["rate", "eps_sir"], &[rate, e], e))
}

fn rate(m: &RunManifest) -> Result<Product> {
    let c = m.coupling.expect("resolved");
    let r = coupled::rate(&m.degree_profile()?, c.chain_length, c.width)?;
    Ok(scalar_product(
        m,
        &["L", "w", "rate"],
        &[c.chain_length as f64, c.width as f64, r],
        r,
    ))
}

fn de(m: &RunManifest) -> Result<Product> {
    let d = m.degree_profile()?;
    let model = m.channel_model()?;
    let eps = m.eps.expect("resolved");
    let k = m.knobs;
    let stride = k.trace_stride.expect("resolved");
    let opts = DeOptions {
        max_iter: k.max_iter.expect("resolved"),
        tol: k.tol.expect("resolved"),
    };
    let mut trace: Vec<(usize, DeState)> = Vec::new();
    let run = de_run_with(&d, &model, eps, opts, |t, s| {
        if t % stride == 0 {
            trace.push((t, s));
        }
    })?;
    if trace.last().map(|&(t, _)| t) != Some(run.iterations) {
        trace.push((run.iterations, run.state));
    }

    let mut csv = Csv::new(&header(m), &["iter", "x1", "x2"]);
    for (t, s) in &trace {
        csv.row([t.to_string(), num(s.x1), num(s.x2)]);
    }
    let series = |label: &str, get: fn(&DeState) -> f64| Series {
        label: label.into(),
        points: trace.iter().map(|(t, s)| Some((*t as f64, get(s)))).collect(),
    };
    let plot = Plot {
        title: format!("DE {d} {} eps={eps}", model.name()),
        x_label: "iteration".into(),
        y_label: "erasure probability".into(),
        series: vec![series("x1", |s| s.x1), series("x2", |s| s.x2)],
    };
    let json = json!({
        "iterations": run.iterations,
        "converged_to_zero": run.converged_to_zero,
        "state": run.state,
        "trace": trace.iter().map(|(t, s)| json!({"iter": t, "x1": s.x1, "x2": s.x2})).collect::<Vec<_>>(),
    });
    Ok(Product {
        summary: format!(
            "converged_to_zero={} iterations={} x1={:.6} x2={:.6}",
            run.converged_to_zero, run.iterations, run.state.x1, run.state.x2
        ),
        report: None,
        csv: csv.finish(),
        json,
        plot: Some(plot),
        checks: None,
    })
}

fn sc_options(m: &RunManifest) -> ScOptions {
    ScOptions {
        max_iter: m.knobs.max_iter.expect("resolved"),
        tol: m.knobs.tol.expect("resolved"),
        ..ScOptions::default()
    }
}

fn sc_de(m: &RunManifest) -> Result<Product> {
    let d = m.degree_profile()?;
    let model = m.channel_model()?;
    let c = m.coupling.expect("resolved");
    let cfg = CouplingConfig::new(c.chain_length, c.width, m.eps.expect("resolved"))?;
    let stride = m.knobs.trace_stride.expect("resolved");

    let mut csv = Csv::new(&header(m), &["iter", "section", "x1", "x2"]);
    let mut last = None;
    let push = |csv: &mut Csv, t: usize, p: &scmn_core::DeProfile| {
        for (i, s) in p.sections() {
            csv.row([t.to_string(), i.to_string(), num(s.x1), num(s.x2)]);
        }
    };
    let run = sc_de_run_with(&d, &model, &cfg, sc_options(m), |t, p| {
        if t % stride == 0 {
            push(&mut csv, t, p);
            last = Some(t);
        }
    })?;
    if last != Some(run.iterations) {
        push(&mut csv, run.iterations, &run.profile);
    }

    let series = |label: &str, get: fn(&DeState) -> f64| Series {
        label: label.into(),
        points: run.profile.sections().map(|(i, s)| Some((i as f64, get(&s)))).collect(),
    };
    let plot = Plot {
        title: format!(
            "SC-DE {d} {} L={} w={} eps={} (iteration {})",
            model.name(),
            cfg.chain_length,
            cfg.width,
            cfg.eps,
            run.iterations
        ),
        x_label: "section".into(),
        y_label: "erasure probability".into(),
        series: vec![series("x1", |s| s.x1), series("x2", |s| s.x2)],
    };
    let json = json!({
        "iterations": run.iterations,
        "decoded": run.decoded,
        "max_erasure": run.profile.max_norm(),
        "profile": run.profile.sections().map(|(i, s)| json!({"section": i, "x1": s.x1, "x2": s.x2})).collect::<Vec<_>>(),
    });
    Ok(Product {
        summary: format!(
            "decoded={} iterations={} max={}",
            run.decoded,
            run.iterations,
            num(run.profile.max_norm())
        ),
        report: None,
        csv: csv.finish(),
        json,
        plot: Some(plot),
        checks: None,
    })
}

fn bp_threshold(m: &RunManifest) -> Result<Product> {
    let d = m.degree_profile()?;
    let model = m.channel_model()?;
    let c = m.coupling.expect("resolved");
    let tol_eps = m.knobs.tol_eps.expect("resolved");
    let t = coupled::bp_threshold(&d, &model, c.chain_length, c.width, tol_eps, sc_options(m))?;
    Ok(scalar_product(
        m,
        &["L", "w", "bp_threshold"],
        &[c.chain_length as f64, c.width as f64, t],
        t,
    ))
}

fn potential_curve(m: &RunManifest) -> Result<Product> {
    let d = m.degree_profile()?;
    let model = m.channel_model()?;
    let curve = potential::potential_curve(&d, &model, m.knobs.grid_size.expect("resolved"))?;

    let mut csv = Csv::new(&header(m), &["x1", "x2", "psi", "phi_bracket", "eps", "U", "valid"]);
    for s in &curve {
        csv.row([
            num(s.x1),
            num(s.x2),
            num(s.psi),
            num(s.phi_bracket),
            opt(s.eps),
            opt(s.u),
            (s.valid as u8).to_string(),
        ]);
    }
    let plot = Plot {
        title: format!("potential along non-trivial fixed points, {d} {}", model.name()),
        x_label: "x1".into(),
        y_label: "U(x1, x2[x1]; eps[x1])".into(),
        series: vec![Series {
            label: model.name().into(),
            points: curve.iter().map(|s| s.u.map(|u| (s.x1, u))).collect(),
        }],
    };
    let valid = curve.iter().filter(|s| s.valid).count();
    let summary = match nontrivial_minimum(&curve) {
        Some((u, x1)) => format!("min_U={} at x1={} valid={valid}/{}", num(u), num(x1), curve.len()),
        None => format!("no valid samples (0/{})", curve.len()),
    };
    Ok(Product {
        summary,
        report: None,
        csv: csv.finish(),
        json: json!({ "samples": curve }),
        plot: Some(plot),
        checks: None,
    })
}

fn potential_threshold(m: &RunManifest) -> Result<Product> {
    let d = m.degree_profile()?;
    let model = m.channel_model()?;
    let r = potential::potential_threshold(&d, &model, m.knobs.grid_size.expect("resolved"))?;
    let mut csv = Csv::new(
        &header(m),
        &["eps_star", "eps_sir", "min_nontrivial_U", "argmin_x1", "grid_size"],
    );
    csv.row([
        num(r.eps_star),
        num(r.eps_sir),
        num(r.min_nontrivial_u),
        num(r.argmin_x1),
        r.grid_size.to_string(),
    ]);
    Ok(Product {
        summary: format!("{:.6}", r.eps_star),
        report: None,
        csv: csv.finish(),
        json: to_value(&r),
        plot: None,
        checks: None,
    })
}

fn energy_gap(m: &RunManifest) -> Result<Product> {
    let d = m.degree_profile()?;
    let model = m.channel_model()?;
    let eps = m.eps.expect("resolved");
    let grid = m.knobs.grid_size.expect("resolved");
    let gap = potential::energy_gap(&d, &model, eps, grid)?;
    let mut p = scalar_product(m, &["eps", "energy_gap"], &[eps, gap], gap);
    p.json["grid_size"] = json!(grid);
    Ok(p)
}

fn verify_product(m: &RunManifest) -> Result<Product> {
    let d = m.degree_profile()?;
    let model = m.channel_model()?;
    let checks = verify::run_checks(&d, &model, m.knobs.grid_size.expect("resolved"))?;
    let failed = checks.iter().filter(|c| c.status == verify::Status::Fail).count();
    let counted = checks.iter().filter(|c| c.status != verify::Status::Skip).count();

    let mut csv = Csv::new(
        &header(m),
        &["check", "channel", "observed", "bound", "margin", "status"],
    );
    for c in &checks {
        csv.row([
            c.name.clone(),
            c.channel.clone(),
            num(c.observed),
            num(c.bound),
            num(c.margin),
            c.status.as_str().to_string(),
        ]);
    }
    Ok(Product {
        summary: format!("{}/{counted} checks passed", counted - failed),
        report: Some(verify::render_table(&checks)),
        csv: csv.finish(),
        json: json!({ "failed": failed, "checks": checks }),
        plot: None,
        checks: Some((failed, counted)),
    })
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable result")
}
