//! Acceptance criteria. Each test prints one `criterion N ... PASS|FAIL` line
//! directly to stderr (bypassing libtest capture) and then asserts.

use std::io::Write as _;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scmn_core::coupled::{bp_threshold, rate, sc_de_run_with, CouplingConfig, ScOptions};
use scmn_core::de::{de_run_with, DeOptions, DeState};
use scmn_core::potential::{
    domination_report, eps_of_x1, nontrivial_minimum, phi_bracket_of_x1, potential_curve, potential_threshold,
    potential_u, potential_u_general, psi_of_x1, trivial_u, x1_grid,
};
use scmn_core::{ChannelModel, DegreeProfile};

fn report(n: u32, name: &str, ok: bool, detail: &str) {
    let status = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {n:>2} [{status}] {name}: {detail}");
}

fn profiles() -> [DegreeProfile; 2] {
    [DegreeProfile::new(4, 2, 2).unwrap(), DegreeProfile::new(6, 3, 3).unwrap()]
}

fn scmn() -> Command {
    Command::new(env!("CARGO_BIN_EXE_scmn"))
}

#[test]
fn criterion_01_sir_limit_analytic() {
    let start = Instant::now();
    let bec = ChannelModel::bec().sir_limit(0.5).unwrap();
    let dec = ChannelModel::dec().sir_limit(0.5).unwrap();
    let elapsed = start.elapsed();
    // root of 4 eps^2 - eps - 1 = 0
    let dec_exact = (1.0 + 17f64.sqrt()) / 8.0;
    let (e_bec, e_dec) = ((bec - 0.5).abs(), (dec - dec_exact).abs());

    let out = scmn().args(["sir-limit", "--channel", "bec", "--rate", "0.5"]).output().unwrap();
    let printed = String::from_utf8_lossy(&out.stdout).trim().to_string();

    let ok = e_bec <= 1e-8 && e_dec <= 1e-8 && elapsed < Duration::from_millis(100) && printed == "0.500000";
    report(
        1,
        "sir-limit",
        ok,
        &format!("|bec-0.5|={e_bec:.1e} |dec-(1+sqrt17)/8|={e_dec:.1e} in {elapsed:.2?}; cli printed {printed}"),
    );
    assert!(ok);
}

#[test]
fn criterion_02_quadrature_vs_closed_form() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for m in [ChannelModel::dec(), ChannelModel::pr2()] {
        for ie in 1..=9 {
            for ix in 1..=10 {
                let (x, e) = (ix as f64 / 10.0, ie as f64 / 10.0);
                let d = m.phi_integral(x, e).unwrap() - m.phi_integral_numeric(x, e).unwrap();
                worst = worst.max(d.abs());
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = worst <= 1e-8 && elapsed < Duration::from_secs(1);
    report(2, "quadrature", ok, &format!("max |Phi - quad| = {worst:.2e} in {elapsed:.2?}"));
    assert!(ok);
}

#[test]
fn criterion_03_trivial_potential_sign_change() {
    let mut ok = true;
    let mut worst_root: f64 = 0.0;
    for d in profiles() {
        for m in ChannelModel::builtins() {
            let es = m.sir_limit(d.design_rate()).unwrap();
            let at_root = trivial_u(&d, &m, es).unwrap().abs();
            worst_root = worst_root.max(at_root);
            ok &= at_root < 1e-8;
            // positive on [0, es), negative on (es, 1]
            for k in 0..=1000 {
                let t = k as f64 / 1000.0;
                let below = es - 1e-6 - t * (es - 1e-6);
                let above = es + 1e-6 + t * (1.0 - es - 1e-6);
                ok &= trivial_u(&d, &m, below).unwrap() > 0.0;
                ok &= trivial_u(&d, &m, above).unwrap() < 0.0;
            }
        }
    }
    report(
        3,
        "trivial U changes sign at the SIR limit",
        ok,
        &format!("max |U(eps_sir)| = {worst_root:.2e}, sign pattern checked on 2x1001 points per case"),
    );
    assert!(ok);
}

#[test]
fn criterion_04_nontrivial_potential_positive_on_bec() {
    let start = Instant::now();
    let mut ok = true;
    let mut details = Vec::new();
    for d in profiles() {
        let curve = potential_curve(&d, &ChannelModel::bec(), 10_000).unwrap();
        let (u, x1) = nontrivial_minimum(&curve).unwrap();
        ok &= u > 0.0;
        details.push(format!("{d}: min U = {u:.4e} at x1 = {x1:.5}"));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(2);
    report(4, "non-trivial U > 0 over BEC", ok, &format!("{} in {elapsed:.2?}", details.join("; ")));
    assert!(ok);
}

#[test]
fn criterion_05_domination_of_bec_potential() {
    let start = Instant::now();
    let mut ok = true;
    let mut details = Vec::new();
    for d in profiles() {
        for m in [ChannelModel::dec(), ChannelModel::pr2()] {
            let r = domination_report(&d, &m, 10_000).unwrap();
            ok &= r.min_difference >= -1e-12 && r.compared > 0;
            details.push(format!("{d} {} min diff {:.2e}", m.name(), r.min_difference));
        }
        let r = domination_report(&d, &ChannelModel::bec(), 10_000).unwrap();
        ok &= r.max_abs_difference <= 1e-12;
        details.push(format!("{d} bec max |diff| {:.1e}", r.max_abs_difference));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(5);
    report(5, "U_GEC >= U_BEC", ok, &format!("{} in {elapsed:.2?}", details.join("; ")));
    assert!(ok);
}

#[test]
fn criterion_06_potential_threshold_equals_sir_limit() {
    let mut worst: f64 = 0.0;
    for d in profiles() {
        for m in ChannelModel::builtins() {
            let r = potential_threshold(&d, &m, 4096).unwrap();
            let es = m.sir_limit(d.design_rate()).unwrap();
            worst = worst.max((r.eps_star - es).abs());
        }
    }
    let ok = worst <= 1e-5;
    report(6, "potential threshold = SIR limit", ok, &format!("max gap {worst:.2e} over 6 cases"));
    assert!(ok);
}

#[test]
fn criterion_07_threshold_saturation_trend() {
    let start = Instant::now();
    let d = DegreeProfile::new(4, 2, 2).unwrap();
    let bec = ChannelModel::bec();
    let thresholds: Vec<f64> = (1..=5)
        .map(|w| bp_threshold(&d, &bec, 128, w, 1e-4, ScOptions::default()).unwrap())
        .collect();
    let elapsed = start.elapsed();
    let monotone = thresholds.windows(2).all(|p| p[0] <= p[1]);
    let gap = (thresholds[4] - 0.5).abs();
    let ok = monotone && gap <= 0.02 && elapsed < Duration::from_secs(120);
    report(
        7,
        "BP threshold non-decreasing in w, near 0.5 at w=5",
        ok,
        &format!("L=128 w=1..5: {thresholds:.5?}, |eps_BP(5)-0.5| = {gap:.2e} in {elapsed:.2?}"),
    );
    assert!(ok);
}

#[test]
fn criterion_08_eps_solver_oracles() {
    let d = DegreeProfile::new(4, 2, 2).unwrap();
    let (dec, bec) = (ChannelModel::dec(), ChannelModel::bec());
    let (mut n_dec, mut worst_dec, mut n_bec, mut worst_bec) = (0, 0.0f64, 0, 0.0f64);
    for x1 in x1_grid(1000) {
        if let Some(e) = eps_of_x1(&d, &dec, x1).unwrap() {
            // explicit inverse of the dicode transfer function at psi
            let psi = psi_of_x1(&d, x1).unwrap();
            let r = phi_bracket_of_x1(&d, x1).unwrap().sqrt();
            let closed = (2.0 - psi) * r / (2.0 - psi * r);
            worst_dec = worst_dec.max((e - closed).abs());
            n_dec += 1;
        }
        if let Some(e) = eps_of_x1(&d, &bec, x1).unwrap() {
            worst_bec = worst_bec.max((e - phi_bracket_of_x1(&d, x1).unwrap()).abs());
            n_bec += 1;
        }
    }
    let ok = n_dec == 1000 && worst_dec <= 1e-8 && n_bec >= 1000 && worst_bec <= 1e-10;
    report(
        8,
        "eps[x1] solver",
        ok,
        &format!("dec vs closed form {worst_dec:.2e} on {n_dec} points; bec vs phi[x1] {worst_bec:.2e} on {n_bec} points"),
    );
    assert!(ok);
}

#[test]
fn criterion_09_structural_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5c4e);
    let random_profile = |rng: &mut ChaCha8Rng| {
        let dr = rng.gen_range(2..=4);
        let dl = rng.gen_range(dr + 1..=8);
        DegreeProfile::new(dl, dr, rng.gen_range(2..=4)).unwrap()
    };

    // explicit vs definitional potential
    let mut u_gap: f64 = 0.0;
    for m in ChannelModel::builtins() {
        for _ in 0..10_000 {
            let d = random_profile(&mut rng);
            let (x1, x2, e) = (rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>());
            let a = potential_u(&d, &m, x1, x2, e).unwrap();
            let b = potential_u_general(&d, &m, x1, x2, e).unwrap();
            u_gap = u_gap.max((a - b).abs());
        }
    }

    // mirror symmetry of every coupled iterate, L = 16, w = 3
    let d = DegreeProfile::new(4, 2, 2).unwrap();
    let mut asym: f64 = 0.0;
    let mut sc_iters = 0;
    for m in ChannelModel::builtins() {
        let cfg = CouplingConfig::new(16, 3, 0.45).unwrap();
        let span = (cfg.chain_length + cfg.width - 2) as isize;
        let run = sc_de_run_with(&d, &m, &cfg, ScOptions::default(), |_, p| {
            for i in 0..=span {
                asym = asym.max(p.get(i).dist(&p.get(span - i)));
            }
        })
        .unwrap();
        sc_iters += run.iterations;
    }

    // uncoupled DE decreases from all-ones
    let models = ChannelModel::builtins();
    let mut monotone = true;
    for _ in 0..100 {
        let d = random_profile(&mut rng);
        let m = &models[rng.gen_range(0..3)];
        let e = rng.gen::<f64>();
        let mut prev = DeState::ONE;
        de_run_with(&d, m, e, DeOptions::default(), |_, s| {
            monotone &= s.precedes(&prev);
            prev = s;
        })
        .unwrap();
    }

    // rate formula: exact worked example, and d_r/d_l in the long-chain limit
    let r633 = rate(&DegreeProfile::new(6, 3, 3).unwrap(), 50, 2).unwrap();
    let long = rate(&d, 1_000_000_000, 3).unwrap();
    let rate_ok = r633 == 0.480625 && (long - 0.5).abs() < 1e-8 && rate(&d, 64, 1).unwrap() == 0.5;

    let ok = u_gap <= 1e-12 && asym <= 1e-12 && monotone && rate_ok;
    report(
        9,
        "structural invariants",
        ok,
        &format!(
            "two-form U gap {u_gap:.1e} (3x1e4 points); SC asymmetry {asym:.1e} over {sc_iters} iterates; \
             DE monotone on 100 runs: {monotone}; rate {r633} and {long:.9}"
        ),
    );
    assert!(ok);
}

fn run_manifest(manifest: &Path, threads: &str) -> Vec<u8> {
    let out = scmn()
        .arg("run")
        .arg(manifest)
        .env("SCMN_THREADS", threads)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(manifest).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    std::fs::read(v["output"]["path"].as_str().unwrap()).unwrap()
}

#[test]
fn criterion_10_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 3] = [
        &["potential-curve", "--channel", "dec", "--grid", "1024"],
        &["sc-de", "--channel", "pr2", "--L", "16", "--w", "3", "--eps", "0.5", "--trace-stride", "5"],
        &["potential-threshold", "--channel", "bec", "--dl", "6", "--dr", "3", "--dg", "3"],
    ];
    let mut ok = true;
    let mut sizes = Vec::new();
    for (i, args) in cases.iter().enumerate() {
        let csv = dir.path().join(format!("out{i}.csv"));
        let manifest = dir.path().join(format!("m{i}.json"));
        let out = scmn()
            .args(*args)
            .arg("-o")
            .arg(&csv)
            .arg("--save-manifest")
            .arg(&manifest)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let first = std::fs::read(&csv).unwrap();
        let again = run_manifest(&manifest, "1");
        let threaded = run_manifest(&manifest, "4");
        ok &= first == again && again == threaded;
        sizes.push(first.len());
    }
    report(
        10,
        "determinism",
        ok,
        &format!("3 manifests x 3 runs (default, 1 and 4 threads) byte-identical; sizes {sizes:?}"),
    );
    assert!(ok);
}
