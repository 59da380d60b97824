use std::path::Path;
use std::process::{Command, Output};

use scmn_core::{ChannelModel, CustomChannelSpec};

fn scmn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scmn")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).trim().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).to_string()
}

/// Data rows of a CSV, comments and column header stripped.
fn read_csv(path: &Path) -> (String, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().to_string();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn scalar_summaries() {
    assert_eq!(stdout(&scmn(&["sir-limit", "--channel", "bec", "--rate", "0.5"])), "0.500000");
    assert_eq!(
        stdout(&scmn(&["rate", "--dl", "6", "--dr", "3", "--dg", "3", "--L", "50", "--w", "2"])),
        "0.480625"
    );
    assert_eq!(stdout(&scmn(&["sir", "--channel", "bec", "--eps", "0.25"])), "0.750000");
    assert_eq!(stdout(&scmn(&["potential-threshold", "--channel", "bec"])), "0.500000");
}

#[test]
fn dec_potential_curve_dominates_bec() {
    let dir = tempfile::tempdir().unwrap();
    let mut u = Vec::new();
    for ch in ["bec", "dec"] {
        let path = dir.path().join(format!("{ch}.csv"));
        let out = scmn(&[
            "potential-curve",
            "--channel",
            ch,
            "--dl",
            "4",
            "--dr",
            "2",
            "--dg",
            "2",
            "--grid",
            "1024",
            "-o",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        assert_eq!(stdout(&out), path.display().to_string());
        let (header, rows) = read_csv(&path);
        assert_eq!(header, "x1,x2,psi,phi_bracket,eps,U,valid");
        assert_eq!(rows.len(), 1024);
        u.push(rows.iter().map(|r| r[5].parse::<f64>().ok()).collect::<Vec<_>>());
    }
    let mut compared = 0;
    for (b, d) in u[0].iter().zip(&u[1]) {
        if let (Some(b), Some(d)) = (b, d) {
            // both columns are rounded to 12 significant digits
            assert!(d - b >= -1e-12, "{d} < {b}");
            compared += 1;
        }
    }
    assert!(compared > 1000);
}

#[test]
fn trace_schemas_and_header_comments() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("sc.csv");
    let out = scmn(&["sc-de", "--L", "8", "--w", "2", "--eps", "0.45", "-o", sc.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&sc).unwrap();
    for line in ["# command = sc-de", "# L = 8", "# w = 2", "# tol = 1e-10", "# max_iter = 50000", "# trace_stride = 100"] {
        assert!(text.contains(line), "missing {line}");
    }
    let (header, rows) = read_csv(&sc);
    assert_eq!(header, "iter,section,x1,x2");
    // iteration 0 covers sections -1..=8
    let first: Vec<&Vec<String>> = rows.iter().filter(|r| r[0] == "0").collect();
    assert_eq!(first.len(), 10);
    assert_eq!(first[0][1], "-1");
    assert_eq!(first[0][2], "0");
    assert_eq!(first[1][2], "1");

    let de = dir.path().join("de.csv");
    let out = scmn(&["de", "--channel", "dec", "--eps", "0.3", "-o", de.to_str().unwrap()]);
    assert!(out.status.success());
    let (header, rows) = read_csv(&de);
    assert_eq!(header, "iter,x1,x2");
    assert_eq!(rows[0], ["0", "1", "1"]);
}

#[test]
fn svg_and_json_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("u.svg");
    let out = scmn(&["potential-curve", "--channel", "pr2", "--dl", "6", "--dr", "3", "--dg", "3", "-o", svg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") && text.contains("<polyline"));

    let json = dir.path().join("t.json");
    let out = scmn(&["potential-threshold", "--channel", "dec", "-o", json.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["manifest"]["command"], "potential-threshold");
    assert_eq!(v["manifest"]["knobs"]["grid_size"], 4096);
    let eps = v["result"]["eps_star"].as_f64().unwrap();
    assert!((eps - (1.0 + 17f64.sqrt()) / 8.0).abs() < 1e-5);

    let out = scmn(&["rate", "--L", "10", "--w", "2", "-o", dir.path().join("r.svg").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let out = scmn(&["de", "--dl", "2", "--dr", "2", "--eps", "0.3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("d_l > d_r"), "{}", stderr(&out));

    let out = scmn(&["sir", "--channel", "pr3", "--eps", "0.3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown channel"));

    let out = scmn(&["energy-gap", "--eps", "0.7"]);
    assert_eq!(out.status.code(), Some(2));

    let out = scmn(&["sir", "--eps", "0.3", "-o", "/nonexistent-dir/x.csv"]);
    assert_eq!(out.status.code(), Some(4));

    let out = scmn(&["run", "/nonexistent-dir/m.json"]);
    assert_eq!(out.status.code(), Some(4));

    let out = scmn(&["de", "--eps", "0.3", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn energy_gap_is_positive_below_threshold() {
    let out = scmn(&["energy-gap", "--channel", "bec", "--eps", "0.4", "--grid", "1024"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let gap: f64 = stdout(&out).parse().unwrap();
    assert!(gap > 0.0);
}

#[test]
fn verify_with_custom_tables() {
    let dir = tempfile::tempdir().unwrap();
    let eps_grid: Vec<f64> = (0..=40).map(|k| k as f64 / 40.0).collect();
    let spec = CustomChannelSpec::sample("dec-table", &ChannelModel::dec(), eps_grid, 128);
    let good = dir.path().join("dec.json");
    std::fs::write(&good, serde_json::to_string(&spec).unwrap()).unwrap();

    let out = scmn(&["verify", "--channel", good.to_str().unwrap(), "--grid", "1024"]);
    assert!(out.status.success(), "{}\n{}", stdout(&out), stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("dec-table"));
    assert!(text.lines().last().unwrap().ends_with("checks passed"));

    let mut bad = spec.clone();
    bad.phi_tables[7][20] = bad.phi_tables[7][21] + 0.1;
    let bad_path = dir.path().join("bad.json");
    std::fs::write(&bad_path, serde_json::to_string(&bad).unwrap()).unwrap();
    let out = scmn(&["verify", "--channel", bad_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("(row 7, col"), "{}", stderr(&out));
}

#[test]
fn verify_reports_positivity_for_other_profiles() {
    for (dl, dr, dg) in [("3", "2", "2"), ("6", "3", "3")] {
        let out = scmn(&["verify", "--dl", dl, "--dr", dr, "--dg", dg, "--grid", "1024"]);
        assert!(out.status.success(), "{}", stdout(&out));
        let line = stdout(&out)
            .lines()
            .find(|l| l.starts_with("nontrivial-U-positive"))
            .unwrap()
            .to_string();
        assert!(line.ends_with("pass"), "{line}");
    }
}

#[test]
fn saved_manifest_replays() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    let out = scmn(&["bp-threshold", "--L", "32", "--w", "3", "--tol-eps", "1e-3", "--save-manifest", m.to_str().unwrap()]);
    assert!(out.status.success());
    let replay = scmn(&["run", m.to_str().unwrap()]);
    assert_eq!(stdout(&out), stdout(&replay));
    let text = std::fs::read_to_string(&m).unwrap();
    assert!(text.contains("\"tol_eps\": 0.001"));
}
