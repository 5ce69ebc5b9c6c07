use std::process::{Command, Output};

fn kerrconc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kerrconc"))
        .args(args)
        .output()
        .unwrap()
}

fn table(out: &Output) -> Vec<std::collections::HashMap<String, String>> {
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    reader
        .records()
        .map(|r| {
            header
                .iter()
                .cloned()
                .zip(r.unwrap().iter().map(String::from))
                .collect()
        })
        .collect()
}

fn num(row: &std::collections::HashMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap()
}

const WEAK: [&str; 8] = [
    "--lambda",
    "0.5",
    "--alpha",
    "1e4",
    "--phi",
    "1e-10",
    "--theta",
    "1.5707963",
];

#[test]
fn run_above_and_below_threshold() {
    let above = kerrconc(&[&["run"], &WEAK[..], &["--x", "1.0"]].concat());
    assert!(above.status.success());
    let row = &table(&above)[0];
    assert_eq!(row["success"], "true");
    assert!((num(row, "lambda_prime_linear") - 0.5 * (1.0 + 1.414e-6)).abs() < 1e-9);

    let below = kerrconc(&[&["run"], &WEAK[..], &["--x", "-1.0"]].concat());
    let row = &table(&below)[0];
    assert_eq!(row["success"], "false");
    assert!(num(row, "v_out_linear") > num(row, "v_in"));
}

#[test]
fn vacuum_run() {
    let out = kerrconc(&[
        "run", "--lambda", "0", "--alpha", "2", "--phi", "0.1", "--theta", "1.0", "--x", "0.3",
    ]);
    let row = &table(&out)[0];
    assert_eq!(num(row, "v_in"), 2.0);
    assert!((num(row, "v_out_exact") - 2.0).abs() < 1e-12);
    assert_eq!(num(row, "v_out_linear"), 2.0);
}

#[test]
fn json_run_is_one_object() {
    let out = kerrconc(&[&["run"], &WEAK[..], &["--x", "0.5", "--format", "json"]].concat());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.is_object());
    assert_eq!(v["success"], true);
    assert!(v.get("ps").is_none());
}

#[test]
fn theta_in_degrees_and_squeezing_in_db() {
    let rad = kerrconc(&[
        "run",
        "--lambda",
        "0.5",
        "--alpha",
        "2",
        "--phi",
        "0.1",
        "--theta",
        "0.5235987755982988",
        "--x",
        "0.7",
    ]);
    let deg = kerrconc(&[
        "run",
        "--lambda",
        "0.5",
        "--alpha",
        "2",
        "--phi",
        "0.1",
        "--theta-deg",
        "30",
        "--x",
        "0.7",
    ]);
    let (rad, deg) = (&table(&rad)[0], &table(&deg)[0]);
    for key in ["theta", "beta", "v_out_exact"] {
        assert!((num(rad, key) - num(deg, key)).abs() < 1e-14, "{key}");
    }
    let db = kerrconc(&[
        "run",
        "--squeezing-db",
        "4.5",
        "--alpha",
        "2",
        "--phi",
        "0.1",
        "--x",
        "0.7",
    ]);
    let row = &table(&db)[0];
    assert!((num(row, "squeezing_db") - 4.5).abs() < 1e-12);
    assert!((num(row, "lambda") - (4.5 * std::f64::consts::LN_10 / 20.0).tanh()).abs() < 1e-15);
}

#[test]
fn sampled_rows_are_reproducible() {
    let args = [&["sample"], &WEAK[..], &["--seed", "17", "--count", "5"]].concat();
    let first = kerrconc(&args);
    let second = kerrconc(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    let rows = table(&first);
    assert_eq!(rows.len(), 5);
    let row = &rows[3];
    let again = kerrconc(&[&["run"], &WEAK[..], &["--sample", "--seed", row["seed"].as_str()]].concat());
    assert_eq!(table(&again)[0], *row);
    let direct = kerrconc(&[&["run"], &WEAK[..], &["--x", row["x"].as_str()]].concat());
    assert_eq!(table(&direct)[0]["v_out_exact"], row["v_out_exact"]);
}

#[test]
fn density_is_normalized_gaussian() {
    let out = kerrconc(
        &[
            &["density"],
            &WEAK[..],
            &["--x-min", "-8", "--x-max", "8", "--points", "3201"],
        ]
        .concat(),
    );
    let rows = table(&out);
    let h = 16.0 / 3200.0;
    let exact: Vec<f64> = rows.iter().map(|r| num(r, "density_exact")).collect();
    let mass = h * (exact.iter().sum::<f64>() - 0.5 * (exact[0] + exact[exact.len() - 1]));
    assert!((mass - 1.0).abs() < 1e-6, "{mass}");
    let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
    for col in ["density_exact", "density_exp_beta", "density_linear_beta"] {
        let (x, peak) = rows
            .iter()
            .map(|r| (num(r, "x"), num(r, col)))
            .fold((0.0, 0.0), |best, p| if p.1 > best.1 { p } else { best });
        assert!(
            (peak - inv_sqrt_pi).abs() < 1e-3 && x.abs() < 0.01,
            "{col}: {peak} at {x}"
        );
    }
}

#[test]
fn density_fidelity_selection() {
    let out = kerrconc(&[&["density"], &WEAK[..], &["--points", "3", "--fidelity", "exact"]].concat());
    let header = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_owned();
    assert_eq!(header, "lambda,alpha,phi,theta,x,density_exact");
}

#[test]
fn feasibility_rows() {
    let out = kerrconc(&[
        "feasibility",
        "--lambda",
        "0.5",
        "--nu",
        "0.9",
        "--alpha",
        "3e7",
        "--phi",
        "1e-9",
    ]);
    let row = &table(&out)[0];
    assert!((num(row, "rhs") - 0.025_253_8).abs() < 1e-6);
    assert!((num(row, "derived_beta_paper_formula") - 0.071_428_6).abs() < 1e-6);
    assert!((num(row, "derived_beta_exact") - 0.076_923_1).abs() < 1e-6);

    let none = kerrconc(&[
        "feasibility",
        "--lambda",
        "0.5",
        "--nu",
        "1",
        "--alpha",
        "2",
        "--phi",
        "0.1",
    ]);
    let row = &table(&none)[0];
    assert_eq!(num(row, "derived_beta_exact"), 0.0);
    assert_eq!(num(row, "improvement"), 0.0);

    let solved = kerrconc(&[
        "feasibility",
        "--lambda",
        "0.5",
        "--nu",
        "0.9",
        "--margin",
        "1",
        "--phi",
        "1e-5",
    ]);
    let row = &table(&solved)[0];
    assert!((num(row, "alpha") - 2525.38).abs() < 0.01);
}

#[test]
fn sweep_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    std::fs::write(
        &config,
        r#"{"mode":"RUN","axes":{"lambda":[0.2,0.4],"alpha":[1.5],"phi":[0.01],"x":[0.0,0.5]},"format":"json"}"#,
    )
    .unwrap();
    let cfg = config.to_str().unwrap();
    let json = kerrconc(&["sweep", "--config", cfg]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 4);

    let out = dir.path().join("o.csv");
    let status = kerrconc(&[
        "sweep",
        "--config",
        cfg,
        "--lambda",
        "0.6",
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().skip(1).all(|l| l.starts_with("5.9999999999999998e-1,")));
}

#[test]
fn exit_codes_and_stage_names() {
    let bad_flag = kerrconc(&["run", "--lambda", "0.5"]);
    assert_eq!(bad_flag.status.code(), Some(2));

    let domain = kerrconc(&["run", "--lambda", "0.5", "--alpha", "-1", "--phi", "0.1", "--x", "0"]);
    assert_eq!(domain.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&domain.stderr).contains("cross-kerr"));

    let dilution = kerrconc(&[
        "feasibility",
        "--lambda",
        "0.5",
        "--nu",
        "1.2",
        "--alpha",
        "2",
        "--phi",
        "0.1",
    ]);
    assert_eq!(dilution.status.code(), Some(3));

    let missing = kerrconc(&["sweep", "--config", "/nonexistent/sweep.json"]);
    assert_eq!(missing.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(
        &config,
        r#"{"mode":"RUN","axes":{"alpha":[1.0],"phi":[0.1],"x":[0.0]}}"#,
    )
    .unwrap();
    let invalid = kerrconc(&["sweep", "--config", config.to_str().unwrap()]);
    assert_eq!(invalid.status.code(), Some(2));
}

#[test]
fn validate_reports_and_passes() {
    let out = kerrconc(&["validate"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.lines().all(|l| l.starts_with("PASS ") || l.starts_with("INFO ")),
        "{text}"
    );
    assert!(text.contains("INFO printed vs exact beta"));
    assert!(text.contains("0.666666666667"));
}
