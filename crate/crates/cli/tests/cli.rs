use nalgebra::DMatrix;
use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

fn robertson(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robertson")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn matrix(v: &Value) -> DMatrix<f64> {
    let rows: Vec<Vec<f64>> = serde_json::from_value(v.clone()).unwrap();
    DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn first_report(doc: &Value) -> &Value {
    &doc["states"][0]["reports"][0]
}

#[test]
fn su11_example_is_minimized() {
    let o = robertson(&["ris", "--family", "su11", "--k", "1/4", "--u", "1.4142", "--v", "-1", "--w", "0", "--z", "-1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let d = json(&o);
    assert_eq!(d["schema"], 1);
    let ineq = &first_report(&d)["inequalities"];
    let (ds, dc) = (f(&ineq["det_sigma"]), f(&ineq["det_c"]));
    assert!((ds - dc).abs() < 1e-8 * dc.abs().max(1.0), "{ds} vs {dc}");
    assert!(f(&d["states"][0]["residual"]) < 1e-8);
    assert_eq!(first_report(&d)["squeezing"][1]["observable"], "K2");
}

#[test]
fn su2_example_has_three_states() {
    let o = robertson(&["ris", "--family", "su2", "--j", "1", "--beta", "1,0,0"]);
    assert_eq!(code(&o), 0);
    let d = json(&o);
    let states = d["states"].as_array().unwrap();
    assert_eq!(states.len(), 3);
    for (s, m) in states.iter().zip([1.0, 0.0, -1.0]) {
        let z = &s["eigenvalues"][0];
        assert!((f(&z[0]) - m).abs() < 1e-12 && f(&z[1]).abs() < 1e-12);
    }
}

#[test]
fn canonical_example_closes_the_gap() {
    let o = robertson(&["ris", "--family", "canonical", "--N", "1", "--r", "0.5", "--alpha", "0"]);
    assert_eq!(code(&o), 0);
    let d = json(&o);
    assert!(f(&first_report(&d)["inequalities"]["robertson_gap"]).abs() < 1e-8);
}

#[test]
fn json_gaps_recompute_from_stored_matrices() {
    let runs: [&[&str]; 4] = [
        &["ris", "--family", "su11", "--k", "3/4", "--u", "1,0.2", "--v", "0.3,-0.1", "--z", "0.5,0.5"],
        &["ris", "--family", "canonical", "--N", "2", "--r", "0.3", "--theta", "0.4", "--alpha", "0.5,0.1"],
        &["ris", "--family", "squared", "--parity", "odd", "--u", "1.25", "--v", "-0.75", "--z", "0.4"],
        &["report", "--random", "mixed", "--seed", "7", "--modes", "2", "--dim", "8"],
    ];
    for args in runs {
        let o = robertson(args);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let d = json(&o);
        let r = if d["command"] == "report" { &d["report"] } else { first_report(&d) };
        let sigma = matrix(&r["sigma"]);
        let c = matrix(&r["c"]);
        let gap = sigma.determinant() - c.determinant();
        let stored = f(&r["inequalities"]["robertson_gap"]);
        assert!((gap - stored).abs() <= 1e-12 * stored.abs().max(1.0), "{args:?}: {gap} vs {stored}");
        let prod: f64 = sigma.diagonal().iter().product();
        assert!((prod - sigma.determinant() - f(&r["inequalities"]["product_gap"])).abs() <= 1e-12 * prod.max(1.0));
    }
}

#[test]
fn csv_fields_reparse_bit_identically() {
    let args = ["sweep", "--family", "su11", "--k", "1/4", "--z", "-1", "--x-from", "0", "--x-to", "2", "--x-step", "0.5"];
    let csv_out = robertson(&args);
    assert_eq!(code(&csv_out), 0);
    let mut json_args = args.to_vec();
    json_args.extend(["--format", "json"]);
    let doc = json(&robertson(&json_args));
    let text = String::from_utf8(csv_out.stdout).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header, doc["columns"].as_array().unwrap().iter().map(|c| c.as_str().unwrap()).collect::<Vec<_>>());
    for (line, row) in lines.zip(doc["rows"].as_array().unwrap()) {
        for (field, cell) in line.split(',').zip(row.as_array().unwrap()) {
            if let (Ok(x), true) = (field.parse::<f64>(), cell.is_f64()) {
                assert_eq!(x.to_bits(), f(cell).to_bits(), "{field}");
                assert_eq!(format!("{x:.16e}"), field);
            }
        }
    }
}

#[test]
fn exit_codes_are_stable() {
    let dir = TempDir::new().unwrap();
    let asym = write(&dir, "asym.csv", "1,2\n3,1\n");
    let indefinite = write(&dir, "indef.csv", "1,2\n2,1\n");
    let ragged = write(&dir, "ragged.csv", "1,0\n0\n");
    let cases: [(&[&str], i32); 9] = [
        (&["ris", "--family", "su11", "--k", "1/4", "--u", "1", "--v", "0", "--z", "0", "--tol", "1"], 2),
        (&["ris", "--family", "su11", "--k", "1/3", "--u", "1", "--v", "0", "--z", "0"], 2),
        (&["ris", "--family", "su11", "--k", "1/2", "--u", "1", "--v", "0.5"], 2),
        (&["diagonalize", "--matrix", &asym], 2),
        (&["diagonalize", "--matrix", &indefinite], 2),
        (&["diagonalize", "--matrix", &ragged], 2),
        (&["ris", "--family", "su11", "--k", "1/2", "--u", "1", "--v", "2", "--z", "1"], 3),
        (&["ris", "--family", "canonical", "--r", "3", "--alpha", "1,1"], 4),
        (&["verify", "--perturb-sigma", "1e-3"], 1),
    ];
    for (args, expected) in cases {
        let o = robertson(args);
        assert_eq!(code(&o), expected, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = robertson(&["ris", "--family", "su11", "--k", "1/2", "--u", "1", "--v", "2", "--z", "1"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("non-normalizable"));
}

#[test]
fn verify_default_passes_and_perturbation_names_robertson_gap() {
    let ok = robertson(&["verify"]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    let d = json(&ok);
    assert_eq!(d["pass"], true);
    assert!(d["properties"].as_array().unwrap().len() >= 10);

    let bad = robertson(&["verify", "--perturb-sigma", "1e-3"]);
    assert_eq!(code(&bad), 1);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("robertson_gap"));
    let d = json(&bad);
    let failing: Vec<&str> = d["properties"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|p| p["pass"] == false)
        .map(|p| p["name"].as_str().unwrap())
        .collect();
    assert_eq!(failing, ["robertson_gap"]);
}

#[test]
fn custom_seeds_reproduce() {
    let dir = TempDir::new().unwrap();
    let seeds = write(&dir, "custom.txt", "# two seeds\n5\n\n1234567\n");
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = robertson(&["verify", "--seeds", &seeds, "--output", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let d: Value = serde_json::from_slice(&ta).unwrap();
    assert_eq!(d["seeds"], serde_json::json!([5, 1234567]));
    let garbage = write(&dir, "bad.txt", "12\nnot-a-seed\n");
    assert_eq!(code(&robertson(&["verify", "--seeds", &garbage])), 2);
}

fn sweep_rows(args: &[&str]) -> (Vec<String>, Vec<Vec<Value>>) {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let o = robertson(&all);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let d = json(&o);
    let cols = d["columns"].as_array().unwrap().iter().map(|c| c.as_str().unwrap().to_string()).collect();
    let rows = d["rows"].as_array().unwrap().iter().map(|r| r.as_array().unwrap().clone()).collect();
    (cols, rows)
}

fn column(cols: &[String], name: &str) -> usize {
    cols.iter().position(|c| c == name).unwrap()
}

#[test]
fn squeezing_curve_decreases() {
    let (cols, rows) =
        sweep_rows(&["sweep", "--family", "su11", "--k", "1/4", "--z", "-1", "--x-from", "0", "--x-to", "4", "--x-step", "0.25"]);
    assert_eq!(rows.len(), 17);
    let k2 = column(&cols, "delta_k2");
    let dk2: Vec<f64> = rows.iter().map(|r| f(&r[k2])).collect();
    assert!(dk2.windows(2).all(|w| w[1] < w[0]), "{dk2:?}");
    let idx = column(&cols, "index");
    assert!(rows.iter().enumerate().all(|(i, r)| r[idx] == i));
    let m = column(&cols, "minimized");
    assert!(rows.iter().all(|r| r[m] == true));
}

#[test]
fn joint_squeezing_flags_match_their_columns() {
    let (cols, rows) = sweep_rows(&[
        "sweep", "--family", "squared", "--parity", "even", "--z", "0.5", "--x-from", "0", "--x-to", "1", "--x-step", "0.25",
    ]);
    let (dk2, dp, joint) = (column(&cols, "delta_k2"), column(&cols, "delta_p"), column(&cols, "joint_squeezed"));
    let reference = (0.25f64 / 2.0).sqrt();
    let mut any = false;
    for r in &rows {
        let expect = f(&r[dk2]) < reference && f(&r[dp]) < std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(r[joint] == true, expect);
        any |= expect;
    }
    assert!(any, "no jointly squeezed row");
}

#[test]
fn group_cs_sweep_reports_variances_against_k() {
    let (cols, rows) =
        sweep_rows(&["sweep", "--family", "group-cs", "--k", "1/2", "--x-from", "0", "--x-to", "0.8", "--x-step", "0.2"]);
    let (v1, v2) = (column(&cols, "var_k1"), column(&cols, "var_k2"));
    let (a1, a2) = (column(&cols, "var_k1_above_k"), column(&cols, "var_k2_above_k"));
    for r in &rows {
        assert_eq!(r[a1] == true, f(&r[v1]) > 0.5);
        assert_eq!(r[a2] == true, f(&r[v2]) > 0.5);
    }
    // the vacuum sits at k/2
    assert!((f(&rows[0][v1]) - 0.25).abs() < 1e-12);
}

#[test]
fn thread_cap_does_not_change_output() {
    let args = ["sweep", "--family", "su11", "--k", "1/2", "--z", "0.3", "--x-from", "0", "--x-to", "3", "--x-step", "0.1"];
    let run = |threads: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_robertson"));
        cmd.args(args);
        match threads {
            Some(t) => cmd.env("ROBERTSON_THREADS", t),
            None => cmd.env_remove("ROBERTSON_THREADS"),
        };
        cmd.output().unwrap()
    };
    let one = run(Some("1"));
    let many = run(Some("4"));
    let default = run(None);
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, many.stdout);
    assert_eq!(one.stdout, default.stdout);
    assert_eq!(code(&run(Some("zero"))), 2);
}

#[test]
fn diagonalize_half_identity_is_trivial() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "half.csv", "# vacuum\n0.5,0,0,0\n0,0.5,0,0\n0,0,0.5,0\n0,0,0,0.5\n");
    let o = robertson(&["diagonalize", "--matrix", &m]);
    assert_eq!(code(&o), 0);
    let d = json(&o);
    assert_eq!(matrix(&d["lambda"]), DMatrix::identity(4, 4));
    for p in d["symplectic"]["pair_products"].as_array().unwrap() {
        assert!((f(p) - 0.25).abs() < 1e-15);
    }
    assert_eq!(d["class"], "Symplectic");
}

#[test]
fn diagonalize_random_spd_certificate() {
    let dir = TempDir::new().unwrap();
    let a = DMatrix::from_row_slice(4, 4, &[1.0, 0.3, -0.2, 0.5, 0.1, 0.9, 0.4, -0.3, -0.6, 0.2, 1.1, 0.0, 0.3, -0.1, 0.2, 0.7]);
    let s = &a * a.transpose() + DMatrix::identity(4, 4) * 0.2;
    let text: String = (0..4)
        .map(|i| (0..4).map(|j| format!("{:.17e}", s[(i, j)])).collect::<Vec<_>>().join(",") + "\n")
        .collect();
    let m = write(&dir, "spd.csv", &text);
    let o = robertson(&["diagonalize", "--matrix", &m]);
    assert_eq!(code(&o), 0);
    let d = json(&o);
    assert!(f(&d["invariants"]["max_drift"]) < 1e-9);
    let lambda = matrix(&d["lambda"]);
    let out = &lambda * &s * lambda.transpose();
    let off = &out - DMatrix::from_diagonal(&out.diagonal());
    assert!(off.amax() < 1e-9);
    for row in d["symplectic"]["trace_ur"].as_array().unwrap() {
        assert!((f(&row["lhs"]) - f(&row["williamson"])).abs() < 1e-8 * f(&row["lhs"]).max(1.0));
    }
    let csv = robertson(&["diagonalize", "--matrix", &m, "--format", "csv"]);
    let rows: Vec<Vec<f64>> =
        String::from_utf8(csv.stdout).unwrap().lines().map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(DMatrix::from_fn(4, 4, |i, j| rows[i][j]), lambda);
}

#[test]
fn diagonalize_spin_sigma_orthogonally() {
    let dir = TempDir::new().unwrap();
    let psi = write(&dir, "psi.csv", "1\n0.6\n0.3,0.4\n");
    let rep = json(&robertson(&["report", "--observables", "spin", "--j", "1", "--state", &psi]));
    let sigma = matrix(&rep["report"]["sigma"]);
    assert!(sigma.iter().enumerate().any(|(i, x)| i % 4 != 0 && x.abs() > 0.1), "state should be correlated");
    let text: String = (0..3)
        .map(|i| (0..3).map(|j| format!("{:.17e}", sigma[(i, j)])).collect::<Vec<_>>().join(",") + "\n")
        .collect();
    let m = write(&dir, "spin.csv", &text);
    let d = json(&robertson(&["diagonalize", "--matrix", &m, "--mode", "orthogonal"]));
    assert!(f(&d["max_offdiagonal"]) < 1e-10);
    assert_eq!(d["class"], "Orthogonal");
    // the report's own rotation agrees
    let rotated = matrix(&rep["spin_rotation"]["sigma_prime"]);
    assert!((rotated.trace() - sigma.trace()).abs() < 1e-12);
}

#[test]
fn output_goes_to_the_named_file() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("report.json");
    let o = robertson(&["ris", "--family", "even-odd", "--alpha", "0.8", "--parity", "even", "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let d: Value = serde_json::from_slice(&std::fs::read(Path::new(&out)).unwrap()).unwrap();
    assert_eq!(d["family"], "even-odd");
    let missing = dir.path().join("no/such/dir/x.json");
    let o = robertson(&["ris", "--family", "even-odd", "--alpha", "0.8", "--parity", "even", "-o", missing.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn report_needs_an_explicit_seed() {
    assert_eq!(code(&robertson(&["report", "--random", "pure"])), 2);
    let dir = TempDir::new().unwrap();
    let state = write(&dir, "psi.csv", "1,0\n0,1\n0\n0\n");
    let o = robertson(&["report", "--state", &state]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let d = json(&o);
    assert_eq!(d["state"]["mode_dim"], 4);
}
