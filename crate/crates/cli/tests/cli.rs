use std::process::{Command, Output};

use serde_json::Value;

fn dops(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dops")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> (Value, i32) {
    let out = dops(args);
    let v = serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&out.stderr)));
    (v, out.status.code().unwrap())
}

/// Rows of a CSV document, skipping `#` lines, keyed by header.
fn csv_rows(text: &str) -> Vec<Vec<(String, String)>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    rdr.records().map(|r| header.iter().cloned().zip(r.unwrap().iter().map(String::from)).collect()).collect()
}

fn csv_comments(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.strip_prefix("# "))
        .map(|l| {
            let (k, v) = l.split_once('=').unwrap();
            (k.to_string(), v.to_string())
        })
        .collect()
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// JSON and CSV renderings of the same command carry identical content.
fn assert_round_trip(args: &[&str], key: &str) {
    let (j, code_j) = json(args);
    let mut csv_args = args.to_vec();
    csv_args.extend(["--format", "csv"]);
    let out = dops(&csv_args);
    assert_eq!(out.status.code().unwrap(), code_j);
    let text = String::from_utf8(out.stdout).unwrap();

    let rows = csv_rows(&text);
    let records = j[key].as_array().unwrap();
    assert_eq!(rows.len(), records.len());
    for (row, rec) in rows.iter().zip(records) {
        let obj = rec.as_object().unwrap();
        assert_eq!(row.len(), obj.len());
        for (k, v) in row {
            assert_eq!(&scalar(&obj[k]), v, "column {k}");
        }
    }

    let mut expected = Vec::new();
    for block in ["params", "diagnostics"] {
        for (k, v) in j[block].as_object().unwrap() {
            expected.push((format!("{block}.{k}"), scalar(v)));
        }
    }
    if let Some(p) = j.get("pass") {
        expected.push(("pass".into(), scalar(p)));
    }
    assert_eq!(csv_comments(&text), expected);
}

#[test]
fn table_first_degree_row() {
    let (v, code) = json(&["table", "--r", "2", "--beta", "3/2", "--c", "1/2", "--nmax", "1", "--kmax", "0"]);
    assert_eq!(code, 0);
    let coeffs: Vec<&str> = v["results"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["family"] == "phat_coeff" && r["n"] == 1)
        .map(|r| r["value"].as_str().unwrap())
        .collect();
    assert_eq!(coeffs, ["3/2", "1"]);
}

#[test]
fn table_degree_zero_is_single_row() {
    let (v, _) = json(&["table", "--nmax", "0", "--kmax", "0"]);
    let rows: Vec<&Value> = v["results"].as_array().unwrap().iter().filter(|r| r["family"] == "phat_coeff").collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["value"], "1");
}

#[test]
fn invalid_c_is_a_domain_error() {
    let out = dops(&["table", "--c", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("(0,1)"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(dops(&["table", "--prec", "32"]).status.code(), Some(2));
    assert_eq!(dops(&["table", "--tol", "-1"]).status.code(), Some(2));
    assert_eq!(dops(&["verify", "everything"]).status.code(), Some(2));
    assert_eq!(dops(&["eval", "--x", "one"]).status.code(), Some(2));
}

#[test]
fn eval_matches_table() {
    let (v, code) = json(&["eval", "--x", "2", "--nmax", "3", "--r", "1", "--beta", "1", "--c", "1/2"]);
    assert_eq!(code, 0);
    let rows = v["results"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    // r = 1, beta = 1, c = 1/2: P̂_1(k) = k - 1, M_1 = P̂_1 / beta.
    assert_eq!(rows[1]["phat"], "1");
    assert_eq!(rows[1]["m"], "1");
    assert_eq!(rows[0]["p"].as_str().unwrap().parse::<f64>().unwrap(), 1.0);
}

#[test]
fn verify_genfunc_default_grid_passes() {
    let (v, code) = json(&["verify", "genfunc"]);
    assert_eq!(code, 0);
    assert_eq!(v["pass"], true);
    assert_eq!(v["diagnostics"]["parameter_sets"], 12);
    for k in ["params", "results", "diagnostics", "pass"] {
        assert!(v.get(k).is_some(), "missing {k}");
    }
}

#[test]
fn verify_identities_n12_passes() {
    let (v, code) = json(&["verify", "identities", "--N", "12", "--r", "2"]);
    assert_eq!(code, 0, "{v:#}");
}

#[test]
fn verify_weights_r1_includes_closed_form() {
    let (v, code) = json(&["verify", "weights", "--r", "1"]);
    assert_eq!(code, 0);
    let names: Vec<&str> = v["results"].as_array().unwrap().iter().map(|r| r["check"].as_str().unwrap()).collect();
    assert!(names.iter().any(|n| n.contains("(1-c)^beta c^k")));
}

#[test]
fn verify_failure_exits_one() {
    // The closed form is met to about 1e-77 at 256 bits; a tighter tolerance must fail.
    let (v, code) = json(&["verify", "weights", "--r", "1", "--tol", "1e-90"]);
    assert_eq!(code, 1);
    assert_eq!(v["pass"], false);
}

#[test]
fn verify_non_stabilized_exits_three() {
    let (v, code) = json(&["verify", "weights", "--r", "2", "--nmax", "5", "--kcap", "128"]);
    assert_eq!(code, 3);
    assert!(v["diagnostics"]["non_stabilized"].as_u64().unwrap() > 0);
}

#[test]
fn weights_r1_closed_form() {
    let (v, code) = json(&["weights", "--r", "1", "--beta", "1", "--c", "1/2", "--kmax", "6", "--prec", "128"]);
    assert_eq!(code, 0);
    for row in v["weights"].as_array().unwrap() {
        let k = row["k"].as_u64().unwrap() as i32;
        let w: f64 = row["w"].as_str().unwrap().parse().unwrap();
        assert!((w - 0.5f64.powi(k + 1)).abs() < 1e-15, "k={k} w={w}");
    }
}

#[test]
fn weights_kmax_zero_r2() {
    let (v, code) = json(&["weights", "--r", "2", "--kmax", "0"]);
    assert_eq!(code, 0);
    let rows = v["weights"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r["stabilized"] == true));
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["params", "weights", "diagnostics"]);
}

#[test]
fn long_weight_rows_use_the_recurrence() {
    let (v, code) = json(&["weights", "--r", "2", "--kmax", "100"]);
    assert_eq!(code, 0);
    assert_eq!(v["diagnostics"]["all_stabilized"], true);
    assert_eq!(v["weights"][100]["method"], "recurrence");
}

#[test]
fn output_is_deterministic() {
    let args = ["weights", "--r", "2", "--kmax", "10", "--format", "csv"];
    assert_eq!(dops(&args).stdout, dops(&args).stdout);
    let args = ["verify", "lowering"];
    assert_eq!(dops(&args).stdout, dops(&args).stdout);
}

#[test]
fn csv_and_json_agree() {
    assert_round_trip(&["table", "--nmax", "4", "--kmax", "3"], "results");
    assert_round_trip(&["eval", "--x", "3/7", "--nmax", "4"], "results");
    assert_round_trip(&["weights", "--r", "2", "--kmax", "5"], "weights");
    assert_round_trip(&["verify", "lowering", "--r", "3"], "results");
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    let out = dops(&["table", "--nmax", "2", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["params"]["n_max"], 2);
}
