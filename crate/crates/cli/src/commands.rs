//! The four verbs, each producing a [`Document`].

use dops_core::exactnum::{digits_for_bits, float_to_string, parse_rational};
use dops_core::recurrence::build_monic_sequence;
use dops_core::verify::{self, Status};
use dops_core::{Float, Suite, WeightTable};
use serde_json::{json, Map};

use crate::config::RunConfig;
use crate::output::{CliError, Document, Outcome, Record};

pub fn table(cfg: &RunConfig) -> Result<Document, CliError> {
    let p = cfg.first();
    let phat = build_monic_sequence(&p.recurrence_data(), cfg.n_max);
    let m = phat.to_meixner_type();
    let mut records: Vec<Record> = Vec::new();
    for (n, poly) in phat.entries.iter().enumerate() {
        for (j, a) in poly.coeffs().iter().enumerate() {
            records.push(vec![
                ("family", json!("phat_coeff")),
                ("n", json!(n)),
                ("index", json!(j)),
                ("value", json!(a.to_string())),
            ]);
        }
    }
    for (n, poly) in m.entries.iter().enumerate() {
        for k in 0..=cfg.k_max {
            records.push(vec![
                ("family", json!("m_value")),
                ("n", json!(n)),
                ("index", json!(k)),
                ("value", json!(poly.eval(&(k as u64).into()).to_string())),
            ]);
        }
    }
    let mut diagnostics = Map::new();
    diagnostics.insert("polynomials".into(), json!(phat.len()));
    diagnostics.insert("exact".into(), json!(true));
    Ok(Document {
        params: cfg.params_json(),
        records_key: "results",
        records,
        diagnostics,
        pass: Some(true),
        outcome: Outcome::Ok,
    })
}

pub fn eval(cfg: &RunConfig, x: &str) -> Result<Document, CliError> {
    let p = cfg.first();
    let x = parse_rational(x).map_err(|e| CliError::Usage(format!("--x: {e}")))?;
    let phat = build_monic_sequence(&p.recurrence_data(), cfg.n_max);
    let m = phat.to_meixner_type();
    let xf = Float::with_val(cfg.prec, &x);
    let digits = digits_for_bits(cfg.prec);
    let records = (0..=cfg.n_max)
        .map(|n| {
            vec![
                ("n", json!(n)),
                ("x", json!(x.to_string())),
                ("phat", json!(phat.entries[n].eval(&x).to_string())),
                ("m", json!(m.entries[n].eval(&x).to_string())),
                ("p", json!(float_to_string(&phat.eval_orthonormal(n, &xf), digits))),
            ]
        })
        .collect();
    let mut params = cfg.params_json();
    params.insert("x".into(), json!(x.to_string()));
    let mut diagnostics = Map::new();
    diagnostics.insert("p_digits".into(), json!(digits));
    Ok(Document { params, records_key: "results", records, diagnostics, pass: Some(true), outcome: Outcome::Ok })
}

pub fn weights(cfg: &RunConfig) -> Result<Document, CliError> {
    let p = cfg.first();
    let table = WeightTable::build(p, cfg.k_max, cfg.prec)?;
    let mut records: Vec<Record> = Vec::new();
    for (i, row) in table.diagnostics.iter().enumerate() {
        for (k, d) in row.iter().enumerate() {
            records.push(vec![
                ("i", json!(i)),
                ("k", json!(k)),
                ("w", json!(table.value_string(i, k))),
                ("terms", json!(d.terms)),
                ("precision_used", json!(d.precision_used)),
                ("lost_bits", json!(d.lost_bits)),
                ("stabilized", json!(d.stabilized)),
                ("method", json!(d.method)),
            ]);
        }
    }
    let stabilized = table.all_stabilized() && records.len() == p.d() * (cfg.k_max + 1);
    let mut diagnostics = Map::new();
    diagnostics.insert("entries".into(), json!(records.len()));
    diagnostics.insert("all_stabilized".into(), json!(stabilized));
    diagnostics.insert("digits".into(), json!(digits_for_bits(cfg.prec)));
    Ok(Document {
        params: cfg.params_json(),
        records_key: "weights",
        records,
        diagnostics,
        pass: None,
        outcome: if stabilized { Outcome::Ok } else { Outcome::NonStabilized },
    })
}

pub fn verify(cfg: &RunConfig, suites: Vec<Suite>) -> Result<Document, CliError> {
    let report = verify::run(&suites, &cfg.params, &cfg.suite_config())?;
    let records = report
        .checks
        .iter()
        .map(|c| {
            vec![
                ("suite", json!(c.suite.name())),
                ("check", json!(c.name)),
                ("r", json!(c.r)),
                ("beta", json!(c.beta)),
                ("c", json!(c.c)),
                ("status", json!(status_name(c.status))),
                ("deviation", json!(c.deviation)),
                ("detail", json!(c.detail)),
            ]
        })
        .collect();
    let mut params = cfg.params_json();
    let names: Vec<&str> = suites.iter().map(|s| s.name()).collect();
    params.insert("suites".into(), json!(names.join(",")));
    params.insert("k_cap".into(), json!(cfg.k_cap));
    let info = report.checks.iter().filter(|c| c.status == Status::Info).count();
    let mut diagnostics = Map::new();
    diagnostics.insert("checks".into(), json!(report.checks.len()));
    diagnostics.insert("failed".into(), json!(report.failed));
    diagnostics.insert("non_stabilized".into(), json!(report.non_stabilized));
    diagnostics.insert("informational".into(), json!(info));
    diagnostics.insert("parameter_sets".into(), json!(cfg.params.len()));
    let outcome = if report.failed > 0 {
        Outcome::Failed
    } else if report.non_stabilized > 0 {
        Outcome::NonStabilized
    } else {
        Outcome::Ok
    };
    Ok(Document { params, records_key: "results", records, diagnostics, pass: Some(report.pass), outcome })
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Pass => "pass",
        Status::Fail => "fail",
        Status::NonStabilized => "non_stabilized",
        Status::Info => "info",
    }
}
