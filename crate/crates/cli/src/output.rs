//! One document model rendered as JSON or CSV.
//!
//! JSON is `{"params", <records key>, "diagnostics", "pass"?}`. CSV carries the
//! same content: `# params.key=value` and `# diagnostics.key=value` comment
//! lines, an optional `# pass=...` line, then a header and one row per record.

use std::fmt;
use std::process::ExitCode;

use serde_json::{Map, Value};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(dops_core::Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Core(dops_core::Error::NonStabilized(_) | dops_core::Error::NonConvergent { .. }) => {
                ExitCode::from(3)
            }
            _ => ExitCode::from(2),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<dops_core::Error> for CliError {
    fn from(e: dops_core::Error) -> Self {
        CliError::Core(e)
    }
}

/// Process verdict carried by a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Failed,
    NonStabilized,
}

/// A flat record: column name and scalar value, in column order.
pub type Record = Vec<(&'static str, Value)>;

#[derive(Debug, Clone)]
pub struct Document {
    pub params: Map<String, Value>,
    /// `"results"`, or `"weights"` for the weights command.
    pub records_key: &'static str,
    pub records: Vec<Record>,
    pub diagnostics: Map<String, Value>,
    pub pass: Option<bool>,
    pub outcome: Outcome,
}

impl Document {
    pub fn to_json(&self) -> String {
        let mut top = Map::new();
        top.insert("params".into(), Value::Object(self.params.clone()));
        let rows = self
            .records
            .iter()
            .map(|r| Value::Object(r.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()))
            .collect();
        top.insert(self.records_key.into(), Value::Array(rows));
        top.insert("diagnostics".into(), Value::Object(self.diagnostics.clone()));
        if let Some(p) = self.pass {
            top.insert("pass".into(), Value::Bool(p));
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(top)).expect("values are plain JSON");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut s = String::new();
        for (k, v) in &self.params {
            s.push_str(&format!("# params.{k}={}\n", scalar_text(v)));
        }
        for (k, v) in &self.diagnostics {
            s.push_str(&format!("# diagnostics.{k}={}\n", scalar_text(v)));
        }
        if let Some(p) = self.pass {
            s.push_str(&format!("# pass={p}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(e.to_string());
        if let Some(first) = self.records.first() {
            w.write_record(first.iter().map(|(k, _)| *k)).map_err(io)?;
        }
        for r in &self.records {
            w.write_record(r.iter().map(|(_, v)| scalar_text(v))).map_err(io)?;
        }
        let body = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        s.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
        Ok(s)
    }
}

/// Strings unquoted; numbers and booleans in their JSON spelling.
fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
