//! One record per line, either as `kind key=value ...` or as JSON. Both
//! modes print the same fields in the same order.

use std::io::Write;

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Human,
    #[value(name = "json-lines")]
    JsonLines,
}

pub struct Output {
    format: Format,
}

fn human_value(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        Value::Number(n) if n.is_f64() => format!("{:.6}", n.as_f64().unwrap_or(f64::NAN)),
        Value::Number(n) => n.to_string(),
        Value::String(s) if s.is_empty() || s.contains(char::is_whitespace) => format!("{s:?}"),
        Value::String(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        Value::Array(a) => a.iter().map(human_value).collect::<Vec<_>>().join(","),
        Value::Object(_) => v.to_string(),
    }
}

impl Output {
    pub fn new(format: Format) -> Self {
        Self { format }
    }

    /// Prints `record` tagged with `kind`.
    pub fn emit<S: Serialize>(&self, kind: &str, record: &S) {
        let mut obj = serde_json::Map::new();
        obj.insert("kind".into(), Value::String(kind.into()));
        match serde_json::to_value(record).expect("record serializes") {
            Value::Object(m) => obj.extend(m),
            other => {
                obj.insert("value".into(), other);
            }
        }
        let line = match self.format {
            Format::JsonLines => Value::Object(obj).to_string(),
            Format::Human => {
                let mut parts = vec![kind.to_string()];
                parts.extend(
                    obj.iter()
                        .skip(1)
                        .map(|(k, v)| format!("{k}={}", human_value(v))),
                );
                parts.join(" ")
            }
        };
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "{line}");
    }
}
