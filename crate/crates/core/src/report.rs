//! Machine-readable report rendering: flat `key=value` blocks and JSON lines.

use serde::Serialize;

/// A report that renders as one `key=value` pair per line.
pub trait KeyValueReport {
    fn fields(&self) -> Vec<(&'static str, String)>;

    fn to_key_value(&self) -> String {
        self.fields()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}

/// Serializes one report as a single JSON line (no trailing newline).
pub fn to_json_line<R: Serialize>(report: &R) -> String {
    serde_json::to_string(report).expect("reports serialize to JSON")
}

/// Fixed-point formatting used for fractions in text reports.
pub(crate) fn fraction(v: f64) -> String {
    format!("{v:.6}")
}
