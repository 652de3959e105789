//! Report model shared by the human and JSON output paths. Identical
//! verdicts feed both renderings; JSON field order is fixed by struct order
//! and config/metric maps are BTree-backed, so byte-identical reruns only
//! differ in `wall_ms`.

use std::collections::BTreeMap;

use asympair::spaces::{Outcome, Verdict};
use serde_json::Value;

#[derive(serde::Serialize)]
pub struct Report {
    pub version: &'static str,
    pub command: String,
    pub config: BTreeMap<String, Value>,
    pub items: Vec<Item>,
    pub wall_ms: u64,
}

#[derive(serde::Serialize)]
pub struct Item {
    pub label: String,
    pub verdicts: Vec<VerdictOut>,
    pub metrics: BTreeMap<String, Value>,
}

#[derive(serde::Serialize)]
pub struct VerdictOut {
    pub test: String,
    pub outcome: &'static str,
    pub statistic: Value,
    pub margin: Value,
    pub window: [u64; 2],
    pub certified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub fn outcome_str(o: Outcome) -> &'static str {
    match o {
        Outcome::InSpace => "InSpace",
        Outcome::NotInSpace => "NotInSpace",
        Outcome::Inconclusive => "Inconclusive",
    }
}

/// JSON has no infinities; encode them as strings, keep finite values as
/// numbers.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        serde_json::Number::from_f64(v)
            .map(Value::Number)
            .unwrap_or(Value::Null)
    } else if v == f64::INFINITY {
        Value::String("inf".into())
    } else if v == f64::NEG_INFINITY {
        Value::String("-inf".into())
    } else {
        Value::String("nan".into())
    }
}

impl From<&Verdict> for VerdictOut {
    fn from(v: &Verdict) -> Self {
        VerdictOut {
            test: v.test_name.clone(),
            outcome: outcome_str(v.outcome),
            statistic: num(v.statistic),
            margin: num(v.margin),
            window: [v.window.0, v.window.1],
            certified: v.certified,
            note: v.note.clone(),
        }
    }
}

impl Report {
    pub fn new(command: &str, config: BTreeMap<String, Value>) -> Self {
        Report {
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config,
            items: Vec::new(),
            wall_ms: 0,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn render_human(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("asympair {} (v{})\n", self.command, self.version));
        let cfg: Vec<String> = self
            .config
            .iter()
            .map(|(k, v)| format!("{k}={}", compact(v)))
            .collect();
        out.push_str(&format!("config: {}\n", cfg.join(" ")));
        for item in &self.items {
            out.push_str(&format!("* {}\n", item.label));
            for v in &item.verdicts {
                out.push_str(&format!(
                    "    {:<12} {:<13} statistic={} margin={} window=[{},{}] certified={}{}\n",
                    v.test,
                    v.outcome,
                    compact(&v.statistic),
                    compact(&v.margin),
                    v.window[0],
                    v.window[1],
                    v.certified,
                    v.note
                        .as_deref()
                        .map(|n| format!("  ({n})"))
                        .unwrap_or_default()
                ));
            }
            for (k, v) in &item.metrics {
                out.push_str(&format!("    {k} = {}\n", compact(v)));
            }
        }
        out.push_str(&format!("wall_ms: {}\n", self.wall_ms));
        out
    }
}

fn compact(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
