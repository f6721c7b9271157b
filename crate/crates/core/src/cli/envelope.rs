use crate::error::Error;
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Stable JSON record printed by every command.
#[derive(Debug, Clone, Serialize)]
pub struct ResultEnvelope {
    pub tool_version: &'static str,
    pub command: String,
    pub inputs: BTreeMap<String, Value>,
    pub results: Value,
    pub checks: Vec<Check>,
    pub timing_ms: u64,
}

impl ResultEnvelope {
    pub fn new(command: String, inputs: BTreeMap<String, Value>, results: Value, checks: Vec<Check>) -> Self {
        ResultEnvelope {
            tool_version: TOOL_VERSION,
            command,
            inputs,
            results,
            checks,
            timing_ms: 0,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("envelope values are serializable")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub observed: Value,
    pub expected: Value,
    pub tolerance: Option<f64>,
}

impl Check {
    fn status(ok: bool) -> CheckStatus {
        if ok {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        }
    }

    /// |observed - expected| <= tol
    pub fn close(name: impl Into<String>, observed: f64, expected: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            status: Self::status((observed - expected).abs() <= tol),
            observed: json!(observed),
            expected: json!(expected),
            tolerance: Some(tol),
        }
    }

    /// observed >= bound
    pub fn at_least(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            status: Self::status(observed >= bound),
            observed: json!(observed),
            expected: json!({ "at_least": bound }),
            tolerance: None,
        }
    }

    pub fn equal(name: impl Into<String>, observed: Value, expected: Value) -> Self {
        Check {
            name: name.into(),
            status: Self::status(observed == expected),
            observed,
            expected,
            tolerance: None,
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool, observed: Value, expected: Value, tolerance: Option<f64>) -> Self {
        Check {
            name: name.into(),
            status: Self::status(ok),
            observed,
            expected,
            tolerance,
        }
    }

    pub fn skipped(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            status: CheckStatus::Skipped,
            observed: Value::Null,
            expected: json!(reason.into()),
            tolerance: None,
        }
    }

    pub fn errored(name: impl Into<String>, e: &Error) -> Self {
        Check {
            name: name.into(),
            status: CheckStatus::Fail,
            observed: json!({ "error": e.to_string() }),
            expected: Value::Null,
            tolerance: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }
}
