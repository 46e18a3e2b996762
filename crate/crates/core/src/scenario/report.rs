use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use super::config::Numerics;
use crate::soliton::SolitonSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub id: String,
    /// The formula the check verifies.
    pub anchor: &'static str,
    pub status: Status,
    pub worst_residual: Option<f64>,
    pub tolerance: Option<f64>,
    pub metrics: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl CheckRecord {
    pub fn new(id: &str, anchor: &'static str) -> Self {
        CheckRecord {
            id: id.to_string(),
            anchor,
            status: Status::NotApplicable,
            worst_residual: None,
            tolerance: None,
            metrics: BTreeMap::new(),
            error: None,
            wall_time_s: None,
        }
    }

    /// Pass when `ok`, fail otherwise.
    pub fn verdict(mut self, ok: bool, worst: f64, tolerance: f64) -> Self {
        self.status = if ok { Status::Pass } else { Status::Fail };
        self.worst_residual = Some(worst);
        self.tolerance = Some(tolerance);
        self
    }

    pub fn not_applicable(mut self, why: impl Into<String>) -> Self {
        self.status = Status::NotApplicable;
        self.metrics.insert("reason".into(), Value::String(why.into()));
        self
    }

    pub fn failed(mut self, err: impl ToString) -> Self {
        self.status = Status::Fail;
        self.error = Some(err.to_string());
        self
    }

    pub fn metric(mut self, key: &str, value: impl Serialize) -> Self {
        self.metrics.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    /// Adds every field of a serializable report as a metric.
    pub fn metrics_from(mut self, report: &impl Serialize) -> Self {
        if let Ok(Value::Object(map)) = serde_json::to_value(report) {
            self.metrics.extend(map);
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Environment {
    pub version: &'static str,
    pub seed: u64,
    pub spec: SolitonSpec,
    pub numerics: Numerics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub not_applicable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportDocument {
    pub environment: Environment,
    pub summary: Summary,
    /// Sorted by id.
    pub records: Vec<CheckRecord>,
}

impl ReportDocument {
    pub fn new(environment: Environment, mut records: Vec<CheckRecord>) -> Self {
        records.sort_by(|a, b| a.id.cmp(&b.id));
        let count = |s: Status| records.iter().filter(|r| r.status == s).count();
        let summary =
            Summary { pass: count(Status::Pass), fail: count(Status::Fail), not_applicable: count(Status::NotApplicable) };
        ReportDocument { environment, summary, records }
    }

    pub fn passed(&self) -> bool {
        self.summary.fail == 0
    }

    pub fn record(&self, id: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
