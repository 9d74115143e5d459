//! Report types: one record per check, assembled deterministically and
//! serialized with the timestamp isolated to a single header field.

use serde::Serialize;

pub use oplat_core::lattice::Certainty;

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    /// Stable descriptive identifier of the check.
    pub id: String,
    /// Operation under test.
    pub op: String,
    /// Hash of the instance data.
    pub instance: String,
    pub pass: bool,
    pub certainty: Certainty,
    pub tolerance: f64,
    pub detail: String,
    /// Intervals, witness matrices, forcing chains.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<serde_json::Value>,
}

impl CheckRecord {
    pub fn new(
        id: &str,
        op: &str,
        instance: String,
        pass: bool,
        certainty: Certainty,
        tolerance: f64,
        detail: String,
    ) -> Self {
        CheckRecord {
            id: id.to_string(),
            op: op.to_string(),
            instance,
            pass,
            certainty,
            tolerance,
            detail,
            data: None,
        }
    }

    pub fn with_data(mut self, data: serde_json::Value) -> Self {
        self.data = Some(data);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportHeader {
    pub suite: String,
    pub seed: u64,
    pub version: String,
    pub timestamp: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub header: ReportHeader,
    pub total: usize,
    pub failed: usize,
    pub checks: Vec<CheckRecord>,
}

impl Report {
    pub fn new(suite: &str, seed: u64, timestamp: String, checks: Vec<CheckRecord>) -> Self {
        let failed = checks.iter().filter(|c| !c.pass).count();
        Report {
            header: ReportHeader {
                suite: suite.to_string(),
                seed,
                version: env!("CARGO_PKG_VERSION").to_string(),
                timestamp,
            },
            total: checks.len(),
            failed,
            checks,
        }
    }

    pub fn passed(&self) -> bool {
        self.failed == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,op,instance,pass,certainty,tolerance,detail\n");
        for c in &self.checks {
            let certainty = match c.certainty {
                Certainty::Exact => "exact",
                Certainty::ProbeCertified => "probe-certified",
            };
            out.push_str(&format!(
                "{},{},{},{},{},{:e},\"{}\"\n",
                c.id,
                c.op,
                c.instance,
                c.pass,
                certainty,
                c.tolerance,
                c.detail.replace('"', "'")
            ));
        }
        out
    }
}
