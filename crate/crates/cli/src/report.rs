use std::collections::BTreeMap;
use std::fmt::Write as _;

use jointchoice::report::{AxiomReport, Witness};
use serde::{Deserialize, Serialize};

pub const REPORT_VERSION: u32 = 1;

/// Verdict words that make the process exit with status 1.
const FAILING: [&str; 3] = ["fail", "infeasible", "non-unique"];

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub report_version: u32,
    pub command: String,
    pub input: Vec<String>,
    pub verdicts: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub witnesses: BTreeMap<String, Vec<Witness>>,
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub details: serde_json::Map<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<String>,
    /// Inline artifact when no `--out` path was given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub artifact: Option<serde_json::Value>,
    pub timing_ms: f64,
}

impl Report {
    pub fn new(command: &str, input: &[&str]) -> Self {
        Report {
            report_version: REPORT_VERSION,
            command: command.into(),
            input: input.iter().map(|s| s.to_string()).collect(),
            ..Report::default()
        }
    }

    pub fn verdict(&mut self, name: &str, value: &str) {
        self.verdicts.insert(name.into(), value.into());
    }

    pub fn axiom(&mut self, name: &str, report: &AxiomReport) {
        self.verdict(name, if report.passed() { "pass" } else { "fail" });
        if !report.witnesses.is_empty() {
            self.witnesses.insert(name.into(), report.witnesses.clone());
        }
    }

    pub fn detail(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.details.insert(key.into(), value.into());
    }

    pub fn exit_code(&self) -> i32 {
        if self.verdicts.values().any(|v| FAILING.contains(&v.as_str())) {
            1
        } else {
            0
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.command, self.input.join(" "));
        for (k, v) in &self.verdicts {
            let _ = writeln!(s, "  {k}: {v}");
        }
        for (k, v) in &self.details {
            let shown = match v {
                serde_json::Value::String(t) => t.clone(),
                other => other.to_string(),
            };
            let _ = writeln!(s, "  {k}: {shown}");
        }
        for (name, ws) in &self.witnesses {
            let _ = writeln!(s, "  {name} witnesses ({}):", ws.len());
            for w in ws.iter().take(20) {
                let sets: Vec<String> = w.sets.iter().map(|x| format!("{{{}}}", x.join(","))).collect();
                let _ = writeln!(
                    s,
                    "    {:?} ({} | {}): {} vs {}",
                    w.kind,
                    w.alternatives.join(","),
                    sets.join(" "),
                    w.lhs,
                    w.rhs
                );
            }
            if ws.len() > 20 {
                let _ = writeln!(s, "    ... {} more", ws.len() - 20);
            }
        }
        for path in &self.outputs {
            let _ = writeln!(s, "  wrote {path}");
        }
        let _ = writeln!(s, "  time: {:.1} ms", self.timing_ms);
        s
    }
}
