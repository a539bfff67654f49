//! Structured outcome of a verification routine: named findings with
//! pass/fail and an optional witness, plus measured facts.

use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Verdict {
    pub findings: Vec<Finding>,
    pub facts: Map<String, Value>,
}

impl Verdict {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn pass(&self) -> bool {
        self.findings.iter().all(|f| f.pass)
    }

    /// Records a finding; `witness` is only evaluated on failure.
    pub fn check(&mut self, name: impl Into<String>, pass: bool, witness: impl FnOnce() -> Value) {
        self.findings.push(Finding {
            name: name.into(),
            pass,
            witness: (!pass).then(witness),
        });
    }

    /// Records a finding whose witness is the first failing item, if any.
    pub fn check_first(&mut self, name: impl Into<String>, failure: Option<Value>) {
        self.findings.push(Finding {
            name: name.into(),
            pass: failure.is_none(),
            witness: failure,
        });
    }

    pub fn fact(&mut self, key: impl Into<String>, value: impl Into<Value>) {
        self.facts.insert(key.into(), value.into());
    }

    pub fn finding(&self, name: &str) -> Option<&Finding> {
        self.findings.iter().find(|f| f.name == name)
    }

    /// First failing finding, for reporting.
    pub fn first_failure(&self) -> Option<&Finding> {
        self.findings.iter().find(|f| !f.pass)
    }

    pub fn absorb(&mut self, prefix: &str, other: Verdict) {
        for mut f in other.findings {
            f.name = format!("{prefix}{}", f.name);
            self.findings.push(f);
        }
        for (k, v) in other.facts {
            self.facts.insert(format!("{prefix}{k}"), v);
        }
    }
}
