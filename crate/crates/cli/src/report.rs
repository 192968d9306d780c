use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    SkippedBudget,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub vertex: Option<String>,
    pub sigma: Option<u32>,
    /// The statement being checked.
    pub statement: String,
    pub status: Status,
    pub values: BTreeMap<String, Value>,
    pub witness: Option<String>,
    pub millis: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogInfo {
    pub vertex: String,
    pub k: u32,
    pub entries: usize,
    pub dims: Vec<usize>,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub version: String,
    pub params: RunConfig,
    pub catalogs: Vec<CatalogInfo>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(params: RunConfig) -> Self {
        Report { version: env!("CARGO_PKG_VERSION").to_string(), params, catalogs: Vec::new(), checks: Vec::new() }
    }

    pub fn failed(&self) -> usize {
        self.checks.iter().filter(|c| c.status == Status::Fail).count()
    }

    /// One line per check.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let tag = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::SkippedBudget => "SKIP",
            };
            let who = match (&c.vertex, c.sigma) {
                (Some(v), Some(s)) => format!(" [{v} σ{s}]"),
                (Some(v), None) => format!(" [{v}]"),
                _ => String::new(),
            };
            out.push_str(&format!("{tag} {}/{}{who}", c.suite, c.name));
            if let Some(w) = &c.witness {
                out.push_str(&format!(": {w}"));
            }
            out.push('\n');
        }
        out.push_str(&format!("{} checks, {} failed\n", self.checks.len(), self.failed()));
        out
    }
}

/// Builder for one [`Check`].
pub struct CheckBuilder {
    check: Check,
    start: Instant,
}

impl CheckBuilder {
    pub fn new(suite: &str, name: &str, statement: &str) -> Self {
        CheckBuilder {
            check: Check {
                suite: suite.into(),
                name: name.into(),
                vertex: None,
                sigma: None,
                statement: statement.into(),
                status: Status::Pass,
                values: BTreeMap::new(),
                witness: None,
                millis: 0,
            },
            start: Instant::now(),
        }
    }

    pub fn vertex(mut self, v: impl ToString) -> Self {
        self.check.vertex = Some(v.to_string());
        self
    }

    pub fn sigma(mut self, id: u32) -> Self {
        self.check.sigma = Some(id);
        self
    }

    pub fn value(&mut self, key: &str, v: impl Serialize) -> &mut Self {
        self.check.values.insert(key.into(), serde_json::to_value(v).expect("serializable"));
        self
    }

    /// Fails the check unless `ok`; the first failure's witness is kept.
    pub fn require(&mut self, ok: bool, witness: impl FnOnce() -> String) -> &mut Self {
        if !ok && self.check.status != Status::Fail {
            self.check.status = Status::Fail;
            self.check.witness = Some(witness());
        }
        self
    }

    pub fn skip(&mut self, why: String) -> &mut Self {
        self.check.status = Status::SkippedBudget;
        self.check.witness = Some(why);
        self
    }

    pub fn finish(mut self) -> Check {
        self.check.millis = self.start.elapsed().as_millis() as u64;
        self.check
    }
}
