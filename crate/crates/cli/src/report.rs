//! Machine-readable output of every subcommand. The layout is documented in
//! `docs/report-schema.md`; bump `SCHEMA_VERSION` on any incompatible change.

use serde::{Deserialize, Serialize};

use muspark::interp::{Outcome, RunResult};
use muspark::oracle::{FuzzReport, VerifyReport};
use muspark::Diagnostic;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub file: Option<String>,
    #[serde(flatten)]
    pub body: Body,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Body {
    /// Parse, typecheck and check.
    Diagnostics {
        accepted: bool,
        diagnostics: Vec<Diagnostic>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        snapshots: Vec<Snapshot>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ast: Option<String>,
    },
    Run {
        outcome: String,
        stop: Option<muspark::interp::RuntimeStop>,
        steps: u64,
        choices_used: usize,
        final_memory: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        trace: Option<String>,
    },
    Verify(VerifyReport),
    Fuzz(FuzzReport),
}

/// Permissions at one program point, one line per materialized node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub point: String,
    pub perms: Vec<String>,
}

impl Report {
    pub fn new(command: &str, file: Option<&str>, body: Body) -> Self {
        Report { schema_version: SCHEMA_VERSION, command: command.into(), file: file.map(Into::into), body }
    }
}

pub fn run_body(r: &RunResult, trace: Option<String>) -> Body {
    let (outcome, stop) = match &r.outcome {
        Outcome::Completed => ("completed".to_string(), None),
        Outcome::Stopped(s) => (s.kind.as_str().to_string(), Some(s.clone())),
    };
    Body::Run {
        outcome,
        stop,
        steps: r.steps,
        choices_used: r.choices_used,
        final_memory: muspark::interp::dump_frame(&r.final_frame).lines().map(String::from).collect(),
        trace,
    }
}
