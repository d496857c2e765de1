//! Structured diagnostics shared by every phase.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::permission::Permission;
use crate::syntax::{ParseError, SourceLocation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagKind {
    LexError,
    ParseError,
    ActualMustBeName,
    WriteToInParameter,
    NoShadowing,
    DuplicateField,
    DuplicateParameter,
    RecordSelfUse,
    UnknownVariable,
    UnknownType,
    UnknownProcedure,
    NoSuchField,
    DerefOfNonAccess,
    TypeMismatch,
    ArityMismatch,
    ObserveRequiresReadable,
    ReadRequiresReadable,
    BorrowRequiresRw,
    BorrowOutRequiresW,
    MoveRequiresRw,
    AssignRequiresWritable,
    BorrowedNotRwAtExit,
}

impl DiagKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagKind::LexError => "lex-error",
            DiagKind::ParseError => "parse-error",
            DiagKind::ActualMustBeName => "actual-must-be-name",
            DiagKind::WriteToInParameter => "write-to-in-parameter",
            DiagKind::NoShadowing => "no-shadowing",
            DiagKind::DuplicateField => "duplicate-field",
            DiagKind::DuplicateParameter => "duplicate-parameter",
            DiagKind::RecordSelfUse => "record-self-use",
            DiagKind::UnknownVariable => "unknown-variable",
            DiagKind::UnknownType => "unknown-type",
            DiagKind::UnknownProcedure => "unknown-procedure",
            DiagKind::NoSuchField => "no-such-field",
            DiagKind::DerefOfNonAccess => "deref-of-non-access",
            DiagKind::TypeMismatch => "type-mismatch",
            DiagKind::ArityMismatch => "arity-mismatch",
            DiagKind::ObserveRequiresReadable => "observe-requires-readable",
            DiagKind::ReadRequiresReadable => "read-requires-readable",
            DiagKind::BorrowRequiresRw => "borrow-requires-rw",
            DiagKind::BorrowOutRequiresW => "borrow-out-requires-w",
            DiagKind::MoveRequiresRw => "move-requires-rw",
            DiagKind::AssignRequiresWritable => "assign-requires-writable",
            DiagKind::BorrowedNotRwAtExit => "borrowed-not-rw-at-exit",
        }
    }

    pub fn is_permission_error(self) -> bool {
        matches!(
            self,
            DiagKind::ObserveRequiresReadable
                | DiagKind::ReadRequiresReadable
                | DiagKind::BorrowRequiresRw
                | DiagKind::BorrowOutRequiresW
                | DiagKind::MoveRequiresRw
                | DiagKind::AssignRequiresWritable
                | DiagKind::BorrowedNotRwAtExit
        )
    }
}

impl fmt::Display for DiagKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A rule violation. `rule` is the inference rule's identifier where one applies
/// (`T-assignExpr`, `P-B-entryPointInOut`, ...) and the legality condition name otherwise.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub rule: String,
    pub kind: DiagKind,
    pub path: Option<String>,
    pub required: Vec<Permission>,
    pub actual: Option<Permission>,
    pub location: SourceLocation,
    pub message: String,
}

impl Diagnostic {
    pub fn new(rule: impl Into<String>, kind: DiagKind, location: SourceLocation, message: impl Into<String>) -> Self {
        Diagnostic {
            rule: rule.into(),
            kind,
            path: None,
            required: Vec::new(),
            actual: None,
            location,
            message: message.into(),
        }
    }

    pub fn with_path(mut self, path: impl fmt::Display) -> Self {
        self.path = Some(path.to_string());
        self
    }

    pub fn with_perms(mut self, required: &[Permission], actual: Permission) -> Self {
        self.required = required.to_vec();
        self.actual = Some(actual);
        self
    }

    pub fn from_parse_error(e: &ParseError) -> Self {
        let kind = match e {
            ParseError::Lex(_) => DiagKind::LexError,
            ParseError::Unexpected { .. } => DiagKind::ParseError,
        };
        let text = e.to_string();
        let prefix = format!("{}: ", e.loc());
        let message = text.strip_prefix(&prefix).unwrap_or(&text).to_string();
        Diagnostic::new("grammar", kind, e.loc(), message)
    }

    /// Single-line stable rendering used by golden files.
    pub fn machine(&self) -> String {
        let mut s = format!("{}:{} rule={} kind={}", self.location.line, self.location.column, self.rule, self.kind);
        if let Some(p) = &self.path {
            s.push_str(&format!(" path={p}"));
        }
        if !self.required.is_empty() {
            let req: Vec<&str> = self.required.iter().map(|k| k.as_str()).collect();
            s.push_str(&format!(" required={{{}}}", req.join(",")));
        }
        if let Some(a) = self.actual {
            s.push_str(&format!(" actual={a}"));
        }
        s
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: error[{}]: {}", self.location, self.rule, self.message)
    }
}
