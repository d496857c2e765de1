//! The µSPARK language stack: parser, typechecker, permission-based alias checker,
//! reference interpreter, and a dynamic oracle that checks the checker against executions.

pub mod borrowck;
pub mod diag;
pub mod interp;
pub mod oracle;
pub mod permission;
pub mod syntax;
pub mod typecheck;

pub use diag::{DiagKind, Diagnostic};
pub use permission::Permission;
pub use syntax::{parse_source, Path, Program, Selector, SourceLocation, StmtId};
pub use typecheck::{check_program, CheckedProgram, ProcId, Type, TypeTable};
