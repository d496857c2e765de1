use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// How rule applications update the permissions of strict extensions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExtensionUpdate {
    /// The extension takes the permission the rule names.
    #[default]
    Assign,
    /// The extension takes the join of the named permission and its current one.
    JoinWithCurrent,
}

/// How the move and borrow rules write permissions onto nodes that already have one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PermUpdates {
    /// Meet with the current permission: prefixes of a moved path and extensions of a
    /// borrowed actual are only ever restricted.
    #[default]
    Meet,
    /// Assign the permission as written. Prefixes left at NO by an earlier `'Access` move
    /// become W again when a descendant is moved, and an out-mode borrow of a moved name
    /// makes its moved extensions readable; both let a writable path alias another
    /// usable one.
    Literal,
}

/// A deliberate defect injected into the checker, used to test that the dynamic oracle
/// notices unsound rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mutation {
    /// `x := n'Access` leaves the permissions of `n` untouched.
    AccessMoveDisabled,
    /// Borrowing an actual checks it but does not restrict it or its prefixes and extensions.
    BorrowNoPropagation,
    /// Moving a deep name keeps the extensions reached through `.all` readable.
    MoveExtensionsDisabled,
    /// The assigned path is checked before the source is moved.
    AssignCheckBeforeMove,
    /// Observing an actual does not make it read-only for the rest of the call.
    ObserveNoRestrict,
    /// Branches are merged with the join instead of the meet.
    FusionUsesLub,
    /// The RW premise of in and in-out borrows is not checked.
    BorrowEntryCheckDisabled,
    /// Borrowed formals are not required to be RW when the procedure returns.
    ExitCheckDisabled,
}

impl Mutation {
    pub const ALL: [Mutation; 8] = [
        Mutation::AccessMoveDisabled,
        Mutation::BorrowNoPropagation,
        Mutation::MoveExtensionsDisabled,
        Mutation::AssignCheckBeforeMove,
        Mutation::ObserveNoRestrict,
        Mutation::FusionUsesLub,
        Mutation::BorrowEntryCheckDisabled,
        Mutation::ExitCheckDisabled,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mutation::AccessMoveDisabled => "access-move-disabled",
            Mutation::BorrowNoPropagation => "borrow-no-propagation",
            Mutation::MoveExtensionsDisabled => "move-extensions-disabled",
            Mutation::AssignCheckBeforeMove => "assign-check-before-move",
            Mutation::ObserveNoRestrict => "observe-no-restrict",
            Mutation::FusionUsesLub => "fusion-uses-lub",
            Mutation::BorrowEntryCheckDisabled => "borrow-entry-check-disabled",
            Mutation::ExitCheckDisabled => "exit-check-disabled",
        }
    }
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mutation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mutation::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mutation `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckerConfig {
    pub extension_update: ExtensionUpdate,
    pub updates: PermUpdates,
    pub mutation: Option<Mutation>,
    /// Record a permission snapshot at every program point.
    pub snapshots: bool,
}

impl Default for CheckerConfig {
    fn default() -> Self {
        CheckerConfig {
            extension_update: ExtensionUpdate::Assign,
            updates: PermUpdates::Meet,
            mutation: None,
            snapshots: true,
        }
    }
}

impl CheckerConfig {
    pub fn with_mutation(mutation: Mutation) -> Self {
        CheckerConfig { mutation: Some(mutation), ..Self::default() }
    }

    pub(crate) fn mutated(&self, m: Mutation) -> bool {
        self.mutation == Some(m)
    }
}
