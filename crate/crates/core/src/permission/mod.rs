//! The permission lattice and lazy permission trees.

mod lattice;
mod tree;

pub use lattice::Permission;
pub use tree::{ChildPerms, ExtFilter, PermEnv, PermTree, VarPerm};
