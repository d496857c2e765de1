//! Memory trees: values whose nodes carry cell identities. Access targets are shared
//! through `Arc` and copied on write, so two paths alias exactly when they reach the same cell.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::syntax::{Path, Selector};
use crate::typecheck::{Type, TypeTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell(pub u64);

/// Monotone source of cells.
#[derive(Clone, Debug, Default)]
pub struct CellAllocator {
    next: u64,
}

impl CellAllocator {
    pub fn fresh(&mut self) -> Cell {
        let c = Cell(self.next);
        self.next += 1;
        c
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MemTree {
    Int { cell: Cell, value: i64 },
    Record { cell: Cell, fields: Vec<(String, MemTree)> },
    Access { cell: Cell, target: Option<Arc<MemTree>> },
}

impl MemTree {
    /// Default-initialized tree of type `ty`: integers are 0, access values are null.
    pub fn fresh(ty: &Type, table: &TypeTable, cells: &mut CellAllocator) -> MemTree {
        match ty {
            Type::Integer => MemTree::Int { cell: cells.fresh(), value: 0 },
            Type::Access(_) | Type::Null => MemTree::Access { cell: cells.fresh(), target: None },
            Type::Record(r) => {
                let cell = cells.fresh();
                let fields = table
                    .record(*r)
                    .fields
                    .iter()
                    .map(|(name, t)| (name.clone(), MemTree::fresh(t, table, cells)))
                    .collect();
                MemTree::Record { cell, fields }
            }
        }
    }

    pub fn cell(&self) -> Cell {
        match self {
            MemTree::Int { cell, .. } | MemTree::Record { cell, .. } | MemTree::Access { cell, .. } => *cell,
        }
    }

    /// Same structure and values, every cell fresh.
    pub fn recell(&self, cells: &mut CellAllocator) -> MemTree {
        match self {
            MemTree::Int { value, .. } => MemTree::Int { cell: cells.fresh(), value: *value },
            MemTree::Record { fields, .. } => {
                let cell = cells.fresh();
                MemTree::Record { cell, fields: fields.iter().map(|(n, t)| (n.clone(), t.recell(cells))).collect() }
            }
            MemTree::Access { target, .. } => {
                let cell = cells.fresh();
                MemTree::Access { cell, target: target.as_ref().map(|t| Arc::new(t.recell(cells))) }
            }
        }
    }

    /// The assignment operator: `self` keeps its cells and takes the values of `src`;
    /// access nodes take `src`'s target, shared.
    pub fn assign_from(&mut self, src: &MemTree) {
        match (self, src) {
            (MemTree::Int { value, .. }, MemTree::Int { value: v, .. }) => *value = *v,
            (MemTree::Access { target, .. }, MemTree::Access { target: t, .. }) => *target = t.clone(),
            (MemTree::Record { fields, .. }, MemTree::Record { fields: src_fields, .. }) => {
                for ((_, d), (_, s)) in fields.iter_mut().zip(src_fields) {
                    d.assign_from(s);
                }
            }
            (d, s) => panic!("assignment between trees of different shapes: {d:?} := {s:?}"),
        }
    }

    /// Child reached by one selector; `None` on a null dereference.
    pub fn child(&self, sel: &Selector) -> Option<&MemTree> {
        match (self, sel) {
            (MemTree::Record { fields, .. }, Selector::Field(f)) => {
                Some(&fields.iter().find(|(n, _)| n == f).unwrap_or_else(|| panic!("no field `{f}`")).1)
            }
            (MemTree::Access { target, .. }, Selector::Deref) => target.as_deref(),
            (t, s) => panic!("selector {s:?} does not apply to {t:?}"),
        }
    }

    pub fn child_mut(&mut self, sel: &Selector) -> Option<&mut MemTree> {
        match (self, sel) {
            (MemTree::Record { fields, .. }, Selector::Field(f)) => {
                Some(&mut fields.iter_mut().find(|(n, _)| n == f).unwrap_or_else(|| panic!("no field `{f}`")).1)
            }
            (MemTree::Access { target, .. }, Selector::Deref) => target.as_mut().map(Arc::make_mut),
            (t, s) => panic!("selector {s:?} does not apply to {t:?}"),
        }
    }

    /// Direct children with the selector that reaches each.
    pub fn children(&self) -> Vec<(Selector, &MemTree)> {
        match self {
            MemTree::Int { .. } => Vec::new(),
            MemTree::Record { fields, .. } => fields.iter().map(|(n, t)| (Selector::Field(n.clone()), t)).collect(),
            MemTree::Access { target, .. } => target.iter().map(|t| (Selector::Deref, &**t)).collect(),
        }
    }

    /// Number of nodes, counting shared subtrees once per occurrence.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|(_, t)| t.size()).sum::<usize>()
    }

    /// Visits every node with its path from `root`, stopping early once `limit` nodes
    /// have been visited. Returns false if the limit was hit.
    pub fn walk<'a>(&'a self, root: Path, limit: &mut usize, f: &mut dyn FnMut(&Path, &'a MemTree)) -> bool {
        if *limit == 0 {
            return false;
        }
        *limit -= 1;
        f(&root, self);
        for (sel, t) in self.children() {
            if !t.walk(root.child(sel), limit, f) {
                return false;
            }
        }
        true
    }
}

/// Variables of one procedure activation.
pub type Frame = BTreeMap<String, MemTree>;

/// Resolves `p` in `frame`; `Err` carries the prefix whose target was null.
pub fn lookup<'a>(frame: &'a Frame, p: &Path) -> Result<&'a MemTree, Path> {
    let mut t = frame.get(&p.base).unwrap_or_else(|| panic!("unbound variable `{}`", p.base));
    let mut at = Path::var(&p.base);
    for sel in &p.selectors {
        t = t.child(sel).ok_or_else(|| at.clone())?;
        at = at.child(sel.clone());
    }
    Ok(t)
}

pub fn lookup_mut<'a>(frame: &'a mut Frame, p: &Path) -> Result<&'a mut MemTree, Path> {
    let mut t = frame.get_mut(&p.base).unwrap_or_else(|| panic!("unbound variable `{}`", p.base));
    let mut at = Path::var(&p.base);
    for sel in &p.selectors {
        t = t.child_mut(sel).ok_or_else(|| at.clone())?;
        at = at.child(sel.clone());
    }
    Ok(t)
}

/// Renders a frame with cells renumbered in order of first appearance.
pub fn dump_frame(frame: &Frame) -> String {
    let mut names = HashMap::new();
    let mut out = String::new();
    for (var, t) in frame {
        let _ = write!(out, "{var} = ");
        dump_tree(t, &mut names, &mut out);
        out.push('\n');
    }
    out
}

fn dump_tree(t: &MemTree, names: &mut HashMap<Cell, usize>, out: &mut String) {
    let n = names.len();
    let id = *names.entry(t.cell()).or_insert(n);
    match t {
        MemTree::Int { value, .. } => {
            let _ = write!(out, "#{id} {value}");
        }
        MemTree::Access { target: None, .. } => {
            let _ = write!(out, "#{id} -> null");
        }
        MemTree::Access { target: Some(t), .. } => {
            let _ = write!(out, "#{id} -> ");
            dump_tree(t, names, out);
        }
        MemTree::Record { fields, .. } => {
            let _ = write!(out, "#{id} {{");
            for (k, (name, f)) in fields.iter().enumerate() {
                out.push_str(if k == 0 { " " } else { ", " });
                let _ = write!(out, "{name}: ");
                dump_tree(f, names, out);
            }
            out.push_str(" }");
        }
    }
}
