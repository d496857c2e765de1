use std::collections::BTreeMap;
use std::fmt::Write;
use std::sync::Arc;

use super::Permission;
use crate::syntax::{Path, Selector};
use crate::typecheck::{is_deep, Type, TypeTable};

/// Permissions of the strict descendants of a Thunk, by node kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ChildPerms {
    pub deep: Permission,
    pub shallow: Permission,
}

impl ChildPerms {
    pub fn uniform(k: Permission) -> Self {
        ChildPerms { deep: k, shallow: k }
    }

    pub fn is_uniform(self) -> bool {
        self.deep == self.shallow
    }

    pub fn for_node(self, deep: bool) -> Permission {
        if deep {
            self.deep
        } else {
            self.shallow
        }
    }

    fn zip(self, other: Self, op: fn(Permission, Permission) -> Permission) -> Self {
        ChildPerms { deep: op(self.deep, other.deep), shallow: op(self.shallow, other.shallow) }
    }
}

/// A permission tree. Thunks stand for a node with permission `perm` whose (possibly infinite)
/// strict descendants all carry `rest.deep` or `rest.shallow` according to their type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PermTree {
    Thunk { perm: Permission, deep: bool, rest: ChildPerms },
    Integer { perm: Permission },
    Record { perm: Permission, deep: bool, fields: Vec<(String, PermTree)> },
    Access { perm: Permission, deep: bool, target: Box<PermTree> },
}

impl PermTree {
    /// The uniform tree of type `ty`: every node carries `k`.
    pub fn fresh(ty: &Type, k: Permission, table: &TypeTable) -> Self {
        PermTree::Thunk { perm: k, deep: is_deep(ty, table), rest: ChildPerms::uniform(k) }
    }

    pub fn perm(&self) -> Permission {
        match self {
            PermTree::Thunk { perm, .. }
            | PermTree::Integer { perm }
            | PermTree::Record { perm, .. }
            | PermTree::Access { perm, .. } => *perm,
        }
    }

    fn perm_mut(&mut self) -> &mut Permission {
        match self {
            PermTree::Thunk { perm, .. }
            | PermTree::Integer { perm }
            | PermTree::Record { perm, .. }
            | PermTree::Access { perm, .. } => perm,
        }
    }

    pub fn is_deep(&self) -> bool {
        match self {
            PermTree::Thunk { deep, .. } | PermTree::Record { deep, .. } | PermTree::Access { deep, .. } => *deep,
            PermTree::Integer { .. } => false,
        }
    }

    /// Materializes one level of a Thunk according to its type. No-op on other nodes.
    pub fn expand(&mut self, ty: &Type, table: &TypeTable) {
        let PermTree::Thunk { perm, deep, rest } = *self else { return };
        let child = |t: &Type| {
            let d = is_deep(t, table);
            PermTree::Thunk { perm: rest.for_node(d), deep: d, rest }
        };
        *self = match ty {
            Type::Integer => PermTree::Integer { perm },
            Type::Record(id) => PermTree::Record {
                perm,
                deep,
                fields: table.record(*id).fields.iter().map(|(f, t)| (f.clone(), child(t))).collect(),
            },
            Type::Access(inner) => PermTree::Access { perm, deep: true, target: Box::new(child(inner)) },
            Type::Null => panic!("no permission tree has type nulltype"),
        };
    }

    fn child_mut(&mut self, sel: &Selector, ty: &Type, table: &TypeTable) -> Option<(&mut PermTree, Type)> {
        match (self, sel, ty) {
            (PermTree::Record { fields, .. }, Selector::Field(f), Type::Record(id)) => {
                let fty = table.field(*id, f)?.clone();
                let child = fields.iter_mut().find(|(n, _)| n == f).map(|(_, c)| c)?;
                Some((child, fty))
            }
            (PermTree::Access { target, .. }, Selector::Deref, Type::Access(inner)) => {
                Some((target.as_mut(), (**inner).clone()))
            }
            _ => None,
        }
    }
}

/// Which strict extensions of a path an update applies to. "Same derefs" means the extension
/// has as many `.all` as the path itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtFilter {
    AllStrict,
    MoreDerefs,
    DeepSameDerefs,
    ShallowSameDerefs,
    Deep,
    Shallow,
}

impl ExtFilter {
    fn matches(self, deep: bool, same_level: bool) -> bool {
        match self {
            ExtFilter::AllStrict => true,
            ExtFilter::MoreDerefs => !same_level,
            ExtFilter::DeepSameDerefs => deep && same_level,
            ExtFilter::ShallowSameDerefs => !deep && same_level,
            ExtFilter::Deep => deep,
            ExtFilter::Shallow => !deep,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarPerm {
    pub ty: Type,
    pub tree: PermTree,
}

/// Maps each variable in scope to its type and permission tree.
#[derive(Clone, Debug)]
pub struct PermEnv {
    table: Arc<TypeTable>,
    vars: BTreeMap<String, VarPerm>,
}

impl PartialEq for PermEnv {
    fn eq(&self, other: &Self) -> bool {
        self.vars == other.vars
    }
}

impl PermEnv {
    pub fn new(table: Arc<TypeTable>) -> Self {
        PermEnv { table, vars: BTreeMap::new() }
    }

    pub fn table(&self) -> &Arc<TypeTable> {
        &self.table
    }

    /// Binds `name` to `pfresh(ty, k)`.
    pub fn declare(&mut self, name: &str, ty: &Type, k: Permission) {
        let tree = PermTree::fresh(ty, k, &self.table);
        self.vars.insert(name.to_string(), VarPerm { ty: ty.clone(), tree });
    }

    /// Binds `name` to an explicit tree, which must fit `ty`.
    pub fn insert(&mut self, name: &str, ty: &Type, tree: PermTree) {
        self.vars.insert(name.to_string(), VarPerm { ty: ty.clone(), tree });
    }

    pub fn vars(&self) -> impl Iterator<Item = (&String, &VarPerm)> {
        self.vars.iter()
    }

    pub fn var(&self, name: &str) -> Option<&VarPerm> {
        self.vars.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.vars.contains_key(name)
    }

    pub fn type_of(&self, p: &Path) -> Option<Type> {
        self.table.descend(&self.vars.get(&p.base)?.ty, &p.selectors)
    }

    pub fn is_deep_path(&self, p: &Path) -> bool {
        let ty = self.type_of(p).unwrap_or_else(|| panic!("path `{p}` does not match its type"));
        is_deep(&ty, &self.table)
    }

    /// Permission of the node at `p`, or `None` if `p` does not fit the tree's type.
    pub fn try_lookup(&self, p: &Path) -> Option<Permission> {
        let var = self.vars.get(&p.base)?;
        let mut ty = var.ty.clone();
        let mut node = &var.tree;
        for (i, sel) in p.selectors.iter().enumerate() {
            let next = match (node, sel, &ty) {
                (PermTree::Thunk { rest, .. }, _, _) => {
                    let t = self.table.descend(&ty, &p.selectors[i..])?;
                    return Some(rest.for_node(is_deep(&t, &self.table)));
                }
                (PermTree::Record { fields, .. }, Selector::Field(f), Type::Record(id)) => {
                    let fty = self.table.field(*id, f)?.clone();
                    (fields.iter().find(|(n, _)| n == f).map(|(_, c)| c)?, fty)
                }
                (PermTree::Access { target, .. }, Selector::Deref, Type::Access(inner)) => {
                    (target.as_ref(), (**inner).clone())
                }
                _ => return None,
            };
            node = next.0;
            ty = next.1;
        }
        Some(node.perm())
    }

    /// Permission of the node at `p`. Panics if `p` does not fit the tree's type, which
    /// means an ill-typed path got past the typechecker.
    pub fn lookup(&self, p: &Path) -> Permission {
        self.try_lookup(p).unwrap_or_else(|| panic!("path `{p}` does not match its permission tree"))
    }

    fn node_mut(&mut self, p: &Path) -> (&mut PermTree, Type) {
        let table = &self.table;
        let var = self.vars.get_mut(&p.base).unwrap_or_else(|| panic!("unknown variable `{}`", p.base));
        let mut ty = var.ty.clone();
        let mut node = &mut var.tree;
        for sel in &p.selectors {
            node.expand(&ty, table);
            let (child, cty) =
                node.child_mut(sel, &ty, table).unwrap_or_else(|| panic!("path `{p}` does not match its permission tree"));
            node = child;
            ty = cty;
        }
        (node, ty)
    }

    /// Changes the permission of exactly the node at `p`.
    pub fn set_node(&mut self, p: &Path, k: Permission) {
        *self.node_mut(p).0.perm_mut() = k;
    }

    /// Replaces the whole subtree at `p` by a uniform Thunk.
    pub fn set_subtree(&mut self, p: &Path, k: Permission) {
        let table = self.table.clone();
        let (node, ty) = self.node_mut(p);
        *node = PermTree::fresh(&ty, k, &table);
    }

    pub fn set_extensions(&mut self, p: &Path, k: Permission, filter: ExtFilter) {
        self.update_extensions(p, filter, &|_| k);
    }

    /// Applies `f` to the permission of every strict extension of `p` selected by `filter`.
    pub fn update_extensions(&mut self, p: &Path, filter: ExtFilter, f: &dyn Fn(Permission) -> Permission) {
        let table = self.table.clone();
        let (node, ty) = self.node_mut(p);
        update_children(node, &ty, true, filter, f, &table);
    }

    /// Bottom-up lift of each node to at least the meet of its children.
    ///
    /// Exact when every Thunk is uniform. Under a Thunk whose deep and shallow parts differ
    /// only the Thunk's own node is lifted, which can leave descendants lower than the
    /// exact result. Such Thunks come from borrows and only exist in the environment
    /// chained through a call, which is never released.
    pub fn release(&mut self) {
        let table = self.table.clone();
        for v in self.vars.values_mut() {
            release(&mut v.tree, &v.ty, &table);
        }
    }

    /// Pointwise meet of two environments over the same variables.
    pub fn fusion(&self, other: &PermEnv) -> PermEnv {
        self.merge(other, Permission::glb)
    }

    /// Pointwise combination of two environments over the same variables.
    pub fn merge(&self, other: &PermEnv, op: fn(Permission, Permission) -> Permission) -> PermEnv {
        let mut vars = BTreeMap::new();
        for (name, a) in &self.vars {
            let b = other.vars.get(name).unwrap_or_else(|| panic!("merge: `{name}` missing on one side"));
            let tree = fuse(&a.tree, &b.tree, &a.ty, &self.table, op);
            vars.insert(name.clone(), VarPerm { ty: a.ty.clone(), tree });
        }
        PermEnv { table: self.table.clone(), vars }
    }

    /// Every node is at least the meet of its children.
    pub fn is_normalized(&self) -> bool {
        self.vars.values().all(|v| check_tree(&v.tree, &v.ty, &self.table, normalized_at))
    }

    /// Children of a readable node are readable; children of an RW node are RW.
    pub fn readability_holds(&self) -> bool {
        self.vars.values().all(|v| check_tree(&v.tree, &v.ty, &self.table, readable_at))
    }

    /// Every path of at most `max_len` selectors, in type order.
    pub fn paths_up_to(&self, max_len: usize) -> Vec<Path> {
        let mut out = Vec::new();
        for (name, v) in &self.vars {
            let mut stack = vec![(Path::var(name), v.ty.clone())];
            while let Some((p, t)) = stack.pop() {
                if p.len() < max_len {
                    for (sel, ct) in self.table.children(&t).into_iter().rev() {
                        stack.push((p.child(sel), ct));
                    }
                }
                out.push(p);
            }
        }
        out
    }

    /// Deterministic rendering: one line per materialized node, variables sorted by name,
    /// nodes in pre-order. A Thunk with descendants shows their permissions in brackets.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for line in self.dump_lines() {
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn dump_lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in &self.vars {
            dump_node(&Path::var(name), &v.tree, &v.ty, &self.table, &mut out);
        }
        out
    }
}

fn update_children(
    node: &mut PermTree,
    ty: &Type,
    same_level: bool,
    filter: ExtFilter,
    f: &dyn Fn(Permission) -> Permission,
    table: &TypeTable,
) {
    if let PermTree::Thunk { rest, .. } = node {
        let has_children = !table.children(ty).is_empty();
        let handled = match filter {
            ExtFilter::AllStrict => {
                *rest = ChildPerms { deep: f(rest.deep), shallow: f(rest.shallow) };
                true
            }
            ExtFilter::Deep => {
                rest.deep = f(rest.deep);
                true
            }
            ExtFilter::Shallow => {
                rest.shallow = f(rest.shallow);
                true
            }
            ExtFilter::MoreDerefs if !same_level => {
                *rest = ChildPerms { deep: f(rest.deep), shallow: f(rest.shallow) };
                true
            }
            ExtFilter::ShallowSameDerefs if !same_level => true,
            ExtFilter::DeepSameDerefs if !same_level => true,
            // Below a shallow node nothing is deep and no dereference is reachable.
            ExtFilter::ShallowSameDerefs if !is_deep(ty, table) => {
                rest.shallow = f(rest.shallow);
                true
            }
            ExtFilter::MoreDerefs | ExtFilter::DeepSameDerefs if !is_deep(ty, table) => true,
            _ => !has_children,
        };
        if handled {
            return;
        }
        node.expand(ty, table);
    }
    if !same_level && matches!(filter, ExtFilter::DeepSameDerefs | ExtFilter::ShallowSameDerefs) {
        return;
    }
    match (node, ty) {
        (PermTree::Record { fields, .. }, Type::Record(id)) => {
            for ((_, child), (_, cty)) in fields.iter_mut().zip(&table.record(*id).fields) {
                update_node(child, cty, same_level, filter, f, table);
            }
        }
        (PermTree::Access { target, .. }, Type::Access(inner)) => {
            update_node(target, inner, false, filter, f, table);
        }
        (PermTree::Integer { .. }, _) => {}
        (n, t) => panic!("permission tree {n:?} does not match type {t:?}"),
    }
}

/// Updates `node` itself if selected, then its strict descendants.
fn update_node(
    node: &mut PermTree,
    ty: &Type,
    same_level: bool,
    filter: ExtFilter,
    f: &dyn Fn(Permission) -> Permission,
    table: &TypeTable,
) {
    if filter.matches(node.is_deep(), same_level) {
        let p = node.perm_mut();
        *p = f(*p);
    }
    update_children(node, ty, same_level, filter, f, table);
}

fn release(node: &mut PermTree, ty: &Type, table: &TypeTable) -> Permission {
    match (node, ty) {
        (PermTree::Thunk { perm, rest, .. }, _) => {
            // Descendants of a uniform Thunk are already released: k ∨ k = k.
            let children = table.children(ty);
            if let Some(g) = children.iter().map(|(_, t)| rest.for_node(is_deep(t, table))).reduce(Permission::glb) {
                *perm = perm.lub(g);
            }
            *perm
        }
        (PermTree::Integer { perm }, _) => *perm,
        (PermTree::Record { perm, fields, .. }, Type::Record(id)) => {
            let g = fields
                .iter_mut()
                .zip(&table.record(*id).fields)
                .map(|((_, c), (_, cty))| release(c, cty, table))
                .reduce(Permission::glb);
            if let Some(g) = g {
                *perm = perm.lub(g);
            }
            *perm
        }
        (PermTree::Access { perm, target, .. }, Type::Access(inner)) => {
            let c = release(target, inner, table);
            *perm = perm.lub(c);
            *perm
        }
        (n, t) => panic!("permission tree {n:?} does not match type {t:?}"),
    }
}

fn fuse(a: &PermTree, b: &PermTree, ty: &Type, table: &TypeTable, op: fn(Permission, Permission) -> Permission) -> PermTree {
    match (a, b) {
        (PermTree::Thunk { perm: p1, deep, rest: r1 }, PermTree::Thunk { perm: p2, rest: r2, .. }) => {
            PermTree::Thunk { perm: op(*p1, *p2), deep: *deep, rest: r1.zip(*r2, op) }
        }
        (PermTree::Thunk { .. }, _) => {
            let mut a = a.clone();
            a.expand(ty, table);
            fuse(&a, b, ty, table, op)
        }
        (_, PermTree::Thunk { .. }) => {
            let mut b = b.clone();
            b.expand(ty, table);
            fuse(a, &b, ty, table, op)
        }
        (PermTree::Integer { perm: p1 }, PermTree::Integer { perm: p2 }) => PermTree::Integer { perm: op(*p1, *p2) },
        (PermTree::Record { perm: p1, deep, fields: f1 }, PermTree::Record { perm: p2, fields: f2, .. }) => {
            let Type::Record(id) = ty else { panic!("record tree with type {ty:?}") };
            let fields = f1
                .iter()
                .zip(f2)
                .zip(&table.record(*id).fields)
                .map(|(((name, c1), (_, c2)), (_, cty))| (name.clone(), fuse(c1, c2, cty, table, op)))
                .collect();
            PermTree::Record { perm: op(*p1, *p2), deep: *deep, fields }
        }
        (PermTree::Access { perm: p1, deep, target: t1 }, PermTree::Access { perm: p2, target: t2, .. }) => {
            let Type::Access(inner) = ty else { panic!("access tree with type {ty:?}") };
            PermTree::Access { perm: op(*p1, *p2), deep: *deep, target: Box::new(fuse(t1, t2, inner, table, op)) }
        }
        (a, b) => panic!("merge of mismatched trees {a:?} and {b:?}"),
    }
}

fn normalized_at(parent: Permission, children: &[Permission]) -> bool {
    match children.iter().copied().reduce(Permission::glb) {
        Some(g) => g.leq(parent),
        None => true,
    }
}

fn readable_at(parent: Permission, children: &[Permission]) -> bool {
    match parent {
        Permission::R => children.iter().all(|c| c.is_readable()),
        Permission::Rw => children.iter().all(|c| *c == Permission::Rw),
        _ => true,
    }
}

/// Checks `cond(node, children)` at every node, including the infinitely many nodes a Thunk
/// stands for: those are determined by their type, of which there are finitely many.
fn check_tree(node: &PermTree, ty: &Type, table: &TypeTable, cond: fn(Permission, &[Permission]) -> bool) -> bool {
    match (node, ty) {
        (PermTree::Thunk { perm, rest, .. }, _) => {
            let child_perms = |t: &Type| -> Vec<Permission> {
                table.children(t).iter().map(|(_, ct)| rest.for_node(is_deep(ct, table))).collect()
            };
            if !cond(*perm, &child_perms(ty)) {
                return false;
            }
            reachable_types(ty, table)
                .iter()
                .all(|t| cond(rest.for_node(is_deep(t, table)), &child_perms(t)))
        }
        (PermTree::Integer { .. }, _) => true,
        (PermTree::Record { perm, fields, .. }, Type::Record(id)) => {
            let perms: Vec<Permission> = fields.iter().map(|(_, c)| c.perm()).collect();
            cond(*perm, &perms)
                && fields
                    .iter()
                    .zip(&table.record(*id).fields)
                    .all(|((_, c), (_, cty))| check_tree(c, cty, table, cond))
        }
        (PermTree::Access { perm, target, .. }, Type::Access(inner)) => {
            cond(*perm, &[target.perm()]) && check_tree(target, inner, table, cond)
        }
        (n, t) => panic!("permission tree {n:?} does not match type {t:?}"),
    }
}

/// Types of all strict descendants of a node of type `ty`.
fn reachable_types(ty: &Type, table: &TypeTable) -> Vec<Type> {
    let mut seen: Vec<Type> = Vec::new();
    let mut stack: Vec<Type> = table.children(ty).into_iter().map(|(_, t)| t).collect();
    while let Some(t) = stack.pop() {
        if !seen.contains(&t) {
            stack.extend(table.children(&t).into_iter().map(|(_, t)| t));
            seen.push(t);
        }
    }
    seen
}

fn dump_node(path: &Path, node: &PermTree, ty: &Type, table: &TypeTable, out: &mut Vec<String>) {
    let mut line = format!("{path}: {}", node.perm());
    match (node, ty) {
        (PermTree::Thunk { rest, .. }, _) => {
            if !table.children(ty).is_empty() {
                if rest.is_uniform() {
                    write!(line, " [rest {}]", rest.deep).unwrap();
                } else {
                    write!(line, " [rest deep {}, shallow {}]", rest.deep, rest.shallow).unwrap();
                }
            }
            out.push(line);
        }
        (PermTree::Integer { .. }, _) => out.push(line),
        (PermTree::Record { fields, .. }, Type::Record(id)) => {
            out.push(line);
            for ((name, c), (_, cty)) in fields.iter().zip(&table.record(*id).fields) {
                dump_node(&path.clone().field(name), c, cty, table, out);
            }
        }
        (PermTree::Access { target, .. }, Type::Access(inner)) => {
            out.push(line);
            dump_node(&path.clone().deref(), target, inner, table, out);
        }
        (n, t) => panic!("permission tree {n:?} does not match type {t:?}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_source;
    use crate::typecheck::check_program;
    use Permission::*;

    const TYPES: &str = "procedure M is
        type S is record a : integer; b : access integer; c : integer; end record;
        type List is record v : integer; next : access List; end record;
        X : integer;
    begin X := 0; end;";

    fn setup() -> (Arc<TypeTable>, Type, Type) {
        let c = check_program(&parse_source(TYPES).unwrap());
        let env = &c.proc(c.main).env;
        (c.table.clone(), env.types["S"].clone(), env.types["List"].clone())
    }

    fn p(s: &str) -> Path {
        let mut parts = s.split('.');
        let mut path = Path::var(parts.next().unwrap());
        for part in parts {
            path = if part == "all" { path.deref() } else { path.field(part) };
        }
        path
    }

    #[test]
    fn pfresh_lookups() {
        let (table, _, list) = setup();
        let mut env = PermEnv::new(table);
        env.declare("i", &Type::Integer, Rw);
        env.declare("a", &Type::access(Type::Integer), W);
        env.declare("l", &list, R);
        assert_eq!(env.lookup(&p("i")), Rw);
        assert_eq!(env.lookup(&p("a.all")), W);
        assert_eq!(env.lookup(&p("l.next.all.next.all")), R);
        assert_eq!(env.try_lookup(&p("l.all")), None);
        assert!(env.is_normalized() && env.readability_holds());
    }

    #[test]
    fn release_examples() {
        let (table, s, _) = setup();
        let mut env = PermEnv::new(table);
        let acc = Type::access(Type::Integer);
        env.insert(
            "x",
            &acc,
            PermTree::Access { perm: W, deep: true, target: Box::new(PermTree::Integer { perm: Rw }) },
        );
        env.insert("i", &Type::Integer, PermTree::Integer { perm: W });
        env.insert(
            "r",
            &s,
            PermTree::Record {
                perm: No,
                deep: true,
                fields: vec![
                    ("a".into(), PermTree::Integer { perm: Rw }),
                    ("b".into(), PermTree::fresh(&acc, W, env.table())),
                    ("c".into(), PermTree::Integer { perm: Rw }),
                ],
            },
        );
        env.release();
        assert_eq!(env.lookup(&p("x")), Rw);
        assert_eq!(env.lookup(&p("i")), W);
        assert_eq!(env.lookup(&p("r")), W);
        assert!(env.is_normalized());
    }

    #[test]
    fn set_operations() {
        let (table, s, list) = setup();
        let mut env = PermEnv::new(table);
        env.declare("l", &list, Rw);
        env.set_node(&p("l.next.all.v"), No);
        assert_eq!(env.lookup(&p("l.next.all.v")), No);
        assert_eq!(env.lookup(&p("l.next.all")), Rw);
        assert_eq!(env.lookup(&p("l.next.all.next")), Rw);
        env.set_subtree(&p("l.next"), W);
        assert_eq!(env.lookup(&p("l.next.all.v")), W);
        env.set_extensions(&p("l"), No, ExtFilter::AllStrict);
        assert_eq!(env.lookup(&p("l")), Rw);
        assert_eq!(env.lookup(&p("l.next.all.next.all.v")), No);

        let mut env = PermEnv::new(env.table().clone());
        env.declare("m", &s, Rw);
        env.set_extensions(&p("m"), No, ExtFilter::MoreDerefs);
        env.set_extensions(&p("m"), W, ExtFilter::DeepSameDerefs);
        env.set_extensions(&p("m"), Rw, ExtFilter::ShallowSameDerefs);
        assert_eq!(env.lookup(&p("m")), Rw);
        assert_eq!(env.lookup(&p("m.a")), Rw);
        assert_eq!(env.lookup(&p("m.b")), W);
        assert_eq!(env.lookup(&p("m.b.all")), No);
        assert_eq!(env.lookup(&p("m.c")), Rw);
    }

    #[test]
    fn deep_and_shallow_extensions_on_recursive_type() {
        let (table, _, list) = setup();
        let mut env = PermEnv::new(table);
        env.declare("l", &Type::access(list), Rw);
        env.set_extensions(&p("l"), No, ExtFilter::Deep);
        env.set_extensions(&p("l"), R, ExtFilter::Shallow);
        assert_eq!(env.lookup(&p("l")), Rw);
        assert_eq!(env.lookup(&p("l.all")), No);
        assert_eq!(env.lookup(&p("l.all.v")), R);
        assert_eq!(env.lookup(&p("l.all.next.all.next")), No);
        assert_eq!(env.lookup(&p("l.all.next.all.v")), R);
    }

    #[test]
    fn readability_violation() {
        let (table, _, _) = setup();
        let mut env = PermEnv::new(table);
        env.insert(
            "x",
            &Type::access(Type::Integer),
            PermTree::Access { perm: R, deep: true, target: Box::new(PermTree::Integer { perm: No }) },
        );
        assert!(!env.readability_holds());
        assert!(env.is_normalized());
    }

    #[test]
    fn fusion_meets() {
        let (table, s, _) = setup();
        let mut a = PermEnv::new(table);
        a.declare("m", &s, Rw);
        let mut b = a.clone();
        a.set_node(&p("m.a"), R);
        b.set_node(&p("m.a"), W);
        b.set_subtree(&p("m.b"), R);
        let f = a.fusion(&b);
        assert_eq!(f.lookup(&p("m.a")), No);
        assert_eq!(f.lookup(&p("m.b.all")), R);
        assert_eq!(f.lookup(&p("m.c")), Rw);
        assert_eq!(a.fusion(&a), a);
    }

    #[test]
    fn dump_is_stable() {
        let (table, s, _) = setup();
        let mut env = PermEnv::new(table);
        env.declare("m", &s, Rw);
        env.set_node(&p("m.b.all"), No);
        assert_eq!(
            env.dump(),
            "m: RW\nm.a: RW\nm.b: RW\nm.b.all: NO\nm.c: RW\n"
        );
    }
}
