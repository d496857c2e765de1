//! Reference models shared by the property tests and the acceptance harness: the
//! permission lattice as an explicit Hasse diagram, and permission trees as a strict map
//! from every path up to a fixed depth to its permission.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use proptest::prelude::*;

use muspark::permission::{ExtFilter, PermEnv, Permission};
use muspark::typecheck::is_deep;
use muspark::{check_program, parse_source, Path, Type, TypeTable};

use Permission::{No, Rw, R, W};

// ---------------------------------------------------------------- lattice

/// The order as a list of covering pairs; everything else follows by reflexive-transitive closure.
pub const COVERS: [(Permission, Permission); 4] = [(No, R), (No, W), (R, Rw), (W, Rw)];

pub fn hasse_leq(a: Permission, b: Permission) -> bool {
    a == b || COVERS.iter().any(|&(lo, hi)| lo == a && hasse_leq(hi, b))
}

pub fn hasse_glb(a: Permission, b: Permission) -> Permission {
    let lower: Vec<Permission> = Permission::ALL.into_iter().filter(|&c| hasse_leq(c, a) && hasse_leq(c, b)).collect();
    *lower.iter().find(|&&c| lower.iter().all(|&d| hasse_leq(d, c))).unwrap()
}

pub fn hasse_lub(a: Permission, b: Permission) -> Permission {
    let upper: Vec<Permission> = Permission::ALL.into_iter().filter(|&c| hasse_leq(a, c) && hasse_leq(b, c)).collect();
    *upper.iter().find(|&&c| upper.iter().all(|&d| hasse_leq(c, d))).unwrap()
}

pub fn lattice_matches_hasse_diagram() {
    for a in Permission::ALL {
        assert_eq!(a.is_readable(), hasse_leq(R, a));
        assert_eq!(a.is_writable(), hasse_leq(W, a));
        for b in Permission::ALL {
            assert_eq!(a.leq(b), hasse_leq(a, b), "{a} <= {b}");
            assert_eq!(a.glb(b), hasse_glb(a, b), "{a} glb {b}");
            assert_eq!(a.lub(b), hasse_lub(a, b), "{a} lub {b}");
        }
    }
    assert!(!R.leq(W) && !W.leq(R));
}

pub fn lattice_laws() {
    for a in Permission::ALL {
        assert_eq!(a.glb(a), a);
        assert_eq!(a.lub(a), a);
        assert_eq!(a.glb(No), No);
        assert_eq!(a.lub(Rw), Rw);
        for b in Permission::ALL {
            assert_eq!(a.glb(b), b.glb(a));
            assert_eq!(a.lub(b), b.lub(a));
            assert_eq!(a.glb(a.lub(b)), a);
            assert_eq!(a.lub(a.glb(b)), a);
            assert_eq!(a.leq(b), a.glb(b) == a);
            for c in Permission::ALL {
                assert_eq!(a.glb(b.glb(c)), a.glb(b).glb(c));
                assert_eq!(a.lub(b.lub(c)), a.lub(b).lub(c));
                assert_eq!(a.glb(b.lub(c)), a.glb(b).lub(a.glb(c)));
                if a.leq(b) && b.leq(c) {
                    assert!(a.leq(c));
                }
            }
        }
    }
}

// ---------------------------------------------------------------- permission trees

pub const FIXTURE: &str = "procedure Main is
   type Pair is record x : integer; y : integer; end record;
   type Node is record val : integer; next : access Node; end record;
   type Holder is record p : access integer; n : access Node; q : Pair; end record;
   A : access Node;
   H : Holder;
   P : access integer;
   I : integer;
   R : access Holder;
begin
   I := 0;
end;";

pub struct Fixture {
    pub table: Arc<TypeTable>,
    pub vars: Vec<(String, Type)>,
}

pub fn fixture() -> &'static Fixture {
    static F: std::sync::OnceLock<Fixture> = std::sync::OnceLock::new();
    F.get_or_init(|| {
        let checked = check_program(&parse_source(FIXTURE).unwrap());
        assert!(checked.is_well_typed());
        let vars = checked.proc(checked.main).locals.clone();
        Fixture { table: checked.table.clone(), vars }
    })
}

/// Every path of at most `max` selectors, with its type, by walking the type table.
pub fn typed_paths(max: usize) -> Vec<(Path, Type)> {
    let f = fixture();
    let mut out = Vec::new();
    let mut todo: Vec<(Path, Type)> = f.vars.iter().map(|(n, t)| (Path::var(n), t.clone())).collect();
    while let Some((p, t)) = todo.pop() {
        if p.len() < max {
            for (sel, ct) in f.table.children(&t) {
                todo.push((p.child(sel), ct));
            }
        }
        out.push((p, t));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

/// Paths the generated operations touch.
pub const OP_DEPTH: usize = 3;
/// Depth of the strict model. Below the deepest operation every subtree is uniform and
/// therefore already released, so truncating here does not change shallower nodes.
pub const MODEL_DEPTH: usize = 7;
/// Depth at which lazy and strict trees are compared.
pub const CMP_DEPTH: usize = 4;

/// The strict reference: one entry per path up to `MODEL_DEPTH`.
#[derive(Clone, Debug, PartialEq)]
pub struct Strict {
    pub perms: BTreeMap<Path, Permission>,
    pub deep: HashMap<Path, bool>,
}

impl Strict {
    fn new(init: &[Permission]) -> Self {
        let f = fixture();
        let mut perms = BTreeMap::new();
        let mut deep = HashMap::new();
        for (p, t) in typed_paths(MODEL_DEPTH) {
            let i = f.vars.iter().position(|(n, _)| *n == p.base).unwrap();
            perms.insert(p.clone(), init[i]);
            deep.insert(p, is_deep(&t, &f.table));
        }
        Strict { perms, deep }
    }

    fn strict_extensions(&self, p: &Path) -> Vec<Path> {
        self.perms.keys().filter(|q| p.is_prefix_of(q) && *q != p).cloned().collect()
    }

    fn apply(&mut self, op: &Op) {
        match op {
            Op::SetNode(p, k) => {
                self.perms.insert(p.clone(), *k);
            }
            Op::SetSubtree(p, k) => {
                self.perms.insert(p.clone(), *k);
                for q in self.strict_extensions(p) {
                    self.perms.insert(q, *k);
                }
            }
            Op::SetExt(p, k, filter) => {
                for q in self.strict_extensions(p) {
                    let deep = self.deep[&q];
                    let same = q.deref_count() == p.deref_count();
                    let hit = match filter {
                        ExtFilter::AllStrict => true,
                        ExtFilter::MoreDerefs => !same,
                        ExtFilter::DeepSameDerefs => deep && same,
                        ExtFilter::ShallowSameDerefs => !deep && same,
                        ExtFilter::Deep => deep,
                        ExtFilter::Shallow => !deep,
                    };
                    if hit {
                        self.perms.insert(q, *k);
                    }
                }
            }
            Op::Release => {
                let mut order: Vec<Path> = self.perms.keys().cloned().collect();
                order.sort_by_key(|p| std::cmp::Reverse(p.len()));
                for p in order {
                    if p.len() >= MODEL_DEPTH {
                        continue;
                    }
                    let children = self
                        .perms
                        .iter()
                        .filter(|(q, _)| q.len() == p.len() + 1 && p.is_prefix_of(q))
                        .map(|(_, k)| *k)
                        .reduce(Permission::glb);
                    if let Some(g) = children {
                        let v = self.perms[&p].lub(g);
                        self.perms.insert(p, v);
                    }
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub enum Op {
    SetNode(Path, Permission),
    SetSubtree(Path, Permission),
    SetExt(Path, Permission, ExtFilter),
    Release,
}

pub fn apply(env: &mut PermEnv, op: &Op) {
    match op {
        Op::SetNode(p, k) => env.set_node(p, *k),
        Op::SetSubtree(p, k) => env.set_subtree(p, *k),
        Op::SetExt(p, k, f) => env.set_extensions(p, *k, *f),
        Op::Release => env.release(),
    }
}

pub fn perm() -> impl Strategy<Value = Permission> {
    prop::sample::select(Permission::ALL.to_vec())
}

pub fn op_path() -> impl Strategy<Value = Path> {
    prop::sample::select(typed_paths(OP_DEPTH).into_iter().map(|(p, _)| p).collect::<Vec<_>>())
}

/// Operations that keep every Thunk uniform, mixed with releases.
pub fn uniform_op() -> impl Strategy<Value = Op> {
    let filters = vec![ExtFilter::AllStrict, ExtFilter::MoreDerefs, ExtFilter::DeepSameDerefs, ExtFilter::ShallowSameDerefs];
    prop_oneof![
        (op_path(), perm()).prop_map(|(p, k)| Op::SetNode(p, k)),
        (op_path(), perm()).prop_map(|(p, k)| Op::SetSubtree(p, k)),
        (op_path(), perm(), prop::sample::select(filters)).prop_map(|(p, k, f)| Op::SetExt(p, k, f)),
        Just(Op::Release),
    ]
}

/// Any update, including the deep/shallow split that borrows use; no releases.
pub fn any_update() -> impl Strategy<Value = Op> {
    let filters = vec![
        ExtFilter::AllStrict,
        ExtFilter::MoreDerefs,
        ExtFilter::DeepSameDerefs,
        ExtFilter::ShallowSameDerefs,
        ExtFilter::Deep,
        ExtFilter::Shallow,
    ];
    prop_oneof![
        (op_path(), perm()).prop_map(|(p, k)| Op::SetNode(p, k)),
        (op_path(), perm()).prop_map(|(p, k)| Op::SetSubtree(p, k)),
        (op_path(), perm(), prop::sample::select(filters)).prop_map(|(p, k, f)| Op::SetExt(p, k, f)),
    ]
}

pub fn lazy(init: &[Permission], ops: &[Op]) -> PermEnv {
    let f = fixture();
    let mut env = PermEnv::new(f.table.clone());
    for ((name, ty), k) in f.vars.iter().zip(init) {
        env.declare(name, ty, *k);
    }
    for op in ops {
        apply(&mut env, op);
    }
    env
}

pub fn strict(init: &[Permission], ops: &[Op]) -> Strict {
    let mut s = Strict::new(init);
    for op in ops {
        s.apply(op);
    }
    s
}

pub fn assert_agree(env: &PermEnv, s: &Strict) -> Result<(), TestCaseError> {
    for (p, k) in &s.perms {
        if p.len() <= CMP_DEPTH {
            prop_assert_eq!(env.lookup(p), *k, "at {}", p);
        }
    }
    Ok(())
}

pub fn inits() -> impl Strategy<Value = Vec<Permission>> {
    prop::collection::vec(perm(), 5)
}

/// Lazy and strict trees agree on every path up to `CMP_DEPTH`.
pub fn check_laziness(init: &[Permission], ops: &[Op]) -> Result<(), TestCaseError> {
    assert_agree(&lazy(init, ops), &strict(init, ops))
}

/// On uniform environments release is idempotent, never lowers a node, and normalizes.
pub fn check_release(init: &[Permission], ops: &[Op]) -> Result<(), TestCaseError> {
    let before = lazy(init, ops);
    let mut once = before.clone();
    once.release();
    let mut twice = once.clone();
    twice.release();
    prop_assert_eq!(&once, &twice);
    prop_assert!(once.is_normalized());
    for (p, _) in typed_paths(CMP_DEPTH) {
        prop_assert!(before.lookup(&p).leq(once.lookup(&p)), "release lowered {}", p);
    }
    Ok(())
}

/// Fusion is the pointwise meet, hence commutative, associative and idempotent.
pub fn check_fusion(a: &PermEnv, b: &PermEnv, c: &PermEnv) -> Result<(), TestCaseError> {
    let ab = a.fusion(b);
    prop_assert_eq!(&a.fusion(a), a);
    prop_assert_eq!(&ab, &b.fusion(a));
    prop_assert_eq!(ab.fusion(c), a.fusion(&b.fusion(c)));
    for (p, _) in typed_paths(CMP_DEPTH) {
        prop_assert_eq!(ab.lookup(&p), a.lookup(&p).glb(b.lookup(&p)), "at {}", p);
    }
    Ok(())
}

pub fn env() -> impl Strategy<Value = PermEnv> {
    (inits(), prop::collection::vec(any_update(), 0..8)).prop_map(|(i, ops)| lazy(&i, &ops))
}
