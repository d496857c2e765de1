//! Reference interpreter for the operational semantics, with `if *` resolved by an
//! explicit vector of choices.

mod mem;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use mem::{dump_frame, lookup, lookup_mut, Cell, CellAllocator, Frame, MemTree};

use crate::borrowck::{ParamClass, ProgramPoint};
use crate::syntax::*;
use crate::typecheck::{CheckedProgram, ParamSig, ProcId, ProcInfo, Type};

/// How an out-mode formal is initialized at a call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutParamPassing {
    /// The formal starts as a fresh default tree of its type.
    #[default]
    Fresh,
    /// The formal shares the actual's tree, like in-out.
    Literal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Maximum number of executed statements, calls included.
    pub step_budget: u64,
    pub max_call_depth: usize,
    pub out_params: OutParamPassing,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { step_budget: 10_000, max_call_depth: 512, out_params: OutParamPassing::Fresh }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopKind {
    NullDereference,
    StepBudgetExceeded,
    ChoicesExhausted,
}

impl StopKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StopKind::NullDereference => "NullDereference",
            StopKind::StepBudgetExceeded => "StepBudgetExceeded",
            StopKind::ChoicesExhausted => "ChoicesExhausted",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuntimeStop {
    pub kind: StopKind,
    /// For a null dereference, the access path whose target was null.
    pub path: Option<String>,
    pub location: Option<SourceLocation>,
}

impl fmt::Display for RuntimeStop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(loc) = self.location {
            write!(f, "{loc}: ")?;
        }
        f.write_str(self.kind.as_str())?;
        if let Some(p) = &self.path {
            write!(f, " at `{p}`")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Completed,
    Stopped(RuntimeStop),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Event {
    Decl,
    Stmt,
    CallTransfer,
    CallReturn,
}

/// A state the interpreter exposes to an observer.
pub struct Checkpoint<'a> {
    pub point: ProgramPoint,
    pub event: Event,
    /// The active frame. At a call transfer this is reported twice: the callee's formals
    /// against `ProcEntry`, and the caller against `CallChained`.
    pub frame: &'a Frame,
    /// Activation number of `frame`, unique within a run.
    pub frame_id: u64,
}

pub trait Observer {
    fn checkpoint(&mut self, cp: &Checkpoint<'_>);
}

impl Observer for () {
    fn checkpoint(&mut self, _: &Checkpoint<'_>) {}
}

#[derive(Clone, Debug)]
pub struct TraceEntry {
    pub point: ProgramPoint,
    pub event: Event,
    pub frame_id: u64,
    pub frame: Frame,
}

/// Records every checkpoint.
#[derive(Clone, Debug, Default)]
pub struct Trace {
    pub entries: Vec<TraceEntry>,
}

impl Observer for Trace {
    fn checkpoint(&mut self, cp: &Checkpoint<'_>) {
        self.entries.push(TraceEntry { point: cp.point, event: cp.event, frame_id: cp.frame_id, frame: cp.frame.clone() });
    }
}

impl Trace {
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let ev = match e.event {
                Event::Decl => "decl",
                Event::Stmt => "stmt",
                Event::CallTransfer => "call-transfer",
                Event::CallReturn => "call-return",
            };
            out.push_str(&format!("[{} {ev} frame {}]\n", e.point, e.frame_id));
            for line in dump_frame(&e.frame).lines() {
                out.push_str("  ");
                out.push_str(line);
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub outcome: Outcome,
    pub steps: u64,
    /// Number of choices consumed.
    pub choices_used: usize,
    /// The main frame when the run ended.
    pub final_frame: Frame,
}

/// Runs the main procedure of a well-typed program.
pub fn run(program: &CheckedProgram, choices: &[bool], config: &RunConfig, observer: &mut dyn Observer) -> RunResult {
    let mut it = Interpreter {
        program,
        config,
        choices,
        used: 0,
        steps: 0,
        depth: 0,
        cells: CellAllocator::default(),
        next_frame: 0,
        observer,
    };
    let main = program.proc(program.main);
    let mut frame = Frame::new();
    let id = it.new_frame_id();
    it.observer.checkpoint(&Checkpoint { point: ProgramPoint::ProcEntry(main.id), event: Event::CallTransfer, frame: &frame, frame_id: id });
    let outcome = match it.exec_proc(main, &mut frame, id) {
        Ok(()) => Outcome::Completed,
        Err(stop) => Outcome::Stopped(stop),
    };
    RunResult { outcome, steps: it.steps, choices_used: it.used, final_frame: frame }
}

struct Interpreter<'a> {
    program: &'a CheckedProgram,
    config: &'a RunConfig,
    choices: &'a [bool],
    used: usize,
    steps: u64,
    depth: usize,
    cells: CellAllocator,
    next_frame: u64,
    observer: &'a mut dyn Observer,
}

fn null_deref(p: Path, loc: SourceLocation) -> RuntimeStop {
    RuntimeStop { kind: StopKind::NullDereference, path: Some(p.to_string()), location: Some(loc) }
}

impl<'a> Interpreter<'a> {
    fn new_frame_id(&mut self) -> u64 {
        self.next_frame += 1;
        self.next_frame - 1
    }

    fn stop(&self, kind: StopKind, loc: SourceLocation) -> RuntimeStop {
        RuntimeStop { kind, path: None, location: Some(loc) }
    }

    /// Declarations then body, in a frame already holding the formals.
    fn exec_proc(&mut self, info: &'a ProcInfo, frame: &mut Frame, id: u64) -> Result<(), RuntimeStop> {
        for (k, (name, ty)) in info.locals.iter().enumerate() {
            frame.insert(name.clone(), MemTree::fresh(ty, &self.program.table, &mut self.cells));
            self.observer.checkpoint(&Checkpoint {
                point: ProgramPoint::Decl(info.id, k as u32),
                event: Event::Decl,
                frame,
                frame_id: id,
            });
        }
        let mut act = Activation { info, frame, id };
        self.exec(&info.body, &mut act)?;
        self.observer.checkpoint(&Checkpoint {
            point: ProgramPoint::ProcExit(info.id),
            event: Event::CallReturn,
            frame: act.frame,
            frame_id: id,
        });
        Ok(())
    }

    fn exec(&mut self, s: &'a Stmt, act: &mut Activation<'a, '_>) -> Result<(), RuntimeStop> {
        if !matches!(s.kind, StmtKind::Block(_)) {
            if self.steps >= self.config.step_budget {
                return Err(self.stop(StopKind::StepBudgetExceeded, s.loc));
            }
            self.steps += 1;
        }
        match &s.kind {
            StmtKind::Block(ss) => {
                for s in ss {
                    self.exec(s, act)?;
                }
            }
            StmtKind::If { then_branch, else_branch } => {
                let Some(&c) = self.choices.get(self.used) else {
                    return Err(self.stop(StopKind::ChoicesExhausted, s.loc));
                };
                self.used += 1;
                self.exec(if c { then_branch } else { else_branch }, act)?;
            }
            StmtKind::Assign { target, rhs } => self.assign(act.frame, target, rhs, s.loc)?,
            StmtKind::AssignNew { target, .. } => {
                let ty = match act.info.env.path_type(&self.program.table, target) {
                    Some(Type::Access(t)) => *t,
                    t => panic!("`new` into `{target}` of type {t:?}"),
                };
                let tree = MemTree::fresh(&ty, &self.program.table, &mut self.cells);
                set_target(act.frame, target, Some(Arc::new(tree)), s.loc)?;
            }
            StmtKind::Call { args, .. } => self.call(act, args, s)?,
        }
        self.observer.checkpoint(&Checkpoint { point: ProgramPoint::After(s.id), event: Event::Stmt, frame: act.frame, frame_id: act.id });
        Ok(())
    }

    fn assign(&mut self, frame: &mut Frame, x: &Path, rhs: &Expr, loc: SourceLocation) -> Result<(), RuntimeStop> {
        match &rhs.kind {
            ExprKind::Null => set_target(frame, x, None, loc),
            ExprKind::Int(v) => match lookup_mut(frame, x).map_err(|p| null_deref(p, loc))? {
                MemTree::Int { value, .. } => {
                    *value = *v;
                    Ok(())
                }
                t => panic!("integer literal assigned to {t:?}"),
            },
            ExprKind::Name(n) => {
                let src = lookup(frame, n).map_err(|p| null_deref(p, rhs.loc))?.clone();
                lookup_mut(frame, x).map_err(|p| null_deref(p, loc))?.assign_from(&src);
                Ok(())
            }
            ExprKind::AccessOf(n) => {
                let src = lookup(frame, n).map_err(|p| null_deref(p, rhs.loc))?.clone();
                set_target(frame, x, Some(Arc::new(src)), loc)
            }
        }
    }

    /// The value a formal starts with.
    fn get_from_expr(&mut self, frame: &Frame, e: &Expr, class: ParamClass, formal: &ParamSig) -> Result<MemTree, RuntimeStop> {
        let cells = &mut self.cells;
        Ok(match &e.kind {
            ExprKind::Null => MemTree::Access { cell: cells.fresh(), target: None },
            ExprKind::Int(v) => MemTree::Int { cell: cells.fresh(), value: *v },
            ExprKind::AccessOf(n) => {
                let t = lookup(frame, n).map_err(|p| null_deref(p, e.loc))?;
                MemTree::Access { cell: cells.fresh(), target: Some(Arc::new(t.clone())) }
            }
            ExprKind::Name(_) if class == ParamClass::BorrowOut && self.config.out_params == OutParamPassing::Fresh => {
                MemTree::fresh(&formal.ty, &self.program.table, cells)
            }
            ExprKind::Name(n) => {
                let t = lookup(frame, n).map_err(|p| null_deref(p, e.loc))?;
                if class == ParamClass::CopyIn {
                    t.recell(cells)
                } else {
                    t.clone()
                }
            }
        })
    }

    fn call(&mut self, act: &mut Activation<'a, '_>, args: &'a [Expr], s: &'a Stmt) -> Result<(), RuntimeStop> {
        let pid: ProcId = self.program.call_targets[&s.id];
        let callee = self.program.proc(pid);
        if self.depth >= self.config.max_call_depth {
            return Err(self.stop(StopKind::StepBudgetExceeded, s.loc));
        }
        let table = self.program.table.clone();
        let classes: Vec<ParamClass> = callee.params.iter().map(|p| ParamClass::of(p, &table)).collect();
        let mut inner = Frame::new();
        for ((arg, formal), &class) in args.iter().zip(&callee.params).zip(&classes) {
            let t = self.get_from_expr(act.frame, arg, class, formal)?;
            inner.insert(formal.name.clone(), t);
        }
        let inner_id = self.new_frame_id();
        self.observer.checkpoint(&Checkpoint { point: ProgramPoint::CallChained(s.id), event: Event::CallTransfer, frame: act.frame, frame_id: act.id });
        self.observer.checkpoint(&Checkpoint { point: ProgramPoint::ProcEntry(pid), event: Event::CallTransfer, frame: &inner, frame_id: inner_id });
        self.depth += 1;
        let result = self.exec_proc(callee, &mut inner, inner_id);
        self.depth -= 1;
        result?;
        for ((arg, formal), &class) in args.iter().zip(&callee.params).zip(&classes) {
            let value = &inner[&formal.name];
            match (class, &arg.kind) {
                (ParamClass::BorrowIn, ExprKind::Name(n)) | (ParamClass::BorrowInOut | ParamClass::BorrowOut, ExprKind::Name(n)) => {
                    lookup_mut(act.frame, n).map_err(|p| null_deref(p, s.loc))?.assign_from(value);
                }
                (ParamClass::BorrowIn, ExprKind::AccessOf(n)) => {
                    let MemTree::Access { target, .. } = value else { panic!("access formal holds {value:?}") };
                    let Some(target) = target else {
                        return Err(null_deref(Path::var(&formal.name), s.loc));
                    };
                    lookup_mut(act.frame, n).map_err(|p| null_deref(p, s.loc))?.assign_from(target);
                }
                _ => {}
            }
        }
        Ok(())
    }
}

struct Activation<'a, 'f> {
    info: &'a ProcInfo,
    frame: &'f mut Frame,
    id: u64,
}

/// Sets the designated value of the access node at `x`.
fn set_target(frame: &mut Frame, x: &Path, value: Option<Arc<MemTree>>, loc: SourceLocation) -> Result<(), RuntimeStop> {
    match lookup_mut(frame, x).map_err(|p| null_deref(p, loc))? {
        MemTree::Access { target, .. } => {
            *target = value;
            Ok(())
        }
        t => panic!("`{x}` is not an access node: {t:?}"),
    }
}
