use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::syntax::{Mode, Path, Selector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RecordId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProcId(pub u32);

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Type {
    Integer,
    Record(RecordId),
    Access(Box<Type>),
    Null,
}

impl Type {
    pub fn access(inner: Type) -> Type {
        Type::Access(Box::new(inner))
    }

    pub fn is_access(&self) -> bool {
        matches!(self, Type::Access(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordDef {
    pub name: String,
    pub fields: Vec<(String, Type)>,
    pub deep: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSig {
    pub name: String,
    pub mode: Mode,
    pub ty: Type,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcSig {
    pub name: String,
    pub params: Vec<ParamSig>,
    /// False when some parameter type failed to resolve; calls to it are not checked further.
    pub valid: bool,
}

/// Program-wide registry of record types and procedure signatures, indexed by id.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeTable {
    pub records: Vec<RecordDef>,
    pub procs: Vec<ProcSig>,
}

impl TypeTable {
    pub fn record(&self, id: RecordId) -> &RecordDef {
        &self.records[id.0 as usize]
    }

    pub fn proc(&self, id: ProcId) -> &ProcSig {
        &self.procs[id.0 as usize]
    }

    pub fn field(&self, id: RecordId, name: &str) -> Option<&Type> {
        self.record(id).fields.iter().find(|(f, _)| f == name).map(|(_, t)| t)
    }

    pub fn type_name(&self, t: &Type) -> String {
        match t {
            Type::Integer => "integer".into(),
            Type::Record(id) => self.record(*id).name.clone(),
            Type::Access(inner) => format!("access {}", self.type_name(inner)),
            Type::Null => "nulltype".into(),
        }
    }

    /// Type reached by following `selectors` from `t`, if the shape allows it.
    pub fn descend(&self, t: &Type, selectors: &[Selector]) -> Option<Type> {
        let mut cur = t.clone();
        for sel in selectors {
            cur = match (sel, &cur) {
                (Selector::Field(f), Type::Record(id)) => self.field(*id, f)?.clone(),
                (Selector::Deref, Type::Access(inner)) => (**inner).clone(),
                _ => return None,
            };
        }
        Some(cur)
    }

    /// Immediate children of a node of type `t`, with their selectors.
    pub fn children(&self, t: &Type) -> Vec<(Selector, Type)> {
        match t {
            Type::Record(id) => {
                self.record(*id).fields.iter().map(|(f, ft)| (Selector::Field(f.clone()), ft.clone())).collect()
            }
            Type::Access(inner) => vec![(Selector::Deref, (**inner).clone())],
            Type::Integer | Type::Null => Vec::new(),
        }
    }
}

/// A type is deep when it has an access part. Records cache the answer at declaration time;
/// a record can only mention itself under an access type, which is deep without descending.
pub fn is_deep(t: &Type, table: &TypeTable) -> bool {
    match t {
        Type::Integer => false,
        Type::Access(_) | Type::Null => true,
        Type::Record(id) => table.record(*id).deep,
    }
}

pub(crate) fn compute_record_deep(fields: &[(String, Type)], table: &TypeTable) -> bool {
    fields.iter().any(|(_, t)| match t {
        Type::Record(id) if id.0 as usize >= table.records.len() => false,
        _ => is_deep(t, table),
    })
}

/// The smallest reflexive and symmetric relation equating `nulltype` with every access type.
pub fn type_equiv(a: &Type, b: &Type) -> bool {
    a == b || matches!((a, b), (Type::Null, Type::Access(_)) | (Type::Access(_), Type::Null))
}

/// Declarations visible at a program point.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeEnv {
    pub types: BTreeMap<String, Type>,
    pub procs: BTreeMap<String, ProcId>,
    pub vars: BTreeMap<String, Type>,
}

impl TypeEnv {
    /// Environment seen by a procedure declared here: types and procedures only.
    pub fn restricted(&self) -> TypeEnv {
        TypeEnv { types: self.types.clone(), procs: self.procs.clone(), vars: BTreeMap::new() }
    }

    pub fn var_type(&self, name: &str) -> Option<&Type> {
        self.vars.get(name)
    }

    /// Type of a path whose validity is already established.
    pub fn path_type(&self, table: &TypeTable, p: &Path) -> Option<Type> {
        table.descend(self.vars.get(&p.base)?, &p.selectors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equivalence() {
        let acc_int = Type::access(Type::Integer);
        let acc_rec = Type::access(Type::Record(RecordId(0)));
        assert!(type_equiv(&Type::Null, &acc_rec));
        assert!(type_equiv(&acc_rec, &Type::Null));
        assert!(type_equiv(&Type::Integer, &Type::Integer));
        assert!(!type_equiv(&acc_int, &acc_rec));
        assert!(!type_equiv(&Type::Null, &Type::Integer));
    }

    #[test]
    fn deepness() {
        let mut table = TypeTable::default();
        let s_fields = vec![
            ("a".to_string(), Type::Integer),
            ("b".to_string(), Type::access(Type::Integer)),
            ("c".to_string(), Type::Integer),
        ];
        let deep = compute_record_deep(&s_fields, &table);
        table.records.push(RecordDef { name: "S".into(), fields: s_fields, deep });
        let p_fields = vec![("x".to_string(), Type::Integer)];
        let deep = compute_record_deep(&p_fields, &table);
        table.records.push(RecordDef { name: "P".into(), fields: p_fields, deep });
        let w_fields = vec![("inner".to_string(), Type::Record(RecordId(0)))];
        let deep = compute_record_deep(&w_fields, &table);
        table.records.push(RecordDef { name: "W".into(), fields: w_fields, deep });
        assert!(is_deep(&Type::access(Type::Integer), &table));
        assert!(!is_deep(&Type::Integer, &table));
        assert!(is_deep(&Type::Record(RecordId(0)), &table));
        assert!(!is_deep(&Type::Record(RecordId(1)), &table));
        assert!(is_deep(&Type::Record(RecordId(2)), &table));
    }
}
