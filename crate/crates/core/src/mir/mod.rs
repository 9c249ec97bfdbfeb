//! The analyzed intermediate language: a class hierarchy with fields,
//! methods, constructors and structured statements, where every statement
//! carries the branch it came from in a three-way merge.

mod hierarchy;
mod validate;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use hierarchy::Hierarchy;
pub use validate::{validate_program, Diagnostic, DiagnosticKind};

/// Source location of a statement or declaration. Lines are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Position {
    pub file: Arc<str>,
    pub line: u32,
}

impl Position {
    pub fn new(file: impl Into<Arc<str>>, line: u32) -> Self {
        Position {
            file: file.into(),
            line,
        }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file, self.line)
    }
}

/// Which side of the merge introduced a statement.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum Provenance {
    #[default]
    Base,
    Left,
    Right,
}

impl Provenance {
    pub fn is_developer(self) -> bool {
        self != Provenance::Base
    }

    pub fn opposite(self) -> Provenance {
        match self {
            Provenance::Base => Provenance::Base,
            Provenance::Left => Provenance::Right,
            Provenance::Right => Provenance::Left,
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Base => "BASE",
            Provenance::Left => "LEFT",
            Provenance::Right => "RIGHT",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub classes: Vec<ClassDef>,
    pub interfaces: Vec<InterfaceDef>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterfaceDef {
    pub name: String,
    pub extends: Vec<String>,
    pub methods: Vec<MethodSig>,
    pub pos: Position,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodSig {
    pub name: String,
    pub params: Vec<String>,
    pub pos: Position,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassDef {
    pub name: String,
    pub superclass: Option<String>,
    pub interfaces: Vec<String>,
    pub fields: Vec<FieldDef>,
    pub methods: Vec<MethodDef>,
    pub constructors: Vec<MethodDef>,
    pub pos: Position,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldDef {
    pub name: String,
    pub ty: String,
    pub is_static: bool,
    pub pos: Position,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MethodKind {
    Method,
    Constructor,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodDef {
    pub name: String,
    pub params: Vec<String>,
    pub is_static: bool,
    pub is_public: bool,
    pub body: Vec<Stmt>,
    pub declaring_class: String,
    pub kind: MethodKind,
    pub pos: Position,
}

/// Name used for constructors in method tables and reports.
pub const CTOR_NAME: &str = "<init>";

impl MethodDef {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    pub fn is_constructor(&self) -> bool {
        self.kind == MethodKind::Constructor
    }

    /// Every statement of the body, nested blocks included, in source order.
    pub fn statements(&self) -> StmtIter<'_> {
        StmtIter {
            stack: vec![self.body.iter()],
        }
    }

    /// Locals mentioned anywhere in the method: `this`, parameters and every
    /// name read or written by a statement.
    pub fn locals(&self) -> std::collections::BTreeSet<&str> {
        let mut out: std::collections::BTreeSet<&str> =
            self.params.iter().map(String::as_str).collect();
        if !self.is_static {
            out.insert(THIS);
        }
        for s in self.statements() {
            s.kind.for_each_local(|l| {
                out.insert(l);
            });
        }
        out
    }
}

pub const THIS: &str = "this";

pub struct StmtIter<'a> {
    stack: Vec<std::slice::Iter<'a, Stmt>>,
}

impl<'a> Iterator for StmtIter<'a> {
    type Item = &'a Stmt;

    fn next(&mut self) -> Option<&'a Stmt> {
        loop {
            let top = self.stack.last_mut()?;
            match top.next() {
                None => {
                    self.stack.pop();
                }
                Some(s) => {
                    match &s.kind {
                        StmtKind::If {
                            then_block,
                            else_block,
                            ..
                        } => {
                            self.stack.push(else_block.iter());
                            self.stack.push(then_block.iter());
                        }
                        StmtKind::While { body, .. } => self.stack.push(body.iter()),
                        _ => {}
                    }
                    return Some(s);
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stmt {
    pub pos: Position,
    pub provenance: Provenance,
    pub kind: StmtKind,
}

/// A value read by a statement: a local or a literal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Operand {
    Local(String),
    Int(i64),
    Str(String),
}

impl Operand {
    pub fn as_local(&self) -> Option<&str> {
        match self {
            Operand::Local(l) => Some(l),
            _ => None,
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Local(l) => f.write_str(l),
            Operand::Int(i) => write!(f, "{i}"),
            Operand::Str(s) => write!(f, "{s:?}"),
        }
    }
}

/// Array index: an integer constant or a local.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Index {
    Const(i64),
    Local(String),
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Index::Const(i) => write!(f, "{i}"),
            Index::Local(l) => f.write_str(l),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StmtKind {
    AllocAssign {
        target: String,
        class: String,
        args: Vec<Operand>,
    },
    /// Reflective instantiation: yields an instance of `ty` whose allocation
    /// site is invisible to points-to analysis.
    ReflectiveAssign {
        target: String,
        ty: String,
    },
    CopyAssign {
        target: String,
        source: Operand,
    },
    FieldStore {
        base: String,
        field: String,
        source: Operand,
    },
    FieldLoad {
        target: String,
        base: String,
        field: String,
    },
    StaticStore {
        class: String,
        field: String,
        source: Operand,
    },
    StaticLoad {
        target: String,
        class: String,
        field: String,
    },
    ArrayAlloc {
        target: String,
        elem_ty: String,
        len: i64,
    },
    ArrayStore {
        base: String,
        index: Index,
        source: Operand,
    },
    ArrayLoad {
        target: String,
        base: String,
        index: Index,
    },
    VirtualCall {
        receiver: String,
        method: String,
        args: Vec<Operand>,
        result: Option<String>,
    },
    StaticCall {
        class: String,
        method: String,
        args: Vec<Operand>,
        result: Option<String>,
    },
    If {
        cond: String,
        then_block: Vec<Stmt>,
        else_block: Vec<Stmt>,
    },
    While {
        cond: String,
        body: Vec<Stmt>,
    },
    Return(Option<String>),
    OpaqueOp {
        target: String,
        operands: Vec<Operand>,
    },
}

impl StmtKind {
    /// The local written by this statement, if any.
    pub fn defined_local(&self) -> Option<&str> {
        use StmtKind::*;
        match self {
            AllocAssign { target, .. }
            | ReflectiveAssign { target, .. }
            | CopyAssign { target, .. }
            | FieldLoad { target, .. }
            | StaticLoad { target, .. }
            | ArrayAlloc { target, .. }
            | ArrayLoad { target, .. }
            | OpaqueOp { target, .. } => Some(target),
            VirtualCall { result, .. } | StaticCall { result, .. } => result.as_deref(),
            _ => None,
        }
    }

    /// Visits every local this statement reads or writes, excluding nested blocks.
    pub fn for_each_local<'a>(&'a self, mut f: impl FnMut(&'a str)) {
        use StmtKind::*;
        let ops = |ops: &'a [Operand], f: &mut dyn FnMut(&'a str)| {
            for o in ops {
                if let Operand::Local(l) = o {
                    f(l);
                }
            }
        };
        let idx = |i: &'a Index, f: &mut dyn FnMut(&'a str)| {
            if let Index::Local(l) = i {
                f(l);
            }
        };
        match self {
            AllocAssign { target, args, .. } => {
                f(target);
                ops(args, &mut f);
            }
            ReflectiveAssign { target, .. }
            | ArrayAlloc { target, .. }
            | StaticLoad { target, .. } => f(target),
            CopyAssign { target, source } => {
                f(target);
                ops(std::slice::from_ref(source), &mut f);
            }
            FieldStore { base, source, .. } => {
                f(base);
                ops(std::slice::from_ref(source), &mut f);
            }
            FieldLoad { target, base, .. } => {
                f(target);
                f(base);
            }
            StaticStore { source, .. } => ops(std::slice::from_ref(source), &mut f),
            ArrayStore {
                base,
                index,
                source,
            } => {
                f(base);
                idx(index, &mut f);
                ops(std::slice::from_ref(source), &mut f);
            }
            ArrayLoad {
                target,
                base,
                index,
            } => {
                f(target);
                f(base);
                idx(index, &mut f);
            }
            VirtualCall {
                receiver,
                args,
                result,
                ..
            } => {
                f(receiver);
                ops(args, &mut f);
                if let Some(r) = result {
                    f(r);
                }
            }
            StaticCall { args, result, .. } => {
                ops(args, &mut f);
                if let Some(r) = result {
                    f(r);
                }
            }
            If { cond, .. } | While { cond, .. } => f(cond),
            Return(v) => {
                if let Some(v) = v {
                    f(v);
                }
            }
            OpaqueOp { target, operands } => {
                f(target);
                ops(operands, &mut f);
            }
        }
    }

    pub fn is_call(&self) -> bool {
        matches!(
            self,
            StmtKind::VirtualCall { .. }
                | StmtKind::StaticCall { .. }
                | StmtKind::AllocAssign { .. }
        )
    }
}

/// Stable handle to a method or constructor of a [`Program`].
///
/// Ordering follows class declaration order, then kind, then member index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MethodId {
    pub class: u32,
    pub kind: MethodKind,
    pub index: u32,
}

impl Program {
    pub fn method(&self, id: MethodId) -> &MethodDef {
        let class = &self.classes[id.class as usize];
        match id.kind {
            MethodKind::Method => &class.methods[id.index as usize],
            MethodKind::Constructor => &class.constructors[id.index as usize],
        }
    }

    pub fn try_method(&self, id: MethodId) -> Option<&MethodDef> {
        let class = self.classes.get(id.class as usize)?;
        match id.kind {
            MethodKind::Method => class.methods.get(id.index as usize),
            MethodKind::Constructor => class.constructors.get(id.index as usize),
        }
    }

    /// All methods and constructors in declaration order: classes in program
    /// order, members within a class by source position.
    pub fn method_ids(&self) -> Vec<MethodId> {
        let mut out = Vec::new();
        for (ci, class) in self.classes.iter().enumerate() {
            let mut members: Vec<(MethodId, &Position)> = class
                .methods
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    (
                        MethodId {
                            class: ci as u32,
                            kind: MethodKind::Method,
                            index: i as u32,
                        },
                        &m.pos,
                    )
                })
                .chain(class.constructors.iter().enumerate().map(|(i, m)| {
                    (
                        MethodId {
                            class: ci as u32,
                            kind: MethodKind::Constructor,
                            index: i as u32,
                        },
                        &m.pos,
                    )
                }))
                .collect();
            members.sort_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(&b.0)));
            out.extend(members.into_iter().map(|(id, _)| id));
        }
        out
    }

    pub fn methods(&self) -> impl Iterator<Item = (MethodId, &MethodDef)> + '_ {
        self.method_ids()
            .into_iter()
            .map(move |id| (id, self.method(id)))
    }

    /// `Class.name` for methods, `Class.<init>` for constructors.
    pub fn method_name(&self, id: MethodId) -> String {
        let m = self.method(id);
        format!("{}.{}", m.declaring_class, display_name(m))
    }

    /// Finds a method by `Class.name` (or `Class.<init>`); with several
    /// arities the lowest one wins unless `Class.name/arity` is given.
    pub fn find_method(&self, qualified: &str) -> Option<MethodId> {
        let (path, arity) = match qualified.rsplit_once('/') {
            Some((p, a)) => (p, a.parse::<usize>().ok()),
            None => (qualified, None),
        };
        let (class, name) = path.rsplit_once('.')?;
        let ci = self.classes.iter().position(|c| c.name == class)?;
        let c = &self.classes[ci];
        let (kind, list) = if name == CTOR_NAME || name == "ctor" {
            (MethodKind::Constructor, &c.constructors)
        } else {
            (MethodKind::Method, &c.methods)
        };
        list.iter()
            .enumerate()
            .filter(|(_, m)| {
                (kind == MethodKind::Constructor || m.name == name)
                    && arity.is_none_or(|a| a == m.arity())
            })
            .min_by_key(|(_, m)| m.arity())
            .map(|(i, _)| MethodId {
                class: ci as u32,
                kind,
                index: i as u32,
            })
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.name == name)
    }

    pub fn class(&self, name: &str) -> Option<&ClassDef> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn interface(&self, name: &str) -> Option<&InterfaceDef> {
        self.interfaces.iter().find(|i| i.name == name)
    }

    /// Every statement of every method, in declaration order.
    pub fn statements(&self) -> impl Iterator<Item = (MethodId, &Stmt)> + '_ {
        self.methods()
            .flat_map(|(id, m)| m.statements().map(move |s| (id, s)))
    }

    /// Applies `f` to every statement, nested blocks included.
    pub fn for_each_stmt_mut(&mut self, mut f: impl FnMut(&mut Stmt)) {
        fn walk(stmts: &mut [Stmt], f: &mut dyn FnMut(&mut Stmt)) {
            for s in stmts {
                f(s);
                match &mut s.kind {
                    StmtKind::If {
                        then_block,
                        else_block,
                        ..
                    } => {
                        walk(then_block, f);
                        walk(else_block, f);
                    }
                    StmtKind::While { body, .. } => walk(body, f),
                    _ => {}
                }
            }
        }
        for class in &mut self.classes {
            for m in class
                .methods
                .iter_mut()
                .chain(class.constructors.iter_mut())
            {
                walk(&mut m.body, &mut f);
            }
        }
    }
}

pub fn display_name(m: &MethodDef) -> &str {
    match m.kind {
        MethodKind::Method => &m.name,
        MethodKind::Constructor => CTOR_NAME,
    }
}

/// Element type of an array type name (`T[]` -> `T`).
pub fn array_elem(ty: &str) -> Option<&str> {
    ty.strip_suffix("[]")
}

pub fn is_primitive(ty: &str) -> bool {
    matches!(ty, "int" | "boolean" | "String" | "long" | "double")
}
