//! Concrete interpreter used as an oracle for the static analyses.

use std::collections::HashMap;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mir::{
    Hierarchy, Index, MethodId, Operand, Position, Program, Provenance, Stmt, StmtKind, THIS,
};
use crate::oa::{CallHop, ElementKey, WriteEvent};
use crate::pointsto::AllocSites;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Null,
    Int(i64),
    Str(String),
    /// Index into the heap.
    Ref(usize),
}

impl Value {
    fn truthy(&self) -> bool {
        match self {
            Value::Null => false,
            Value::Int(i) => *i != 0,
            Value::Str(s) => !s.is_empty(),
            Value::Ref(_) => true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Object {
    pub site: u32,
    pub class: String,
    pub fields: HashMap<String, Value>,
    pub elems: Vec<Value>,
}

/// The concrete location a write hit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Location {
    /// Local of one activation.
    Local {
        activation: usize,
        name: String,
    },
    Field {
        object: usize,
        field: String,
    },
    Element {
        object: usize,
        index: i64,
    },
    Static {
        class: String,
        field: String,
    },
}

#[derive(Clone, Debug)]
pub struct ConcreteWrite {
    pub event: WriteEvent,
    pub location: Location,
}

/// "Local `name` of `method` held an object from `site`."
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Binding {
    pub method: MethodId,
    pub local: String,
    pub site: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dispatch {
    pub site: Position,
    pub caller: MethodId,
    pub target: MethodId,
}

#[derive(Clone, Debug, Default)]
pub struct Trace {
    pub bindings: Vec<Binding>,
    pub dispatches: Vec<Dispatch>,
    pub writes: Vec<ConcreteWrite>,
    pub steps: u64,
    /// Execution stopped early: step limit, null dereference, bad index or
    /// runaway recursion.
    pub truncated: bool,
}

enum Flow {
    Normal,
    Return(Value),
    Halt,
}

struct Activation {
    id: usize,
    method: MethodId,
    in_ctor: bool,
    inherited: Provenance,
    path: Arc<[CallHop]>,
    locals: HashMap<String, Value>,
}

struct Interp<'p> {
    p: &'p Program,
    h: Hierarchy,
    sites: AllocSites,
    heap: Vec<Object>,
    statics: HashMap<(String, String), Value>,
    trace: Trace,
    limit: u64,
    activations: usize,
}

const MAX_FRAMES: usize = 64;

impl<'p> Interp<'p> {
    fn read(&self, a: &Activation, o: &Operand) -> Value {
        match o {
            Operand::Local(l) => a.locals.get(l).cloned().unwrap_or(Value::Null),
            Operand::Int(i) => Value::Int(*i),
            Operand::Str(s) => Value::Str(s.clone()),
        }
    }

    fn local(&self, a: &Activation, l: &str) -> Value {
        a.locals.get(l).cloned().unwrap_or(Value::Null)
    }

    fn provenance(&self, s: &Stmt, a: &Activation) -> Provenance {
        if s.provenance.is_developer() {
            s.provenance
        } else {
            a.inherited
        }
    }

    fn record(&mut self, s: &Stmt, a: &Activation, element: ElementKey, location: Location) {
        let event = WriteEvent {
            element,
            pos: s.pos.clone(),
            provenance: self.provenance(s, a),
            method: a.method,
            in_constructor: a.in_ctor,
            call_path: a.path.clone(),
        };
        self.trace.writes.push(ConcreteWrite { event, location });
    }

    fn assign(&mut self, s: &Stmt, a: &mut Activation, name: &str, v: Value) {
        if let Value::Ref(o) = v {
            self.trace.bindings.push(Binding {
                method: a.method,
                local: name.to_string(),
                site: self.heap[o].site,
            });
        }
        let loc = Location::Local {
            activation: a.id,
            name: name.to_string(),
        };
        self.record(
            s,
            a,
            ElementKey::Local {
                method: a.method,
                name: name.to_string(),
            },
            loc,
        );
        a.locals.insert(name.to_string(), v);
    }

    fn index(&self, a: &Activation, i: &Index) -> Option<i64> {
        match i {
            Index::Const(c) => Some(*c),
            Index::Local(l) => match self.local(a, l) {
                Value::Int(x) => Some(x),
                _ => None,
            },
        }
    }

    fn call(
        &mut self,
        caller: &Activation,
        site: &Stmt,
        target: MethodId,
        this: Option<Value>,
        args: &[Operand],
    ) -> Result<Flow> {
        if caller.path.len() + 1 >= MAX_FRAMES {
            return Ok(Flow::Halt);
        }
        let m = self.p.method(target);
        let mut path = caller.path.to_vec();
        path.push(CallHop {
            caller: caller.method,
            site: site.pos.clone(),
        });
        self.activations += 1;
        let mut act = Activation {
            id: self.activations,
            method: target,
            in_ctor: m.is_constructor(),
            inherited: self.provenance(site, caller),
            path: path.into(),
            locals: HashMap::new(),
        };
        let mut bind = |me: &mut Self, name: &str, v: Value| {
            if let Value::Ref(o) = v {
                me.trace.bindings.push(Binding {
                    method: target,
                    local: name.to_string(),
                    site: me.heap[o].site,
                });
            }
            act.locals.insert(name.to_string(), v);
        };
        if let Some(t) = this {
            bind(self, THIS, t);
        }
        for (param, arg) in m.params.iter().zip(args) {
            let v = self.read(caller, arg);
            bind(self, param, v);
        }
        match self.block(&mut act, &m.body)? {
            Flow::Halt => Ok(Flow::Halt),
            Flow::Return(v) => Ok(Flow::Return(v)),
            Flow::Normal => Ok(Flow::Return(Value::Null)),
        }
    }

    fn block(&mut self, a: &mut Activation, stmts: &'p [Stmt]) -> Result<Flow> {
        for s in stmts {
            match self.stmt(a, s)? {
                Flow::Normal => {}
                f => return Ok(f),
            }
        }
        Ok(Flow::Normal)
    }

    fn stmt(&mut self, a: &mut Activation, s: &'p Stmt) -> Result<Flow> {
        if self.trace.steps >= self.limit {
            return Ok(Flow::Halt);
        }
        self.trace.steps += 1;
        let p = self.p;
        match &s.kind {
            StmtKind::AllocAssign {
                target,
                class,
                args,
            } => {
                let site = self.sites.at(&s.pos).expect("numbered site");
                let o = self.heap.len();
                self.heap.push(Object {
                    site,
                    class: class.clone(),
                    fields: HashMap::new(),
                    elems: Vec::new(),
                });
                if let Some(ctor) = self.h.constructor(p, class, args.len()) {
                    if let Flow::Halt = self.call(a, s, ctor, Some(Value::Ref(o)), args)? {
                        return Ok(Flow::Halt);
                    }
                }
                self.assign(s, a, target, Value::Ref(o));
            }
            StmtKind::ReflectiveAssign { .. } => {
                return Err(Error::ReflectiveInstantiation(s.pos.clone()))
            }
            StmtKind::CopyAssign { target, source } => {
                let v = self.read(a, source);
                self.assign(s, a, target, v);
            }
            StmtKind::FieldStore {
                base,
                field,
                source,
            } => {
                let Value::Ref(o) = self.local(a, base) else {
                    return Ok(Flow::Halt);
                };
                let v = self.read(a, source);
                self.heap[o].fields.insert(field.clone(), v);
                let key = ElementKey::InstanceField {
                    method: a.method,
                    base: base.clone(),
                    field: field.clone(),
                };
                self.record(
                    s,
                    a,
                    key,
                    Location::Field {
                        object: o,
                        field: field.clone(),
                    },
                );
            }
            StmtKind::FieldLoad {
                target,
                base,
                field,
            } => {
                let Value::Ref(o) = self.local(a, base) else {
                    return Ok(Flow::Halt);
                };
                let v = self.heap[o]
                    .fields
                    .get(field)
                    .cloned()
                    .unwrap_or(Value::Null);
                self.assign(s, a, target, v);
            }
            StmtKind::StaticStore {
                class,
                field,
                source,
            } => {
                let (owner, ty) = match self.h.field(p, class, field, true) {
                    Some((c, f)) => (c.to_string(), f.ty.clone()),
                    None => (class.clone(), "?".to_string()),
                };
                let v = self.read(a, source);
                self.statics.insert((owner.clone(), field.clone()), v);
                let key = ElementKey::StaticField {
                    class: owner.clone(),
                    field: field.clone(),
                    ty,
                };
                self.record(
                    s,
                    a,
                    key,
                    Location::Static {
                        class: owner,
                        field: field.clone(),
                    },
                );
            }
            StmtKind::StaticLoad {
                target,
                class,
                field,
            } => {
                let owner = self
                    .h
                    .field(p, class, field, true)
                    .map_or_else(|| class.clone(), |(c, _)| c.to_string());
                let v = self
                    .statics
                    .get(&(owner, field.clone()))
                    .cloned()
                    .unwrap_or(Value::Null);
                self.assign(s, a, target, v);
            }
            StmtKind::ArrayAlloc {
                target,
                elem_ty,
                len,
            } => {
                let site = self.sites.at(&s.pos).expect("numbered site");
                let o = self.heap.len();
                let elems = vec![Value::Null; (*len).clamp(0, 1 << 16) as usize];
                self.heap.push(Object {
                    site,
                    class: format!("{elem_ty}[]"),
                    fields: HashMap::new(),
                    elems,
                });
                self.assign(s, a, target, Value::Ref(o));
            }
            StmtKind::ArrayStore {
                base,
                index,
                source,
            } => {
                let Value::Ref(o) = self.local(a, base) else {
                    return Ok(Flow::Halt);
                };
                let Some(i) = self
                    .index(a, index)
                    .filter(|i| (0..self.heap[o].elems.len() as i64).contains(i))
                else {
                    return Ok(Flow::Halt);
                };
                let v = self.read(a, source);
                self.heap[o].elems[i as usize] = v;
                let key = ElementKey::Array {
                    method: a.method,
                    base: base.clone(),
                    index: index.clone(),
                };
                self.record(
                    s,
                    a,
                    key,
                    Location::Element {
                        object: o,
                        index: i,
                    },
                );
            }
            StmtKind::ArrayLoad {
                target,
                base,
                index,
            } => {
                let Value::Ref(o) = self.local(a, base) else {
                    return Ok(Flow::Halt);
                };
                let Some(i) = self
                    .index(a, index)
                    .filter(|i| (0..self.heap[o].elems.len() as i64).contains(i))
                else {
                    return Ok(Flow::Halt);
                };
                let v = self.heap[o].elems[i as usize].clone();
                self.assign(s, a, target, v);
            }
            StmtKind::VirtualCall {
                receiver,
                method,
                args,
                result,
            } => {
                let Value::Ref(o) = self.local(a, receiver) else {
                    return Ok(Flow::Halt);
                };
                let class = self.heap[o].class.clone();
                let Some(t) = self.h.dispatch(p, &class, method, args.len()) else {
                    return Ok(Flow::Halt);
                };
                self.trace.dispatches.push(Dispatch {
                    site: s.pos.clone(),
                    caller: a.method,
                    target: t,
                });
                match self.call(a, s, t, Some(Value::Ref(o)), args)? {
                    Flow::Return(v) => {
                        if let Some(r) = result {
                            self.assign(s, a, r, v);
                        }
                    }
                    _ => return Ok(Flow::Halt),
                }
            }
            StmtKind::StaticCall {
                class,
                method,
                args,
                result,
            } => {
                let Some(t) = self.h.static_method(p, class, method, args.len()) else {
                    return Ok(Flow::Halt);
                };
                match self.call(a, s, t, None, args)? {
                    Flow::Return(v) => {
                        if let Some(r) = result {
                            self.assign(s, a, r, v);
                        }
                    }
                    _ => return Ok(Flow::Halt),
                }
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                let b = if self.local(a, cond).truthy() {
                    then_block
                } else {
                    else_block
                };
                return self.block(a, b);
            }
            StmtKind::While { cond, body } => {
                while self.local(a, cond).truthy() {
                    match self.block(a, body)? {
                        Flow::Normal => {}
                        f => return Ok(f),
                    }
                    if self.trace.steps >= self.limit {
                        return Ok(Flow::Halt);
                    }
                    self.trace.steps += 1;
                }
            }
            StmtKind::Return(v) => {
                let v = v.as_ref().map_or(Value::Null, |l| self.local(a, l));
                return Ok(Flow::Return(v));
            }
            StmtKind::OpaqueOp { target, operands } => {
                let mut h = DefaultHasher::new();
                for o in operands {
                    self.read(a, o).hash(&mut h);
                }
                let v = Value::Int((h.finish() % 7) as i64);
                self.assign(s, a, target, v);
            }
        }
        Ok(Flow::Normal)
    }
}

/// Executes `main` concretely for at most `step_limit` statements.
pub fn interpret(p: &Program, main: MethodId, step_limit: u64) -> Result<Trace> {
    let m = p
        .try_method(main)
        .ok_or_else(|| Error::EntryNotFound(format!("{main:?}")))?;
    let mut it = Interp {
        p,
        h: Hierarchy::new(p),
        sites: AllocSites::number(p),
        heap: Vec::new(),
        statics: HashMap::new(),
        trace: Trace::default(),
        limit: step_limit,
        activations: 0,
    };
    let mut act = Activation {
        id: 0,
        method: main,
        in_ctor: m.is_constructor(),
        inherited: Provenance::Base,
        path: Arc::from([]),
        locals: HashMap::new(),
    };
    let flow = it.block(&mut act, &m.body)?;
    it.trace.truncated = matches!(flow, Flow::Halt);
    Ok(it.trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_str;

    #[test]
    fn copy_binding_and_false_loop() {
        let p = parse_str(
            "i.mir",
            "class A { field f: int; }\nclass M {\n static method main() {\n  x = new A();\n  y = x;\n  c = 0;\n  while c {\n   x.f = 1;\n  }\n }\n}\n",
        )
        .unwrap();
        let t = interpret(&p, p.find_method("M.main").unwrap(), 1000).unwrap();
        assert!(t.bindings.iter().any(|b| b.local == "y" && b.site == 0));
        assert!(!t
            .writes
            .iter()
            .any(|w| matches!(w.location, Location::Field { .. })));
        assert!(!t.truncated);
    }

    #[test]
    fn mkref_is_rejected() {
        let p = parse_str(
            "r.mir",
            "class A { }\nclass M {\n static method main() {\n  a = mkref A;\n }\n}\n",
        )
        .unwrap();
        let e = interpret(&p, p.find_method("M.main").unwrap(), 10).unwrap_err();
        assert!(e
            .to_string()
            .contains("oracle cannot execute reflective instantiation"));
    }

    #[test]
    fn step_limit_truncates() {
        let p = parse_str(
            "l.mir",
            "class M {\n static method main() {\n  c = 1;\n  while c {\n   d = 2;\n  }\n }\n}\n",
        )
        .unwrap();
        let t = interpret(&p, p.find_method("M.main").unwrap(), 50).unwrap();
        assert!(t.truncated);
        assert!(t.steps <= 50);
    }
}
