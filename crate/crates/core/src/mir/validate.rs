use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Hierarchy, MethodDef, MethodKind, Position, Program, Stmt, StmtKind, THIS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiagnosticKind {
    DuplicateType,
    UnknownSupertype,
    SupertypeKind,
    InheritanceCycle,
    DuplicateField,
    DuplicateMethod,
    ConstructorOwner,
    DuplicateParam,
    DuplicatePosition,
    UnknownClass,
    UnknownField,
    UnknownMethod,
    NoConstructor,
    ThisInStatic,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub pos: Position,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.message)
    }
}

/// Checks the structural invariants of a program. Empty result means valid.
pub fn validate_program(p: &Program) -> Vec<Diagnostic> {
    let mut v = Validator {
        p,
        h: Hierarchy::new(p),
        out: Vec::new(),
    };
    v.types();
    v.cycles();
    for class in &p.classes {
        v.members(class);
    }
    v.positions();
    v.out
}

struct Validator<'p> {
    p: &'p Program,
    h: Hierarchy,
    out: Vec<Diagnostic>,
}

impl<'p> Validator<'p> {
    fn push(&mut self, pos: &Position, kind: DiagnosticKind, message: String) {
        self.out.push(Diagnostic {
            pos: pos.clone(),
            kind,
            message,
        });
    }

    fn types(&mut self) {
        let mut seen = HashSet::new();
        let decls = self
            .p
            .classes
            .iter()
            .map(|c| (&c.name, &c.pos))
            .chain(self.p.interfaces.iter().map(|i| (&i.name, &i.pos)));
        for (name, pos) in decls {
            if !seen.insert(name.as_str()) {
                self.push(
                    pos,
                    DiagnosticKind::DuplicateType,
                    format!("duplicate type name `{name}`"),
                );
            }
        }
        for c in &self.p.classes {
            if let Some(s) = &c.superclass {
                if !self.h.is_declared(s) {
                    self.push(
                        &c.pos,
                        DiagnosticKind::UnknownSupertype,
                        format!("unknown supertype `{s}` of class `{}`", c.name),
                    );
                } else if !self.h.is_class(s) {
                    self.push(
                        &c.pos,
                        DiagnosticKind::SupertypeKind,
                        format!("class `{}` extends interface `{s}`", c.name),
                    );
                }
            }
            for i in &c.interfaces {
                if !self.h.is_declared(i) {
                    self.push(
                        &c.pos,
                        DiagnosticKind::UnknownSupertype,
                        format!("unknown supertype `{i}` of class `{}`", c.name),
                    );
                } else if !self.h.is_interface(i) {
                    self.push(
                        &c.pos,
                        DiagnosticKind::SupertypeKind,
                        format!("class `{}` implements class `{i}`", c.name),
                    );
                }
            }
        }
        for it in &self.p.interfaces {
            for s in &it.extends {
                if !self.h.is_declared(s) {
                    self.push(
                        &it.pos,
                        DiagnosticKind::UnknownSupertype,
                        format!("unknown supertype `{s}` of interface `{}`", it.name),
                    );
                } else if !self.h.is_interface(s) {
                    self.push(
                        &it.pos,
                        DiagnosticKind::SupertypeKind,
                        format!("interface `{}` extends class `{s}`", it.name),
                    );
                }
            }
        }
    }

    fn cycles(&mut self) {
        let mut edges: HashMap<&str, Vec<&str>> = HashMap::new();
        let mut pos: HashMap<&str, &Position> = HashMap::new();
        for c in &self.p.classes {
            edges
                .entry(&c.name)
                .or_default()
                .extend(c.superclass.iter().chain(&c.interfaces).map(String::as_str));
            pos.entry(&c.name).or_insert(&c.pos);
        }
        for i in &self.p.interfaces {
            edges
                .entry(&i.name)
                .or_default()
                .extend(i.extends.iter().map(String::as_str));
            pos.entry(&i.name).or_insert(&i.pos);
        }
        let mut names: Vec<&str> = edges.keys().copied().collect();
        names.sort();
        // Tarjan-free approach: a type is on a cycle iff it reaches itself.
        let mut cycles: BTreeSet<Vec<&str>> = BTreeSet::new();
        for &start in &names {
            let mut seen = HashSet::new();
            let mut stack: Vec<&str> = edges[start].clone();
            let mut on_cycle = false;
            while let Some(t) = stack.pop() {
                if t == start {
                    on_cycle = true;
                    break;
                }
                if seen.insert(t) {
                    if let Some(next) = edges.get(t) {
                        stack.extend(next.iter().copied());
                    }
                }
            }
            if on_cycle {
                // members of this cycle: types reachable from start that also reach start
                let mut members: Vec<&str> = names
                    .iter()
                    .copied()
                    .filter(|&n| {
                        n == start || (reaches(&edges, start, n) && reaches(&edges, n, start))
                    })
                    .collect();
                members.sort();
                cycles.insert(members);
            }
        }
        for members in cycles {
            let p = pos[members[0]];
            self.push(
                p,
                DiagnosticKind::InheritanceCycle,
                format!("inheritance cycle through {}", members.join(", ")),
            );
        }
    }

    fn members(&mut self, class: &'p super::ClassDef) {
        let mut fields = HashSet::new();
        for f in &class.fields {
            if !fields.insert(f.name.as_str()) {
                self.push(
                    &f.pos,
                    DiagnosticKind::DuplicateField,
                    format!("duplicate field `{}` in `{}`", f.name, class.name),
                );
            }
        }
        let mut sigs = HashSet::new();
        for m in &class.methods {
            if !sigs.insert((m.name.as_str(), m.arity())) {
                self.push(
                    &m.pos,
                    DiagnosticKind::DuplicateMethod,
                    format!(
                        "duplicate method `{}/{}` in `{}`",
                        m.name,
                        m.arity(),
                        class.name
                    ),
                );
            }
        }
        let mut ctors = HashSet::new();
        for m in &class.constructors {
            if !ctors.insert(m.arity()) {
                self.push(
                    &m.pos,
                    DiagnosticKind::DuplicateMethod,
                    format!(
                        "duplicate constructor of arity {} in `{}`",
                        m.arity(),
                        class.name
                    ),
                );
            }
            if m.declaring_class != class.name || m.kind != MethodKind::Constructor {
                self.push(
                    &m.pos,
                    DiagnosticKind::ConstructorOwner,
                    format!(
                        "constructor of `{}` claims owner `{}`",
                        class.name, m.declaring_class
                    ),
                );
            }
        }
        for m in class.methods.iter().chain(&class.constructors) {
            self.method(m);
        }
    }

    fn method(&mut self, m: &MethodDef) {
        let mut params = HashSet::new();
        for p in &m.params {
            if p == THIS || !params.insert(p.as_str()) {
                self.push(
                    &m.pos,
                    DiagnosticKind::DuplicateParam,
                    format!("invalid or duplicate parameter `{p}` in `{}`", m.name),
                );
            }
        }
        for s in m.statements() {
            self.stmt(m, s);
        }
    }

    fn stmt(&mut self, m: &MethodDef, s: &Stmt) {
        let p = self.p;
        let mut uses_this = false;
        s.kind.for_each_local(|l| uses_this |= l == THIS);
        if uses_this && m.is_static {
            self.push(
                &s.pos,
                DiagnosticKind::ThisInStatic,
                format!("`this` used in static method `{}`", m.name),
            );
        }
        match &s.kind {
            StmtKind::AllocAssign { class, args, .. } => {
                if !self.h.is_class(class) {
                    self.push(
                        &s.pos,
                        DiagnosticKind::UnknownClass,
                        format!("`new` of unknown class `{class}`"),
                    );
                } else {
                    let c = p.class(class).expect("declared class");
                    let ok = if c.constructors.is_empty() {
                        args.is_empty()
                    } else {
                        self.h.constructor(p, class, args.len()).is_some()
                    };
                    if !ok {
                        self.push(
                            &s.pos,
                            DiagnosticKind::NoConstructor,
                            format!(
                                "no constructor of `{class}` takes {} argument(s)",
                                args.len()
                            ),
                        );
                    }
                }
            }
            StmtKind::ReflectiveAssign { ty, .. } => {
                if !self.h.is_declared(ty) {
                    self.push(
                        &s.pos,
                        DiagnosticKind::UnknownClass,
                        format!("`mkref` of unknown type `{ty}`"),
                    );
                }
            }
            StmtKind::StaticStore { class, field, .. }
            | StmtKind::StaticLoad { class, field, .. } => {
                if !self.h.is_class(class) {
                    self.push(
                        &s.pos,
                        DiagnosticKind::UnknownClass,
                        format!("static access to unknown class `{class}`"),
                    );
                } else if self.h.field(p, class, field, true).is_none() {
                    self.push(
                        &s.pos,
                        DiagnosticKind::UnknownField,
                        format!("unknown static field `{class}::{field}`"),
                    );
                }
            }
            StmtKind::StaticCall {
                class,
                method,
                args,
                ..
            } => {
                if !self.h.is_class(class) {
                    self.push(
                        &s.pos,
                        DiagnosticKind::UnknownClass,
                        format!("static call on unknown class `{class}`"),
                    );
                } else if self.h.static_method(p, class, method, args.len()).is_none() {
                    self.push(
                        &s.pos,
                        DiagnosticKind::UnknownMethod,
                        format!("unknown static method `{class}::{method}/{}`", args.len()),
                    );
                }
            }
            StmtKind::VirtualCall { method, args, .. }
                if !self.h.method_name_declared(p, method, args.len()) =>
            {
                self.push(
                    &s.pos,
                    DiagnosticKind::UnknownMethod,
                    format!("method `{method}/{}` is declared nowhere", args.len()),
                );
            }
            _ => {}
        }
    }

    fn positions(&mut self) {
        let mut seen = HashSet::new();
        let mut dups = Vec::new();
        for (_, s) in self.p.statements() {
            if !seen.insert(&s.pos) {
                dups.push(s.pos.clone());
            }
        }
        for pos in dups {
            self.push(
                &pos,
                DiagnosticKind::DuplicatePosition,
                format!("more than one statement on line {}", pos.line),
            );
        }
    }
}

fn reaches(edges: &HashMap<&str, Vec<&str>>, from: &str, to: &str) -> bool {
    let mut seen = HashSet::new();
    let mut stack = vec![from];
    while let Some(t) = stack.pop() {
        if let Some(next) = edges.get(t) {
            for &n in next {
                if n == to {
                    return true;
                }
                if seen.insert(n) {
                    stack.push(n);
                }
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_unvalidated;

    fn diags(src: &str) -> Vec<Diagnostic> {
        validate_program(&parse_unvalidated("v.mir", src).unwrap())
    }

    #[test]
    fn well_formed_two_classes() {
        let d = diags("class A {\n field x: int;\n method m() {\n  this.x = 1;\n }\n}\nclass B extends A {\n}\n");
        assert!(d.is_empty(), "{d:?}");
    }

    #[test]
    fn unknown_supertype() {
        let d = diags("class A extends Missing {\n}\n");
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::UnknownSupertype);
        assert!(d[0].message.contains("unknown supertype"));
    }

    #[test]
    fn inheritance_cycle_reported_once() {
        let d = diags("class A extends B {\n}\nclass B extends A {\n}\n");
        assert_eq!(d.len(), 1, "{d:?}");
        assert_eq!(d[0].kind, DiagnosticKind::InheritanceCycle);
        assert!(d[0].message.contains("inheritance cycle"));
    }

    #[test]
    fn duplicate_members_and_positions() {
        let d = diags("class A {\n field x: int;\n field x: int;\n method m() { a = 1; b = 2; }\n method m() {\n }\n}\n");
        let kinds: Vec<_> = d.iter().map(|d| d.kind).collect();
        assert!(kinds.contains(&DiagnosticKind::DuplicateField));
        assert!(kinds.contains(&DiagnosticKind::DuplicateMethod));
        assert!(kinds.contains(&DiagnosticKind::DuplicatePosition));
    }

    #[test]
    fn unresolved_references() {
        let d = diags("class A {\n static method m() {\n  x = new Nope();\n  y = A::g;\n  call this.f();\n }\n}\n");
        let kinds: Vec<_> = d.iter().map(|d| d.kind).collect();
        assert!(kinds.contains(&DiagnosticKind::UnknownClass));
        assert!(kinds.contains(&DiagnosticKind::UnknownField));
        assert!(kinds.contains(&DiagnosticKind::UnknownMethod));
        assert!(kinds.contains(&DiagnosticKind::ThisInStatic));
    }
}
