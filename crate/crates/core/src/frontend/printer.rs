use std::collections::BTreeMap;
use std::fmt::Write;

use crate::mir::{
    ClassDef, InterfaceDef, MethodDef, MethodKind, Operand, Program, Provenance, Stmt, StmtKind,
};

/// Canonical source text for a whole program in one unit: interfaces first,
/// then classes; within a class fields, constructors, methods. One statement
/// per line.
pub fn pretty_print(p: &Program) -> String {
    let mut out = String::new();
    for i in &p.interfaces {
        interface(&mut out, i);
    }
    for c in &p.classes {
        class(&mut out, c);
    }
    out
}

/// Canonical text per source file, grouping declarations by the file they
/// were parsed from.
pub fn pretty_print_units(p: &Program) -> BTreeMap<String, String> {
    let mut out: BTreeMap<String, String> = BTreeMap::new();
    for i in &p.interfaces {
        interface(out.entry(i.pos.file.to_string()).or_default(), i);
    }
    for c in &p.classes {
        class(out.entry(c.pos.file.to_string()).or_default(), c);
    }
    out
}

fn interface(out: &mut String, i: &InterfaceDef) {
    out.push_str("interface ");
    out.push_str(&i.name);
    if !i.extends.is_empty() {
        let _ = write!(out, " extends {}", i.extends.join(", "));
    }
    out.push_str(" {\n");
    for m in &i.methods {
        let _ = writeln!(out, "  method {}({});", m.name, m.params.join(", "));
    }
    out.push_str("}\n");
}

fn class(out: &mut String, c: &ClassDef) {
    let _ = write!(out, "class {}", c.name);
    if let Some(s) = &c.superclass {
        let _ = write!(out, " extends {s}");
    }
    if !c.interfaces.is_empty() {
        let _ = write!(out, " implements {}", c.interfaces.join(", "));
    }
    out.push_str(" {\n");
    for f in &c.fields {
        let _ = writeln!(
            out,
            "  field {}{}: {};",
            if f.is_static { "static " } else { "" },
            f.name,
            f.ty
        );
    }
    for m in c.constructors.iter().chain(&c.methods) {
        method(out, m);
    }
    out.push_str("}\n");
}

fn method(out: &mut String, m: &MethodDef) {
    let vis = if m.is_public { "public" } else { "private" };
    match m.kind {
        MethodKind::Constructor => {
            let _ = writeln!(out, "  {vis} ctor({}) {{", m.params.join(", "));
        }
        MethodKind::Method => {
            let st = if m.is_static { "static " } else { "" };
            let _ = writeln!(
                out,
                "  {vis} {st}method {}({}) {{",
                m.name,
                m.params.join(", ")
            );
        }
    }
    block(out, &m.body, 2);
    out.push_str("  }\n");
}

fn block(out: &mut String, stmts: &[Stmt], depth: usize) {
    for s in stmts {
        stmt(out, s, depth);
    }
}

fn args(ops: &[Operand]) -> String {
    ops.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

/// Text of a simple statement without marker or terminator.
pub fn simple_text(kind: &StmtKind) -> String {
    use StmtKind::*;
    match kind {
        AllocAssign {
            target,
            class,
            args: a,
        } => format!("{target} = new {class}({})", args(a)),
        ReflectiveAssign { target, ty } => format!("{target} = mkref {ty}"),
        CopyAssign { target, source } => format!("{target} = {source}"),
        FieldStore {
            base,
            field,
            source,
        } => format!("{base}.{field} = {source}"),
        FieldLoad {
            target,
            base,
            field,
        } => format!("{target} = {base}.{field}"),
        StaticStore {
            class,
            field,
            source,
        } => format!("{class}::{field} = {source}"),
        StaticLoad {
            target,
            class,
            field,
        } => format!("{target} = {class}::{field}"),
        ArrayAlloc {
            target,
            elem_ty,
            len,
        } => format!("{target} = newarr {elem_ty} {len}"),
        ArrayStore {
            base,
            index,
            source,
        } => format!("{base}[{index}] = {source}"),
        ArrayLoad {
            target,
            base,
            index,
        } => format!("{target} = {base}[{index}]"),
        VirtualCall {
            receiver,
            method,
            args: a,
            result,
        } => match result {
            Some(r) => format!("{r} = {receiver}.{method}({})", args(a)),
            None => format!("call {receiver}.{method}({})", args(a)),
        },
        StaticCall {
            class,
            method,
            args: a,
            result,
        } => match result {
            Some(r) => format!("{r} = {class}::{method}({})", args(a)),
            None => format!("call {class}::{method}({})", args(a)),
        },
        Return(Some(v)) => format!("return {v}"),
        Return(None) => "return".to_string(),
        OpaqueOp { target, operands } => format!("{target} = op({})", args(operands)),
        If { cond, .. } => format!("if {cond}"),
        While { cond, .. } => format!("while {cond}"),
    }
}

fn stmt(out: &mut String, s: &Stmt, depth: usize) {
    let pad = "  ".repeat(depth);
    match &s.kind {
        StmtKind::If {
            cond,
            then_block,
            else_block,
        } => {
            let _ = writeln!(out, "{pad}if {cond} {{");
            block(out, then_block, depth + 1);
            if else_block.is_empty() {
                let _ = writeln!(out, "{pad}}}");
            } else {
                let _ = writeln!(out, "{pad}}} else {{");
                block(out, else_block, depth + 1);
                let _ = writeln!(out, "{pad}}}");
            }
        }
        StmtKind::While { cond, body } => {
            let _ = writeln!(out, "{pad}while {cond} {{");
            block(out, body, depth + 1);
            let _ = writeln!(out, "{pad}}}");
        }
        kind => {
            let marker = match s.provenance {
                Provenance::Base => "",
                Provenance::Left => " @L",
                Provenance::Right => " @R",
            };
            let _ = writeln!(out, "{pad}{}{marker};", simple_text(kind));
        }
    }
}
