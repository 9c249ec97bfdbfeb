//! Inclusion-based points-to analysis: flow- and context-insensitive,
//! field-sensitive, one smashed slot per array, call graph built on the fly.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write};

use serde::{Deserialize, Serialize};

use crate::callgraph::{CallGraph, GraphBuilder};
use crate::error::{Error, Result};
use crate::mir::{Hierarchy, MethodId, Operand, Position, Program, StmtKind, THIS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SiteKind {
    Object,
    Array,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocSite {
    pub id: u32,
    pub pos: Position,
    /// Class of the allocated object, or `T[]` for arrays.
    pub class: String,
    pub kind: SiteKind,
}

/// Dense numbering of every `new`/`newarr` statement in declaration order.
/// Reflective instantiations get no site.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AllocSites {
    pub sites: Vec<AllocSite>,
    by_pos: HashMap<Position, u32>,
}

impl AllocSites {
    pub fn number(p: &Program) -> Self {
        let mut out = AllocSites::default();
        for (_, s) in p.statements() {
            let (class, kind) = match &s.kind {
                StmtKind::AllocAssign { class, .. } => (class.clone(), SiteKind::Object),
                StmtKind::ArrayAlloc { elem_ty, .. } => (format!("{elem_ty}[]"), SiteKind::Array),
                _ => continue,
            };
            let id = out.sites.len() as u32;
            out.by_pos.insert(s.pos.clone(), id);
            out.sites.push(AllocSite {
                id,
                pos: s.pos.clone(),
                class,
                kind,
            });
        }
        out
    }

    pub fn at(&self, pos: &Position) -> Option<u32> {
        self.by_pos.get(pos).copied()
    }

    pub fn get(&self, id: u32) -> &AllocSite {
        &self.sites[id as usize]
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
}

/// Abstract pointer variables.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pointer {
    Local(MethodId, String),
    Field(u32, String),
    ArraySlot(u32),
    Static(String, String),
    Return(MethodId),
}

/// Result of a points-to query: the site set, or `Miss` when it is empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pts {
    Sites(BTreeSet<u32>),
    Miss,
}

impl Pts {
    pub fn is_miss(&self) -> bool {
        matches!(self, Pts::Miss)
    }

    pub fn intersects(&self, other: &Pts) -> bool {
        match (self, other) {
            (Pts::Sites(a), Pts::Sites(b)) => !a.is_disjoint(b),
            _ => false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PointsToResult {
    pub sites: AllocSites,
    pub pts: BTreeMap<Pointer, BTreeSet<u32>>,
    pub callgraph: CallGraph,
    pub entries: BTreeSet<MethodId>,
}

/// `main` static methods if any; otherwise every public method and constructor.
pub fn pa_entry_points(p: &Program) -> Result<BTreeSet<MethodId>> {
    let ids = p.method_ids();
    if ids.is_empty() {
        return Err(Error::NoEntryPoints);
    }
    let mains: BTreeSet<MethodId> = ids
        .iter()
        .copied()
        .filter(|&id| {
            let m = p.method(id);
            m.is_static && !m.is_constructor() && m.name == "main"
        })
        .collect();
    if !mains.is_empty() {
        return Ok(mains);
    }
    Ok(ids
        .into_iter()
        .filter(|&id| p.method(id).is_public)
        .collect())
}

struct Solver<'p> {
    p: &'p Program,
    h: Hierarchy,
    sites: AllocSites,
    pts: BTreeMap<Pointer, BTreeSet<u32>>,
    cg: CallGraph,
    reachable: BTreeSet<MethodId>,
}

impl<'p> Solver<'p> {
    fn get(&self, ptr: &Pointer) -> BTreeSet<u32> {
        self.pts.get(ptr).cloned().unwrap_or_default()
    }

    fn add(&mut self, ptr: Pointer, objs: &BTreeSet<u32>) -> bool {
        if objs.is_empty() {
            return false;
        }
        let slot = self.pts.entry(ptr).or_default();
        let before = slot.len();
        slot.extend(objs);
        slot.len() != before
    }

    fn operand(&self, m: MethodId, o: &Operand) -> BTreeSet<u32> {
        match o {
            Operand::Local(l) => self.get(&Pointer::Local(m, l.clone())),
            _ => BTreeSet::new(),
        }
    }

    fn bind_call(
        &mut self,
        caller: MethodId,
        target: MethodId,
        args: &[Operand],
        result: Option<&String>,
    ) -> bool {
        let mut changed = false;
        let params = self.p.method(target).params.clone();
        for (param, arg) in params.into_iter().zip(args) {
            let v = self.operand(caller, arg);
            changed |= self.add(Pointer::Local(target, param), &v);
        }
        if let Some(r) = result {
            let v = self.get(&Pointer::Return(target));
            changed |= self.add(Pointer::Local(caller, r.clone()), &v);
        }
        changed |= self.reachable.insert(target);
        changed
    }

    /// One pass over every reachable method; returns whether anything grew.
    fn round(&mut self) -> bool {
        let mut changed = false;
        let methods: Vec<MethodId> = self.reachable.iter().copied().collect();
        for m in methods {
            let p = self.p;
            for s in p.method(m).statements() {
                let local = |l: &str| Pointer::Local(m, l.to_string());
                match &s.kind {
                    StmtKind::AllocAssign {
                        target,
                        class,
                        args,
                    } => {
                        let o = self.sites.at(&s.pos).expect("numbered site");
                        changed |= self.add(local(target), &BTreeSet::from([o]));
                        if let Some(ctor) = self.h.constructor(p, class, args.len()) {
                            changed |= self.cg.add_edge(s.pos.clone(), m, ctor);
                            changed |= self
                                .add(Pointer::Local(ctor, THIS.to_string()), &BTreeSet::from([o]));
                            changed |= self.bind_call(m, ctor, args, None);
                        }
                    }
                    StmtKind::ArrayAlloc { target, .. } => {
                        let o = self.sites.at(&s.pos).expect("numbered site");
                        changed |= self.add(local(target), &BTreeSet::from([o]));
                    }
                    StmtKind::CopyAssign { target, source } => {
                        let v = self.operand(m, source);
                        changed |= self.add(local(target), &v);
                    }
                    StmtKind::FieldStore {
                        base,
                        field,
                        source,
                    } => {
                        let v = self.operand(m, source);
                        for o in self.get(&local(base)) {
                            changed |= self.add(Pointer::Field(o, field.clone()), &v);
                        }
                    }
                    StmtKind::FieldLoad {
                        target,
                        base,
                        field,
                    } => {
                        let mut v = BTreeSet::new();
                        for o in self.get(&local(base)) {
                            v.extend(self.get(&Pointer::Field(o, field.clone())));
                        }
                        changed |= self.add(local(target), &v);
                    }
                    StmtKind::StaticStore {
                        class,
                        field,
                        source,
                    } => {
                        let v = self.operand(m, source);
                        changed |= self.add(self.static_ptr(class, field), &v);
                    }
                    StmtKind::StaticLoad {
                        target,
                        class,
                        field,
                    } => {
                        let v = self.get(&self.static_ptr(class, field));
                        changed |= self.add(local(target), &v);
                    }
                    StmtKind::ArrayStore { base, source, .. } => {
                        let v = self.operand(m, source);
                        for o in self.get(&local(base)) {
                            changed |= self.add(Pointer::ArraySlot(o), &v);
                        }
                    }
                    StmtKind::ArrayLoad { target, base, .. } => {
                        let mut v = BTreeSet::new();
                        for o in self.get(&local(base)) {
                            v.extend(self.get(&Pointer::ArraySlot(o)));
                        }
                        changed |= self.add(local(target), &v);
                    }
                    StmtKind::VirtualCall {
                        receiver,
                        method,
                        args,
                        result,
                    } => {
                        for o in self.get(&local(receiver)) {
                            let class = self.sites.get(o).class.clone();
                            if let Some(t) = self.h.dispatch(p, &class, method, args.len()) {
                                changed |= self.cg.add_edge(s.pos.clone(), m, t);
                                changed |= self
                                    .add(Pointer::Local(t, THIS.to_string()), &BTreeSet::from([o]));
                                changed |= self.bind_call(m, t, args, result.as_ref());
                            }
                        }
                    }
                    StmtKind::StaticCall {
                        class,
                        method,
                        args,
                        result,
                    } => {
                        if let Some(t) = self.h.static_method(p, class, method, args.len()) {
                            changed |= self.cg.add_edge(s.pos.clone(), m, t);
                            changed |= self.bind_call(m, t, args, result.as_ref());
                        }
                    }
                    StmtKind::Return(Some(v)) => {
                        let v = self.get(&local(v));
                        changed |= self.add(Pointer::Return(m), &v);
                    }
                    StmtKind::ReflectiveAssign { .. }
                    | StmtKind::OpaqueOp { .. }
                    | StmtKind::Return(None)
                    | StmtKind::If { .. }
                    | StmtKind::While { .. } => {}
                }
            }
        }
        changed
    }

    /// Static fields are keyed by their declaring class.
    fn static_ptr(&self, class: &str, field: &str) -> Pointer {
        let owner = self
            .h
            .field(self.p, class, field, true)
            .map(|(c, _)| c.to_string())
            .unwrap_or_else(|| class.to_string());
        Pointer::Static(owner, field.to_string())
    }

    fn unresolved_sites(&self) -> BTreeSet<Position> {
        let mut out = BTreeSet::new();
        for &m in &self.reachable {
            for s in self.p.method(m).statements() {
                if let StmtKind::VirtualCall { receiver, .. } = &s.kind {
                    if self.get(&Pointer::Local(m, receiver.clone())).is_empty() {
                        out.insert(s.pos.clone());
                    }
                }
            }
        }
        out
    }
}

/// Least fixpoint of the inclusion constraints reachable from `entries`.
pub fn solve(p: &Program, entries: &BTreeSet<MethodId>) -> PointsToResult {
    let mut cg = CallGraph::new(GraphBuilder::Pts);
    for &e in entries {
        cg.add_root(e);
    }
    let mut s = Solver {
        p,
        h: Hierarchy::new(p),
        sites: AllocSites::number(p),
        pts: BTreeMap::new(),
        cg,
        reachable: entries.clone(),
    };
    while s.round() {}
    s.cg.unresolved = s.unresolved_sites();
    PointsToResult {
        sites: s.sites,
        pts: s.pts,
        callgraph: s.cg,
        entries: entries.clone(),
    }
}

/// Entry points plus solve, the usual way in.
pub fn analyze_program(p: &Program) -> Result<PointsToResult> {
    Ok(solve(p, &pa_entry_points(p)?))
}

/// The on-the-fly call graph of a solved result.
pub fn build_pa_graph(r: &PointsToResult) -> CallGraph {
    r.callgraph.clone()
}

impl PointsToResult {
    /// Points-to set of `local` in method `m`; `Miss` if it is empty.
    pub fn pts_of(&self, p: &Program, m: MethodId, local: &str) -> Result<Pts> {
        let known = p
            .try_method(m)
            .is_some_and(|md| md.locals().contains(local) || (local == THIS && !md.is_static));
        if !known {
            let name = p
                .try_method(m)
                .map(|_| p.method_name(m))
                .unwrap_or_else(|| "?".into());
            return Err(Error::UnknownExpression(format!("{name}:{local}")));
        }
        Ok(self.local(m, local))
    }

    /// Unchecked lookup for locals known to exist.
    pub fn local(&self, m: MethodId, local: &str) -> Pts {
        match self.pts.get(&Pointer::Local(m, local.to_string())) {
            Some(s) if !s.is_empty() => Pts::Sites(s.clone()),
            _ => Pts::Miss,
        }
    }

    /// Whether one more propagation round would change anything.
    pub fn is_fixpoint(&self, p: &Program) -> bool {
        let reachable = self
            .callgraph
            .nodes
            .iter()
            .copied()
            .chain(self.entries.iter().copied())
            .collect();
        let mut s = Solver {
            p,
            h: Hierarchy::new(p),
            sites: self.sites.clone(),
            pts: self.pts.clone(),
            cg: self.callgraph.clone(),
            reachable,
        };
        !s.round()
    }

    /// Debug dump: `variable<TAB>{ids}` per pointer, then `#MISS` and the
    /// unresolved call sites.
    pub fn dump(&self, p: &Program) -> String {
        let mut out = String::new();
        for (ptr, set) in &self.pts {
            let ids: Vec<String> = set.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "{}\t{{{}}}", PointerName(p, ptr), ids.join(", "));
        }
        out.push_str("#MISS\n");
        for pos in &self.callgraph.unresolved {
            let _ = writeln!(out, "{pos}");
        }
        out
    }
}

struct PointerName<'a>(&'a Program, &'a Pointer);

impl fmt::Display for PointerName<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.1 {
            Pointer::Local(m, l) => write!(f, "{}:{l}", self.0.method_name(*m)),
            Pointer::Field(o, field) => write!(f, "#{o}.{field}"),
            Pointer::ArraySlot(o) => write!(f, "#{o}[]"),
            Pointer::Static(c, field) => write!(f, "{c}::{field}"),
            Pointer::Return(m) => write!(f, "{}:<return>", self.0.method_name(*m)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_str;

    fn sites_of(r: &PointsToResult, p: &Program, m: &str, l: &str) -> Pts {
        r.pts_of(p, p.find_method(m).unwrap(), l).unwrap()
    }

    #[test]
    fn alloc_copy_store_load() {
        let p = parse_str(
            "a.mir",
            "class A { field f: B; }\nclass B { }\nclass M {\n static method main() {\n  x = new A();\n  y = new B();\n  x.f = y;\n  z = x.f;\n  w = x;\n }\n}\n",
        )
        .unwrap();
        let r = analyze_program(&p).unwrap();
        assert_eq!(
            sites_of(&r, &p, "M.main", "w"),
            Pts::Sites(BTreeSet::from([0]))
        );
        assert_eq!(
            sites_of(&r, &p, "M.main", "z"),
            Pts::Sites(BTreeSet::from([1]))
        );
        assert!(r.is_fixpoint(&p));
        assert!(r
            .pts_of(&p, p.find_method("M.main").unwrap(), "nope")
            .is_err());
    }

    #[test]
    fn mkref_receiver_is_a_miss() {
        let p = parse_str(
            "r.mir",
            "interface R { method go(); }\nclass S implements R { method go() { } }\nclass M {\n static method main() {\n  h = mkref R;\n  call h.go();\n }\n}\n",
        )
        .unwrap();
        let r = analyze_program(&p).unwrap();
        assert!(sites_of(&r, &p, "M.main", "h").is_miss());
        assert_eq!(r.callgraph.edges.len(), 0);
        assert_eq!(r.callgraph.unresolved.len(), 1);
        assert!(r.dump(&p).contains("#MISS\nr.mir:6\n"));
    }

    #[test]
    fn entry_points() {
        let lib = parse_str(
            "l.mir",
            "class A {\n public method a() { }\n public method b() { }\n private method c() { }\n}\nclass B {\n public method d() { }\n private method e() { }\n}\n",
        )
        .unwrap();
        let names: Vec<String> = pa_entry_points(&lib)
            .unwrap()
            .into_iter()
            .map(|m| lib.method_name(m))
            .collect();
        assert_eq!(names, ["A.a", "A.b", "B.d"]);
        let two = parse_str("m.mir", "class A { static method main() { } }\nclass B { static method main() { } method x() { } }\n").unwrap();
        assert_eq!(pa_entry_points(&two).unwrap().len(), 2);
        let none = parse_str("n.mir", "class A { }\n").unwrap();
        assert!(matches!(pa_entry_points(&none), Err(Error::NoEntryPoints)));
    }
}
