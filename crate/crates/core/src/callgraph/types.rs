use std::collections::{BTreeSet, HashMap};

use crate::mir::{array_elem, Hierarchy, MethodId, Operand, Program, StmtKind, THIS};

/// Static type knowledge about a local: a set of type names, or `Top` when
/// anything is possible. An empty known set means no assignment was seen.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeSet {
    Top,
    Known(BTreeSet<String>),
}

impl TypeSet {
    pub fn single(t: impl Into<String>) -> Self {
        TypeSet::Known(BTreeSet::from([t.into()]))
    }

    pub fn empty() -> Self {
        TypeSet::Known(BTreeSet::new())
    }

    /// Joins `other` into `self`; returns whether `self` grew.
    pub fn join(&mut self, other: &TypeSet) -> bool {
        match (&mut *self, other) {
            (TypeSet::Top, _) => false,
            (_, TypeSet::Top) => {
                *self = TypeSet::Top;
                true
            }
            (TypeSet::Known(a), TypeSet::Known(b)) => {
                let before = a.len();
                a.extend(b.iter().cloned());
                a.len() != before
            }
        }
    }

    /// True when nothing useful is known (Top or no assignment seen).
    pub fn is_unknown(&self) -> bool {
        match self {
            TypeSet::Top => true,
            TypeSet::Known(s) => s.is_empty(),
        }
    }

    pub fn names(&self) -> Option<&BTreeSet<String>> {
        match self {
            TypeSet::Top => None,
            TypeSet::Known(s) => Some(s),
        }
    }
}

/// Flow-insensitive static types of every local of every method.
///
/// A local's type is the union of the types of everything assigned to it
/// in its method: allocations, reflective instantiations, declared field and
/// array element types, copies. Parameters take the union of argument types
/// over all call sites that may reach them; methods nobody calls get `Top`
/// parameters, as do call results.
#[derive(Clone, Debug, Default)]
pub struct StaticTypes {
    env: HashMap<MethodId, HashMap<String, TypeSet>>,
}

struct ParamFlow {
    caller: MethodId,
    callee: MethodId,
    param: usize,
    arg: Operand,
}

impl StaticTypes {
    pub fn infer(p: &Program, h: &Hierarchy) -> Self {
        let ids = p.method_ids();
        let mut flows = Vec::new();
        for &caller in &ids {
            for s in p.method(caller).statements() {
                let (callees, args): (Vec<MethodId>, &[Operand]) = match &s.kind {
                    StmtKind::VirtualCall { method, args, .. } => (
                        ids.iter()
                            .copied()
                            .filter(|&c| {
                                let m = p.method(c);
                                !m.is_static
                                    && !m.is_constructor()
                                    && m.name == *method
                                    && m.arity() == args.len()
                            })
                            .collect(),
                        args,
                    ),
                    StmtKind::StaticCall {
                        class,
                        method,
                        args,
                        ..
                    } => (
                        h.static_method(p, class, method, args.len())
                            .into_iter()
                            .collect(),
                        args,
                    ),
                    StmtKind::AllocAssign { class, args, .. } => (
                        h.constructor(p, class, args.len()).into_iter().collect(),
                        args,
                    ),
                    _ => continue,
                };
                for callee in callees {
                    for (param, arg) in args.iter().enumerate() {
                        flows.push(ParamFlow {
                            caller,
                            callee,
                            param,
                            arg: arg.clone(),
                        });
                    }
                }
            }
        }
        let called: BTreeSet<MethodId> = flows.iter().map(|f| f.callee).collect();

        let mut env: HashMap<MethodId, HashMap<String, TypeSet>> = HashMap::new();
        for &id in &ids {
            let m = p.method(id);
            let mut locals = HashMap::new();
            if !m.is_static {
                locals.insert(THIS.to_string(), TypeSet::single(&m.declaring_class));
            }
            for param in &m.params {
                let init = if called.contains(&id) {
                    TypeSet::empty()
                } else {
                    TypeSet::Top
                };
                locals.insert(param.clone(), init);
            }
            env.insert(id, locals);
        }

        let mut changed = true;
        while changed {
            changed = false;
            for &id in &ids {
                let m = p.method(id);
                for s in m.statements() {
                    let Some(target) = s.kind.defined_local() else {
                        continue;
                    };
                    let t = {
                        let locals = &env[&id];
                        rhs_type(p, h, locals, &s.kind)
                    };
                    let slot = env
                        .get_mut(&id)
                        .expect("method env")
                        .entry(target.to_string())
                        .or_insert_with(TypeSet::empty);
                    changed |= slot.join(&t);
                }
            }
            for f in &flows {
                let t = operand_type(&env[&f.caller], &f.arg);
                let name = p.method(f.callee).params[f.param].clone();
                let slot = env
                    .get_mut(&f.callee)
                    .expect("callee env")
                    .entry(name)
                    .or_insert_with(TypeSet::empty);
                changed |= slot.join(&t);
            }
        }
        StaticTypes { env }
    }

    /// Types of `local` in method `m`; unknown locals are `Top`.
    pub fn of(&self, m: MethodId, local: &str) -> TypeSet {
        self.env
            .get(&m)
            .and_then(|e| e.get(local))
            .cloned()
            .unwrap_or(TypeSet::Top)
    }

    pub fn locals(&self, m: MethodId) -> Option<&HashMap<String, TypeSet>> {
        self.env.get(&m)
    }
}

fn operand_type(locals: &HashMap<String, TypeSet>, o: &Operand) -> TypeSet {
    match o {
        Operand::Local(l) => locals.get(l).cloned().unwrap_or_else(TypeSet::empty),
        Operand::Int(_) => TypeSet::single("int"),
        Operand::Str(_) => TypeSet::single("String"),
    }
}

/// Declared type of instance field `field` seen through a base of type `base`.
pub fn field_type(p: &Program, h: &Hierarchy, base: &TypeSet, field: &str) -> TypeSet {
    let fallback = || {
        let all = h.fields_named(p, field);
        if all.is_empty() {
            TypeSet::Top
        } else {
            TypeSet::Known(all.values().map(|f| f.ty.clone()).collect())
        }
    };
    match base.names() {
        Some(names) if !names.is_empty() => {
            let mut out = TypeSet::empty();
            for t in names {
                match h.field(p, t, field, false) {
                    Some((_, f)) => {
                        out.join(&TypeSet::single(&f.ty));
                    }
                    None => {
                        out.join(&fallback());
                    }
                }
            }
            out
        }
        _ => fallback(),
    }
}

fn rhs_type(
    p: &Program,
    h: &Hierarchy,
    locals: &HashMap<String, TypeSet>,
    kind: &StmtKind,
) -> TypeSet {
    let local = |l: &str| locals.get(l).cloned().unwrap_or_else(TypeSet::empty);
    match kind {
        StmtKind::AllocAssign { class, .. } => TypeSet::single(class),
        StmtKind::ReflectiveAssign { ty, .. } => TypeSet::single(ty),
        StmtKind::CopyAssign { source, .. } => operand_type(locals, source),
        StmtKind::FieldLoad { base, field, .. } => field_type(p, h, &local(base), field),
        StmtKind::StaticLoad { class, field, .. } => match h.field(p, class, field, true) {
            Some((_, f)) => TypeSet::single(&f.ty),
            None => TypeSet::Top,
        },
        StmtKind::ArrayAlloc { elem_ty, .. } => TypeSet::single(format!("{elem_ty}[]")),
        StmtKind::ArrayLoad { base, .. } => match local(base) {
            TypeSet::Known(s) if !s.is_empty() => {
                let mut out = TypeSet::empty();
                for t in &s {
                    match array_elem(t) {
                        Some(e) => out.join(&TypeSet::single(e)),
                        None => out.join(&TypeSet::Top),
                    };
                }
                out
            }
            _ => TypeSet::Top,
        },
        StmtKind::OpaqueOp { .. } => TypeSet::single("int"),
        StmtKind::VirtualCall { .. } | StmtKind::StaticCall { .. } => TypeSet::Top,
        _ => TypeSet::empty(),
    }
}
