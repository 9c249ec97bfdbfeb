use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{FieldDef, MethodId, MethodKind, Program};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum TypeRef {
    Class(usize),
    Interface(usize),
}

/// Precomputed subtype relation and member lookup tables for a program.
///
/// Built once per program; assumes names resolve and the inheritance graph is
/// acyclic (dangling or cyclic edges are skipped rather than followed).
#[derive(Clone, Debug)]
pub struct Hierarchy {
    types: HashMap<String, TypeRef>,
    /// Reflexive-transitive supertypes of every declared type.
    supers: HashMap<String, BTreeSet<String>>,
    /// Classes in declaration order.
    classes: Vec<String>,
}

impl Hierarchy {
    pub fn new(p: &Program) -> Self {
        let mut types = HashMap::new();
        for (i, c) in p.classes.iter().enumerate() {
            types.entry(c.name.clone()).or_insert(TypeRef::Class(i));
        }
        for (i, it) in p.interfaces.iter().enumerate() {
            types
                .entry(it.name.clone())
                .or_insert(TypeRef::Interface(i));
        }
        let direct = |name: &str| -> Vec<String> {
            match types.get(name) {
                Some(TypeRef::Class(i)) => {
                    let c = &p.classes[*i];
                    c.superclass
                        .iter()
                        .chain(c.interfaces.iter())
                        .cloned()
                        .collect()
                }
                Some(TypeRef::Interface(i)) => p.interfaces[*i].extends.clone(),
                None => Vec::new(),
            }
        };
        let mut supers = HashMap::new();
        for name in types.keys() {
            let mut seen = BTreeSet::new();
            let mut stack = vec![name.clone()];
            while let Some(t) = stack.pop() {
                if !types.contains_key(&t) || !seen.insert(t.clone()) {
                    continue;
                }
                stack.extend(direct(&t));
            }
            supers.insert(name.clone(), seen);
        }
        Hierarchy {
            types,
            supers,
            classes: p.classes.iter().map(|c| c.name.clone()).collect(),
        }
    }

    pub fn is_declared(&self, name: &str) -> bool {
        self.types.contains_key(name)
    }

    pub fn is_class(&self, name: &str) -> bool {
        matches!(self.types.get(name), Some(TypeRef::Class(_)))
    }

    pub fn is_interface(&self, name: &str) -> bool {
        matches!(self.types.get(name), Some(TypeRef::Interface(_)))
    }

    fn check(&self, name: &str) -> Result<()> {
        if self.is_declared(name) {
            Ok(())
        } else {
            Err(Error::UnknownType(name.to_string()))
        }
    }

    /// True iff `sub == sup` or `sub` transitively extends/implements `sup`.
    pub fn subtype_of(&self, sub: &str, sup: &str) -> Result<bool> {
        self.check(sub)?;
        self.check(sup)?;
        Ok(self.supers[sub].contains(sup))
    }

    /// Like [`subtype_of`](Self::subtype_of) but false for undeclared names.
    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        self.supers.get(sub).is_some_and(|s| s.contains(sup))
    }

    /// Equal or related by the subtype relation in either direction.
    pub fn related(&self, a: &str, b: &str) -> bool {
        a == b || self.is_subtype(a, b) || self.is_subtype(b, a)
    }

    /// Every concrete class that is a subtype of `t` (all classes are concrete).
    pub fn implementers_of(&self, t: &str) -> Result<BTreeSet<String>> {
        self.check(t)?;
        Ok(self
            .classes
            .iter()
            .filter(|c| self.is_subtype(c, t))
            .cloned()
            .collect())
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    /// Superclass chain starting at `class` itself.
    pub fn superclass_chain(&self, p: &Program, class: &str) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = self.class_idx(class);
        while let Some(i) = cur {
            if out.contains(&i) {
                break;
            }
            out.push(i);
            cur = p.classes[i]
                .superclass
                .as_deref()
                .and_then(|s| self.class_idx(s));
        }
        out
    }

    pub fn class_idx(&self, name: &str) -> Option<usize> {
        match self.types.get(name) {
            Some(TypeRef::Class(i)) => Some(*i),
            _ => None,
        }
    }

    /// Dynamic dispatch: the instance method `name/arity` that an object of
    /// class `class` runs, walking up the superclass chain.
    pub fn dispatch(&self, p: &Program, class: &str, name: &str, arity: usize) -> Option<MethodId> {
        for ci in self.superclass_chain(p, class) {
            if let Some(mi) = p.classes[ci]
                .methods
                .iter()
                .position(|m| !m.is_static && m.name == name && m.arity() == arity)
            {
                return Some(MethodId {
                    class: ci as u32,
                    kind: MethodKind::Method,
                    index: mi as u32,
                });
            }
        }
        None
    }

    /// Static method `class::name/arity`, searching superclasses as well.
    pub fn static_method(
        &self,
        p: &Program,
        class: &str,
        name: &str,
        arity: usize,
    ) -> Option<MethodId> {
        for ci in self.superclass_chain(p, class) {
            if let Some(mi) = p.classes[ci]
                .methods
                .iter()
                .position(|m| m.is_static && m.name == name && m.arity() == arity)
            {
                return Some(MethodId {
                    class: ci as u32,
                    kind: MethodKind::Method,
                    index: mi as u32,
                });
            }
        }
        None
    }

    /// Constructor of exactly `class` with the given arity.
    pub fn constructor(&self, p: &Program, class: &str, arity: usize) -> Option<MethodId> {
        let ci = self.class_idx(class)?;
        p.classes[ci]
            .constructors
            .iter()
            .position(|m| m.arity() == arity)
            .map(|i| MethodId {
                class: ci as u32,
                kind: MethodKind::Constructor,
                index: i as u32,
            })
    }

    /// Field lookup up the superclass chain; returns the declaring class too.
    pub fn field<'p>(
        &self,
        p: &'p Program,
        class: &str,
        field: &str,
        is_static: bool,
    ) -> Option<(&'p str, &'p FieldDef)> {
        for ci in self.superclass_chain(p, class) {
            let c = &p.classes[ci];
            if let Some(f) = c
                .fields
                .iter()
                .find(|f| f.name == field && f.is_static == is_static)
            {
                return Some((&c.name, f));
            }
        }
        None
    }

    /// All instance fields named `field` anywhere in the program, keyed by declaring class.
    pub fn fields_named<'p>(&self, p: &'p Program, field: &str) -> BTreeMap<&'p str, &'p FieldDef> {
        p.classes
            .iter()
            .filter_map(|c| {
                c.fields
                    .iter()
                    .find(|f| f.name == field && !f.is_static)
                    .map(|f| (c.name.as_str(), f))
            })
            .collect()
    }

    /// Whether any class or interface declares a method with this name and arity.
    pub fn method_name_declared(&self, p: &Program, name: &str, arity: usize) -> bool {
        p.classes.iter().any(|c| {
            c.methods
                .iter()
                .any(|m| m.name == name && m.arity() == arity)
        }) || p.interfaces.iter().any(|i| {
            i.methods
                .iter()
                .any(|m| m.name == name && m.params.len() == arity)
        })
    }
}
