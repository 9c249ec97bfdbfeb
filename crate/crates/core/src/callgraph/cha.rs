use std::collections::{BTreeSet, VecDeque};

use super::{CallGraph, GraphBuilder, StaticTypes, TypeSet};
use crate::error::{Error, Result};
use crate::mir::{Hierarchy, MethodId, Program, Stmt, StmtKind};

/// Hierarchy plus inferred local types: everything CHA needs, computed once
/// per program.
#[derive(Clone, Debug)]
pub struct ChaResolver<'p> {
    pub program: &'p Program,
    pub hierarchy: Hierarchy,
    pub types: StaticTypes,
}

impl<'p> ChaResolver<'p> {
    pub fn new(program: &'p Program) -> Self {
        let hierarchy = Hierarchy::new(program);
        let types = StaticTypes::infer(program, &hierarchy);
        ChaResolver {
            program,
            hierarchy,
            types,
        }
    }

    /// Concrete classes a receiver of the given static type may be.
    pub fn receiver_classes(&self, t: &TypeSet) -> BTreeSet<String> {
        let names: Vec<&String> = match t.names() {
            Some(n) => n.iter().filter(|n| self.hierarchy.is_declared(n)).collect(),
            None => Vec::new(),
        };
        if names.is_empty() {
            return self.hierarchy.classes().iter().cloned().collect();
        }
        names
            .into_iter()
            .flat_map(|n| self.hierarchy.implementers_of(n).unwrap_or_default())
            .collect()
    }

    /// Targets of a call statement in method `caller`. Non-call statements
    /// and allocations of classes without a matching constructor yield none.
    pub fn resolve(&self, caller: MethodId, s: &Stmt) -> Result<BTreeSet<MethodId>> {
        let (p, h) = (self.program, &self.hierarchy);
        match &s.kind {
            StmtKind::VirtualCall {
                receiver,
                method,
                args,
                ..
            } => {
                if !h.method_name_declared(p, method, args.len()) {
                    return Err(Error::UnresolvedMethod {
                        site: s.pos.clone(),
                        method: method.clone(),
                    });
                }
                let classes = self.receiver_classes(&self.types.of(caller, receiver));
                Ok(classes
                    .iter()
                    .filter_map(|c| h.dispatch(p, c, method, args.len()))
                    .collect())
            }
            StmtKind::StaticCall {
                class,
                method,
                args,
                ..
            } => match h.static_method(p, class, method, args.len()) {
                Some(m) => Ok(BTreeSet::from([m])),
                None => Err(Error::UnresolvedMethod {
                    site: s.pos.clone(),
                    method: format!("{class}::{method}"),
                }),
            },
            StmtKind::AllocAssign { class, args, .. } => {
                Ok(h.constructor(p, class, args.len()).into_iter().collect())
            }
            _ => Ok(BTreeSet::new()),
        }
    }

    /// Closure of [`Self::resolve`] over everything reachable from `root`.
    pub fn build_graph(&self, root: MethodId) -> Result<CallGraph> {
        let mut g = CallGraph::new(GraphBuilder::Cha);
        g.add_root(root);
        let mut queue = VecDeque::from([root]);
        let mut seen = BTreeSet::from([root]);
        while let Some(m) = queue.pop_front() {
            for s in self.program.method(m).statements() {
                if !s.kind.is_call() {
                    continue;
                }
                for t in self.resolve(m, s)? {
                    g.add_edge(s.pos.clone(), m, t);
                    if seen.insert(t) {
                        queue.push_back(t);
                    }
                }
            }
        }
        Ok(g)
    }
}

/// CHA targets of one call statement inside `caller`.
pub fn cha_resolve(p: &Program, caller: MethodId, site: &Stmt) -> Result<BTreeSet<MethodId>> {
    ChaResolver::new(p).resolve(caller, site)
}

/// CHA call graph rooted at `root`.
pub fn build_cha_graph(p: &Program, root: MethodId) -> Result<CallGraph> {
    ChaResolver::new(p).build_graph(root)
}
