//! Call graphs: class-hierarchy construction rooted at the analysis entry,
//! plus the shared graph type also produced by the points-to solver.

mod cha;
mod types;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

pub use cha::{build_cha_graph, cha_resolve, ChaResolver};
pub use types::{field_type, StaticTypes, TypeSet};

use crate::mir::{MethodId, Position, Program};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GraphBuilder {
    Cha,
    Pts,
    Hybrid,
}

/// One resolved call: the site, the method containing it, the callee.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CallEdge {
    pub site: Position,
    pub caller: MethodId,
    pub target: MethodId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CallGraph {
    pub builder: GraphBuilder,
    pub roots: BTreeSet<MethodId>,
    pub nodes: BTreeSet<MethodId>,
    pub edges: BTreeSet<CallEdge>,
    /// Virtual call sites for which no target could be determined.
    pub unresolved: BTreeSet<Position>,
    by_site: BTreeMap<Position, BTreeSet<MethodId>>,
}

impl CallGraph {
    pub fn new(builder: GraphBuilder) -> Self {
        CallGraph {
            builder,
            roots: BTreeSet::new(),
            nodes: BTreeSet::new(),
            edges: BTreeSet::new(),
            unresolved: BTreeSet::new(),
            by_site: BTreeMap::new(),
        }
    }

    pub fn add_root(&mut self, m: MethodId) {
        self.roots.insert(m);
        self.nodes.insert(m);
    }

    /// Adds an edge; returns whether it was new.
    pub fn add_edge(&mut self, site: Position, caller: MethodId, target: MethodId) -> bool {
        self.nodes.insert(caller);
        self.nodes.insert(target);
        self.by_site.entry(site.clone()).or_default().insert(target);
        self.edges.insert(CallEdge {
            site,
            caller,
            target,
        })
    }

    /// Targets recorded for a call site (empty when none).
    pub fn targets_at(&self, site: &Position) -> BTreeSet<MethodId> {
        self.by_site.get(site).cloned().unwrap_or_default()
    }

    pub fn has_site(&self, site: &Position) -> bool {
        self.by_site.contains_key(site)
    }

    /// Edges leaving `m`.
    pub fn callees(&self, m: MethodId) -> impl Iterator<Item = &CallEdge> {
        self.edges.iter().filter(move |e| e.caller == m)
    }

    /// Debug dump: one `caller<TAB>file:line<TAB>target` line per edge.
    pub fn dump(&self, p: &Program) -> String {
        let mut out = String::new();
        for e in &self.edges {
            let _ = writeln!(
                out,
                "{}\t{}\t{}",
                p.method_name(e.caller),
                e.site,
                p.method_name(e.target)
            );
        }
        out
    }
}
