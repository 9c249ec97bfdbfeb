//! The override-assignment detector.

mod compare;
mod engine;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use compare::{
    compare_array, compare_instance_field, compare_local, compare_static_field, same_element, Cmp,
    Context,
};
pub use engine::{detect, enumerate_write_paths, resolve_call, Analyzer, Resolution};

use crate::mir::{Index, MethodId, Position, Provenance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Nopa,
    Pa,
    Hybrid,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Nopa, Mode::Pa, Mode::Hybrid];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Nopa => "nopa",
            Mode::Pa => "pa",
            Mode::Hybrid => "hybrid",
        }
    }

    pub fn uses_points_to(self) -> bool {
        self != Mode::Nopa
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "nopa" => Ok(Mode::Nopa),
            "pa" => Ok(Mode::Pa),
            "hybrid" => Ok(Mode::Hybrid),
            _ => Err(format!("unknown mode `{s}` (expected nopa, pa or hybrid)")),
        }
    }
}

/// A state element a statement writes to.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ElementKey {
    /// A local of a method.
    Local { method: MethodId, name: String },
    /// `base.field`, with `base` a local of `method`.
    InstanceField {
        method: MethodId,
        base: String,
        field: String,
    },
    /// `base[index]`, with `base` a local of `method`.
    Array {
        method: MethodId,
        base: String,
        index: Index,
    },
    /// Static field, keyed by declaring class and declared type.
    StaticField {
        class: String,
        field: String,
        ty: String,
    },
}

impl ElementKey {
    pub fn kind(&self) -> &'static str {
        match self {
            ElementKey::Local { .. } => "LV",
            ElementKey::InstanceField { .. } => "IFR",
            ElementKey::Array { .. } => "AR",
            ElementKey::StaticField { .. } => "SFR",
        }
    }

    pub fn method(&self) -> Option<MethodId> {
        match self {
            ElementKey::Local { method, .. }
            | ElementKey::InstanceField { method, .. }
            | ElementKey::Array { method, .. } => Some(*method),
            ElementKey::StaticField { .. } => None,
        }
    }
}

/// A call site the traversal went through.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CallHop {
    pub caller: MethodId,
    pub site: Position,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WriteEvent {
    pub element: ElementKey,
    pub pos: Position,
    /// Effective provenance: the statement's own marker, else that of the
    /// innermost marked call site on the call path.
    pub provenance: Provenance,
    pub method: MethodId,
    pub in_constructor: bool,
    pub call_path: Arc<[CallHop]>,
}

impl WriteEvent {
    /// Line in the entry method that leads to this write.
    pub fn entry_line(&self) -> u32 {
        self.call_path
            .first()
            .map_or(self.pos.line, |h| h.site.line)
    }

    pub fn same_constructor(&self, other: &WriteEvent) -> bool {
        self.in_constructor && other.in_constructor && self.method == other.method
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalysisBudget {
    pub depth: usize,
    /// Statement visits before giving up.
    pub fuel: u64,
    pub wall_clock: Option<Duration>,
    pub path_cap: usize,
    /// Stop at the first conflict.
    pub early_exit: bool,
}

impl Default for AnalysisBudget {
    fn default() -> Self {
        AnalysisBudget {
            depth: 5,
            fuel: 500_000,
            wall_clock: Some(Duration::from_secs(300)),
            path_cap: 4096,
            early_exit: false,
        }
    }
}

impl AnalysisBudget {
    /// Defaults without the wall clock, so outcomes depend on fuel only.
    pub fn deterministic() -> Self {
        AnalysisBudget {
            wall_clock: None,
            ..Self::default()
        }
    }

    pub fn with_fuel(fuel: u64) -> Self {
        AnalysisBudget {
            fuel,
            ..Self::deterministic()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    True,
    False,
    Timeout,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::True => "true",
            Verdict::False => "false",
            Verdict::Timeout => "timeout",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "true" => Ok(Verdict::True),
            "false" => Ok(Verdict::False),
            "timeout" => Ok(Verdict::Timeout),
            _ => Err(format!("unknown verdict `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MissReason {
    #[serde(rename = "empty-pts")]
    EmptyPts,
    #[serde(rename = "unresolved-call")]
    UnresolvedCall,
}

impl MissReason {
    pub fn as_str(self) -> &'static str {
        match self {
            MissReason::EmptyPts => "empty-pts",
            MissReason::UnresolvedCall => "unresolved-call",
        }
    }
}

/// A place where points-to information was missing.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MissRef {
    pub pos: Position,
    pub expression: String,
    pub reason: MissReason,
    pub on_conflict_path: bool,
}

/// One detected override: `overriding` is the later write, `overridden`
/// the earlier one by the other developer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConflictReport {
    pub entry: MethodId,
    pub element: String,
    pub overriding: WriteEvent,
    pub overridden: WriteEvent,
}

impl ConflictReport {
    pub fn over_line(&self) -> u32 {
        self.overriding.entry_line()
    }

    pub fn under_line(&self) -> u32 {
        self.overridden.entry_line()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub visited: u64,
    pub paths: u64,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalysisOutcome {
    pub verdict: Verdict,
    pub conflicts: Vec<ConflictReport>,
    pub missrefs: Vec<MissRef>,
    pub stats: Stats,
}
