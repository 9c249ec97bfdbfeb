use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;
use std::time::Instant;

use super::compare::{same_element, same_target};
use super::{
    AnalysisBudget, AnalysisOutcome, CallHop, ConflictReport, Context, ElementKey, MissReason,
    MissRef, Mode, Stats, Verdict, WriteEvent,
};
use crate::callgraph::ChaResolver;
use crate::error::{Error, Result};
use crate::mir::{MethodId, Program, Provenance, Stmt, StmtKind};
use crate::pointsto::{pa_entry_points, solve, PointsToResult};

/// Targets of one call statement under a mode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Resolution {
    pub targets: BTreeSet<MethodId>,
    pub miss: Option<MissRef>,
    /// The traversal should also consider not entering the call at all.
    pub may_skip: bool,
}

/// Resolves a call statement of `caller`. Points-to modes use the on-the-fly
/// graph for virtual calls; a receiver with no points-to information gives
/// no targets under `Pa` and the class-hierarchy targets under `Hybrid`.
pub fn resolve_call(
    ctx: &Context<'_>,
    caller: MethodId,
    s: &Stmt,
    mode: Mode,
) -> Result<Resolution> {
    let plain = |targets| Resolution {
        targets,
        miss: None,
        may_skip: false,
    };
    let (receiver, pa) = match (&s.kind, mode, ctx.pa) {
        (StmtKind::VirtualCall { receiver, .. }, Mode::Pa | Mode::Hybrid, Some(pa)) => {
            (receiver, pa)
        }
        _ => return Ok(plain(ctx.cha.resolve(caller, s)?)),
    };
    if !pa.local(caller, receiver).is_miss() {
        return Ok(plain(pa.callgraph.targets_at(&s.pos)));
    }
    let miss = MissRef {
        pos: s.pos.clone(),
        expression: crate::frontend::simple_text(&s.kind),
        reason: MissReason::UnresolvedCall,
        on_conflict_path: false,
    };
    Ok(match mode {
        Mode::Hybrid => Resolution {
            targets: ctx.cha.resolve(caller, s)?,
            miss: Some(miss),
            may_skip: true,
        },
        _ => Resolution {
            targets: BTreeSet::new(),
            miss: Some(miss),
            may_skip: false,
        },
    })
}

/// Per-program analysis state shared by every entry and mode.
pub struct Analyzer<'p> {
    program: &'p Program,
    cha: ChaResolver<'p>,
    pa: Option<PointsToResult>,
}

struct Frame {
    method: MethodId,
    in_ctor: bool,
    inherited: Provenance,
    path: Arc<[CallHop]>,
}

#[derive(Clone)]
enum Item<'p> {
    Stmt(&'p Stmt, Arc<Frame>),
    /// Local written by a call once the callee has returned.
    Result(&'p Stmt, Arc<Frame>),
}

/// Summary of one traversal.
#[derive(Clone, Debug, Default)]
pub struct Walk {
    pub stats: Stats,
    pub exhausted: bool,
    pub stopped: bool,
    pub missrefs: BTreeSet<MissRef>,
}

fn push_block<'p>(work: &mut Vec<Item<'p>>, block: &'p [Stmt], f: &Arc<Frame>) {
    work.extend(block.iter().rev().map(|s| Item::Stmt(s, f.clone())));
}

impl<'p> Analyzer<'p> {
    pub fn new(program: &'p Program) -> Self {
        let pa = pa_entry_points(program).ok().map(|e| solve(program, &e));
        Analyzer {
            program,
            cha: ChaResolver::new(program),
            pa,
        }
    }

    /// Class-hierarchy state only; points-to modes then behave as if every
    /// points-to set were empty.
    pub fn without_points_to(program: &'p Program) -> Self {
        Analyzer {
            program,
            cha: ChaResolver::new(program),
            pa: None,
        }
    }

    pub fn program(&self) -> &'p Program {
        self.program
    }

    pub fn cha(&self) -> &ChaResolver<'p> {
        &self.cha
    }

    pub fn points_to(&self) -> Option<&PointsToResult> {
        self.pa.as_ref()
    }

    pub fn context(&self) -> Context<'_> {
        Context {
            program: self.program,
            cha: &self.cha,
            pa: self.pa.as_ref(),
        }
    }

    fn event(&self, s: &Stmt, f: &Frame, element: ElementKey) -> WriteEvent {
        WriteEvent {
            element,
            pos: s.pos.clone(),
            provenance: if s.provenance.is_developer() {
                s.provenance
            } else {
                f.inherited
            },
            method: f.method,
            in_constructor: f.in_ctor,
            call_path: f.path.clone(),
        }
    }

    fn local_event(&self, s: &Stmt, f: &Frame, name: &str) -> WriteEvent {
        self.event(
            s,
            f,
            ElementKey::Local {
                method: f.method,
                name: name.to_string(),
            },
        )
    }

    fn static_key(&self, class: &str, field: &str) -> ElementKey {
        match self.cha.hierarchy.field(self.program, class, field, true) {
            Some((decl, fd)) => ElementKey::StaticField {
                class: decl.to_string(),
                field: field.to_string(),
                ty: fd.ty.clone(),
            },
            None => ElementKey::StaticField {
                class: class.to_string(),
                field: field.to_string(),
                ty: "?".into(),
            },
        }
    }

    /// Depth-first enumeration of the paths from `entry`. `on_path` sees the
    /// write events of each finished path (and of the partial path when the
    /// budget runs out); returning `true` stops the traversal.
    pub fn walk(
        &self,
        entry: MethodId,
        mode: Mode,
        budget: &AnalysisBudget,
        mut on_path: impl FnMut(&[WriteEvent]) -> bool,
    ) -> Result<Walk> {
        let p = self.program;
        let Some(em) = p.try_method(entry) else {
            return Err(Error::EntryNotFound(format!("{entry:?}")));
        };
        let ctx = self.context();
        let start = Instant::now();
        let mut out = Walk::default();
        let mut resolved: HashMap<(MethodId, *const Stmt), Resolution> = HashMap::new();

        let root = Arc::new(Frame {
            method: entry,
            in_ctor: em.is_constructor(),
            inherited: Provenance::Base,
            path: Arc::from([]),
        });
        let mut first = Vec::new();
        push_block(&mut first, &em.body, &root);
        let mut alts: Vec<(Vec<Item<'p>>, usize)> = vec![(first, 0)];
        let mut events: Vec<WriteEvent> = Vec::new();

        'paths: while let Some((mut work, len)) = alts.pop() {
            events.truncate(len);
            loop {
                let Some(item) = work.pop() else {
                    out.stats.paths += 1;
                    if on_path(&events) {
                        out.stopped = true;
                        break 'paths;
                    }
                    if out.stats.paths as usize >= budget.path_cap && !alts.is_empty() {
                        out.exhausted = true;
                        break 'paths;
                    }
                    break;
                };
                let (s, f) = match item {
                    Item::Result(s, f) => {
                        if let Some(l) = s.kind.defined_local() {
                            events.push(self.local_event(s, &f, l));
                        }
                        continue;
                    }
                    Item::Stmt(s, f) => (s, f),
                };
                let over_clock = budget
                    .wall_clock
                    .is_some_and(|w| out.stats.visited % 1024 == 0 && start.elapsed() > w);
                if out.stats.visited >= budget.fuel || over_clock {
                    out.exhausted = true;
                    on_path(&events);
                    break 'paths;
                }
                out.stats.visited += 1;
                match &s.kind {
                    StmtKind::If {
                        then_block,
                        else_block,
                        ..
                    } => {
                        let mut alt = work.clone();
                        push_block(&mut alt, else_block, &f);
                        alts.push((alt, events.len()));
                        push_block(&mut work, then_block, &f);
                    }
                    StmtKind::While { body, .. } => {
                        alts.push((work.clone(), events.len()));
                        push_block(&mut work, body, &f);
                    }
                    StmtKind::Return(_) => {
                        while matches!(work.last(), Some(Item::Stmt(_, g)) if Arc::ptr_eq(g, &f)) {
                            work.pop();
                        }
                    }
                    StmtKind::FieldStore { base, field, .. } => {
                        let key = ElementKey::InstanceField {
                            method: f.method,
                            base: base.clone(),
                            field: field.clone(),
                        };
                        events.push(self.event(s, &f, key));
                    }
                    StmtKind::ArrayStore { base, index, .. } => {
                        let key = ElementKey::Array {
                            method: f.method,
                            base: base.clone(),
                            index: index.clone(),
                        };
                        events.push(self.event(s, &f, key));
                    }
                    StmtKind::StaticStore { class, field, .. } => {
                        events.push(self.event(s, &f, self.static_key(class, field)));
                    }
                    k if k.is_call() => {
                        let res = match resolved.get(&(f.method, s as *const Stmt)) {
                            Some(r) => r.clone(),
                            None => {
                                let r = resolve_call(&ctx, f.method, s, mode)?;
                                resolved.insert((f.method, s as *const Stmt), r.clone());
                                r
                            }
                        };
                        if let Some(m) = &res.miss {
                            out.missrefs.insert(m.clone());
                        }
                        let on_stack =
                            |t: MethodId| t == f.method || f.path.iter().any(|h| h.caller == t);
                        let mut conts: Vec<Option<MethodId>> = if f.path.len() < budget.depth {
                            res.targets
                                .iter()
                                .copied()
                                .filter(|&t| !on_stack(t))
                                .map(Some)
                                .collect()
                        } else {
                            Vec::new()
                        };
                        if conts.is_empty() || res.may_skip {
                            conts.push(None);
                        }
                        let enter = |work: &mut Vec<Item<'p>>, t: Option<MethodId>| {
                            work.push(Item::Result(s, f.clone()));
                            if let Some(t) = t {
                                let tm = p.method(t);
                                let mut path = f.path.to_vec();
                                path.push(CallHop {
                                    caller: f.method,
                                    site: s.pos.clone(),
                                });
                                let inner = Arc::new(Frame {
                                    method: t,
                                    in_ctor: tm.is_constructor(),
                                    inherited: if s.provenance.is_developer() {
                                        s.provenance
                                    } else {
                                        f.inherited
                                    },
                                    path: path.into(),
                                });
                                push_block(work, &tm.body, &inner);
                            }
                        };
                        for &t in conts[1..].iter().rev() {
                            let mut alt = work.clone();
                            enter(&mut alt, t);
                            alts.push((alt, events.len()));
                        }
                        enter(&mut work, conts[0]);
                    }
                    k => {
                        if let Some(l) = k.defined_local() {
                            events.push(self.local_event(s, &f, l));
                        }
                    }
                }
            }
        }
        out.stats.elapsed = start.elapsed();
        Ok(out)
    }

    /// Text naming a written element, e.g. `this.<ReportSimple: int fixes>`.
    pub fn element_text(&self, e: &WriteEvent) -> String {
        let p = self.program;
        let h = &self.cha.hierarchy;
        match &e.element {
            ElementKey::Local { method, name } => format!("{name} in {}()", p.method_name(*method)),
            ElementKey::InstanceField {
                method,
                base,
                field,
            } => {
                let types = self.cha.types.of(*method, base);
                let found = types
                    .names()
                    .into_iter()
                    .flatten()
                    .find_map(|t| h.field(p, t, field, false))
                    .or_else(|| h.fields_named(p, field).into_iter().next());
                match found {
                    Some((decl, fd)) => format!("{base}.<{decl}: {} {field}>", fd.ty),
                    None => format!("{base}.{field}"),
                }
            }
            ElementKey::Array { base, index, .. } => format!("{base}[{index}]"),
            ElementKey::StaticField { class, field, ty } => format!("<{class}: {ty} {field}>"),
        }
    }

    /// Runs the override-assignment check from `entry`.
    pub fn detect(
        &self,
        entry: MethodId,
        mode: Mode,
        budget: &AnalysisBudget,
    ) -> Result<AnalysisOutcome> {
        let ctx = self.context();
        let mut found: BTreeMap<(u32, u32, String), ConflictReport> = BTreeMap::new();
        let mut cmp_misses = BTreeSet::new();
        let walk = self.walk(entry, mode, budget, |events| {
            scan(events, mode, &ctx, &mut cmp_misses, |under, over| {
                let element = self.element_text(over);
                let key = (under.entry_line(), over.entry_line(), element.clone());
                found.entry(key).or_insert_with(|| ConflictReport {
                    entry,
                    element,
                    overriding: over.clone(),
                    overridden: under.clone(),
                });
            });
            budget.early_exit && !found.is_empty()
        })?;
        let conflicts: Vec<ConflictReport> = found.into_values().collect();
        let verdict = if walk.stopped && !conflicts.is_empty() {
            Verdict::True
        } else if walk.exhausted {
            Verdict::Timeout
        } else if conflicts.is_empty() {
            Verdict::False
        } else {
            Verdict::True
        };
        let mut missrefs = walk.missrefs;
        missrefs.extend(cmp_misses);
        Ok(AnalysisOutcome {
            verdict,
            conflicts,
            missrefs: missrefs.into_iter().collect(),
            stats: walk.stats,
        })
    }
}

/// Finds overrides on one path. Runs of same-provenance writes to one local
/// count as their last write.
fn scan(
    events: &[WriteEvent],
    mode: Mode,
    ctx: &Context<'_>,
    misses: &mut BTreeSet<MissRef>,
    mut emit: impl FnMut(&WriteEvent, &WriteEvent),
) {
    let kept: Vec<&WriteEvent> = events
        .iter()
        .enumerate()
        .filter(|(i, e)| {
            !(matches!(e.element, ElementKey::Local { .. })
                && events
                    .get(i + 1)
                    .is_some_and(|n| n.element == e.element && n.provenance == e.provenance))
        })
        .map(|(_, e)| e)
        .collect();
    for (i, w) in kept.iter().enumerate() {
        if !w.provenance.is_developer() {
            continue;
        }
        for prev in kept[..i].iter().rev() {
            if !same_target(prev, w, mode, ctx, misses) {
                continue;
            }
            if prev.provenance == w.provenance.opposite()
                && same_element(prev, w, mode, ctx, misses)
            {
                emit(prev, w);
            }
            break;
        }
    }
}

/// One-shot detection for a single entry.
pub fn detect(
    p: &Program,
    entry: MethodId,
    mode: Mode,
    budget: &AnalysisBudget,
) -> Result<AnalysisOutcome> {
    let analyzer = if mode.uses_points_to() {
        Analyzer::new(p)
    } else {
        Analyzer::without_points_to(p)
    };
    analyzer.detect(entry, mode, budget)
}

/// All write-event sequences from `entry`, plus whether the budget ran out.
pub fn enumerate_write_paths(
    p: &Program,
    entry: MethodId,
    mode: Mode,
    budget: &AnalysisBudget,
) -> Result<(Vec<Vec<WriteEvent>>, bool)> {
    let analyzer = if mode.uses_points_to() {
        Analyzer::new(p)
    } else {
        Analyzer::without_points_to(p)
    };
    let mut paths = Vec::new();
    let walk = analyzer.walk(entry, mode, budget, |ev| {
        paths.push(ev.to_vec());
        false
    })?;
    Ok((paths, walk.exhausted))
}
