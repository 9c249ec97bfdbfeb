#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use oa_core::callgraph::cha_resolve;
use oa_core::eval::{interpret, Scenario};
use oa_core::mir::{MethodId, Position, Program, Provenance, Stmt, StmtKind};
use oa_core::oa::{AnalysisBudget, AnalysisOutcome, Analyzer, ConflictReport, Mode, Verdict};
use oa_core::pointsto::{analyze_program, Pts};

pub fn corpus_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn scenario(id: &str) -> Scenario {
    Scenario::load(&corpus_root().join(id)).unwrap_or_else(|e| panic!("{id}: {e}"))
}

/// Program and its single entry method.
pub fn load(id: &str) -> (Program, MethodId) {
    let s = scenario(id);
    let p = s.program().unwrap();
    let entries = s.entries(&p).unwrap();
    assert_eq!(entries.len(), 1, "{id} should have one entry");
    (p, entries[0])
}

pub fn run(p: &Program, entry: MethodId, mode: Mode, budget: &AnalysisBudget) -> AnalysisOutcome {
    Analyzer::new(p).detect(entry, mode, budget).unwrap()
}

/// (under line, over line, element) of each conflict.
pub type ConflictKey = (u32, u32, String);

pub fn keys(o: &AnalysisOutcome) -> BTreeSet<ConflictKey> {
    o.conflicts.iter().map(key).collect()
}

pub fn key(c: &ConflictReport) -> ConflictKey {
    (c.under_line(), c.over_line(), c.element.clone())
}

fn find_stmt<'a>(p: &'a Program, m: MethodId, pos: &Position) -> Option<&'a Stmt> {
    p.method(m).statements().find(|s| &s.pos == pos)
}

/// Runs `main` concretely and checks the observations against the static
/// analyses. Returns one message per violation.
pub fn soundness_violations(p: &Program, step_limit: u64) -> Vec<String> {
    let mut out = Vec::new();
    let pa = match analyze_program(p) {
        Ok(pa) => pa,
        Err(e) => return vec![format!("points-to failed: {e}")],
    };
    let main = p
        .find_method("Main.main")
        .expect("generated programs have Main.main");
    let trace = match interpret(p, main, step_limit) {
        Ok(t) => t,
        Err(e) => return vec![format!("interpreter failed: {e}")],
    };
    for b in &trace.bindings {
        match pa.local(b.method, &b.local) {
            Pts::Sites(s) if s.contains(&b.site) => {}
            other => out.push(format!(
                "{}::{} bound to site {} but pts = {other:?}",
                p.method_name(b.method),
                b.local,
                b.site
            )),
        }
    }
    for d in &trace.dispatches {
        let Some(s) = find_stmt(p, d.caller, &d.site) else {
            out.push(format!("dispatch at unknown site {}", d.site));
            continue;
        };
        match cha_resolve(p, d.caller, s) {
            Ok(t) if t.contains(&d.target) => {}
            other => out.push(format!(
                "dispatch {} -> {} not in CHA {other:?}",
                d.site,
                p.method_name(d.target)
            )),
        }
        if !pa.callgraph.targets_at(&d.site).contains(&d.target) {
            out.push(format!(
                "dispatch {} -> {} not in the points-to call graph",
                d.site,
                p.method_name(d.target)
            ));
        }
    }
    for e in &pa.callgraph.edges {
        let s = find_stmt(p, e.caller, &e.site).expect("edge sites are statements");
        match cha_resolve(p, e.caller, s) {
            Ok(t) if t.contains(&e.target) => {}
            other => out.push(format!(
                "pts edge {} -> {} not in CHA {other:?}",
                e.site,
                p.method_name(e.target)
            )),
        }
    }
    out
}

/// Entries whose PA conflicts are not all reported by hybrid. Units where
/// either mode ran out of budget are skipped.
pub fn inclusion_violations(
    p: &Program,
    entries: &[MethodId],
    budget: &AnalysisBudget,
) -> Vec<String> {
    let a = Analyzer::new(p);
    let mut out = Vec::new();
    for &e in entries {
        let pa = a.detect(e, Mode::Pa, budget).unwrap();
        let hy = a.detect(e, Mode::Hybrid, budget).unwrap();
        if pa.verdict == Verdict::Timeout || hy.verdict == Verdict::Timeout {
            continue;
        }
        let (kp, kh) = (keys(&pa), keys(&hy));
        if !kp.is_subset(&kh) {
            out.push(format!(
                "{}: pa {kp:?} not within hybrid {kh:?}",
                p.method_name(e)
            ));
        }
    }
    out
}

pub fn swap_sides(p: &Program) -> Program {
    let mut q = p.clone();
    q.for_each_stmt_mut(|s| s.provenance = s.provenance.opposite());
    q
}

pub fn erase_right(p: &Program) -> Program {
    let mut q = p.clone();
    q.for_each_stmt_mut(|s| {
        if s.provenance == Provenance::Right {
            s.provenance = Provenance::Base;
        }
    });
    q
}

fn insert_before(block: &mut Vec<Stmt>, at: &Position, new: &Stmt) -> bool {
    if let Some(i) = block.iter().position(|s| &s.pos == at) {
        block.insert(i, new.clone());
        return true;
    }
    block.iter_mut().any(|s| match &mut s.kind {
        StmtKind::If {
            then_block,
            else_block,
            ..
        } => insert_before(then_block, at, new) || insert_before(else_block, at, new),
        StmtKind::While { body, .. } => insert_before(body, at, new),
        _ => false,
    })
}

/// Inserts an unmarked copy of the entry statement that leads to the later
/// write of `c`, directly before it. Returns `None` when the copy would not
/// be guaranteed to write the same element on every path: the later write
/// sits more than one call deep, the callee branches, a statement below the
/// entry carries its own marker, or the copied call has several targets.
pub fn with_base_before(p: &Program, c: &ConflictReport, mode: Mode) -> Option<Program> {
    let w = &c.overriding;
    if w.call_path.len() > 1 || c.under_line() == c.over_line() {
        return None;
    }
    let entry = c.entry;
    let top_pos = match w.call_path.first() {
        Some(h) => h.site.clone(),
        None => w.pos.clone(),
    };
    let top = find_stmt(p, entry, &top_pos)?.clone();
    if !w.call_path.is_empty() {
        let callee = p.method(w.method);
        let branches = callee
            .statements()
            .any(|s| matches!(s.kind, StmtKind::If { .. } | StmtKind::While { .. }));
        let marked = callee.statements().any(|s| s.provenance.is_developer());
        if branches || marked {
            return None;
        }
        let a = Analyzer::new(p);
        let r = oa_core::oa::resolve_call(&a.context(), entry, &top, mode).ok()?;
        if r.targets.len() != 1 || r.may_skip {
            return None;
        }
    }
    let mut copy = top;
    copy.provenance = Provenance::Base;
    copy.pos = Position {
        file: Arc::clone(&top_pos.file),
        line: 100_000 + top_pos.line,
    };
    let mut q = p.clone();
    let class = &mut q.classes[entry.class as usize];
    let m = match entry.kind {
        oa_core::mir::MethodKind::Method => &mut class.methods[entry.index as usize],
        oa_core::mir::MethodKind::Constructor => &mut class.constructors[entry.index as usize],
    };
    insert_before(&mut m.body, &top_pos, &copy).then_some(q)
}

/// All bundled scenarios with their program and entries.
pub fn corpus_programs() -> Vec<(String, Program, Vec<MethodId>)> {
    oa_core::eval::load_corpus(&corpus_root())
        .unwrap()
        .into_iter()
        .map(|s| {
            let p = s.program().unwrap();
            let e = s.entries(&p).unwrap();
            (s.id.clone(), p, e)
        })
        .collect()
}

/// W and the two-sided p by enumerating all 2^n sign assignments.
pub fn brute_force_wilcoxon_p(diffs: &[f64]) -> (f64, f64) {
    let nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let ranks = oa_core::eval::average_ranks(&nz.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let w_plus: f64 = nz
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total: f64 = ranks.iter().sum();
    let w = w_plus.min(total - w_plus);
    let n = nz.len();
    let mut hits = 0u64;
    for mask in 0u64..(1 << n) {
        let s: f64 = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| ranks[i])
            .sum();
        if s.min(total - s) <= w + 1e-9 {
            hits += 1;
        }
    }
    (w, hits as f64 / (1u64 << n) as f64)
}
