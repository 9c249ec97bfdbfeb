use std::collections::BTreeSet;

use super::{ElementKey, MissReason, MissRef, Mode, WriteEvent};
use crate::callgraph::ChaResolver;
use crate::error::{Error, Result};
use crate::mir::{Index, MethodId, Program};
use crate::pointsto::PointsToResult;

/// Outcome of comparing two write targets. `FellBack` carries the result of
/// the conservative rule used because points-to information was missing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Match,
    NoMatch,
    FellBack(bool),
}

impl Cmp {
    pub fn is_match(self) -> bool {
        matches!(self, Cmp::Match | Cmp::FellBack(true))
    }

    fn from_bool(b: bool) -> Cmp {
        if b {
            Cmp::Match
        } else {
            Cmp::NoMatch
        }
    }

    fn and(self, ok: bool) -> Cmp {
        match self {
            Cmp::FellBack(m) => Cmp::FellBack(m && ok),
            c => Cmp::from_bool(c.is_match() && ok),
        }
    }
}

/// What the comparators may consult.
#[derive(Clone, Copy)]
pub struct Context<'a> {
    pub program: &'a Program,
    pub cha: &'a ChaResolver<'a>,
    pub pa: Option<&'a PointsToResult>,
}

impl Context<'_> {
    /// Whether the static types of two base locals may denote the same object.
    fn types_related(&self, ma: MethodId, a: &str, mb: MethodId, b: &str) -> bool {
        let (ta, tb) = (self.cha.types.of(ma, a), self.cha.types.of(mb, b));
        let (Some(na), Some(nb)) = (ta.names(), tb.names()) else {
            return true;
        };
        if na.is_empty() || nb.is_empty() {
            return true;
        }
        let h = &self.cha.hierarchy;
        na.iter().any(|x| nb.iter().any(|y| h.related(x, y)))
    }

    fn bases_match(
        &self,
        mode: Mode,
        (ea, ma, a): (&WriteEvent, MethodId, &str),
        (eb, mb, b): (&WriteEvent, MethodId, &str),
        expr: impl Fn(&WriteEvent) -> String,
        misses: &mut BTreeSet<MissRef>,
    ) -> Cmp {
        let pa = match (mode, self.pa) {
            (Mode::Pa | Mode::Hybrid, Some(pa)) => pa,
            _ => return Cmp::from_bool(self.types_related(ma, a, mb, b)),
        };
        let (pa_a, pa_b) = (pa.local(ma, a), pa.local(mb, b));
        if pa_a.is_miss() || pa_b.is_miss() {
            for (ev, pts) in [(ea, &pa_a), (eb, &pa_b)] {
                if pts.is_miss() {
                    misses.insert(MissRef {
                        pos: ev.pos.clone(),
                        expression: expr(ev),
                        reason: MissReason::EmptyPts,
                        on_conflict_path: false,
                    });
                }
            }
            return Cmp::FellBack(self.types_related(ma, a, mb, b));
        }
        Cmp::from_bool(pa_a.intersects(&pa_b))
    }
}

fn mismatch(a: &WriteEvent, b: &WriteEvent) -> Error {
    Error::KindMismatch(a.element.kind(), b.element.kind())
}

pub fn compare_local(a: &WriteEvent, b: &WriteEvent) -> Result<Cmp> {
    match (&a.element, &b.element) {
        (
            ElementKey::Local {
                method: ma,
                name: na,
            },
            ElementKey::Local {
                method: mb,
                name: nb,
            },
        ) => Ok(Cmp::from_bool(ma == mb && na == nb)),
        _ => Err(mismatch(a, b)),
    }
}

pub fn compare_static_field(a: &WriteEvent, b: &WriteEvent) -> Result<Cmp> {
    match (&a.element, &b.element) {
        (
            ElementKey::StaticField {
                class: ca,
                field: fa,
                ty: ta,
            },
            ElementKey::StaticField {
                class: cb,
                field: fb,
                ty: tb,
            },
        ) => Ok(Cmp::from_bool(ca == cb && fa == fb && ta == tb)),
        _ => Err(mismatch(a, b)),
    }
}

fn field_expr(e: &WriteEvent) -> String {
    match &e.element {
        ElementKey::InstanceField { base, field, .. } => format!("{base}.{field}"),
        ElementKey::Array { base, index, .. } => format!("{base}[{index}]"),
        _ => String::new(),
    }
}

fn instance_field_target(
    a: &WriteEvent,
    b: &WriteEvent,
    mode: Mode,
    ctx: &Context<'_>,
    misses: &mut BTreeSet<MissRef>,
) -> Result<Cmp> {
    match (&a.element, &b.element) {
        (
            ElementKey::InstanceField {
                method: ma,
                base: ba,
                field: fa,
            },
            ElementKey::InstanceField {
                method: mb,
                base: bb,
                field: fb,
            },
        ) => {
            if fa != fb {
                return Ok(Cmp::NoMatch);
            }
            Ok(ctx.bases_match(mode, (a, *ma, ba), (b, *mb, bb), field_expr, misses))
        }
        _ => Err(mismatch(a, b)),
    }
}

fn indexes_match(ma: MethodId, ia: &Index, mb: MethodId, ib: &Index) -> bool {
    match (ia, ib) {
        (Index::Const(x), Index::Const(y)) => x == y,
        (Index::Local(x), Index::Local(y)) => ma == mb && x == y,
        _ => true,
    }
}

fn array_target(
    a: &WriteEvent,
    b: &WriteEvent,
    mode: Mode,
    ctx: &Context<'_>,
    misses: &mut BTreeSet<MissRef>,
) -> Result<Cmp> {
    match (&a.element, &b.element) {
        (
            ElementKey::Array {
                method: ma,
                base: ba,
                index: ia,
            },
            ElementKey::Array {
                method: mb,
                base: bb,
                index: ib,
            },
        ) => {
            if !indexes_match(*ma, ia, *mb, ib) {
                return Ok(Cmp::NoMatch);
            }
            Ok(ctx.bases_match(mode, (a, *ma, ba), (b, *mb, bb), field_expr, misses))
        }
        _ => Err(mismatch(a, b)),
    }
}

/// Instance field writes: same field, bases possibly aliased, and not both
/// inside the same constructor.
pub fn compare_instance_field(
    a: &WriteEvent,
    b: &WriteEvent,
    mode: Mode,
    ctx: &Context<'_>,
    misses: &mut BTreeSet<MissRef>,
) -> Result<Cmp> {
    Ok(instance_field_target(a, b, mode, ctx, misses)?.and(!a.same_constructor(b)))
}

pub fn compare_array(
    a: &WriteEvent,
    b: &WriteEvent,
    mode: Mode,
    ctx: &Context<'_>,
    misses: &mut BTreeSet<MissRef>,
) -> Result<Cmp> {
    Ok(array_target(a, b, mode, ctx, misses)?.and(!a.same_constructor(b)))
}

/// Whether two writes hit the same state element; different kinds never do.
pub fn same_element(
    a: &WriteEvent,
    b: &WriteEvent,
    mode: Mode,
    ctx: &Context<'_>,
    misses: &mut BTreeSet<MissRef>,
) -> bool {
    let r = match (&a.element, &b.element) {
        (ElementKey::Local { .. }, ElementKey::Local { .. }) => compare_local(a, b),
        (ElementKey::InstanceField { .. }, ElementKey::InstanceField { .. }) => {
            compare_instance_field(a, b, mode, ctx, misses)
        }
        (ElementKey::Array { .. }, ElementKey::Array { .. }) => {
            compare_array(a, b, mode, ctx, misses)
        }
        (ElementKey::StaticField { .. }, ElementKey::StaticField { .. }) => {
            compare_static_field(a, b)
        }
        _ => return false,
    };
    r.is_ok_and(Cmp::is_match)
}

/// Like [`same_element`] but without the same-constructor exclusion: used to
/// find the most recent prior write to an element.
pub(crate) fn same_target(
    a: &WriteEvent,
    b: &WriteEvent,
    mode: Mode,
    ctx: &Context<'_>,
    misses: &mut BTreeSet<MissRef>,
) -> bool {
    let r = match (&a.element, &b.element) {
        (ElementKey::Local { .. }, ElementKey::Local { .. }) => compare_local(a, b),
        (ElementKey::InstanceField { .. }, ElementKey::InstanceField { .. }) => {
            instance_field_target(a, b, mode, ctx, misses)
        }
        (ElementKey::Array { .. }, ElementKey::Array { .. }) => {
            array_target(a, b, mode, ctx, misses)
        }
        (ElementKey::StaticField { .. }, ElementKey::StaticField { .. }) => {
            compare_static_field(a, b)
        }
        _ => return false,
    };
    r.is_ok_and(Cmp::is_match)
}
