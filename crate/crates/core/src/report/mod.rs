//! Conflict rendering and line-delimited JSON outcome records.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mir::{display_name, Program};
use crate::oa::{AnalysisOutcome, ConflictReport, MissReason, Mode, Stats, Verdict, WriteEvent};

fn frame(p: &Program, m: crate::mir::MethodId, line: u32) -> String {
    let md = p.method(m);
    format!(
        "  at {}.{}():{line}\n",
        md.declaring_class,
        display_name(md)
    )
}

fn flow(p: &Program, e: &WriteEvent) -> String {
    let mut out = String::new();
    for hop in e.call_path.iter() {
        out.push_str(&frame(p, hop.caller, hop.site.line));
    }
    out.push_str(&frame(p, e.method, e.pos.line));
    out
}

/// Human-readable report: a header naming the entry, the two entry lines and
/// the element, then the call flow leading to each write.
pub fn render_text(p: &Program, c: &ConflictReport) -> String {
    let entry = p.method(c.entry);
    let (first, second) = (c.under_line(), c.over_line());
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Interference in class {}, method {}(), execution of line {first} overrides {second}, assigning to variable {}",
        entry.declaring_class,
        display_name(entry),
        c.element
    );
    let _ = writeln!(out, "Caused by line {first} flow:");
    out.push_str(&flow(p, &c.overridden));
    let _ = writeln!(out, "And line {second} flow:");
    out.push_str(&flow(p, &c.overriding));
    out
}

/// How `elapsed_ms` is filled in. The virtual clock charges one microsecond
/// per visited statement, which keeps records byte-stable across runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Clock {
    #[default]
    Wall,
    Virtual,
}

impl Clock {
    pub fn elapsed_ms(self, s: &Stats) -> f64 {
        match self {
            Clock::Wall => s.elapsed.as_secs_f64() * 1000.0,
            Clock::Virtual => s.visited as f64 / 1000.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConflictRecord {
    pub element: String,
    pub over_line: u32,
    pub under_line: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissRefRecord {
    pub file: String,
    pub line: u32,
    pub reason: MissReason,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub unit: String,
    pub mode: Mode,
    pub verdict: Verdict,
    pub conflicts: Vec<ConflictRecord>,
    pub missrefs: Vec<MissRefRecord>,
    pub visited: u64,
    pub paths: u64,
    pub elapsed_ms: f64,
}

impl Record {
    pub fn from_outcome(unit: &str, mode: Mode, o: &AnalysisOutcome, clock: Clock) -> Self {
        Record {
            unit: unit.to_string(),
            mode,
            verdict: o.verdict,
            conflicts: o
                .conflicts
                .iter()
                .map(|c| ConflictRecord {
                    element: c.element.clone(),
                    over_line: c.over_line(),
                    under_line: c.under_line(),
                })
                .collect(),
            missrefs: o
                .missrefs
                .iter()
                .map(|m| MissRefRecord {
                    file: m.pos.file.to_string(),
                    line: m.pos.line,
                    reason: m.reason,
                })
                .collect(),
            visited: o.stats.visited,
            paths: o.stats.paths,
            elapsed_ms: clock.elapsed_ms(&o.stats),
        }
    }
}

/// Writes one JSON object per line.
pub fn write_records<'a>(
    records: impl IntoIterator<Item = &'a Record>,
    mut sink: impl Write,
) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut sink, r)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}

/// Record stream for `(unit, mode, outcome)` triples.
pub fn emit_records(
    outcomes: &[(String, Mode, AnalysisOutcome)],
    clock: Clock,
    sink: impl Write,
) -> Result<()> {
    let recs: Vec<Record> = outcomes
        .iter()
        .map(|(u, m, o)| Record::from_outcome(u, *m, o, clock))
        .collect();
    write_records(&recs, sink)
}

pub fn records_to_string(records: &[Record]) -> String {
    let mut buf = Vec::new();
    write_records(records, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("json is utf-8")
}

pub fn parse_records(input: impl BufRead) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}
