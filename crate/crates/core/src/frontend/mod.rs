//! Source text to [`Program`]: parsing, canonical printing, provenance from
//! inline markers or sidecar line maps, and analysis entry candidates.

mod lexer;
mod parser;
mod printer;
mod sidecar;

use std::path::{Path, PathBuf};

pub use printer::{pretty_print, pretty_print_units, simple_text};
pub use sidecar::{apply_sidecar, LineRef, ProvenanceMap};

use crate::error::{Error, Result};
use crate::mir::{validate_program, MethodId, Program, Provenance};

#[derive(Clone, Debug)]
pub struct SourceUnit {
    pub path: String,
    pub text: String,
    pub line_count: usize,
}

impl SourceUnit {
    pub fn new(path: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        let line_count = text.lines().count();
        SourceUnit {
            path: path.into(),
            text,
            line_count,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(Self::new(
            path.to_string_lossy(),
            std::fs::read_to_string(path)?,
        ))
    }
}

/// Expands directories to their `*.mir` files (sorted) and reads everything.
pub fn load_sources(paths: &[PathBuf]) -> Result<Vec<SourceUnit>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut inner: Vec<PathBuf> = std::fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "mir"))
                .collect();
            inner.sort();
            files.extend(inner);
        } else {
            files.push(p.clone());
        }
    }
    files.iter().map(|f| SourceUnit::read(f)).collect()
}

/// Parses one unit without running validation.
pub fn parse_unvalidated(path: &str, text: &str) -> Result<Program> {
    parser::Parser::new(path, text)?.program()
}

/// Parses and validates a set of units into one program.
pub fn parse_program(units: &[SourceUnit]) -> Result<Program> {
    let mut p = Program::default();
    for u in units {
        let part = parse_unvalidated(&u.path, &u.text)?;
        p.classes.extend(part.classes);
        p.interfaces.extend(part.interfaces);
    }
    let diags = validate_program(&p);
    if diags.is_empty() {
        Ok(p)
    } else {
        Err(Error::Invalid(diags))
    }
}

/// Single-unit convenience around [`parse_program`].
pub fn parse_str(path: &str, text: &str) -> Result<Program> {
    parse_program(&[SourceUnit::new(path, text)])
}

/// Methods and constructors whose own bodies (calls not followed) contain at
/// least one LEFT and one RIGHT statement, in declaration order.
pub fn entry_candidates(p: &Program) -> Vec<MethodId> {
    p.methods()
        .filter(|(_, m)| {
            let (mut l, mut r) = (false, false);
            for s in m.statements() {
                l |= s.provenance == Provenance::Left;
                r |= s.provenance == Provenance::Right;
            }
            l && r
        })
        .map(|(id, _)| id)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT_SRC: &str = "class Text {\n  field r: Report;  field t: String;\n  ctor(r, t) {\n    this.r = r;\n    this.t = t; }\n  public method generateReport() {\n    rep = this.r;\n    call rep.countDupWords();\n    c = op(rep);\n    call rep.countDupWhiteSpace();\n  }\n}\n";
    const REPORT: &str =
        "interface Report {\n  method countDupWords();\n  method countDupWhiteSpace();\n}\n";

    fn units(text: &str) -> Vec<SourceUnit> {
        vec![
            SourceUnit::new("Report.mir", REPORT),
            SourceUnit::new("T.mir", text),
        ]
    }

    #[test]
    fn inline_markers_set_provenance() {
        let marked = TEXT_SRC
            .replace("call rep.countDupWords();", "call rep.countDupWords() @L;")
            .replace(
                "call rep.countDupWhiteSpace();",
                "call rep.countDupWhiteSpace() @R;",
            );
        let p = parse_program(&units(&marked)).unwrap();
        let m = &p.classes[0].methods[0];
        assert_eq!(m.body[1].provenance, Provenance::Left);
        assert_eq!(m.body[2].provenance, Provenance::Base);
        assert_eq!(m.body[3].provenance, Provenance::Right);
        assert_eq!((m.body[1].pos.line, m.body[3].pos.line), (8, 10));
        let cands: Vec<_> = entry_candidates(&p)
            .into_iter()
            .map(|id| p.method_name(id))
            .collect();
        assert_eq!(cands, ["Text.generateReport"]);
    }

    #[test]
    fn sidecar_matches_inline_parse() {
        let marked = TEXT_SRC
            .replace("call rep.countDupWords();", "call rep.countDupWords() @L;")
            .replace(
                "call rep.countDupWhiteSpace();",
                "call rep.countDupWhiteSpace() @R;",
            );
        let inline = parse_program(&units(&marked)).unwrap();
        let plain = parse_program(&units(TEXT_SRC)).unwrap();
        let map = ProvenanceMap::from_json(
            r#"{"left":[{"file":"T.mir","line":8}],"right":[{"file":"T.mir","line":10}]}"#,
        )
        .unwrap();
        let applied = apply_sidecar(&plain, &map).unwrap();
        assert_eq!(applied, inline);
        // idempotent
        assert_eq!(apply_sidecar(&applied, &map).unwrap(), applied);
        // empty map: all base
        let empty = apply_sidecar(&plain, &ProvenanceMap::default()).unwrap();
        assert!(empty
            .statements()
            .all(|(_, s)| s.provenance == Provenance::Base));
        assert!(entry_candidates(&empty).is_empty());
    }

    #[test]
    fn sidecar_errors() {
        let plain = parse_program(&units(TEXT_SRC)).unwrap();
        assert_eq!(TEXT_SRC.lines().count(), 12);
        let far = ProvenanceMap::from_json(r#"{"left":[{"file":"T.mir","line":999}],"right":[]}"#)
            .unwrap();
        let e = apply_sidecar(&plain, &far).unwrap_err().to_string();
        assert!(e.contains("no statement at line"), "{e}");
        let both = ProvenanceMap::from_json(
            r#"{"left":[{"file":"T.mir","line":8}],"right":[{"file":"T.mir","line":8}]}"#,
        )
        .unwrap();
        assert!(apply_sidecar(&plain, &both)
            .unwrap_err()
            .to_string()
            .contains("both"));
        let marked = parse_program(&units(
            &TEXT_SRC.replace("call rep.countDupWords();", "call rep.countDupWords() @R;"),
        ))
        .unwrap();
        let map = ProvenanceMap::from_json(r#"{"left":[{"file":"T.mir","line":8}]}"#).unwrap();
        assert!(apply_sidecar(&marked, &map)
            .unwrap_err()
            .to_string()
            .contains("disagrees"));
    }

    #[test]
    fn two_dual_methods_in_declaration_order() {
        let p = parse_str(
            "d.mir",
            "class B {\n method second() {\n  a = 1 @L;\n  b = 2 @R;\n }\n}\nclass A {\n method first() {\n  a = 1 @R;\n  b = 2 @L;\n }\n method only_left() {\n  a = 1 @L;\n }\n}\n",
        )
        .unwrap();
        let names: Vec<_> = entry_candidates(&p)
            .into_iter()
            .map(|id| p.method_name(id))
            .collect();
        assert_eq!(names, ["B.second", "A.first"]);
    }
}
