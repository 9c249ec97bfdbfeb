use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mir::{Position, Program, Provenance};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LineRef {
    pub file: String,
    pub line: u32,
}

/// Left/right modified lines of a merge scenario, as shipped alongside the
/// merged sources.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceMap {
    #[serde(default)]
    pub left: BTreeSet<LineRef>,
    #[serde(default)]
    pub right: BTreeSet<LineRef>,
}

impl ProvenanceMap {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data serializes")
    }
}

/// Resolves a sidecar file name against the program's files: exact match
/// first, then a unique match on the final path component.
fn resolve_file<'a>(files: &'a BTreeSet<&'a str>, name: &str) -> Option<&'a str> {
    if let Some(f) = files.get(name) {
        return Some(f);
    }
    let base = |s: &str| {
        Path::new(s)
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
    };
    let want = base(name)?;
    let mut hits = files
        .iter()
        .filter(|f| base(f).as_deref() == Some(want.as_str()));
    let first = hits.next()?;
    if hits.next().is_some() {
        None
    } else {
        Some(first)
    }
}

/// Sets LEFT/RIGHT provenance from a line map; every other statement becomes
/// BASE. Inline markers already present must agree with the map.
pub fn apply_sidecar(p: &Program, m: &ProvenanceMap) -> Result<Program> {
    let files: BTreeSet<&str> = p
        .statements()
        .map(|(_, s)| &*s.pos.file)
        .chain(p.classes.iter().map(|c| &*c.pos.file))
        .collect();
    let mut wanted: BTreeMap<Position, Provenance> = BTreeMap::new();
    for (side, prov) in [(&m.left, Provenance::Left), (&m.right, Provenance::Right)] {
        for r in side {
            let file = resolve_file(&files, &r.file).ok_or_else(|| {
                Error::Sidecar(format!(
                    "no statement at line {} of `{}` (unknown file)",
                    r.line, r.file
                ))
            })?;
            let pos = Position::new(file, r.line);
            if let Some(prev) = wanted.insert(pos, prov) {
                if prev != prov {
                    return Err(Error::Sidecar(format!(
                        "line {} of `{}` is mapped both LEFT and RIGHT",
                        r.line, r.file
                    )));
                }
            }
        }
    }
    let present: BTreeSet<&Position> = p.statements().map(|(_, s)| &s.pos).collect();
    if let Some(missing) = wanted.keys().find(|k| !present.contains(k)) {
        return Err(Error::Sidecar(format!(
            "no statement at line {} of `{}`",
            missing.line, missing.file
        )));
    }
    let mut out = p.clone();
    let mut conflict = None;
    out.for_each_stmt_mut(|s| {
        let want = wanted.get(&s.pos).copied().unwrap_or(Provenance::Base);
        if s.provenance.is_developer() && s.provenance != want && conflict.is_none() {
            conflict = Some((s.pos.clone(), s.provenance, want));
        }
        s.provenance = want;
    });
    if let Some((pos, inline, map)) = conflict {
        return Err(Error::Sidecar(format!(
            "{pos}: inline marker {inline} disagrees with sidecar ({map})"
        )));
    }
    Ok(out)
}
