//! Scenario manifests, corpus runs and the CSV tables derived from them.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{
    confusion, display_ratio, divergence_histogram, metrics, timing_summary, transitions, Labeled,
    UnitVerdicts, VERDICTS,
};
use crate::error::{Error, Result};
use crate::frontend::{apply_sidecar, entry_candidates, parse_program, ProvenanceMap, SourceUnit};
use crate::mir::{MethodId, Program};
use crate::oa::{AnalysisBudget, AnalysisOutcome, Analyzer, Mode, Verdict};
use crate::report::{write_records, Clock, Record};

/// `scenario.json` contents.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub id: String,
    pub project: String,
    pub sources: Vec<String>,
    #[serde(default)]
    pub sidecar: Option<String>,
    #[serde(default)]
    pub entry: Option<String>,
    #[serde(default)]
    pub ground_truth: Option<String>,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub id: String,
    pub project: String,
    pub sources: Vec<SourceUnit>,
    pub sidecar: Option<ProvenanceMap>,
    pub entry: Option<String>,
    /// `None` for unlabeled scenarios.
    pub ground_truth: Option<bool>,
}

impl Scenario {
    /// Reads `dir/scenario.json` and the files it names. Source paths stay
    /// relative to `dir`, so positions in reports do not depend on where the
    /// corpus lives.
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("scenario.json");
        let bad = |message: String| Error::Manifest {
            path: path.clone(),
            message,
        };
        let m: Manifest =
            serde_json::from_str(&fs::read_to_string(&path)?).map_err(|e| bad(e.to_string()))?;
        let ground_truth = match m.ground_truth.as_deref() {
            None => None,
            Some("true") => Some(true),
            Some("false") => Some(false),
            Some(other) => {
                return Err(bad(format!(
                    "ground_truth must be \"true\", \"false\" or null, not {other:?}"
                )))
            }
        };
        let sources = m
            .sources
            .iter()
            .map(|s| Ok(SourceUnit::new(s.clone(), fs::read_to_string(dir.join(s))?)))
            .collect::<Result<Vec<_>>>()?;
        let sidecar = m
            .sidecar
            .as_ref()
            .map(|s| ProvenanceMap::read(&dir.join(s)))
            .transpose()?;
        Ok(Scenario {
            id: m.id,
            project: m.project,
            sources,
            sidecar,
            entry: m.entry,
            ground_truth,
        })
    }

    pub fn program(&self) -> Result<Program> {
        let p = parse_program(&self.sources)?;
        match &self.sidecar {
            Some(map) => apply_sidecar(&p, map),
            None => Ok(p),
        }
    }

    /// Entry methods: the override if given, else every method with both
    /// LEFT and RIGHT statements.
    pub fn entries(&self, p: &Program) -> Result<Vec<MethodId>> {
        match &self.entry {
            Some(e) => Ok(vec![p
                .find_method(e)
                .ok_or_else(|| Error::EntryNotFound(e.clone()))?]),
            None => Ok(entry_candidates(p)),
        }
    }
}

/// Loads every scenario under `root`: `root` itself if it holds a
/// `scenario.json`, else each subdirectory that does, in name order.
pub fn load_corpus(root: &Path) -> Result<Vec<Scenario>> {
    if root.join("scenario.json").is_file() {
        return Ok(vec![Scenario::load(root)?]);
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|d| d.join("scenario.json").is_file())
        .collect();
    dirs.sort();
    dirs.iter().map(|d| Scenario::load(d)).collect()
}

#[derive(Clone, Debug)]
pub struct UnitRun {
    pub unit: String,
    pub scenario: String,
    pub project: String,
    pub ground_truth: Option<bool>,
    pub outcomes: BTreeMap<Mode, AnalysisOutcome>,
    /// Elapsed milliseconds of every repetition.
    pub timings: BTreeMap<Mode, Vec<f64>>,
}

#[derive(Clone, Debug, Default)]
pub struct CorpusRun {
    pub modes: Vec<Mode>,
    pub units: Vec<UnitRun>,
    /// Scenarios that could not be analyzed, with the reason.
    pub errors: Vec<(String, String)>,
    pub clock: Clock,
}

fn run_scenario(
    s: &Scenario,
    modes: &[Mode],
    budget: &AnalysisBudget,
    reps: usize,
    clock: Clock,
) -> Result<Vec<UnitRun>> {
    let p = s.program()?;
    let entries = s.entries(&p)?;
    if entries.is_empty() {
        return Err(Error::EntryNotFound(format!(
            "{}: no method modified by both sides",
            s.id
        )));
    }
    let analyzer = if modes.iter().any(|m| m.uses_points_to()) {
        Analyzer::new(&p)
    } else {
        Analyzer::without_points_to(&p)
    };
    let mut out = Vec::new();
    for &entry in &entries {
        let unit = if entries.len() == 1 {
            s.id.clone()
        } else {
            format!("{}#{}", s.id, p.method_name(entry))
        };
        let mut outcomes = BTreeMap::new();
        let mut timings = BTreeMap::new();
        for &mode in modes {
            let mut first: Option<AnalysisOutcome> = None;
            let mut samples = Vec::with_capacity(reps);
            for _ in 0..reps.max(1) {
                let o = analyzer.detect(entry, mode, budget)?;
                samples.push(clock.elapsed_ms(&o.stats));
                match &first {
                    Some(f) if f.verdict != o.verdict => return Err(Error::UnstableVerdict(unit)),
                    Some(_) => {}
                    None => first = Some(o),
                }
            }
            outcomes.insert(mode, first.expect("at least one repetition"));
            timings.insert(mode, samples);
        }
        if let (Some(nopa), Some(pa)) = (
            outcomes.get(&Mode::Nopa).cloned(),
            outcomes.get_mut(&Mode::Pa),
        ) {
            annotate_missref_paths(&nopa, pa);
        }
        out.push(UnitRun {
            unit,
            scenario: s.id.clone(),
            project: s.project.clone(),
            ground_truth: s.ground_truth,
            outcomes,
            timings,
        });
    }
    Ok(out)
}

/// Runs every scenario under every mode, `reps` times each. Scenarios run in
/// parallel; the repetitions of one unit run back to back on one worker.
pub fn run_corpus(
    corpus: &[Scenario],
    modes: &[Mode],
    budget: &AnalysisBudget,
    reps: usize,
    clock: Clock,
) -> CorpusRun {
    let results: Vec<(String, Result<Vec<UnitRun>>)> = corpus
        .par_iter()
        .map(|s| (s.id.clone(), run_scenario(s, modes, budget, reps, clock)))
        .collect();
    let mut run = CorpusRun {
        modes: modes.to_vec(),
        clock,
        ..Default::default()
    };
    for (id, r) in results {
        match r {
            Ok(units) => run.units.extend(units),
            Err(e) => run.errors.push((id, e.to_string())),
        }
    }
    run
}

/// Marks the PA miss-references that sit on a noPA conflict flow, when noPA
/// reports a conflict and PA does not. Returns whether any was marked.
pub fn annotate_missref_paths(nopa: &AnalysisOutcome, pa: &mut AnalysisOutcome) -> bool {
    for m in &mut pa.missrefs {
        m.on_conflict_path = false;
    }
    if nopa.verdict != Verdict::True || pa.verdict != Verdict::False {
        return false;
    }
    let mut on_flow = BTreeSet::new();
    for c in &nopa.conflicts {
        for e in [&c.overriding, &c.overridden] {
            on_flow.extend(e.call_path.iter().map(|h| h.site.clone()));
            on_flow.insert(e.pos.clone());
        }
    }
    let mut any = false;
    for m in &mut pa.missrefs {
        m.on_conflict_path = on_flow.contains(&m.pos);
        any |= m.on_conflict_path;
    }
    any
}

impl CorpusRun {
    pub fn records(&self) -> Vec<Record> {
        self.units
            .iter()
            .flat_map(|u| {
                u.outcomes
                    .iter()
                    .map(move |(m, o)| Record::from_outcome(&u.unit, *m, o, self.clock))
            })
            .collect()
    }

    pub fn verdicts(&self, mode: Mode) -> Vec<(String, Verdict)> {
        self.units
            .iter()
            .filter_map(|u| u.outcomes.get(&mode).map(|o| (u.unit.clone(), o.verdict)))
            .collect()
    }

    /// Labeled verdicts for scoring; units where noPA timed out count as
    /// excluded in every mode.
    fn scored(&self, mode: Mode) -> Labeled {
        let mut out = Vec::new();
        let mut truths = BTreeMap::new();
        for u in self.units.iter().filter(|u| u.ground_truth.is_some()) {
            let Some(o) = u.outcomes.get(&mode) else {
                continue;
            };
            let nopa_timeout = u
                .outcomes
                .get(&Mode::Nopa)
                .is_some_and(|n| n.verdict == Verdict::Timeout);
            out.push((
                u.unit.clone(),
                if nopa_timeout {
                    Verdict::Timeout
                } else {
                    o.verdict
                },
            ));
            truths.insert(u.unit.clone(), u.ground_truth);
        }
        (out, truths)
    }

    /// Writes `records.jsonl` and the five CSV tables into `dir`.
    pub fn write_tables(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_records(
            &self.records(),
            fs::File::create(dir.join("records.jsonl"))?,
        )?;

        let mut conf = csv::Writer::from_path(dir.join("confusion.csv"))?;
        conf.write_record(["mode", "tp", "fp", "tn", "fn", "excluded"])?;
        let mut met = csv::Writer::from_path(dir.join("metrics.csv"))?;
        met.write_record(["mode", "precision", "recall", "accuracy", "f1"])?;
        for &mode in &self.modes {
            let (outs, truths) = self.scored(mode);
            let c = confusion(&outs, &truths)?;
            conf.write_record([
                mode.as_str().to_string(),
                c.tp.to_string(),
                c.fp.to_string(),
                c.tn.to_string(),
                c.fn_.to_string(),
                c.excluded.to_string(),
            ])?;
            let m = metrics(&c);
            let cell =
                |r: Option<f64>| r.map_or_else(|| display_ratio(None), |x| format!("{x:.4}"));
            met.write_record([
                mode.as_str().to_string(),
                cell(m.precision),
                cell(m.recall),
                cell(m.accuracy),
                cell(m.f1),
            ])?;
        }
        conf.flush()?;
        met.flush()?;

        let mut tr = csv::Writer::from_path(dir.join("transitions.csv"))?;
        tr.write_record(["mode_a", "mode_b", "verdict_a", "verdict_b", "count"])?;
        for (i, &a) in self.modes.iter().enumerate() {
            for &b in &self.modes[i + 1..] {
                let t = transitions(&self.verdicts(a), &self.verdicts(b))?;
                for va in VERDICTS {
                    for vb in VERDICTS {
                        tr.write_record([
                            a.as_str(),
                            b.as_str(),
                            va.as_str(),
                            vb.as_str(),
                            &t.cell(va, vb).to_string(),
                        ])?;
                    }
                }
            }
        }
        tr.flush()?;

        let per_unit: Vec<UnitVerdicts> = self
            .units
            .iter()
            .map(|u| UnitVerdicts {
                project: u.project.clone(),
                unit: u.unit.clone(),
                verdicts: u.outcomes.iter().map(|(m, o)| (*m, o.verdict)).collect(),
            })
            .collect();
        let mut hist = csv::Writer::from_path(dir.join("histogram.csv"))?;
        hist.write_record(["divergences", "projects"])?;
        for (d, n) in divergence_histogram(&per_unit) {
            hist.write_record([d.to_string(), n.to_string()])?;
        }
        hist.flush()?;

        let samples: BTreeMap<String, BTreeMap<Mode, Vec<f64>>> = self
            .units
            .iter()
            .map(|u| (u.unit.clone(), u.timings.clone()))
            .collect();
        let ts = timing_summary(&samples);
        let mut tm = csv::Writer::from_path(dir.join("timing.csv"))?;
        tm.write_record([
            "unit",
            "mode",
            "mean_ms",
            "median_ms",
            "stddev_ms",
            "flagged",
            "winner",
        ])?;
        for u in &ts.units {
            let winner = u.winner.map_or("", Mode::as_str);
            for (m, s) in &u.modes {
                tm.write_record([
                    u.unit.as_str(),
                    m.as_str(),
                    &format!("{:.3}", s.mean),
                    &format!("{:.3}", s.median),
                    &format!("{:.3}", s.stddev),
                    &s.flagged.to_string(),
                    winner,
                ])?;
            }
        }
        tm.flush()?;
        Ok(())
    }
}
