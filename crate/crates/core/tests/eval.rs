mod common;

use std::collections::BTreeMap;

use common::{corpus_root, load, run, scenario};
use oa_core::eval::interp::Location;
use oa_core::eval::{
    annotate_missref_paths, confusion, divergence_histogram, interpret, load_corpus, metrics,
    run_corpus, sample_stats, timing_summary, transitions, wilcoxon_signed_rank, ConfusionMatrix,
    Labeled, UnitVerdicts,
};
use oa_core::frontend::parse_str;
use oa_core::oa::{AnalysisBudget, Mode, Verdict};
use oa_core::report::Clock;
use oa_core::Error;

use Verdict::{False as F, Timeout as TO, True as T};

fn vector(cells: &[(Verdict, Option<bool>, usize)]) -> Labeled {
    let (mut v, mut t) = (Vec::new(), BTreeMap::new());
    for &(verdict, truth, n) in cells {
        for _ in 0..n {
            let id = format!("u{}", v.len());
            t.insert(id.clone(), truth);
            v.push((id, verdict));
        }
    }
    (v, t)
}

#[test]
fn confusion_counts_from_labels() {
    let (v, t) = vector(&[
        (T, Some(true), 8),
        (T, Some(false), 9),
        (F, Some(false), 55),
        (F, Some(true), 21),
    ]);
    assert_eq!(
        confusion(&v, &t).unwrap(),
        ConfusionMatrix::new(8, 9, 55, 21)
    );
    let (v, t) = vector(&[
        (T, Some(true), 2),
        (T, Some(false), 5),
        (F, Some(false), 59),
        (F, Some(true), 27),
    ]);
    assert_eq!(
        confusion(&v, &t).unwrap(),
        ConfusionMatrix::new(2, 5, 59, 27)
    );
    let (v, t) = vector(&[(T, Some(true), 2), (F, Some(false), 2)]);
    assert_eq!(confusion(&v, &t).unwrap(), ConfusionMatrix::new(2, 0, 2, 0));
}

#[test]
fn timeouts_are_excluded_and_unlabeled_units_rejected() {
    let (v, t) = vector(&[(T, Some(true), 1), (TO, Some(true), 2), (F, Some(false), 1)]);
    let m = confusion(&v, &t).unwrap();
    assert_eq!((m.total(), m.excluded), (2, 2));
    assert_eq!(m.total() + m.excluded, 4);
    let (v, t) = vector(&[(T, None, 1)]);
    assert!(matches!(confusion(&v, &t), Err(Error::Unlabeled(_))));
}

#[test]
fn degenerate_metrics() {
    let m = metrics(&ConfusionMatrix::new(0, 0, 7, 0));
    assert_eq!((m.precision, m.recall, m.accuracy), (None, None, Some(1.0)));
}

#[test]
fn transition_tables() {
    let a = vec![
        ("a".to_string(), T),
        ("b".to_string(), F),
        ("c".to_string(), TO),
    ];
    let t = transitions(&a, &a).unwrap();
    for x in [T, F, TO] {
        for y in [T, F, TO] {
            assert_eq!(t.cell(x, y), u64::from(x == y));
        }
    }
    let t = transitions(&[("u".into(), T)], &[("u".into(), F)]).unwrap();
    assert_eq!(t.cell(T, F), 1);
    assert_eq!(
        (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| t.counts[i][j])
            .sum::<u64>(),
        1
    );
    assert!(transitions(&[("u".into(), T)], &[("v".into(), F)]).is_err());
}

#[test]
fn histogram_examples() {
    let unit = |p: &str, i: usize, b: Verdict| UnitVerdicts {
        project: p.into(),
        unit: format!("{p}{i}"),
        verdicts: BTreeMap::from([(Mode::Nopa, T), (Mode::Pa, b)]),
    };
    assert!(divergence_histogram(&[unit("p", 0, T), unit("q", 0, T)]).is_empty());
    let three: Vec<_> = (0..3)
        .map(|i| unit("p", i, F))
        .chain([unit("p", 9, T)])
        .collect();
    assert_eq!(divergence_histogram(&three), BTreeMap::from([(3, 1)]));
}

#[test]
fn timing_examples() {
    let mk = |rows: &[(&str, Vec<f64>, Vec<f64>)]| {
        rows.iter()
            .map(|(u, a, b)| {
                (
                    u.to_string(),
                    BTreeMap::from([(Mode::Nopa, a.clone()), (Mode::Pa, b.clone())]),
                )
            })
            .collect::<BTreeMap<_, _>>()
    };
    let s = timing_summary(&mk(&[("u", vec![2.0, 2.0, 2.0], vec![3.0, 3.0, 3.0])]));
    assert_eq!(s.units[0].winner, Some(Mode::Nopa));

    let s = timing_summary(&mk(&[
        ("a", vec![1.0], vec![100.0]),
        ("b", vec![2.0], vec![1.0]),
    ]));
    assert_eq!(s.wins, BTreeMap::from([(Mode::Nopa, 1), (Mode::Pa, 1)]));
    assert_eq!(
        (s.modes[&Mode::Nopa].mean, s.modes[&Mode::Pa].mean),
        (1.5, 50.5)
    );

    assert!(sample_stats(&[10.0, 10.0, 14.0]).flagged);
    assert!(!sample_stats(&[10.0, 10.0, 10.5]).flagged);
}

#[test]
fn wilcoxon_examples() {
    let pos: Vec<(f64, f64)> = (1..=5).map(|i| (i as f64, 0.0)).collect();
    let r = wilcoxon_signed_rank(&pos).unwrap();
    assert_eq!(r.w, 0.0);
    assert!((r.p - 0.0625).abs() < 1e-12);
    assert!(matches!(
        wilcoxon_signed_rank(&[(1.0, 1.0); 8]),
        Err(Error::InsufficientPairs(0))
    ));
    let big: Vec<(f64, f64)> = (1..=40)
        .map(|i| (i as f64 * if i % 3 == 0 { -1.0 } else { 1.0 }, 0.0))
        .collect();
    let r = wilcoxon_signed_rank(&big).unwrap();
    assert!(
        !r.exact && r.w == 273.0 && (r.p - 0.06654465496858146).abs() < 1e-9,
        "{r:?}"
    );
    let tied: Vec<(f64, f64)> = (0..30)
        .map(|i| {
            (
                (((i * 7) % 5 + 1) * if i % 4 == 0 { -1 } else { 1 }) as f64,
                0.0,
            )
        })
        .collect();
    let r = wilcoxon_signed_rank(&tied).unwrap();
    assert!(
        !r.exact && r.w == 112.0 && (r.p - 0.013149243987373879).abs() < 1e-9,
        "{r:?}"
    );
}

#[test]
fn interpreter_examples() {
    let p = parse_str(
        "b.mir",
        "class A {\n static method main() {\n x = new A();\n y = x;\n }\n}\n",
    )
    .unwrap();
    let main = p.find_method("A.main").unwrap();
    let t = interpret(&p, main, 1000).unwrap();
    assert!(t.bindings.iter().any(|b| b.local == "y" && b.site == 0));

    let (p, _) = load("fig1_simple");
    let t = interpret(&p, p.find_method("Main.main").unwrap(), 1000).unwrap();
    let fixes: Vec<u32> = t
        .writes
        .iter()
        .filter(|w| matches!(&w.location, Location::Field { field, .. } if field == "fixes"))
        .map(|w| w.event.pos.line)
        .collect();
    assert_eq!(fixes, [4, 9]);

    let w = parse_str(
        "w.mir",
        "class A {\n static method main() {\n c = 0;\n while c {\n z = 1;\n }\n }\n}\n",
    )
    .unwrap();
    let t = interpret(&w, w.find_method("A.main").unwrap(), 1000).unwrap();
    assert!(t.writes.iter().all(|x| x.event.pos.line != 5));
}

#[test]
fn missref_path_flags() {
    let b = AnalysisBudget::deterministic();
    let (p, e) = load("mkref");
    let nopa = run(&p, e, Mode::Nopa, &b);
    let mut pa = run(&p, e, Mode::Pa, &b);
    assert!(annotate_missref_paths(&nopa, &mut pa));
    assert!(pa
        .missrefs
        .iter()
        .any(|m| m.on_conflict_path && m.pos.line == 8));

    // miss references only in a method off the conflict flow
    let q = parse_str(
        "u.mir",
        "class A {\n field f: int;\n method side() {\n h = mkref A;\n call h.side();\n }\n}\n\
         class M {\n static method main() {\n a = new A();\n b = new A();\n a.f = 1 @L;\n b.f = 2 @R;\n call a.side();\n }\n}\n",
    )
    .unwrap();
    let m = q.find_method("M.main").unwrap();
    let nopa = run(&q, m, Mode::Nopa, &b);
    let mut pa = run(&q, m, Mode::Pa, &b);
    assert_eq!((nopa.verdict, pa.verdict), (T, F));
    assert!(!pa.missrefs.is_empty());
    assert!(!annotate_missref_paths(&nopa, &mut pa));

    let (p, e) = load("fig1_advanced");
    let nopa = run(&p, e, Mode::Nopa, &b);
    let mut pa = run(&p, e, Mode::Pa, &b);
    assert!(pa.missrefs.is_empty());
    assert!(!annotate_missref_paths(&nopa, &mut pa));
}

#[test]
fn corpus_run_shape() {
    let two = vec![scenario("fig1_simple"), scenario("local")];
    let run = run_corpus(
        &two,
        &[Mode::Nopa, Mode::Pa],
        &AnalysisBudget::deterministic(),
        3,
        Clock::Virtual,
    );
    assert!(run.errors.is_empty());
    assert_eq!(run.units.iter().map(|u| u.outcomes.len()).sum::<usize>(), 4);
    assert_eq!(
        run.units
            .iter()
            .flat_map(|u| u.timings.values())
            .map(Vec::len)
            .sum::<usize>(),
        12
    );
}

#[test]
fn corpus_verdicts() {
    let run = run_corpus(
        &[scenario("fig1_advanced")],
        &[Mode::Nopa, Mode::Pa],
        &AnalysisBudget::deterministic(),
        1,
        Clock::Virtual,
    );
    assert_eq!(
        (run.verdicts(Mode::Nopa)[0].1, run.verdicts(Mode::Pa)[0].1),
        (T, F)
    );

    let run = run_corpus(
        &[scenario("deep-hierarchy")],
        &[Mode::Nopa, Mode::Pa],
        &AnalysisBudget::with_fuel(10_000),
        1,
        Clock::Virtual,
    );
    assert_eq!(
        (run.verdicts(Mode::Nopa)[0].1, run.verdicts(Mode::Pa)[0].1),
        (TO, F)
    );
    assert_eq!(run.units[0].outcomes[&Mode::Nopa].stats.visited, 10_000);
}

#[test]
fn bundled_corpus_matches_ground_truth_under_hybrid() {
    let corpus = load_corpus(&corpus_root()).unwrap();
    assert!(corpus.len() >= 10);
    let run = run_corpus(
        &corpus,
        &Mode::ALL,
        &AnalysisBudget::with_fuel(100_000),
        1,
        Clock::Virtual,
    );
    assert!(run.errors.is_empty(), "{:?}", run.errors);
    for u in &run.units {
        let hybrid = u.outcomes[&Mode::Hybrid].verdict;
        assert_eq!(Some(hybrid == T), u.ground_truth, "{}", u.unit);
    }
}

#[test]
fn tables_have_the_documented_headers() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_corpus(
        &[scenario("fig1_simple"), scenario("fig1_advanced")],
        &Mode::ALL,
        &AnalysisBudget::deterministic(),
        2,
        Clock::Virtual,
    );
    run.write_tables(dir.path()).unwrap();
    let head = |f: &str| {
        std::fs::read_to_string(dir.path().join(f))
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_string()
    };
    assert_eq!(head("confusion.csv"), "mode,tp,fp,tn,fn,excluded");
    assert_eq!(head("metrics.csv"), "mode,precision,recall,accuracy,f1");
    assert_eq!(
        head("transitions.csv"),
        "mode_a,mode_b,verdict_a,verdict_b,count"
    );
    assert_eq!(head("histogram.csv"), "divergences,projects");
    assert_eq!(
        head("timing.csv"),
        "unit,mode,mean_ms,median_ms,stddev_ms,flagged,winner"
    );
    let records = std::fs::read_to_string(dir.path().join("records.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 6);
    let parsed = oa_core::report::parse_records(records.as_bytes()).unwrap();
    assert_eq!(parsed, run.records());
}
