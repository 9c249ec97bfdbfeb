mod common;

use std::collections::BTreeMap;
use std::io::Write;
use std::time::{Duration, Instant};

use common::*;
use oa_core::eval::{
    annotate_missref_paths, confusion, divergence_histogram, generate_program, metrics,
    seed_from_env, transitions, wilcoxon_signed_rank, GenConfig, Labeled, UnitVerdicts,
};
use oa_core::frontend::entry_candidates;
use oa_core::oa::{AnalysisBudget, Mode, Verdict};
use oa_core::report::render_text;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {{
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    }};
}

fn within(start: Instant, limit: Duration) -> Check {
    let t = start.elapsed();
    ensure!(t < limit, "took {t:?}, limit {limit:?}");
    Ok(())
}

const EXPECTED_REPORT: &str =
    "Interference in class Text, method generateReport(), execution of line 8 overrides 10, \
assigning to variable this.<ReportSimple: int fixes>
Caused by line 8 flow:
  at Text.generateReport():8
  at ReportSimple.countDupWords():4
And line 10 flow:
  at Text.generateReport():10
  at ReportSimple.countDupWhiteSpace():9
";

fn criterion_1() -> Check {
    let start = Instant::now();
    let b = AnalysisBudget::deterministic();
    let (p, e) = load("fig1_simple");
    for mode in Mode::ALL {
        let o = run(&p, e, mode, &b);
        ensure!(
            o.verdict == Verdict::True,
            "fig1_simple {mode}: {}",
            o.verdict
        );
        ensure!(
            o.conflicts.len() == 1,
            "fig1_simple {mode}: {} conflicts",
            o.conflicts.len()
        );
        let text = render_text(&p, &o.conflicts[0]);
        ensure!(
            text == EXPECTED_REPORT,
            "fig1_simple {mode} report:\n{text}"
        );
    }
    let (p, e) = load("fig1_advanced");
    let got = (
        run(&p, e, Mode::Nopa, &b).verdict,
        run(&p, e, Mode::Pa, &b).verdict,
    );
    ensure!(
        got == (Verdict::True, Verdict::False),
        "fig1_advanced: {got:?}"
    );
    within(start, Duration::from_secs(1))
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let b = AnalysisBudget::deterministic();
    let (p, e) = load("mkref");
    let nopa = run(&p, e, Mode::Nopa, &b);
    let mut pa = run(&p, e, Mode::Pa, &b);
    let hybrid = run(&p, e, Mode::Hybrid, &b);
    ensure!(nopa.verdict == Verdict::True, "nopa {}", nopa.verdict);
    ensure!(pa.verdict == Verdict::False, "pa {}", pa.verdict);
    ensure!(hybrid.verdict == Verdict::True, "hybrid {}", hybrid.verdict);
    ensure!(!pa.missrefs.is_empty(), "pa has no miss references");
    ensure!(
        annotate_missref_paths(&nopa, &mut pa),
        "no miss reference on the conflict path: {:?}",
        pa.missrefs
    );
    ensure!(
        pa.missrefs.iter().any(|m| m.on_conflict_path),
        "flag not set"
    );
    within(start, Duration::from_secs(1))
}

fn criterion_3() -> Check {
    let start = Instant::now();
    let (p, e) = load("deep-hierarchy");
    let implementers = p
        .classes
        .iter()
        .filter(|c| c.interfaces.iter().any(|i| i == "Handler"))
        .count();
    ensure!(implementers >= 32, "only {implementers} implementers");
    let b = AnalysisBudget::with_fuel(100_000);
    let nopa = run(&p, e, Mode::Nopa, &b);
    let pa = run(&p, e, Mode::Pa, &b);
    ensure!(nopa.verdict == Verdict::Timeout, "nopa {}", nopa.verdict);
    ensure!(pa.verdict == Verdict::False, "pa {}", pa.verdict);
    let again = run(&p, e, Mode::Nopa, &b);
    ensure!(
        again.stats.visited == nopa.stats.visited && again.stats.paths == nopa.stats.paths,
        "nondeterministic stats"
    );
    // With the path cap lifted, fuel is what runs out.
    let uncapped = AnalysisBudget {
        path_cap: usize::MAX,
        ..b.clone()
    };
    let o = run(&p, e, Mode::Nopa, &uncapped);
    ensure!(
        o.verdict == Verdict::Timeout && o.stats.visited >= 100_000,
        "uncapped nopa {} after {}",
        o.verdict,
        o.stats.visited
    );
    ensure!(pa.stats.visited < 1_000, "pa visited {}", pa.stats.visited);
    within(start, Duration::from_secs(5))
}

fn labeled(tp: usize, fp: usize, tn: usize, fn_: usize) -> Labeled {
    let mut out = Vec::new();
    let mut truth = BTreeMap::new();
    for (n, v, t) in [
        (tp, Verdict::True, true),
        (fp, Verdict::True, false),
        (tn, Verdict::False, false),
        (fn_, Verdict::False, true),
    ] {
        for _ in 0..n {
            let id = format!("u{}", out.len());
            truth.insert(id.clone(), Some(t));
            out.push((id, v));
        }
    }
    (out, truth)
}

fn criterion_4() -> Check {
    for (counts, want) in [
        ((8, 9, 55, 21), [0.47, 0.28, 0.68, 0.35]),
        ((2, 5, 59, 27), [0.29, 0.07, 0.66, 0.11]),
    ] {
        let (v, t) = labeled(counts.0, counts.1, counts.2, counts.3);
        let m = metrics(&confusion(&v, &t).map_err(|e| e.to_string())?);
        let got = [m.precision, m.recall, m.accuracy, m.f1];
        for (g, w) in got.iter().zip(want) {
            let g = g.ok_or("undefined metric")?;
            ensure!(
                (g - w).abs() <= 0.005,
                "{counts:?}: got {got:?}, want {want:?}"
            );
        }
    }
    Ok(())
}

fn criterion_5() -> Check {
    use Verdict::*;
    let cells = [
        ((True, True), 234),
        ((True, False), 39),
        ((Timeout, True), 9),
        ((Timeout, False), 24),
        ((Timeout, Timeout), 2),
        ((False, False), 612),
    ];
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for ((va, vb), n) in cells {
        for _ in 0..n {
            let id = format!("u{}", a.len());
            a.push((id.clone(), va));
            b.push((id, vb));
        }
    }
    let t = transitions(&a, &b).map_err(|e| e.to_string())?;
    for ((va, vb), n) in cells {
        ensure!(t.cell(va, vb) == n, "cell ({va},{vb}) = {}", t.cell(va, vb));
    }
    ensure!(
        (t.row_total(True), t.row_total(False), t.row_total(Timeout)) == (273, 612, 35),
        "noPA marginals"
    );
    ensure!(
        (t.col_total(True), t.col_total(False), t.col_total(Timeout)) == (243, 675, 2),
        "PA marginals"
    );
    ensure!(
        t.venn(False).2 == 63,
        "PA-only FALSE region = {}",
        t.venn(False).2
    );

    let mut units = Vec::new();
    let mut project = 0;
    for (divergent, projects) in [(1, 20), (2, 5), (4, 1), (5, 2), (6, 2), (9, 1)] {
        for _ in 0..projects {
            project += 1;
            for k in 0..divergent + 2 {
                let pa = if k < divergent { False } else { True };
                units.push(UnitVerdicts {
                    project: format!("p{project}"),
                    unit: format!("p{project}#{k}"),
                    verdicts: BTreeMap::from([(Mode::Nopa, True), (Mode::Pa, pa)]),
                });
            }
        }
    }
    let h = divergence_histogram(&units);
    let want = BTreeMap::from([(1, 20), (2, 5), (4, 1), (5, 2), (6, 2), (9, 1)]);
    ensure!(h == want, "histogram {h:?}");
    Ok(())
}

fn criterion_6() -> Check {
    let start = Instant::now();
    let base = seed_from_env(1);
    let cfg = GenConfig::default();
    for seed in base..base + 100 {
        let p = generate_program(seed, &cfg).map_err(|e| format!("seed {seed}: {e}"))?;
        let v = soundness_violations(&p, 20_000);
        ensure!(v.is_empty(), "seed {seed}: {v:?}");
    }
    within(start, Duration::from_secs(60))
}

fn criterion_7() -> Check {
    let b = AnalysisBudget::with_fuel(50_000);
    for (id, p, entries) in corpus_programs() {
        let v = inclusion_violations(&p, &entries, &b);
        ensure!(v.is_empty(), "{id}: {v:?}");
    }
    let base = seed_from_env(1);
    for seed in base..base + 100 {
        let p = generate_program(seed, &GenConfig::default()).map_err(|e| e.to_string())?;
        let mut entries = entry_candidates(&p);
        entries.extend(p.find_method("Main.main"));
        let v = inclusion_violations(&p, &entries, &b);
        ensure!(v.is_empty(), "seed {seed}: {v:?}");
    }
    Ok(())
}

fn criterion_8() -> Check {
    let b = AnalysisBudget::with_fuel(50_000);
    let mut inserted = 0;
    for (id, p, entries) in corpus_programs() {
        let (swapped, erased) = (swap_sides(&p), erase_right(&p));
        for &e in &entries {
            for mode in Mode::ALL {
                let o = run(&p, e, mode, &b);
                let s = run(&swapped, e, mode, &b);
                ensure!(
                    s.verdict == o.verdict,
                    "{id} {mode}: swap {} -> {}",
                    o.verdict,
                    s.verdict
                );
                let r = run(&erased, e, mode, &b);
                let want = if o.verdict == Verdict::Timeout {
                    Verdict::Timeout
                } else {
                    Verdict::False
                };
                ensure!(
                    r.verdict == want,
                    "{id} {mode}: right erased gives {}",
                    r.verdict
                );
                if o.verdict == Verdict::Timeout {
                    continue;
                }
                for c in &o.conflicts {
                    if let Some(q) = with_base_before(&p, c, mode) {
                        inserted += 1;
                        let after = run(&q, e, mode, &b);
                        ensure!(
                            !keys(&after).contains(&key(c)),
                            "{id} {mode}: conflict {:?} survives base insertion",
                            key(c)
                        );
                    }
                }
            }
        }
    }
    ensure!(inserted >= 5, "only {inserted} base insertions applied");
    Ok(())
}

fn criterion_9() -> Check {
    let dirs = [
        tempfile::tempdir().map_err(|e| e.to_string())?,
        tempfile::tempdir().map_err(|e| e.to_string())?,
    ];
    let mut stdouts = Vec::new();
    for d in &dirs {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let argv = [
            "oadetect".into(),
            "corpus".into(),
            corpus_root().into_os_string(),
            "--reps".into(),
            "3".into(),
            "--fuel".into(),
            "100000".into(),
            "--virtual-clock".into(),
            "--out".into(),
            d.path().as_os_str().to_owned(),
        ];
        let code = oa_core::cli::run(argv, &mut out, &mut err);
        ensure!(
            code == 0,
            "corpus exit {code}: {}",
            String::from_utf8_lossy(&err)
        );
        stdouts.push(out);
    }
    ensure!(
        stdouts[0].split(|b| *b == b'\n').count() > 1,
        "empty corpus output"
    );
    let strip = |s: &[u8], d: &tempfile::TempDir| {
        String::from_utf8_lossy(s).replace(&d.path().display().to_string(), "OUT")
    };
    ensure!(
        strip(&stdouts[0], &dirs[0]) == strip(&stdouts[1], &dirs[1]),
        "stdout differs"
    );
    for f in [
        "records.jsonl",
        "confusion.csv",
        "metrics.csv",
        "transitions.csv",
        "histogram.csv",
        "timing.csv",
    ] {
        let a = std::fs::read(dirs[0].path().join(f)).map_err(|e| format!("{f}: {e}"))?;
        let b = std::fs::read(dirs[1].path().join(f)).map_err(|e| format!("{f}: {e}"))?;
        ensure!(!a.is_empty() && a == b, "{f} differs between runs");
    }
    Ok(())
}

fn criterion_10() -> Check {
    let w = wilcoxon_signed_rank(&[(1.0, 0.0), (0.0, 2.0), (3.0, 0.0), (0.0, 4.0), (5.0, 0.0)])
        .map_err(|e| e.to_string())?;
    ensure!(w.w == 6.0, "hand case W = {}", w.w);
    let mut rng = ChaCha8Rng::seed_from_u64(seed_from_env(10));
    let mut checked = 0;
    for _ in 0..400 {
        let n = rng.random_range(1..=10);
        let diffs: Vec<f64> = (0..n).map(|_| rng.random_range(-6i32..=6) as f64).collect();
        let pairs: Vec<(f64, f64)> = diffs.iter().map(|d| (*d, 0.0)).collect();
        let nonzero = diffs.iter().filter(|d| **d != 0.0).count();
        match wilcoxon_signed_rank(&pairs) {
            Ok(r) => {
                let (bw, bp) = brute_force_wilcoxon_p(&diffs);
                ensure!(
                    r.exact && r.w == bw && (r.p - bp).abs() < 1e-9,
                    "{diffs:?}: got (W {}, p {}), oracle ({bw}, {bp})",
                    r.w,
                    r.p
                );
                checked += 1;
            }
            Err(_) => ensure!(
                nonzero < 5,
                "{diffs:?}: rejected with {nonzero} non-zero differences"
            ),
        }
    }
    ensure!(checked >= 100, "only {checked} cases had enough pairs");
    Ok(())
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        ("motivating example", criterion_1),
        ("reflection and hybrid fallback", criterion_2),
        ("timeout direction", criterion_3),
        ("classification metrics", criterion_4),
        ("transition table and histogram", criterion_5),
        ("points-to soundness", criterion_6),
        ("mode inclusion", criterion_7),
        ("metamorphic relations", criterion_8),
        ("determinism", criterion_9),
        ("wilcoxon exact test", criterion_10),
    ];
    let mut out = std::io::stdout();
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let line = match check() {
            Ok(()) => format!("criterion {}: PASS ({name})\n", i + 1),
            Err(e) => {
                failed.push(i + 1);
                format!("criterion {}: FAIL ({name}): {e}\n", i + 1)
            }
        };
        out.write_all(line.as_bytes()).unwrap();
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
