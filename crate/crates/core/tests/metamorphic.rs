mod common;

use common::{corpus_programs, erase_right, key, keys, run, swap_sides, with_base_before};
use oa_core::eval::{generate_program, seed_from_env, GenConfig};
use oa_core::frontend::entry_candidates;
use oa_core::oa::{AnalysisBudget, Mode, Verdict};

fn budget() -> AnalysisBudget {
    AnalysisBudget::with_fuel(50_000)
}

#[test]
fn swapping_sides_preserves_verdicts_and_conflicts() {
    for (id, p, entries) in corpus_programs() {
        let q = swap_sides(&p);
        for &e in &entries {
            for mode in Mode::ALL {
                let (a, b) = (run(&p, e, mode, &budget()), run(&q, e, mode, &budget()));
                assert_eq!(a.verdict, b.verdict, "{id} {mode}");
                assert_eq!(keys(&a), keys(&b), "{id} {mode}");
            }
        }
    }
}

#[test]
fn erasing_right_forces_false() {
    for (id, p, entries) in corpus_programs() {
        let q = erase_right(&p);
        for &e in &entries {
            for mode in Mode::ALL {
                let before = run(&p, e, mode, &budget()).verdict;
                let after = run(&q, e, mode, &budget()).verdict;
                let want = if before == Verdict::Timeout {
                    Verdict::Timeout
                } else {
                    Verdict::False
                };
                assert_eq!(after, want, "{id} {mode}");
            }
        }
    }
}

#[test]
fn intervening_base_removes_the_conflict() {
    let mut applied = Vec::new();
    for (id, p, entries) in corpus_programs() {
        for &e in &entries {
            for mode in Mode::ALL {
                let o = run(&p, e, mode, &budget());
                for c in &o.conflicts {
                    let Some(q) = with_base_before(&p, c, mode) else {
                        continue;
                    };
                    let after = run(&q, e, mode, &budget());
                    assert!(
                        !keys(&after).contains(&key(c)),
                        "{id} {mode}: {:?} survives",
                        key(c)
                    );
                    applied.push(format!("{id}/{mode}"));
                }
            }
        }
    }
    for must in [
        "fig1_simple/nopa",
        "fig1_simple/pa",
        "local/nopa",
        "array/pa",
        "static-field/hybrid",
    ] {
        assert!(
            applied.iter().any(|a| a == must),
            "{must} not exercised: {applied:?}"
        );
    }
}

#[test]
fn relations_hold_on_random_programs() {
    let base = seed_from_env(7);
    let cfg = GenConfig {
        max_classes: 5,
        max_stmts: 14,
        ..GenConfig::default()
    };
    let mut conflicts = 0;
    for seed in base..base + 60 {
        let p = generate_program(seed, &cfg).unwrap();
        let (swapped, erased) = (swap_sides(&p), erase_right(&p));
        for e in entry_candidates(&p) {
            for mode in Mode::ALL {
                let o = run(&p, e, mode, &budget());
                conflicts += o.conflicts.len();
                assert_eq!(
                    run(&swapped, e, mode, &budget()).verdict,
                    o.verdict,
                    "seed {seed} {mode}"
                );
                assert_ne!(
                    run(&erased, e, mode, &budget()).verdict,
                    Verdict::True,
                    "seed {seed} {mode}"
                );
                if o.verdict == Verdict::Timeout {
                    continue;
                }
                for c in &o.conflicts {
                    if let Some(q) = with_base_before(&p, c, mode) {
                        assert!(
                            !keys(&run(&q, e, mode, &budget())).contains(&key(c)),
                            "seed {seed} {mode}: {:?}",
                            key(c)
                        );
                    }
                }
            }
        }
    }
    assert!(conflicts > 0);
}
