//! Evaluation harness: corpus runs, classification tables, timing
//! statistics, a concrete interpreter and a random program generator.

mod corpus;
pub mod generate;
pub mod interp;
mod stats;

pub use corpus::{
    annotate_missref_paths, load_corpus, run_corpus, CorpusRun, Manifest, Scenario, UnitRun,
};
pub use generate::{generate_program, generate_source, seed_from_env, GenConfig};
pub use interp::{interpret, Trace};
pub use stats::{
    average_ranks, confusion, display_ratio, divergence_histogram, metrics, sample_stats,
    timing_summary, transitions, wilcoxon_signed_rank, ConfusionMatrix, Labeled, MetricsSummary,
    SampleStats, TimingSummary, TransitionTable, UnitTiming, UnitVerdicts, WilcoxonResult,
    EXACT_LIMIT, VERDICTS,
};
