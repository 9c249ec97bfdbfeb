//! `oadetect` command line.
//!
//! Exit codes: 0 no conflict anywhere, 1 at least one conflict, 2 a budget
//! ran out (and no conflict was found), 3 usage, input or other errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::eval::{load_corpus, run_corpus, wilcoxon_signed_rank};
use crate::frontend::{
    apply_sidecar, entry_candidates, load_sources, parse_program, ProvenanceMap,
};
use crate::mir::{MethodId, Program};
use crate::oa::{AnalysisBudget, Analyzer, Mode, Verdict};
use crate::pointsto::analyze_program;
use crate::report::{render_text, write_records, Clock, Record};

pub const EXIT_FALSE: i32 = 0;
pub const EXIT_TRUE: i32 = 1;
pub const EXIT_TIMEOUT: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "oadetect",
    version,
    about = "Detects override-assignment semantic merge conflicts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct BudgetArgs {
    /// Maximum call depth followed from the entry.
    #[arg(long, default_value_t = 5)]
    depth: usize,
    /// Statement visits before the analysis gives up.
    #[arg(long, default_value_t = 500_000)]
    fuel: u64,
    /// Wall-clock limit in seconds; 0 disables it.
    #[arg(long, default_value_t = 300)]
    timeout: u64,
    /// Maximum number of enumerated paths.
    #[arg(long, default_value_t = 4096)]
    path_cap: usize,
    /// Report elapsed time as a function of visited statements.
    #[arg(long)]
    virtual_clock: bool,
}

impl BudgetArgs {
    fn budget(&self) -> AnalysisBudget {
        AnalysisBudget {
            depth: self.depth,
            fuel: self.fuel,
            wall_clock: (self.timeout > 0).then(|| Duration::from_secs(self.timeout)),
            path_cap: self.path_cap,
            early_exit: false,
        }
    }

    fn clock(&self) -> Clock {
        if self.virtual_clock {
            Clock::Virtual
        } else {
            Clock::Wall
        }
    }
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Source files or directories of `.mir` files.
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    /// JSON map of LEFT/RIGHT lines.
    #[arg(long)]
    sidecar: Option<PathBuf>,
    /// Entry method as `Class.method`; defaults to every method changed by both sides.
    #[arg(long)]
    entry: Option<String>,
}

impl InputArgs {
    fn program(&self) -> Result<Program> {
        let p = parse_program(&load_sources(&self.paths)?)?;
        match &self.sidecar {
            Some(s) => apply_sidecar(&p, &ProvenanceMap::read(s)?),
            None => Ok(p),
        }
    }

    fn entries(&self, p: &Program) -> Result<Vec<MethodId>> {
        match &self.entry {
            Some(e) => Ok(vec![p
                .find_method(e)
                .ok_or_else(|| Error::EntryNotFound(e.clone()))?]),
            None => Ok(entry_candidates(p)),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analyze one merged program.
    Analyze {
        #[command(flatten)]
        input: InputArgs,
        /// `nopa`, `pa` or `hybrid`; repeatable [default: hybrid]
        #[arg(long = "mode", value_parser = parse_mode)]
        modes: Vec<Mode>,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Write JSON records here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario corpus and write the evaluation tables.
    Corpus {
        /// Corpus directory (or a single scenario directory).
        root: PathBuf,
        /// `nopa`, `pa` or `hybrid`; repeatable [default: all three]
        #[arg(long = "mode", value_parser = parse_mode)]
        modes: Vec<Mode>,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Timed repetitions per unit and mode.
        #[arg(long, default_value_t = 10)]
        reps: usize,
        /// Output directory for records and tables.
        #[arg(long, default_value = "oa-out")]
        out: PathBuf,
    },
    /// Print a call graph, one `caller<TAB>file:line<TAB>target` edge per line.
    DumpGraph {
        #[command(flatten)]
        input: InputArgs,
        /// `cha` (rooted at each entry) or `pts`.
        #[arg(long, default_value = "cha")]
        builder: String,
    },
    /// Print points-to sets and unresolved call sites.
    DumpPts {
        #[command(flatten)]
        input: InputArgs,
    },
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    s.parse()
}

fn analyze(
    input: &InputArgs,
    modes: &[Mode],
    budget: &BudgetArgs,
    out: Option<&PathBuf>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32> {
    let p = input.program()?;
    let entries = input.entries(&p)?;
    if entries.is_empty() {
        writeln!(
            stderr,
            "no method is modified by both sides; nothing to analyze"
        )?;
    }
    let modes = if modes.is_empty() {
        vec![Mode::Hybrid]
    } else {
        modes.to_vec()
    };
    let analyzer = if modes.iter().any(|m| m.uses_points_to()) {
        Analyzer::new(&p)
    } else {
        Analyzer::without_points_to(&p)
    };
    let b = budget.budget();
    let mut records = Vec::new();
    let (mut any_true, mut any_timeout) = (false, false);
    for &entry in &entries {
        let unit = p.method_name(entry);
        for &mode in &modes {
            let o = analyzer.detect(entry, mode, &b)?;
            any_true |= !o.conflicts.is_empty();
            any_timeout |= o.verdict == Verdict::Timeout;
            for c in &o.conflicts {
                writeln!(stdout, "[{mode}] {}", render_text(&p, c))?;
            }
            records.push(Record::from_outcome(&unit, mode, &o, budget.clock()));
        }
    }
    match out {
        Some(path) => write_records(&records, std::fs::File::create(path)?)?,
        None => write_records(&records, &mut *stdout)?,
    }
    Ok(if any_true {
        EXIT_TRUE
    } else if any_timeout {
        EXIT_TIMEOUT
    } else {
        EXIT_FALSE
    })
}

fn corpus(
    root: &Path,
    modes: &[Mode],
    budget: &BudgetArgs,
    reps: usize,
    out: &Path,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32> {
    let scenarios = load_corpus(root)?;
    let modes = if modes.is_empty() {
        Mode::ALL.to_vec()
    } else {
        modes.to_vec()
    };
    let run = run_corpus(
        &scenarios,
        &modes,
        &budget.budget(),
        reps.max(1),
        budget.clock(),
    );
    for (id, e) in &run.errors {
        writeln!(stderr, "{id}: {e}")?;
    }
    run.write_tables(out)?;
    for u in &run.units {
        let verdicts: Vec<String> = u
            .outcomes
            .iter()
            .map(|(m, o)| format!("{m}={}", o.verdict))
            .collect();
        writeln!(stdout, "{}\t{}", u.unit, verdicts.join(" "))?;
    }
    if modes.contains(&Mode::Nopa) && modes.contains(&Mode::Pa) {
        let pairs: Vec<(f64, f64)> = run
            .units
            .iter()
            .map(|u| {
                let mean = |m: Mode| u.timings[&m].iter().sum::<f64>() / u.timings[&m].len() as f64;
                (mean(Mode::Nopa), mean(Mode::Pa))
            })
            .collect();
        match wilcoxon_signed_rank(&pairs) {
            Ok(w) => writeln!(
                stdout,
                "wilcoxon nopa vs pa: W = {:.1}, p = {:.4} (n = {})",
                w.w, w.p, w.n
            )?,
            Err(e) => writeln!(stdout, "wilcoxon nopa vs pa: {e}")?,
        }
    }
    writeln!(
        stdout,
        "wrote {} units to {}",
        run.units.len(),
        out.display()
    )?;
    Ok(if run.errors.is_empty() {
        EXIT_FALSE
    } else {
        EXIT_ERROR
    })
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Analyze {
            input,
            modes,
            budget,
            out,
        } => analyze(&input, &modes, &budget, out.as_ref(), stdout, stderr),
        Command::Corpus {
            root,
            modes,
            budget,
            reps,
            out,
        } => corpus(&root, &modes, &budget, reps, &out, stdout, stderr),
        Command::DumpGraph { input, builder } => {
            let p = input.program()?;
            match builder.as_str() {
                "cha" => {
                    let cha = crate::callgraph::ChaResolver::new(&p);
                    for e in input.entries(&p)? {
                        write!(stdout, "{}", cha.build_graph(e)?.dump(&p))?;
                    }
                }
                "pts" => write!(stdout, "{}", analyze_program(&p)?.callgraph.dump(&p))?,
                other => {
                    writeln!(stderr, "unknown builder `{other}` (expected cha or pts)")?;
                    return Ok(EXIT_ERROR);
                }
            }
            Ok(EXIT_FALSE)
        }
        Command::DumpPts { input } => {
            let p = input.program()?;
            write!(stdout, "{}", analyze_program(&p)?.dump(&p))?;
            Ok(EXIT_FALSE)
        }
    }
}

/// Runs the tool on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_ERROR
            } else {
                EXIT_FALSE
            };
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
            } else {
                let _ = write!(stdout, "{}", e.render());
            }
            return code;
        }
    };
    match dispatch(cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_ERROR
        }
    }
}
