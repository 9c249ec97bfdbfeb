use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::oa::{Mode, Verdict};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    /// Units left out because the analysis timed out.
    pub excluded: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        ConfusionMatrix {
            tp,
            fp,
            tn,
            fn_,
            excluded: 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Scores labeled verdicts. Timeouts are counted as excluded; a unit without
/// a label is an error.
/// Unit verdicts paired with optional ground truth labels.
pub type Labeled = (Vec<(String, Verdict)>, BTreeMap<String, Option<bool>>);

pub fn confusion(
    outcomes: &[(String, Verdict)],
    truths: &BTreeMap<String, Option<bool>>,
) -> Result<ConfusionMatrix> {
    let mut m = ConfusionMatrix::default();
    for (unit, v) in outcomes {
        let Some(Some(truth)) = truths.get(unit) else {
            return Err(Error::Unlabeled(unit.clone()));
        };
        match (v, truth) {
            (Verdict::Timeout, _) => m.excluded += 1,
            (Verdict::True, true) => m.tp += 1,
            (Verdict::True, false) => m.fp += 1,
            (Verdict::False, false) => m.tn += 1,
            (Verdict::False, true) => m.fn_ += 1,
        }
    }
    Ok(m)
}

/// Ratios; `None` where the denominator is zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub accuracy: Option<f64>,
    pub f1: Option<f64>,
}

fn ratio(n: u64, d: u64) -> Option<f64> {
    (d > 0).then(|| n as f64 / d as f64)
}

pub fn metrics(m: &ConfusionMatrix) -> MetricsSummary {
    MetricsSummary {
        precision: ratio(m.tp, m.tp + m.fp),
        recall: ratio(m.tp, m.tp + m.fn_),
        accuracy: ratio(m.tp + m.tn, m.total()),
        f1: ratio(2 * m.tp, 2 * m.tp + m.fp + m.fn_),
    }
}

/// Two-decimal display of an optional ratio; `undefined` when absent.
pub fn display_ratio(r: Option<f64>) -> String {
    r.map_or_else(|| "undefined".to_string(), |x| format!("{x:.2}"))
}

fn vidx(v: Verdict) -> usize {
    match v {
        Verdict::True => 0,
        Verdict::False => 1,
        Verdict::Timeout => 2,
    }
}

pub const VERDICTS: [Verdict; 3] = [Verdict::True, Verdict::False, Verdict::Timeout];

/// Unit counts per (verdict under A, verdict under B).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TransitionTable {
    pub counts: [[u64; 3]; 3],
}

impl TransitionTable {
    pub fn cell(&self, a: Verdict, b: Verdict) -> u64 {
        self.counts[vidx(a)][vidx(b)]
    }

    /// Units with verdict `v` under A.
    pub fn row_total(&self, v: Verdict) -> u64 {
        self.counts[vidx(v)].iter().sum()
    }

    /// Units with verdict `v` under B.
    pub fn col_total(&self, v: Verdict) -> u64 {
        self.counts.iter().map(|r| r[vidx(v)]).sum()
    }

    /// Two-set Venn regions for one verdict class: (only A, both, only B).
    pub fn venn(&self, v: Verdict) -> (u64, u64, u64) {
        let both = self.cell(v, v);
        (self.row_total(v) - both, both, self.col_total(v) - both)
    }
}

pub fn transitions(a: &[(String, Verdict)], b: &[(String, Verdict)]) -> Result<TransitionTable> {
    let ma: BTreeMap<&str, Verdict> = a.iter().map(|(u, v)| (u.as_str(), *v)).collect();
    let mb: BTreeMap<&str, Verdict> = b.iter().map(|(u, v)| (u.as_str(), *v)).collect();
    if ma.len() != a.len() || mb.len() != b.len() || !ma.keys().eq(mb.keys()) {
        return Err(Error::UnitMismatch);
    }
    let mut t = TransitionTable::default();
    for (u, va) in &ma {
        t.counts[vidx(*va)][vidx(mb[u])] += 1;
    }
    Ok(t)
}

/// Verdicts of one unit under several modes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnitVerdicts {
    pub project: String,
    pub unit: String,
    pub verdicts: BTreeMap<Mode, Verdict>,
}

impl UnitVerdicts {
    pub fn diverges(&self) -> bool {
        self.verdicts.values().collect::<BTreeSet<_>>().len() > 1
    }
}

/// Divergent-unit count per project, folded into a histogram
/// (divergences -> projects). Projects with none are left out.
pub fn divergence_histogram(units: &[UnitVerdicts]) -> BTreeMap<usize, usize> {
    let mut per_project: BTreeMap<&str, usize> = BTreeMap::new();
    for u in units {
        if u.diverges() {
            *per_project.entry(&u.project).or_default() += 1;
        }
    }
    let mut hist = BTreeMap::new();
    for n in per_project.into_values() {
        *hist.entry(n).or_default() += 1;
    }
    hist
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SampleStats {
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (n - 1); zero for a single sample.
    pub stddev: f64,
    /// Standard deviation above 10% of the mean.
    pub flagged: bool,
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn sample_stats(xs: &[f64]) -> SampleStats {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let stddev = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    SampleStats {
        mean,
        median: median(xs),
        stddev,
        flagged: stddev > 0.10 * mean,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnitTiming {
    pub unit: String,
    pub modes: BTreeMap<Mode, SampleStats>,
    /// Mode with the strictly lowest mean.
    pub winner: Option<Mode>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimingSummary {
    pub units: Vec<UnitTiming>,
    /// Mean, median and spread of the per-unit means.
    pub modes: BTreeMap<Mode, SampleStats>,
    pub wins: BTreeMap<Mode, usize>,
}

pub fn timing_summary(samples: &BTreeMap<String, BTreeMap<Mode, Vec<f64>>>) -> TimingSummary {
    let mut units = Vec::new();
    let mut means: BTreeMap<Mode, Vec<f64>> = BTreeMap::new();
    let mut wins: BTreeMap<Mode, usize> = BTreeMap::new();
    for (unit, per_mode) in samples {
        let modes: BTreeMap<Mode, SampleStats> = per_mode
            .iter()
            .filter(|(_, xs)| !xs.is_empty())
            .map(|(m, xs)| (*m, sample_stats(xs)))
            .collect();
        for (m, s) in &modes {
            means.entry(*m).or_default().push(s.mean);
        }
        let best = modes.values().map(|s| s.mean).fold(f64::INFINITY, f64::min);
        let at_best: Vec<Mode> = modes
            .iter()
            .filter(|(_, s)| s.mean == best)
            .map(|(m, _)| *m)
            .collect();
        let winner = (modes.len() > 1 && at_best.len() == 1).then(|| at_best[0]);
        if let Some(w) = winner {
            *wins.entry(w).or_default() += 1;
        }
        units.push(UnitTiming {
            unit: unit.clone(),
            modes,
            winner,
        });
    }
    TimingSummary {
        units,
        modes: means
            .into_iter()
            .map(|(m, xs)| (m, sample_stats(&xs)))
            .collect(),
        wins,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WilcoxonResult {
    pub w: f64,
    pub p: f64,
    /// Non-zero differences used.
    pub n: usize,
    pub exact: bool,
}

/// Largest sample size for which the p-value is computed exactly.
pub const EXACT_LIMIT: usize = 25;

/// Average ranks (1-based) of `xs`, ties sharing the mean of their positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for k in &order[i..=j] {
            ranks[*k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided Wilcoxon signed-rank test on paired samples.
pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)]) -> Result<WilcoxonResult> {
    let diffs: Vec<f64> = pairs
        .iter()
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n < 5 {
        return Err(Error::InsufficientPairs(n));
    }
    let ranks = average_ranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w = w_plus.min(total - w_plus);

    if n <= EXACT_LIMIT {
        // Doubled ranks are integers even with ties.
        let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
        let max: usize = doubled.iter().sum();
        let mut dp = vec![0f64; max + 1];
        dp[0] = 1.0;
        for &r in &doubled {
            for s in (r..=max).rev() {
                dp[s] += dp[s - r];
            }
        }
        let limit = (w * 2.0).round() as usize;
        let le: f64 = dp[..=limit].iter().sum();
        let p = (2.0 * le / 2f64.powi(n as i32)).min(1.0);
        return Ok(WilcoxonResult {
            w,
            p,
            n,
            exact: true,
        });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted = ranks.clone();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|r| **r == sorted[i]).count();
        let t = j as f64;
        tie_term += t * t * t - t;
        i += j;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = (w - mean + 0.5).min(0.0) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let p = (2.0 * normal.cdf(z)).min(1.0);
    Ok(WilcoxonResult {
        w,
        p,
        n,
        exact: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(diffs: &[f64]) -> Vec<(f64, f64)> {
        diffs.iter().map(|d| (*d, 0.0)).collect()
    }

    #[test]
    fn hand_ranked_case() {
        let r = wilcoxon_signed_rank(&pairs(&[1.0, -2.0, 3.0, -4.0, 5.0])).unwrap();
        assert_eq!(r.w, 6.0);
        assert!(r.exact);
    }

    #[test]
    fn all_positive_five() {
        let r = wilcoxon_signed_rank(&pairs(&[1.0, 2.0, 3.0, 4.0, 5.0])).unwrap();
        assert_eq!(r.w, 0.0);
        assert!((r.p - 0.0625).abs() < 1e-12);
    }

    #[test]
    fn zeros_are_dropped() {
        assert!(matches!(
            wilcoxon_signed_rank(&pairs(&[0.0; 8])),
            Err(Error::InsufficientPairs(0))
        ));
        assert!(matches!(
            wilcoxon_signed_rank(&pairs(&[1.0, 0.0, 2.0, 3.0, 4.0])),
            Err(Error::InsufficientPairs(4))
        ));
    }

    #[test]
    fn large_sample_uses_normal() {
        let d: Vec<f64> = (1..=40)
            .map(|i| if i % 3 == 0 { -(i as f64) } else { i as f64 })
            .collect();
        let r = wilcoxon_signed_rank(&pairs(&d)).unwrap();
        assert!(!r.exact);
        assert!(r.p > 0.0 && r.p < 1.0);
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(
            average_ranks(&[3.0, 1.0, 3.0, 2.0]),
            vec![3.5, 1.0, 3.5, 2.0]
        );
    }

    #[test]
    fn toy_confusion() {
        let out: Vec<(String, Verdict)> = vec![
            ("a".into(), Verdict::True),
            ("b".into(), Verdict::True),
            ("c".into(), Verdict::False),
            ("d".into(), Verdict::False),
            ("e".into(), Verdict::Timeout),
        ];
        let truth: BTreeMap<String, Option<bool>> = [
            ("a", true),
            ("b", true),
            ("c", false),
            ("d", false),
            ("e", true),
        ]
        .into_iter()
        .map(|(u, t)| (u.into(), Some(t)))
        .collect();
        let m = confusion(&out, &truth).unwrap();
        assert_eq!((m.tp, m.fp, m.tn, m.fn_, m.excluded), (2, 0, 2, 0, 1));
        let mut unl = truth.clone();
        unl.insert("a".into(), None);
        assert!(matches!(confusion(&out, &unl), Err(Error::Unlabeled(_))));
    }

    #[test]
    fn degenerate_metrics() {
        let m = metrics(&ConfusionMatrix::new(0, 0, 7, 0));
        assert_eq!((m.precision, m.recall, m.accuracy), (None, None, Some(1.0)));
        assert_eq!(display_ratio(m.precision), "undefined");
    }

    #[test]
    fn timing_examples() {
        let mut s = BTreeMap::new();
        s.insert(
            "u1".to_string(),
            BTreeMap::from([(Mode::Nopa, vec![1.0]), (Mode::Pa, vec![100.0])]),
        );
        s.insert(
            "u2".to_string(),
            BTreeMap::from([(Mode::Nopa, vec![2.0]), (Mode::Pa, vec![1.0])]),
        );
        let t = timing_summary(&s);
        assert_eq!(t.wins, BTreeMap::from([(Mode::Nopa, 1), (Mode::Pa, 1)]));
        assert_eq!(t.modes[&Mode::Nopa].mean, 1.5);
        assert_eq!(t.modes[&Mode::Pa].mean, 50.5);
        assert!(sample_stats(&[10.0, 10.0, 14.0]).flagged);
        assert!(!sample_stats(&[2.0, 2.0, 2.0]).flagged);
    }
}
