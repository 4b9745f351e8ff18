//! Metric subsets, per-simulation summaries, their cross-simulation means,
//! and the HM-gain (HMG) index.
//!
//! Terminology: a *cell* is one `(policy, interaction, difficulty)` slice of
//! a single simulation's records for a single metric, with its
//! [`SummaryStats`]. The HMG index compares the cross-simulation mean of a
//! statistic over HM cells (for one interaction) against the same mean over
//! H or M cells.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::engine::{MetricFrame, MetricRecord};
use crate::error::{Result, SimError};
use crate::stats::{compensated_sum, summarize, Omega, SummaryStats};
use crate::types::{Difficulty, InteractionKind, PolicyKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Theta,
    Y,
    V,
    Err,
    U,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Theta, Metric::Y, Metric::V, Metric::Err, Metric::U];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Theta => "theta",
            Metric::Y => "y",
            Metric::V => "v",
            Metric::Err => "err",
            Metric::U => "u",
        }
    }

    pub fn of(self, r: &MetricRecord) -> f64 {
        match self {
            Metric::Theta => r.theta,
            Metric::Y => r.y,
            Metric::V => r.v,
            Metric::Err => r.err,
            Metric::U => r.u,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| SimError::usage(format!("unknown metric `{s}`; expected one of theta, y, v, err, u")))
    }
}

/// Which records to pull a metric from. Absent filters match everything.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubsetKey {
    pub metric: Metric,
    pub policy: Option<PolicyKind>,
    pub difficulty: Option<Difficulty>,
    pub interaction: Option<InteractionKind>,
}

impl SubsetKey {
    pub fn all(metric: Metric) -> Self {
        SubsetKey {
            metric,
            policy: None,
            difficulty: None,
            interaction: None,
        }
    }

    pub fn policy(metric: Metric, c: PolicyKind) -> Self {
        SubsetKey {
            policy: Some(c),
            ..SubsetKey::all(metric)
        }
    }

    pub fn with_difficulty(self, d: Difficulty) -> Self {
        SubsetKey {
            difficulty: Some(d),
            ..self
        }
    }

    pub fn with_interaction(self, a: InteractionKind) -> Self {
        SubsetKey {
            interaction: Some(a),
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.difficulty.is_some() && self.policy.is_none() {
            return Err(SimError::usage("a difficulty filter requires a policy filter"));
        }
        Ok(())
    }

    fn matches(&self, r: &MetricRecord) -> bool {
        self.policy.is_none_or(|c| r.policy == c)
            && self.difficulty.is_none_or(|d| r.difficulty == d)
            && self.interaction.is_none_or(|a| r.interaction == a)
    }
}

/// Metric values of every matching record, in frame then record order.
pub fn subset(frames: &[MetricFrame], key: &SubsetKey) -> Result<Vec<f64>> {
    key.validate()?;
    Ok(frames
        .iter()
        .flat_map(|f| f.records.iter())
        .filter(|r| key.matches(r))
        .map(|r| key.metric.of(r))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerSimulationStats {
    pub entries: Vec<(String, SummaryStats)>,
    /// Frames whose subset was empty.
    pub skipped: usize,
}

pub fn per_simulation_stats(frames: &[MetricFrame], key: &SubsetKey) -> Result<PerSimulationStats> {
    key.validate()?;
    let mut entries = Vec::with_capacity(frames.len());
    let mut skipped = 0;
    for f in frames {
        let values = subset(std::slice::from_ref(f), key)?;
        if values.is_empty() {
            skipped += 1;
        } else {
            entries.push((f.config_id.clone(), summarize(&values)?));
        }
    }
    Ok(PerSimulationStats { entries, skipped })
}

/// Cross-simulation mean of one statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Central {
    pub value: f64,
    /// Simulations that had the statistic (skewness can be undefined).
    pub present: usize,
    pub total: usize,
}

/// Arithmetic mean of `omega` over simulations, each weighted equally.
/// `None` when no entry defines the statistic.
pub fn central_tendency<'a, I>(entries: I, omega: Omega) -> Option<Central>
where
    I: IntoIterator<Item = &'a SummaryStats>,
{
    central_of(entries.into_iter().map(|s| s.get(omega)))
}

fn central_of<I: IntoIterator<Item = Option<f64>>>(values: I) -> Option<Central> {
    let mut total = 0;
    let present: Vec<f64> = values.into_iter().inspect(|_| total += 1).flatten().collect();
    if present.is_empty() {
        return None;
    }
    Some(Central {
        value: compensated_sum(present.iter().copied()) / present.len() as f64,
        present: present.len(),
        total,
    })
}

/// Percentage gain of `hm_bar` over `baseline_bar`, reading positive for
/// improvement whatever the baseline's sign. `None` for a zero baseline.
pub fn hmg(hm_bar: f64, baseline_bar: f64) -> Option<f64> {
    let rel = (hm_bar - baseline_bar) / baseline_bar * 100.0;
    if baseline_bar > 0.0 {
        Some(rel)
    } else if baseline_bar < 0.0 {
        Some(-rel)
    } else {
        None
    }
}

/// Which breakdowns to compute below the whole-simulation set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Grouping {
    pub policy: bool,
    pub difficulty: bool,
    /// Split HM by interaction function; H and M cells are labelled `individual`.
    pub interaction: bool,
}

impl Grouping {
    /// Everything the HMG tables need.
    pub fn full() -> Self {
        Grouping {
            policy: true,
            difficulty: true,
            interaction: true,
        }
    }

    /// Parses a comma list such as `policy,difficulty,a`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut g = Grouping::default();
        for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match part.to_ascii_lowercase().as_str() {
                "policy" | "c" => g.policy = true,
                "difficulty" | "d" => g.difficulty = true,
                "a" | "interaction" => g.interaction = true,
                other => {
                    return Err(SimError::usage(format!(
                        "unknown grouping `{other}`; expected policy, difficulty, a"
                    )))
                }
            }
        }
        if (g.difficulty || g.interaction) && !g.policy {
            return Err(SimError::usage("difficulty and interaction groupings require `policy`"));
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellKey {
    pub policy: Option<PolicyKind>,
    pub interaction: Option<InteractionKind>,
    pub difficulty: Option<Difficulty>,
}

impl CellKey {
    pub const WHOLE: CellKey = CellKey {
        policy: None,
        interaction: None,
        difficulty: None,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    pub config_id: String,
    /// The simulation's HM margin growth, when known; drives delta-binned HMG.
    pub delta_hm: Option<f64>,
    pub metric: Metric,
    pub key: CellKey,
    pub n: usize,
    pub stats: SummaryStats,
}

impl CellStats {
    pub fn value(&self, omega: Omega) -> CellValue {
        CellValue {
            config_id: self.config_id.clone(),
            delta_hm: self.delta_hm,
            metric: self.metric,
            key: self.key,
            omega,
            value: self.stats.get(omega),
        }
    }
}

/// One statistic of one cell; what a summary file stores per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CellValue {
    pub config_id: String,
    pub delta_hm: Option<f64>,
    pub metric: Metric,
    pub key: CellKey,
    pub omega: Omega,
    pub value: Option<f64>,
}

/// Summaries of one simulation's records for each metric and cell of `grouping`.
/// The whole-simulation cell is always included. Cells come out in
/// `(metric, key)` order.
pub fn frame_cells(
    frame: &MetricFrame,
    delta_hm: Option<f64>,
    metrics: &[Metric],
    grouping: Grouping,
) -> Result<Vec<CellStats>> {
    let mut buckets: BTreeMap<CellKey, Vec<&MetricRecord>> = BTreeMap::new();
    for r in &frame.records {
        buckets.entry(CellKey::WHOLE).or_default().push(r);
        if !grouping.policy {
            continue;
        }
        let by_policy = CellKey {
            policy: Some(r.policy),
            interaction: grouping.interaction.then_some(r.interaction),
            difficulty: None,
        };
        buckets.entry(by_policy).or_default().push(r);
        if grouping.difficulty {
            let by_difficulty = CellKey {
                difficulty: Some(r.difficulty),
                ..by_policy
            };
            buckets.entry(by_difficulty).or_default().push(r);
        }
    }

    let mut out = Vec::with_capacity(metrics.len() * buckets.len());
    for &metric in metrics {
        for (key, records) in &buckets {
            let values: Vec<f64> = records.iter().map(|r| metric.of(r)).collect();
            out.push(CellStats {
                config_id: frame.config_id.clone(),
                delta_hm,
                metric,
                key: *key,
                n: values.len(),
                stats: summarize(&values)?,
            });
        }
    }
    Ok(out)
}

/// Cross-simulation means for every `(metric, cell)` present, per statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub metric: Metric,
    pub key: CellKey,
    pub omega: Omega,
    pub central: Central,
}

pub fn aggregate_cells(cells: &[CellStats], omegas: &[Omega]) -> Vec<AggregateRow> {
    let values: Vec<CellValue> = cells.iter().flat_map(|c| omegas.iter().map(|&o| c.value(o))).collect();
    aggregate_values(&values)
}

/// Aggregates in `(metric, key, omega)` order.
pub fn aggregate_values(values: &[CellValue]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(Metric, CellKey, Omega), Vec<Option<f64>>> = BTreeMap::new();
    for v in values {
        groups.entry((v.metric, v.key, v.omega)).or_default().push(v.value);
    }
    groups
        .into_iter()
        .filter_map(|((metric, key, omega), vs)| {
            central_of(vs).map(|central| AggregateRow {
                metric,
                key,
                omega,
                central,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HmgEntry {
    pub omega: Omega,
    pub metric: Metric,
    pub baseline: PolicyKind,
    /// `None` is the pooled all-difficulties column.
    pub difficulty: Option<Difficulty>,
    pub interaction: InteractionKind,
    pub hm_bar: f64,
    pub baseline_bar: f64,
    /// `None` when the baseline mean is exactly zero.
    pub gain_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HmgReport {
    pub entries: Vec<HmgEntry>,
    /// One line per table cell that could not be computed.
    pub diagnostics: Vec<String>,
}

fn difficulty_label(d: Option<Difficulty>) -> &'static str {
    d.map_or("all", Difficulty::as_str)
}

/// HMG table over precomputed cells. Cells must carry the interaction
/// breakdown; rows are ordered by baseline, interaction, then difficulty
/// (pooled column first).
pub fn hmg_from_cells(cells: &[CellStats], omega: Omega, metric: Metric) -> Result<HmgReport> {
    let values: Vec<CellValue> = cells
        .iter()
        .filter(|c| c.metric == metric)
        .map(|c| c.value(omega))
        .collect();
    hmg_from_values(&values, omega, metric)
}

/// [`hmg_from_cells`] over stored cell values; entries for other metrics or
/// statistics are ignored.
pub fn hmg_from_values(values: &[CellValue], omega: Omega, metric: Metric) -> Result<HmgReport> {
    let cells: Vec<&CellValue> = values
        .iter()
        .filter(|c| c.metric == metric && c.omega == omega)
        .collect();
    let hm_cells = cells.iter().filter(|c| c.key.policy == Some(PolicyKind::HM));
    if hm_cells.clone().any(|c| c.key.interaction.is_none()) {
        return Err(SimError::usage(
            "HM cells lack the interaction breakdown; summarize with grouping `policy,difficulty,a`",
        ));
    }
    let interactions: BTreeSet<InteractionKind> = hm_cells.filter_map(|c| c.key.interaction).collect();
    if interactions.is_empty() {
        return Err(SimError::usage(format!("no HM records for metric `{metric}`")));
    }
    let has_baseline = cells
        .iter()
        .any(|c| matches!(c.key.policy, Some(PolicyKind::H | PolicyKind::M)));
    if !has_baseline {
        return Err(SimError::usage(format!(
            "no H or M baseline records for metric `{metric}`"
        )));
    }

    let central_for = |policy: PolicyKind, a: Option<InteractionKind>, d: Option<Difficulty>| {
        central_of(
            cells
                .iter()
                .filter(|c| {
                    c.key.policy == Some(policy)
                        && c.key.difficulty == d
                        && a.is_none_or(|a| c.key.interaction == Some(a))
                })
                .map(|c| c.value),
        )
    };

    let mut report = HmgReport::default();
    for baseline in [PolicyKind::H, PolicyKind::M] {
        for &a in InteractionKind::AUGMENTING.iter().filter(|a| interactions.contains(a)) {
            for d in [
                None,
                Some(Difficulty::Low),
                Some(Difficulty::Med),
                Some(Difficulty::High),
            ] {
                let hm = central_for(PolicyKind::HM, Some(a), d);
                let base = central_for(baseline, None, d);
                match (hm, base) {
                    (Some(hm), Some(base)) => report.entries.push(HmgEntry {
                        omega,
                        metric,
                        baseline,
                        difficulty: d,
                        interaction: a,
                        hm_bar: hm.value,
                        baseline_bar: base.value,
                        gain_pct: hmg(hm.value, base.value),
                    }),
                    (hm, _) => report.diagnostics.push(format!(
                        "{omega}/{metric} HM-{a} vs {baseline}, d={}: missing {} values",
                        difficulty_label(d),
                        if hm.is_none() { "HM" } else { "baseline" }
                    )),
                }
            }
        }
    }
    Ok(report)
}

/// HMG table straight from simulated frames.
pub fn hmg_table(frames: &[MetricFrame], omega: Omega, metric: Metric) -> Result<HmgReport> {
    let mut cells = Vec::new();
    for f in frames {
        cells.extend(frame_cells(f, None, &[metric], Grouping::full())?);
    }
    hmg_from_cells(&cells, omega, metric)
}

/// A `delta_HM` bin. Left-closed; the last bin of a partition is also right-closed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaBin {
    pub lo: f64,
    pub hi: f64,
    pub closed_hi: bool,
}

impl DeltaBin {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && (x < self.hi || (self.closed_hi && x == self.hi))
    }

    pub fn label(&self) -> String {
        format!("[{},{}{}", self.lo, self.hi, if self.closed_hi { "]" } else { ")" })
    }
}

impl fmt::Display for DeltaBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Default breakdown: two bins split at 0.5.
pub const DEFAULT_DELTA_EDGES: [f64; 3] = [0.1, 0.5, 0.9];

pub fn delta_bins(edges: &[f64]) -> Result<Vec<DeltaBin>> {
    if edges.len() < 2 {
        return Err(SimError::usage("need at least two bin edges"));
    }
    if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SimError::usage(format!(
            "bin edges must be finite and strictly ascending, got {edges:?}"
        )));
    }
    let last = edges.len() - 2;
    Ok(edges
        .windows(2)
        .enumerate()
        .map(|(j, w)| DeltaBin {
            lo: w[0],
            hi: w[1],
            closed_hi: j == last,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaBinReport {
    pub bin: DeltaBin,
    pub simulations: usize,
    /// `None` when no simulation in the bin supports the table.
    pub report: Option<HmgReport>,
    pub diagnostic: Option<String>,
}

/// HMG tables restricted to simulations whose `delta_HM` falls in each bin.
pub fn hmg_by_delta_cells(
    cells: &[CellStats],
    omega: Omega,
    metric: Metric,
    edges: &[f64],
) -> Result<Vec<DeltaBinReport>> {
    let values: Vec<CellValue> = cells
        .iter()
        .filter(|c| c.metric == metric)
        .map(|c| c.value(omega))
        .collect();
    hmg_by_delta_values(&values, omega, metric, edges)
}

pub fn hmg_by_delta_values(
    cells: &[CellValue],
    omega: Omega,
    metric: Metric,
    edges: &[f64],
) -> Result<Vec<DeltaBinReport>> {
    let bins = delta_bins(edges)?;
    let mut out = Vec::with_capacity(bins.len());
    for bin in bins {
        let selected: Vec<CellValue> = cells
            .iter()
            .filter(|c| c.delta_hm.is_some_and(|x| bin.contains(x)))
            .cloned()
            .collect();
        let simulations = selected
            .iter()
            .map(|c| c.config_id.as_str())
            .collect::<BTreeSet<_>>()
            .len();
        let (report, diagnostic) = if selected.is_empty() {
            (None, Some(format!("bin {bin}: no simulations")))
        } else {
            match hmg_from_values(&selected, omega, metric) {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(format!("bin {bin}: {e}"))),
            }
        };
        out.push(DeltaBinReport {
            bin,
            simulations,
            report,
            diagnostic,
        });
    }
    Ok(out)
}

/// [`hmg_by_delta_cells`] over frames paired with their `delta_HM`.
pub fn hmg_by_delta(
    frames: &[(&MetricFrame, f64)],
    omega: Omega,
    metric: Metric,
    edges: &[f64],
) -> Result<Vec<DeltaBinReport>> {
    let mut cells = Vec::new();
    for (f, delta) in frames {
        cells.extend(frame_cells(f, Some(*delta), &[metric], Grouping::full())?);
    }
    hmg_by_delta_cells(&cells, omega, metric, edges)
}

/// Expected cost of prediction errors per period:
/// `avg_price * n_sales * cost_fraction * mape`.
pub fn expected_error_cost(avg_price: f64, n_sales: f64, cost_fraction: f64, mape: f64) -> f64 {
    avg_price * n_sales * cost_fraction * mape
}

/// Undiscounted total cost of a skill over `periods` periods.
pub fn skill_cost_total(error_cost_per_period: f64, dev_cost: f64, ops_cost_per_period: f64, periods: f64) -> f64 {
    error_cost_per_period * periods + dev_cost + ops_cost_per_period * periods
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimulationConfig;
    use crate::engine::run_simulation;
    use crate::types::{PerDifficulty, PerPolicy};
    use proptest::prelude::*;

    fn example(n: usize, e: usize, k: usize) -> MetricFrame {
        run_simulation(&SimulationConfig {
            n_firms: n,
            n_epochs: e,
            n_runs: k,
            ..SimulationConfig::example()
        })
        .unwrap()
    }

    #[test]
    fn subset_filters() {
        let f = vec![example(3, 4, 20)];
        assert_eq!(subset(&f, &SubsetKey::all(Metric::Theta)).unwrap().len(), 240);
        let h = subset(&f, &SubsetKey::policy(Metric::U, PolicyKind::H)).unwrap();
        let parts: usize = Difficulty::ALL
            .iter()
            .map(|&d| {
                subset(&f, &SubsetKey::policy(Metric::U, PolicyKind::H).with_difficulty(d))
                    .unwrap()
                    .len()
            })
            .sum();
        assert_eq!(parts, h.len());
        assert!(subset(&f, &SubsetKey::all(Metric::U).with_difficulty(Difficulty::Low)).is_err());
    }

    #[test]
    fn subset_without_hm_is_empty() {
        let f = run_simulation(&SimulationConfig {
            p_policy: PerPolicy::new(1.0, 0.0, 0.0),
            ..SimulationConfig::example()
        })
        .unwrap();
        let key = SubsetKey::policy(Metric::U, PolicyKind::HM)
            .with_difficulty(Difficulty::High)
            .with_interaction(InteractionKind::Superpower);
        assert!(subset(&[f], &key).unwrap().is_empty());
    }

    #[test]
    fn partition_identity() {
        let f = vec![example(2, 5, 30)];
        let mut all = subset(&f, &SubsetKey::all(Metric::V)).unwrap();
        let mut parts = Vec::new();
        for c in PolicyKind::ALL {
            for d in Difficulty::ALL {
                parts.extend(subset(&f, &SubsetKey::policy(Metric::V, c).with_difficulty(d)).unwrap());
            }
        }
        all.sort_by(f64::total_cmp);
        parts.sort_by(f64::total_cmp);
        assert_eq!(all, parts);
    }

    #[test]
    fn per_simulation_counts() {
        let frames: Vec<MetricFrame> = (0..4)
            .map(|s| {
                run_simulation(&SimulationConfig {
                    seed: s,
                    n_runs: 10,
                    p_policy: PerPolicy::new(1.0, 0.0, 0.0),
                    ..SimulationConfig::example()
                })
                .unwrap()
            })
            .collect();
        assert_eq!(
            per_simulation_stats(&frames, &SubsetKey::all(Metric::U))
                .unwrap()
                .entries
                .len(),
            4
        );
        let hm = per_simulation_stats(&frames, &SubsetKey::policy(Metric::U, PolicyKind::HM)).unwrap();
        assert_eq!((hm.entries.len(), hm.skipped), (0, 4));

        let one = per_simulation_stats(&frames[..1], &SubsetKey::all(Metric::U)).unwrap();
        let direct = summarize(&subset(&frames[..1], &SubsetKey::all(Metric::U)).unwrap()).unwrap();
        assert_eq!(one.entries[0].1, direct);
    }

    fn stats(mu: f64, sk: Option<f64>) -> SummaryStats {
        SummaryStats {
            mu,
            sigma: 0.0,
            rho: 0.0,
            iqr: 0.0,
            sk,
        }
    }

    #[test]
    fn central_tendency_examples() {
        let one = [stats(0.4, None)];
        assert_eq!(central_tendency(&one, Omega::Mu).unwrap().value, 0.4);
        let two = [stats(0.1, Some(1.0)), stats(0.3, None)];
        assert!((central_tendency(&two, Omega::Mu).unwrap().value - 0.2).abs() < 1e-15);
        let sk = central_tendency(&two, Omega::Sk).unwrap();
        assert_eq!((sk.value, sk.present, sk.total), (1.0, 1, 2));
        assert!(central_tendency(&one, Omega::Sk).is_none());
    }

    #[test]
    fn hmg_examples() {
        assert!((hmg(0.2, 0.1).unwrap() - 100.0).abs() < 1e-9);
        assert!((hmg(-0.1, -0.2).unwrap() - 50.0).abs() < 1e-9);
        assert_eq!(hmg(0.5, 0.0), None);
        assert_eq!(hmg(0.3, 0.3), Some(0.0));
    }

    proptest! {
        #[test]
        fn hmg_improvement_reads_positive(base in -1.0f64..1.0, step in 1e-6f64..1.0) {
            prop_assume!(base != 0.0);
            let g = hmg(base + step, base).unwrap();
            prop_assert!(g > 0.0);
            let g = hmg(base - step, base).unwrap();
            prop_assert!(g < 0.0);
        }
    }

    #[test]
    fn hmg_table_only_present_interactions() {
        let frames: Vec<MetricFrame> = (0..3)
            .map(|s| {
                run_simulation(&SimulationConfig {
                    seed: s,
                    n_runs: 200,
                    interaction: InteractionKind::Mean,
                    ..SimulationConfig::example()
                })
                .unwrap()
            })
            .collect();
        let report = hmg_table(&frames, Omega::Mu, Metric::Theta).unwrap();
        assert_eq!(report.entries.len(), 2 * 4);
        assert!(report.entries.iter().all(|e| e.interaction == InteractionKind::Mean));
        assert!(report.diagnostics.is_empty());
    }

    #[test]
    fn hmg_table_requires_hm() {
        let f = run_simulation(&SimulationConfig {
            p_policy: PerPolicy::new(0.5, 0.0, 0.5),
            ..SimulationConfig::example()
        })
        .unwrap();
        assert!(hmg_table(&[f], Omega::Mu, Metric::U).is_err());
    }

    #[test]
    fn missing_cells_become_diagnostics() {
        // no High tasks at all
        let f = run_simulation(&SimulationConfig {
            p_difficulty: PerDifficulty::new(0.5, 0.5, 0.0),
            ..SimulationConfig::example()
        })
        .unwrap();
        let report = hmg_table(&[f], Omega::Mu, Metric::U).unwrap();
        assert_eq!(report.entries.len(), 2 * 3);
        assert_eq!(report.diagnostics.len(), 2);
    }

    #[test]
    fn bins() {
        let b = delta_bins(&[0.1, 0.5, 0.9]).unwrap();
        assert!(!b[0].contains(0.5) && b[1].contains(0.5));
        assert!(b[1].contains(0.9) && b[0].contains(0.1));
        assert_eq!(b[0].label(), "[0.1,0.5)");
        assert_eq!(b[1].label(), "[0.5,0.9]");
        assert!(delta_bins(&[0.5, 0.1]).is_err());
        assert!(delta_bins(&[0.5]).is_err());
    }

    #[test]
    fn delta_breakdown() {
        let mk = |seed, delta: f64| {
            let mut cfg = SimulationConfig {
                seed,
                n_runs: 100,
                config_id: format!("s{seed}"),
                ..SimulationConfig::example()
            };
            cfg.econ.delta.hm = delta;
            (run_simulation(&cfg).unwrap(), delta)
        };
        let sims = [mk(1, 0.2), mk(2, 0.3)];
        let pairs: Vec<(&MetricFrame, f64)> = sims.iter().map(|(f, d)| (f, *d)).collect();

        let single = hmg_by_delta(&pairs, Omega::Mu, Metric::U, &[0.1, 0.9]).unwrap();
        let frames: Vec<MetricFrame> = sims.iter().map(|(f, _)| f.clone()).collect();
        assert_eq!(
            single[0].report.as_ref().unwrap(),
            &hmg_table(&frames, Omega::Mu, Metric::U).unwrap()
        );

        let split = hmg_by_delta(&pairs, Omega::Mu, Metric::U, &[0.1, 0.5, 0.9]).unwrap();
        assert_eq!(split[0].simulations, 2);
        assert_eq!(split[1].simulations, 0);
        assert!(split[1].report.is_none());
    }

    #[test]
    fn costs() {
        assert_eq!(expected_error_cost(200.0, 150.0, 0.10, 0.15), 450.0);
        assert_eq!(expected_error_cost(200.0, 150.0, 0.10, 0.25), 750.0);
        assert_eq!(expected_error_cost(123.0, 45.0, 0.3, 0.0), 0.0);
        assert_eq!(skill_cost_total(450.0, 0.0, 0.0, 3.0), 1350.0);
        assert_eq!(skill_cost_total(0.0, 200.0, 0.0, 3.0), 200.0);
        assert_eq!(skill_cost_total(0.0, 50.0, 100.0, 3.0), 350.0);
    }

    #[test]
    fn grouping_parse() {
        assert_eq!(Grouping::parse("policy,difficulty,a").unwrap(), Grouping::full());
        assert!(Grouping::parse("difficulty").is_err());
        assert!(Grouping::parse("policy,region").is_err());
        assert_eq!(Grouping::parse("").unwrap(), Grouping::default());
    }

    #[test]
    fn frame_cells_layout() {
        let f = example(1, 10, 300);
        let cells = frame_cells(
            &f,
            None,
            &[Metric::U],
            Grouping {
                policy: true,
                ..Default::default()
            },
        )
        .unwrap();
        // whole set + one per policy present
        assert_eq!(cells.len(), 4);
        assert_eq!(cells[0].key, CellKey::WHOLE);
        assert_eq!(cells[0].n, 3000);
        assert_eq!(cells.iter().skip(1).map(|c| c.n).sum::<usize>(), 3000);
    }
}
