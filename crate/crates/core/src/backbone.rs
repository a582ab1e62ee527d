//! Backbone selection: column statistics, weighted composite scoring,
//! ranking and the Pareto front over accuracy, robustness and latency.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numerics::{minmax_normalize, summary_stats, SummaryStats};

#[derive(Debug, Clone, PartialEq)]
pub struct BackboneRow {
    pub name: String,
    /// Millions.
    pub parameters_m: f64,
    /// Giga-operations.
    pub flops_g: f64,
    pub feature_time_s: f64,
    pub total_time_s: f64,
    /// Percentages in `[0, 100]`.
    pub in_domain_acc: f64,
    pub ood1_acc: f64,
    pub ood2_acc: f64,
}

impl BackboneRow {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::InvalidRow(String::from("empty model name")));
        }
        for (col, v) in Column::ALL.iter().map(|c| (c, c.get(self))) {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidRow(format!(
                    "{}: {} = {v} must be finite and non-negative",
                    self.name,
                    col.as_str()
                )));
            }
            if col.is_accuracy() && v > 100.0 {
                return Err(Error::InvalidRow(format!(
                    "{}: {} = {v} exceeds 100",
                    self.name,
                    col.as_str()
                )));
            }
        }
        Ok(())
    }

    pub fn mean_ood_acc(&self) -> f64 {
        (self.ood1_acc + self.ood2_acc) / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Column {
    Parameters,
    Flops,
    FeatureTime,
    TotalTime,
    InDomainAcc,
    Ood1Acc,
    Ood2Acc,
}

impl Column {
    pub const ALL: [Column; 7] = [
        Column::Parameters,
        Column::Flops,
        Column::FeatureTime,
        Column::TotalTime,
        Column::InDomainAcc,
        Column::Ood1Acc,
        Column::Ood2Acc,
    ];

    /// Header name used in table files.
    pub fn as_str(self) -> &'static str {
        match self {
            Column::Parameters => "parameters_m",
            Column::Flops => "flops_g",
            Column::FeatureTime => "feature_time_s",
            Column::TotalTime => "total_time_s",
            Column::InDomainAcc => "in_domain_acc",
            Column::Ood1Acc => "ood1_acc",
            Column::Ood2Acc => "ood2_acc",
        }
    }

    pub fn parse(s: &str) -> Option<Column> {
        Column::ALL.into_iter().find(|c| c.as_str() == s)
    }

    pub fn get(self, row: &BackboneRow) -> f64 {
        match self {
            Column::Parameters => row.parameters_m,
            Column::Flops => row.flops_g,
            Column::FeatureTime => row.feature_time_s,
            Column::TotalTime => row.total_time_s,
            Column::InDomainAcc => row.in_domain_acc,
            Column::Ood1Acc => row.ood1_acc,
            Column::Ood2Acc => row.ood2_acc,
        }
    }

    fn is_accuracy(self) -> bool {
        matches!(self, Column::InDomainAcc | Column::Ood1Acc | Column::Ood2Acc)
    }
}

/// Composite weights for accuracy, efficiency and robustness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub accuracy: f64,
    pub efficiency: f64,
    pub robustness: f64,
}

impl Weights {
    pub fn new(accuracy: f64, efficiency: f64, robustness: f64) -> Result<Self> {
        let w = Weights {
            accuracy,
            efficiency,
            robustness,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.accuracy, self.efficiency, self.robustness];
        if parts.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Weights(String::from("each weight must be >= 0")));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Weights(format!("weights sum to {sum}, not 1")));
        }
        Ok(())
    }
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            accuracy: 0.4,
            efficiency: 0.3,
            robustness: 0.3,
        }
    }
}

/// Normalized score components, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Components {
    /// Min-max normalized in-domain accuracy.
    pub accuracy: f64,
    /// One minus min-max normalized total inference time.
    pub efficiency: f64,
    /// Min-max normalized mean of the two OOD accuracies.
    pub robustness: f64,
}

impl Components {
    pub fn score(&self, w: &Weights) -> f64 {
        (w.accuracy * self.accuracy + w.efficiency * self.efficiency + w.robustness * self.robustness)
            .clamp(0.0, 1.0)
    }
}

fn validate_table(rows: &[BackboneRow]) -> Result<()> {
    let mut names = BTreeSet::new();
    for r in rows {
        r.validate()?;
        if !names.insert(r.name.as_str()) {
            return Err(Error::DuplicateId(r.name.clone()));
        }
    }
    Ok(())
}

/// Components for every row, normalized against the whole table.
pub fn table_components(rows: &[BackboneRow]) -> Result<Vec<Components>> {
    let col = |f: fn(&BackboneRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let acc = minmax_normalize(&col(|r| r.in_domain_acc))?;
    let time = minmax_normalize(&col(|r| r.total_time_s))?;
    let ood = minmax_normalize(&col(|r| r.mean_ood_acc()))?;
    Ok(acc
        .into_iter()
        .zip(time)
        .zip(ood)
        .map(|((accuracy, t), robustness)| Components {
            accuracy,
            efficiency: 1.0 - t,
            robustness,
        })
        .collect())
}

/// `W1 * accuracy + W2 * efficiency + W3 * robustness` for `row`, with each
/// component normalized over `table`.
pub fn composite_score(row: &BackboneRow, table: &[BackboneRow], weights: &Weights) -> Result<f64> {
    weights.validate()?;
    validate_table(table)?;
    let pos = table
        .iter()
        .position(|r| r.name == row.name)
        .ok_or_else(|| Error::InvalidRow(format!("{} is not in the table", row.name)))?;
    Ok(table_components(table)?[pos].score(weights))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedTable {
    pub rows: Vec<BackboneRow>,
    pub weights: Weights,
    pub scores: BTreeMap<String, f64>,
    pub components: BTreeMap<String, Components>,
    /// Names by descending score; ties go to fewer parameters, then name.
    pub order: Vec<String>,
}

pub fn rank_models(rows: &[BackboneRow], weights: &Weights) -> Result<RankedTable> {
    if rows.len() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            found: rows.len(),
        });
    }
    weights.validate()?;
    validate_table(rows)?;
    let comps = table_components(rows)?;
    let scores: Vec<f64> = comps.iter().map(|c| c.score(weights)).collect();
    let mut idx: Vec<usize> = (0..rows.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then(rows[a].parameters_m.total_cmp(&rows[b].parameters_m))
            .then_with(|| rows[a].name.cmp(&rows[b].name))
    });
    Ok(RankedTable {
        rows: rows.to_vec(),
        weights: *weights,
        scores: rows
            .iter()
            .zip(&scores)
            .map(|(r, &s)| (r.name.clone(), s))
            .collect(),
        components: rows
            .iter()
            .zip(&comps)
            .map(|(r, &c)| (r.name.clone(), c))
            .collect(),
        order: idx.into_iter().map(|i| rows[i].name.clone()).collect(),
    })
}

/// True when `a` is strictly better than `b` on in-domain accuracy, mean OOD
/// accuracy and total time all at once.
pub fn strictly_dominates(a: &BackboneRow, b: &BackboneRow) -> bool {
    a.in_domain_acc > b.in_domain_acc
        && a.mean_ood_acc() > b.mean_ood_acc()
        && a.total_time_s < b.total_time_s
}

/// Rows that no other row strictly dominates, sorted by name.
pub fn pareto_front(rows: &[BackboneRow]) -> Vec<&BackboneRow> {
    let mut front: Vec<&BackboneRow> = rows
        .iter()
        .filter(|b| !rows.iter().any(|a| strictly_dominates(a, b)))
        .collect();
    front.sort_by(|a, b| a.name.cmp(&b.name));
    front
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnSummary {
    pub column: Column,
    pub stats: SummaryStats,
}

/// Mean and median of every numeric column.
pub fn table_summary(rows: &[BackboneRow]) -> Result<Vec<ColumnSummary>> {
    if rows.is_empty() {
        return Err(Error::TooFewRows { needed: 1, found: 0 });
    }
    Column::ALL
        .iter()
        .map(|&column| {
            let xs: Vec<f64> = rows.iter().map(|r| column.get(r)).collect();
            Ok(ColumnSummary {
                column,
                stats: summary_stats(&xs)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Statistic {
    Mean,
    Median,
}

impl Statistic {
    pub fn as_str(self) -> &'static str {
        match self {
            Statistic::Mean => "mean",
            Statistic::Median => "median",
        }
    }

    pub fn parse(s: &str) -> Option<Statistic> {
        match s {
            "mean" => Some(Statistic::Mean),
            "median" => Some(Statistic::Median),
            _ => None,
        }
    }

    fn of(self, s: &SummaryStats) -> f64 {
        match self {
            Statistic::Mean => s.mean,
            Statistic::Median => s.median,
        }
    }
}

/// An externally published value for one column statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceStat {
    pub column: Column,
    pub statistic: Statistic,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatDelta {
    pub column: Column,
    pub statistic: Statistic,
    pub reference: f64,
    pub recomputed: f64,
    /// `recomputed - reference`.
    pub delta: f64,
    /// Set when `|delta|` exceeds the tolerance.
    pub flagged: bool,
}

/// Half a unit in the second decimal place: the slack a value printed to
/// two decimals is allowed.
pub const REFERENCE_TOLERANCE: f64 = 0.005;

/// Compares recomputed statistics with reference values. Nothing is
/// reconciled; disagreements are returned with `flagged` set.
pub fn compare_summary(
    summary: &[ColumnSummary],
    reference: &[ReferenceStat],
    tolerance: f64,
) -> Vec<StatDelta> {
    reference
        .iter()
        .filter_map(|r| {
            let s = summary.iter().find(|s| s.column == r.column)?;
            let recomputed = r.statistic.of(&s.stats);
            let delta = recomputed - r.value;
            Some(StatDelta {
                column: r.column,
                statistic: r.statistic,
                reference: r.value,
                recomputed,
                delta,
                flagged: delta.abs() > tolerance + 1e-12,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    pub(crate) fn row(name: &str, params: f64, time: f64, acc: f64, ood: f64) -> BackboneRow {
        BackboneRow {
            name: name.into(),
            parameters_m: params,
            flops_g: 1.0,
            feature_time_s: time,
            total_time_s: time,
            in_domain_acc: acc,
            ood1_acc: ood,
            ood2_acc: ood,
        }
    }

    #[test]
    fn weights_validation() {
        assert!(Weights::new(0.4, 0.3, 0.3).is_ok());
        assert!(matches!(Weights::new(0.5, 0.3, 0.3), Err(Error::Weights(_))));
        assert!(matches!(Weights::new(1.2, -0.1, -0.1), Err(Error::Weights(_))));
    }

    #[test]
    fn accuracy_only_weights() {
        let t = vec![
            row("a", 1.0, 10.0, 80.0, 50.0),
            row("b", 1.0, 20.0, 90.0, 60.0),
            row("c", 1.0, 30.0, 100.0, 40.0),
        ];
        let w = Weights::new(1.0, 0.0, 0.0).unwrap();
        assert_eq!(composite_score(&t[0], &t, &w).unwrap(), 0.0);
        assert_eq!(composite_score(&t[1], &t, &w).unwrap(), 0.5);
        assert_eq!(composite_score(&t[2], &t, &w).unwrap(), 1.0);
    }

    #[test]
    fn identical_rows_score_half() {
        let t = vec![row("a", 1.0, 10.0, 80.0, 50.0), row("b", 1.0, 10.0, 80.0, 50.0)];
        let w = Weights::default();
        for r in &t {
            assert!((composite_score(r, &t, &w).unwrap() - 0.5).abs() < 1e-12);
        }
        let ranked = rank_models(&t, &w).unwrap();
        assert_eq!(ranked.order, vec!["a", "b"]);
    }

    #[test]
    fn dominating_row() {
        let t = vec![row("b", 1.0, 20.0, 80.0, 50.0), row("a", 1.0, 10.0, 90.0, 60.0)];
        let w = Weights::new(0.4, 0.3, 0.3).unwrap();
        assert!((composite_score(&t[1], &t, &w).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(composite_score(&t[0], &t, &w).unwrap(), 0.0);
        assert_eq!(rank_models(&t, &w).unwrap().order, vec!["a", "b"]);
        let front: Vec<&str> = pareto_front(&t).iter().map(|r| r.name.as_str()).collect();
        assert_eq!(front, vec!["a"]);
    }

    #[test]
    fn tie_prefers_fewer_parameters() {
        let t = vec![row("a", 5.0, 10.0, 80.0, 50.0), row("b", 2.0, 10.0, 80.0, 50.0)];
        assert_eq!(rank_models(&t, &Weights::default()).unwrap().order, vec!["b", "a"]);
    }

    #[test]
    fn rank_errors() {
        let t = vec![row("a", 1.0, 10.0, 80.0, 50.0)];
        assert_eq!(
            rank_models(&t, &Weights::default()),
            Err(Error::TooFewRows { needed: 2, found: 1 })
        );
        let t = vec![row("a", 1.0, 10.0, 80.0, 50.0), row("a", 2.0, 10.0, 80.0, 50.0)];
        assert_eq!(
            rank_models(&t, &Weights::default()),
            Err(Error::DuplicateId("a".into()))
        );
        let bad = vec![row("a", 1.0, 10.0, 180.0, 50.0), row("b", 1.0, 10.0, 80.0, 50.0)];
        assert!(matches!(rank_models(&bad, &Weights::default()), Err(Error::InvalidRow(_))));
    }

    #[test]
    fn pareto_single_and_partial_dominance() {
        let t = vec![row("x", 1.0, 10.0, 80.0, 50.0)];
        assert_eq!(pareto_front(&t).len(), 1);
        // b is better on accuracy only, so neither is strictly dominated
        let t = vec![row("a", 1.0, 10.0, 80.0, 60.0), row("b", 1.0, 20.0, 90.0, 50.0)];
        assert_eq!(pareto_front(&t).len(), 2);
    }

    #[test]
    fn summary_and_reference_deltas() {
        let t = vec![
            row("a", 1.0, 10.0, 80.0, 50.0),
            row("b", 2.0, 20.0, 90.0, 60.0),
            row("c", 6.0, 30.0, 100.0, 40.0),
        ];
        let s = table_summary(&t).unwrap();
        assert_eq!(s[0].column, Column::Parameters);
        assert_eq!(s[0].stats.mean, 3.0);
        assert_eq!(s[0].stats.median, 2.0);
        let refs = [
            ReferenceStat { column: Column::Parameters, statistic: Statistic::Mean, value: 3.004 },
            ReferenceStat { column: Column::Parameters, statistic: Statistic::Median, value: 2.5 },
        ];
        let d = compare_summary(&s, &refs, REFERENCE_TOLERANCE);
        assert!(!d[0].flagged);
        assert!(d[1].flagged);
        assert_eq!(d[1].delta, -0.5);
    }
}
