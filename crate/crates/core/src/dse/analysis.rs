//! Ranking and summary tables over evaluation records.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::config_space::{SensorConfiguration, SensorTable};
use crate::error::{Error, Result};
use crate::metrics::Metric;

use super::EvaluationRecord;

/// `e·(1 − λ) + λ·i`.
pub fn combined_metric(error: f64, sensor_count: usize, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(error * (1.0 - lambda) + lambda * sensor_count as f64)
}

pub fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::param("lambda", format!("{lambda} is outside [0, 1]")));
    }
    Ok(())
}

/// The 0, 0.05, …, 1 grid.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..=20).map(|k| k as f64 / 20.0).collect()
}

/// Metric value as it enters the combined score (jitter scaled by 0.1).
fn scaled_error(record: &EvaluationRecord, metric: Metric) -> Option<f64> {
    record.report.as_ref().map(|r| metric.value(r) * metric.combined_scale())
}

/// Lower score first, then fewer sensors, then lexicographic ids.
fn by_score(a: (f64, &SensorConfiguration), b: (f64, &SensorConfiguration)) -> Ordering {
    a.0.total_cmp(&b.0).then_with(|| a.1.canonical_cmp(b.1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntry<'a> {
    pub record: &'a EvaluationRecord,
    /// Raw metric value, unscaled.
    pub error: f64,
    pub score: f64,
}

/// Valid records in ascending combined-score order.
pub fn rank(records: &[EvaluationRecord], metric: Metric, lambda: f64) -> Result<Vec<RankedEntry<'_>>> {
    check_lambda(lambda)?;
    let mut out = Vec::new();
    for r in records {
        let (Some(report), Some(scaled)) = (r.report.as_ref(), scaled_error(r, metric)) else {
            continue;
        };
        out.push(RankedEntry {
            record: r,
            error: metric.value(report),
            score: combined_metric(scaled, r.configuration.count(), lambda)?,
        });
    }
    out.sort_by(|a, b| by_score((a.score, &a.record.configuration), (b.score, &b.record.configuration)));
    Ok(out)
}

/// Valid records grouped by sensor count, each group sorted best-first by raw error.
fn grouped(records: &[EvaluationRecord], metric: Metric) -> BTreeMap<usize, Vec<(f64, &EvaluationRecord)>> {
    let mut groups: BTreeMap<usize, Vec<(f64, &EvaluationRecord)>> = BTreeMap::new();
    for r in records {
        if let Some(report) = &r.report {
            groups
                .entry(r.configuration.count())
                .or_default()
                .push((metric.value(report), r));
        }
    }
    for g in groups.values_mut() {
        g.sort_by(|a, b| by_score((a.0, &a.1.configuration), (b.0, &b.1.configuration)));
    }
    groups
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountBest<'a> {
    pub count: usize,
    pub best: Vec<(&'a EvaluationRecord, f64)>,
    pub min_error: f64,
    pub max_error: f64,
}

/// The `k` lowest-error configurations of every sensor count.
pub fn best_per_count(records: &[EvaluationRecord], metric: Metric, k: usize) -> Vec<CountBest<'_>> {
    grouped(records, metric)
        .into_iter()
        .filter_map(|(count, group)| {
            let best: Vec<_> = group.into_iter().take(k).map(|(e, r)| (r, e)).collect();
            let first = best.first()?.1;
            let last = best.last()?.1;
            Some(CountBest {
                count,
                min_error: first,
                max_error: last,
                best,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccurrenceRow {
    /// A single id, or a symmetric pair as `"a, b"`.
    pub label: String,
    pub sensors: Vec<usize>,
    pub best_count: usize,
    pub worst_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccurrenceTable {
    pub rows: Vec<OccurrenceRow>,
    pub best_total: usize,
    pub worst_total: usize,
}

impl OccurrenceTable {
    pub fn row(&self, label: &str) -> Option<&OccurrenceRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

/// Counts, per table row, the configurations in `best` and `worst` that
/// contain it. Symmetric pairs share one row and count once per configuration.
pub fn occurrence_counts(
    table: &SensorTable,
    best: &[SensorConfiguration],
    worst: &[SensorConfiguration],
) -> OccurrenceTable {
    let rows = table
        .entries()
        .iter()
        .filter(|s| s.symmetry_partner.is_none_or(|p| p > s.sensor_id))
        .map(|s| {
            let sensors = match s.symmetry_partner {
                Some(p) => vec![s.sensor_id, p],
                None => vec![s.sensor_id],
            };
            let hits = |set: &[SensorConfiguration]| {
                set.iter()
                    .filter(|c| sensors.iter().any(|&id| c.contains(id)))
                    .count()
            };
            OccurrenceRow {
                label: sensors.iter().map(usize::to_string).collect::<Vec<_>>().join(", "),
                best_count: hits(best),
                worst_count: hits(worst),
                sensors,
            }
        })
        .collect();
    OccurrenceTable {
        rows,
        best_total: best.len(),
        worst_total: worst.len(),
    }
}

/// Best and worst `k` configurations per sensor count. A count with fewer
/// than `2k` configurations is partitioned: worst takes only what best left.
pub fn best_and_worst(
    records: &[EvaluationRecord],
    metric: Metric,
    k: usize,
) -> (Vec<SensorConfiguration>, Vec<SensorConfiguration>) {
    let mut best = Vec::new();
    let mut worst = Vec::new();
    for group in grouped(records, metric).into_values() {
        let m = group.len();
        let nb = k.min(m);
        let nw = k.min(m - nb);
        best.extend(group[..nb].iter().map(|(_, r)| r.configuration.clone()));
        worst.extend(group[m - nw..].iter().map(|(_, r)| r.configuration.clone()));
    }
    (best, worst)
}

pub fn occurrence_analysis(
    records: &[EvaluationRecord],
    table: &SensorTable,
    metric: Metric,
    k: usize,
) -> OccurrenceTable {
    let (best, worst) = best_and_worst(records, metric, k);
    occurrence_counts(table, &best, &worst)
}

/// Records not dominated in (sensor count, error), ordered by count.
pub fn pareto_front(records: &[EvaluationRecord], metric: Metric) -> Vec<(&EvaluationRecord, f64)> {
    let mut pts: Vec<(&EvaluationRecord, f64)> = records
        .iter()
        .filter_map(|r| r.report.as_ref().map(|rep| (r, metric.value(rep))))
        .collect();
    pts.sort_by(|a, b| by_score((a.1, &a.0.configuration), (b.1, &b.0.configuration)));
    pts.sort_by_key(|(r, _)| r.configuration.count());
    // Sweep by count: a point survives if its error is below every error seen
    // at strictly smaller counts, and equal to the best at its own count.
    let mut front = Vec::new();
    let mut best_before = f64::INFINITY;
    let mut i = 0;
    while i < pts.len() {
        let count = pts[i].0.configuration.count();
        let mut j = i;
        while j < pts.len() && pts[j].0.configuration.count() == count {
            j += 1;
        }
        let level_min = pts[i].1;
        if level_min < best_before {
            front.extend(pts[i..j].iter().filter(|p| p.1 == level_min).copied());
            best_before = level_min;
        }
        i = j;
    }
    front
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint<'a> {
    pub lambda: f64,
    pub record: &'a EvaluationRecord,
    pub error: f64,
    pub score: f64,
}

/// Combined score of each count's best configuration across `lambdas`.
pub fn lambda_sweep<'a>(records: &'a [EvaluationRecord], metric: Metric, lambdas: &[f64]) -> Result<Vec<SweepPoint<'a>>> {
    let best = best_per_count(records, metric, 1);
    let mut out = Vec::new();
    for &lambda in lambdas {
        for b in &best {
            let (r, e) = b.best[0];
            out.push(SweepPoint {
                lambda,
                record: r,
                error: e,
                score: combined_metric(e * metric.combined_scale(), b.count, lambda)?,
            });
        }
    }
    Ok(out)
}
